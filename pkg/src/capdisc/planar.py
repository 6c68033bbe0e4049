"""Small planar linear algebra and polyline primitives.

Everything here works on 2x2 matrices and planar polylines only.  Curves are
represented by polylines; smooth curves must be sampled by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import RankError, SingularMatrix

# |det| <= SINGULAR_RTOL * ||Q||_F^2 counts as singular (scale invariant).
SINGULAR_RTOL = 1e-12
# rank 1 iff sigma_2 <= RANK_RTOL * sigma_1
RANK_RTOL = 1e-10


class Vec2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Mat2:
    """Row-major 2x2 matrix ``(a b; c d)``."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, arr) -> "Mat2":
        arr = np.asarray(arr, dtype=float)
        if arr.shape == (4,):
            arr = arr.reshape(2, 2)
        if arr.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
        return cls(float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 0]), float(arr[1, 1]))

    @classmethod
    def rotation(cls, angle: float) -> "Mat2":
        c, s = math.cos(angle), math.sin(angle)
        return cls(c, -s, s, c)

    @classmethod
    def orthogonal_family(cls, x: float) -> "Mat2":
        """The matrix ``(x -1; 1 x)``; ``x`` = golden ratio gives a Fibonacci-like set."""
        return cls(x, -1.0, 1.0, x)

    def to_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def scaled(self, s: float) -> "Mat2":
        return Mat2(s * self.a, s * self.b, s * self.c, s * self.d)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def apply(self, pts) -> np.ndarray:
        """Apply the matrix to an ``(n, 2)`` array (or a single point)."""
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([self.a * x + self.b * y, self.c * x + self.d * y], axis=-1)

    def column_norms(self) -> tuple:
        return (math.hypot(self.a, self.c), math.hypot(self.b, self.d))


def det(Q: Mat2) -> float:
    return Q.a * Q.d - Q.b * Q.c


def frobenius(Q: Mat2) -> float:
    return math.sqrt(Q.a * Q.a + Q.b * Q.b + Q.c * Q.c + Q.d * Q.d)


def is_singular(Q: Mat2) -> bool:
    f = frobenius(Q)
    return abs(det(Q)) <= SINGULAR_RTOL * f * f


def check_invertible(Q: Mat2) -> None:
    if is_singular(Q):
        raise SingularMatrix(
            f"matrix {Q.entries()} is singular (|det| = {abs(det(Q)):.3e})"
        )


def inverse(Q: Mat2) -> Mat2:
    check_invertible(Q)
    D = det(Q)
    return Mat2(Q.d / D, -Q.b / D, -Q.c / D, Q.a / D)


def singular_values(A: Mat2) -> tuple:
    """Closed-form singular values ``(s1, s2)`` with ``s1 >= s2 >= 0``."""
    m = max(abs(A.a), abs(A.b), abs(A.c), abs(A.d))
    if m == 0.0:
        return 0.0, 0.0
    # work on A / m so the squares neither underflow nor overflow
    a, b, c, d = A.a / m, A.b / m, A.c / m, A.d / m
    T = a * a + b * b + c * c + d * d
    D = abs(a * d - b * c)
    disc = math.sqrt(max(T * T - 4.0 * D * D, 0.0))
    s1 = math.sqrt(max((T + disc) / 2.0, 0.0))
    # s1 * s2 = |det| is better conditioned than the minus root
    s2 = D / s1
    return m * s1, m * s2


def rank(A: Mat2) -> int:
    s1, s2 = singular_values(A)
    if s1 == 0.0:
        return 0
    if s2 <= RANK_RTOL * s1:
        return 1
    return 2


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered planar vertices, optionally closed.

    ``segment_marks`` are vertex indices ``t_0 < ... < t_n`` splitting the
    curve into ``n`` convex pieces.  When the decomposition itself is unknown
    but a convexity count is (e.g. cap preimages), pass ``convexity`` instead.
    ``self_intersections`` is the declared number ``m`` of self-crossings.
    """

    vertices: np.ndarray
    closed: bool = False
    segment_marks: Optional[tuple] = None
    self_intersections: int = 0
    convexity: Optional[int] = None

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must have shape (n, 2)")
        if v.shape[0] < 2:
            raise ValueError("a polyline needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.segment_marks is not None:
            marks = tuple(int(i) for i in self.segment_marks)
            last = len(v) if self.closed else len(v) - 1
            if len(marks) < 2 or marks[0] != 0 or marks[-1] != last:
                raise ValueError(
                    f"segment_marks must run from 0 to {last}, got {marks}"
                )
            if any(b <= a for a, b in zip(marks, marks[1:])):
                raise ValueError("segment_marks must be strictly increasing")
            object.__setattr__(self, "segment_marks", marks)
        if self.self_intersections < 0:
            raise ValueError("self_intersections must be nonnegative")

    @property
    def n(self) -> Optional[int]:
        if self.convexity is not None:
            return self.convexity
        if self.segment_marks is not None:
            return len(self.segment_marks) - 1
        return None

    @property
    def m(self) -> int:
        return self.self_intersections

    def segments(self) -> tuple:
        """Segment start and end points as two ``(k, 2)`` arrays."""
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]

    def with_vertices(self, vertices) -> "Polyline":
        return Polyline(
            vertices,
            closed=self.closed,
            segment_marks=self.segment_marks,
            self_intersections=self.self_intersections,
            convexity=self.convexity,
        )


def polyline_length(beta: Polyline) -> float:
    a, b = beta.segments()
    return float(np.sum(np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1])))


def transform_polyline(A: Mat2, beta: Polyline) -> Polyline:
    return beta.with_vertices(A.apply(beta.vertices))


def rank1_projected_length(A: Mat2, beta: Polyline) -> float:
    """Length of ``A beta`` for a rank-1 ``A`` computed from the projected extent.

    Equals the true image length when ``beta`` runs monotonically along the
    direction orthogonal to ``ker A``, and lower-bounds it otherwise.
    """
    r = rank(A)
    if r != 1:
        raise RankError(f"expected a rank-1 matrix, got rank {r}")
    rows = np.array([[A.a, A.b], [A.c, A.d]])
    row = rows[np.argmax(np.hypot(rows[:, 0], rows[:, 1]))]
    # rows of a rank-1 matrix are parallel to the co-kernel direction
    v = row / math.hypot(row[0], row[1])
    Av = A.apply(v)
    proj = beta.vertices @ v
    return float(math.hypot(Av[0], Av[1]) * (proj.max() - proj.min()))


def regular_polygon(n: int, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0),
                    phase: float = 0.0) -> Polyline:
    """Closed ``n``-gon inscribed in a circle; a 1-convex curve."""
    s = phase + 2.0 * np.pi * np.arange(n) / n
    v = np.column_stack([center[0] + radius * np.cos(s), center[1] + radius * np.sin(s)])
    return Polyline(v, closed=True, segment_marks=(0, n))


def segment(p, q) -> Polyline:
    return Polyline(np.array([p, q], dtype=float), segment_marks=(0, 1))


def archimedean_spiral(half_turns: int, samples_per_half_turn: int = 64,
                       a: float = 1.0, b: float = 0.1,
                       center: Sequence[float] = (0.0, 0.0), scale: float = 1.0) -> Polyline:
    """Spiral ``r = a + b*theta`` sampled over ``half_turns`` half-turns.

    Each half-turn is declared as one convex piece.
    """
    k = samples_per_half_turn
    theta = np.linspace(0.0, half_turns * np.pi, half_turns * k + 1)
    r = scale * (a + b * theta)
    v = np.column_stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)])
    marks = tuple(range(0, half_turns * k + 1, k))
    return Polyline(v, segment_marks=marks)
