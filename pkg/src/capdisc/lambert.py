"""Lambert equal-area map between the unit square and the punctured sphere.

The square is ``I^2 = [0,1) x (0,1)``; ``x`` is longitude / 2pi and ``y`` is
``(1 - z) / 2``.  Horizontal lines go to parallels, vertical lines to
meridians.  The module also builds planar preimages of spherical cap
boundaries and estimates the largest (matrix-transformed) preimage length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
from scipy import integrate

from .errors import DegenerateCap, DomainError, PoleError
from .planar import Mat2, Polyline, inverse, polyline_length, transform_polyline

TWO_PI = 2.0 * math.pi
UNIT_TOL = 1e-12
# cap preimages are clipped to delta <= y <= 1 - delta around the poles
POLE_DELTA = 1e-9


class UnitVec3(NamedTuple):
    x: float
    y: float
    z: float

    @classmethod
    def normalized(cls, v) -> "UnitVec3":
        v = np.asarray(v, dtype=float)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return cls(*(float(c) for c in v / n))

    def is_pole(self) -> bool:
        return abs(abs(self.z) - 1.0) <= UNIT_TOL

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


NORTH_POLE = UnitVec3(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Cap:
    """Spherical cap ``{x : <w, x> >= t}`` (``> t`` when ``closed`` is False)."""

    w: UnitVec3
    t: float
    closed: bool = True

    def __post_init__(self):
        w = UnitVec3(*(float(c) for c in self.w))
        if abs(math.sqrt(w.x ** 2 + w.y ** 2 + w.z ** 2) - 1.0) > 1e-9:
            raise DomainError(f"cap center {tuple(w)} is not a unit vector")
        if not -1.0 <= self.t <= 1.0:
            raise DomainError(f"cap height {self.t} outside [-1, 1]")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "t", float(self.t))

    @property
    def measure(self) -> float:
        return 0.5 * (1.0 - self.t)

    def to_dict(self) -> dict:
        return {"w": list(self.w), "t": self.t, "closed": self.closed}


@dataclass(frozen=True)
class CapPreimage:
    cap: Cap
    components: List[Polyline] = field(default_factory=list)

    def length(self, Q: Optional[Mat2] = None) -> float:
        """Total length, of ``Q^-1`` applied to each component when ``Q`` is given."""
        if Q is None:
            return sum(polyline_length(c) for c in self.components)
        Qi = inverse(Q)
        return sum(polyline_length(transform_polyline(Qi, c)) for c in self.components)


def lambert_forward_array(pts) -> np.ndarray:
    """Vectorised forward map for an ``(n, 2)`` array; no domain checks."""
    pts = np.asarray(pts, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    r = 2.0 * np.sqrt(y - y * y)
    return np.stack([r * np.cos(TWO_PI * x), r * np.sin(TWO_PI * x), 1.0 - 2.0 * y], axis=-1)


def lambert_inverse_array(pts) -> np.ndarray:
    """Vectorised inverse map for an ``(n, 3)`` array; longitude taken in [0, 1)."""
    pts = np.asarray(pts, dtype=float)
    phi = np.arctan2(pts[..., 1], pts[..., 0])
    x = phi / TWO_PI
    x = np.where(x < 0.0, x + 1.0, x)
    # x + 1.0 can round up to exactly 1.0 for tiny negative longitudes
    x = np.where(x >= 1.0, 0.0, x)
    return np.stack([x, 0.5 * (1.0 - pts[..., 2])], axis=-1)


def lambert_forward(p) -> UnitVec3:
    x, y = float(p[0]), float(p[1])
    if not (0.0 <= x < 1.0 and 0.0 < y < 1.0):
        raise DomainError(f"point {(x, y)} is outside [0,1) x (0,1)")
    return UnitVec3(*(float(c) for c in lambert_forward_array([x, y])))


def lambert_inverse(s):
    from .planar import Vec2

    s = UnitVec3(*(float(c) for c in s))
    if s.is_pole():
        raise PoleError(f"{tuple(s)} is a pole; the inverse map is undefined there")
    x, y = lambert_inverse_array(np.array(s))
    return Vec2(float(x), float(y))


def rectangle_image_measure(x1: float, x2: float, y1: float, y2: float) -> float:
    """Normalised area of ``L([x1,x2] x [y1,y2])`` from the mapped corners.

    The image is a sector of a spherical band, whose area is
    (longitude span) * (height span) on the unit sphere; dividing by 4 pi
    normalises it.
    """
    lo = lambert_forward_array([x1, y1])
    hi = lambert_forward_array([x2, y2])
    mid = lambert_forward_array([0.5 * (x1 + x2), 0.5 * (y1 + y2)])
    # longitude span measured through the midpoint so spans near 2 pi survive
    phi_lo = math.atan2(lo[1], lo[0])
    phi_mid = math.atan2(mid[1], mid[0])
    phi_hi = math.atan2(hi[1], hi[0])
    span = ((phi_mid - phi_lo) % TWO_PI) + ((phi_hi - phi_mid) % TWO_PI)
    return span * (lo[2] - hi[2]) / (4.0 * math.pi)


def _orthonormal_completion(w: np.ndarray) -> tuple:
    e = np.zeros(3)
    e[int(np.argmin(np.abs(w)))] = 1.0
    u1 = e - np.dot(e, w) * w
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(w, u1)
    return u1, u2


class _CircleParam:
    def __init__(self, cap: Cap):
        self.w = cap.w.as_array()
        self.t = cap.t
        self.r = math.sqrt(max(1.0 - cap.t * cap.t, 0.0))
        self.u1, self.u2 = _orthonormal_completion(self.w)

    def points(self, s: np.ndarray) -> np.ndarray:
        c, sn = np.cos(s), np.sin(s)
        return self.t * self.w + self.r * (c[:, None] * self.u1 + sn[:, None] * self.u2)

    def planar(self, s: np.ndarray) -> np.ndarray:
        return lambert_inverse_array(self.points(s))


def _bisect(f, lo: np.ndarray, hi: np.ndarray, iters: int = 64) -> np.ndarray:
    """Vectorised bisection; ``f(lo)`` is False and ``f(hi)`` is True on entry."""
    lo, hi = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        flag = f(mid)
        hi = np.where(flag, mid, hi)
        lo = np.where(flag, lo, mid)
    return lo, hi


def cap_preimage(cap: Cap, samples_per_component: int = 64,
                 max_refinements: int = 60) -> CapPreimage:
    """Planar preimage of the cap boundary as at most three polylines.

    The boundary circle is sampled uniformly, then refined by parameter
    bisection wherever consecutive planar vertices are further apart than
    ``1 / samples_per_component``.  The curve is cut where it crosses the
    longitude seam (x wraps between 1 and 0) and where it enters the clipped
    pole zones ``y < POLE_DELTA`` or ``y > 1 - POLE_DELTA``; cut points are
    located by bisection so no length is lost at the seam.  Each component is
    declared 7-convex.  Caps too small to leave a pole zone yield no
    components.
    """
    if abs(cap.t) >= 1.0:
        raise DegenerateCap(f"cap height {cap.t} has an empty or point boundary")
    if samples_per_component < 16:
        raise ValueError("samples_per_component must be >= 16")
    h = 1.0 / samples_per_component
    circ = _CircleParam(cap)

    def in_pole(P):
        return (P[:, 1] < POLE_DELTA) | (P[:, 1] > 1.0 - POLE_DELTA)

    s = TWO_PI * np.arange(samples_per_component) / samples_per_component
    for _ in range(max_refinements):
        P = circ.planar(s)
        pole = in_pole(P)
        s_next = np.append(s[1:], s[0] + TWO_PI)
        P_next = np.roll(P, -1, axis=0)
        dx = np.abs(P_next[:, 0] - P[:, 0])
        dist = np.hypot(np.minimum(dx, 1.0 - dx), P_next[:, 1] - P[:, 1])
        refine = (~pole) & (~np.roll(pole, -1)) & (dist > h) & (s_next - s > 1e-12)
        if not refine.any():
            break
        mids = 0.5 * (s[refine] + s_next[refine])
        s = np.sort(np.concatenate([s, np.mod(mids, TWO_PI)]))
    P = circ.planar(s)
    pole = in_pole(P)
    n = len(s)
    if pole.all():
        return CapPreimage(cap, [])

    s_next = np.append(s[1:], s[0] + TWO_PI)
    nxt = np.roll(np.arange(n), -1)
    pole_next = pole[nxt]
    dx_raw = P[nxt, 0] - P[:, 0]
    dx = np.abs(dx_raw)
    wrapped = np.hypot(np.minimum(dx, 1.0 - dx), P[nxt, 1] - P[:, 1])
    live = (~pole) & (~pole_next)
    seam = live & (dx > 0.5) & (wrapped <= h)
    # unresolvable jumps only happen at pole passages
    jump = live & (wrapped > h)
    exit_pole = (~pole) & pole_next
    enter_pole = pole & (~pole_next)

    # seam crossings: 3D y changes sign with 3D x > 0
    seam_idx = np.flatnonzero(seam)
    seam_pts = {}
    if seam_idx.size:
        lo, hi = s[seam_idx], s_next[seam_idx]
        y_lo = circ.points(lo)[:, 1]
        sign_lo = np.sign(y_lo)
        _, root = _bisect(lambda m: np.sign(circ.points(m)[:, 1]) != sign_lo, lo, hi)
        yy = 0.5 * (1.0 - circ.points(root)[:, 2])
        for k, i in enumerate(seam_idx):
            from_right = P[i, 0] > 0.5
            seam_pts[int(i)] = ((1.0 if from_right else 0.0, yy[k]),
                                (0.0 if from_right else 1.0, yy[k]))

    def pole_boundary(idx, leaving):
        # leaving: i is live, i+1 in pole zone; entering: the opposite
        if idx.size == 0:
            return {}
        lo, hi = s[idx], s_next[idx]

        def inside(m):
            return in_pole(circ.planar(m))

        if leaving:
            a, _ = _bisect(inside, lo, hi)
            pts = circ.planar(a)
        else:
            _, b = _bisect(lambda m: ~inside(m), lo, hi)
            pts = circ.planar(b)
        return {int(i): tuple(pts[k]) for k, i in enumerate(idx)}

    exit_pts = pole_boundary(np.flatnonzero(exit_pole), True)
    enter_pts = pole_boundary(np.flatnonzero(enter_pole), False)

    closing = seam | jump | exit_pole
    if not closing.any():
        return CapPreimage(cap, [Polyline(P, closed=True, convexity=7)])

    # walk the cycle from just after a closing break back around to it
    b = int(np.flatnonzero(closing)[0])
    pieces = []
    cur = [seam_pts[b][1]] if b in seam_pts else []
    for step in range(1, n + 1):
        i = (b + step) % n
        if not pole[i]:
            cur.append(tuple(P[i]))
        if closing[i]:
            if i in seam_pts:
                cur.append(seam_pts[i][0])
            elif i in exit_pts:
                cur.append(exit_pts[i])
            pieces.append(cur)
            cur = []
            if i in seam_pts and i != b:
                cur.append(seam_pts[i][1])
        elif i in enter_pts:
            cur = [enter_pts[i]]
    comps = []
    for piece in pieces:
        v = np.array(piece, dtype=float)
        # a sample can sit exactly on the seam or pole cut
        if len(v) > 1:
            keep = np.ones(len(v), dtype=bool)
            keep[1:] = np.any(np.abs(np.diff(v, axis=0)) > 1e-15, axis=1)
            v = v[keep]
        if len(v) >= 2:
            comps.append(Polyline(v, closed=False, convexity=7))
    return CapPreimage(cap, comps)


def polar_cap_length_integrand(theta, eps: float):
    """Arc-length integrand of the doubled preimage half-curve of a near-polar cap.

    For the cap centred at ``(cos eps, 0, sin eps)`` with height 0, the
    preimage half with polar angle ``theta`` in ``(eps, pi - eps)``, scaled by
    two, has speed
    ``sqrt(c^2 / ((1 - cot^2 theta c^2) pi^2 sin^4 theta) + sin^2 theta)`` with
    ``c = cot(pi/2 - eps)``.
    """
    if not 0.0 < eps < math.pi / 2:
        raise DomainError(f"eps={eps} must lie in (0, pi/2)")
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= eps) | (theta >= math.pi - eps)):
        raise DomainError("theta must lie strictly inside (eps, pi - eps)")
    c = 1.0 / math.tan(math.pi / 2 - eps)
    cot = np.cos(theta) / np.sin(theta)
    sn = np.sin(theta)
    val = np.sqrt(c * c / ((1.0 - cot * cot * c * c) * math.pi ** 2 * sn ** 4) + sn * sn)
    return float(val) if val.ndim == 0 else val


def polar_cap_length(eps: float) -> float:
    """Integral of :func:`polar_cap_length_integrand` over ``(eps, pi - eps)``.

    Because the integrand describes the half-curve scaled by two, the value is
    the full preimage length (both halves).  The integrand is symmetric about
    ``pi / 2`` and has an inverse square-root singularity at ``eps``, so we
    integrate ``2 * int_eps^{pi/2}`` adaptively after substituting near ``eps``.
    """
    f = lambda th: polar_cap_length_integrand(th, eps)
    # theta = eps + u^2 absorbs the singularity near eps
    cut = min(eps * 4.0, (eps + math.pi / 2) / 2)
    g = lambda u: 2.0 * u * f(eps + u * u)
    a, _ = integrate.quad(g, 0.0, math.sqrt(cut - eps), limit=400, epsabs=1e-12, epsrel=1e-10)
    # the tail decays like eps / theta over many scales: split geometrically
    knots = [cut]
    while knots[-1] * 4.0 < math.pi / 2:
        knots.append(knots[-1] * 4.0)
    knots.append(math.pi / 2)
    b = sum(integrate.quad(f, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-11)[0]
            for lo, hi in zip(knots, knots[1:]))
    return 2.0 * (a + b)


def polar_family_cap(eps: float) -> Cap:
    """Height-0 cap centred ``eps`` away from the equator toward the north pole."""
    w = UnitVec3(math.sin(math.pi / 2 - eps), 0.0, math.cos(math.pi / 2 - eps))
    return Cap(w, 0.0)


def generalized_spiral(n: int) -> np.ndarray:
    """Generalised spiral points on the sphere (pole to pole), shape ``(n, 3)``."""
    if n < 2:
        return np.array([[0.0, 0.0, 1.0]])[:n]
    k = np.arange(n)
    hgt = -1.0 + 2.0 * k / (n - 1)
    phi = np.zeros(n)
    for i in range(1, n - 1):
        phi[i] = (phi[i - 1] + 3.6 / math.sqrt(n) / math.sqrt(1.0 - hgt[i] ** 2)) % TWO_PI
    r = np.sqrt(np.clip(1.0 - hgt * hgt, 0.0, None))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), hgt])


def nested_spiral_centers(count: int, minimum: int = 8) -> np.ndarray:
    """Union of spirals with ``count, count // 2, ...`` points (each >= ``minimum``).

    Doubling ``count`` yields a superset, which makes grid maxima monotone.
    """
    sets, c = [], count
    while c >= minimum:
        sets.append(generalized_spiral(c))
        c //= 2
    if not sets:
        sets.append(generalized_spiral(minimum))
    return np.concatenate(sets)


POLAR_FAMILY_EPS = tuple(2.0 ** -k for k in range(1, 13))


def clq_estimate(Q: Mat2, center_count: int = 16, height_count: int = 16,
                 samples: int = 64, return_witness: bool = False):
    """Grid lower estimate of the largest ``Q^-1``-transformed cap preimage length.

    Caps searched: nested generalised-spiral centres times heights
    ``-1 + 2k/height_count`` (``k = 1 .. height_count - 1``), plus the
    near-polar height-0 family with ``eps = 2^-k``.  Every grid is nested
    under doubling, so the estimate never decreases when a resolution doubles.
    """
    Qi = inverse(Q)
    if center_count < 8 or height_count < 8:
        raise ValueError("center_count and height_count must be >= 8")
    centers = nested_spiral_centers(center_count)
    heights = -1.0 + 2.0 * np.arange(1, height_count) / height_count
    caps = [Cap(UnitVec3.normalized(w), float(t)) for w in centers for t in heights]
    caps += [polar_family_cap(e) for e in POLAR_FAMILY_EPS]
    best, best_cap = -1.0, None
    for cap in caps:
        pre = cap_preimage(cap, samples)
        val = sum(polyline_length(transform_polyline(Qi, c)) for c in pre.components)
        if val > best:
            best, best_cap = val, cap
    if return_witness:
        return best, best_cap
    return best
