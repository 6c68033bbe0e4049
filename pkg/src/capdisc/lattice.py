"""Scaled lattice tilings of the plane and the point sets they induce.

A cell of the tiling is ``(1/K) * (Q (i + [0,1)^2) + v)`` for an integer
index ``i``.  One point is chosen per cell and the set is intersected with
``I^2 = [0,1) x (0,1)`` (the unit square without its right, top and bottom
sides).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidConfig
from .planar import Mat2, Vec2, check_invertible, det, frobenius, inverse

PERTURBATIONS = ("cell-center", "lattice-point", "uniform-random", "custom-offset")


@dataclass(frozen=True)
class LatticeConfig:
    """Matrix, scale, tiling offset and the rule picking one point per cell.

    ``offset_u`` is the position inside the unit cell (before ``Q``) used by
    the ``custom-offset`` rule; ``seed`` drives ``uniform-random``.
    """

    Q: Mat2
    K: int
    v: Vec2 = Vec2(0.0, 0.0)
    perturbation: str = "cell-center"
    seed: Optional[int] = None
    offset_u: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise InvalidConfig(f"K must be a positive integer, got {self.K!r}")
        if self.perturbation not in PERTURBATIONS:
            raise InvalidConfig(
                f"unknown perturbation {self.perturbation!r}; choose from {PERTURBATIONS}"
            )
        if self.perturbation == "custom-offset":
            if self.offset_u is None:
                raise InvalidConfig("custom-offset needs offset_u")
            if not all(0.0 <= c < 1.0 for c in self.offset_u):
                raise InvalidConfig(f"offset_u must lie in [0,1)^2, got {self.offset_u}")
        if self.perturbation == "uniform-random" and self.seed is None:
            raise InvalidConfig("uniform-random needs a seed")
        check_invertible(self.Q)
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "v", Vec2(float(self.v[0]), float(self.v[1])))

    def to_dict(self) -> dict:
        return {
            "matrix": list(self.Q.entries()),
            "K": self.K,
            "offset": list(self.v),
            "perturbation": self.perturbation,
            "seed": self.seed,
            "offset_u": None if self.offset_u is None else list(self.offset_u),
        }


@dataclass(frozen=True, eq=False)
class PlanarPointSet:
    """Points in ``I^2`` with the integer index of the cell each came from.

    Sets from :func:`build_point_set` hold at most one point per cell.  Sets
    edited by :func:`modified_point_set` carry ``modified=True``; inserted
    points are labelled with the cell they fall in, so indices may repeat.
    """

    points: np.ndarray
    provenance: np.ndarray
    config: Optional[LatticeConfig] = None
    modified: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        prov = np.asarray(self.provenance, dtype=np.int64).reshape(-1, 2)
        if len(pts) != len(prov):
            raise ValueError("points and provenance differ in length")
        pts.setflags(write=False)
        prov.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "provenance", prov)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def N(self) -> int:
        return len(self.points)


def cell_index_array(Q: Mat2, K: int, v, x) -> np.ndarray:
    """Integer cell indices ``floor(K Q^-1 (x - v/K))`` for an ``(n, 2)`` array."""
    Qi = inverse(Q)
    x = np.asarray(x, dtype=float)
    u = Qi.apply(K * x - np.asarray(v, dtype=float))
    return np.floor(u).astype(np.int64)


def cell_index(Q: Mat2, K: int, v, x) -> Tuple[int, int]:
    i = cell_index_array(Q, K, v, np.asarray(x, dtype=float)[None, :])[0]
    return int(i[0]), int(i[1])


def in_unit_square(pts: np.ndarray) -> np.ndarray:
    return (pts[:, 0] >= 0.0) & (pts[:, 0] < 1.0) & (pts[:, 1] > 0.0) & (pts[:, 1] < 1.0)


def _candidate_indices(Q: Mat2, K: int, v) -> np.ndarray:
    """All integer indices whose cell may meet the closed unit square.

    Bounding box of ``Q^-1 (K [0,1]^2 - v)`` widened by one cell on every
    side; a cheap overestimate that is filtered exactly afterwards.
    """
    Qi = inverse(Q)
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float) * K - np.asarray(v)
    u = Qi.apply(corners)
    lo = np.floor(u.min(axis=0)).astype(np.int64) - 1
    hi = np.ceil(u.max(axis=0)).astype(np.int64) + 1
    ii, jj = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    return np.column_stack([ii.ravel(), jj.ravel()])


def _snap_into_cells(Q: Mat2, K: int, v, z: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Nudge points that rounding pushed out of their own cell back inside."""
    inward = Q.apply(np.array([1.0, 1.0])) / K
    step = 4.0 * np.finfo(float).eps / max(np.abs(inward).max(), 1e-300)
    for _ in range(64):
        bad = np.any(cell_index_array(Q, K, v, z) != idx, axis=1)
        if not bad.any():
            return z
        scale = np.maximum(np.abs(z[bad]).max(axis=1, keepdims=True), 1.0)
        z[bad] = z[bad] + inward * step * scale
        # far cells carry larger rounding error, so grow the nudge
        step *= 2.0
    raise RuntimeError("could not place points inside their cells")


def build_point_set(cfg: LatticeConfig) -> PlanarPointSet:
    """One point per cell, kept when it lands in ``I^2``; lexicographic by index."""
    Q, K, v = cfg.Q, cfg.K, np.asarray(cfg.v, dtype=float)
    idx = _candidate_indices(Q, K, v)
    if cfg.perturbation == "cell-center":
        u = np.full(idx.shape, 0.5)
    elif cfg.perturbation == "lattice-point":
        u = np.zeros(idx.shape)
    elif cfg.perturbation == "custom-offset":
        u = np.broadcast_to(np.asarray(cfg.offset_u, dtype=float), idx.shape)
    else:
        rng = np.random.default_rng(cfg.seed)
        u = rng.random(idx.shape)
    z = (Q.apply(idx + u) + v) / K
    z = _snap_into_cells(Q, K, v, z, idx)
    keep = in_unit_square(z)
    return PlanarPointSet(z[keep], idx[keep], cfg)


def count_deviation(ps: PlanarPointSet, Q: Optional[Mat2] = None, K: Optional[int] = None) -> float:
    """``|N - K^2 / |det Q|| / K`` for the set's own (or the given) ``Q`` and ``K``."""
    if Q is None or K is None:
        if ps.config is None:
            raise InvalidConfig("point set has no config; pass Q and K explicitly")
        Q = Q or ps.config.Q
        K = K or ps.config.K
    return abs(ps.N - K * K / abs(det(Q))) / K


def boundary_distance(pts: np.ndarray) -> np.ndarray:
    return np.minimum.reduce([pts[:, 0], 1.0 - pts[:, 0], pts[:, 1], 1.0 - pts[:, 1]])


def modified_point_set(cfg: LatticeConfig) -> PlanarPointSet:
    """Edit the set near the boundary of ``I^2`` so it has ``round(K^2/|det Q|)`` points.

    Surplus points closest to the boundary are removed (ties broken by
    lexicographic point order).  Missing points are inserted equispaced on
    ``y = 1/(2K)`` at ``x = (i + 1/2)/(M - N)``; an insertion that coincides
    with an existing point is shifted right by ``1/(4K(M - N))`` until free.
    """
    base = build_point_set(cfg)
    K = cfg.K
    M = int(round(K * K / abs(det(cfg.Q))))
    pts, prov = base.points.copy(), base.provenance.copy()
    N = len(pts)
    if N > M:
        d = boundary_distance(pts)
        order = np.lexsort((pts[:, 1], pts[:, 0], d))
        drop = np.zeros(N, dtype=bool)
        drop[order[: N - M]] = True
        pts, prov = pts[~drop], prov[~drop]
    elif N < M:
        k = M - N
        nudge = 1.0 / (4.0 * K * k)
        y = 1.0 / (2.0 * K)
        new = []
        occupied = [tuple(p) for p in pts]
        for i in range(k):
            x = (i + 0.5) / k
            while any(abs(x - ox) < 1e-12 and abs(y - oy) < 1e-12 for ox, oy in occupied):
                x += nudge
            new.append((x % 1.0, y))
            occupied.append(new[-1])
        new = np.array(new)
        pts = np.vstack([pts, new])
        prov = np.vstack([prov, cell_index_array(cfg.Q, K, cfg.v, new)])
    order = np.lexsort((prov[:, 1], prov[:, 0]))
    return PlanarPointSet(pts[order], prov[order], cfg, modified=True)
