"""Spherical cap discrepancy: exact, Monte Carlo estimate, polar certificate.

For a fixed centre ``w`` the deviation ``count/N - (1 - t)/2`` is scanned
exactly over all thresholds ``t`` by sorting the heights ``<w, p_j>``.  Both
one-sided counts are taken at every height: the closed count realises the
positive deviation, the open count (a cap with ``t`` just above the height)
realises the negative one.  The exact mode maximises this scan over a
finite family of centres that contains an optimal centre for every
combinatorial type of cap (see :func:`candidate_centers`).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import TooFew, TooLarge
from .lambert import NORTH_POLE, Cap, UnitVec3, lambert_forward_array
from .lattice import LatticeConfig, PlanarPointSet, build_point_set
from .planar import Mat2

EXACT_LIMIT = 600
DEGENERATE_TOL = 1e-12
# rows x N floats processed per chunk
CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True, eq=False)
class SpherePointSet:
    points: np.ndarray
    origin: Optional[PlanarPointSet] = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(p) < 1:
            raise TooFew("a sphere point set needs at least one point")
        norms = np.linalg.norm(p, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("all points must be unit vectors (within 1e-12)")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def N(self) -> int:
        return len(self.points)

    @classmethod
    def from_planar(cls, ps: PlanarPointSet) -> "SpherePointSet":
        return cls(lambert_forward_array(ps.points), origin=ps)

    def rotated(self, R: np.ndarray) -> "SpherePointSet":
        return SpherePointSet(self.points @ np.asarray(R, dtype=float).T)


@dataclass(frozen=True)
class DiscrepancyReport:
    value: float
    witness: Cap
    method: str
    points_in_witness: int
    N: int
    details: dict = field(default_factory=dict, compare=False)

    @property
    def scaled(self) -> float:
        """``sqrt(N) * value``."""
        return math.sqrt(self.N) * self.value

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "sqrtN_value": self.scaled,
            "witness": self.witness.to_dict(),
            "method": self.method,
            "points_in_witness": self.points_in_witness,
            "N": self.N,
            "details": dict(self.details),
        }


def _heights(W: np.ndarray, P: np.ndarray) -> np.ndarray:
    # elementwise on purpose: the same bits whether called on one centre or many
    return W[:, 0, None] * P[None, :, 0] + W[:, 1, None] * P[None, :, 1] + W[:, 2, None] * P[None, :, 2]


def cap_count(points: SpherePointSet, cap: Cap) -> int:
    w = np.array([cap.w], dtype=float)
    h = _heights(w, points.points)[0]
    return int(np.count_nonzero(h >= cap.t if cap.closed else h > cap.t))


def _scan(W: np.ndarray, P: np.ndarray):
    """Best deviation per centre with its height, boundary flag and count."""
    N = P.shape[0]
    H = np.sort(_heights(W, P), axis=1)
    j = np.arange(N)
    closed_val = (N - j) / N - 0.5 * (1.0 - H)
    open_val = 0.5 * (1.0 - H) - (N - j - 1) / N
    ci = np.argmax(closed_val, axis=1)
    oi = np.argmax(open_val, axis=1)
    rows = np.arange(len(W))
    cv = closed_val[rows, ci]
    ov = open_val[rows, oi]
    use_closed = cv >= ov
    val = np.where(use_closed, cv, ov)
    t = np.where(use_closed, H[rows, ci], H[rows, oi])
    count = np.where(use_closed, N - ci, N - oi - 1)
    return val, t, use_closed, count


class _Best:
    """Running maximum with lexicographic ``(w, t)`` tie-breaking."""

    def __init__(self):
        self.key = None

    def offer(self, W, val, t, closed, count):
        if len(val) == 0:
            return
        m = val.max()
        rows = np.flatnonzero(val == m)
        cands = [(float(m), tuple(W[r]), float(t[r]), bool(closed[r]), int(count[r])) for r in rows]
        cands.sort(key=lambda c: (c[1], c[2]))
        c = cands[0]
        if self.key is None or c[0] > self.key[0] or (
            c[0] == self.key[0] and (c[1], c[2]) < (self.key[1], self.key[2])
        ):
            self.key = c

    def report(self, method: str, N: int, details: dict) -> DiscrepancyReport:
        val, w, t, closed, count = self.key
        return DiscrepancyReport(val, Cap(UnitVec3(*w), t, closed), method, count, N, details)


def _normalize_rows(V: np.ndarray) -> np.ndarray:
    n = np.sqrt(V[:, 0] ** 2 + V[:, 1] ** 2 + V[:, 2] ** 2)
    ok = n > DEGENERATE_TOL
    return V[ok] / n[ok, None]


def candidate_centers(P: np.ndarray, chunk_rows: int = 1 << 16) -> Iterator[np.ndarray]:
    """Centres of caps pinned by one, two or three points, with both signs.

    A cap maximising ``count/N + t/2`` for a fixed set of enclosed points is
    a smallest enclosing cap.  Its centre is a point itself, the normalised
    midpoint of two boundary points, or the pole of the plane through three
    boundary points (up to sign when the cap exceeds a hemisphere).  The
    negative deviation reduces to the same problem for the complementary
    cap, centred at ``-w``.
    """
    N = len(P)
    yield np.concatenate([P, -P])
    if N >= 2:
        i, j = np.triu_indices(N, 1)
        for s in range(0, len(i), chunk_rows):
            M = _normalize_rows(P[i[s:s + chunk_rows]] + P[j[s:s + chunk_rows]])
            yield np.concatenate([M, -M])
    for a in range(N - 2):
        rest = N - a - 1
        jj, kk = np.triu_indices(rest, 1)
        jj, kk = jj + a + 1, kk + a + 1
        for s in range(0, len(jj), chunk_rows):
            pj, pk = P[jj[s:s + chunk_rows]], P[kk[s:s + chunk_rows]]
            C = _normalize_rows(np.cross(pj - P[a], pk - P[a]))
            yield np.concatenate([C, -C])


def _threads(threads: Optional[int]) -> int:
    if threads is None:
        threads = int(os.environ.get("CAPDISC_THREADS", "1") or 1)
    return max(1, threads)


def _as_points(points) -> SpherePointSet:
    return points if isinstance(points, SpherePointSet) else SpherePointSet(points)


def exact_discrepancy(points, limit: int = EXACT_LIMIT,
                      threads: Optional[int] = None) -> DiscrepancyReport:
    """Exact spherical cap discrepancy for ``N <= limit`` points."""
    pts = _as_points(points)
    N = pts.N
    if N > limit:
        raise TooLarge(f"exact mode is limited to N <= {limit} points (got {N})")
    P = pts.points
    best = _Best()
    chunk_rows = max(1, CHUNK_ELEMENTS // max(N, 1) // 2)
    n_centers = 0

    def work(W):
        return W, _scan(W, P)

    chunks = candidate_centers(P, chunk_rows)
    nthreads = _threads(threads)
    if nthreads == 1:
        results = map(work, chunks)
    else:
        pool = ThreadPoolExecutor(nthreads)
        results = pool.map(work, chunks)
    for W, (val, t, closed, count) in results:
        n_centers += len(W)
        best.offer(W, val, t, closed, count)
    if nthreads != 1:
        pool.shutdown()
    return best.report("exact", N, {"centers": n_centers})


def random_centers(trials: int, seed: int, block: int = 1 << 15) -> Iterator[np.ndarray]:
    """Uniform centres from normalised Gaussians, generated in order."""
    rng = np.random.default_rng(seed)
    done = 0
    while done < trials:
        m = min(block, trials - done)
        G = rng.standard_normal((m, 3))
        yield G / np.sqrt(G[:, 0] ** 2 + G[:, 1] ** 2 + G[:, 2] ** 2)[:, None]
        done += m


def estimate_discrepancy(points, trials: int, seed: int = 0) -> DiscrepancyReport:
    """Lower bound on the discrepancy from ``trials`` random centres.

    Each centre is scanned exactly over all heights, so the only error is the
    choice of centres.  Deterministic per ``seed``; a longer run extends the
    same sequence of centres, so the value never drops as ``trials`` grows.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pts = _as_points(points)
    P = pts.points
    block = max(1, min(1 << 15, CHUNK_ELEMENTS // pts.N))
    best = _Best()
    for W in random_centers(trials, seed, block):
        best.offer(W, *_scan(W, P))
    return best.report("estimate", pts.N, {"trials": trials, "seed": seed})


def standard_lattice_sphere(K: int) -> SpherePointSet:
    """Lambert image of the centred standard lattice set (``N = K^2``)."""
    cfg = LatticeConfig(Mat2.identity(), K, perturbation="cell-center")
    return SpherePointSet.from_planar(build_point_set(cfg))


def polar_certificate(K: int, delta: float = 1e-9,
                      points: Optional[SpherePointSet] = None) -> DiscrepancyReport:
    """Lower bound from the empty cap around the north pole.

    For the centred standard lattice the first ring of points sits at height
    ``1 - 1/K``, so the cap at height ``1 - 1/(2K) + delta`` is empty and its
    measure ``1/(4K) - delta/2`` is a lower bound on the discrepancy.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    pts = points if points is not None else standard_lattice_sphere(K)
    cap = Cap(NORTH_POLE, 1.0 - 1.0 / (2.0 * K) + delta)
    count = cap_count(pts, cap)
    value = abs(count / pts.N - cap.measure)
    return DiscrepancyReport(value, cap, "certificate", count, pts.N, {"K": K, "delta": delta})


def empty_polar_cap(points, delta: float = 1e-9) -> DiscrepancyReport:
    """Lower bound from the largest empty cap centred at the north pole.

    Works for any point set: the cap just above the highest point holds no
    points, so its measure bounds the discrepancy from below.
    """
    pts = _as_points(points)
    t = min(float(pts.points[:, 2].max()) + delta, 1.0)
    cap = Cap(NORTH_POLE, t)
    count = cap_count(pts, cap)
    value = abs(count / pts.N - cap.measure)
    return DiscrepancyReport(value, cap, "certificate", count, pts.N, {"delta": delta})


def separation_distance(points, brute_limit: int = 4000) -> float:
    """Smallest Euclidean distance between two of the points."""
    pts = _as_points(points)
    P = pts.points
    N = len(P)
    if N < 2:
        raise TooFew("separation distance needs at least two points")
    if N > brute_limit:
        from scipy.spatial import cKDTree

        d, _ = cKDTree(P).query(P, k=2)
        return float(d[:, 1].min())
    best = math.inf
    step = max(1, CHUNK_ELEMENTS // N)
    for s in range(0, N, step):
        blk = P[s:s + step]
        D = np.sqrt(np.maximum(
            ((blk[:, None, :] - P[None, :, :]) ** 2).sum(axis=2), 0.0))
        rows = np.arange(len(blk))
        D[rows, s + rows] = np.inf
        best = min(best, float(D.min()))
    return best
