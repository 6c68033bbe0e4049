"""Counting the cells of a scaled lattice tiling that a polyline touches.

Polylines are mapped by ``u = K Q^-1 (x - v/K)`` so that every tiling cell
becomes a half-open unit square ``[p, p + 1)``.  Each segment is then walked
exactly by enumerating its crossings with the integer grid lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MissingConvexityData
from .planar import Mat2, Polyline, inverse, polyline_length, transform_polyline

# crossings closer than this (in segment parameter) are merged into a corner
CORNER_TOL = 1e-12


def _axis_crossings(a: np.ndarray, b: np.ndarray):
    """Segment ids, parameters and grid values where one coordinate hits an integer."""
    da = b - a
    lo = np.ceil(np.minimum(a, b))
    hi = np.floor(np.maximum(a, b))
    cnt = np.where(da != 0.0, np.maximum(hi - lo + 1, 0), 0).astype(np.int64)
    seg = np.repeat(np.arange(len(a)), cnt)
    if seg.size == 0:
        return seg, np.empty(0), np.empty(0)
    first = np.repeat(np.cumsum(cnt) - cnt, cnt)
    k = np.repeat(lo, cnt) + (np.arange(seg.size) - first)
    lam = (k - a[seg]) / da[seg]
    return seg, np.clip(lam, 0.0, 1.0), k


def visited_cells(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unique integer cells met by the segments ``a[i] -> b[i]`` (unit-grid space).

    The cells met are those of the endpoints, of the midpoint of every
    stretch between consecutive crossings, and of grid corners the segment
    passes through exactly.  Crossing points that are not corners always
    belong to a neighbouring stretch under the half-open convention.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    nseg = len(a)
    sx, lx, kx = _axis_crossings(a[:, 0], b[:, 0])
    sy, ly, ky = _axis_crossings(a[:, 1], b[:, 1])
    ends = np.arange(nseg)
    seg = np.concatenate([ends, ends, sx, sy])
    lam = np.concatenate([np.zeros(nseg), np.ones(nseg), lx, ly])
    # axis code: 0 endpoint, 1 x-crossing, 2 y-crossing
    axis = np.concatenate([np.zeros(2 * nseg, np.int8), np.ones(len(sx), np.int8),
                           np.full(len(sy), 2, np.int8)])
    kval = np.concatenate([np.zeros(2 * nseg), kx, ky])
    order = np.lexsort((lam, seg))
    seg, lam, axis, kval = seg[order], lam[order], axis[order], kval[order]

    new_group = np.ones(len(seg), dtype=bool)
    new_group[1:] = (seg[1:] != seg[:-1]) | (lam[1:] - lam[:-1] > CORNER_TOL)
    gid = np.cumsum(new_group) - 1
    ng = gid[-1] + 1
    g_seg = seg[new_group]
    g_lam = lam[new_group]
    d = b - a
    gp = a[g_seg] + g_lam[:, None] * d[g_seg]
    # snap coordinates that sit exactly on a grid line
    xs = axis == 1
    ys = axis == 2
    gp[gid[xs], 0] = kval[xs]
    gp[gid[ys], 1] = kval[ys]
    has_x = np.zeros(ng, bool)
    has_y = np.zeros(ng, bool)
    has_x[gid[xs]] = True
    has_y[gid[ys]] = True
    is_end = np.zeros(ng, bool)
    is_end[gid[axis == 0]] = True
    keep_pt = is_end | (has_x & has_y)
    cells = [np.floor(gp[keep_pt])]
    same = g_seg[1:] == g_seg[:-1]
    if same.any():
        i0 = np.flatnonzero(same)
        mid_lam = 0.5 * (g_lam[i0] + g_lam[i0 + 1])
        s = g_seg[i0]
        cells.append(np.floor(a[s] + mid_lam[:, None] * d[s]))
    allc = np.concatenate(cells).astype(np.int64)
    return np.unique(allc, axis=0)


def to_unit_grid(beta: Polyline, Q: Mat2, K: int, v=(0.0, 0.0)) -> Polyline:
    Qi = inverse(Q)
    shifted = beta.vertices * K - np.asarray(v, dtype=float)
    return beta.with_vertices(Qi.apply(shifted))


def intersection_number(beta: Polyline, Q: Mat2, K: int, v=(0.0, 0.0)) -> int:
    """Number of tiling cells ``(1/K)(Q([0,1)^2 + p) + v)`` met by ``beta``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    u = to_unit_grid(beta, Q, K, v)
    a, b = u.segments()
    return int(len(visited_cells(a, b)))


def lemma_bound(beta: Polyline, Q: Mat2, K: int) -> float:
    """``sqrt(2) K length(Q^-1 beta) + 19 n - m + 1`` for the declared ``(n, m)``."""
    if beta.n is None:
        raise MissingConvexityData("polyline has no declared convexity count n")
    ell = polyline_length(transform_polyline(inverse(Q), beta))
    return math.sqrt(2.0) * K * ell + 19 * beta.n - beta.m + 1


@dataclass
class IntersectionReport:
    count: int
    bound: float
    transformed_length: float
    n: int
    m: int
    resolution: Optional[int] = None
    stable: bool = True

    @property
    def holds(self) -> bool:
        return self.count <= self.bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["holds"] = self.holds
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def intersection_report(beta: Polyline, Q: Mat2, K: int, v=(0.0, 0.0)) -> IntersectionReport:
    ell = polyline_length(transform_polyline(inverse(Q), beta))
    return IntersectionReport(
        count=intersection_number(beta, Q, K, v),
        bound=lemma_bound(beta, Q, K),
        transformed_length=ell,
        n=beta.n,
        m=beta.m,
    )


def curve_report(curve: Callable[[np.ndarray], np.ndarray], n: int, m: int, Q: Mat2, K: int,
                 v=(0.0, 0.0), closed: bool = False, start_depth: int = 6,
                 max_depth: int = 16) -> IntersectionReport:
    """Report for a parametrised curve ``curve(s)``, ``s`` in ``[0, 1]``.

    The curve is sampled at ``2^depth`` intervals with the depth doubled until
    the count repeats.  Undersampling can only miss cells, so ``stable`` is
    False when the count still changed at the last doubling.
    """
    prev = None
    for depth in range(start_depth, max_depth + 1):
        k = 2 ** depth
        # a closed curve repeats no terminal vertex
        s = np.linspace(0.0, 1.0, k, endpoint=False) if closed else np.linspace(0.0, 1.0, k + 1)
        beta = Polyline(curve(s), closed=closed, convexity=n, self_intersections=m)
        rep = intersection_report(beta, Q, K, v)
        rep.resolution = depth
        if prev is not None and rep.count == prev.count:
            return rep
        prev = rep
    prev.stable = False
    return prev
