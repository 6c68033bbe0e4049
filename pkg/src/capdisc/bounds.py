"""Closed-form discrepancy bounds for Lambert images of lattice point sets.

Only leading terms are evaluated.  The main bound carries an ``O(1/N)``
remainder with no explicit constant, so callers comparing against measured
values must add their own documented slack.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .planar import Mat2, check_invertible, det, frobenius, inverse

SQRT2 = math.sqrt(2.0)
# largest preimage length of a cap boundary under the plain Lambert map
CLQ_IDENTITY = 3.0
CLQ_SOURCES = ("analytic-3", "certified-upper", "numeric-estimate")


def theorem_bound(Q: Mat2, N: int, d: float, clq: float) -> float:
    """Leading term ``(d + sqrt(2) clq) sqrt|det Q| / sqrt(N)``."""
    check_invertible(Q)
    if N < 1:
        raise ValueError("N must be >= 1")
    if d < 0 or clq <= 0:
        raise ValueError("need d >= 0 and clq > 0")
    return (d + SQRT2 * clq) * math.sqrt(abs(det(Q))) / math.sqrt(N)


def corollary_bound(Q: Mat2, N: int) -> float:
    """Leading term ``||Q||_F / sqrt|det Q| * (4 + 3 sqrt 2) / sqrt(N)``."""
    check_invertible(Q)
    if N < 1:
        raise ValueError("N must be >= 1")
    return frobenius(Q) / math.sqrt(abs(det(Q))) * (4.0 + 3.0 * SQRT2) / math.sqrt(N)


def d_lemma_leading(Q: Mat2) -> float:
    """K-independent part ``2 sqrt2 (||Q^-1 e1|| + ||Q^-1 e2||)`` of the count-deviation bound."""
    c1, c2 = inverse(Q).column_norms()
    return 2.0 * SQRT2 * (c1 + c2)


def d_lemma_bound(Q: Mat2, K: int, weak: bool = False) -> float:
    """Upper bound on the count deviation ``d^Q(K)``.

    The default is ``2 sqrt2 (||Q^-1 e1|| + ||Q^-1 e2||) + 20/K``: the cells
    meeting the boundary of the unit square are at most
    ``sqrt2 K length(Q^-1 boundary) + 20``.  ``weak=True`` returns
    ``4 ||Q||_F / |det Q| + 20/K``, which always dominates it.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    check_invertible(Q)
    if weak:
        return 4.0 * frobenius(Q) / abs(det(Q)) + 20.0 / K
    return d_lemma_leading(Q) + 20.0 / K


def sK(Q: Mat2, K: int, N: int) -> float:
    """``1/sqrt(|det Q| N) - 1/K``."""
    check_invertible(Q)
    if N < 1:
        raise ValueError("N must be >= 1")
    return 1.0 / math.sqrt(abs(det(Q)) * N) - 1.0 / K


def has_orthogonal_columns(A: Mat2, rtol: float = 1e-12) -> bool:
    c1, c2 = A.column_norms()
    return abs(A.a * A.b + A.c * A.d) <= rtol * c1 * c2


def certified_clq(Q: Mat2) -> float:
    """Certified upper bound on the largest ``Q^-1``-image of a cap preimage.

    ``3 ||Q^-1||_F`` in general, since the Frobenius norm bounds how much
    ``Q^-1`` stretches any curve.  When ``Q^-1`` has orthogonal columns the
    stretch is at most its longer column norm, giving the smaller
    ``3 max(||Q^-1 e1||, ||Q^-1 e2||)``.
    """
    Qi = inverse(Q)
    if has_orthogonal_columns(Qi):
        return CLQ_IDENTITY * max(Qi.column_norms())
    return CLQ_IDENTITY * frobenius(Qi)


def default_clq(Q: Mat2) -> tuple:
    if Q == Mat2.identity():
        return CLQ_IDENTITY, "analytic-3"
    return certified_clq(Q), "certified-upper"


@dataclass(frozen=True)
class BoundReport:
    theorem_leading: float
    corollary_leading: float
    d_value: float
    d_lemma_bound: float
    clq_used: float
    clq_source: str
    s_K: float
    N: int
    K: int
    det: float
    frobenius: float
    d_lemma_bound_weak: float

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(Q: Mat2, K: int, N: int, d: Optional[float] = None,
                 clq: Optional[float] = None, clq_source: Optional[str] = None) -> BoundReport:
    """Evaluate every bound for a realised ``(Q, K, N)``.

    ``d`` defaults to the realised count deviation ``|N - K^2/|det Q|| / K``.
    """
    check_invertible(Q)
    if d is None:
        d = abs(N - K * K / abs(det(Q))) / K
    if clq is None:
        clq, src = default_clq(Q)
        clq_source = clq_source or src
    elif clq_source is None:
        clq_source = "numeric-estimate"
    if clq_source not in CLQ_SOURCES:
        raise ValueError(f"unknown clq source {clq_source!r}")
    return BoundReport(
        theorem_leading=theorem_bound(Q, N, d, clq),
        corollary_leading=corollary_bound(Q, N),
        d_value=d,
        d_lemma_bound=d_lemma_bound(Q, K),
        clq_used=clq,
        clq_source=clq_source,
        s_K=sK(Q, K, N),
        N=N,
        K=K,
        det=det(Q),
        frobenius=frobenius(Q),
        d_lemma_bound_weak=d_lemma_bound(Q, K, weak=True),
    )
