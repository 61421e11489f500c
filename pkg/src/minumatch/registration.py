"""Closed-form weighted least-squares rigid alignment.

The alignment minimizes the weight-averaged squared distance between the
transformed query minutiae and the template minutiae over all queued pairs.
For a fixed rotation the optimal shift matches the weighted centroids; the
optimal rotation follows from one atan2 of two cross-coupling sums (w1, w4),
the only transcendental call in the solve.

When the weights factor into independent per-side terms, both coupling sums
cancel to zero and the rotation is undetermined. Such instances are flagged
rather than rejected: the solver returns zero rotation plus the
centroid-matching shift so the caller can still prune on displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ZeroTotalWeightError
from .model import (
    AlignmentParams,
    MatchConfig,
    MinutiaTemplate,
    PairQueue,
    template_xy,
)


@dataclass(frozen=True)
class AlignmentDiagnostics:
    """Internals of one solve, exposed for tests and observability.

    w1 and w4 are the rotation coupling sums (pixel^2 scale); centroids are
    the weighted means (x, y) of the query side and (z, t) of the template
    side.
    """

    w1: float
    w4: float
    total_weight: float
    centroids: tuple[float, float, float, float]
    ill_posed: bool


def _gather(q: PairQueue, ux, uy, vx, vy):
    xi = ux[q.query_idx]
    yi = uy[q.query_idx]
    zk = vx[q.template_idx]
    tk = vy[q.template_idx]
    return xi, yi, zk, tk, q.weight


def _centroids(xi, yi, zk, tk, w):
    total = float(w.sum())
    if total <= 0.0:
        raise ZeroTotalWeightError("total pair weight is zero")
    return (
        float((w * xi).sum() / total),
        float((w * yi).sum() / total),
        float((w * zk).sum() / total),
        float((w * tk).sum() / total),
        total,
    )


def weighted_centroids(
    q: PairQueue, u: MinutiaTemplate, v: MinutiaTemplate
) -> tuple[float, float, float, float]:
    """Weight-averaged minutia coordinates (x, y) of u and (z, t) of v.

    Raises:
        ZeroTotalWeightError: the queue's weights sum to zero.
    """
    ux, uy = template_xy(u)
    vx, vy = template_xy(v)
    xbar, ybar, zbar, tbar, _ = _centroids(*_gather(q, ux, uy, vx, vy))
    return xbar, ybar, zbar, tbar


def _coupling(xi, yi, zk, tk, w, zbar, tbar):
    # Template centroids are pre-subtracted in a single pass to limit
    # cancellation error; the query-side centroid terms vanish identically.
    zt = zk - zbar
    tt = tk - tbar
    w1 = float((w * (zt * xi + tt * yi)).sum())
    w4 = float((w * (zt * yi - tt * xi)).sum())
    # Cauchy-Schwarz bound on each |term|, so |w1|, |w4| <= scale always.
    scale = float((w * ((xi * xi + yi * yi) + (zt * zt + tt * tt))).sum() / 2.0)
    return w1, w4, scale


def coupling_terms(
    q: PairQueue, u: MinutiaTemplate, v: MinutiaTemplate
) -> tuple[float, float, float]:
    """Rotation coupling sums (w1, w4) and their natural magnitude scale."""
    ux, uy = template_xy(u)
    vx, vy = template_xy(v)
    xi, yi, zk, tk, w = _gather(q, ux, uy, vx, vy)
    _, _, zbar, tbar, _ = _centroids(xi, yi, zk, tk, w)
    return _coupling(xi, yi, zk, tk, w, zbar, tbar)


def _is_ill_posed(w1: float, w4: float, scale: float, epsilon: float) -> bool:
    if scale <= 0.0:
        return True
    return max(abs(w1), abs(w4)) <= epsilon * scale


def detect_ill_posed(
    q: PairQueue, u: MinutiaTemplate, v: MinutiaTemplate, cfg: MatchConfig
) -> bool:
    """True when the rotation is undetermined for this queue.

    This is the separable-weight condition: relative to the natural scale of
    the coupling sums, both w1 and w4 have cancelled to zero.
    """
    w1, w4, scale = coupling_terms(q, u, v)
    return _is_ill_posed(w1, w4, scale, cfg.ill_posed_epsilon)


def _solve(q: PairQueue, ux, uy, vx, vy, epsilon: float):
    xi, yi, zk, tk, w = _gather(q, ux, uy, vx, vy)
    xbar, ybar, zbar, tbar, total = _centroids(xi, yi, zk, tk, w)
    w1, w4, scale = _coupling(xi, yi, zk, tk, w, zbar, tbar)

    ill = _is_ill_posed(w1, w4, scale, epsilon)
    theta = 0.0 if ill else math.atan2(-w4, w1)
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    a = zbar + ybar * sin_t - xbar * cos_t
    b = tbar - ybar * cos_t - xbar * sin_t

    params = AlignmentParams(math.degrees(theta), a, b)
    diag = AlignmentDiagnostics(w1, w4, total, (xbar, ybar, zbar, tbar), ill)
    return params, diag


def solve_alignment(
    q: PairQueue, u: MinutiaTemplate, v: MinutiaTemplate, cfg: MatchConfig
) -> tuple[AlignmentParams, AlignmentDiagnostics]:
    """Optimal rigid alignment of u onto v under the current pair weights.

    Ill-posed queues yield zero rotation with the centroid-matching shift and
    diagnostics.ill_posed set, instead of an error.

    Raises:
        ZeroTotalWeightError: the queue's weights sum to zero.
    """
    ux, uy = template_xy(u)
    vx, vy = template_xy(v)
    return _solve(q, ux, uy, vx, vy, cfg.ill_posed_epsilon)


def _objective(q: PairQueue, ux, uy, vx, vy, p: AlignmentParams) -> float:
    xi, yi, zk, tk, w = _gather(q, ux, uy, vx, vy)
    total = float(w.sum())
    if total <= 0.0:
        raise ZeroTotalWeightError("total pair weight is zero")
    r = math.radians(p.theta)
    c, s = math.cos(r), math.sin(r)
    rx = xi * c - yi * s + p.a - zk
    ry = xi * s + yi * c + p.b - tk
    return float((w * (rx * rx + ry * ry)).sum() / total)


def objective(
    q: PairQueue, u: MinutiaTemplate, v: MinutiaTemplate, p: AlignmentParams
) -> float:
    """Weight-averaged squared pair distance after transforming u by p.

    Raises:
        ZeroTotalWeightError: the queue's weights sum to zero.
    """
    ux, uy = template_xy(u)
    vx, vy = template_xy(v)
    return _objective(q, ux, uy, vx, vy, p)
