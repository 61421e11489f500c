"""Iterative align-prune-reweight matching loop.

One comparison proceeds as: build the all-pairs queue with initial weights,
then for each threshold in the descending schedule repeatedly (a) solve the
weighted least-squares alignment, (b) drop every pair whose post-alignment
displacement exceeds the threshold and reweight the survivors by how far
under it they sit. A pass that removes nothing advances to the next, tighter
threshold; the loop stops once the queue is no longer larger than the number
of one-to-one pairings the smaller template allows (or the schedule runs
out). Residual many-to-one conflicts are resolved greedily by weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTemplateError, ZeroTotalWeightError
from .model import (
    AlignmentParams,
    MatchConfig,
    MatchResult,
    Minutia,
    MinutiaTemplate,
    PairEntry,
    PairQueue,
    angle_diff,
    template_directions,
    template_xy,
    transform_point,
)
from .registration import _objective, _solve
from .weights import OctantNeighborhood, build_pair_queue


@dataclass(frozen=True)
class IterationRecord:
    """One align-prune pass: threshold used, alignment found, and the
    queue state after pruning."""

    threshold: float
    alignment: AlignmentParams
    removed: int
    queue_len_after: int
    objective_after: float


def pair_displacement(
    mi: Minutia, mk: Minutia, p: AlignmentParams, cfg: MatchConfig
) -> float:
    """Combined post-alignment displacement of a candidate pair.

    c1 scales the squared positional residual (pixels) and c2 the squared
    direction residual (degrees) onto one comparable axis.
    """
    x, y = transform_point(mi, p)
    d_sq = (x - mk.x) ** 2 + (y - mk.y) ** 2
    theta = angle_diff(mi.direction + p.theta, mk.direction)
    return cfg.c1 * d_sq + cfg.c2 * theta * theta


def _displacements(q, ux, uy, ua, vx, vy, va, p: AlignmentParams, cfg: MatchConfig):
    r = math.radians(p.theta)
    c, s = math.cos(r), math.sin(r)
    xi = ux[q.query_idx]
    yi = uy[q.query_idx]
    rx = xi * c - yi * s + p.a - vx[q.template_idx]
    ry = xi * s + yi * c + p.b - vy[q.template_idx]
    ang = np.abs(ua[q.query_idx] + p.theta - va[q.template_idx]) % 360.0
    ang = np.minimum(ang, 360.0 - ang)
    return cfg.c1 * (rx * rx + ry * ry) + cfg.c2 * ang * ang


def _refine(q, ux, uy, ua, vx, vy, va, p, threshold: float, cfg) -> int:
    delta = _displacements(q, ux, uy, ua, vx, vy, va, p, cfg)
    keep = delta <= threshold
    removed = int(q.query_idx.size - keep.sum())
    q.keep(keep)
    q.set_weights(1.0 - delta[keep] / threshold)
    return removed


def refine_once(
    q: PairQueue,
    u: MinutiaTemplate,
    v: MinutiaTemplate,
    p: AlignmentParams,
    threshold: float,
    cfg: MatchConfig,
) -> int:
    """Prune pairs displaced beyond the threshold; reweight the survivors.

    Surviving weights become 1 - displacement/threshold (a pair exactly on
    the threshold survives with weight 0). Returns how many were removed.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    ux, uy = template_xy(u)
    vx, vy = template_xy(v)
    return _refine(
        q, ux, uy, template_directions(u), vx, vy, template_directions(v),
        p, threshold, cfg,
    )


def resolve_one_to_one(q: PairQueue) -> list[PairEntry]:
    """Greedy one-to-one selection by descending weight.

    Ties break toward the lower query index, then the lower template index;
    each query and template index is used at most once.
    """
    order = sorted(
        range(len(q)),
        key=lambda i: (-q.weight[i], q.query_idx[i], q.template_idx[i]),
    )
    used_q: set[int] = set()
    used_t: set[int] = set()
    chosen: list[PairEntry] = []
    for i in order:
        qi = int(q.query_idx[i])
        ti = int(q.template_idx[i])
        if qi in used_q or ti in used_t:
            continue
        used_q.add(qi)
        used_t.add(ti)
        chosen.append(PairEntry(qi, ti, float(q.weight[i])))
    return chosen


def match_score(pairs: list[PairEntry], n_u: int, n_v: int) -> float:
    """Similarity in [0, 1] from a one-to-one pair set.

    (sum of weights)^2 / (n_u * n_v): quadratic in matched mass, so unmatched
    minutiae on either side depress the score symmetrically.
    """
    if n_u <= 0 or n_v <= 0:
        return 0.0
    total = sum(p.weight for p in pairs)
    return min(1.0, max(0.0, total * total / (n_u * n_v)))


def _polish_final(
    pairs: list[PairEntry],
    n_u: int,
    n_v: int,
    ux, uy, ua, vx, vy, va,
    fallback: AlignmentParams,
    cfg: MatchConfig,
    rounds: int = 5,
) -> tuple[AlignmentParams, list[PairEntry]]:
    """Refine alignment and weights on the fixed final pair set.

    Alternates solving and reweighting (at the terminal threshold) without
    removing pairs. The loop's own per-threshold weights stop wherever the
    schedule stopped, which both leaves the reported alignment one step
    stale and normalizes weights against whichever threshold happened to be
    active; re-solving on the matched pairs and re-scoring them against the
    terminal threshold makes results comparable across comparisons.
    """
    if not pairs:
        return fallback, pairs
    w = np.array([p.weight for p in pairs])
    if w.sum() <= 0.0:
        return fallback, pairs
    q = PairQueue(
        [p.query_index for p in pairs],
        [p.template_index for p in pairs],
        w,
        n_u,
        n_v,
    )
    threshold = cfg.thresholds[-1]
    alignment = fallback
    for _ in range(rounds):
        if q.total_weight() <= 0.0:
            break
        alignment, _ = _solve(q, ux, uy, vx, vy, cfg.ill_posed_epsilon)
        delta = _displacements(q, ux, uy, ua, vx, vy, va, alignment, cfg)
        q.set_weights(np.maximum(0.0, 1.0 - delta / threshold))
    return alignment, q.entries


def run_matcher(
    u: MinutiaTemplate,
    v: MinutiaTemplate,
    cfg: MatchConfig | None = None,
    u_neighbors: list[OctantNeighborhood] | None = None,
    v_neighbors: list[OctantNeighborhood] | None = None,
) -> MatchResult:
    """Compare a query template u against a reference template v.

    Degenerate inputs (an empty side, or weights that sum to zero) yield a
    zero-score result rather than an exception. The loop always terminates:
    every pass either removes at least one pair or advances the threshold
    schedule. The reported final_alignment and the matched pairs' weights
    are re-solved on the final pair set (see _polish_final); per-pass
    alignments are in `iterations`.
    """
    if cfg is None:
        cfg = MatchConfig()
    n_u, n_v = len(u), len(v)
    identity = AlignmentParams.identity()
    try:
        q = build_pair_queue(u, v, cfg, u_neighbors, v_neighbors)
    except EmptyTemplateError:
        return MatchResult(0.0, (), identity, (), False)

    ux, uy = template_xy(u)
    vx, vy = template_xy(v)
    ua = template_directions(u)
    va = template_directions(v)

    min_uv = min(n_u, n_v)
    records: list[IterationRecord] = []
    alignment = identity
    try:
        done = False
        for threshold in cfg.thresholds:
            while True:
                alignment, _ = _solve(q, ux, uy, vx, vy, cfg.ill_posed_epsilon)
                removed = _refine(
                    q, ux, uy, ua, vx, vy, va, alignment, threshold, cfg
                )
                if len(q) > 0 and q.total_weight() > 0.0:
                    obj = _objective(q, ux, uy, vx, vy, alignment)
                else:
                    obj = 0.0
                records.append(
                    IterationRecord(threshold, alignment, removed, len(q), obj)
                )
                if removed == 0:
                    break  # threshold no longer discriminates; tighten it
                if len(q) <= min_uv:
                    done = True
                    break
            if done:
                break
    except ZeroTotalWeightError:
        return MatchResult(0.0, (), alignment, tuple(records), False)

    pairs = resolve_one_to_one(q)
    converged = len(q) <= min_uv
    alignment, pairs = _polish_final(
        pairs, n_u, n_v, ux, uy, ua, vx, vy, va, alignment, cfg
    )
    score = match_score(pairs, n_u, n_v)
    return MatchResult(score, tuple(pairs), alignment, tuple(records), converged)
