"""Octant nearest-neighbor features and initial pair weights.

Each minutia gets a local descriptor: in each of eight 45-degree sectors
around it (centered on relative bearings 0, 45, ..., 315), the nearest other
minutia's distance and direction difference. Sector bearings are measured
relative to the reference minutia's own direction, which makes the
descriptor invariant under rigid motion of the whole template: two minutiae
that truly correspond show similar distances and direction differences in
corresponding sectors however the impressions are posed.

Sector boundaries are half-open: a bearing exactly on a boundary belongs to
the next sector, so every bearing falls in exactly one sector. Nearest-
neighbor ties break toward the lower minutia index. A candidate at zero
displacement has no bearing and is skipped (slot distances are strictly
positive).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyTemplateError
from .model import (
    MatchConfig,
    Minutia,
    MinutiaTemplate,
    PairQueue,
    template_qualities,
    template_xy,
)

OCTANT_COUNT = 8
OCTANT_WIDTH = 45.0


@dataclass(frozen=True)
class OctantNeighborhood:
    """Per-octant nearest-neighbor record for one reference minutia.

    distance and angle_diff are length-8 arrays indexed by octant; NaN marks
    an empty slot.
    """

    distance: np.ndarray
    angle_diff: np.ndarray

    def occupied(self) -> np.ndarray:
        return ~np.isnan(self.distance)


def octant_index(bearing_deg: float | np.ndarray):
    """Octant (0-based) containing a bearing; boundaries go to the next octant."""
    shifted = (np.asarray(bearing_deg, dtype=float) + OCTANT_WIDTH / 2.0) % 360.0
    return (shifted // OCTANT_WIDTH).astype(int)


def compute_octant_neighbors(t: MinutiaTemplate) -> list[OctantNeighborhood]:
    """Octant nearest-neighbor descriptors for every minutia of a template."""
    n = len(t)
    if n == 0:
        return []
    x, y = template_xy(t)
    dirs = np.array([m.direction for m in t.minutiae])

    # Pairwise displacement from reference (rows) to candidate (cols).
    dx = x[None, :] - x[:, None]
    dy = y[None, :] - y[:, None]
    dist = np.hypot(dx, dy)
    valid = dist > 0.0
    np.fill_diagonal(valid, False)

    # Bearings relative to each reference minutia's direction.
    bearing = (np.degrees(np.arctan2(dy, dx)) - dirs[:, None]) % 360.0
    octant = octant_index(bearing)

    ad = np.abs(dirs[:, None] - dirs[None, :]) % 360.0
    ad = np.minimum(ad, 360.0 - ad)

    dist_slots = np.full((n, OCTANT_COUNT), np.nan)
    psi_slots = np.full((n, OCTANT_COUNT), np.nan)
    rows = np.arange(n)
    for l in range(OCTANT_COUNT):
        in_octant = valid & (octant == l)
        masked = np.where(in_octant, dist, np.inf)
        nearest = masked.argmin(axis=1)  # first minimum = lowest index on ties
        found = masked[rows, nearest] < np.inf
        dist_slots[found, l] = dist[rows[found], nearest[found]]
        psi_slots[found, l] = ad[rows[found], nearest[found]]

    return [
        OctantNeighborhood(dist_slots[i].copy(), psi_slots[i].copy())
        for i in range(n)
    ]


def s_nn(
    nbr_i: OctantNeighborhood,
    nbr_k: OctantNeighborhood,
    t_d: float,
    t_psi: float,
) -> float:
    """Fraction of corresponding octants whose neighbor data agree.

    An octant corresponds when both neighborhoods have a neighbor there; it
    matches when additionally the distances differ by at most t_d and the
    direction differences by at most t_psi. With no corresponding octants the
    score is the noncommittal 0.5.
    """
    both = nbr_i.occupied() & nbr_k.occupied()
    n_octants = int(both.sum())
    if n_octants == 0:
        return 0.5
    d_ok = np.abs(nbr_i.distance - nbr_k.distance) <= t_d
    psi_ok = np.abs(nbr_i.angle_diff - nbr_k.angle_diff) <= t_psi
    n_matching = int((both & d_ok & psi_ok).sum())
    return n_matching / n_octants


def initial_weight(mi: Minutia, mk: Minutia, s: float) -> float:
    """Initial pairing probability for two minutiae given their neighborhood score.

    Differing types halve the weight rather than excluding the pair, since
    image processing can flip a genuine ending into a bifurcation and back.
    """
    delta = 1.0 if mi.mtype == mk.mtype else 0.5
    return delta * mi.quality * mk.quality * s


def _stack_neighborhoods(nbrs: list[OctantNeighborhood]) -> tuple[np.ndarray, np.ndarray]:
    dist = np.stack([n.distance for n in nbrs])
    psi = np.stack([n.angle_diff for n in nbrs])
    return dist, psi


def _s_nn_matrix(
    nbrs_u: list[OctantNeighborhood],
    nbrs_v: list[OctantNeighborhood],
    t_d: float,
    t_psi: float,
) -> np.ndarray:
    """All-pairs neighborhood similarity, vectorized; equals s_nn entrywise."""
    du, pu = _stack_neighborhoods(nbrs_u)
    dv, pv = _stack_neighborhoods(nbrs_v)
    both = ~np.isnan(du)[:, None, :] & ~np.isnan(dv)[None, :, :]
    with np.errstate(invalid="ignore"):
        d_ok = np.abs(du[:, None, :] - dv[None, :, :]) <= t_d
        psi_ok = np.abs(pu[:, None, :] - pv[None, :, :]) <= t_psi
    n_oct = both.sum(axis=2)
    n_match = (both & d_ok & psi_ok).sum(axis=2)
    return np.where(n_oct > 0, n_match / np.maximum(n_oct, 1), 0.5)


def build_pair_queue(
    u: MinutiaTemplate,
    v: MinutiaTemplate,
    cfg: MatchConfig,
    u_neighbors: list[OctantNeighborhood] | None = None,
    v_neighbors: list[OctantNeighborhood] | None = None,
) -> PairQueue:
    """Queue of all possible pairings between two templates, initially weighted.

    Precomputed neighborhoods may be passed in when a template takes part in
    many comparisons.

    Raises:
        EmptyTemplateError: either template has no minutiae.
    """
    n_u, n_v = len(u), len(v)
    if n_u == 0 or n_v == 0:
        raise EmptyTemplateError("cannot pair against an empty template")
    if u_neighbors is None:
        u_neighbors = compute_octant_neighbors(u)
    if v_neighbors is None:
        v_neighbors = compute_octant_neighbors(v)

    s = _s_nn_matrix(u_neighbors, v_neighbors, cfg.t_d, cfg.t_psi)
    type_u = np.array([m.mtype.value for m in u.minutiae])
    type_v = np.array([m.mtype.value for m in v.minutiae])
    delta = np.where(type_u[:, None] == type_v[None, :], 1.0, 0.5)
    qual = template_qualities(u)[:, None] * template_qualities(v)[None, :]

    w = delta * qual * s
    qi, ti = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    return PairQueue(qi.ravel(), ti.ravel(), w.ravel(), n_u, n_v)
