"""Synthetic templates with known ground truth, and a grid-search oracle.

Impressions of a base template are produced the way repeated captures of one
finger differ: a rigid pose change (sampled rotation about the image center
plus a shift), loss of points that leave the frame, a dropped fraction of
genuine minutiae, small positional/directional jitter, and a sprinkling of
spurious minutiae. The exact transform and the surviving correspondence are
recorded so alignment recovery can be checked against truth.

The ground-truth sidecar is a text file next to the MNT file:

    GT 1
    <theta> <a> <b>
    <base_idx> <impression_idx>     one line per surviving genuine minutia

The oracle (`brute_force_align`) minimizes the registration objective by
sweeping rotation on a uniform grid, using the centroid formulas for the
shift at each grid point; it never consults the closed-form rotation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, PlacementFailureError, ZeroTotalWeightError
from .model import (
    AlignmentParams,
    Minutia,
    MinutiaTemplate,
    MinutiaType,
    PairQueue,
    template_xy,
    transform_xy,
    wrap_degrees,
)

DEFAULT_ORACLE_STEP = 0.01


@dataclass(frozen=True)
class SynthParams:
    """Knobs for synthetic template generation. A seed fixes all randomness."""

    n_minutiae: tuple[int, int] = (40, 60)
    width: int = 300
    height: int = 300
    min_spacing: float = 18.0
    rotation_range: tuple[float, float] = (-30.0, 30.0)
    translation_range: tuple[float, float] = (-50.0, 50.0)
    position_jitter: float = 2.0
    direction_jitter: float = 5.0
    drop_fraction: float = 0.2
    spurious_fraction: float = 0.1
    quality_range: tuple[float, float] = (0.5, 1.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_minutiae[0] > self.n_minutiae[1] or self.n_minutiae[0] < 1:
            raise ValueError("n_minutiae range must be well-ordered and >= 1")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image box must be positive")
        if self.rotation_range[0] > self.rotation_range[1]:
            raise ValueError("rotation range must be well-ordered")
        if self.translation_range[0] > self.translation_range[1]:
            raise ValueError("translation range must be well-ordered")
        if not 0.0 <= self.drop_fraction < 1.0:
            raise ValueError("drop_fraction must be in [0, 1)")
        if self.spurious_fraction < 0.0:
            raise ValueError("spurious_fraction must be >= 0")
        if not (0.0 <= self.quality_range[0] <= self.quality_range[1] <= 1.0):
            raise ValueError("quality range must be within [0, 1]")
        if self.position_jitter < 0 or self.direction_jitter < 0:
            raise ValueError("jitter sigmas must be >= 0")


@dataclass(frozen=True)
class GroundTruth:
    """The transform that produced an impression and the surviving
    (base index, impression index) correspondence."""

    transform: AlignmentParams
    correspondence: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        base_seen = {b for b, _ in self.correspondence}
        imp_seen = {i for _, i in self.correspondence}
        if len(base_seen) != len(self.correspondence) or len(imp_seen) != len(
            self.correspondence
        ):
            raise ValueError("ground-truth correspondence must be one-to-one")


def _rng(params: SynthParams, seed) -> np.random.Generator:
    return np.random.default_rng(params.seed if seed is None else seed)


def _sample_minutia(rng, x: float, y: float, params: SynthParams) -> Minutia:
    direction = float(rng.uniform(0.0, 360.0))
    mtype = MinutiaType.ENDING if rng.random() < 0.5 else MinutiaType.BIFURCATION
    quality = float(rng.uniform(*params.quality_range))
    return Minutia(x, y, direction, mtype, quality)


def generate_base(
    params: SynthParams, seed=None, template_id: str = "base"
) -> MinutiaTemplate:
    """Random template with the requested pairwise minimum spacing.

    Raises:
        PlacementFailureError: the box cannot fit the requested count at the
            requested spacing within a bounded number of retries.
    """
    rng = _rng(params, seed)
    lo, hi = params.n_minutiae
    n = int(rng.integers(lo, hi + 1))
    xs: list[float] = []
    ys: list[float] = []
    attempts = 0
    max_attempts = 1000 + 500 * n
    while len(xs) < n:
        if attempts >= max_attempts:
            raise PlacementFailureError(
                f"placed {len(xs)}/{n} minutiae at spacing "
                f"{params.min_spacing} in {params.width}x{params.height}"
            )
        attempts += 1
        x = float(rng.uniform(0.0, params.width))
        y = float(rng.uniform(0.0, params.height))
        if xs:
            d2 = (np.array(xs) - x) ** 2 + (np.array(ys) - y) ** 2
            if d2.min() < params.min_spacing**2:
                continue
        xs.append(x)
        ys.append(y)
    minutiae = tuple(_sample_minutia(rng, xs[i], ys[i], params) for i in range(n))
    return MinutiaTemplate(minutiae, params.width, params.height, template_id)


def generate_impression(
    base: MinutiaTemplate,
    params: SynthParams,
    seed=None,
    template_id: str = "impression",
) -> tuple[MinutiaTemplate, GroundTruth]:
    """Noisy rigid re-capture of a base template plus its ground truth.

    Pipeline order: transform, clip to the box, drop a fraction, jitter,
    append spurious minutiae. Drop and spurious counts are
    floor(fraction * clipped-survivor-count).
    """
    rng = _rng(params, seed)
    theta = float(rng.uniform(*params.rotation_range))
    tx = float(rng.uniform(*params.translation_range))
    ty = float(rng.uniform(*params.translation_range))

    # Rotate about the box center, then express as an origin-form transform.
    cx, cy = base.width / 2.0, base.height / 2.0
    r = math.radians(theta)
    c, s = math.cos(r), math.sin(r)
    a = cx - (cx * c - cy * s) + tx
    b = cy - (cx * s + cy * c) + ty
    transform = AlignmentParams(theta, a, b)

    bx, by = template_xy(base)
    px, py = transform_xy(bx, by, transform)
    inside = (px >= 0) & (px <= base.width) & (py >= 0) & (py <= base.height)
    kept = np.flatnonzero(inside)

    n_drop = int(params.drop_fraction * kept.size)
    if n_drop > 0:
        dropped = set(rng.choice(kept.size, size=n_drop, replace=False).tolist())
        kept = np.array([k for j, k in enumerate(kept) if j not in dropped], dtype=int)

    minutiae: list[Minutia] = []
    correspondence: list[tuple[int, int]] = []
    for new_idx, base_idx in enumerate(kept):
        m = base.minutiae[base_idx]
        x = px[base_idx] + float(rng.normal(0.0, params.position_jitter))
        y = py[base_idx] + float(rng.normal(0.0, params.position_jitter))
        x = min(max(x, 0.0), float(base.width))
        y = min(max(y, 0.0), float(base.height))
        direction = wrap_degrees(
            m.direction + theta + float(rng.normal(0.0, params.direction_jitter))
        )
        minutiae.append(Minutia(x, y, direction, m.mtype, m.quality))
        correspondence.append((int(base_idx), new_idx))

    n_spurious = int(params.spurious_fraction * (kept.size + n_drop))
    for _ in range(n_spurious):
        x = float(rng.uniform(0.0, base.width))
        y = float(rng.uniform(0.0, base.height))
        minutiae.append(_sample_minutia(rng, x, y, params))

    template = MinutiaTemplate(
        tuple(minutiae), base.width, base.height, template_id
    )
    return template, GroundTruth(transform, tuple(correspondence))


def write_ground_truth(gt: GroundTruth) -> str:
    lines = [
        "GT 1",
        f"{gt.transform.theta:.6f} {gt.transform.a:.6f} {gt.transform.b:.6f}",
    ]
    lines.extend(f"{b} {i}" for b, i in gt.correspondence)
    return "\n".join(lines) + "\n"


def parse_ground_truth(text: str) -> GroundTruth:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "GT 1":
        raise FormatError("bad ground-truth header")
    if len(lines) < 2:
        raise FormatError("ground truth missing transform line")
    parts = lines[1].split()
    if len(parts) != 3:
        raise FormatError(f"expected '<theta> <a> <b>', got {lines[1]!r}")
    try:
        theta, a, b = (float(p) for p in parts)
        pairs = tuple(
            (int(ln.split()[0]), int(ln.split()[1])) for ln in lines[2:]
        )
    except (ValueError, IndexError):
        raise FormatError("malformed ground-truth record") from None
    return GroundTruth(AlignmentParams(theta, a, b), pairs)


def _sweep_range(thetas, xc, yc, zc, tc, w, start: int, stop: int, chunk: int):
    """Best (objective, theta) over thetas[start:stop], naive residuals.

    Residuals use the centroid-shift substitution: with the optimal shift at
    a fixed rotation, the pair residual is R(theta) applied to the centered
    query point minus the centered template point. Buffers are reused across
    chunks; numpy releases the GIL on these array ops so ranges can run on
    worker threads.
    """
    size = xc.size
    best_obj = np.inf
    best_theta = 0.0
    rx = np.empty((chunk, size))
    ry = np.empty((chunk, size))
    tmp = np.empty((chunk, size))
    for lo in range(start, stop, chunk):
        th = np.radians(thetas[lo : min(lo + chunk, stop)])
        k = th.size
        c = np.cos(th)[:, None]
        s = np.sin(th)[:, None]
        bx, by, bt = rx[:k], ry[:k], tmp[:k]
        np.multiply(c, xc, out=bx)
        np.multiply(s, yc, out=bt)
        bx -= bt
        bx -= zc
        np.multiply(s, xc, out=by)
        np.multiply(c, yc, out=bt)
        by += bt
        by -= tc
        np.square(bx, out=bx)
        np.square(by, out=by)
        bx += by
        obj = bx @ w
        i = int(obj.argmin())
        if obj[i] < best_obj:
            best_obj = float(obj[i])
            best_theta = float(thetas[lo + i])
    return best_obj, best_theta


def brute_force_align(
    q: PairQueue,
    u: MinutiaTemplate,
    v: MinutiaTemplate,
    grid_step: float = DEFAULT_ORACLE_STEP,
) -> AlignmentParams:
    """Minimize the registration objective by sweeping rotation on a grid.

    For every grid rotation over (-180, 180] the shift comes from the
    centroid formulas (optimal for any fixed rotation), and the objective is
    evaluated directly from the per-pair residuals. Returns the grid
    minimizer; ties go to the smallest rotation.

    Raises:
        ZeroTotalWeightError: the queue's weights sum to zero.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    ux, uy = template_xy(u)
    vx, vy = template_xy(v)
    xi = ux[q.query_idx]
    yi = uy[q.query_idx]
    zk = vx[q.template_idx]
    tk = vy[q.template_idx]
    w = q.weight
    total = float(w.sum())
    if total <= 0.0:
        raise ZeroTotalWeightError("total pair weight is zero")

    xbar = float((w * xi).sum() / total)
    ybar = float((w * yi).sum() / total)
    zbar = float((w * zk).sum() / total)
    tbar = float((w * tk).sum() / total)
    xc = xi - xbar
    yc = yi - ybar
    zc = zk - zbar
    tc = tk - tbar

    count = int(round(360.0 / grid_step))
    thetas = np.arange(1, count + 1) * grid_step - 180.0
    chunk = max(16, int(1_500_000 // max(len(q), 1)))

    workers = min(2, os.cpu_count() or 1)
    if workers > 1 and count >= 4 * chunk:
        split = count // 2
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_sweep_range, thetas, xc, yc, zc, tc, w, 0, split, chunk),
                pool.submit(_sweep_range, thetas, xc, yc, zc, tc, w, split, count, chunk),
            ]
            candidates = [f.result() for f in futures]
    else:
        candidates = [_sweep_range(thetas, xc, yc, zc, tc, w, 0, count, chunk)]

    # Lowest objective wins; on exact ties, the smallest rotation.
    best_obj, best_theta = min(candidates, key=lambda ot: (ot[0], ot[1]))

    r = math.radians(best_theta)
    c1, s1 = math.cos(r), math.sin(r)
    return AlignmentParams(
        best_theta,
        zbar + ybar * s1 - xbar * c1,
        tbar - ybar * c1 - xbar * s1,
    )
