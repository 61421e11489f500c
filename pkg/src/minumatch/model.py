"""Core domain types and angle/geometry conventions.

Conventions used throughout the package:

* Angles are degrees at every interface; conversion to radians happens only
  inside trigonometric evaluation.
* Minutia directions live in [0, 360); rigid rotations are reported
  normalized to (-180, 180].
* Coordinates are pixels in the image frame (x right, y down), matching the
  stored template values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class MinutiaType(enum.Enum):
    ENDING = "E"
    BIFURCATION = "B"


def wrap_degrees(angle: float) -> float:
    """Wrap an angle to [0, 360)."""
    return float(angle) % 360.0


def normalize_signed_degrees(angle: float) -> float:
    """Wrap an angle to (-180, 180]."""
    a = float(angle) % 360.0
    return a - 360.0 if a > 180.0 else a


def angle_diff(alpha: float, beta: float) -> float:
    """Smallest absolute difference between two directions, in [0, 180]."""
    d = abs(float(alpha) - float(beta)) % 360.0
    return min(d, 360.0 - d)


@dataclass(frozen=True)
class Minutia:
    """One extracted feature point.

    Attributes:
        x, y: position in pixels.
        direction: ridge direction, degrees in [0, 360).
        mtype: ending or bifurcation.
        quality: extractor confidence in [0, 1]; 1.0 when the source
            provides none.
    """

    x: float
    y: float
    direction: float
    mtype: MinutiaType
    quality: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.direction < 360.0:
            raise ValueError(f"direction must be in [0, 360), got {self.direction}")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"quality must be in [0, 1], got {self.quality}")


@dataclass(frozen=True)
class MinutiaTemplate:
    """An ordered set of minutiae plus image metadata; the unit of comparison."""

    minutiae: tuple[Minutia, ...]
    width: int
    height: int
    id: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.minutiae, tuple):
            object.__setattr__(self, "minutiae", tuple(self.minutiae))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image box must have positive dimensions")
        for m in self.minutiae:
            if not (0.0 <= m.x <= self.width and 0.0 <= m.y <= self.height):
                raise ValueError(
                    f"minutia ({m.x}, {m.y}) outside image box "
                    f"{self.width}x{self.height}"
                )

    def __len__(self) -> int:
        return len(self.minutiae)


def template_xy(t: MinutiaTemplate) -> tuple[np.ndarray, np.ndarray]:
    """Positions of a template's minutiae as two float arrays."""
    n = len(t.minutiae)
    x = np.empty(n)
    y = np.empty(n)
    for i, m in enumerate(t.minutiae):
        x[i] = m.x
        y[i] = m.y
    return x, y


def template_directions(t: MinutiaTemplate) -> np.ndarray:
    """Minutia directions as a float array (degrees)."""
    return np.array([m.direction for m in t.minutiae], dtype=float)


def template_qualities(t: MinutiaTemplate) -> np.ndarray:
    return np.array([m.quality for m in t.minutiae], dtype=float)


@dataclass(frozen=True)
class AlignmentParams:
    """Rigid transform applied to the query set: rotate by theta, then shift.

    theta is degrees, normalized to (-180, 180]; a and b are pixel shifts
    along x and y.
    """

    theta: float
    a: float
    b: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_signed_degrees(self.theta))

    @classmethod
    def identity(cls) -> "AlignmentParams":
        return cls(0.0, 0.0, 0.0)

    def inverse(self) -> "AlignmentParams":
        """The rigid transform undoing this one."""
        r = math.radians(-self.theta)
        c, s = math.cos(r), math.sin(r)
        return AlignmentParams(
            -self.theta,
            -(self.a * c - self.b * s),
            -(self.a * s + self.b * c),
        )


def compose_alignments(first: AlignmentParams, second: AlignmentParams) -> AlignmentParams:
    """Rigid transform equal to applying `first`, then `second`."""
    r = math.radians(second.theta)
    c, s = math.cos(r), math.sin(r)
    return AlignmentParams(
        first.theta + second.theta,
        second.a + first.a * c - first.b * s,
        second.b + first.a * s + first.b * c,
    )


def transform_point(m: Minutia, p: AlignmentParams) -> tuple[float, float]:
    """Apply the rigid transform to a minutia position."""
    r = math.radians(p.theta)
    c, s = math.cos(r), math.sin(r)
    return (m.x * c - m.y * s + p.a, m.x * s + m.y * c + p.b)


def transform_xy(x: np.ndarray, y: np.ndarray, p: AlignmentParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized counterpart of transform_point."""
    r = math.radians(p.theta)
    c, s = math.cos(r), math.sin(r)
    return (x * c - y * s + p.a, x * s + y * c + p.b)


@dataclass(frozen=True)
class PairEntry:
    """A candidate (query, template) pairing with its current weight."""

    query_index: int
    template_index: int
    weight: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must be in [0, 1], got {self.weight}")


class PairQueue:
    """The mutable queue of candidate minutia pairings.

    Backed by parallel numpy arrays for the hot loop; `entries` materializes
    PairEntry values on demand. Entries are unique (query, template) pairs
    and every weight stays in [0, 1].
    """

    __slots__ = ("query_idx", "template_idx", "weight", "n_u", "n_v")

    def __init__(self, query_indices, template_indices, weights, n_u: int, n_v: int):
        qi = np.asarray(query_indices, dtype=np.intp).copy()
        ti = np.asarray(template_indices, dtype=np.intp).copy()
        w = np.asarray(weights, dtype=float).copy()
        if not (qi.shape == ti.shape == w.shape) or qi.ndim != 1:
            raise ValueError("queue arrays must be 1-D and equally sized")
        if qi.size:
            if qi.min() < 0 or qi.max() >= n_u or ti.min() < 0 or ti.max() >= n_v:
                raise ValueError("pair index out of range")
            keys = qi * n_v + ti
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate (query, template) pair in queue")
        self._check_weights(w)
        self.query_idx = qi
        self.template_idx = ti
        self.weight = w
        self.n_u = int(n_u)
        self.n_v = int(n_v)

    @staticmethod
    def _check_weights(w: np.ndarray) -> None:
        if w.size and (not np.all(np.isfinite(w)) or w.min() < 0.0 or w.max() > 1.0):
            raise ValueError("pair weights must lie in [0, 1]")

    @classmethod
    def from_entries(cls, entries, n_u: int, n_v: int) -> "PairQueue":
        qi = [e.query_index for e in entries]
        ti = [e.template_index for e in entries]
        w = [e.weight for e in entries]
        return cls(qi, ti, w, n_u, n_v)

    @property
    def entries(self) -> list[PairEntry]:
        return [
            PairEntry(int(q), int(t), float(w))
            for q, t, w in zip(self.query_idx, self.template_idx, self.weight)
        ]

    def __len__(self) -> int:
        return int(self.query_idx.size)

    def total_weight(self) -> float:
        return float(self.weight.sum())

    def keep(self, mask: np.ndarray) -> None:
        """Retain only the entries selected by the boolean mask."""
        self.query_idx = self.query_idx[mask]
        self.template_idx = self.template_idx[mask]
        self.weight = self.weight[mask]

    def set_weights(self, weights: np.ndarray) -> None:
        w = np.asarray(weights, dtype=float)
        if w.shape != self.weight.shape:
            raise ValueError("weight array size mismatch")
        self._check_weights(w)
        self.weight = w.copy()


@dataclass(frozen=True)
class MatchConfig:
    """Tunable parameters of the matcher.

    Attributes:
        t_d: octant distance tolerance, pixels.
        t_psi: octant angle tolerance, degrees.
        thresholds: descending displacement thresholds driving the pruning
            schedule.
        c1: weight of the squared positional residual, 1/pixels^2.
        c2: weight of the squared angular residual, 1/degrees^2.
        octant_count: number of angular sectors for neighbor features
            (fixed at 8).
        ill_posed_epsilon: relative tolerance below which the rotation
            estimate is declared undetermined.
    """

    t_d: float = 10.0
    t_psi: float = 20.0
    thresholds: tuple[float, ...] = (24.0, 20.0, 16.0, 12.0, 8.0, 4.0)
    c1: float = 1.0 / 121.0
    c2: float = 1.0 / 121.0
    octant_count: int = 8
    ill_posed_epsilon: float = 1e-9

    def __post_init__(self) -> None:
        if not isinstance(self.thresholds, tuple):
            object.__setattr__(self, "thresholds", tuple(self.thresholds))
        if self.t_d <= 0 or self.t_psi <= 0:
            raise ValueError("octant tolerances must be positive")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if not self.thresholds:
            raise ValueError("at least one threshold is required")
        if any(t <= 0 for t in self.thresholds):
            raise ValueError("thresholds must be positive")
        if any(
            later >= earlier
            for earlier, later in zip(self.thresholds, self.thresholds[1:])
        ):
            raise ValueError("thresholds must be strictly decreasing")
        if self.octant_count != 8:
            raise ValueError("octant_count is fixed at 8")
        if self.ill_posed_epsilon < 0:
            raise ValueError("ill_posed_epsilon must be non-negative")


@dataclass(frozen=True)
class MatchResult:
    """Outcome of one template comparison.

    matched_pairs is one-to-one (no index reused on either side);
    iterations holds one record per align-prune pass (see
    matcher.IterationRecord).
    """

    score: float
    matched_pairs: tuple[PairEntry, ...]
    final_alignment: AlignmentParams
    iterations: tuple
    converged: bool
