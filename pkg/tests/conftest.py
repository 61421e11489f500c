"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from minumatch import (
    Minutia,
    MinutiaTemplate,
    MinutiaType,
    PairQueue,
)


def random_template(
    rng: np.random.Generator,
    n: int,
    box: int = 300,
    quality: tuple[float, float] = (0.3, 1.0),
) -> MinutiaTemplate:
    """Uniform random template; no spacing constraint."""
    x = rng.uniform(0, box, n)
    y = rng.uniform(0, box, n)
    d = rng.uniform(0, 360, n)
    minutiae = tuple(
        Minutia(
            float(xi),
            float(yi),
            float(di),
            MinutiaType.ENDING if rng.random() < 0.5 else MinutiaType.BIFURCATION,
            float(rng.uniform(*quality)),
        )
        for xi, yi, di in zip(x, y, d)
    )
    return MinutiaTemplate(minutiae, box, box)


def random_queue(
    rng: np.random.Generator,
    n_lo: int = 10,
    n_hi: int = 60,
    box: int = 300,
):
    """Random templates with a full product queue of weights in (0, 1]."""
    n_u = int(rng.integers(n_lo, n_hi + 1))
    n_v = int(rng.integers(n_lo, n_hi + 1))
    u = random_template(rng, n_u, box)
    v = random_template(rng, n_v, box)
    w = 1.0 - rng.random(n_u * n_v)  # uniform in (0, 1]
    qi, ti = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    return u, v, PairQueue(qi.ravel(), ti.ravel(), w, n_u, n_v)


def rotated_copy(
    u: MinutiaTemplate, theta: float, a: float, b: float
) -> MinutiaTemplate:
    """Rigidly transformed copy of u, boxed to contain the moved points.

    Returns the new template together with the translation actually applied
    (identical to the requested one; the box is grown instead of shifting
    points).
    """
    r = math.radians(theta)
    c, s = math.cos(r), math.sin(r)
    moved = []
    for m in u.minutiae:
        x = m.x * c - m.y * s + a
        y = m.x * s + m.y * c + b
        moved.append((x, y, (m.direction + theta) % 360.0, m.mtype, m.quality))
    xs = [p[0] for p in moved]
    ys = [p[1] for p in moved]
    if min(xs) < 0 or min(ys) < 0:
        raise ValueError("transformed points left the positive quadrant")
    width = int(max(xs)) + 10
    height = int(max(ys)) + 10
    minutiae = tuple(Minutia(x, y, d, t, q) for x, y, d, t, q in moved)
    return MinutiaTemplate(minutiae, width, height, u.id + "-moved")


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
