from __future__ import annotations

import numpy as np

from intensity.surface import IntensitySurface
from pattern.core import PointPattern
from pattern.geometry import RectWindow
from synth.rng import RngSeed, as_seed


def uniform_points(rng: np.random.Generator, n: int, w: RectWindow) -> np.ndarray:
    return w.origin + rng.random((n, 2)) * w.sides


def sample_poisson(intensity: float, w: RectWindow, seed: RngSeed | int) -> PointPattern:
    """Homogeneous Poisson process with `intensity` points per m²."""
    rng = as_seed(seed).generator()
    n = rng.poisson(intensity * w.area()) if intensity > 0 else 0
    return PointPattern(uniform_points(rng, n, w), w)


def sample_inhom_poisson(lam: IntensitySurface, seed: RngSeed | int) -> PointPattern:
    """
    Inhomogeneous Poisson process by thinning: a homogeneous pattern at the
    grid maximum is drawn and each point kept with probability lam(x) / lam_max.
    Bilinear evaluation never exceeds the grid maximum, so this is exact.
    """
    w = lam.window
    lam_max = lam.max()
    if not lam_max > 0:
        return PointPattern.empty(w)
    rng = as_seed(seed).generator()
    n = rng.poisson(lam_max * w.area())
    xy = uniform_points(rng, n, w)
    u = rng.random(n)
    keep = u * lam_max < lam.evaluate(xy) if n else np.zeros(0, dtype=bool)
    return PointPattern(xy[keep], w)
