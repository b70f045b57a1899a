from __future__ import annotations

import numpy as np

from pattern.core import PointPattern
from pattern.geometry import RectWindow
from synth.poisson import uniform_points
from synth.rng import RngSeed, as_seed
from utils.errors import NumericError


def sample_thomas(
    parent_intensity: float,
    mean_offspring: float,
    sigma: float,
    w: RectWindow,
    seed: RngSeed | int,
) -> PointPattern:
    """
    Thomas cluster process: Poisson parents on the window dilated by 4 sigma,
    a Poisson(mean_offspring) number of children per parent displaced by an
    isotropic Gaussian with standard deviation sigma, children clipped to w.
    """
    if not (parent_intensity > 0 and mean_offspring > 0 and sigma > 0):
        raise NumericError(
            f"Thomas parameters must all be positive, got kappa={parent_intensity}, mu={mean_offspring}, sigma={sigma}"
        )
    rng = as_seed(seed).generator()
    outer = w.dilate(4 * sigma)
    parents = uniform_points(rng, rng.poisson(parent_intensity * outer.area()), outer)
    n_children = rng.poisson(mean_offspring, size=len(parents))
    centres = np.repeat(parents, n_children, axis=0)
    children = centres + rng.normal(scale=sigma, size=centres.shape)
    return PointPattern(children[w.contains(children)] if len(children) else children, w)


def expected_thomas_count(parent_intensity: float, mean_offspring: float, w: RectWindow) -> float:
    """Mean number of children in w; stationarity makes it parent_intensity * mean_offspring * |W|."""
    return parent_intensity * mean_offspring * w.area()
