from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from intensity.surface import IntensitySurface, rescale_to_count
from pattern.census import CENSUS_COLUMNS
from pattern.core import MultiTypePattern, PointPattern
from pattern.geometry import RectWindow
from synth.poisson import sample_inhom_poisson
from synth.rng import RngSeed, as_seed
from synth.thomas import sample_thomas

logger = logging.getLogger(__name__)


def habitat_surface(w: RectWindow, mean_count: float, seed: RngSeed | int, nx: int = 64, ny: int = 32) -> IntensitySurface:
    """Smooth log-linear habitat gradient with a random direction, scaled to `mean_count` expected points."""
    rng = as_seed(seed).generator()
    a, b = rng.uniform(-1.0, 1.0, size=2)
    xs = (np.arange(nx) + 0.5) / nx - 0.5
    ys = (np.arange(ny) + 0.5) / ny - 0.5
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return rescale_to_count(IntensitySurface(w, np.exp(a * gx + b * gy)), mean_count)


def synthetic_forest(
    n_species: int,
    clustered_fraction: float,
    w: RectWindow,
    seed: RngSeed | int,
    mean_count: float = 150.0,
    mean_offspring: float = 10.0,
    sigma: float = 2.0,
) -> tuple[MultiTypePattern, list[str]]:
    """
    Multi-species forest: the first round(clustered_fraction * n_species)
    species are Thomas clustered, the rest inhomogeneous Poisson on a habitat
    gradient. Returns the patterns and the codes of the clustered species.
    """
    seed = as_seed(seed)
    n_clustered = int(round(clustered_fraction * n_species))
    kappa = mean_count / (mean_offspring * w.area())
    patterns: dict[str, PointPattern] = {}
    clustered: list[str] = []
    for k in range(n_species):
        code = f"sp{k:03d}"
        if k < n_clustered:
            patterns[code] = sample_thomas(kappa, mean_offspring, sigma, w, seed.spawn(k))
            clustered.append(code)
        else:
            lam = habitat_surface(w, mean_count, seed.spawn(k).spawn(0))
            patterns[code] = sample_inhom_poisson(lam, seed.spawn(k).spawn(1))
    logger.info("synthetic forest: %d species, %d clustered", n_species, n_clustered)
    return MultiTypePattern(w, patterns), clustered


def common_parent_pair(
    parent_intensity: float,
    mean_offspring: float,
    sigma: float,
    w: RectWindow,
    seed: RngSeed | int,
) -> tuple[PointPattern, PointPattern]:
    """Two species whose children share the same parent clusters (positive association)."""
    seed = as_seed(seed)
    rng = seed.generator()
    outer = w.dilate(4 * sigma)
    n_parents = rng.poisson(parent_intensity * outer.area())
    parents = outer.origin + rng.random((n_parents, 2)) * outer.sides
    out = []
    for k in range(2):
        sub = seed.spawn(k).generator()
        centres = np.repeat(parents, sub.poisson(mean_offspring, size=n_parents), axis=0)
        children = centres + sub.normal(scale=sigma, size=centres.shape)
        out.append(PointPattern(children[w.contains(children)] if len(children) else children, w))
    return out[0], out[1]


def synthetic_census(
    latest: MultiTypePattern,
    departed: MultiTypePattern,
    ref_census: int = 1,
    latest_census: int = 8,
) -> pd.DataFrame:
    """
    Two-census records: every tree of `latest` is alive in both censuses,
    every tree of `departed` is alive in the reference census and dead in the
    latest one. Tree ids are unique across species.
    """
    rows = []
    next_id = 1
    for code in sorted(set(latest.species) | set(departed.species)):
        for pattern, final in ((latest.patterns.get(code), "alive"), (departed.patterns.get(code), "dead")):
            if pattern is None:
                continue
            for x, y in pattern.xy:
                tree_id = f"t{next_id:06d}"
                next_id += 1
                rows.append((tree_id, code, float(x), float(y), "alive", ref_census))
                rows.append((tree_id, code, float(x), float(y), final, latest_census))
    df = pd.DataFrame(rows, columns=CENSUS_COLUMNS)
    df["census_id"] = df["census_id"].astype("int64")
    return df.sort_values(["census_id", "tree_id"], kind="mergesort").reset_index(drop=True)
