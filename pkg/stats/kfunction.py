from __future__ import annotations

from typing import Literal, Union

import numpy as np

from intensity.surface import IntensitySurface
from pattern.core import PointPattern
from pattern.geometry import RectWindow, translation_weights
from stats._pairs import close_pairs, ordered_bincount
from stats.summary import RGrid, StatKind, SummaryFunction
from utils.errors import DataError, InsufficientPointsError, NumericError

IntensityLike = Union[IntensitySurface, float, np.ndarray]
EdgeMode = Literal["translation", "torus"]


def intensity_at(lam: IntensityLike, p: PointPattern) -> np.ndarray:
    """Intensity values at the points of `p` from a surface, a constant, or precomputed per-point values."""
    if isinstance(lam, IntensitySurface):
        if lam.window != p.window:
            raise DataError("intensity surface and pattern have different windows")
        return lam.evaluate(p.xy) if p.n else np.empty(0)
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        values = np.full(p.n, float(arr))
    elif arr.shape == (p.n,):
        values = arr
    else:
        raise NumericError(f"per-point intensities of shape {arr.shape} do not match {p.n} points")
    if np.any(values <= 0) or not np.isfinite(values).all():
        raise NumericError("intensity must be positive and finite at every data point")
    return values


def k_sum(
    xy_a: np.ndarray,
    lam_a: np.ndarray,
    xy_b: np.ndarray,
    lam_b: np.ndarray,
    window: RectWindow,
    r: RGrid,
    same: bool = False,
    edge: EdgeMode = "translation",
) -> np.ndarray:
    """
    (1/|W|) sum_{x in a} sum_{y in b} w(x, y) 1(||x - y|| <= r) / (lam(x) lam(y))
    at every r of the grid; `same` drops the diagonal of a pattern paired with itself.
    """
    i, j, dx, dy, d = close_pairs(
        xy_a, xy_b, r.r_max, window, periodic=(edge == "torus"), exclude_self=same,
    )
    if edge == "torus":
        weight = np.ones_like(d)
    elif edge == "translation":
        weight = translation_weights(window, dx, dy)
    else:
        raise NumericError(f"unknown edge correction {edge!r}")
    contrib = weight / (lam_a[i] * lam_b[j]) / window.area()
    per_bin = ordered_bincount(r.first_at_least(d), contrib, len(r))
    return np.cumsum(per_bin)


def k_inhom(
    p: PointPattern,
    lam: IntensityLike,
    r: RGrid,
    edge: EdgeMode = "translation",
) -> SummaryFunction:
    """
    Inhomogeneous K-function with translation edge correction.
    A scalar `lam` gives the classical stationary estimator.
    """
    if p.n == 0:
        raise InsufficientPointsError("insufficient points: K needs a nonempty pattern")
    r.check_window(p.window)
    values = intensity_at(lam, p)
    k = k_sum(p.xy, values, p.xy, values, p.window, r, same=True, edge=edge)
    return SummaryFunction(StatKind.K, r, k)


def k_cross_inhom(
    p1: PointPattern,
    p2: PointPattern,
    lam1: IntensityLike,
    lam2: IntensityLike,
    r: RGrid,
    edge: EdgeMode = "translation",
) -> SummaryFunction:
    """Inhomogeneous cross K-function from type-1 points to type-2 points."""
    if p1.n == 0 or p2.n == 0:
        raise InsufficientPointsError("insufficient points: cross K needs two nonempty patterns")
    if p1.window != p2.window:
        raise DataError("cross K needs both patterns in the same window")
    r.check_window(p1.window)
    k = k_sum(p1.xy, intensity_at(lam1, p1), p2.xy, intensity_at(lam2, p2), p1.window, r, edge=edge)
    return SummaryFunction(StatKind.K_CROSS, r, k)
