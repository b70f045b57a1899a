from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from pattern.core import PointPattern
from pattern.geometry import RectWindow, border_distance
from stats._pairs import close_pairs, ordered_bincount
from stats.kfunction import IntensityLike, intensity_at
from stats.summary import GridPoints, RGrid, StatKind, SummaryFunction
from utils.errors import DataError, InsufficientPointsError

logger = logging.getLogger(__name__)

TAU_F = 0.05  # J is reported only where 1 - F exceeds this


def thinning_factors(lam_values: np.ndarray) -> np.ndarray:
    """1 - lam_bar / lam(x) with lam_bar the smallest intensity over the pattern; each factor lies in [0, 1)."""
    if lam_values.size == 0:
        return lam_values
    return 1.0 - lam_values.min() / lam_values


def mean_product(
    centres: np.ndarray,
    others: np.ndarray,
    factors: np.ndarray,
    window: RectWindow,
    r: RGrid,
    same: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Average over centres c in erode(W, r) of prod_{y in others, ||y - c|| <= r} factors[y],
    for every r of the grid (minus sampling). Returns the averages and a mask of
    the r values where at least one centre is left.

    The products are step functions of r that change only at neighbour
    distances, so each change is spread over its r-interval with a difference
    array instead of evaluating every (centre, r) combination.
    """
    n_r = len(r)
    border = border_distance(window, centres)
    # at r = 0 every product is empty by convention
    eligible = _eligible(border, r)
    eroded_ok = 2 * r.r_values < min(window.width, window.height)
    defined = (eligible > 0) & eroded_ok

    i, j, _, _, d = close_pairs(centres, others, r.r_max, window, exclude_self=same)
    totals = eligible.astype(float)
    if i.size:
        # group events by centre in order of increasing distance
        order = np.lexsort((d, i))
        i, j, d = i[order], j[order], d[order]
        f = factors[j]
        after = _running_products(i, f)
        before = np.where(_group_starts(i), 1.0, np.roll(after, 1))
        delta = after - before

        start = np.maximum(r.first_at_least(d), 1)
        stop = r.count_at_most(border[i])
        live = start < stop
        change = ordered_bincount(start[live], delta[live], n_r + 1) - ordered_bincount(stop[live], delta[live], n_r + 1)
        totals = totals + np.cumsum(change)[:n_r]

    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(defined, totals / np.maximum(eligible, 1), np.nan)
    return np.clip(mean, 0.0, 1.0), defined


def _eligible(border: np.ndarray, r: RGrid) -> np.ndarray:
    sorted_border = np.sort(border)
    return sorted_border.size - np.searchsorted(sorted_border, r.r_values, side="left")


def _group_starts(groups: np.ndarray) -> np.ndarray:
    starts = np.ones(groups.size, dtype=bool)
    starts[1:] = groups[1:] != groups[:-1]
    return starts


def _running_products(groups: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cumulative product of f restarting at every new group, exact zeros kept."""
    starts = _group_starts(groups)
    start_idx = np.flatnonzero(starts)
    seg = np.cumsum(starts) - 1

    zero = (f == 0).astype(np.int64)
    zeros_so_far = np.cumsum(zero)
    zeros_so_far = zeros_so_far - (zeros_so_far - zero)[start_idx][seg]

    with np.errstate(divide="ignore"):
        logs = np.where(f > 0, np.log(np.where(f > 0, f, 1.0)), 0.0)
    cum = np.cumsum(logs)
    cum = cum - (cum - logs)[start_idx][seg]
    return np.where(zeros_so_far > 0, 0.0, np.exp(cum))


@dataclass(frozen=True)
class FGJ:
    F: SummaryFunction
    G: SummaryFunction
    J: SummaryFunction


def _one_minus(kind: StatKind, r: RGrid, tail: np.ndarray, defined: np.ndarray) -> SummaryFunction:
    return SummaryFunction(kind, r, 1.0 - tail, defined=defined)


def _ratio(kind: StatKind, r: RGrid, g_tail, g_def, f_tail, f_def, tau_f: float) -> SummaryFunction:
    defined = g_def & f_def & (f_tail > tau_f)
    with np.errstate(invalid="ignore", divide="ignore"):
        j = np.where(defined, g_tail / np.where(defined, f_tail, 1.0), np.nan)
    dropped = int((g_def & f_def).sum() - defined.sum())
    if dropped:
        logger.debug("%s undefined at %d r values where 1 - F <= %.3g", kind.value, dropped, tau_f)
    return SummaryFunction(kind, r, j, defined=defined)


def _check_grid(p: PointPattern, grid: GridPoints) -> None:
    if grid.window != p.window:
        raise DataError("lattice and pattern have different windows")


def f_tail(p: PointPattern, lam: IntensityLike, grid: GridPoints, r: RGrid):
    _check_grid(p, grid)
    factors = thinning_factors(intensity_at(lam, p)) if p.n else np.empty(0)
    return mean_product(grid.xy, p.xy, factors, p.window, r)


def g_tail(p: PointPattern, lam: IntensityLike, r: RGrid):
    factors = thinning_factors(intensity_at(lam, p)) if p.n else np.empty(0)
    return mean_product(p.xy, p.xy, factors, p.window, r, same=True)


def f_inhom(p: PointPattern, lam: IntensityLike, grid: GridPoints, r: RGrid) -> SummaryFunction:
    """Inhomogeneous empty-space function on a test lattice, minus-sampling border correction."""
    r.check_window(p.window)
    tail, defined = f_tail(p, lam, grid, r)
    return _one_minus(StatKind.F, r, tail, defined)


def g_inhom(p: PointPattern, lam: IntensityLike, r: RGrid) -> SummaryFunction:
    """Inhomogeneous nearest-neighbour distance function, minus-sampling border correction."""
    r.check_window(p.window)
    tail, defined = g_tail(p, lam, r)
    return _one_minus(StatKind.G, r, tail, defined)


def fgj_inhom(p: PointPattern, lam: IntensityLike, grid: GridPoints, r: RGrid, tau_f: float = TAU_F) -> FGJ:
    r.check_window(p.window)
    ft, fd = f_tail(p, lam, grid, r)
    gt, gd = g_tail(p, lam, r)
    return FGJ(
        F=_one_minus(StatKind.F, r, ft, fd),
        G=_one_minus(StatKind.G, r, gt, gd),
        J=_ratio(StatKind.J, r, gt, gd, ft, fd, tau_f),
    )


def j_inhom(p: PointPattern, lam: IntensityLike, grid: GridPoints, r: RGrid, tau_f: float = TAU_F) -> SummaryFunction:
    """J = (1 - G) / (1 - F), reported where 1 - F > tau_f."""
    return fgj_inhom(p, lam, grid, r, tau_f).J


def g_cross_tail(xy1: np.ndarray, p2: PointPattern, lam2_values: np.ndarray, r: RGrid):
    factors = thinning_factors(lam2_values)
    return mean_product(xy1, p2.xy, factors, p2.window, r)


def j_cross_inhom(
    p1: PointPattern,
    p2: PointPattern,
    lam2: IntensityLike,
    grid: GridPoints,
    r: RGrid,
    tau_f: float = TAU_F,
) -> SummaryFunction:
    """
    Cross J from type 1 to type 2: (1 - G_12) / (1 - F_2), where G_12 looks
    from type-1 points at type-2 neighbours. Values below 1 mean type 2
    gathers around type 1.
    """
    if p1.window != p2.window:
        raise DataError("cross J needs both patterns in the same window")
    if p1.n == 0 or p2.n == 0:
        raise InsufficientPointsError("insufficient points: cross J needs two nonempty patterns")
    r.check_window(p1.window)
    values2 = intensity_at(lam2, p2)
    gt, gd = g_cross_tail(p1.xy, p2, values2, r)
    ft, fd = f_tail(p2, values2, grid, r)
    return _ratio(StatKind.J_CROSS, r, gt, gd, ft, fd, tau_f)


def j_cross_from_tails(r: RGrid, g_tail_values, g_defined, f_tail_values, f_defined, tau_f: float = TAU_F) -> SummaryFunction:
    """Cross J from precomputed 1 - G_12 and 1 - F_2 tails, for callers that reuse F_2."""
    return _ratio(StatKind.J_CROSS, r, g_tail_values, g_defined, f_tail_values, f_defined, tau_f)
