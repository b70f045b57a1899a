from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from eval.deviation import DeviationKind, Measure, ReferenceMode, TestResult, clustered_alternative, deviation
from intensity.kernel import Bandwidth, kernel_intensity
from intensity.surface import IntensitySurface
from pattern.core import PointPattern
from stats.jfunction import TAU_F, fgj_inhom
from stats.kfunction import k_inhom
from stats.summary import GridPoints, RGrid, StatKind, SummaryFunction
from synth.poisson import sample_inhom_poisson
from synth.rng import RngSeed, as_seed
from utils.errors import NumericError

logger = logging.getLogger(__name__)


def univariate_curve(
    stat: StatKind,
    p: PointPattern,
    lam: IntensitySurface,
    r: RGrid,
    grid: GridPoints,
    tau_f: float = TAU_F,
) -> SummaryFunction:
    """K or J of a pattern; an empty pattern gives the zero K curve and an undefined J."""
    stat = StatKind(stat)
    if stat == StatKind.K:
        if p.n == 0:
            return SummaryFunction(StatKind.K, r, np.zeros(len(r)))
        return k_inhom(p, lam, r)
    if stat == StatKind.J:
        return fgj_inhom(p, lam, grid, r, tau_f).J
    raise NumericError(f"goodness-of-fit statistic must be K or J, got {stat.value}")


def _simulated_curve(null_lam, stat, r, grid, seed, reestimate, nx_ny, tau_f):
    sim = sample_inhom_poisson(null_lam, seed)
    lam = null_lam
    if reestimate is not None and sim.n > 0:
        lam = kernel_intensity(sim, reestimate, *nx_ny, floor=null_lam.floor)
    return univariate_curve(stat, sim, lam, r, grid, tau_f)


def simulate_null_curves(
    null_lam: IntensitySurface,
    stat: StatKind,
    nsim: int,
    r: RGrid,
    seed: RngSeed | int,
    grid: GridPoints | None = None,
    reestimate: Bandwidth | None = None,
    tau_f: float = TAU_F,
    n_jobs: int = 1,
) -> list[SummaryFunction]:
    """Statistic curves of nsim inhomogeneous Poisson patterns, simulation k on stream k."""
    seed = as_seed(seed)
    grid = GridPoints.for_surface(null_lam) if grid is None else grid
    curves = Parallel(n_jobs=n_jobs)(
        delayed(_simulated_curve)(null_lam, stat, r, grid, seed.spawn(k), reestimate, null_lam.shape, tau_f)
        for k in range(1, nsim + 1)
    )
    logger.debug("simulated %d %s curves under the null", nsim, StatKind(stat).value)
    return curves


def goodness_of_fit_test(
    p: PointPattern,
    null_lam: IntensitySurface,
    stat: StatKind,
    kind: DeviationKind | None = None,
    nsim: int = 99,
    r_range: tuple[float, float] = (0.0, 25.0),
    seed: RngSeed | int = 1,
    n_r: int = 512,
    reference_mode: ReferenceMode = "simulation",
    reestimate: Bandwidth | None = None,
    tau_f: float = TAU_F,
    n_jobs: int = 1,
) -> TestResult:
    """
    Monte Carlo test of the inhomogeneous Poisson hypothesis with intensity
    `null_lam`. Observed and simulated statistics use the same intensity (the
    null surface, or a kernel re-estimate with bandwidth `reestimate` for
    every pattern alike), so the curves are exchangeable under the null.
    The default kind is the one-sided MAD test against clustering.
    """
    stat = StatKind(stat)
    kind = DeviationKind(Measure.MAD, clustered_alternative(stat)) if kind is None else kind
    r = RGrid.linspace(r_range[1], n_r)
    grid = GridPoints.for_surface(null_lam)

    lam_obs = null_lam
    if reestimate is not None:
        lam_obs = kernel_intensity(p, reestimate, *null_lam.shape, floor=null_lam.floor)
    observed = univariate_curve(stat, p, lam_obs, r, grid, tau_f)
    sims = simulate_null_curves(null_lam, stat, nsim, r, seed, grid, reestimate, tau_f, n_jobs)

    result = deviation(observed, sims, kind, r_range, reference_mode)
    logger.info("%s %s test: T=%.4g p=%.4g (nsim=%d, n=%d)", stat.value, kind.label, result.t_obs, result.p_value, nsim, p.n)
    return result


def robustness_sweep(
    p: PointPattern,
    bandwidth: Bandwidth,
    stat: StatKind,
    h_factors: Sequence[float] = (0.5, 1.0, 2.0),
    r_maxes: Sequence[float] = (10.0, 25.0),
    nsim: int = 99,
    nx: int = 256,
    ny: int = 128,
    seed: RngSeed | int = 1,
    kind: DeviationKind | None = None,
    n_r: int = 512,
    n_jobs: int = 1,
) -> pd.DataFrame:
    """Repeat the test over scaled bandwidths and interaction ranges to see how much the p-value moves."""
    seed = as_seed(seed)
    rows = []
    for a, factor in enumerate(h_factors):
        h = Bandwidth(bandwidth.h * factor)
        lam = kernel_intensity(p, h, nx, ny)
        for b, r_max in enumerate(r_maxes):
            res = goodness_of_fit_test(
                p, lam, stat, kind, nsim, (0.0, r_max), seed.spawn(a).spawn(b), n_r=n_r, n_jobs=n_jobs,
            )
            rows.append({
                "stat": res.statistic.value,
                "kind": res.kind.measure.value,
                "sided": res.kind.sided.value,
                "bandwidth": h.h,
                "r_max": r_max,
                "p_value": res.p_value,
            })
    return pd.DataFrame(rows)
