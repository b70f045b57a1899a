from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from eval.deviation import DeviationKind, ReferenceMode, TestResult, deviation
from intensity.surface import IntensitySurface
from pattern.core import PointPattern
from pattern.geometry import torus_shift
from stats.jfunction import TAU_F, f_tail, g_cross_tail, j_cross_from_tails
from stats.kfunction import intensity_at, k_sum
from stats.summary import GridPoints, RGrid, StatKind, SummaryFunction
from synth.rng import RngSeed, as_seed
from utils.errors import DataError, InsufficientPointsError, NumericError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellShift:
    """A torus shift by whole intensity-grid cells."""

    kx: int
    ky: int

    @classmethod
    def draw(cls, lam: IntensitySurface, seed: RngSeed) -> "CellShift":
        rng = seed.generator()
        nx, ny = lam.shape
        return cls(int(rng.integers(nx)), int(rng.integers(ny)))

    def vector(self, lam: IntensitySurface) -> np.ndarray:
        return np.array([self.kx * lam.dx, self.ky * lam.dy])


def shift_component(p: PointPattern, lam: IntensitySurface, shift: CellShift) -> tuple[PointPattern, IntensitySurface]:
    """Torus-shift a pattern together with its intensity surface; the marginal structure is only relabelled."""
    xy = torus_shift(p.xy, shift.vector(lam), p.window) if p.n else p.xy
    return PointPattern(xy, p.window), lam.roll(shift.kx, shift.ky)


class _CrossStatistic:
    """Cross K or J from type 1 to type 2 with everything that does not move under a shift of type 1 precomputed."""

    def __init__(self, stat, p1, p2, lam1, lam2, r, grid, tau_f):
        self.stat = StatKind(stat)
        self.window = p1.window
        self.r = r
        self.tau_f = tau_f
        self.p2 = p2
        self.values1 = intensity_at(lam1, p1)
        self.values2 = intensity_at(lam2, p2)
        if self.stat == StatKind.J_CROSS:
            self.f_tail = f_tail(p2, self.values2, grid, r)
        elif self.stat != StatKind.K_CROSS:
            raise NumericError(f"independence statistic must be Kcross or Jcross, got {self.stat.value}")

    def __call__(self, xy1: np.ndarray) -> SummaryFunction:
        # shifted type-1 points keep their own intensity values (cyclic relabelling)
        if self.stat == StatKind.K_CROSS:
            k = k_sum(xy1, self.values1, self.p2.xy, self.values2, self.window, self.r)
            return SummaryFunction(StatKind.K_CROSS, self.r, k)
        gt, gd = g_cross_tail(xy1, self.p2, self.values2, self.r)
        ft, fd = self.f_tail
        return j_cross_from_tails(self.r, gt, gd, ft, fd, self.tau_f)


def _shifted_curve(statistic: _CrossStatistic, p1: PointPattern, lam1: IntensitySurface, seed: RngSeed) -> SummaryFunction:
    shift = CellShift.draw(lam1, seed)
    return statistic(torus_shift(p1.xy, shift.vector(lam1), p1.window))


def lotwick_silverman_test(
    p1: PointPattern,
    p2: PointPattern,
    lam1: IntensitySurface,
    lam2: IntensitySurface,
    stat: StatKind = StatKind.K_CROSS,
    kind: DeviationKind | None = None,
    nsim: int = 99,
    r_range: tuple[float, float] = (0.0, 30.0),
    seed: RngSeed | int = 1,
    n_r: int = 512,
    reference_mode: ReferenceMode = "simulation",
    tau_f: float = TAU_F,
    n_jobs: int = 1,
) -> TestResult:
    """
    Independence test of two species by random torus shifts of the first
    species together with its intensity grid. Shifts are whole grid cells
    drawn uniformly, so the shifted surface is a cyclic permutation of the
    original and each shifted point keeps its intensity value exactly.
    The default kind is the two-sided MAD test.
    """
    if p1.window != p2.window:
        raise DataError("independence test needs both patterns in the same window")
    if p1.n == 0 or p2.n == 0:
        raise InsufficientPointsError("insufficient points: independence test needs two nonempty patterns")
    kind = DeviationKind() if kind is None else kind
    seed = as_seed(seed)
    r = RGrid.linspace(r_range[1], n_r)
    r.check_window(p1.window)
    grid = GridPoints.for_surface(lam2)

    statistic = _CrossStatistic(stat, p1, p2, lam1, lam2, r, grid, tau_f)
    observed = statistic(p1.xy)
    sims = Parallel(n_jobs=n_jobs)(
        delayed(_shifted_curve)(statistic, p1, lam1, seed.spawn(k)) for k in range(1, nsim + 1)
    )
    result = deviation(observed, sims, kind, r_range, reference_mode)
    logger.info(
        "%s %s shift test: T=%.4g p=%.4g (nsim=%d, n1=%d, n2=%d)",
        statistic.stat.value, kind.label, result.t_obs, result.p_value, nsim, p1.n, p2.n,
    )
    return result
