from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Literal, Sequence

import numpy as np
import pandas as pd

from eval.envelope import stack_curves
from stats.summary import StatKind, SummaryFunction
from utils.errors import NumericError

logger = logging.getLogger(__name__)

SD_FLOOR_ABS = 1e-10
SD_FLOOR_REL = 1e-6

ReferenceMode = Literal["simulation", "theoretical"]


class Measure(str, Enum):
    MAD = "mad"
    DCLF = "dclf"
    STUDENTIZED_MAD = "stud"
    DIRECTIONAL_QUANTILE_MAD = "dq"


class Sided(str, Enum):
    TWO = "two"
    GREATER = "greater"
    LESS = "less"


@dataclass(frozen=True)
class DeviationKind:
    measure: Measure = Measure.MAD
    sided: Sided = Sided.TWO

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "sided", Sided(self.sided))
        if self.measure in (Measure.STUDENTIZED_MAD, Measure.DIRECTIONAL_QUANTILE_MAD) and self.sided != Sided.TWO:
            raise NumericError(f"{self.measure.value} deviation is two-sided only")

    @property
    def label(self) -> str:
        return f"{self.measure.value}/{self.sided.value}"


def clustered_alternative(stat: StatKind) -> Sided:
    """Direction of clustering: K above its reference, J below."""
    return Sided.LESS if StatKind(stat).is_j else Sided.GREATER


@dataclass(eq=False)
class TestResult:
    statistic: StatKind
    kind: DeviationKind
    t_obs: float
    t_sim: np.ndarray
    p_value: float
    r_range: tuple[float, float]
    n_r_used: int
    observed: SummaryFunction | None = field(default=None, repr=False)
    simulated: list[SummaryFunction] | None = field(default=None, repr=False)

    @property
    def nsim(self) -> int:
        return int(self.t_sim.size)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic.value,
            "measure": self.kind.measure.value,
            "sided": self.kind.sided.value,
            "t_obs": float(self.t_obs),
            "t_sim": [float(t) for t in self.t_sim],
            "p_value": float(self.p_value),
            "nsim": self.nsim,
            "r_range": [float(self.r_range[0]), float(self.r_range[1])],
            "n_r_used": int(self.n_r_used),
        }


def rank_p_value(t_obs: float, t_sim: np.ndarray) -> float:
    """(1 + #{T_j >= T_obs}) / (nsim + 1)."""
    t_sim = np.asarray(t_sim, dtype=float)
    return float((1 + np.count_nonzero(t_sim >= t_obs)) / (t_sim.size + 1))


def _usable(r: np.ndarray, obs: np.ndarray, matrix: np.ndarray, r_range) -> np.ndarray:
    lo, hi = r_range
    mask = (r >= lo) & (r <= hi)
    mask &= np.isfinite(obs) & np.isfinite(matrix).all(axis=0)
    if not mask.any():
        raise NumericError(f"empty range: no r in [{lo}, {hi}] where every curve is defined")
    dropped = int(((r >= lo) & (r <= hi)).sum() - mask.sum())
    if dropped:
        logger.warning("dropping %d r values where some curve is undefined", dropped)
    return mask


def _spacing(r: np.ndarray) -> np.ndarray:
    return np.gradient(r) if r.size > 1 else np.ones(1)


def _score(curve: np.ndarray, ensemble: np.ndarray, theoretical: np.ndarray | None, kind: DeviationKind, dr: np.ndarray) -> float:
    """Deviation of `curve` from the ensemble it is compared with (never containing itself)."""
    ordered = np.sort(ensemble, axis=0)
    mean = ordered.mean(axis=0)
    centre = mean if theoretical is None else theoretical
    d = curve - centre
    floor = SD_FLOOR_ABS + SD_FLOOR_REL * np.max(np.abs(mean))

    m = kind.measure
    if m == Measure.MAD:
        if kind.sided == Sided.GREATER:
            return float(np.max(d))
        if kind.sided == Sided.LESS:
            return float(np.max(-d))
        return float(np.max(np.abs(d)))
    if m == Measure.DCLF:
        if kind.sided == Sided.GREATER:
            d = np.maximum(d, 0.0)
        elif kind.sided == Sided.LESS:
            d = np.minimum(d, 0.0)
        return float(np.sum(d ** 2 * dr))
    if m == Measure.STUDENTIZED_MAD:
        sd = ordered.std(axis=0, ddof=1) if ordered.shape[0] > 1 else np.zeros_like(mean)
        return float(np.max(np.abs(d) / np.maximum(sd, floor)))
    # directional quantile: asymmetric spread around the ensemble median
    q25, med, q75 = np.quantile(ordered, [0.25, 0.5, 0.75], axis=0)
    upper = np.maximum(q75 - med, floor)
    lower = np.maximum(med - q25, floor)
    return float(np.max(np.where(d >= 0, d / upper, -d / lower)))


def deviation_from_matrix(
    r: np.ndarray,
    obs: np.ndarray,
    matrix: np.ndarray,
    kind: DeviationKind,
    r_range: tuple[float, float],
    theoretical: np.ndarray | None = None,
) -> tuple[float, np.ndarray, int]:
    nsim = matrix.shape[0]
    if nsim < 2:
        raise NumericError(f"deviation test needs at least 2 simulations, got {nsim}")
    mask = _usable(r, obs, matrix, r_range)
    sub, o = matrix[:, mask], obs[mask]
    theo = None if theoretical is None else theoretical[mask]
    dr = _spacing(r[mask])

    t_obs = _score(o, sub, theo, kind, dr)
    # each simulated curve is scored against the others only
    t_sim = np.array([_score(sub[j], np.delete(sub, j, axis=0), theo, kind, dr) for j in range(nsim)])
    return t_obs, t_sim, int(mask.sum())


def deviation(
    observed: SummaryFunction,
    sims: Sequence[SummaryFunction],
    kind: DeviationKind,
    r_range: tuple[float, float],
    reference_mode: ReferenceMode = "simulation",
) -> TestResult:
    """Global deviation test with a rank p-value; undefined r values are dropped for all curves alike."""
    if reference_mode not in ("simulation", "theoretical"):
        raise NumericError(f"unknown reference mode {reference_mode!r}")
    obs, matrix = stack_curves(observed, sims)
    theoretical = observed.reference if reference_mode == "theoretical" else None
    t_obs, t_sim, used = deviation_from_matrix(observed.r_values, obs, matrix, kind, r_range, theoretical)
    return TestResult(
        statistic=observed.kind,
        kind=kind,
        t_obs=t_obs,
        t_sim=t_sim,
        p_value=rank_p_value(t_obs, t_sim),
        r_range=(float(r_range[0]), float(r_range[1])),
        n_r_used=used,
        observed=observed,
        simulated=list(sims),
    )


def battery_kinds(one_sided: Sided) -> list[DeviationKind]:
    """The four global tests: MAD and DCLF in the given direction, studentized and quantile MAD two-sided."""
    return [
        DeviationKind(Measure.MAD, one_sided),
        DeviationKind(Measure.DCLF, one_sided),
        DeviationKind(Measure.STUDENTIZED_MAD, Sided.TWO),
        DeviationKind(Measure.DIRECTIONAL_QUANTILE_MAD, Sided.TWO),
    ]


def deviation_battery(
    observed: SummaryFunction,
    sims: Sequence[SummaryFunction],
    r_range: tuple[float, float],
    one_sided: Sided = Sided.TWO,
    reference_mode: ReferenceMode = "simulation",
) -> pd.DataFrame:
    """p-values of all four deviation tests on one simulation ensemble."""
    rows = []
    for kind in battery_kinds(one_sided):
        res = deviation(observed, sims, kind, r_range, reference_mode)
        rows.append({
            "stat": observed.kind.value,
            "kind": kind.measure.value,
            "sided": kind.sided.value,
            "t_obs": res.t_obs,
            "p_value": res.p_value,
        })
    return pd.DataFrame(rows)


TestResult.__test__ = False  # keeps pytest from collecting it
