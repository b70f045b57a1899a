from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from stats.summary import RGrid, SummaryFunction
from utils.errors import NumericError


def stack_curves(observed: SummaryFunction, sims: Sequence[SummaryFunction]) -> tuple[np.ndarray, np.ndarray]:
    """Observed values and an (nsim, n_r) matrix of simulated values on a shared r grid."""
    for s in sims:
        if s.r != observed.r:
            raise NumericError("incompatible grids: simulated curve on a different r grid")
        if s.kind != observed.kind:
            raise NumericError(f"incompatible grids: {s.kind.value} curve among {observed.kind.value} curves")
    matrix = np.vstack([s.value for s in sims]) if sims else np.empty((0, len(observed.r)))
    return observed.value, matrix


@dataclass(frozen=True, eq=False)
class Envelope:
    r: RGrid
    lower: np.ndarray
    upper: np.ndarray
    observed: np.ndarray
    reference: np.ndarray
    nsim: int
    k: int

    def outside(self) -> np.ndarray:
        """Mask of r values where the observed curve leaves the band."""
        with np.errstate(invalid="ignore"):
            return (self.observed < self.lower) | (self.observed > self.upper)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "r": self.r.r_values,
            "lower": self.lower,
            "upper": self.upper,
            "observed": self.observed,
            "reference": self.reference,
        })


def pointwise_envelopes(observed: SummaryFunction, sims: Sequence[SummaryFunction], k: int = 1) -> Envelope:
    """k-th smallest and k-th largest simulated value at every r; undefined wherever any curve is."""
    obs, matrix = stack_curves(observed, sims)
    nsim = matrix.shape[0]
    if nsim < 1 or not 1 <= k <= int(np.ceil(nsim / 2)) or nsim < 2 * k - 1:
        raise NumericError(f"envelope rank k={k} is not valid for nsim={nsim}")
    ordered = np.sort(matrix, axis=0)
    undefined = np.isnan(matrix).any(axis=0)
    lower = np.where(undefined, np.nan, ordered[k - 1])
    upper = np.where(undefined, np.nan, ordered[nsim - k])
    return Envelope(observed.r, lower, upper, obs, observed.reference, nsim, k)
