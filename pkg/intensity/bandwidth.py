from __future__ import annotations

import logging
from dataclasses import replace
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from intensity.kernel import Bandwidth, as_bandwidth, kernel_intensity, own_contribution
from pattern.core import PointPattern
from pattern.geometry import RectWindow
from utils.errors import InsufficientPointsError, NumericError

logger = logging.getLogger(__name__)


def default_candidates(window: RectWindow, nx: int, ny: int, n: int = 20) -> list[Bandwidth]:
    """Log-spaced values from one grid cell to a quarter of the shorter window side."""
    lo = min(window.width / nx, window.height / ny)
    hi = min(window.width, window.height) / 4
    return [Bandwidth(float(h)) for h in np.geomspace(lo, max(hi, lo), n)]


def cvl_statistic(
    p: PointPattern,
    h: Bandwidth | float,
    nx: int,
    ny: int,
    leave_one_out: bool = False,
) -> float:
    """T(h) = sum_i 1 / lambda_h(x_i); +inf when the estimate vanishes at a data point.

    With `leave_one_out` each point's own gridded term is removed before inverting.
    """
    h = as_bandwidth(h)
    surface = replace(kernel_intensity(p, h, nx, ny), floor=0.0)
    lam = surface.evaluate(p.xy)
    if leave_one_out:
        lam = lam - own_contribution(p, h, nx, ny)
    if np.any(lam <= 0):
        return float("inf")
    return float(np.sum(1.0 / lam))


def cvl_score(p: PointPattern, h: Bandwidth | float, nx: int, ny: int, leave_one_out: bool = False) -> float:
    return abs(cvl_statistic(p, h, nx, ny, leave_one_out) - p.window.area())


def cvl_bandwidth(
    p: PointPattern,
    candidates: Sequence[Bandwidth | float],
    nx: int,
    ny: int,
    leave_one_out: bool = False,
    n_jobs: int = 1,
) -> Bandwidth:
    """Candidate minimising |T(h) - |W||; ties go to the smaller bandwidth."""
    if p.n == 0:
        raise InsufficientPointsError("no points: bandwidth selection needs a nonempty pattern")
    cands = sorted({as_bandwidth(h) for h in candidates})
    if not cands:
        raise NumericError("invalid bandwidth: empty candidate list")

    scores = Parallel(n_jobs=n_jobs)(
        delayed(cvl_score)(p, h, nx, ny, leave_one_out) for h in cands
    )
    for h, s in zip(cands, scores):
        logger.debug("bandwidth h=%.4g score=%.6g", h.h, s)
    best = cands[int(np.argmin(scores))]
    logger.info("selected bandwidth h=%.4g m from %d candidates (n=%d)", best.h, len(cands), p.n)
    return best
