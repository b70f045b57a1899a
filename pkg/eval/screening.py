from __future__ import annotations

import logging

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.config import RunConfig
from eval.deviation import DeviationKind, Measure, Sided, TestResult, clustered_alternative, deviation_battery
from eval.gof import goodness_of_fit_test
from eval.independence import lotwick_silverman_test
from intensity.bandwidth import cvl_bandwidth
from intensity.kernel import Bandwidth, kernel_intensity
from intensity.surface import IntensitySurface
from pattern.core import MultiTypePattern, PointPattern, species_over_threshold
from stats.summary import StatKind
from synth.pairing import random_pairing
from synth.rng import RngSeed, as_seed
from utils.errors import InhomError

logger = logging.getLogger(__name__)

SPECIES_COLUMNS = ["species", "stat", "kind", "sided", "t_obs", "p_value", "n_points", "bandwidth", "error"]
PAIR_COLUMNS = ["pair", "species_1", "species_2", "stat", "kind", "sided", "t_obs", "p_value", "bandwidth_1", "bandwidth_2", "error"]


def fit_intensity(p: PointPattern, config: RunConfig, n_jobs: int = 1) -> tuple[Bandwidth, IntensitySurface]:
    """Kernel intensity of a pattern with the configured bandwidth, or the criterion-selected one."""
    if config.bandwidth is not None:
        h = Bandwidth(config.bandwidth)
    else:
        h = cvl_bandwidth(p, config.candidates(), config.nx, config.ny, config.leave_one_out, n_jobs=n_jobs)
    return h, kernel_intensity(p, h, config.nx, config.ny, floor=config.intensity_floor)


def _result_rows(result: TestResult, all_kinds: bool, r_range) -> list[dict]:
    if not all_kinds:
        return [{
            "stat": result.statistic.value,
            "kind": result.kind.measure.value,
            "sided": result.kind.sided.value,
            "t_obs": result.t_obs,
            "p_value": result.p_value,
        }]
    table = deviation_battery(result.observed, result.simulated, r_range, result.kind.sided)
    return table.to_dict("records")


def _error_rows(stats, message: str) -> list[dict]:
    return [
        {"stat": s.value, "kind": Measure.MAD.value, "sided": None, "t_obs": np.nan, "p_value": np.nan, "error": message}
        for s in stats
    ]


def _screen_one_species(code: str, p: PointPattern, config: RunConfig, seed: RngSeed, all_kinds: bool) -> list[dict]:
    stats = (StatKind.K, StatKind.J)
    r_range = (0.0, config.r_max_univariate)
    base = {"species": code, "n_points": p.n, "bandwidth": np.nan, "error": ""}
    try:
        h, lam = fit_intensity(p, config)
    except InhomError as e:
        logger.warning("species %s skipped: %s", code, e)
        return [{**base, **row} for row in _error_rows(stats, str(e))]
    base["bandwidth"] = h.h

    rows = []
    for k, stat in enumerate(stats):
        try:
            result = goodness_of_fit_test(
                p, lam, stat,
                kind=DeviationKind(Measure.MAD, clustered_alternative(stat)),
                nsim=config.nsim,
                r_range=r_range,
                seed=seed.spawn(k),
                n_r=config.n_r,
                reference_mode=config.reference_mode,
                reestimate=h if config.reestimate_null else None,
                tau_f=config.tau_f,
            )
            rows.extend({**base, **row} for row in _result_rows(result, all_kinds, r_range))
        except InhomError as e:
            logger.warning("species %s, %s failed: %s", code, stat.value, e)
            rows.extend({**base, **row} for row in _error_rows([stat], str(e)))
    return rows


def screen_species(m: MultiTypePattern, config: RunConfig, all_kinds: bool = False) -> pd.DataFrame:
    """
    Goodness-of-fit screen: every species with more than `min_count` points is
    tested against the inhomogeneous Poisson process with its own kernel
    intensity, with K and J and the one-sided MAD test. Failures become rows
    with an error note.
    """
    codes = species_over_threshold(m, config.min_count)
    logger.info("screening %d of %d species (more than %d points)", len(codes), len(m), config.min_count)
    if not codes:
        return pd.DataFrame(columns=SPECIES_COLUMNS)
    root = RngSeed(config.seed).spawn(0)
    chunks = Parallel(n_jobs=config.n_jobs)(
        delayed(_screen_one_species)(code, m[code], config, root.spawn(k), all_kinds)
        for k, code in enumerate(codes)
    )
    return pd.DataFrame([row for chunk in chunks for row in chunk], columns=SPECIES_COLUMNS)


def _screen_one_pair(a: str, b: str, m: MultiTypePattern, config: RunConfig, seed: RngSeed, all_kinds: bool) -> list[dict]:
    stats = (StatKind.K_CROSS, StatKind.J_CROSS)
    r_range = (0.0, config.r_max_cross)
    base = {"pair": f"{a},{b}", "species_1": a, "species_2": b, "bandwidth_1": np.nan, "bandwidth_2": np.nan, "error": ""}
    try:
        h1, lam1 = fit_intensity(m[a], config)
        h2, lam2 = fit_intensity(m[b], config)
    except InhomError as e:
        logger.warning("pair %s,%s skipped: %s", a, b, e)
        return [{**base, **row} for row in _error_rows(stats, str(e))]
    base.update(bandwidth_1=h1.h, bandwidth_2=h2.h)

    rows = []
    for k, stat in enumerate(stats):
        try:
            result = lotwick_silverman_test(
                m[a], m[b], lam1, lam2, stat,
                kind=DeviationKind(Measure.MAD, Sided.TWO),
                nsim=config.nsim,
                r_range=r_range,
                seed=seed.spawn(k),
                n_r=config.n_r,
                reference_mode=config.reference_mode,
                tau_f=config.tau_f,
            )
            rows.extend({**base, **row} for row in _result_rows(result, all_kinds, r_range))
        except InhomError as e:
            logger.warning("pair %s,%s, %s failed: %s", a, b, stat.value, e)
            rows.extend({**base, **row} for row in _error_rows([stat], str(e)))
    return rows


def screen_pairs(m: MultiTypePattern, config: RunConfig, seed: RngSeed | int | None = None, all_kinds: bool = False) -> pd.DataFrame:
    """
    Independence screen: qualifying species are matched into random pairs and
    each pair gets the torus-shift test with cross K and cross J and the
    two-sided MAD test.
    """
    seed = as_seed(config.seed if seed is None else seed)
    codes = species_over_threshold(m, config.min_count)
    pairs, leftover = random_pairing(codes, seed.spawn(0))
    if leftover is not None:
        logger.info("species %s left unpaired", leftover)
    root = seed.spawn(1)
    chunks = Parallel(n_jobs=config.n_jobs)(
        delayed(_screen_one_pair)(a, b, m, config, root.spawn(k), all_kinds)
        for k, (a, b) in enumerate(pairs)
    )
    return pd.DataFrame([row for chunk in chunks for row in chunk], columns=PAIR_COLUMNS)
