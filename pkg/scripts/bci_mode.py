from pathlib import Path
import logging
import sys

import pandas as pd

from app.config import RunConfig
from eval.gof import goodness_of_fit_test
from eval.deviation import deviation_battery, clustered_alternative
from eval.report import build_html_report
from eval.screening import PAIR_COLUMNS, fit_intensity, screen_pairs, screen_species
from pattern.census import ingest_census, multitype_from_census
from pattern.core import species_over_threshold
from stats.summary import StatKind
from synth.rng import RngSeed
from utils.errors import InhomError
from utils.run_artifacts import save_run
from utils.svg import pvalue_histogram


def battery_table(m, cfg: RunConfig):
    """All four deviation measures for K and J of every qualifying species, one simulation ensemble per statistic."""
    rows = []
    for k, code in enumerate(species_over_threshold(m, cfg.min_count)):
        try:
            h, lam = fit_intensity(m[code], cfg)
        except InhomError as e:
            print(f"[skip] {code}: {e}")
            continue
        for s, stat in enumerate((StatKind.K, StatKind.J)):
            try:
                res = goodness_of_fit_test(
                    m[code], lam, stat, nsim=cfg.nsim, r_range=(0.0, cfg.r_max_univariate),
                    seed=RngSeed(cfg.seed).spawn(2).spawn(k).spawn(s), n_r=cfg.n_r, tau_f=cfg.tau_f, n_jobs=cfg.n_jobs,
                )
            except InhomError as e:
                print(f"[skip] {code} {stat.value}: {e}")
                continue
            table = deviation_battery(res.observed, res.simulated, res.r_range, clustered_alternative(stat))
            table.insert(0, "species", code)
            table["bandwidth"] = h.h
            rows.append(table)
    return rows


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) < 2:
        print("Usage: python -m scripts.bci_mode <census.csv> <out_dir> [config.toml]")
        sys.exit(2)

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    census, out_dir = Path(argv[0]), Path(argv[1])
    cfg = RunConfig.load(argv[2] if len(argv) > 2 else None)

    records = ingest_census(census, cfg.rect_window, cfg.status_map)
    m = multitype_from_census(records, cfg.census_id, cfg.status_filter, cfg.rect_window)
    print(f"Loaded census {census}: {len(m)} species alive in census {cfg.census_id}, "
          f"{len(species_over_threshold(m, cfg.min_count))} with more than {cfg.min_count} trees")

    batteries = battery_table(m, cfg)
    battery = pd.concat(batteries, ignore_index=True) if batteries else pd.DataFrame()
    species = screen_species(m, cfg)
    try:
        pairs = screen_pairs(m, cfg)
    except InhomError as e:
        print(f"[skip] pair screen: {e}")
        pairs = pd.DataFrame(columns=PAIR_COLUMNS)

    figures = {
        "species screen": pvalue_histogram(species["p_value"], "species screen p-values"),
        "pair screen": pvalue_histogram(pairs["p_value"], "pair screen p-values"),
    }
    report = build_html_report(
        f"census {cfg.census_id}",
        cfg.model_dump(mode="json"),
        tables={"battery": battery, "screen_species": species, "screen_pairs": pairs},
        figures=figures,
    )
    paths = save_run(
        out_dir,
        tables={"battery": battery, "screen_species": species, "screen_pairs": pairs},
        texts={
            "screen_species.svg": figures["species screen"],
            "screen_pairs.svg": figures["pair screen"],
            "report.html": report,
        },
    )
    share = float((pairs["p_value"].dropna() > 0.05).mean() * 100) if len(pairs) else float("nan")
    print(f"\n=== Pair screen ===\n{share:.1f}% of p-values above 0.05")
    print(f"Artifacts in {paths['run_dir']}")


if __name__ == "__main__":
    main()
