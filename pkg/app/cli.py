from __future__ import annotations

import functools
import logging
import re
import sys
from pathlib import Path

import click
import pandas as pd

from app.config import RunConfig
from eval.deviation import DeviationKind, Measure, Sided, clustered_alternative, deviation_battery
from eval.envelope import pointwise_envelopes
from eval.gof import goodness_of_fit_test
from eval.independence import lotwick_silverman_test
from eval.report import build_html_report
from eval.screening import fit_intensity, screen_pairs, screen_species
from intensity.kernel import Bandwidth
from intensity.null import null_intensity
from pattern.census import ingest_census, multitype_from_census, write_census
from pattern.core import MultiTypePattern
from stats.jfunction import fgj_inhom, j_cross_inhom
from stats.kfunction import k_cross_inhom, k_inhom
from stats.summary import GridPoints, RGrid, StatKind, l_function
from synth.forest import synthetic_census, synthetic_forest
from synth.rng import RngSeed
from utils.errors import InhomError
from utils.run_artifacts import save_run
from utils.svg import curves_plot, envelope_plot, heatmap, pvalue_histogram

logger = logging.getLogger("app.cli")

EXIT_USAGE = 2
STAT_CHOICES = {"K": StatKind.K, "J": StatKind.J, "Kcross": StatKind.K_CROSS, "Jcross": StatKind.J_CROSS}


def _fail(code: int, message: str):
    click.echo(f"error[{code}]: {message}", err=True)
    sys.exit(code)


def guarded(fn):
    """Turn library errors into a one-line reason on stderr and the matching exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.UsageError as e:
            _fail(EXIT_USAGE, e.message)
        except InhomError as e:
            _fail(e.exit_code, str(e).splitlines()[0])

    return wrapper


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def _parse_pair(pair: str) -> tuple[str, str]:
    parts = [p.strip() for p in pair.split(",")]
    if len(parts) != 2 or not all(parts):
        raise click.UsageError(f"--pair needs two species codes as A,B, got {pair!r}")
    if parts[0] == parts[1]:
        raise click.UsageError(f"--pair needs two different species, got {pair!r}")
    return parts[0], parts[1]


def _load_config(ctx: click.Context, config_path, **flags) -> RunConfig:
    overrides = {**ctx.obj, **flags}
    return RunConfig.load(config_path, **overrides)


def _community(census: str, cfg: RunConfig) -> tuple[pd.DataFrame, MultiTypePattern]:
    records = ingest_census(census, cfg.rect_window, cfg.status_map)
    return records, multitype_from_census(records, cfg.census_id, cfg.status_filter, cfg.rect_window)


def census_option(fn):
    return click.option("--census", type=click.Path(exists=True, dir_okay=False), required=True, help="Census CSV file.")(fn)


def common_options(fn):
    for opt in reversed([
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="TOML run configuration."),
        click.option("--out-dir", type=click.Path(file_okay=False), default="artifacts", show_default=True, help="Output directory."),
        click.option("--seed", type=int, help="Root random seed."),
        click.option("--nsim", type=int, help="Number of simulations."),
        click.option("--census-id", type=int, help="Census analysed."),
    ]):
        fn = opt(fn)
    return fn


@click.group()
@click.option("--log-level", default="WARNING", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.option("--n-jobs", type=int, help="Parallel workers for simulations and screening.")
@click.pass_context
def cli(ctx: click.Context, log_level: str, n_jobs: int | None):
    """Inhomogeneous point pattern analysis of mapped forest census plots."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    ctx.obj = {"n_jobs": n_jobs}


@cli.command()
@census_option
@click.option("--species", required=True, help="Species code.")
@click.option("--reference-census", type=int, help="Estimate the null intensity from this earlier census.")
@common_options
@click.pass_context
@guarded
def intensity(ctx, census, species, reference_census, config_path, out_dir, seed, nsim, census_id):
    """Kernel intensity surface of one species (CSV grid plus SVG heatmap)."""
    cfg = _load_config(ctx, config_path, seed=seed, nsim=nsim, census_id=census_id, reference_census=reference_census)
    records, m = _community(census, cfg)
    p = m[species]
    h, lam = fit_intensity(p, cfg, n_jobs=cfg.n_jobs)
    if reference_census is not None:
        lam = null_intensity(
            records, records, species, cfg.reference_census, cfg.census_id,
            h, cfg.nx, cfg.ny, cfg.rect_window, cfg.intensity_floor,
        )
    stem = f"intensity_{_slug(species)}"
    paths = save_run(
        out_dir,
        tables={stem: lam.to_frame()},
        texts={f"{stem}.svg": heatmap(lam, f"{species}, h = {h.h:.3g} m")},
    )
    click.echo(paths[stem])


@cli.command()
@census_option
@click.option("--species", help="Species code for univariate K, F, G and J.")
@click.option("--pair", help="Two species codes A,B for cross K and cross J.")
@common_options
@click.pass_context
@guarded
def stats(ctx, census, species, pair, config_path, out_dir, seed, nsim, census_id):
    """Summary functions of one species or one pair, without testing."""
    if (species is None) == (pair is None):
        raise click.UsageError("give exactly one of --species or --pair")
    cfg = _load_config(ctx, config_path, seed=seed, nsim=nsim, census_id=census_id)
    _, m = _community(census, cfg)

    if species is not None:
        p = m[species]
        _, lam = fit_intensity(p, cfg, n_jobs=cfg.n_jobs)
        r = RGrid.linspace(cfg.r_max_univariate, cfg.n_r)
        k = k_inhom(p, lam, r)
        fgj = fgj_inhom(p, lam, GridPoints.for_surface(lam), r, cfg.tau_f)
        table = pd.DataFrame({"r": r.r_values, "K": k.value, "L": l_function(k), "F": fgj.F.value, "G": fgj.G.value, "J": fgj.J.value})
        figure = curves_plot([fgj.F, fgj.G, fgj.J], f"{species}: inhomogeneous F, G and J")
        stem = f"stats_{_slug(species)}"
    else:
        a, b = _parse_pair(pair)
        _, lam1 = fit_intensity(m[a], cfg, n_jobs=cfg.n_jobs)
        _, lam2 = fit_intensity(m[b], cfg, n_jobs=cfg.n_jobs)
        r = RGrid.linspace(cfg.r_max_cross, cfg.n_r)
        kc = k_cross_inhom(m[a], m[b], lam1, lam2, r)
        jc = j_cross_inhom(m[a], m[b], lam2, GridPoints.for_surface(lam2), r, cfg.tau_f)
        table = pd.DataFrame({"r": r.r_values, "K_cross": kc.value, "J_cross": jc.value})
        figure = curves_plot([jc], f"{a} to {b}: inhomogeneous cross J")
        stem = f"stats_{_slug(a)}_{_slug(b)}"

    paths = save_run(out_dir, tables={stem: table}, texts={f"{stem}.svg": figure})
    click.echo(paths[stem])


def _deviation_kind(stat: StatKind, kind: str | None, sided: str | None) -> DeviationKind:
    measure = Measure(kind or Measure.MAD.value)
    if sided is None:
        cross = stat in (StatKind.K_CROSS, StatKind.J_CROSS)
        sided = Sided.TWO if cross or measure in (Measure.STUDENTIZED_MAD, Measure.DIRECTIONAL_QUANTILE_MAD) else clustered_alternative(stat)
    try:
        return DeviationKind(measure, sided)
    except InhomError as e:
        raise click.UsageError(str(e)) from None


@cli.command()
@census_option
@click.option("--species", help="Species code (K or J).")
@click.option("--pair", help="Two species codes A,B (Kcross or Jcross).")
@click.option("--stat", "stat_name", type=click.Choice(list(STAT_CHOICES)), default="K", show_default=True)
@click.option("--kind", type=click.Choice([m.value for m in Measure]), help="Deviation measure (default mad).")
@click.option("--sided", type=click.Choice([s.value for s in Sided]), help="Alternative (default: clustering for K/J, two-sided for pairs).")
@click.option("--reference-census", type=int, help="Null intensity from this earlier census (species mode).")
@click.option("--all-kinds", is_flag=True, help="Also tabulate all four deviation measures on the same simulations.")
@common_options
@click.pass_context
@guarded
def test(ctx, census, species, pair, stat_name, kind, sided, reference_census, all_kinds, config_path, out_dir, seed, nsim, census_id):
    """Monte Carlo test of one species (goodness of fit) or one pair (independence)."""
    stat = STAT_CHOICES[stat_name]
    cross = stat in (StatKind.K_CROSS, StatKind.J_CROSS)
    if cross and pair is None:
        raise click.UsageError(f"--stat {stat_name} needs --pair A,B")
    if not cross and species is None:
        raise click.UsageError(f"--stat {stat_name} needs --species")
    if species is not None and pair is not None:
        raise click.UsageError("give only one of --species or --pair")
    dk = _deviation_kind(stat, kind, sided)
    cfg = _load_config(ctx, config_path, seed=seed, nsim=nsim, census_id=census_id, reference_census=reference_census)
    records, m = _community(census, cfg)

    doc: dict = {"seed": cfg.seed, "census_id": cfg.census_id}
    if cross:
        a, b = _parse_pair(pair)
        h1, lam1 = fit_intensity(m[a], cfg, n_jobs=cfg.n_jobs)
        h2, lam2 = fit_intensity(m[b], cfg, n_jobs=cfg.n_jobs)
        result = lotwick_silverman_test(
            m[a], m[b], lam1, lam2, stat, dk, cfg.nsim, (0.0, cfg.r_max_cross), RngSeed(cfg.seed),
            n_r=cfg.n_r, reference_mode=cfg.reference_mode, tau_f=cfg.tau_f, n_jobs=cfg.n_jobs,
        )
        doc.update(pair=[a, b], n_points=[m[a].n, m[b].n], bandwidth=[h1.h, h2.h])
        stem = f"test_{_slug(a)}_{_slug(b)}_{stat_name}"
    else:
        p = m[species]
        h, lam = fit_intensity(p, cfg, n_jobs=cfg.n_jobs)
        if reference_census is not None:
            lam = null_intensity(
                records, records, species, cfg.reference_census, cfg.census_id,
                h, cfg.nx, cfg.ny, cfg.rect_window, cfg.intensity_floor,
            )
        result = goodness_of_fit_test(
            p, lam, stat, dk, cfg.nsim, (0.0, cfg.r_max_univariate), RngSeed(cfg.seed),
            n_r=cfg.n_r, reference_mode=cfg.reference_mode,
            reestimate=Bandwidth(h.h) if cfg.reestimate_null else None,
            tau_f=cfg.tau_f, n_jobs=cfg.n_jobs,
        )
        doc.update(species=species, n_points=p.n, bandwidth=h.h, null="reference census" if reference_census else "kernel")
        stem = f"test_{_slug(species)}_{stat_name}"
    doc.update(result.to_dict())

    n_env = min(cfg.nsim_envelope, result.nsim)
    env = pointwise_envelopes(result.observed, result.simulated[:n_env], min(cfg.envelope_rank, (n_env + 1) // 2))
    tables = {f"{stem}_envelope": env.to_frame()}
    if all_kinds:
        tables[f"{stem}_battery"] = deviation_battery(result.observed, result.simulated, result.r_range, dk.sided, cfg.reference_mode)
    paths = save_run(
        out_dir,
        tables=tables,
        documents={stem: doc},
        texts={f"{stem}_envelope.svg": envelope_plot(env, stat.value)},
    )
    click.echo(f"p = {result.p_value:.4g} ({paths[stem]})")


@cli.command()
@census_option
@click.option("--mode", type=click.Choice(["species", "pairs"]), default="species", show_default=True)
@click.option("--all-kinds", is_flag=True, help="Tabulate all four deviation measures per test.")
@common_options
@click.pass_context
@guarded
def screen(ctx, census, mode, all_kinds, config_path, out_dir, seed, nsim, census_id):
    """Batch tests over every species with enough trees, or over random species pairs."""
    cfg = _load_config(ctx, config_path, seed=seed, nsim=nsim, census_id=census_id)
    _, m = _community(census, cfg)
    if mode == "species":
        table = screen_species(m, cfg, all_kinds=all_kinds)
    else:
        table = screen_pairs(m, cfg, all_kinds=all_kinds)
    stem = f"screen_{mode}"
    histogram = pvalue_histogram(table["p_value"], f"{mode} screen p-values")
    report = build_html_report(
        f"{mode} screen of census {cfg.census_id}",
        cfg.model_dump(mode="json"),
        tables={stem: table},
        figures={"p-value histogram": histogram},
    )
    paths = save_run(out_dir, tables={stem: table}, texts={f"{stem}.svg": histogram, f"{stem}.html": report})
    click.echo(f"{len(table)} rows ({paths[stem]})")


@cli.command()
@click.option("--n-species", type=int, default=20, show_default=True)
@click.option("--clustered-fraction", type=float, default=0.5, show_default=True)
@click.option("--mean-count", type=float, default=150.0, show_default=True, help="Expected trees per species.")
@common_options
@click.pass_context
@guarded
def simulate(ctx, n_species, clustered_fraction, mean_count, config_path, out_dir, seed, nsim, census_id):
    """Write a synthetic two-census forest (clustered and Poisson species) as a census CSV."""
    if n_species < 1 or not 0.0 <= clustered_fraction <= 1.0:
        raise click.UsageError("--n-species must be positive and --clustered-fraction in [0, 1]")
    cfg = _load_config(ctx, config_path, seed=seed, nsim=nsim, census_id=census_id)
    root = RngSeed(cfg.seed)
    latest, clustered = synthetic_forest(n_species, clustered_fraction, cfg.rect_window, root.spawn(0), mean_count=mean_count)
    departed, _ = synthetic_forest(n_species, clustered_fraction, cfg.rect_window, root.spawn(1), mean_count=mean_count / 4)
    records = synthetic_census(latest, departed, cfg.reference_census, cfg.census_id)
    census_path = write_census(records, Path(out_dir) / "census.csv")
    save_run(
        out_dir,
        documents={"truth": {"clustered": clustered, "seed": cfg.seed, "counts": latest.counts()}},
    )
    click.echo(str(census_path))


if __name__ == "__main__":
    cli()
