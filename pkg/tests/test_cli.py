import json

import pandas as pd
import pytest
from click.testing import CliRunner

from app.cli import cli
from scripts.bci_mode import main as bci_main

CONFIG = """\
window = [0.0, 0.0, 100.0, 50.0]
nx = 20
ny = 10
n_candidates = 4
r_max_univariate = 8.0
r_max_cross = 10.0
n_r = 32
nsim = 9
nsim_envelope = 5
min_count = 20
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG, encoding="utf-8")
    return str(path)


def _simulate(tmp_path, config, n_species=3, name="forest"):
    out = tmp_path / name
    result = CliRunner().invoke(cli, [
        "simulate", "--n-species", str(n_species), "--clustered-fraction", "0", "--mean-count", "60",
        "--config", config, "--out-dir", str(out), "--seed", "5",
    ])
    assert result.exit_code == 0, result.output
    return out / "census.csv"


def test_simulate_writes_census_and_truth(tmp_path, config):
    census = _simulate(tmp_path, config)
    df = pd.read_csv(census)
    assert list(df.columns) == ["tree_id", "species", "x", "y", "status", "census_id"]
    assert sorted(df["species"].unique()) == ["sp000", "sp001", "sp002"]
    truth = json.loads((census.parent / "truth.json").read_text())
    assert truth["clustered"] == []


def test_intensity_command(tmp_path, config):
    census = _simulate(tmp_path, config)
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["intensity", "--census", str(census), "--species", "sp001", "--config", config, "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "intensity_sp001.csv").exists() and (out / "intensity_sp001.svg").exists()
    grid = pd.read_csv(out / "intensity_sp001.csv")
    assert len(grid) == 20 * 10


def test_unknown_species_exits_with_data_code(tmp_path, config):
    census = _simulate(tmp_path, config)
    result = CliRunner().invoke(cli, ["intensity", "--census", str(census), "--species", "zzz", "--config", config, "--out-dir", str(tmp_path / "o")])
    assert result.exit_code == 3
    assert "error[3]" in result.output and "zzz" in result.output


def test_test_command_is_reproducible(tmp_path, config):
    census = _simulate(tmp_path, config)
    docs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = CliRunner().invoke(cli, [
            "test", "--census", str(census), "--species", "sp000", "--stat", "K",
            "--config", config, "--out-dir", str(out), "--seed", "11",
        ])
        assert result.exit_code == 0, result.output
        assert result.output.startswith("p = ")
        docs.append((out / "test_sp000_K.json").read_bytes())
        assert (out / "test_sp000_K_envelope.csv").exists()
    assert docs[0] == docs[1]
    doc = json.loads(docs[0])
    assert 0 < doc["p_value"] <= 1
    assert doc["nsim"] == 9 and doc["sided"] == "greater" and doc["seed"] == 11


def test_test_command_pair_and_battery(tmp_path, config):
    census = _simulate(tmp_path, config)
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, [
        "test", "--census", str(census), "--pair", "sp000,sp002", "--stat", "Kcross", "--all-kinds",
        "--config", config, "--out-dir", str(out),
    ])
    assert result.exit_code == 0, result.output
    doc = json.loads((out / "test_sp000_sp002_Kcross.json").read_text())
    assert doc["pair"] == ["sp000", "sp002"] and doc["sided"] == "two"
    battery = pd.read_csv(out / "test_sp000_sp002_Kcross_battery.csv")
    assert battery["kind"].tolist() == ["mad", "dclf", "stud", "dq"]


@pytest.mark.parametrize("args", [
    ["--stat", "Kcross", "--pair", "sp000"],
    ["--stat", "Kcross", "--pair", "sp000,sp000"],
    ["--stat", "K"],
    ["--stat", "K", "--species", "sp000", "--kind", "stud", "--sided", "greater"],
])
def test_test_command_usage_errors(tmp_path, config, args):
    census = _simulate(tmp_path, config)
    result = CliRunner().invoke(cli, ["test", "--census", str(census), *args, "--config", config, "--out-dir", str(tmp_path / "o")])
    assert result.exit_code == 2


def test_screen_species_and_pairs(tmp_path, config):
    census = _simulate(tmp_path, config, n_species=3)
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["screen", "--census", str(census), "--config", config, "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    assert len(pd.read_csv(out / "screen_species.csv")) == 6
    assert (out / "screen_species.svg").exists() and (out / "screen_species.html").exists()

    census5 = _simulate(tmp_path, config, n_species=5, name="forest5")
    result = CliRunner().invoke(cli, ["screen", "--census", str(census5), "--mode", "pairs", "--config", config, "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    assert len(pd.read_csv(out / "screen_pairs.csv")) == 4


def test_stats_command(tmp_path, config):
    census = _simulate(tmp_path, config)
    out = tmp_path / "out"
    runner = CliRunner()
    result = runner.invoke(cli, ["stats", "--census", str(census), "--species", "sp000", "--config", config, "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(out / "stats_sp000.csv")
    assert list(table.columns) == ["r", "K", "L", "F", "G", "J"]
    assert len(table) == 32
    result = runner.invoke(cli, ["stats", "--census", str(census), "--config", config, "--out-dir", str(out)])
    assert result.exit_code == 2


def test_bad_config_exits_with_data_code(tmp_path):
    census_dir = tmp_path / "c"
    census_dir.mkdir()
    census = census_dir / "census.csv"
    census.write_text("tree_id,species,x,y,status,census_id\nt1,a,1,1,A,8\n", encoding="utf-8")
    bad = tmp_path / "bad.toml"
    bad.write_text("window = [0.0, 0.0, 100.0, 50.0]\n", encoding="utf-8")
    result = CliRunner().invoke(cli, ["screen", "--census", str(census), "--config", str(bad), "--out-dir", str(tmp_path / "o")])
    assert result.exit_code == 3
    assert "config error" in result.output


def test_bci_mode_reports_unpairable_census(tmp_path, config, capsys):
    census = _simulate(tmp_path, config, n_species=1)
    out = tmp_path / "bci"
    bci_main([str(census), str(out), config])
    printed = capsys.readouterr().out
    assert "[skip] pair screen: nothing to pair" in printed
    assert (out / "report.html").exists()
    pairs = pd.read_csv(out / "screen_pairs.csv")
    assert pairs.empty and "p_value" in pairs.columns
