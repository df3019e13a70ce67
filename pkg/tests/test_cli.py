import json
import os

import pytest
from click.testing import CliRunner

from shrinkerlab.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def test_check_hypothesis_writes_artifacts(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"spec": {"name": "E1"},
                               "cone": {"n": 3, "sigma": 1.0}}))
    out = tmp_path / "out"
    result = runner.invoke(main, ["check-hypothesis", "--config", str(cfg),
                                  "--output", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "check-hypothesis-summary.json").read_text())
    assert summary["results"]["hypothesis"]["satisfied"] is True
    assert (out / "check-hypothesis" / "kappa_vs_eps.csv").exists()
    assert (out / "effective-config.json").exists()


def test_missing_config_is_exit_2(runner, tmp_path):
    result = runner.invoke(main, ["check-hypothesis", "--config",
                                  str(tmp_path / "none.json")])
    assert result.exit_code == 2


def test_bad_config_is_exit_2(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"cone": {"n": 100}}')
    result = runner.invoke(main, ["check-hypothesis", "--config", str(cfg)])
    assert result.exit_code == 2


def test_assertion_failure_is_exit_1(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "spec": {"name": "E1_minus_ratio", "params": {"eps": 9.9}},
        "cone": {"n": 2, "sigma": 0.8},
        "solver": {"grid_count": 4}}))
    out = tmp_path / "out"
    result = runner.invoke(main, ["solve-shrinker", "--config", str(cfg),
                                  "--output", str(out)])
    assert result.exit_code == 1


def test_seed_override_changes_effective_config(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["check-hypothesis", "--seed", "99",
                                  "--output", str(out)])
    assert result.exit_code == 0
    eff = json.loads((out / "effective-config.json").read_text())
    assert eff["seed"] == 99
