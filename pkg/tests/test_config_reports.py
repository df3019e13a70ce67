import json

import numpy as np
import pytest

from shrinkerlab.config import RunConfig, effective_config, load_config
from shrinkerlab.errors import ConfigError
from shrinkerlab.reports import csv_table, dumps_json, format_float


def test_defaults_fill_minimal_config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{"spec": {"name": "E1"}, "cone": {"n": 2, "sigma": 1.0}}')
    cfg = load_config(p)
    assert cfg.solver.z_far == 40.0
    assert cfg.carleman.R == 10.0
    assert cfg.flow.cfl_max == 0.2


def test_config_round_trip(tmp_path):
    cfg = load_config(None, {"seed": 7})
    echoed = effective_config(cfg)
    p = tmp_path / "echo.json"
    p.write_text(json.dumps(echoed))
    again = load_config(p)
    assert again == cfg


def test_unknown_keys_rejected(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{"nope": 1}')
    with pytest.raises(ConfigError):
        load_config(p)
    p.write_text('{"spec": {"params": {"epsilon": 0.1}}}')
    with pytest.raises(ConfigError):
        load_config(p)


def test_out_of_range_rejected(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{"spec": {"params": {"eps": -0.5}}}')
    with pytest.raises(ConfigError):
        load_config(p)
    p.write_text('{"carleman": {"tau_values": [2.0]}}')
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_output_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "envout"))
    cfg = load_config(None)
    assert cfg.output_dir == str(tmp_path / "envout")


# -- reports -----------------------------------------------------------------


def test_float_formatting_round_trips():
    for x in (1/3, 1e-300, 123456.789, -0.0, 2.0**-52):
        assert float(format_float(x)) == x
    assert format_float(float("nan")) == '"NaN"'
    assert format_float(float("inf")) == '"Infinity"'


def test_dumps_json_is_deterministic_and_sorted():
    a = dumps_json({"b": [1.0, {"z": 2, "a": np.float64(1/3)}], "a": None,
                    "flag": True})
    b = dumps_json({"a": None, "flag": True,
                    "b": [1.0, {"a": np.float64(1/3), "z": 2}]})
    assert a == b
    assert a.index('"a"') < a.index('"b"')
    parsed = json.loads(a)
    assert parsed["b"][1]["a"] == 1/3


def test_dumps_json_rejects_unserializable():
    with pytest.raises(TypeError):
        dumps_json({"x": object()})
    with pytest.raises(TypeError):
        dumps_json({1: "non-string key"})


def test_csv_table():
    text = csv_table(["a", "b"], [(1.0/3.0, True), (float("nan"), "x")])
    lines = text.strip().split("\n")
    assert lines[0] == "a,b"
    assert float(lines[1].split(",")[0]) == 1/3
    assert lines[2].split(",")[0] == "nan"
