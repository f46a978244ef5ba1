"""Config schema validation and the experiment runner end to end."""

import json
import os

import numpy as np
import pytest

from heavytail import cli
from heavytail.config import (
    EXPERIMENTS,
    load_config,
    parse_config_text,
    schema_help,
    validate_config,
)
from heavytail.errors import ConfigError


def test_parser_handles_comments_and_spacing():
    raw = parse_config_text(
        "# a comment\n"
        "seed = 12   # trailing comment\n"
        "\n"
        "workers=3\n")
    assert raw == {"seed": "12", "workers": "3"}


def test_parser_rejects_duplicates_and_garbage():
    with pytest.raises(ConfigError):
        parse_config_text("seed = 1\nseed = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text("just some words\n")
    with pytest.raises(ConfigError):
        parse_config_text("= 3\n")


def test_unknown_key_is_named_in_the_error():
    with pytest.raises(ConfigError, match="wibble"):
        validate_config("tails", {"seed": "1", "wibble": "2"})


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError, match="unknown experiment"):
        validate_config("frobnicate", {"seed": "1"})


def test_missing_seed_rejected():
    with pytest.raises(ConfigError, match="seed"):
        validate_config("tails", {})


def test_type_and_choice_errors_name_the_key():
    with pytest.raises(ConfigError, match="lambda_count"):
        validate_config("tails", {"seed": "1", "lambda_count": "many"})
    with pytest.raises(ConfigError, match="model"):
        validate_config("converge", {"seed": "1", "model": "cauchy"})
    with pytest.raises(ConfigError, match="replicas"):
        validate_config("converge", {"seed": "1", "replicas": "7"})


def test_overrides_and_echo():
    cfg = validate_config("tails", {"seed": "5"}, seed_override=99,
                          workers_override=3)
    assert cfg.seed == 99 and cfg.workers == 3
    echo = cfg.echo()
    assert echo["experiment"] == "tails"
    assert echo["seed"] == 99
    assert echo["lambda_count"] == 25


def test_declared_experiment_must_match():
    with pytest.raises(ConfigError, match="declares"):
        validate_config("coupling", {"seed": "1", "experiment": "tails"})
    cfg = validate_config("tails", {"seed": "1", "experiment": "tails"})
    assert cfg.experiment == "tails"


def test_list_values_parse():
    cfg = validate_config("kinetic", {"seed": "1",
                                      "n_schedule": "1e3, 1e4",
                                      "x_probes": "0,0.5"})
    assert cfg.params["n_schedule"] == (1000.0, 10000.0)
    assert cfg.params["x_probes"] == (0.0, 0.5)


def test_schema_help_covers_every_experiment():
    assert set(EXPERIMENTS) == {"tails", "coupling", "spectral", "converge",
                                "kinetic", "fracdiff"}
    for name in EXPERIMENTS:
        lines = schema_help(name)
        assert any(line.startswith("seed") and "REQUIRED" in line
                   for line in lines)


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_cli_missing_seed_exits_two(tmp_path):
    cfg = _write(tmp_path / "c.cfg", "lambda_count = 5\n")
    assert cli.main(["tails", "--config", cfg]) == 2


def test_cli_unknown_key_exits_two(tmp_path):
    cfg = _write(tmp_path / "c.cfg", "seed = 1\nnope = 2\n")
    assert cli.main(["tails", "--config", cfg]) == 2


def test_cli_unreadable_config_exits_two(tmp_path):
    assert cli.main(["tails", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_tails_writes_manifest_and_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _write(tmp_path / "c.cfg",
                 f"seed = 42\nlambda_count = 5\noutput_dir = {out}\n")
    assert cli.main(["tails", "--config", cfg]) == 0
    names = capsys.readouterr().out.split()
    assert "tails.csv" in names and "manifest.json" in names
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 42
    assert manifest["status"] == "ok"
    assert "numpy" in manifest["versions"]
    assert manifest["wall_time_s"] >= 0.0
    assert (out / "tails.csv").exists()


def test_cli_rerun_is_byte_identical_across_workers(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    text = ("seed = 7\nmodel = pareto\nn_schedule = 50,100\n"
            "replicas = 500\nbootstrap = 20\nwrite_samples = true\n")
    cfg_a = _write(tmp_path / "a.cfg", text + f"output_dir = {out_a}\n")
    cfg_b = _write(tmp_path / "b.cfg", text + f"output_dir = {out_b}\n")
    assert cli.main(["converge", "--config", cfg_a, "--workers", "1"]) == 0
    assert cli.main(["converge", "--config", cfg_b, "--workers", "5"]) == 0
    for name in ("report.json", "ensemble.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_cli_output_dir_environment_override(tmp_path, monkeypatch):
    configured = tmp_path / "configured"
    actual = tmp_path / "actual"
    cfg = _write(tmp_path / "c.cfg",
                 f"seed = 1\nlambda_count = 4\noutput_dir = {configured}\n")
    monkeypatch.setenv("OUTPUT_DIR", str(actual))
    assert cli.main(["tails", "--config", cfg]) == 0
    assert (actual / "tails.csv").exists()
    assert not configured.exists()


def test_cli_seed_override_changes_outputs(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    text = ("model = pareto\nn_schedule = 50\nreplicas = 300\n"
            "bootstrap = 20\nwrite_samples = true\nseed = 1\n")
    cfg_a = _write(tmp_path / "a.cfg", text + f"output_dir = {out_a}\n")
    cfg_b = _write(tmp_path / "b.cfg", text + f"output_dir = {out_b}\n")
    assert cli.main(["converge", "--config", cfg_a]) == 0
    assert cli.main(["converge", "--config", cfg_b, "--seed", "2"]) == 0
    a = (out_a / "ensemble.csv").read_bytes()
    b = (out_b / "ensemble.csv").read_bytes()
    assert a != b
    manifest = json.loads((out_b / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 2


def test_cli_fracdiff_field(tmp_path):
    out = tmp_path / "out"
    cfg = _write(tmp_path / "c.cfg",
                 ("seed = 3\nt = 0.5\nprofile = gaussian\nwidth = 3\n"
                  f"grid = 4096\nbox = 256\noutput_dir = {out}\n"))
    assert cli.main(["fracdiff", "--config", cfg]) == 0
    lines = (out / "field.csv").read_text().strip().splitlines()
    assert lines[0] == "x,value"
    assert len(lines) == 4097


def test_cli_spectral_json(tmp_path):
    out = tmp_path / "out"
    cfg = _write(tmp_path / "c.cfg",
                 ("seed = 2\ngrid_sizes = 64\nn_trunc = 100\n"
                  f"output_dir = {out}\n"))
    assert cli.main(["spectral", "--config", cfg]) == 0
    payload = json.loads((out / "spectral.json").read_text())
    entry = payload["operators"][0]
    assert entry["M"] == 64
    assert 0.0 < entry["gap"] < 1.0
    assert abs(entry["c_N"]["100"]) < 1e-10
