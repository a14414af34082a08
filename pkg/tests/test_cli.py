import json

import pytest

from artifact.cli import RunConfig, main, run, strip_timings


def _load(d, name):
    return json.loads((d / f"{name}.json").read_text())


def test_coefficients_cutoff1(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "coefficients", "--cutoff", "1", "--order", "3"]) == 0
    out = capsys.readouterr().out
    assert '"-5/18"' in out
    rep = _load(tmp_path, "coefficients")
    assert rep["status"] == "pass" and rep["schema"] == 1


def test_count_two_level(capsys):
    assert main(["forests", "--count-two-level", "4"]) == 0
    assert capsys.readouterr().out.strip() == "128"


def test_verify_representation(tmp_path):
    assert main(["--out", str(tmp_path), "verify-representation", "--cutoff", "0",
                 "--lambda", "0.1", "--samples", "20000"]) == 0
    rep = _load(tmp_path, "verify-representation")
    q = [c for c in rep["checks"] if c["name"].startswith("quadrature")][0]
    assert q["values"]["delta"] < 1e-6


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\ncutoff = 0\norder = 2\nseed = 5\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "coefficients",
                 "--order", "3"]) == 0
    rep = _load(tmp_path, "coefficients")
    series = [c for c in rep["checks"] if c["name"] == "series"][0]
    assert len(series["values"]["coefficients"]) == 3
    assert rep["provenance"]["seed"] == 5


def test_invalid_config(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nrho = 2\n")
    assert main(["--config", str(cfg), "grassmann"]) == 2
    cfg.write_text("[run]\nbogus = 1\n")
    assert main(["--config", str(cfg), "grassmann"]) == 2


def test_cache_through_cli(tmp_path):
    args = ["--out", str(tmp_path), "coefficients", "--cutoff", "1", "--order", "2",
            "--cache-dir", str(tmp_path / "cache")]
    assert main(args) == 0
    assert main(args) == 0
    rep = _load(tmp_path, "coefficients")
    assert [c for c in rep["checks"] if c["name"] == "cache"][0]["status"] == "pass"


def test_determinism():
    cfg = RunConfig(samples=2000)
    a = [strip_timings(r.to_json()) for r in run("grassmann", cfg)]
    b = [strip_timings(r.to_json()) for r in run("grassmann", cfg)]
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_config_hash_tracks_settings():
    assert RunConfig(seed=1).hash() != RunConfig(seed=2).hash()
    assert RunConfig(out="a").hash() == RunConfig(out="b").hash()


def test_csv_and_plot(tmp_path):
    assert main(["--out", str(tmp_path), "--csv", "--plot", "forests", "--n-max", "4"]) == 0
    assert (tmp_path / "forests.csv").read_text().startswith("n,forests,two_level_trees")
    assert (tmp_path / "forests.png").exists()
