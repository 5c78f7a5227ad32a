import subprocess
import sys

import pytest

from cbscm import artifacts
from cbscm.cli import build_report, load_config, main, ConfigError

SIM = ["--leagues", "4", "--teams", "8", "--first", "1971", "--last", "1986", "--treatment-year", "1981"]


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--out", str(d), "--seed", "3", "--effect", "-0.3", *SIM]) == 0
    return d


def test_simulate_outputs(sim_dir):
    truth = artifacts.read_json(sim_dir / "truth.json")
    assert truth["treated"] == "ENG" and truth["nominal_effect"] == -0.3
    assert truth["realized_effect"] < 0
    cfg = load_config(sim_dir / "analysis.cfg")
    assert cfg.matches == sim_dir / "matches.csv"
    assert cfg.donors == ("GER", "ESP", "NED") and cfg.adoption_years == {}
    assert cfg.did_covariates == ("avg_draw_share",)
    manifest = artifacts.read_json(sim_dir / "run_manifest.json")
    assert set(manifest["runs"]["simulate"]["outputs"]) == {"matches.csv", "truth.json", "analysis.cfg"}


def test_metrics_wiring(sim_dir, tmp_path):
    assert main(["metrics", "--matches", str(sim_dir / "matches.csv"), "--out", str(tmp_path)]) == 0
    rows = artifacts.read_csv(tmp_path / "metrics.csv")
    assert len(rows) == 4 * 16
    assert {"league_id", "season_start_year", "dcb", "namsi_hat"} <= set(rows[0])
    assert all(0 <= r["dcb"] <= 1 for r in rows)
    assert (tmp_path / "run_manifest.json").is_file()


def test_scm_twice_is_byte_identical(sim_dir, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["scm", "--config", str(sim_dir / "analysis.cfg"), "--out", str(out), "--seed", "42"]) == 0
        outs.append(out)
    for name in ("weights.csv", "vweights.csv", "balance.csv", "effects.csv", "path.csv", "summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    m0 = artifacts.read_json(outs[0] / "run_manifest.json")["runs"]["scm"]
    assert m0["config"]["seed"] == 42 and m0["outputs"] == artifacts.read_json(outs[1] / "run_manifest.json")["runs"]["scm"]["outputs"]


def test_full_pipeline_and_report(sim_dir, tmp_path):
    cfg = str(sim_dir / "analysis.cfg")
    for cmd in (["scm"], ["placebo", "--pseudo-year", "1976"], ["loo"], ["did"]):
        assert main([cmd[0], "--config", cfg, "--out", str(tmp_path), *cmd[1:]]) == 0, cmd
    assert main(["report", "--run", str(tmp_path)]) == 0
    report = artifacts.read_json(tmp_path / "report.json")
    assert set(report) == {
        "balance_table", "effects_table", "series_actual_vs_synthetic", "series_gap",
        "loo_table", "series_loo_envelope", "did_table", "placebo",
    }
    assert set(report["series_actual_vs_synthetic"][0]) == {"year", "actual", "synthetic"}
    assert set(report["series_gap"][0]) == {"year", "gap"}
    assert set(report["series_loo_envelope"][0]) == {"year", "min", "max"}
    assert report["placebo"]["time"]["pseudo_year"] == 1976
    assert len(report["series_gap"]) == 16
    runs = artifacts.read_json(tmp_path / "run_manifest.json")["runs"]
    assert set(runs) == {"scm", "placebo", "loo", "did", "report"}
    assert report == build_report(tmp_path)


def test_effects_round_trip(sim_dir, tmp_path):
    assert main(["scm", "--config", str(sim_dir / "analysis.cfg"), "--out", str(tmp_path)]) == 0
    rows = artifacts.read_csv(tmp_path / "effects.csv")
    summary = artifacts.read_json(tmp_path / "summary.json")
    post = [r for r in summary["path"] if r["post"]]
    assert [r["year"] for r in rows] == [r["year"] for r in post]
    for a, b in zip(rows, post):
        assert a["effect"] == pytest.approx(b["gap"], abs=5e-5)


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[analysis]\ntreated = ENG\nbogus = 1\n")
    with pytest.raises(ConfigError, match="unknown keys"):
        load_config(bad)
    bad.write_text("[analysis]\nlag_gap = 4\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[analysis]\noutcome = wins\n")
    with pytest.raises(ConfigError, match="outcome"):
        load_config(bad)
    bad.write_text("[analysis]\ntreatment_year = soon\n")
    with pytest.raises(ConfigError, match="integer"):
        load_config(bad)


def test_default_schedule_when_section_absent(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("[analysis]\ntreated = ENG\n")
    assert load_config(p).adoption_years["ENG"] == 1981


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["scm", "--config", "missing.cfg", "--out", "o"], "config file not found"),
        (["metrics", "--matches", "missing.csv", "--out", "o"], "not found"),
    ],
)
def test_error_exit_one_line(tmp_path, capsys, argv, needle):
    argv = [a if a not in ("o",) else str(tmp_path / "o") for a in argv]
    argv = [str(tmp_path / a) if a.startswith("missing") else a for a in argv]
    assert main(argv) == 1
    err = capsys.readouterr().err
    assert needle in err and err.count("\n") == 1 and err.startswith(f"cbscm {argv[0]}: error:")


def test_unknown_key_exit(tmp_path, capsys):
    p = tmp_path / "a.cfg"
    p.write_text("[analysis]\ncolour = red\n")
    assert main(["scm", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "unknown keys ['colour']" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    res = subprocess.run([sys.executable, "-m", "cbscm", "scm", "--frobnicate"], capture_output=True, text=True)
    assert res.returncode == 2 and "usage:" in res.stderr
