import json

import pytest

from rumorlab.cli import main


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "rumorlab" in capsys.readouterr().out


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_missing_required_key_is_usage_error(capsys):
    assert main(["simulate", "--law", "exp:1", "--lambda", "1", "--t-max", "1"]) == 2
    assert "/graph" in capsys.readouterr().err


def test_graph_build_and_verify(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["graph", "build", "--family", "torus:4", "--out", str(out)]) == 0
    assert (out / "edges.csv").exists() and (out / "types.json").exists()
    assert (out / "meta.json").exists()
    assert main([
        "graph", "verify",
        "--edges", str(out / "edges.csv"),
        "--types", str(out / "types.json"),
        "--family", "torus:4",
    ]) == 0
    capsys.readouterr()


def test_graph_build_configuration_model(tmp_path):
    out = tmp_path / "cm"
    code = main([
        "graph", "build", "--counts", "[[0,2],[4,0]]", "--size", "9",
        "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["command"] == "graph build"
    assert meta["seed"] == 3


def test_simulate_outputs_and_determinism(tmp_path, capsys):
    argv_tail = [
        "--graph", "cycle:6", "--law", "exp:1", "--lambda", "1",
        "--t-max", "2", "--replicas", "3", "--seed", "5",
    ]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", *argv_tail, "--out", str(a)]) == 0
    assert main(["simulate", *argv_tail, "--out", str(b)]) == 0
    for name in ("trajectory_0.csv", "trajectory_2.csv", "replica_stats.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / "replica_stats.csv").read_text().splitlines()[0]
    assert header == "t,type,X_mean,Y_mean,Z_mean,X_var,Y_var,Z_var"
    capsys.readouterr()


def test_simulate_env_seed(tmp_path, monkeypatch, capsys):
    argv = [
        "simulate", "--graph", "cycle:6", "--law", "exp:1", "--lambda", "1",
        "--t-max", "1", "--replicas", "2",
    ]
    a, b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("RUMORLAB_SEED", "44")
    assert main([*argv, "--out", str(a)]) == 0
    monkeypatch.delenv("RUMORLAB_SEED")
    assert main([*argv, "--seed", "44", "--out", str(b)]) == 0
    assert (a / "trajectory_1.csv").read_bytes() == (b / "trajectory_1.csv").read_bytes()
    capsys.readouterr()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "counts": [[4]], "law": "weibull:2:5", "lambda": 0.5,
        "t_max": 1.0, "dt": 0.1,
    }))
    out = tmp_path / "mf"
    assert main(["meanfield", "--config", str(cfg), "--t-max", "2", "--out", str(out)]) == 0
    rows = (out / "meanfield.csv").read_text().strip().splitlines()
    assert rows[0] == "t,type,X,Y,Z"
    assert len(rows) == 1 + 21  # horizon overridden to 2.0 at dt 0.1
    capsys.readouterr()


def test_config_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"lava": "exp:1"}))
    assert main(["meanfield", "--config", str(cfg)]) == 2
    assert "/lava" in capsys.readouterr().err


def test_fclt_covariance_and_sample(tmp_path, capsys):
    base = [
        "--counts", "[[4]]", "--law", "weibull:2:5", "--lambda", "0.5",
        "--t-max", "1", "--dt", "0.1",
    ]
    cov_dir = tmp_path / "cov"
    assert main(["fclt", "covariance", *base, "--out", str(cov_dir)]) == 0
    index = json.loads((cov_dir / "covariance_index.json").read_text())
    assert index["structure"] == "isometry"
    assert (cov_dir / "covariance_pair_0_0.csv").exists()

    smp_dir = tmp_path / "smp"
    assert main([
        "fclt", "sample", *base, "--samples", "4", "--seed", "2", "--out", str(smp_dir),
    ]) == 0
    lines = (smp_dir / "fluctuations.csv").read_text().splitlines()
    assert lines[0] == "sample_id,t,type,X,Y,Z"
    assert len(lines) == 1 + 4 * 11
    capsys.readouterr()


def test_oracle_subcommand(tmp_path, capsys):
    out = tmp_path / "or"
    code = main([
        "oracle", "--graph", "cycle:3", "--replicas", "400", "--times", "0.5,1",
        "--seed", "6", "--tol", "5.0", "--out", str(out),
    ])
    assert code == 0
    assert (out / "oracle.csv").read_text().startswith("t,type,state,")
    assert "PASS oracle" in capsys.readouterr().out


def test_oracle_rejects_nonexponential(capsys):
    code = main(["oracle", "--graph", "cycle:3", "--law", "weibull:2:5", "--replicas", "10"])
    assert code == 1
    assert "NonExponentialLaw" in capsys.readouterr().err


def test_acceptance_subcommand(capsys):
    assert main(["acceptance", "growth-margin"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS growth-margin")
    assert main(["acceptance", "10"]) == 0
    capsys.readouterr()
    assert main(["acceptance", "nosuch"]) == 2


def test_bad_law_is_usage_error(capsys):
    code = main([
        "simulate", "--graph", "cycle:6", "--law", "bogus:1", "--lambda", "1", "--t-max", "1",
    ])
    assert code == 2
    assert "unknown law" in capsys.readouterr().err
