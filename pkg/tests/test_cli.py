"""End-to-end command-line runs on small workloads."""

import json

import pytest

from ipsd.cli import _merge_config, build_parser, main


def test_parser_rejects_unknown_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["frobnicate"])


def test_merge_config_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv("IPSD_SEED", raising=False)
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nseed = 5\nreps = 7\nT = 2\n\n[params]\nalpha = 0.1\n")
    args = build_parser().parse_args(
        ["spin-run", "--config", str(ini), "--set", "params.alpha=0.9"])
    cfg = _merge_config(args)
    assert cfg.seed == 5 and cfg.reps == 7
    assert cfg.options["params"]["alpha"] == "0.9"  # --set beats the file
    # explicit flags beat the file
    args = build_parser().parse_args(
        ["spin-run", "--config", str(ini), "--seed", "42", "--reps", "3"])
    cfg = _merge_config(args)
    assert cfg.seed == 42 and cfg.reps == 3


def test_merge_config_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("IPSD_SEED", "777")
    args = build_parser().parse_args(["meanfield"])
    assert _merge_config(args).seed == 777
    monkeypatch.delenv("IPSD_SEED")
    with pytest.raises(ValueError):
        _merge_config(build_parser().parse_args(["meanfield"]))


def test_merge_config_bad_set(monkeypatch):
    monkeypatch.setenv("IPSD_SEED", "1")
    with pytest.raises(ValueError):
        _merge_config(build_parser().parse_args(["meanfield", "--set", "noequals"]))
    with pytest.raises(ValueError):
        _merge_config(build_parser().parse_args(["meanfield", "--set", "nodot=3"]))


def test_spin_run_end_to_end(tmp_path):
    out = tmp_path / "res"
    rc = main(["spin-run", "--seed", "3", "--reps", "5", "--out", str(out),
               "--set", "kernel.d=1", "--set", "kernel.L=6",
               "--set", "params.alpha=0.3", "--set", "run.T=1",
               "--set", "run.grid=0.5,1", "--set", "run.init=bernoulli:0.5"])
    assert rc == 0
    header = (out / "spin_density.csv").read_text().splitlines()[0]
    assert header == "replicate,time,density"
    report = json.loads((out / "spin-run.json").read_text())
    assert report["config"]["seed"] == 3
    assert 0.0 <= report["terminal_density"]["mean"] <= 1.0


def test_walker_run_end_to_end(tmp_path):
    out = tmp_path / "res"
    main(["walker-run", "--seed", "4", "--reps", "10", "--out", str(out),
          "--set", "walker.kind=crw", "--set", "lattice.d=1", "--set", "lattice.L=6",
          "--set", "run.xi0=0:2,3:1", "--set", "run.T=2", "--set", "run.grid=1,2"])
    header = (out / "walker_sizes.csv").read_text().splitlines()[0]
    assert header == "replicate,t,total,occupied_sites"
    report = json.loads((out / "walker-run.json").read_text())
    assert report["kind"] == "crw"
    assert 0.0 <= report["survival"]["mean"] <= 1.0


def test_parity_check_end_to_end(tmp_path):
    out = tmp_path / "res"
    main(["parity-check", "--seed", "5", "--reps", "40", "--out", str(out),
          "--set", "kernel.d=1", "--set", "kernel.L=5", "--set", "params.alpha=0.4",
          "--set", "run.A=0,2", "--set", "run.B=1", "--set", "run.T=2"])
    header = (out / "parity_pathwise.csv").read_text().splitlines()[0]
    assert header == "replicate,t,parity_forward,parity_dual"
    report = json.loads((out / "parity-check.json").read_text())
    assert report["violations"] == 0


def test_meanfield_end_to_end(tmp_path):
    out = tmp_path / "res"
    main(["meanfield", "--seed", "1", "--out", str(out),
          "--set", "params.lam=1.0", "--set", "params.alpha01=0.8",
          "--set", "params.alpha10=0.4", "--set", "run.T=80"])
    report = json.loads((out / "meanfield.json").read_text())
    assert report["equilibrium"] == pytest.approx(0.25)
    lines = (out / "meanfield_path.csv").read_text().splitlines()
    assert lines[0] == "t,p0"
    assert float(lines[-1].split(",")[1]) == pytest.approx(0.25, abs=1e-4)


def test_dual_run_end_to_end(tmp_path):
    out = tmp_path / "res"
    main(["dual-run", "--seed", "6", "--reps", "30", "--out", str(out),
          "--set", "kernel.d=1", "--set", "kernel.L=6", "--set", "params.alpha=0",
          "--set", "run.B=0,3", "--set", "run.T=2", "--set", "run.grid=1,2"])
    report = json.loads((out / "dual-run.json").read_text())
    assert (out / "dual_survival.csv").read_text().splitlines()[0] == "t,estimate,stderr,reps"
    # annihilation-only duals never die
    assert all(row["survival"]["mean"] == 1.0 for row in report["rows"])


def test_thread_determinism_cli(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["walker-run", "--seed", "9", "--reps", "50",
            "--set", "walker.kind=dbarw", "--set", "walker.branch_rate=0.5",
            "--set", "lattice.d=1", "--set", "lattice.L=6",
            "--set", "run.xi0=0:2", "--set", "run.T=2", "--set", "run.cap=200"]
    main(base + ["--out", str(a), "--threads", "1"])
    main(base + ["--out", str(b), "--threads", "3"])
    for name in ("walker_sizes.csv", "walker-run.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_end_to_end(tmp_path):
    out = tmp_path / "res"
    main(["sweep", "--seed", "2", "--out", str(out),
          "--set", "sweep.over=meanfield", "--set", "sweep.vary=params.alpha10",
          "--set", "sweep.values=0.2,0.4",
          "--set", "params.lam=1.0", "--set", "params.alpha01=0.5",
          "--set", "run.T=30"])
    report = json.loads((out / "sweep.json").read_text())
    assert report["values"] == ["0.2", "0.4"]
    eqs = [r["report"]["equilibrium"] for r in report["reports"]]
    assert eqs[0] == pytest.approx(0.5 / 1.3)
    assert eqs[1] == pytest.approx(0.5 / 1.1)
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "value,metric,metric_value"
    assert any("equilibrium" in r for r in rows[1:])
