import csv
import io
import json

import numpy as np
import pytest

from walkcorr.cli import main
from walkcorr.errors import ParameterError
from walkcorr.hamiltonian import SparseHamiltonian, random_sparse, save
from walkcorr.pipeline import (
    CSV_COLUMNS,
    ExperimentConfig,
    circuit_selects,
    compose_series,
    load_grid,
    run_simulate,
    run_sweep,
)
from walkcorr.planner import make_plan
from walkcorr.series import check_alternating_symmetry


def cfg(alg="corrected1", tau=4.0, eps=1e-6, h=(2, 2, 7), **kw):
    return ExperimentConfig(hamiltonian=h, tau=tau, epsilon=eps, algorithm=alg, **kw)


def test_config_validation():
    with pytest.raises(ParameterError):
        ExperimentConfig(hamiltonian=(1, 1, 0), epsilon=0.1)
    with pytest.raises(ParameterError):
        ExperimentConfig(hamiltonian=(1, 1, 0), t=-1.0, epsilon=0.1)
    with pytest.raises(ParameterError):
        ExperimentConfig(hamiltonian=(1, 1, 0), t=1.0, epsilon=1.5)
    with pytest.raises(ParameterError):
        ExperimentConfig(hamiltonian=(1, 1, 0), t=1.0, epsilon=0.1, algorithm="magic")


def test_zero_time_is_identity():
    rep = run_simulate(ExperimentConfig(hamiltonian=(2, 2, 3), t=0.0, epsilon=1e-6))
    assert rep.error_spectral <= 1e-12 and rep.oracle_queries == 0 and rep.passed


def test_zero_hamiltonian(tmp_path):
    path = tmp_path / "zero.json"
    path.write_text(save(SparseHamiltonian(np.zeros((2, 2)), d=1)))
    rep = run_simulate(ExperimentConfig(hamiltonian=str(path), t=3.0, epsilon=1e-6))
    assert rep.passed and rep.oracle_queries == 0


def test_corrected_runs_pass_and_match_prediction():
    one = run_simulate(cfg("corrected1"))
    two = run_simulate(cfg("corrected2"))
    for rep in (one, two):
        assert rep.passed
        assert rep.oracle_queries == rep.predicted_queries == 4 * rep.walk_steps
        assert rep.max_asymmetry <= 1e-12
    ratio = two.oracle_queries / one.oracle_queries
    assert ratio > 0


def test_time_and_tau_agree():
    H = random_sparse(2, 2, 7)
    rep = run_simulate(cfg(tau=4.0), H)
    rep_t = run_simulate(ExperimentConfig(hamiltonian=(2, 2, 7), t=rep.t, epsilon=1e-6), H)
    assert rep_t.tau == pytest.approx(4.0, rel=1e-15)
    assert rep_t.passed


def test_pass_flag_is_recomputed():
    rep = run_simulate(cfg())
    assert rep.to_dict()["pass"]
    rep.error_spectral = 1.0
    assert not rep.passed and not rep.to_dict()["pass"]


def test_report_is_deterministic():
    assert run_simulate(cfg("corrected2")).to_json() == run_simulate(cfg("corrected2")).to_json()


def test_circuit_selects_sum_matches_plan():
    for alg in ("uncorrected", "corrected1", "corrected2"):
        plan = make_plan(alg, 8.0, 1e-8)
        assert 2 * sum(circuit_selects(plan)) * 4 == plan.predicted_queries
        assert 2 * compose_series(plan).final.max_power * 4 == plan.predicted_queries


def test_pipeline_series_symmetric():
    for alg in ("uncorrected", "corrected1", "corrected2"):
        comp = compose_series(make_plan(alg, 16.0, 1e-8))
        for name, F in comp.parts.items():
            assert check_alternating_symmetry(F), name


def test_sweep_empty_and_failure_rows():
    text, reps = run_sweep([])
    assert text == ",".join(CSV_COLUMNS) + "\n" and reps == []
    text, reps = run_sweep([ExperimentConfig(hamiltonian=(1, 4, 0), tau=1.0, epsilon=0.1)])
    row = next(csv.DictReader(io.StringIO(text)))
    assert row["pass"] == "false" and "ParameterError" in row["error"]


def test_sweep_example():
    grid = [cfg(alg, tau, 1e-8, h=(2, 2, 1))
            for tau in (2.0, 4.0, 8.0) for alg in ("uncorrected", "corrected1", "corrected2")]
    text, reps = run_sweep(grid)
    assert "\r" not in text
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 9
    assert [r["algorithm"] for r in rows[:3]] == ["uncorrected", "corrected1", "corrected2"]
    assert all(r["pass"] == "true" for r in rows)
    assert text == run_sweep(grid, workers=3)[0]
    at8 = [r for r in rows if float(r["tau"]) == 8.0]
    base = int(next(r for r in at8 if r["algorithm"] == "uncorrected")["queries"])
    for r in at8:
        if r["algorithm"] != "uncorrected":
            assert int(r["queries"]) <= base, f"{r['algorithm']} {r['queries']} > uncorrected {base}"


def test_load_grid():
    grid = load_grid(json.dumps([
        {"hamiltonian": {"n": 1, "d": 1, "seed": 2}, "tau": 1.0, "epsilon": 1e-4},
        {"hamiltonian": [2, 2, 3], "t": 0.5, "epsilon": 1e-4, "algorithm": "corrected2"},
    ]))
    assert grid[0].hamiltonian == (1, 1, 2) and grid[1].algorithm == "corrected2"
    with pytest.raises(ParameterError):
        load_grid("{}")
    with pytest.raises(ParameterError):
        load_grid('[{"tau": 1, "epsilon": 0.1}]')


def test_env_seed(monkeypatch):
    monkeypatch.setenv("WALKCORR_SEED", "7")
    a = run_simulate(ExperimentConfig(hamiltonian=(2, 2, None), tau=1.0, epsilon=1e-4))
    b = run_simulate(ExperimentConfig(hamiltonian=(2, 2, 7), tau=1.0, epsilon=1e-4))
    assert a.X == b.X and a.error_spectral == b.error_spectral
    monkeypatch.setenv("WALKCORR_SEED", "x")
    with pytest.raises(ParameterError):
        run_simulate(ExperimentConfig(hamiltonian=(2, 2, None), tau=1.0, epsilon=1e-4))


# command line

def test_cli_plan(capsys):
    assert main(["plan", "--tau", "16", "--eps", "1e-6", "--rounds", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["r"] == 4 and doc["certified"]["lemma6_s"] <= 2
    assert main(["plan", "--tau", "4", "--eps", "2"]) == 2


def test_cli_simulate_file(tmp_path, capsys):
    path = tmp_path / "h.json"
    path.write_text(save(random_sparse(2, 2, 5)))
    out = tmp_path / "rep.json"
    code = main(["simulate", "--hamiltonian", str(path), "--time", "0.8", "--eps", "1e-8",
                 "--algorithm", "corrected1", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["pass"] is True


def test_cli_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1, "d": 2, "entries": [{"row": 0, "col": 1, "re": 1, "im": 0},'
                   ' {"row": 1, "col": 0, "re": 2, "im": 0}]}')
    assert main(["simulate", "--hamiltonian", str(bad), "--time", "1", "--eps", "1e-3"]) == 2
    assert main(["simulate", "--hamiltonian", str(tmp_path / "missing.json"),
                 "--time", "1", "--eps", "1e-3"]) == 2
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"n": 7, "d": 1, "entries": [{"row": 0, "col": 1, "re": 1.0, "im": 0.0}]}))
    assert main(["simulate", "--hamiltonian", str(big), "--time", "1", "--eps", "1e-3"]) == 4
    from walkcorr import planner
    monkeypatch.setattr(planner, "MAX_M", 2)
    assert main(["simulate", "--random", "2,2,1", "--tau", "8", "--eps", "1e-12"]) == 3


def test_cli_sweep(tmp_path):
    conf = tmp_path / "grid.json"
    conf.write_text(json.dumps([
        {"hamiltonian": {"n": 1, "d": 2, "seed": 0}, "tau": 2.0, "epsilon": 1e-6, "algorithm": a}
        for a in ("uncorrected", "corrected1")
    ]))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", str(conf), "--out", str(out1)]) == 0
    assert main(["sweep", "--config", str(conf), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    conf.write_text(json.dumps([{"hamiltonian": [1, 4, 0], "tau": 1.0, "epsilon": 0.1}]))
    assert main(["sweep", "--config", str(conf), "--out", str(out1)]) == 5


def test_cli_verify(capsys):
    assert main(["verify", "--suite", "series"]) == 0
    assert "suite passed" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main(["verify", "--suite", "nope"])
