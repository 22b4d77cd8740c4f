"""Experiment harness and command-line interface."""

import io
import json

import numpy as np
import pytest

from ckopt import cli, core, datagen, harness, serial, ssp
from ckopt.errors import DomainError


# ----------------------------------------------------------- ratio helpers

def test_performance_ratio_minimize():
    assert harness.performance_ratio(core.MINIMIZE, 3.0, 2.0) == 1.5
    assert harness.performance_ratio(core.MINIMIZE, 3.0, 0.0) is None


def test_performance_ratio_maximize():
    # for maximization the reference sits in the numerator so that lower
    # still means better
    assert harness.performance_ratio(core.MAXIMIZE, 2.0, 3.0) == 1.5
    assert harness.performance_ratio(core.MAXIMIZE, 0.0, 3.0) is None


def test_dist_spec_from_label():
    assert harness.dist_spec_from_label("ssp", "phi_true") == {"name": "phi_true"}
    assert harness.dist_spec_from_label("sbm", "phi_q0.3") == {
        "name": "phi_q", "q": 0.3}
    assert harness.dist_spec_from_label("sbm", "phi_uni") == {"name": "phi_uni"}


# ----------------------------------------------------- experiment plumbing

def write_small_dataset(tmp_path, n_pairs=14, pool_size=12):
    graph = ssp.Graph(8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6),
                          (6, 7), (0, 4), (1, 6), (2, 7), (0, 7), (3, 6)])
    instance = ssp.SspInstance(graph, datagen.gen_ssp_instance(graph, 31))
    instance_path = tmp_path / "instance.jsonl"
    serial.save_instance(instance, instance_path)
    pairs = datagen.gen_pairs(ssp, instance, n_pairs, datagen.PowerLawSpec(), 32)
    pairs_path = tmp_path / "pairs.jsonl"
    serial.save_pairs("ssp", pairs, pairs_path)
    spec = datagen.PoolSpec({"name": "phi_true"}, pool_size, 33)
    pool_path = tmp_path / "pool.jsonl"
    serial.save_pool("ssp", spec.dist_spec, 33, datagen.pool_sub_seeds(spec),
                     pool_path)
    return instance_path, pairs_path, pool_path


def small_config(tmp_path, **overrides):
    instance_path, pairs_path, pool_path = write_small_dataset(tmp_path)
    kwargs = dict(
        family="ssp",
        instance_path=str(instance_path),
        pairs_path=str(pairs_path),
        pools={"phi_true": str(pool_path)},
        cells=[("phi_true", 4)],
        train_size=8,
        test_size=5,
        runs=2,
        master_seed=77,
        dataset="tiny",
        baselines=["base"],
    )
    kwargs.update(overrides)
    return harness.ExperimentConfig(**kwargs)


def test_config_validation(tmp_path):
    cfg = small_config(tmp_path)
    cfg.validate()
    with pytest.raises(DomainError):
        small_config(tmp_path, runs=0).validate()
    with pytest.raises(DomainError):
        small_config(tmp_path, cells=[("phi_other", 4)]).validate()
    with pytest.raises(DomainError):
        small_config(tmp_path, cells=[("phi_true", 0)]).validate()
    bad = small_config(tmp_path)
    bad.instance_path = str(tmp_path / "missing.jsonl")
    with pytest.raises(DomainError):
        bad.validate()


def test_run_experiment_rows_and_diagnostics(tmp_path):
    cfg = small_config(tmp_path)
    rows, diagnostics = harness.run_experiment(cfg)
    # one trained cell plus one aggregated baseline row
    assert [(r.dist, r.k) for r in rows] == [("phi_true", 4), ("base", 0)]
    trained = rows[0]
    assert trained.runs == 2
    assert trained.mean_ratio >= 1.0 - harness.RATIO_GUARD
    assert np.isfinite(rows[1].mean_ratio)
    assert len(diagnostics) == 2
    for diag in diagnostics:
        assert diag["converged"]
        assert diag["w_min"] >= 0.0
        assert diag["max_constraint_gap"] <= diag["final_xi"] + diag["tol"]
        trace = diag["trace"]
        span = max([1.0] + [abs(t) for t in trace])
        assert all(b >= a - diag["qp_tol"] * span
                   for a, b in zip(trace, trace[1:]))


def test_run_experiment_is_deterministic(tmp_path):
    cfg = small_config(tmp_path)
    rows1, _ = harness.run_experiment(cfg)
    rows2, _ = harness.run_experiment(cfg)
    buf1, buf2 = io.StringIO(), io.StringIO()
    harness.write_csv(rows1, buf1)
    harness.write_csv(rows2, buf2)
    assert buf1.getvalue() == buf2.getvalue()


def test_run_experiment_size_errors(tmp_path):
    cfg = small_config(tmp_path, train_size=12, test_size=12)
    with pytest.raises(DomainError, match="exceeds"):
        harness.run_experiment(cfg)
    cfg = small_config(tmp_path, cells=[("phi_true", 99)])
    with pytest.raises(DomainError, match="pool size"):
        harness.run_experiment(cfg)


def test_write_csv_timing_column():
    rows = [harness.ResultRow("d", "phi_true", 4, 2, 1.5, 0.25, 0, 1.234)]
    plain, timed = io.StringIO(), io.StringIO()
    harness.write_csv(rows, plain)
    harness.write_csv(rows, timed, timing=True)
    assert plain.getvalue().splitlines() == [
        "dataset,dist,K,runs,mean_ratio,std_ratio,excluded",
        "d,phi_true,4,2,1.5,0.25,0",
    ]
    assert timed.getvalue().splitlines()[1].endswith(",1.234")


# ----------------------------------------------------------------- the CLI

def test_cli_full_workflow(tmp_path, capsys):
    instance = tmp_path / "ssp_instance.jsonl"
    pool = tmp_path / "pool.jsonl"
    pairs = tmp_path / "pairs.jsonl"
    model = tmp_path / "model.jsonl"
    log = tmp_path / "train_log.csv"

    assert cli.main(["gen-instance", "--family", "ssp", "--seed", "7",
                     "--out", str(instance)]) == 0
    assert cli.main(["gen-pool", "--family", "ssp", "--dist", "phi_true",
                     "--pool-size", "24", "--seed", "1",
                     "--out", str(pool)]) == 0
    assert cli.main(["gen-pairs", "--family", "ssp", "--instance",
                     str(instance), "--n-pairs", "12", "--seed", "2",
                     "--out", str(pairs)]) == 0
    assert cli.main(["train", "--family", "ssp", "--instance", str(instance),
                     "--pairs", str(pairs), "--pool", str(pool), "--k", "4",
                     "--train-size", "8", "--seed", "3", "--out", str(model),
                     "--log", str(log)]) == 0
    assert log.read_text().startswith("iteration,primal_objective")

    _fam, loaded_pairs = serial.load_pairs(pairs)
    x = loaded_pairs[0].x
    capsys.readouterr()
    assert cli.main(["predict", "--family", "ssp", "--instance", str(instance),
                     "--model", str(model), "--x", json.dumps(list(x))]) == 0
    predicted = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert predicted[0] == x[0] and predicted[-1] == x[1]

    assert cli.main(["eval", "--family", "ssp", "--instance", str(instance),
                     "--pairs", str(pairs), "--model", str(model)]) == 0
    out = capsys.readouterr().out
    assert "mean_ratio" in out


def test_cli_configuration_errors(tmp_path, capsys):
    # missing instance file
    assert cli.main(["gen-pairs", "--family", "ssp", "--instance",
                     str(tmp_path / "none.jsonl"), "--n-pairs", "2",
                     "--out", str(tmp_path / "p.jsonl")]) == 2
    assert "error:" in capsys.readouterr().err
    # K exceeding the pool size
    instance = tmp_path / "i.jsonl"
    pool = tmp_path / "pl.jsonl"
    pairs = tmp_path / "pr.jsonl"
    assert cli.main(["gen-instance", "--family", "ssp", "--out",
                     str(instance)]) == 0
    assert cli.main(["gen-pool", "--family", "ssp", "--dist", "phi_true",
                     "--pool-size", "3", "--out", str(pool)]) == 0
    assert cli.main(["gen-pairs", "--family", "ssp", "--instance",
                     str(instance), "--n-pairs", "4", "--out",
                     str(pairs)]) == 0
    assert cli.main(["train", "--family", "ssp", "--instance", str(instance),
                     "--pairs", str(pairs), "--pool", str(pool), "--k", "9",
                     "--train-size", "2",
                     "--out", str(tmp_path / "m.jsonl")]) == 2


def test_cli_bad_dist_label(tmp_path):
    # phi_q labels only exist for the matching family
    with pytest.raises(SystemExit):
        cli.main(["gen-pool"])  # missing required flags
    assert cli.main(["gen-pool", "--family", "sbm", "--dist", "phi_qx",
                     "--pool-size", "2",
                     "--out", str(tmp_path / "x.jsonl")]) == 2
