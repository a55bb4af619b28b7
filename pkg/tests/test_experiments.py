import csv

import numpy as np
import pytest

from stochgates import experiments as E
from stochgates.config import parse_config
from stochgates.errors import ConfigError


def tiny_linreg(**changes):
    cfg = E.preset("linreg_recovery", repetitions=2, grid_values=[40, 80])
    cfg.train = {"lr": 0.1, "epochs": 60, "optimizer": "sgd", "reg_rescale": False}
    for k, v in changes.items():
        setattr(cfg, k, v)
    return cfg.validate()


def test_lasso_noiseless_recovers():
    cfg = E.preset("linreg_recovery", methods=["lasso"], repetitions=1, grid_values=[100],
                   data={"d": 64, "noise_var": 0.0}, method_train={"lasso": {"alpha": 0.0}})
    (rep,) = E.run_experiment(cfg)
    assert rep.recovered == 1 and rep.status == "ok"


def test_huge_lambda_selects_nothing():
    cfg = E.preset("xor", repetitions=2)
    cfg.train = dict(cfg.train, lam=1e3, epochs=100)
    reps = E.run_experiment(cfg)
    assert [r.n_selected for r in reps] == [0, 0]


def test_row_count_and_determinism(tmp_path):
    cfg = tiny_linreg()
    a = E.run_experiment(cfg)
    assert len(a) == len(cfg.methods) * len(cfg.grid_values) * cfg.repetitions
    b = E.run_experiment(cfg)
    assert E.runs_csv(a) == E.runs_csv(b)
    # parallel execution gives the same rows in the same order
    assert E.runs_csv(E.run_experiment(cfg, jobs=2)) == E.runs_csv(a)


def test_seeds_shared_across_methods_not_reps():
    reps = E.run_experiment(tiny_linreg(methods=["stg", "lasso"]))
    by = {(r.method, r.grid_index, r.rep): r for r in reps}
    assert by["stg", 0, 0].data_seed == by["lasso", 0, 0].data_seed
    assert by["stg", 0, 0].data_seed != by["stg", 0, 1].data_seed
    assert by["stg", 0, 0].train_seed != by["lasso", 0, 0].train_seed
    assert by["stg", 0, 0].data_seed != by["stg", 1, 0].data_seed  # n changes the data


def test_emit_files_round_trip(tmp_path):
    cfg = tiny_linreg(methods=["stg", "dnc"])
    reps = E.run_experiment(cfg)
    summ = E.summarize(reps)
    paths = E.emit(reps, summ, tmp_path, cfg)
    rows = E.read_runs(paths["runs"])
    assert len(rows) == 8 and list(rows[0]) == E.RUN_COLUMNS
    assert parse_config(paths["config"].read_text()) == cfg
    first = {p: p.read_bytes() for p in tmp_path.rglob("*.csv")}
    E.emit(reps, summ, tmp_path, cfg)
    assert {p: p.read_bytes() for p in tmp_path.rglob("*.csv")} == first
    traces = sorted((tmp_path / "traces").iterdir())
    assert len(traces) == 8
    with open(traces[0]) as fh:
        assert len(list(csv.reader(fh))) == 61
    # summarizing the written file matches summarizing in memory
    assert E.summary_csv(E.summarize(rows)) == E.summary_csv(summ)


def test_summarize_statistics():
    rows = [{"method": "stg", "grid_value": "", "status": "ok", "recovered": f, "f1": v, "selected": "1 2"}
            for f, v in zip([1, 1, 0, 1], [0.9, 0.95, 1.0, 0.95])]
    (s,) = E.summarize(rows)
    assert s["recovery_prob"] == 0.75
    assert s["f1_median"] == 0.95
    assert s["jaccard"] == 1.0 and s["size_var"] == 0.0
    same = E.summarize([dict(rows[0]) for _ in range(3)])[0]
    assert same["f1_std"] == 0.0
    with pytest.raises(ValueError):
        E.summarize([])


def test_failed_rows_are_excluded():
    rows = [{"method": "stg", "grid_value": 1, "status": "ok", "f1": 1.0, "selected": ""},
            {"method": "stg", "grid_value": 1, "status": "failed", "f1": "", "selected": ""}]
    (s,) = E.summarize(rows)
    assert s["n_runs"] == 1 and s["n_excluded"] == 1


def test_divergent_run_is_flagged_not_fatal():
    cfg = tiny_linreg(methods=["stg", "lasso"], repetitions=1)
    cfg.method_train = {"stg": {"lr": 1e6}}
    reps = E.run_experiment(cfg)
    stg = [r for r in reps if r.method == "stg"]
    assert all(r.status == "failed" and "Divergence" in r.error for r in stg)
    assert all(r.status == "ok" for r in reps if r.method == "lasso")


def test_invalid_config_fails_before_running():
    cfg = tiny_linreg()
    cfg.train = dict(cfg.train, optimizer="rmsprop")
    with pytest.raises(ConfigError):
        E.run_experiment(cfg)
    with pytest.raises(ConfigError):
        E.preset("nope")
    with pytest.raises(ConfigError):
        E.run_experiment(E.preset("cox_synthetic", methods=["lasso"]))


def test_metrics_present_only_when_applicable():
    (r,) = E.run_experiment(E.preset("mi_oracle"))
    assert r.accuracy == "" and r.rmse == "" and r.mi_best == pytest.approx(1.0, abs=0.01)
    cfg = E.preset("cox_synthetic", repetitions=1, data={"n": 200, "d": 5})
    cfg.train = dict(cfg.train, epochs=20)
    (c,) = E.run_experiment(cfg)
    assert c.c_index != "" and c.accuracy == "" and c.rmse == ""


def test_custom_csv(tmp_path):
    from stochgates import datagen as D
    from stochgates.ndcore import Rng
    ds = D.gen_friedman_mod(80, 6, Rng(0))
    D.write_csv(ds, tmp_path / "d.csv")
    cfg = parse_config(f"""
[experiment]
name = "custom_csv"
methods = ["stg", "lasso"]
[data]
path = "{tmp_path / 'd.csv'}"
task = "regression"
[model]
hidden = [4]
[train]
epochs = 5
lam = 0.1
""")
    reps = E.run_experiment(cfg)
    assert all(r.status == "ok" and r.rmse != "" and r.f1 == "" for r in reps)
