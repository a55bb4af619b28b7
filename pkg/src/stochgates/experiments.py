"""Repetition sweeps over (method, grid point, repetition) cells, with CSV output.

Seeds: the training seed of a cell is ``derive_seed(master, method, grid_index,
rep)``. Data are drawn from ``derive_seed(master, "data", data_index, rep)``
where ``data_index`` is the grid index only when the grid changes the data
(``grid.param = "n"``); so every method and every lambda of one repetition
sees the same sample.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import baselines, datagen, gates, metrics
from . import net as N
from . import optim
from .config import ExperimentConfig, dump_config
from .errors import ConfigError, StgError
from .ndcore import Rng, derive_seed

log = logging.getLogger(__name__)

NN_METHODS = ("stg", "hc", "dnc")
LINREG = ("linreg_recovery", "linreg_correlated")


@dataclass
class RunReport:
    experiment: str
    method: str
    grid_param: str
    grid_index: int
    grid_value: object
    rep: int
    data_seed: int
    train_seed: int
    lam: object = ""
    n_train: object = ""
    status: str = "ok"
    error: str = ""
    accuracy: object = ""
    rmse: object = ""
    baseline_rmse: object = ""
    c_index: object = ""
    precision: object = ""
    recall: object = ""
    f1: object = ""
    median_rank: object = ""
    ifwr: object = ""
    recovered: object = ""
    n_selected: object = ""
    selected: str = ""
    reopen_events: object = ""
    epochs_run: object = ""
    mi_best: object = ""
    mi_k1_max: object = ""
    runtime: float = field(default=0.0, compare=False)
    trace: object = field(default=None, compare=False, repr=False)

    def to_row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name in RUN_COLUMNS}


RUN_COLUMNS = [f.name for f in fields(RunReport) if f.name not in ("runtime", "trace")]
SUMMARY_METRICS = ("accuracy", "rmse", "baseline_rmse", "c_index", "precision", "recall", "f1",
                   "median_rank", "ifwr", "n_selected", "reopen_events")


# --- presets -------------------------------------------------------------------

def _nn_train(**kw):
    base = {"lr": 0.5, "epochs": 1000, "batch_size": 100, "optimizer": "sgd", "cutoff": 0.0}
    base.update(kw)
    return base


PRESETS = {
    "xor": dict(name="xor", methods=["stg"], repetitions=20,
                data={"n": 1500, "d": 10},
                model={"hidden": [50, 20], "activation": "tanh", "weight_std": 0.316227766},
                train=_nn_train(lam=0.1), options={"standardize": True},
                grid_param="none", grid_values=[None]),
    "two_moons": dict(name="two_moons", methods=["stg"], repetitions=20,
                      data={"n": 1500, "d": 10},
                      model={"hidden": [50, 20], "activation": "tanh", "weight_std": 0.316227766},
                      train=_nn_train(lam=0.1), options={"standardize": True}),
    "friedman": dict(name="friedman", methods=["stg"], repetitions=20,
                     data={"n": 600, "d": 500},
                     model={"hidden": [50, 20], "activation": "tanh", "weight_std": 0.316227766},
                     train=_nn_train(lam=1.0, lr=0.2, batch_size=200, epochs=2000),
                     options={"standardize": True}),
    "madelon_like": dict(name="madelon_like", methods=["stg"], repetitions=5,
                         data={"n": 1500, "n_informative": 5, "n_combined": 15, "n_nuisance": 480,
                               "flip_frac": 0.01, "class_sep": 1.0},
                         model={"hidden": [50, 20], "activation": "tanh", "weight_std": 0.316227766},
                         train=_nn_train(lr=0.5, batch_size=200, epochs=600),
                         options={"standardize": True}, grid_param="lam",
                         grid_values=[float(v) for v in np.logspace(-2, 1, 20)]),
    "linreg_recovery": dict(name="linreg_recovery", methods=["stg", "hc", "dnc", "lasso"], repetitions=200,
                            data={"d": 64, "noise_var": 0.25},
                            model={"hidden": [], "weight_std": 0.1},
                            train={"lr": 0.1, "epochs": 2000, "optimizer": "sgd", "reg_rescale": False},
                            options={"c": 1.0}, grid_param="n", grid_values=list(range(10, 251, 20))),
    "linreg_correlated": dict(name="linreg_correlated", methods=["stg", "hc", "dnc", "lasso"], repetitions=100,
                              data={"d": 64, "noise_var": 0.25, "rho": 0.3},
                              model={"hidden": [], "weight_std": 0.1},
                              train={"lr": 0.1, "epochs": 2000, "optimizer": "sgd", "reg_rescale": False},
                              options={"c": 1.0}, grid_param="n", grid_values=list(range(10, 251, 20))),
    "stability": dict(name="stability", methods=["stg", "hc"], repetitions=20,
                      data={"n": 1500, "d": 20},
                      model={"hidden": [50, 20], "activation": "tanh", "weight_std": 0.316227766},
                      train=_nn_train(lam=0.1), options={"standardize": True}),
    "cox_synthetic": dict(name="cox_synthetic", methods=["stg"], repetitions=5,
                          data={"n": 1000, "d": 20, "informative_count": 2, "censor_frac": 0.3},
                          model={"hidden": [20, 10], "activation": "selu", "weight_std": 0.1},
                          train={"lr": 0.01, "epochs": 500, "optimizer": "adam", "lam": 0.5},
                          options={"standardize": True}),
    "mi_oracle": dict(name="mi_oracle", methods=["mi"], repetitions=1,
                      data={"n": 100000, "d": 6}, options={"subset_sizes": [1, 2]}),
}


def preset(name: str, **changes) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    import copy as _copy
    cfg = ExperimentConfig(**_copy.deepcopy(PRESETS[name]))
    for k, v in changes.items():
        setattr(cfg, k, v)
    return cfg.validate()


# --- data ------------------------------------------------------------------------

def make_dataset(cfg: ExperimentConfig, grid_value, rng: Rng):
    """Dataset for one cell; linear-regression experiments also return beta*."""
    data = dict(cfg.data)
    if cfg.grid_param == "n":
        data["n"] = int(grid_value)
    name = cfg.name
    if name in ("xor", "stability"):
        return datagen.gen_xor(rng=rng, **data), None
    if name == "mi_oracle":
        return datagen.gen_xor(rng=rng, test_frac=0.0, valid_frac=0.0, **data), None
    if name == "two_moons":
        return datagen.gen_two_moons(rng=rng, **data), None
    if name == "friedman":
        return datagen.gen_friedman_mod(rng=rng, **data), None
    if name == "madelon_like":
        return datagen.gen_madelon_like(rng=rng, **data), None
    if name in LINREG:
        data.setdefault("correlated", name == "linreg_correlated")
        ds, beta = datagen.gen_sparse_linear(rng=rng, **data)
        return ds, beta
    if name == "cox_synthetic":
        return datagen.gen_survival(rng=rng, **data), None
    if name == "custom_csv":
        data = dict(data)
        path = data.pop("path")
        target = data.pop("target", ())
        schema = datagen.CsvSchema(target=tuple(target) if isinstance(target, list) else
                                   ((target,) if target else ()), **data)
        return datagen.load_csv(path, schema), None
    raise ConfigError(f"no data generator for {name!r}")


def _standardize(X, train_idx):
    mean = X[train_idx].mean(axis=0)
    std = X[train_idx].std(axis=0)
    std[std == 0] = 1.0
    return (X - mean) / std


# --- one cell ----------------------------------------------------------------------

def _loss_kind(ds):
    return {"regression": "mse", "classification": "ce", "survival": "cox"}[ds.task]


def _train_config(cfg: ExperimentConfig, method: str, seed: int, lam, loss: str) -> optim.TrainConfig:
    kw = cfg.train_for(method)
    kw = {k: v for k, v in kw.items() if k not in ("alpha", "c")}
    kw.update(loss=loss, seed=seed)
    if lam is not None:
        kw["lam"] = lam
    try:
        return optim.TrainConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad [train] keys: {exc}") from None


def _lam_for(cfg, method, grid_value, n_train):
    if cfg.grid_param == "lam":
        return float(grid_value)
    if method == "lasso" and "alpha" in cfg.train_for("lasso"):
        return float(cfg.train_for("lasso")["alpha"])
    if cfg.name in LINREG:
        d = cfg.data.get("d", 64)
        k = cfg.data.get("k") or datagen.sparsity_for(d)
        alpha = baselines.alpha_schedule(n_train, d, k, cfg.data.get("noise_var", 0.25))
        if method == "lasso":
            return alpha
        c = float(grid_value) if cfg.grid_param == "c" else float(cfg.train_for(method).get("c", cfg.options.get("c", 1.0)))
        return c * alpha
    if method == "lasso":
        return float(cfg.train_for("lasso").get("lam", 0.01))
    return None


def _target_set(ds):
    # MADELON-like data: the linear combinations of informative columns count as relevant too
    return np.asarray(ds.meta.get("relevant", ds.informative), dtype=int)


def _selection_metrics(rep: RunReport, weights, selected, informative, d):
    selected = np.asarray(selected, dtype=int)
    rep.n_selected = int(selected.size)
    rep.selected = " ".join(str(int(i)) for i in selected)
    if informative.size:
        rep.precision, rep.recall, rep.f1 = metrics.selection_f1(selected, informative, d)
        rep.median_rank = metrics.median_rank(weights, informative)
        rep.ifwr = metrics.ifwr(weights, informative) if np.sum(weights) > 0 else 0.0
        rep.recovered = metrics.support_recovery(selected, informative)


def _run_nn(cfg, method, ds, X, rep: RunReport, lam):
    tr, va, te = ds.split["train"], ds.split.get("valid", []), ds.split.get("test", [])
    loss = _loss_kind(ds)
    n_out = ds.n_classes if loss == "ce" else 1
    m = cfg.model
    spec = N.NetSpec(ds.n_features, tuple(m.get("hidden", ())), n_out,
                     activation=m.get("activation", "tanh"), gate_kind=method,
                     sigma=m.get("sigma", 0.5), weight_std=m.get("weight_std", 0.1),
                     hc_beta=m.get("hc_beta", 2 / 3), hc_zeta=m.get("hc_zeta", 1.1),
                     hc_tau=m.get("hc_tau", -0.1))
    tcfg = _train_config(cfg, method, rep.train_seed, lam, loss)
    rep.lam = tcfg.lam
    rng = Rng(rep.train_seed)
    network = N.init(spec, rng.child("init"))
    valid = (X[va], ds.y[va]) if len(va) else None
    network, trace = optim.train(network, (X[tr], ds.y[tr]), tcfg, valid)
    rep.epochs_run = trace.epochs
    rep.reopen_events = len(optim.second_chance_probe(trace))
    if not cfg.options.get("keep_snapshots", False):
        trace.snapshots = []
    rep.trace = trace
    zhat = gates.eval_gate(network.gate)
    selected = gates.selected_features(zhat, tcfg.cutoff)
    _selection_metrics(rep, zhat, selected, _target_set(ds), ds.n_features)
    ev = te if len(te) else tr
    out = N.predict(network, X[ev])
    _predictive_metrics(rep, ds, out, ev, tr)


def _predictive_metrics(rep, ds, out, ev, tr):
    if ds.task == "classification":
        pred = out.argmax(axis=1) if out.ndim == 2 and out.shape[1] > 1 else (out.ravel() > 0).astype(int)
        rep.accuracy = metrics.accuracy(pred, ds.y[ev])
    elif ds.task == "regression":
        rep.rmse = metrics.rmse(out.ravel(), ds.y[ev])
        # all gates closed leaves a constant predictor; the train mean is its best value
        rep.baseline_rmse = metrics.rmse(np.full(len(ev), ds.y[tr].mean()), ds.y[ev])
    else:
        rep.c_index = metrics.concordance_index(out.ravel(), ds.y[ev])


def _run_lasso(cfg, ds, X, rep: RunReport, alpha):
    if ds.task == "survival":
        raise ConfigError("lasso baseline supports regression and classification only")
    tr, te = ds.split["train"], ds.split.get("test", [])
    y = ds.y[tr].astype(float)
    if ds.task == "classification":
        y = 2.0 * y - 1.0
    xm, ym = X[tr].mean(axis=0), y.mean()
    opts = cfg.train_for("lasso")
    res = baselines.lasso_fit(X[tr] - xm, y - ym, alpha, tol=opts.get("tol", 1e-8),
                              max_iter=opts.get("max_iter", 100_000))
    rep.lam = alpha
    rep.epochs_run = res.n_iter
    weights = np.abs(res.coef)
    _selection_metrics(rep, weights, res.support, _target_set(ds), ds.n_features)
    ev = te if len(te) else tr
    out = (X[ev] - xm) @ res.coef + ym
    _predictive_metrics(rep, ds, out[:, None], ev, tr)


def _run_mi(cfg, ds, rep: RunReport):
    sizes = cfg.options.get("subset_sizes", [1, 2])
    best_subset, best_mi = None, None
    for k in sizes:
        subset, mi, table = metrics.mi_bruteforce(ds.X, ds.y, k, return_all=True)
        if k == 1:
            rep.mi_k1_max = max(table.values())
        if k == max(sizes):
            best_subset, best_mi = subset, mi
    rep.mi_best = best_mi
    _selection_metrics(rep, np.isin(np.arange(ds.n_features), best_subset).astype(float),
                       best_subset, ds.informative, ds.n_features)


def run_cell(cfg: ExperimentConfig, method: str, grid_index: int, rep_index: int) -> RunReport:
    grid_value = cfg.grid_values[grid_index]
    data_index = grid_index if cfg.grid_param == "n" else 0
    data_seed = derive_seed(cfg.seed, "data", data_index, rep_index)
    train_seed = derive_seed(cfg.seed, method, grid_index, rep_index)
    rep = RunReport(cfg.name, method, cfg.grid_param, grid_index,
                    "" if grid_value is None else grid_value, rep_index, data_seed, train_seed)
    start = time.perf_counter()
    try:
        ds, _ = make_dataset(cfg, grid_value, Rng(data_seed))
        rep.n_train = int(len(ds.split["train"]))
        X = ds.X
        if cfg.options.get("standardize", False):
            X = _standardize(X, ds.split["train"])
        if method == "mi":
            _run_mi(cfg, ds, rep)
        elif method == "lasso":
            _run_lasso(cfg, ds, X, rep, _lam_for(cfg, method, grid_value, rep.n_train))
        else:
            _run_nn(cfg, method, ds, X, rep, _lam_for(cfg, method, grid_value, rep.n_train))
    except ConfigError:
        raise
    except (StgError, ArithmeticError, np.linalg.LinAlgError) as exc:
        rep.status = "failed"
        rep.error = f"{type(exc).__name__}: {exc}"
        log.warning("cell %s/%s/%s failed: %s", method, grid_index, rep_index, rep.error)
    rep.runtime = time.perf_counter() - start
    return rep


def _check_runnable(cfg: ExperimentConfig):
    cfg.validate()
    if cfg.name == "mi_oracle" and set(cfg.methods) != {"mi"}:
        raise ConfigError("mi_oracle runs only the 'mi' method")
    if cfg.name != "mi_oracle" and "mi" in cfg.methods:
        raise ConfigError("the 'mi' method belongs to the mi_oracle experiment")
    if cfg.name == "cox_synthetic" and "lasso" in cfg.methods:
        raise ConfigError("lasso baseline does not support survival targets")
    for m in cfg.methods:
        if m in NN_METHODS:
            _train_config(cfg, m, 0, None, "mse").validate()


def _cell_job(args):
    cfg, method, g, r = args
    return run_cell(cfg, method, g, r)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Run every (method, grid point, repetition) cell; output order is fixed."""
    _check_runnable(cfg)
    cells = [(cfg, m, g, r) for m in cfg.methods for g in range(len(cfg.grid_values))
             for r in range(cfg.repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_cell_job, cells))
    return [_cell_job(c) for c in cells]


# --- summaries ----------------------------------------------------------------------

def _num(v):
    if v is None or v == "":
        return None
    try:
        x = float(v)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


def _as_row(r):
    return r.to_row() if isinstance(r, RunReport) else dict(r)


def summarize(reports, group_by=("method", "grid_value")) -> list:
    """Per-group mean/median/std of each metric, recovery probability and selection stability."""
    rows = [_as_row(r) for r in reports]
    if not rows:
        raise ValueError("no reports to summarize")
    groups = {}
    for row in rows:
        key = tuple(str(row.get(k, "")) for k in group_by)
        groups.setdefault(key, []).append(row)
    out = []
    for key, members in groups.items():
        ok = [m for m in members if m.get("status", "ok") == "ok"]
        s = dict(zip(group_by, key))
        s["n_runs"] = len(ok)
        s["n_excluded"] = len(members) - len(ok)
        for metric in SUMMARY_METRICS:
            vals = [v for v in (_num(m.get(metric)) for m in ok) if v is not None]
            if vals:
                arr = np.array(vals)
                s[f"{metric}_mean"] = float(arr.mean())
                s[f"{metric}_median"] = float(np.median(arr))
                s[f"{metric}_std"] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            else:
                s[f"{metric}_mean"] = s[f"{metric}_median"] = s[f"{metric}_std"] = ""
        flags = [v for v in (_num(m.get("recovered")) for m in ok) if v is not None]
        s["recovery_prob"] = float(np.mean(flags)) if flags else ""
        if len(ok) >= 2:
            sets = [[int(t) for t in str(m.get("selected", "")).split()] for m in ok]
            s["union_size"], s["size_var"], s["jaccard"] = metrics.selection_stability(sets)
        else:
            s["union_size"] = s["size_var"] = s["jaccard"] = ""
        out.append(s)
    return out


def read_runs(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# --- output -------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating, np.integer)):
        return repr(v.item())
    return "" if v is None else str(v)


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write {path}: {exc}") from exc


def runs_csv(reports) -> str:
    return _csv_text([_as_row(r) for r in reports], RUN_COLUMNS)


def summary_csv(summaries) -> str:
    if not summaries:
        return ""
    columns = list(summaries[0].keys())
    return _csv_text(summaries, columns)


def emit(reports, summaries, outdir, cfg: ExperimentConfig | None = None, traces: bool = True) -> dict:
    """Write runs.csv, summary.csv, config.echo and per-run trace CSVs."""
    outdir = Path(outdir)
    paths = {"runs": outdir / "runs.csv", "summary": outdir / "summary.csv"}
    _write_atomic(paths["runs"], runs_csv(reports))
    _write_atomic(paths["summary"], summary_csv(summaries))
    if cfg is not None:
        paths["config"] = outdir / "config.echo"
        _write_atomic(paths["config"], dump_config(cfg))
    if traces:
        for r in reports:
            if isinstance(r, RunReport) and r.trace is not None:
                name = f"{r.method}_g{r.grid_index:03d}_r{r.rep:04d}.csv"
                rows = list(r.trace.rows())
                _write_atomic(outdir / "traces" / name,
                              _csv_text(rows, ["epoch", "train_loss", "valid_loss", "reg_value", "open_gates"]))
    return paths
