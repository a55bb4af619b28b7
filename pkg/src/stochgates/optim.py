"""Parameter updates, the gated-network training loop and trace analysis."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import gates as G
from . import losses
from . import net as N
from .errors import ConfigError, DivergenceError, ShapeError
from .ndcore import Rng


def sgd_step(params, grads, lr, inplace=False):
    if len(params) != len(grads):
        raise ShapeError("params and grads differ in length")
    out = []
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ShapeError(f"param {np.shape(p)} vs grad {np.shape(g)}")
        if inplace:
            p -= lr * g
            out.append(p)
        else:
            out.append(p - lr * g)
    return out


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8, inplace=False):
    """Bias-corrected Adam; returns (state, params). The state is updated in place."""
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        m = state.m[i]
        v = state.v[i]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        step = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        if inplace:
            p -= step
            out.append(p)
        else:
            out.append(p - step)
    return state, out


LOSSES = ("mse", "ce", "cox")


@dataclass
class TrainConfig:
    loss: str = "mse"
    lam: float = 0.0
    lr: float = 0.1
    optimizer: str = "sgd"
    epochs: int = 100
    batch_size: int | None = None  # None: full batch
    seed: int = 0
    cutoff: float = 0.0
    patience: int | None = None
    k_samples: int = 1
    per_example_gates: bool = False
    reg_rescale: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    snapshot_every: int | None = None

    def validate(self, n_train: int | None = None):
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError("optimizer must be sgd or adam")
        if self.lam < 0 or not self.lr > 0 or self.epochs < 1 or self.k_samples < 1:
            raise ConfigError("need lam >= 0, lr > 0, epochs >= 1, k_samples >= 1")
        if self.batch_size is not None and n_train is not None and not 1 <= self.batch_size <= n_train:
            raise ConfigError(f"batch size must be in [1, {n_train}]")


@dataclass
class TrainTrace:
    train_loss: list = field(default_factory=list)
    valid_loss: list = field(default_factory=list)
    reg_value: list = field(default_factory=list)
    open_gates: list = field(default_factory=list)
    snapshot_epochs: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    best_epoch: int | None = None

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def gate_history(self) -> np.ndarray:
        return np.array(self.snapshots)

    def rows(self):
        for i in range(self.epochs):
            yield {"epoch": i + 1, "train_loss": self.train_loss[i],
                   "valid_loss": self.valid_loss[i], "reg_value": self.reg_value[i],
                   "open_gates": self.open_gates[i]}

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "valid_loss", "reg_value", "open_gates"],
                               lineterminator="\n")
            w.writeheader()
            for row in self.rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def make_loss(cfg: TrainConfig, y):
    """Loss closure for one fixed target batch.

    The Cox loss is divided by the batch size so learning rates transfer
    across sample sizes.
    """
    if cfg.loss == "mse":
        y = np.asarray(y, dtype=float).reshape(-1, 1)
        return lambda out, _y=y: losses.mse(out, _y)
    if cfg.loss == "ce":
        labels = np.asarray(y).astype(int)
        return lambda out, _l=labels: losses.cross_entropy(out, _l)
    time, event = losses.survival_arrays(y)
    if not event.any():
        return lambda out: (0.0, np.zeros_like(out))
    rs = losses.CoxRiskSets(time, event)
    n = len(time)

    def cox(out):
        v, g = rs.nll(out)
        return v / n, g.reshape(out.shape) / n
    return cox


def _take(y, idx):
    return y[idx] if isinstance(y, np.ndarray) else np.asarray(y)[idx]


def evaluate_loss(net: N.Network, x, y, cfg: TrainConfig) -> float:
    out = N.predict(net, x)
    return float(make_loss(cfg, y)(out)[0])


def train(net: N.Network, train_data, cfg: TrainConfig, valid_data=None):
    """Minimise loss + lam * (1/D) * penalty over (theta, gate parameters).

    ``train_data``/``valid_data`` are ``(X, y)`` pairs. Returns the trained
    network and its TrainTrace. With ``cfg.patience`` set and validation data
    given, training stops after that many epochs without improvement and the
    best-validation parameters are returned.
    """
    x_tr, y_tr = train_data
    x_tr = np.asarray(x_tr, dtype=float)
    y_tr = np.asarray(y_tr)
    n = x_tr.shape[0]
    cfg.validate(n)
    rng = Rng(cfg.seed)
    shuffle_rng = rng.child("shuffle")
    gate_rng = rng.child("gates")
    batch = n if cfg.batch_size is None else cfg.batch_size
    full_batch = batch >= n
    snap_every = cfg.snapshot_every or (1 if net.n_features <= 1024 else 10)
    params = net.params()
    adam = AdamState.zeros_like(params) if cfg.optimizer == "adam" else None
    trace = TrainTrace()
    full_loss = make_loss(cfg, y_tr) if full_batch else None
    best_val, best_net, since_best = math.inf, None, 0

    for epoch in range(1, cfg.epochs + 1):
        if full_batch:
            batches = [None]
        else:
            order = shuffle_rng.permutation(n)
            batches = [order[i:i + batch] for i in range(0, n, batch)]
        total = 0.0
        for idx in batches:
            if idx is None:
                xb, loss_fn = x_tr, full_loss
            else:
                xb, loss_fn = x_tr[idx], make_loss(cfg, _take(y_tr, idx))
            # overflow on a diverging run is caught just below
            with np.errstate(over="ignore", invalid="ignore"):
                data_loss, grads = _batch_grad(net, xb, loss_fn, cfg, gate_rng)
            if not math.isfinite(data_loss):
                raise DivergenceError(epoch, data_loss)
            if adam is None:
                sgd_step(params, grads, cfg.lr, inplace=True)
            else:
                adam_step(adam, params, grads, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, inplace=True)
            total += data_loss * (1 if idx is None else len(idx))
        train_loss = total / n
        if not math.isfinite(train_loss) or not np.all(np.isfinite(net.gate.mu)):
            raise DivergenceError(epoch, train_loss)
        reg_value, _ = G.gate_reg(net.gate)
        zhat = G.eval_gate(net.gate)
        trace.train_loss.append(train_loss)
        trace.reg_value.append(reg_value)
        trace.open_gates.append(int(np.sum(zhat > cfg.cutoff)))
        if epoch % snap_every == 0 or epoch == 1:
            trace.snapshot_epochs.append(epoch)
            trace.snapshots.append(zhat.copy())
        if valid_data is not None:
            val = evaluate_loss(net, valid_data[0], valid_data[1], cfg)
            trace.valid_loss.append(val)
            if cfg.patience is not None:
                if val < best_val:
                    best_val, best_net, since_best = val, net.copy(), 0
                    trace.best_epoch = epoch
                else:
                    since_best += 1
                    if since_best >= cfg.patience:
                        break
        else:
            trace.valid_loss.append(float("nan"))

    if best_net is not None:
        return best_net, trace
    return net, trace


def _batch_grad(net, xb, loss_fn, cfg, gate_rng):
    if cfg.k_samples == 1:
        _, data_loss, bundle, _ = N.loss_and_grad(net, xb, None, lambda out, _y: loss_fn(out), cfg.lam,
                                                  rng=gate_rng, rescale=cfg.reg_rescale,
                                                  per_example=cfg.per_example_gates)
        return data_loss, bundle.as_list()
    acc, loss_acc = None, 0.0
    for _ in range(cfg.k_samples):
        _, data_loss, bundle, _ = N.loss_and_grad(net, xb, None, lambda out, _y: loss_fn(out), cfg.lam,
                                                  rng=gate_rng, rescale=cfg.reg_rescale,
                                                  per_example=cfg.per_example_gates)
        g = bundle.as_list()
        acc = g if acc is None else [a + b for a, b in zip(acc, g)]
        loss_acc += data_loss
    k = cfg.k_samples
    return loss_acc / k, [a / k for a in acc]


def second_chance_probe(trace, epochs=None):
    """Find gates that close (value 0) and later reopen (value > 0).

    ``trace`` is a TrainTrace, a (T, D) array of gate snapshots or a single
    length-T series. Returns ``(feature, close_epoch, reopen_epoch)`` tuples
    with 1-based epochs taken from the trace (or 1..T for raw arrays).
    """
    if isinstance(trace, TrainTrace):
        hist = trace.gate_history()
        epochs = trace.snapshot_epochs
    else:
        hist = np.asarray(trace, dtype=float)
    if hist.ndim == 1:
        hist = hist[:, None]
    if hist.size == 0:
        return []
    if epochs is None:
        epochs = list(range(1, hist.shape[0] + 1))
    events = []
    for d in range(hist.shape[1]):
        closed_at = None
        for t, value in enumerate(hist[:, d]):
            if value <= 0.0:
                if closed_at is None:
                    closed_at = epochs[t]
            elif closed_at is not None:
                events.append((d, closed_at, epochs[t]))
                closed_at = None
    return events
