"""Seeded synthetic benchmarks and a CSV loader.

Every generator returns a :class:`Dataset` whose ``informative`` field holds
the 0-based indices of the truly relevant columns.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, SchemaError
from .ndcore import Rng

REGRESSION = "regression"
CLASSIFICATION = "classification"
SURVIVAL = "survival"


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray  # (N,) values/labels, or (N, 2) [time, event] for survival
    task: str
    informative: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    split: dict = field(default_factory=dict)
    n_classes: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.informative = np.asarray(self.informative, dtype=int)
        if self.informative.size and (self.informative.min() < 0 or self.informative.max() >= self.n_features):
            raise DomainError("informative indices out of range")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def part(self, name):
        idx = self.split[name]
        return self.X[idx], self.y[idx]


def split_indices(n, test_frac, valid_frac, rng: Rng | None = None):
    """Hold out ``test_frac`` of the rows, then ``valid_frac`` of the rest."""
    order = np.arange(n) if rng is None else rng.permutation(n)
    n_test = int(round(test_frac * n))
    n_valid = int(round(valid_frac * (n - n_test)))
    return {"test": np.sort(order[:n_test]),
            "valid": np.sort(order[n_test:n_test + n_valid]),
            "train": np.sort(order[n_test + n_valid:])}


def split_counts(n, n_train, n_valid):
    idx = np.arange(n)
    return {"train": idx[:n_train], "valid": idx[n_train:n_train + n_valid],
            "test": idx[n_train + n_valid:]}


def gen_xor(n=1500, d=10, rng: Rng | None = None, test_frac=0.7, valid_frac=0.1) -> Dataset:
    """Fair Bernoulli bits; the label is x1 XOR x2."""
    if d < 2:
        raise DomainError("XOR needs at least 2 features")
    rng = rng or Rng(0)
    X = rng.bernoulli(0.5, size=(n, d))
    y = np.logical_xor(X[:, 0] > 0, X[:, 1] > 0).astype(int)
    return Dataset(X, y, CLASSIFICATION, [0, 1], split_indices(n, test_frac, valid_frac), 2)


def moons_points(t, upper: bool):
    t = np.asarray(t, dtype=float)
    if upper:
        return np.column_stack([np.cos(t), np.sin(t)])
    return np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])


def gen_two_moons(n=1500, d=10, rng: Rng | None = None, noise_var=0.1,
                  test_frac=0.7, valid_frac=0.1) -> Dataset:
    if d < 2:
        raise DomainError("two moons needs at least 2 features")
    rng = rng or Rng(0)
    n_up = (n + 1) // 2
    pts = np.vstack([moons_points(rng.uniform(0, math.pi, n_up), True),
                     moons_points(rng.uniform(0, math.pi, n - n_up), False)])
    pts += rng.normal(0.0, math.sqrt(noise_var), size=pts.shape)
    labels = np.r_[np.zeros(n_up, dtype=int), np.ones(n - n_up, dtype=int)]
    order = rng.permutation(n)
    X = np.hstack([pts, rng.normal(0.0, 1.0, size=(n, d - 2))])[order]
    return Dataset(X, labels[order], CLASSIFICATION, [0, 1],
                   split_indices(n, test_frac, valid_frac), 2)


def friedman_response(X, xi):
    """Raw response 10 sin(x1 x2)^2 + 20 x3^2 + 10 sign(x4 x5 - 0.2) + xi."""
    X = np.asarray(X, dtype=float)
    return (10.0 * np.sin(X[:, 0] * X[:, 1]) ** 2 + 20.0 * X[:, 2] ** 2
            + 10.0 * np.sign(X[:, 3] * X[:, 4] - 0.2) + xi)


def gen_friedman_mod(n=600, d=500, rng: Rng | None = None, noise_std=1.0,
                     n_train=None, n_valid=None) -> Dataset:
    """Uniform[0,1] inputs, 5 informative columns; y centred then scaled by max |y - mean|."""
    if d < 5:
        raise DomainError("Friedman variant needs at least 5 features")
    rng = rng or Rng(0)
    X = rng.uniform(0.0, 1.0, size=(n, d))
    raw = friedman_response(X, rng.normal(0.0, noise_std, size=n))
    mean = float(raw.mean())
    scale = float(np.max(np.abs(raw - mean)))
    y = (raw - mean) / scale
    if n_train is None:
        n_train, n_valid = int(round(0.75 * n)), int(round(n / 12))
    return Dataset(X, y, REGRESSION, np.arange(5), split_counts(n, n_train, n_valid),
                   meta={"y_mean": mean, "y_scale": scale})


def gen_madelon_like(n=1500, n_informative=5, n_combined=15, n_nuisance=480, flip_frac=0.01,
                     rng: Rng | None = None, class_sep=1.0, feature_noise=1.0,
                     test_frac=0.2, valid_frac=0.1) -> Dataset:
    """Two Gaussian clusters per class at hypercube vertices of the informative space.

    Columns: informative, then random linear combinations of them, then pure
    noise. Every non-nuisance column also gets N(0, feature_noise^2) noise.
    ``meta['relevant']`` lists informative plus combined columns.
    """
    if min(n_informative, n_combined, n_nuisance) < 0 or n_informative < 1 or n < 1:
        raise DomainError("invalid MADELON-like counts")
    if not 0 <= flip_frac <= 1:
        raise DomainError("flip_frac must be in [0, 1]")
    rng = rng or Rng(0)
    n_clusters = 4
    n_vertices = 2 ** n_informative
    picks = rng.choice(n_vertices, size=min(n_clusters, n_vertices), replace=False)
    bits = (picks[:, None] >> np.arange(n_informative)) & 1
    centroids = (2.0 * bits - 1.0) * class_sep
    n_clusters = len(picks)
    cluster = np.arange(n) % n_clusters
    labels = cluster % 2
    base = rng.normal(0.0, 1.0, size=(n, n_informative))
    informative = np.empty_like(base)
    for c in range(n_clusters):
        A = 2.0 * rng.uniform(size=(n_informative, n_informative)) - 1.0
        rows = cluster == c
        informative[rows] = base[rows] @ A + centroids[c]
    B = 2.0 * rng.uniform(size=(n_informative, n_combined)) - 1.0
    combined = informative @ B
    clean = np.hstack([informative, combined])
    noisy = clean + feature_noise * rng.normal(0.0, 1.0, size=clean.shape) if feature_noise else clean
    X = np.hstack([noisy, rng.normal(0.0, 1.0, size=(n, n_nuisance))])
    n_flip = int(round(flip_frac * n))
    flipped = np.sort(rng.choice(n, size=n_flip, replace=False)) if n_flip else np.array([], dtype=int)
    labels = labels.copy()
    labels[flipped] = 1 - labels[flipped]
    order = rng.permutation(n)
    return Dataset(X[order], labels[order], CLASSIFICATION, np.arange(n_informative),
                   split_indices(n, test_frac, valid_frac), 2,
                   meta={"relevant": list(range(n_informative + n_combined)),
                         "n_flipped": n_flip, "combination": B,
                         "clean": clean[order]})


def sparsity_for(d: int) -> int:
    """k = ceil(0.4 D^0.75)."""
    return int(math.ceil(0.4 * d ** 0.75 - 1e-12))


def toeplitz_cov(d: int, rho: float = 0.3) -> np.ndarray:
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def gen_sparse_linear(n, d=64, correlated=False, noise_var=0.25, rng: Rng | None = None,
                      k=None, rho=0.3):
    """y = X beta* + w with a random k-sparse, +-1 valued beta*."""
    rng = rng or Rng(0)
    k = sparsity_for(d) if k is None else k
    Z = rng.normal(0.0, 1.0, size=(n, d))
    X = Z @ np.linalg.cholesky(toeplitz_cov(d, rho)).T if correlated else Z
    support = np.sort(rng.choice(d, size=k, replace=False))
    beta = np.zeros(d)
    beta[support] = np.where(rng.uniform(size=k) < 0.5, -1.0, 1.0)
    w = rng.normal(0.0, math.sqrt(noise_var), size=n) if noise_var > 0 else np.zeros(n)
    y = X @ beta + w
    split = {"train": np.arange(n), "valid": np.array([], dtype=int), "test": np.array([], dtype=int)}
    return Dataset(X, y, REGRESSION, support, split, meta={"noise_var": noise_var}), beta


def _censor_rate(rates, frac):
    # choose c with mean_i c / (c + r_i) = frac, the expected censored share
    lo, hi = 1e-12, 1e12
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if np.mean(mid / (mid + rates)) < frac:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def gen_survival(n=1000, d=20, informative_count=2, censor_frac=0.3, rng: Rng | None = None,
                 coef=1.0, test_frac=0.2, valid_frac=0.2) -> Dataset:
    """Exponential proportional-hazards times with independent exponential censoring."""
    if not 0 <= informative_count <= d:
        raise DomainError("informative_count must be in [0, D]")
    if not 0 <= censor_frac < 1:
        raise DomainError("censor_frac must be in [0, 1)")
    rng = rng or Rng(0)
    X = rng.normal(0.0, 1.0, size=(n, d))
    informative = np.sort(rng.choice(d, size=informative_count, replace=False))
    theta = np.zeros(d)
    theta[informative] = coef * np.where(rng.uniform(size=informative_count) < 0.5, -1.0, 1.0)
    rates = np.exp(X @ theta)
    T = rng.exponential(rates)
    if censor_frac > 0:
        C = rng.exponential(np.full(n, _censor_rate(rates, censor_frac)))
    else:
        C = np.full(n, np.inf)
    time = np.minimum(T, C)
    event = (T <= C).astype(float)
    y = np.column_stack([time, event])
    return Dataset(X, y, SURVIVAL, informative, split_indices(n, test_frac, valid_frac),
                   meta={"theta": theta})


# --- CSV ---------------------------------------------------------------------

@dataclass
class CsvSchema:
    task: str = REGRESSION
    target: tuple = ()  # column names; default: last column, or last two for survival
    test_frac: float = 0.2
    valid_frac: float = 0.1
    split_seed: int = 0


def _fmt(v):
    return repr(float(v))


def write_csv(ds: Dataset, path) -> None:
    names = [f"x{i + 1}" for i in range(ds.n_features)]
    if ds.task == SURVIVAL:
        names += ["time", "event"]
        targets = ds.y
    else:
        names += ["y"]
        targets = ds.y.reshape(-1, 1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row, tgt in zip(ds.X, targets):
            tail = [int(t) if ds.task == CLASSIFICATION or (ds.task == SURVIVAL and j == 1) else _fmt(t)
                    for j, t in enumerate(tgt)]
            w.writerow([_fmt(v) for v in row] + tail)


def load_csv(path, schema: CsvSchema | None = None) -> Dataset:
    schema = schema or CsvSchema()
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise SchemaError(f"{path}:{line_no}: non-numeric cell {bad!r}") from None
    n_tgt = 2 if schema.task == SURVIVAL else 1
    targets = list(schema.target) if schema.target else header[-n_tgt:]
    if len(targets) != n_tgt:
        raise SchemaError(f"{schema.task} data needs {n_tgt} target column(s)")
    missing = [t for t in targets if t not in header]
    if missing:
        raise SchemaError(f"{path}: missing target column(s) {missing}")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    t_idx = [header.index(t) for t in targets]
    f_idx = [i for i in range(len(header)) if i not in t_idx]
    X = data[:, f_idx]
    n_classes = 0
    if schema.task == SURVIVAL:
        y = data[:, t_idx]
        if not np.all(np.isin(y[:, 1], (0.0, 1.0))):
            line = 2 + int(np.flatnonzero(~np.isin(y[:, 1], (0.0, 1.0)))[0])
            raise SchemaError(f"{path}:{line}: event must be 0 or 1")
        if np.any(y[:, 0] <= 0):
            line = 2 + int(np.flatnonzero(y[:, 0] <= 0)[0])
            raise SchemaError(f"{path}:{line}: survival time must be positive")
    elif schema.task == CLASSIFICATION:
        y = data[:, t_idx[0]]
        if np.any(y != np.round(y)) or np.any(y < 0):
            raise SchemaError(f"{path}: class labels must be nonnegative integers")
        y = y.astype(int)
        n_classes = int(y.max()) + 1 if y.size else 0
    else:
        y = data[:, t_idx[0]]
    split = split_indices(len(rows), schema.test_frac, schema.valid_frac, Rng(schema.split_seed))
    return Dataset(X, y, schema.task, [], split, n_classes,
                   meta={"feature_names": [header[i] for i in f_idx], "source": str(path)})


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
