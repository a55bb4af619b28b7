"""Prediction, selection and survival metrics, plus a brute-force MI search."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import DegenerateInputError, DomainError, ShapeError
from .losses import survival_arrays


def _pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"length mismatch {a.shape[0]} vs {b.shape[0]}")
    return a, b


def accuracy(pred, target) -> float:
    pred, target = _pair(pred, target)
    return float(np.mean(pred.ravel() == target.ravel()))


def rmse(pred, target) -> float:
    pred, target = _pair(np.asarray(pred, float).ravel(), np.asarray(target, float).ravel())
    return float(np.sqrt(np.mean((pred - target) ** 2)))


def selection_f1(selected, informative, d=None):
    """(precision, recall, F1) of a selected index set against the true one."""
    sel = set(int(i) for i in selected)
    inf = set(int(i) for i in informative)
    if d is not None and any(not 0 <= i < d for i in sel | inf):
        raise DomainError("indices must lie in [0, D)")
    hit = len(sel & inf)
    precision = hit / len(sel) if sel else 0.0
    recall = hit / len(inf) if inf else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def feature_ranks(weights) -> np.ndarray:
    """1-based rank of each feature; largest weight first, ties by lower index."""
    w = np.asarray(weights, dtype=float)
    order = np.lexsort((np.arange(w.size), -w))
    ranks = np.empty(w.size, dtype=int)
    ranks[order] = np.arange(1, w.size + 1)
    return ranks


def median_rank(weights, informative) -> float:
    informative = np.asarray(list(informative), dtype=int)
    if informative.size == 0:
        raise DomainError("need at least one informative feature")
    return float(np.median(feature_ranks(weights)[informative]))


def ifwr(weights, informative) -> float:
    """Share of total feature weight carried by the informative features."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0:
        raise DegenerateInputError("weights sum to zero")
    return float(w[np.asarray(list(informative), dtype=int)].sum() / total)


def support_recovery(selected, true_support, tolerance: int = 0) -> int:
    """1 if the symmetric difference has at most ``tolerance`` elements (0: exact match)."""
    diff = set(int(i) for i in selected) ^ set(int(i) for i in true_support)
    return int(len(diff) <= tolerance)


def support_fraction(selected, true_support) -> float:
    """Share of true support indices that were selected."""
    true = set(int(i) for i in true_support)
    return len(true & set(int(i) for i in selected)) / len(true) if true else 1.0


def concordance_index(scores, targets) -> float:
    """Harrell's C for risk scores: higher score should mean shorter survival.

    A pair is comparable when the member with the shorter time had an
    observed event. Tied scores count one half.
    """
    time, event = survival_arrays(targets)
    s = np.asarray(scores, dtype=float).ravel()
    if s.shape[0] != time.shape[0]:
        raise ShapeError("one score per subject required")
    ev_idx = np.flatnonzero(event)
    # i (event) vs every j with T_j > T_i
    later = time[None, :] > time[ev_idx, None]
    n_pairs = int(later.sum())
    if n_pairs == 0:
        raise DegenerateInputError("no comparable pairs")
    si = s[ev_idx, None]
    concordant = (si > s[None, :]) & later
    tied = (si == s[None, :]) & later
    return float((concordant.sum() + 0.5 * tied.sum()) / n_pairs)


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def selection_stability(runs):
    """(union size, sample variance of set sizes, mean pairwise Jaccard)."""
    runs = [set(int(i) for i in r) for r in runs]
    if len(runs) < 2:
        raise DomainError("need at least two runs")
    union = set().union(*runs)
    sizes = np.array([len(r) for r in runs], dtype=float)
    jac = [jaccard(a, b) for a, b in itertools.combinations(runs, 2)]
    return len(union), float(sizes.var(ddof=1)), float(np.mean(jac))


def _entropy_bits(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def plugin_mi(X_sub, y, weights=None) -> float:
    """Plug-in mutual information (bits) between discrete columns and a label."""
    X_sub = np.asarray(X_sub)
    y = np.asarray(y).ravel()
    if X_sub.ndim == 1:
        X_sub = X_sub[:, None]
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    _, x_codes = np.unique(X_sub, axis=0, return_inverse=True)
    x_codes = x_codes.ravel()
    _, y_codes = np.unique(y, return_inverse=True)
    y_codes = y_codes.ravel()
    joint = np.zeros((x_codes.max() + 1, y_codes.max() + 1))
    np.add.at(joint, (x_codes, y_codes), w)
    return max(0.0, _entropy_bits(joint.sum(1)) + _entropy_bits(joint.sum(0)) - _entropy_bits(joint.ravel()))


MAX_MI_FEATURES = 16
MAX_MI_SUBSET = 4


def mi_bruteforce(X, y, subset_size: int, weights=None, return_all: bool = False):
    """Exhaustive search for the size-k column subset with maximal plug-in MI.

    Ties go to the lexicographically first subset. ``weights`` allows exact
    population tables (one row per outcome, weight = probability).
    """
    X = np.asarray(X)
    d = X.shape[1]
    if d > MAX_MI_FEATURES or subset_size > MAX_MI_SUBSET or subset_size < 1 or subset_size > d:
        raise DomainError(f"enumeration limited to D <= {MAX_MI_FEATURES}, 1 <= k <= {MAX_MI_SUBSET}")
    best, best_mi, table = None, -math.inf, {}
    for subset in itertools.combinations(range(d), subset_size):
        mi = plugin_mi(X[:, subset], y, weights)
        table[subset] = mi
        if mi > best_mi + 1e-12:
            best, best_mi = subset, mi
    if return_all:
        return best, best_mi, table
    return best, best_mi
