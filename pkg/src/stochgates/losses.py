"""Losses with analytic gradients w.r.t. the network output.

Each function returns ``(value, grad)`` where ``grad`` has the shape of the
prediction argument.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DegenerateInputError, DomainError, ShapeError


def mse(pred, target):
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        if pred.size == target.size:
            pred = pred.reshape(target.shape)
        else:
            raise ShapeError(f"pred {pred.shape} vs target {target.shape}")
    resid = pred - target
    n = resid.shape[0]
    return float(np.sum(resid * resid) / n), 2.0 * resid / n


def cross_entropy(logits, labels, n_classes: int | None = None):
    """Mean softmax cross-entropy; ``logits`` is (N, C) and ``labels`` ints."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    labels = np.asarray(labels).astype(int).ravel()
    n, c = logits.shape
    if n_classes is not None and n_classes != c:
        raise ShapeError(f"expected {n_classes} logit columns, got {c}")
    if labels.shape[0] != n:
        raise ShapeError("one label per logit row required")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise DomainError(f"labels must lie in [0, {c})")
    logp = logits - special.logsumexp(logits, axis=1, keepdims=True)
    value = -float(np.mean(logp[np.arange(n), labels]))
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return value, grad / n


@dataclass(frozen=True)
class SurvivalTarget:
    time: float
    event: bool

    def __post_init__(self):
        if not self.time > 0:
            raise DomainError("survival time must be positive")


def survival_arrays(targets):
    """Split a SurvivalTarget sequence, or an (N, 2) array, into (time, event)."""
    if isinstance(targets, np.ndarray) and targets.ndim == 2:
        return targets[:, 0].astype(float), targets[:, 1].astype(bool)
    time = np.array([t.time for t in targets], dtype=float)
    event = np.array([t.event for t in targets], dtype=bool)
    return time, event


class CoxRiskSets:
    """Sorted order and Breslow tie groups for a fixed set of survival times.

    Built once per dataset; each ``nll`` call is then O(N).
    """

    def __init__(self, time, event):
        time = np.asarray(time, dtype=float)
        self.event = np.asarray(event, dtype=bool)
        if not self.event.any():
            raise DegenerateInputError("partial likelihood needs at least one observed event")
        self.order = np.argsort(-time, kind="stable")  # descending time
        t_sorted = time[self.order]
        # for each sorted position, the last index sharing its time: the risk
        # set {j : T_j >= T_i} is the prefix up to and including that index
        _, first_of_group = np.unique(-t_sorted, return_index=True)
        group_end = np.empty(len(t_sorted), dtype=int)
        starts = np.sort(first_of_group)
        ends = np.append(starts[1:], len(t_sorted)) - 1
        for s, e in zip(starts, ends):
            group_end[s:e + 1] = e
        self.group_end = group_end
        self.ev_sorted = self.event[self.order]

    def nll(self, scores):
        scores = np.asarray(scores, dtype=float).ravel()
        eta = scores[self.order]
        shift = eta.max()
        w = np.exp(eta - shift)
        cum = np.cumsum(w)
        denom = cum[self.group_end]
        log_denom = np.log(denom) + shift
        ev = self.ev_sorted
        value = -float(np.sum(eta[ev] - log_denom[ev]))
        # d/d eta_j of sum_i log denom_i = w_j * sum_{i event, j in R_i} 1/denom_i
        inv = np.where(ev, 1.0 / denom, 0.0)
        # j is in R_i iff group_end[i] >= j (prefix); accumulate from the tail
        acc = np.zeros(len(eta))
        np.add.at(acc, self.group_end, inv)
        suffix = np.cumsum(acc[::-1])[::-1]
        grad_sorted = w * suffix - ev.astype(float)
        grad = np.empty_like(grad_sorted)
        grad[self.order] = grad_sorted
        return value, grad


def cox_nll(scores, targets):
    """Negative log Cox partial likelihood (Breslow ties) and its gradient."""
    time, event = survival_arrays(targets)
    scores = np.asarray(scores, dtype=float)
    value, grad = CoxRiskSets(time, event).nll(scores.ravel())
    return value, grad.reshape(scores.shape)
