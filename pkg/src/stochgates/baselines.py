"""LASSO by proximal gradient (ISTA) and the sample-size-dependent penalty schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

SUPPORT_TOL = 1e-8


def soft_threshold(x, t):
    if np.any(np.asarray(t) < 0):
        raise DomainError("threshold must be nonnegative")
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def lasso_objective(X, y, coef, alpha):
    r = X @ coef - y
    return float(r @ r / X.shape[0] + alpha * np.sum(np.abs(coef)))


def _top_eigenvalue(A, iters=500, tol=1e-12):
    v = np.ones(A.shape[0]) / math.sqrt(A.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new = float(v @ A @ v)
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            lam = new
            break
        lam = new
    return lam


@dataclass
class LassoResult:
    coef: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    history: list

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.coef) > SUPPORT_TOL)


def lasso_fit(X, y, alpha, tol=1e-8, max_iter=100_000, keep_history=False) -> LassoResult:
    """min_b (1/N)||Xb - y||^2 + alpha ||b||_1 by ISTA with step 1/Lipschitz.

    Stops when the relative objective decrease falls below ``tol``. If
    ``max_iter`` is hit first the best iterate is returned with
    ``converged=False``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if X.ndim != 2 or X.size == 0 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"bad design {X.shape} for target {y.shape}")
    n = X.shape[0]
    gram = X.T @ X / n
    xty = X.T @ y / n
    lip = 2.0 * _top_eigenvalue(gram)
    coef = np.zeros(X.shape[1])
    obj = lasso_objective(X, y, coef, alpha)
    if lip == 0.0:
        return LassoResult(coef, obj, 0, True, [obj])
    # slight margin over the power-iteration estimate keeps the step safe
    step = 1.0 / (lip * (1.0 + 1e-9))
    history = [obj] if keep_history else []
    best = (obj, coef)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * (gram @ coef - xty)
        coef = soft_threshold(coef - step * grad, step * alpha)
        new_obj = lasso_objective(X, y, coef, alpha)
        if keep_history:
            history.append(new_obj)
        if new_obj < best[0]:
            best = (new_obj, coef)
        if obj - new_obj <= tol * max(abs(obj), 1e-300):
            converged = True
            break
        obj = new_obj
    return LassoResult(best[1].copy(), best[0], it, converged, history)


def null_threshold(X, y) -> float:
    """Smallest alpha for which the zero vector solves the LASSO problem."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    return float(np.max(np.abs(2.0 * X.T @ y / X.shape[0])))


def alpha_schedule(n: int, d: int, k: int, noise_var: float) -> float:
    """sqrt(2 s^2 log(D - k) log(k) / N), the recovery-optimal LASSO penalty."""
    if k < 2 or d <= k or n < 1:
        raise DomainError(f"need D > k >= 2 and N >= 1 (got N={n}, D={d}, k={k})")
    return math.sqrt(2.0 * noise_var * math.log(d - k) * math.log(k) / n)
