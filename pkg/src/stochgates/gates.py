"""Input-feature gates: Gaussian stochastic gates (STG), Hard-Concrete (HC)
and the deterministic non-convex gate (DNC).

All three share one parameter vector per layer. For STG and DNC it holds the
gate means ``mu``; for HC it holds ``log_alpha``. Feature indices are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, ShapeError, UsageError
from .ndcore import Rng, gauss_pdf

STG = "stg"
HC = "hc"
DNC = "dnc"
KINDS = (STG, HC, DNC)


@dataclass
class GateLayer:
    kind: str
    mu: np.ndarray
    sigma: float = 0.5
    beta: float = 2.0 / 3.0
    zeta: float = 1.1
    tau: float = -0.1

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        if self.kind not in KINDS:
            raise DomainError(f"unknown gate kind {self.kind!r}")
        if self.mu.ndim != 1 or self.mu.size < 1:
            raise ShapeError("gate parameters must be a nonempty vector")
        if self.kind != HC and not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.kind == HC and not (self.tau < 0 < 1 < self.zeta and 0 < self.beta < 1):
            raise DomainError("Hard-Concrete needs tau < 0 < 1 < zeta and 0 < beta < 1")

    @property
    def dim(self) -> int:
        return self.mu.size

    @classmethod
    def create(cls, kind: str, dim: int, init: float | None = None, **kw) -> "GateLayer":
        # STG/DNC start half open; HC starts at log_alpha = 0
        if init is None:
            init = 0.0 if kind == HC else 0.5
        return cls(kind, np.full(dim, float(init)), **kw)


@dataclass
class GateSample:
    """One draw of the gate vector plus what is needed to replay its gradient.

    ``pre`` is the value before clipping (mu + eps for STG, the stretched
    s-bar for HC); ``eps`` is the exogenous noise (Gaussian eps or uniform u).
    ``z`` has shape (D,) for a shared draw or (B, D) for per-row draws.
    """

    kind: str
    z: np.ndarray
    eps: np.ndarray
    pre: np.ndarray
    dpre: np.ndarray | None = field(default=None, repr=False)


def _require(layer: GateLayer, *kinds):
    if layer.kind not in kinds:
        raise UsageError(f"operation needs gate kind in {kinds}, got {layer.kind!r}")


def _interior(pre):
    return ((pre > 0.0) & (pre < 1.0)).astype(float)


# --- STG ---------------------------------------------------------------------

def stg_sample(layer: GateLayer, rng: Rng, rows: int | None = None, eps=None) -> GateSample:
    _require(layer, STG)
    shape = layer.dim if rows is None else (rows, layer.dim)
    if eps is None:
        eps = rng.normal(0.0, layer.sigma, size=shape)
    eps = np.asarray(eps, dtype=float)
    pre = layer.mu + eps
    return GateSample(STG, np.clip(pre, 0.0, 1.0), eps, pre)


def stg_reg(layer: GateLayer):
    """Expected number of open gates, sum_d Phi(mu_d / sigma), and its gradient."""
    _require(layer, STG, DNC)
    value = float(np.sum(special.ndtr(layer.mu / layer.sigma)))
    return value, gauss_pdf(layer.mu, layer.sigma) * np.ones(layer.dim)


def stg_grad_mu(sample: GateSample, upstream) -> np.ndarray:
    """Pathwise gradient dL/dmu given dL/dz; clipped coordinates pass nothing."""
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != sample.pre.shape:
        raise ShapeError(f"upstream {upstream.shape} vs gate {sample.pre.shape}")
    g = upstream * _interior(sample.pre)
    return g.sum(axis=0) if g.ndim == 2 else g


def stg_test_gate(layer: GateLayer) -> np.ndarray:
    _require(layer, STG, DNC)
    return np.clip(layer.mu, 0.0, 1.0)


def selected_features(zhat, cutoff: float = 0.0) -> np.ndarray:
    """Indices whose deterministic gate value is strictly above ``cutoff``."""
    return np.flatnonzero(np.asarray(zhat) > cutoff)


# --- Hard-Concrete -----------------------------------------------------------

def _hc_stretch(layer: GateLayer, logistic):
    s = special.expit((layer.mu + logistic) / layer.beta)
    sbar = s * (layer.zeta - layer.tau) + layer.tau
    ds = s * (1.0 - s) * (layer.zeta - layer.tau) / layer.beta
    return sbar, ds


def hc_sample(layer: GateLayer, rng: Rng, rows: int | None = None, u=None) -> GateSample:
    _require(layer, HC)
    shape = layer.dim if rows is None else (rows, layer.dim)
    if u is None:
        u = rng.uniform_open(shape)
    u = np.asarray(u, dtype=float)
    sbar, ds = _hc_stretch(layer, np.log(u) - np.log1p(-u))
    return GateSample(HC, np.clip(sbar, 0.0, 1.0), u, sbar, ds)


def hc_active_prob(layer: GateLayer) -> np.ndarray:
    _require(layer, HC)
    return special.expit(layer.mu - layer.beta * math.log(-layer.tau / layer.zeta))


def hc_reg(layer: GateLayer):
    p = hc_active_prob(layer)
    return float(p.sum()), p * (1.0 - p)


def hc_grad_log_alpha(sample: GateSample, upstream) -> np.ndarray:
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != sample.pre.shape:
        raise ShapeError(f"upstream {upstream.shape} vs gate {sample.pre.shape}")
    g = upstream * _interior(sample.pre) * sample.dpre
    return g.sum(axis=0) if g.ndim == 2 else g


def hc_test_gate(layer: GateLayer) -> np.ndarray:
    """Noise-free HC gate, i.e. the sample at u = 0.5."""
    _require(layer, HC)
    sbar, _ = _hc_stretch(layer, 0.0)
    return np.clip(sbar, 0.0, 1.0)


# --- DNC ---------------------------------------------------------------------

def dnc_gate(layer: GateLayer) -> np.ndarray:
    _require(layer, DNC)
    return np.clip(layer.mu, 0.0, 1.0)


def dnc_sample(layer: GateLayer) -> GateSample:
    _require(layer, DNC)
    zeros = np.zeros(layer.dim)
    return GateSample(DNC, np.clip(layer.mu, 0.0, 1.0), zeros, layer.mu.copy())


# --- kind-generic dispatch ---------------------------------------------------

def sample_gate(layer: GateLayer, rng: Rng, rows: int | None = None) -> GateSample:
    if layer.kind == STG:
        return stg_sample(layer, rng, rows)
    if layer.kind == HC:
        return hc_sample(layer, rng, rows)
    return dnc_sample(layer)


def gate_grad(sample: GateSample, upstream) -> np.ndarray:
    if sample.kind == HC:
        return hc_grad_log_alpha(sample, upstream)
    return stg_grad_mu(sample, upstream)


def gate_reg(layer: GateLayer):
    """(value, gradient) of the expected-open-gates penalty for any kind."""
    if layer.kind == HC:
        return hc_reg(layer)
    return stg_reg(layer)


def eval_gate(layer: GateLayer) -> np.ndarray:
    if layer.kind == HC:
        return hc_test_gate(layer)
    return np.clip(layer.mu, 0.0, 1.0)


def deterministic_sample(layer: GateLayer) -> GateSample:
    """The noise-free gate as a sample, so gradients can flow through it."""
    if layer.kind == HC:
        return hc_sample(layer, None, u=np.full(layer.dim, 0.5))
    zeros = np.zeros(layer.dim)
    return GateSample(layer.kind, np.clip(layer.mu, 0.0, 1.0), zeros, layer.mu.copy())


def open_probability(layer: GateLayer) -> np.ndarray:
    """P(z_d > 0) per coordinate; 0/1 for the deterministic gate."""
    if layer.kind == HC:
        return hc_active_prob(layer)
    if layer.kind == DNC:
        return (layer.mu > 0).astype(float)
    return special.ndtr(layer.mu / layer.sigma)


def grad_variance_estimate(layer: GateLayer, loss_grad_at, rng: Rng, n_samples: int) -> np.ndarray:
    """Per-coordinate sample variance of the reparameterized gate gradient.

    ``loss_grad_at(z)`` returns dL/dz for a gate vector z; each of the
    ``n_samples`` independent draws is pushed through the pathwise chain rule.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    if layer.kind == DNC:
        return np.zeros(layer.dim)
    sample = sample_gate(layer, rng, rows=n_samples)
    upstream = np.asarray(loss_grad_at(sample.z), dtype=float)
    if upstream.shape != sample.z.shape:
        upstream = np.stack([np.asarray(loss_grad_at(z), dtype=float) for z in sample.z])
    if layer.kind == HC:
        per_draw = upstream * _interior(sample.pre) * sample.dpre
    else:
        per_draw = upstream * _interior(sample.pre)
    return per_draw.var(axis=0, ddof=1)
