"""Feedforward network with a gated input layer, trained by hand-written backprop."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gates as G
from .errors import ShapeError, UsageError, SchemaError
from .ndcore import Rng

SELU_ALPHA = 1.6732632423543772
SELU_SCALE = 1.0507009873554805


def _act(name, a):
    if name == "tanh":
        return np.tanh(a)
    if name == "relu":
        return np.maximum(a, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-a))
    if name == "identity":
        return a
    if name == "selu":
        return SELU_SCALE * np.where(a > 0, a, SELU_ALPHA * np.expm1(np.minimum(a, 0.0)))
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name, a, h):
    """Derivative of the activation given pre-activation ``a`` and output ``h``."""
    if name == "tanh":
        return 1.0 - h * h
    if name == "relu":
        return (a > 0).astype(float)
    if name == "sigmoid":
        return h * (1.0 - h)
    if name == "identity":
        return np.ones_like(a)
    if name == "selu":
        return np.where(a > 0, SELU_SCALE, h + SELU_SCALE * SELU_ALPHA)
    raise ValueError(f"unknown activation {name!r}")


ACTIVATIONS = ("tanh", "relu", "sigmoid", "identity", "selu")


@dataclass
class Dense:
    W: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray
    activation: str = "identity"


@dataclass
class Network:
    layers: list
    gate: G.GateLayer

    def __post_init__(self):
        width = self.gate.dim
        for i, layer in enumerate(self.layers):
            if layer.W.shape[0] != width or layer.b.shape != (layer.W.shape[1],):
                raise ShapeError(f"layer {i} shapes {layer.W.shape}/{layer.b.shape} do not chain from width {width}")
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"unknown activation {layer.activation!r}")
            width = layer.W.shape[1]

    @property
    def n_features(self) -> int:
        return self.gate.dim

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].W.shape[1]

    def params(self):
        """Flat list of parameter arrays in a fixed order: W0, b0, W1, b1, ..., mu."""
        out = []
        for layer in self.layers:
            out += [layer.W, layer.b]
        out.append(self.gate.mu)
        return out

    def copy(self) -> "Network":
        layers = [Dense(l.W.copy(), l.b.copy(), l.activation) for l in self.layers]
        g = self.gate
        gate = G.GateLayer(g.kind, g.mu.copy(), g.sigma, g.beta, g.zeta, g.tau)
        return Network(layers, gate)


@dataclass
class NetSpec:
    n_features: int
    hidden: tuple = ()
    n_outputs: int = 1
    activation: str = "tanh"
    output_activation: str = "identity"
    gate_kind: str = G.STG
    sigma: float = 0.5
    weight_std: float = 0.1
    hc_beta: float = 2.0 / 3.0
    hc_zeta: float = 1.1
    hc_tau: float = -0.1
    gate_init: float | None = None


def init(spec: NetSpec, rng: Rng) -> Network:
    """Weights ~ N(0, weight_std^2), zero biases, gates half open."""
    widths = [spec.n_features, *spec.hidden, spec.n_outputs]
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        act = spec.output_activation if i == len(widths) - 2 else spec.activation
        W = rng.normal(0.0, spec.weight_std, size=(fan_in, fan_out))
        layers.append(Dense(W, np.zeros(fan_out), act))
    gate = G.GateLayer.create(spec.gate_kind, spec.n_features, spec.gate_init, sigma=spec.sigma,
                              beta=spec.hc_beta, zeta=spec.hc_zeta, tau=spec.hc_tau)
    return Network(layers, gate)


@dataclass
class GradientBundle:
    d_W: list
    d_b: list
    d_mu: np.ndarray

    def as_list(self):
        out = []
        for dW, db in zip(self.d_W, self.d_b):
            out += [dW, db]
        out.append(self.d_mu)
        return out


@dataclass
class ForwardCache:
    net: Network
    x: np.ndarray
    gate: G.GateSample | None
    z: np.ndarray
    inputs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    outs: list = field(default_factory=list)


def forward(net: Network, x, rng: Rng | None = None, train: bool = False,
            sample: G.GateSample | None = None, gate_values=None, per_example: bool = False):
    """Run the network; returns ``(output, cache)``.

    In train mode a fresh gate sample is drawn from ``rng`` (or ``sample`` is
    replayed). In eval mode the deterministic gate is used unless
    ``gate_values`` overrides it.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != net.n_features:
        raise ShapeError(f"input has {x.shape[1]} columns, network expects {net.n_features}")
    if train:
        if sample is None:
            if rng is None:
                raise UsageError("train-mode forward needs an rng or a gate sample")
            sample = G.sample_gate(net.gate, rng, rows=x.shape[0] if per_example else None)
        z = sample.z
    elif gate_values is None:
        sample = G.deterministic_sample(net.gate)
        z = sample.z
    else:
        sample = None
        z = np.asarray(gate_values, dtype=float)
    h = x * z
    cache = ForwardCache(net, x, sample, z)
    for layer in net.layers:
        cache.inputs.append(h)
        a = h @ layer.W + layer.b
        h = _act(layer.activation, a)
        cache.pre.append(a)
        cache.outs.append(h)
    return h, cache


def predict(net: Network, x) -> np.ndarray:
    return forward(net, x)[0]


def backward(net: Network, cache: ForwardCache, dout) -> GradientBundle:
    """Reverse-mode gradients of a loss w.r.t. all weights and gate parameters.

    ``dout`` is dLoss/d(output). Gate-parameter gradients flow through the
    sampled gate by the pathwise chain rule; in eval mode they flow through
    the deterministic gate.
    """
    if cache is None or cache.net is not net or len(cache.inputs) != len(net.layers):
        raise UsageError("backward needs the cache of a forward pass on this network")
    delta = np.asarray(dout, dtype=float).reshape(cache.outs[-1].shape)
    d_W = [None] * len(net.layers)
    d_b = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        if layer.activation != "identity":
            delta = delta * _act_grad(layer.activation, cache.pre[i], cache.outs[i])
        d_W[i] = cache.inputs[i].T @ delta
        d_b[i] = delta.sum(axis=0)
        delta = delta @ layer.W.T
    dz_rows = delta * cache.x  # dL/dz per row
    if cache.gate is None:
        # gate values were overridden; they are constants here
        d_mu = np.zeros(net.gate.dim)
    else:
        upstream = dz_rows if cache.gate.z.ndim == 2 else dz_rows.sum(axis=0)
        d_mu = G.gate_grad(cache.gate, upstream)
    return GradientBundle(d_W, d_b, d_mu)


def regularizer(net: Network, lam: float, rescale: bool = True):
    """lam * penalty (optionally divided by D) and its gradient w.r.t. the gate parameters."""
    value, grad = G.gate_reg(net.gate)
    scale = lam / net.n_features if rescale else lam
    return scale * value, scale * grad


def loss_and_grad(net: Network, x, y, loss_fn, lam: float = 0.0, rng: Rng | None = None,
                  sample: G.GateSample | None = None, train: bool = True,
                  rescale: bool = True, per_example: bool = False):
    """Objective loss + lam * reg (/D) on one batch with its full gradient bundle.

    Returns ``(total, data_loss, bundle, cache)``.
    """
    out, cache = forward(net, x, rng=rng, train=train, sample=sample, per_example=per_example)
    data_loss, dout = loss_fn(out, y)
    bundle = backward(net, cache, dout)
    reg_value, reg_grad = regularizer(net, lam, rescale)
    bundle.d_mu = bundle.d_mu + reg_grad
    return data_loss + reg_value, data_loss, bundle, cache


# --- checkpoint I/O ----------------------------------------------------------

CHECKPOINT_FORMAT = "stochgates-network"
CHECKPOINT_VERSION = 1


def to_dict(net: Network) -> dict:
    g = net.gate
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "gate": {"kind": g.kind, "mu": g.mu.tolist(), "sigma": g.sigma,
                 "beta": g.beta, "zeta": g.zeta, "tau": g.tau},
        "layers": [{"W": l.W.tolist(), "b": l.b.tolist(), "activation": l.activation}
                   for l in net.layers],
    }


def from_dict(data: dict) -> Network:
    if data.get("format") != CHECKPOINT_FORMAT:
        raise SchemaError("not a stochgates network checkpoint")
    if data.get("version") != CHECKPOINT_VERSION:
        raise SchemaError(f"unsupported checkpoint version {data.get('version')}")
    g = data["gate"]
    gate = G.GateLayer(g["kind"], np.array(g["mu"], dtype=float), g["sigma"],
                       g["beta"], g["zeta"], g["tau"])
    layers = [Dense(np.array(l["W"], dtype=float).reshape(len(l["W"]), -1),
                    np.array(l["b"], dtype=float), l["activation"]) for l in data["layers"]]
    return Network(layers, gate)


def save(net: Network, path) -> None:
    Path(path).write_text(json.dumps(to_dict(net)), encoding="utf-8")


def load(path) -> Network:
    return from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
