"""Numerical core: special functions, seeded sampling and shape-checked dense ops.

Random numbers come from numpy's PCG64 bit generator. Gaussian draws use the
inverse-CDF transform: a uniform on the open interval (0, 1) built from 53
random bits, pushed through ``scipy.special.ndtri``. Both pieces are fully
specified, so a given seed yields the same stream on every platform.
"""
from __future__ import annotations

import hashlib
import math

import numpy as np
from scipy import special

from .errors import DomainError, ShapeError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def gauss_cdf(x):
    """Standard normal CDF, scalar or elementwise."""
    arr = _check_finite(x)
    out = special.ndtr(arr)
    return float(out) if out.ndim == 0 else out


def gauss_pdf(x, sigma=1.0):
    """Density of N(0, sigma^2) at x."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    arr = _check_finite(x)
    out = np.exp(-(arr * arr) / (2.0 * sigma * sigma)) / (_SQRT_2PI * sigma)
    return float(out) if out.ndim == 0 else out


def hard_sigmoid(x):
    arr = _check_finite(x)
    out = np.clip(arr, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def sigmoid(x):
    out = special.expit(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from an arbitrary tuple of str/int parts.

    Uses SHA-256 of the '|'-joined string form, so it does not depend on
    PYTHONHASHSEED or on the order in which runs are executed.
    """
    key = "|".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little") >> 1


class Rng:
    """Seeded random stream. Not thread-safe; give each run its own."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, *parts) -> "Rng":
        return Rng(derive_seed(self.seed, *parts))

    def uniform_open(self, size=None):
        # k / 2^53 + 2^-54 lies strictly inside (0, 1)
        u = self._gen.random(size)
        return u + 2.0 ** -54

    def uniform(self, low=0.0, high=1.0, size=None):
        return low + (high - low) * self._gen.random(size)

    def normal(self, mean=0.0, std=1.0, size=None):
        if std < 0:
            raise DomainError(f"std must be nonnegative, got {std}")
        z = special.ndtri(self.uniform_open(size))
        return mean + std * z

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, n, size, replace=False):
        return self._gen.choice(n, size=size, replace=replace)

    def bernoulli(self, p=0.5, size=None):
        return (self._gen.random(size) < p).astype(float)

    def exponential(self, rate=1.0, size=None):
        rate = np.asarray(rate, dtype=float)
        return -np.log(self.uniform_open(size if size is not None else rate.shape)) / rate


def sample_gaussian(rng: Rng, mean: float, std: float) -> float:
    if std < 0:
        raise DomainError(f"std must be nonnegative, got {std}")
    if std == 0:
        return float(mean)
    return float(rng.normal(mean, std))


def matmul(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def matvec(a, x):
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by vector {x.shape}")
    return a @ x


def hadamard(x, z):
    """Elementwise product; a length-D vector z broadcasts over the rows of x."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape and not (x.ndim == 2 and z.ndim == 1 and x.shape[1] == z.shape[0]):
        raise ShapeError(f"cannot gate {x.shape} with {z.shape}")
    return x * z
