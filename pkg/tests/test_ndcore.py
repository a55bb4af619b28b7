import math

import numpy as np
import pytest
from scipy import integrate

from stochgates.errors import DomainError, ShapeError
from stochgates.ndcore import (Rng, derive_seed, gauss_cdf, gauss_pdf, hadamard, hard_sigmoid, matmul,
                               matvec, sample_gaussian, sigmoid)


def test_cdf_known_values():
    assert gauss_cdf(0.0) == 0.5
    assert gauss_cdf(1.0) == pytest.approx(0.841345, abs=1e-6)
    assert gauss_cdf(-1.0) == pytest.approx(1 - gauss_cdf(1.0), abs=1e-15)


@pytest.mark.parametrize("x", [-6.0, -2.5, -0.3, 0.7, 1.9, 4.0])
def test_cdf_matches_quadrature(x):
    ref, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), -np.inf, x,
                            epsabs=1e-13)
    assert abs(gauss_cdf(x) - ref) <= 1e-7


def test_cdf_vectorised_and_rejects_nan():
    out = gauss_cdf(np.array([-1.0, 0.0, 1.0]))
    assert out.shape == (3,)
    with pytest.raises(DomainError):
        gauss_cdf(float("nan"))


def test_pdf_values():
    assert gauss_pdf(0.0, 1.0) == pytest.approx(0.398942, abs=1e-6)
    assert gauss_pdf(0.5, 0.5) == pytest.approx(1 / (0.5 * math.sqrt(2 * math.pi)) * math.exp(-0.5), rel=1e-12)
    assert gauss_pdf(0.5, 0.5) == pytest.approx(0.483941, abs=1e-6)
    assert gauss_pdf(0.37, 0.8) == gauss_pdf(-0.37, 0.8)
    with pytest.raises(DomainError):
        gauss_pdf(0.0, 0.0)


def test_pdf_integrates_to_cdf_difference():
    ref, _ = integrate.quad(lambda t: gauss_pdf(t, 0.5), -0.2, 0.9)
    assert abs(ref - (gauss_cdf(0.9 / 0.5) - gauss_cdf(-0.2 / 0.5))) < 1e-10


def test_hard_sigmoid_and_sigmoid():
    assert hard_sigmoid(0.3) == 0.3
    assert hard_sigmoid(1.5) == 1.0
    assert hard_sigmoid(-0.2) == 0.0
    assert sigmoid(0.0) == 0.5
    assert sigmoid(np.array([800.0]))[0] == 1.0


def test_sample_gaussian():
    assert sample_gaussian(Rng(3), 1.25, 0.0) == 1.25
    assert sample_gaussian(Rng(9), 0.0, 1.0) == sample_gaussian(Rng(9), 0.0, 1.0)
    with pytest.raises(DomainError):
        sample_gaussian(Rng(0), 0.0, -1.0)


def test_normal_moments():
    x = Rng(2024).normal(0.0, 1.0, size=1_000_000)
    assert abs(x.mean()) < 0.004
    assert abs(x.std() - 1.0) < 0.004


def test_uniform_open_excludes_endpoints():
    u = Rng(1).uniform_open(100_000)
    assert u.min() > 0.0 and u.max() < 1.0


def test_derive_seed_stable_and_distinct():
    a = derive_seed(7, "stg", 0, 1)
    assert a == derive_seed(7, "stg", 0, 1)
    assert a != derive_seed(7, "stg", 1, 0)
    assert a != derive_seed(7, "hc", 0, 1)
    assert 0 <= a < 2 ** 63
    # child streams are reproducible
    assert Rng(5).child("x").normal(size=3).tolist() == Rng(5).child("x").normal(size=3).tolist()


def test_linear_algebra_helpers():
    assert matvec([[1, 2], [3, 4]], [1, 1]).tolist() == [3, 7]
    assert matmul(np.eye(2), [[1, 2], [3, 4]]).tolist() == [[1, 2], [3, 4]]
    x = np.array([1.5, -2.0, 3.0])
    assert hadamard(x, np.ones(3)).tolist() == x.tolist()
    assert hadamard(x, np.zeros(3)).tolist() == [0, 0, 0]
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        hadamard(np.ones(3), np.ones(2))
