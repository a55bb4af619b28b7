import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_diff, rel_err
from stochgates.errors import DegenerateInputError, DomainError, ShapeError
from stochgates.losses import SurvivalTarget, cox_nll, cross_entropy, mse
from stochgates.ndcore import Rng


def test_mse_values_and_gradient():
    assert mse(np.array([1.0, 2.0]), np.array([1.0, 2.0]))[0] == 0.0
    assert mse(np.array([1.0, 3.0]), np.array([0.0, 0.0]))[0] == 5.0
    p = Rng(0).normal(size=(5, 1))
    t = Rng(1).normal(size=(5, 1))
    fd = central_diff(lambda q: mse(q, t)[0], p, h=1e-5)
    assert rel_err(mse(p, t)[1], fd) <= 1e-8
    with pytest.raises(ShapeError):
        mse(np.ones(2), np.ones(3))


def test_cross_entropy_values_and_gradient():
    assert cross_entropy(np.zeros((1, 2)), [0])[0] == pytest.approx(math.log(2))
    assert cross_entropy(np.array([[60.0, -60.0]]), [0])[0] < 1e-40
    logits = Rng(2).normal(size=(4, 3))
    labels = np.array([0, 2, 1, 2])
    fd = central_diff(lambda z: cross_entropy(z, labels, 3)[0], logits, h=1e-6)
    assert rel_err(cross_entropy(logits, labels, 3)[1], fd) <= 1e-6


def test_cross_entropy_stable_for_large_logits():
    v, g = cross_entropy(np.array([[1000.0, 0.0]]), [1])
    assert v == pytest.approx(1000.0)
    assert np.all(np.isfinite(g))


def _surv(times, events):
    return [SurvivalTarget(t, bool(e)) for t, e in zip(times, events)]


def test_cox_hand_cases():
    v, _ = cox_nll(np.zeros(2), _surv([1.0, 2.0], [1, 1]))
    assert v == pytest.approx(math.log(2))
    v, g = cox_nll(np.array([0.7]), _surv([3.0], [1]))
    assert v == pytest.approx(0.0) and g[0] == pytest.approx(0.0)


def _cox_reference(scores, time, event):
    """Direct O(N^2) Breslow partial likelihood."""
    total = 0.0
    for i in range(len(time)):
        if event[i]:
            risk = time >= time[i]
            total -= scores[i] - math.log(np.sum(np.exp(scores[risk])))
    return total


def test_cox_matches_direct_formula_with_ties():
    time = np.array([2.0, 1.0, 2.0, 5.0, 3.0, 1.0])
    event = np.array([1, 1, 0, 1, 1, 0])
    s = Rng(3).normal(size=6)
    v, _ = cox_nll(s, np.column_stack([time, event]))
    assert v == pytest.approx(_cox_reference(s, time, event), rel=1e-12)


def test_cox_gradient_finite_difference():
    targets = _surv([0.5, 1.2, 0.9, 2.4, 1.7], [1, 0, 1, 1, 0])
    s = Rng(5).normal(size=5)
    fd = central_diff(lambda q: cox_nll(q, targets)[0], s, h=1e-6)
    assert rel_err(cox_nll(s, targets)[1], fd) <= 1e-6


def test_cox_translation_invariance():
    y = np.column_stack([Rng(6).exponential(1.0, size=30), Rng(7).bernoulli(0.7, size=30)])
    y[0, 1] = 1
    s = Rng(8).normal(size=30)
    assert cox_nll(s + 3.7, y)[0] == pytest.approx(cox_nll(s, y)[0], rel=1e-10)


def test_cox_errors():
    with pytest.raises(DegenerateInputError):
        cox_nll(np.zeros(2), _surv([1.0, 2.0], [0, 0]))
    with pytest.raises(DomainError):
        SurvivalTarget(0.0, True)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000))
def test_cox_gradient_sums_to_zero(n, seed):
    # shifting every score leaves the likelihood unchanged, so the gradient sums to 0
    r = Rng(seed)
    y = np.column_stack([r.integers(1, 4, size=n).astype(float), r.bernoulli(0.6, size=n)])
    y[0, 1] = 1
    _, g = cox_nll(r.normal(size=n), y)
    assert abs(g.sum()) < 1e-9
