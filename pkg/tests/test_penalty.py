"""Penalty algebra: values, gradients, the indicator diagnostic, reports."""

import numpy as np
import pytest

from penalearn import (
    DimensionError,
    PenaltyConfig,
    eq_penalty,
    ineq_penalty,
    make_problem,
    penalty_value,
    total_loss,
    violation_report,
)
from penalearn.penalty import loss_terms_batch

RB = make_problem("rosenbrock-1c")


def test_ineq_penalty_reference_values():
    v, d = ineq_penalty(0.25, 1e8, 2.0)  # 0.25 is binary-exact
    assert v == 6.25e6
    assert d == 5e7
    np.testing.assert_allclose(ineq_penalty(0.1, 1e8, 2.0)[0], 1e6, rtol=1e-15)
    v, d = ineq_penalty(-0.1, 1e8, 2.0)
    assert v == 0.0 and d == 0.0
    v, d = ineq_penalty(0.0, 1e8, 2.0)
    assert v == 0.0 and d == 0.0


def test_eq_penalty_reference_values():
    v, d = eq_penalty(-0.25, 1e8, 2.0)
    assert v == 6.25e6
    assert d == -5e7
    v, d = eq_penalty(0.25, 1e8, 2.0)
    assert v == 6.25e6 and d == 5e7
    v, d = eq_penalty(0.0, 1e8, 2.0)
    assert v == 0.0 and d == 0.0


def test_penalty_nonnegative_everywhere():
    rng = np.random.default_rng(0)
    r = rng.normal(scale=3.0, size=500)
    vi, _ = ineq_penalty(r, 1e8, 2.0)
    ve, _ = eq_penalty(r, 1e8, 2.0)
    assert np.all(vi >= 0.0)
    assert np.all(ve >= 0.0)
    assert np.all(vi[r <= 0] == 0.0)
    assert np.all(ve[r != 0] > 0.0)


def test_eta_doubling_doubles_penalty_exactly():
    rng = np.random.default_rng(1)
    r = np.abs(rng.normal(size=200)) + 1e-3
    v1, d1 = ineq_penalty(r, 1e8, 2.0)
    v2, d2 = ineq_penalty(r, 2e8, 2.0)
    assert np.array_equal(v2, 2.0 * v1)
    assert np.array_equal(d2, 2.0 * d1)
    e1, _ = eq_penalty(r, 3e5, 2.0)
    e2, _ = eq_penalty(r, 6e5, 2.0)
    assert np.array_equal(e2, 2.0 * e1)


def test_boundary_continuity_for_gamma_two():
    eta = 1e8
    for eps in (1e-6, 1e-9):
        v_eps, _ = ineq_penalty(eps, eta, 2.0)
        v0, _ = ineq_penalty(0.0, eta, 2.0)
        assert abs(v_eps - v0) <= eta * eps**2


def test_derivative_continuous_at_kink():
    # gamma = 2: derivative 2*eta*r -> 0 as r -> 0+ and is 0 for r <= 0
    for r in (1e-8, 1e-12):
        _, d = ineq_penalty(r, 1e8, 2.0)
        assert 0.0 < d <= 2e8 * r
    _, d = ineq_penalty(-1e-12, 1e8, 2.0)
    assert d == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        PenaltyConfig(gamma=0.5)
    with pytest.raises(ValueError):
        PenaltyConfig(mode="magic")
    with pytest.raises(ValueError):
        PenaltyConfig(eta_ineq=-1.0)
    with pytest.raises(ValueError):
        PenaltyConfig(indicator_big=0.0)
    cfg = PenaltyConfig(eta_ineq=(1e6, 1e8))
    with pytest.raises(DimensionError):
        cfg.resolved_etas(3, 0)


def test_per_constraint_eta_broadcast():
    cfg = PenaltyConfig(eta_ineq=5e7)
    etas, _ = cfg.resolved_etas(3, 0)
    assert np.array_equal(etas, np.full(3, 5e7))


def test_zero_penalty_inside_feasible_set():
    cfg = PenaltyConfig()
    rng = np.random.default_rng(2)
    for _ in range(50):
        # points strictly inside the unit disk
        r = 0.95 * np.sqrt(rng.random())
        th = 2 * np.pi * rng.random()
        x = np.array([r * np.cos(th), r * np.sin(th)])
        p = np.array([rng.uniform(0, 30), rng.uniform(0, 1)])
        assert penalty_value(x, p, RB, cfg) == 0.0


def test_penalty_positive_outside_feasible_set():
    cfg = PenaltyConfig()
    x = np.array([1.5, 0.0])  # disk residual 1.25
    p = np.array([1.0, 1.0])
    expected = 1e8 * (1.5**2 - 1.0) ** 2
    np.testing.assert_allclose(penalty_value(x, p, RB, cfg), expected, rtol=1e-15)


def test_total_loss_reduces_to_objective_when_feasible():
    cfg = PenaltyConfig()
    x = np.array([0.3, 0.2])
    p = np.array([2.0, 0.5])
    loss, _ = total_loss(x, p, RB, cfg)
    f0 = 2.0 * (0.2 - 0.09) ** 2 + (0.5 - 0.3) ** 2
    np.testing.assert_allclose(loss, f0, rtol=1e-15)


def test_loss_gradient_matches_finite_differences():
    cfg = PenaltyConfig(eta_ineq=100.0, eta_eq=100.0)
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 30:
        x = rng.uniform(-2, 2, size=2)
        p = np.array([rng.uniform(0, 30), rng.uniform(0, 1)])
        residual = x @ x - 1.0
        if abs(residual) < 1e-3:  # stay clear of the kink
            continue
        _, grad = total_loss(x, p, RB, cfg)
        h = 1e-6
        for j in range(2):
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd = (total_loss(xp, p, RB, cfg)[0] - total_loss(xm, p, RB, cfg)[0]) / (2 * h)
            assert abs(fd - grad[j]) / max(abs(grad[j]), 1.0) < 1e-5
        checked += 1


def test_indicator_gradient_is_pure_objective_gradient():
    """The pathology under test: violations add loss but no gradient signal."""
    ind = PenaltyConfig(mode="indicator")
    none = PenaltyConfig(mode="none")
    rng = np.random.default_rng(4)
    X = rng.uniform(-3, 3, size=(200, 2))
    P = np.column_stack([rng.uniform(0, 30, 200), rng.uniform(0, 1, 200)])
    loss_i, f0_i, omega_i, grad_i = loss_terms_batch(X, P, RB, ind)
    loss_n, _, _, grad_n = loss_terms_batch(X, P, RB, none)
    assert np.array_equal(grad_i, grad_n)
    violated = (X**2).sum(axis=1) > 1.0
    assert np.any(violated)
    assert np.array_equal(omega_i[violated], np.full(violated.sum(), 1e12))
    assert np.all(omega_i[~violated] == 0.0)
    np.testing.assert_allclose(loss_i, f0_i + omega_i, rtol=0, atol=0)


def test_violation_report_clamps_and_flags():
    p = np.array([1.0, 1.0])
    inside = violation_report(np.array([0.1, 0.1]), p, RB)
    assert inside == (0.0, 0.0, True)
    max_ineq, max_eq, feasible = violation_report(np.array([1.2, 0.0]), p, RB)
    np.testing.assert_allclose(max_ineq, 1.2**2 - 1.0, rtol=1e-15)
    assert max_eq == 0.0
    assert not feasible


def test_batch_and_scalar_paths_agree():
    cfg = PenaltyConfig()
    rng = np.random.default_rng(5)
    X = rng.uniform(-2, 2, size=(20, 2))
    P = np.column_stack([rng.uniform(0, 30, 20), rng.uniform(0, 1, 20)])
    loss_b, _, omega_b, grad_b = loss_terms_batch(X, P, RB, cfg)
    for i in range(20):
        loss_s, grad_s = total_loss(X[i], P[i], RB, cfg)
        assert loss_s == loss_b[i]
        assert np.array_equal(grad_s, grad_b[i])
        assert penalty_value(X[i], P[i], RB, cfg) == omega_b[i]
