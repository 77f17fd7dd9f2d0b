"""Registry landscapes: values, analytic gradients, sampling, metadata."""

import numpy as np
import pytest

from penalearn import (
    RegistryError,
    eval_objective,
    make_problem,
    problem_names,
    sample_params,
)

ALL_NAMES = ("rosenbrock-1c", "rosenbrock-3c", "ackley-1c", "ackley-3c")


def test_registry_names():
    assert problem_names() == ALL_NAMES


def test_unknown_problem_lists_registry():
    with pytest.raises(RegistryError) as info:
        make_problem("sphere")
    message = str(info.value)
    for name in ALL_NAMES:
        assert name in message


def test_registry_metadata():
    rb1 = make_problem("rosenbrock-1c")
    assert (rb1.param_dim, rb1.decision_dim) == (2, 2)
    assert rb1.default_net_shape == (2, 20, 20, 2)
    assert len(rb1.inequalities) == 1 and not rb1.known_infeasible

    rb3 = make_problem("rosenbrock-3c")
    assert rb3.default_net_shape == (2, 10, 20, 20, 20, 10, 2)
    assert len(rb3.inequalities) == 3 and rb3.known_infeasible

    ak1 = make_problem("ackley-1c")
    assert (ak1.param_dim, ak1.decision_dim) == (5, 2)
    assert ak1.default_net_shape == (5, 10, 20, 20, 20, 10, 2)
    assert len(ak1.inequalities) == 1 and not ak1.known_infeasible

    ak3 = make_problem("ackley-3c")
    assert len(ak3.inequalities) == 3 and ak3.known_infeasible


def test_rosenbrock_hand_values():
    spec = make_problem("rosenbrock-1c")
    f, g = eval_objective(spec, np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    assert f == 1.0
    assert np.array_equal(g, np.array([-2.0, 0.0]))
    # optimum of the unconstrained objective: x = (c2, c2^2)
    f, g = eval_objective(spec, np.array([0.5, 0.25]), np.array([7.0, 0.5]))
    assert f == 0.0
    assert np.array_equal(g, np.array([0.0, 0.0]))


def test_ackley_is_zero_at_origin_for_classic_parameters():
    spec = make_problem("ackley-1c")
    f, g = eval_objective(
        spec, np.array([0.0, 0.0]), np.array([20.0, 0.2, 0.5, 0.5, 20.0])
    )
    assert abs(f) < 1e-14
    assert np.array_equal(g, np.zeros(2))  # documented subgradient choice


def test_ackley_away_from_origin_value():
    spec = make_problem("ackley-1c")
    p = np.array([20.0, 0.2, 0.5, 0.5, 20.0])
    x = np.array([1.0, 1.0])
    f, _ = eval_objective(spec, x, p)
    expected = (
        -20.0 * np.exp(-0.2 * np.sqrt(0.5 * 2.0))
        - np.exp(0.5 * (np.cos(2 * np.pi) + np.cos(2 * np.pi)))
        + np.e
        + 20.0
    )
    np.testing.assert_allclose(f, expected, rtol=1e-15)


@pytest.mark.parametrize("name", ["rosenbrock-1c", "ackley-1c"])
def test_objective_gradients_match_finite_differences(name):
    spec = make_problem(name)
    rng = np.random.default_rng(hash(name) % 2**32)
    lows = np.array([r[0] for r in spec.param_ranges])
    highs = np.array([r[1] for r in spec.param_ranges])
    for _ in range(40):
        x = rng.uniform(-2, 2, size=spec.decision_dim)
        if np.linalg.norm(x) < 1e-2:  # ackley kink at the origin
            continue
        p = lows + (highs - lows) * rng.random(spec.param_dim)
        _, g = eval_objective(spec, x, p)
        h = 1e-6
        for j in range(spec.decision_dim):
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd = (eval_objective(spec, xp, p)[0] - eval_objective(spec, xm, p)[0]) / (2 * h)
            assert abs(fd - g[j]) / max(abs(g[j]), 1.0) < 1e-5


def test_disk_constraint_residuals_and_grads():
    spec = make_problem("rosenbrock-1c")
    X = np.array([[1.0, 0.0], [0.0, 0.5], [1.5, 0.0]])
    P = np.tile([1.0, 1.0], (3, 1))
    ce = spec.constraint_eval(X, P)
    np.testing.assert_allclose(ce.ineq_values[:, 0], [0.0, -0.75, 1.25], rtol=0, atol=1e-15)
    np.testing.assert_allclose(ce.ineq_grads[:, 0, :], 2.0 * X, rtol=0, atol=0)


def test_three_constraint_variant_is_contradictory():
    """x1 <= -2.5 forces x1^2 >= 6.25, violating the unit disk at every point."""
    spec = make_problem("rosenbrock-3c")
    assert spec.known_infeasible
    rng = np.random.default_rng(8)
    X = rng.uniform(-4, 4, size=(500, 2))
    P = np.tile([1.0, 1.0], (500, 1))
    ce = spec.constraint_eval(X, P)
    assert np.all(ce.ineq_values.max(axis=1) > 0.0)


def test_ackley_disk_bound_is_25():
    spec = make_problem("ackley-1c")
    x = np.array([[5.0, 0.0]])
    p = np.array([[20.0, 0.2, 0.5, 0.5, 20.0]])
    ce = spec.constraint_eval(x, p)
    assert ce.ineq_values[0, 0] == 0.0  # 5^2 = 25, on the boundary


def test_sample_params_within_ranges_and_deterministic():
    for name in ALL_NAMES:
        spec = make_problem(name)
        ps = sample_params(spec, 200, seed=42)
        assert ps.values.shape == (200, spec.param_dim)
        for j, (lo, hi) in enumerate(spec.param_ranges):
            col = ps.values[:, j]
            assert np.all(col >= lo) and np.all(col <= hi)
        again = sample_params(spec, 200, seed=42)
        assert np.array_equal(ps.values, again.values)
        other = sample_params(spec, 200, seed=43)
        assert not np.array_equal(ps.values, other.values)


def test_param_ranges_match_published_settings():
    rb = make_problem("rosenbrock-1c")
    assert rb.param_ranges == ((0.0, 30.0), (0.0, 1.0))
    ak = make_problem("ackley-1c")
    assert ak.param_ranges == ((0.0, 30.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 30.0))
