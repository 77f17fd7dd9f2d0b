"""Shared fixtures: the two benchmark models are trained once per session."""

import pytest

from penalearn import TrainConfig, make_problem, train


@pytest.fixture(scope="session")
def rosenbrock_model():
    """rosenbrock-1c trained at the published settings (seed 0)."""
    spec = make_problem("rosenbrock-1c")
    net, log = train(spec, TrainConfig(seed=0))
    return spec, net, log


@pytest.fixture(scope="session")
def ackley_model():
    """ackley-1c trained at the published settings (seed 0)."""
    spec = make_problem("ackley-1c")
    net, log = train(spec, TrainConfig(seed=0))
    return spec, net, log
