"""Parameterized benchmark landscapes with analytic gradients.

Registry entries (decision variables x in R^2 throughout):

  rosenbrock-1c   min c1*(x2-x1^2)^2 + (c2-x1)^2      s.t. x1^2+x2^2 <= 1
  rosenbrock-3c   same objective, plus x1 <= -2.5 and x2 <= -1
  ackley-1c       min -c1*exp(-c2*sqrt(c3*(x1^2+x2^2)))
                      - exp(c4*(cos(2*pi*x1)+cos(2*pi*x2))) + e + c5
                                                        s.t. x1^2+x2^2 <= 25
  ackley-3c       same objective, s.t. x1^2+x2^2 <= 1, x1 <= -2.5, x2 <= -1

Residual convention: residual = f_i(x) - c_i, satisfied iff residual <= 0.
The -3c variants have empty feasible sets as stated (x1 <= -2.5 contradicts
the unit disk); they are registered anyway as penalty-compromise stress tests
and carry ``known_infeasible=True``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, RegistryError
from .penalty import ConstraintEval

# evaluator signature: (x[batch,k], p[batch,d]) -> (values[batch], grads[batch,k])
Evaluator = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Constraint:
    """One constraint: evaluator plus its bound (f(x;p) <= bound, or = bound)."""

    fn: Evaluator
    bound: float


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    decision_dim: int
    param_dim: int
    objective: Evaluator
    inequalities: tuple[Constraint, ...] = ()
    equalities: tuple[Constraint, ...] = ()
    param_ranges: tuple[tuple[float, float], ...] = ()
    default_net_shape: tuple[int, ...] = ()
    known_infeasible: bool = False

    def __post_init__(self):
        if len(self.param_ranges) != self.param_dim:
            raise DimensionError(
                f"{self.name}: {len(self.param_ranges)} ranges for "
                f"{self.param_dim} parameters"
            )
        for lo, hi in self.param_ranges:
            if lo > hi:
                raise ValueError(f"{self.name}: range low {lo} exceeds high {hi}")

    def constraint_eval(self, x: np.ndarray, p: np.ndarray) -> ConstraintEval:
        """Evaluate every constraint on a batch; residuals are value - bound."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        p = np.atleast_2d(np.asarray(p, dtype=float))
        n, k = x.shape[0], self.decision_dim

        def stack(cons):
            values = np.zeros((n, len(cons)))
            grads = np.zeros((n, len(cons), k))
            for i, c in enumerate(cons):
                v, g = c.fn(x, p)
                values[:, i] = v - c.bound
                grads[:, i, :] = g
            return values, grads

        iv, ig = stack(self.inequalities)
        ev, eg = stack(self.equalities)
        return ConstraintEval(ineq_values=iv, eq_values=ev, ineq_grads=ig, eq_grads=eg)


@dataclass(frozen=True)
class ParamSet:
    """Sampled parameter vectors, one per row, plus the seed that made them."""

    values: np.ndarray
    seed: int

    def __len__(self):
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# objectives

def rosenbrock_objective(x, p):
    x1, x2 = x[:, 0], x[:, 1]
    c1, c2 = p[:, 0], p[:, 1]
    d = x2 - x1 * x1
    f = c1 * d * d + (c2 - x1) ** 2
    g1 = -4.0 * c1 * x1 * d - 2.0 * (c2 - x1)
    g2 = 2.0 * c1 * d
    return f, np.stack([g1, g2], axis=1)


def ackley_objective(x, p):
    # gradient of the sqrt term is undefined at c3*(x1^2+x2^2) == 0; the zero
    # vector is returned there (valid subgradient, and the optimum in practice)
    x1, x2 = x[:, 0], x[:, 1]
    c1, c2, c3, c4, c5 = (p[:, i] for i in range(5))
    s = x1 * x1 + x2 * x2
    u = np.sqrt(c3 * s)
    exp1 = np.exp(-c2 * u)
    cos_sum = np.cos(2.0 * np.pi * x1) + np.cos(2.0 * np.pi * x2)
    exp2 = np.exp(c4 * cos_sum)
    f = -c1 * exp1 - exp2 + np.e + c5

    with np.errstate(divide="ignore", invalid="ignore"):
        inv_u = np.where(u > 0.0, 1.0 / np.where(u > 0.0, u, 1.0), 0.0)
    coef = c1 * c2 * exp1 * c3 * inv_u
    g1 = coef * x1 + 2.0 * np.pi * c4 * np.sin(2.0 * np.pi * x1) * exp2
    g2 = coef * x2 + 2.0 * np.pi * c4 * np.sin(2.0 * np.pi * x2) * exp2
    return f, np.stack([g1, g2], axis=1)


# constraint evaluators

def disk_constraint(x, p):
    v = x[:, 0] ** 2 + x[:, 1] ** 2
    return v, 2.0 * x


def coordinate_constraint(index):
    def fn(x, p):
        g = np.zeros_like(x)
        g[:, index] = 1.0
        return x[:, index].copy(), g

    return fn


# ---------------------------------------------------------------------------
# registry

_ROSENBROCK_RANGES = ((0.0, 30.0), (0.0, 1.0))
_ACKLEY_RANGES = ((0.0, 30.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 30.0))
_DEEP_SHAPE_TAIL = (10, 20, 20, 20, 10, 2)


def _rosenbrock_1c():
    return ProblemSpec(
        name="rosenbrock-1c",
        decision_dim=2,
        param_dim=2,
        objective=rosenbrock_objective,
        inequalities=(Constraint(disk_constraint, 1.0),),
        param_ranges=_ROSENBROCK_RANGES,
        default_net_shape=(2, 20, 20, 2),
    )


def _rosenbrock_3c():
    return ProblemSpec(
        name="rosenbrock-3c",
        decision_dim=2,
        param_dim=2,
        objective=rosenbrock_objective,
        inequalities=(
            Constraint(disk_constraint, 1.0),
            Constraint(coordinate_constraint(0), -2.5),
            Constraint(coordinate_constraint(1), -1.0),
        ),
        param_ranges=_ROSENBROCK_RANGES,
        default_net_shape=(2,) + _DEEP_SHAPE_TAIL,
        known_infeasible=True,
    )


def _ackley_1c():
    return ProblemSpec(
        name="ackley-1c",
        decision_dim=2,
        param_dim=5,
        objective=ackley_objective,
        inequalities=(Constraint(disk_constraint, 25.0),),
        param_ranges=_ACKLEY_RANGES,
        default_net_shape=(5,) + _DEEP_SHAPE_TAIL,
    )


def _ackley_3c():
    return ProblemSpec(
        name="ackley-3c",
        decision_dim=2,
        param_dim=5,
        objective=ackley_objective,
        inequalities=(
            Constraint(disk_constraint, 1.0),
            Constraint(coordinate_constraint(0), -2.5),
            Constraint(coordinate_constraint(1), -1.0),
        ),
        param_ranges=_ACKLEY_RANGES,
        default_net_shape=(5,) + _DEEP_SHAPE_TAIL,
        known_infeasible=True,
    )


_REGISTRY = {
    "rosenbrock-1c": _rosenbrock_1c,
    "rosenbrock-3c": _rosenbrock_3c,
    "ackley-1c": _ackley_1c,
    "ackley-3c": _ackley_3c,
}


def problem_names() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def make_problem(name: str) -> ProblemSpec:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise RegistryError(
            f"unknown problem {name!r}; known problems: {', '.join(_REGISTRY)}"
        ) from None


# ---------------------------------------------------------------------------
# operations

def eval_objective(spec: ProblemSpec, x, p):
    """Objective value and gradient at a single point (1-d x and p)."""
    x1 = np.atleast_2d(np.asarray(x, dtype=float))
    p1 = np.atleast_2d(np.asarray(p, dtype=float))
    if x1.shape[1] != spec.decision_dim:
        raise DimensionError(f"x has length {x1.shape[1]}, expected {spec.decision_dim}")
    if p1.shape[1] != spec.param_dim:
        raise DimensionError(f"p has length {p1.shape[1]}, expected {spec.param_dim}")
    f, g = spec.objective(x1, p1)
    return float(f[0]), g[0]


def eval_constraints(spec: ProblemSpec, x, p) -> ConstraintEval:
    """ConstraintEval at a single point (batch dimension of one)."""
    return spec.constraint_eval(x, p)


def sample_params(spec: ProblemSpec, count: int, seed: int = 0) -> ParamSet:
    """Uniform parameter samples within the spec ranges, one row each."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    cols = [rng.uniform(lo, hi, size=count) for lo, hi in spec.param_ranges]
    return ParamSet(values=np.stack(cols, axis=1), seed=int(seed))
