"""Unsupervised training loop: sample parameters, push them through the net,
penalize the outputs, and descend the mean penalized loss with ADAM.

No labels anywhere: the loss of a batch is the mean of objective + penalty at
the network outputs, so gradients flow from the optimization landscape itself
back into the weights.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, TrainingDivergedError
from .nn import (
    AdamState,
    Mlp,
    adam_step,
    init_mlp,
    load_model,
    mlp_backward,
    mlp_forward,
    save_model,
)
from .penalty import PenaltyConfig, loss_terms_batch, violation_report, violation_report_batch
from .problems import ParamSet, ProblemSpec, sample_params

__all__ = [
    "TrainConfig",
    "TrainLogEntry",
    "TrainLog",
    "EvalReport",
    "train",
    "evaluate",
    "save_model",
    "load_model",
]

TRAIN_LOG_COLUMNS = ("epoch", "mean_loss", "mean_objective", "mean_penalty",
                     "feasible_frac", "elapsed_s")


@dataclass(frozen=True)
class TrainConfig:
    """Training-run settings; defaults follow the benchmark reproductions."""

    sample_count: int = 1000
    epochs: int = 5000
    batch_size: int = 100
    seed: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    log_every: int = 100
    net_shape: Optional[tuple[int, ...]] = None
    feas_tolerance: float = 0.1
    normalize_inputs: bool = True
    divergence_limit: float = 1e15

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.sample_count < 1:
            raise ConfigError(f"sample_count must be >= 1, got {self.sample_count}")
        if not 1 <= self.batch_size <= self.sample_count:
            raise ConfigError(
                f"batch_size must be in [1, sample_count], got {self.batch_size} "
                f"with sample_count {self.sample_count}"
            )
        if self.log_every < 1:
            raise ConfigError(f"log_every must be >= 1, got {self.log_every}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass(frozen=True)
class TrainLogEntry:
    epoch: int
    mean_loss: float
    mean_objective: float
    mean_penalty: float
    feasible_frac: float
    elapsed_s: float


@dataclass(frozen=True)
class TrainLog:
    """Full-sample-set metrics at epoch 0, every log point, and the final epoch."""

    entries: tuple[TrainLogEntry, ...]

    def final(self) -> TrainLogEntry:
        return self.entries[-1]

    def to_csv(self) -> str:
        lines = [",".join(TRAIN_LOG_COLUMNS)]
        for e in self.entries:
            lines.append(
                f"{e.epoch},{e.mean_loss:.17g},{e.mean_objective:.17g},"
                f"{e.mean_penalty:.17g},{e.feasible_frac:.17g},{e.elapsed_s:.6f}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EvalReport:
    """Per-instance scorecard for one forward-pass solution."""

    params: np.ndarray
    x: np.ndarray
    objective: float
    ineq_residuals: np.ndarray
    eq_residuals: np.ndarray
    max_ineq_violation: float
    max_eq_violation: float
    feasible: bool
    forward_time_s: float
    oracle_distance: Optional[float] = None


def _input_transform(spec: ProblemSpec, enabled: bool):
    """Affine map p -> (p - mid) / half mapping the sample ranges onto [-1, 1]."""
    lo = np.array([r[0] for r in spec.param_ranges])
    hi = np.array([r[1] for r in spec.param_ranges])
    if not enabled:
        return np.zeros_like(lo), np.ones_like(hi)
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    half = np.where(half > 0.0, half, 1.0)  # degenerate [a, a] range
    return mid, half


def _fold_input_transform(net: Mlp, mid: np.ndarray, half: np.ndarray) -> Mlp:
    """Rewrite layer 0 so the returned net takes raw parameters.

    tanh(W u + b) with u = (p - mid)/half equals tanh(W' p + b') for
    W' = W/half (columnwise) and b' = b - W (mid/half); the fold is exact up
    to one float rounding per entry.
    """
    w0 = net.weights[0] / half[None, :]
    b0 = net.biases[0] - net.weights[0] @ (mid / half)
    from dataclasses import replace

    return replace(
        net,
        weights=(w0,) + net.weights[1:],
        biases=(b0,) + net.biases[1:],
    )


def _resolve_shape(spec: ProblemSpec, cfg: TrainConfig) -> tuple[int, ...]:
    shape = tuple(cfg.net_shape) if cfg.net_shape else tuple(spec.default_net_shape)
    if not shape:
        raise ConfigError(f"no net shape configured for problem {spec.name}")
    if shape[0] != spec.param_dim:
        raise ConfigError(
            f"net input dim {shape[0]} != problem param dim {spec.param_dim}"
        )
    if shape[-1] != spec.decision_dim:
        raise ConfigError(
            f"net output dim {shape[-1]} != problem decision dim {spec.decision_dim}"
        )
    return shape


def _log_entry(epoch, net, inputs, raw_params, spec, cfg, t0) -> TrainLogEntry:
    outputs, _ = mlp_forward(net, inputs)
    loss, f0, omega, _ = loss_terms_batch(outputs, raw_params, spec, cfg.penalty)
    max_ineq, max_eq, _ = violation_report_batch(
        outputs, raw_params, spec, cfg.penalty.eq_tolerance
    )
    worst = np.maximum(max_ineq, max_eq)
    return TrainLogEntry(
        epoch=int(epoch),
        mean_loss=float(loss.mean()),
        mean_objective=float(f0.mean()),
        mean_penalty=float(omega.mean()),
        feasible_frac=float((worst <= cfg.feas_tolerance).mean()),
        elapsed_s=time.perf_counter() - t0,
    )


def train(spec: ProblemSpec, cfg: TrainConfig) -> tuple[Mlp, TrainLog]:
    """Train a network for ``spec`` and return it with the training log.

    Each epoch visits all samples in shuffled minibatches; the per-batch
    parameter gradient is the gradient of the batch mean of objective +
    penalty.  Fully deterministic for a fixed config.
    """
    shape = _resolve_shape(spec, cfg)
    params = sample_params(spec, cfg.sample_count, cfg.seed)
    raw = params.values
    mid, half = _input_transform(spec, cfg.normalize_inputs)
    inputs = (raw - mid) / half

    net = init_mlp(shape, seed=(cfg.seed, 1))
    state = AdamState.for_net(
        net,
        learning_rate=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.adam_epsilon,
    )
    shuffle_rng = np.random.default_rng((cfg.seed, 2))

    t0 = time.perf_counter()
    entries = [_log_entry(0, net, inputs, raw, spec, cfg, t0)]
    n = cfg.sample_count
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        for lo_idx in range(0, n, cfg.batch_size):
            idx = order[lo_idx:lo_idx + cfg.batch_size]
            outputs, trace = mlp_forward(net, inputs[idx])
            loss, grad_x = _batch_loss_guarded(
                outputs, raw[idx], spec, cfg, epoch, idx
            )
            upstream = grad_x / idx.size  # gradient of the batch mean
            grads, _ = mlp_backward(net, trace, upstream)
            net, state = adam_step(net, state, grads)
        if epoch % cfg.log_every == 0 or epoch == cfg.epochs:
            entries.append(_log_entry(epoch, net, inputs, raw, spec, cfg, t0))

    folded = _fold_input_transform(net, mid, half)
    return folded, TrainLog(entries=tuple(entries))


def _batch_loss_guarded(outputs, raw_params, spec, cfg, epoch, idx):
    from .penalty import total_loss_batch

    loss, grad_x = total_loss_batch(outputs, raw_params, spec, cfg.penalty)
    bad = ~np.isfinite(loss)
    if bad.any():
        sample = int(idx[int(np.argmax(bad))])
        raise TrainingDivergedError(
            f"non-finite loss at epoch {epoch}, sample {sample}",
            epoch=epoch,
            sample_index=sample,
        )
    mean = float(loss.mean())
    if mean > cfg.divergence_limit:
        sample = int(idx[int(np.argmax(loss))])
        raise TrainingDivergedError(
            f"mean loss {mean:.3g} exceeded divergence limit "
            f"{cfg.divergence_limit:.3g} at epoch {epoch} (worst sample {sample})",
            epoch=epoch,
            sample_index=sample,
        )
    return loss, grad_x


def evaluate(
    net: Mlp,
    spec: ProblemSpec,
    params: ParamSet,
    cfg: Optional[PenaltyConfig] = None,
) -> list[EvalReport]:
    """Score the forward pass on each parameter vector in ``params``."""
    cfg = cfg if cfg is not None else PenaltyConfig()
    if net.input_dim != spec.param_dim:
        raise DimensionError(
            f"net input dim {net.input_dim} != problem param dim {spec.param_dim}"
        )
    from .problems import eval_objective

    reports = []
    for row in params.values:
        t0 = time.perf_counter()
        out, _ = mlp_forward(net, row[None, :])
        dt = time.perf_counter() - t0
        x = out[0]
        f0, _ = eval_objective(spec, x, row)
        ce = spec.constraint_eval(x[None, :], row[None, :])
        max_ineq, max_eq, feasible = violation_report(
            x, row, spec, cfg.eq_tolerance
        )
        reports.append(
            EvalReport(
                params=row.copy(),
                x=x.copy(),
                objective=f0,
                ineq_residuals=ce.ineq_values[0].copy(),
                eq_residuals=ce.eq_values[0].copy(),
                max_ineq_violation=max_ineq,
                max_eq_violation=max_eq,
                feasible=feasible,
                forward_time_s=dt,
            )
        )
    return reports


def eval_reports_csv(reports: Sequence[EvalReport]) -> str:
    """CSV over per-instance scorecards; one row per parameter vector."""
    if not reports:
        return "# empty evaluation\n"
    d = reports[0].params.size
    k = reports[0].x.size
    header = (
        [f"c{i + 1}" for i in range(d)]
        + [f"x{i + 1}" for i in range(k)]
        + ["f0", "max_ineq_violation", "max_eq_violation", "feasible", "t_fwd_ns"]
    )
    lines = [",".join(header)]
    for r in reports:
        cells = (
            ["%.17g" % v for v in r.params]
            + ["%.17g" % v for v in r.x]
            + [
                "%.17g" % r.objective,
                "%.17g" % r.max_ineq_violation,
                "%.17g" % r.max_eq_violation,
                str(int(r.feasible)),
                "%.17g" % (r.forward_time_s * 1e9),
            ]
        )
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
