"""Dense MLP forward/backward pass, ADAM updates, and the MAC-count cost model.

Everything is plain float64 numpy.  Networks are value objects: forward passes
share them freely, and updates return new instances instead of mutating.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionError,
    ModelFormatError,
    ModelVersionError,
    NonFiniteError,
    TraceError,
)

MODEL_FORMAT_HEADER = "penalearn-model v1"

HIDDEN_ACTIVATIONS = ("tanh",)
OUTPUT_ACTIVATIONS = ("identity",)


def _check_layer_sizes(layer_sizes):
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 3:
        raise DimensionError(
            f"need at least one hidden layer (got layer sizes {sizes})"
        )
    if any(s <= 0 for s in sizes):
        raise DimensionError(f"layer sizes must be positive, got {sizes}")
    return sizes


@dataclass(frozen=True)
class Mlp:
    """Feed-forward network: tanh hidden layers, identity output layer.

    ``weights[t]`` has shape (layer_sizes[t+1], layer_sizes[t]), rows are
    fan-out, and ``biases[t]`` has length layer_sizes[t+1].
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    hidden_activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        sizes = _check_layer_sizes(self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "biases", tuple(self.biases))
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unsupported output activation {self.output_activation!r}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise DimensionError(
                f"expected {len(sizes) - 1} weight/bias tensors, got "
                f"{len(self.weights)}/{len(self.biases)}"
            )
        for t, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (sizes[t + 1], sizes[t])
            if w.shape != want:
                raise DimensionError(f"weight {t} has shape {w.shape}, expected {want}")
            if b.shape != (sizes[t + 1],):
                raise DimensionError(
                    f"bias {t} has shape {b.shape}, expected ({sizes[t + 1]},)"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NonFiniteError(f"layer {t} contains non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def init_mlp(layer_sizes, seed=0) -> Mlp:
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    sizes = _check_layer_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(layer_sizes=sizes, weights=tuple(weights), biases=tuple(biases))


@dataclass(frozen=True)
class ForwardTrace:
    """Per-layer activations cached by mlp_forward for the backward pass."""

    inputs: np.ndarray                       # (batch, n)
    pre_activations: tuple[np.ndarray, ...]  # (batch, layer_sizes[t+1]) each
    post_activations: tuple[np.ndarray, ...]

    @property
    def batch_size(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class Gradients:
    """Parameter gradients, shape-matching an Mlp's weights and biases."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(
            weights=tuple(w * factor for w in self.weights),
            biases=tuple(b * factor for b in self.biases),
        )


def mlp_forward(net: Mlp, batch: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    """Run the network on a (batch, n) input matrix.

    Returns the (batch, k) outputs and a trace of every layer's pre/post
    activations for use by mlp_backward.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise DimensionError(
            f"input batch has shape {batch.shape}, expected (batch, {net.input_dim})"
        )
    if not np.all(np.isfinite(batch)):
        raise NonFiniteError("input batch contains non-finite entries")

    pre = []
    post = []
    a = batch
    last = net.num_layers - 1
    for t, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if t == last else np.tanh(z)
        post.append(a)
    return a, ForwardTrace(
        inputs=batch, pre_activations=tuple(pre), post_activations=tuple(post)
    )


def _check_trace(net: Mlp, trace: ForwardTrace):
    if len(trace.pre_activations) != net.num_layers:
        raise TraceError(
            f"trace has {len(trace.pre_activations)} layers, net has {net.num_layers}"
        )
    if trace.inputs.shape[1] != net.input_dim:
        raise TraceError(
            f"trace input dim {trace.inputs.shape[1]} != net input dim {net.input_dim}"
        )
    for t, z in enumerate(trace.pre_activations):
        if z.shape != (trace.batch_size, net.layer_sizes[t + 1]):
            raise TraceError(f"trace layer {t} has shape {z.shape}, stale for this net")


def mlp_backward(
    net: Mlp, trace: ForwardTrace, upstream: np.ndarray
) -> tuple[Gradients, np.ndarray]:
    """Reverse-mode gradients for the summed batch loss.

    ``upstream`` is dL/d(output) per sample, shape (batch, k).  Returns the
    gradients of sum-over-batch L with respect to every weight and bias, plus
    dL/d(input) per sample for diagnostics.
    """
    upstream = np.asarray(upstream, dtype=float)
    _check_trace(net, trace)
    if upstream.shape != (trace.batch_size, net.output_dim):
        raise DimensionError(
            f"upstream has shape {upstream.shape}, expected "
            f"({trace.batch_size}, {net.output_dim})"
        )

    weight_grads: list[np.ndarray] = [None] * net.num_layers  # type: ignore[list-item]
    bias_grads: list[np.ndarray] = [None] * net.num_layers  # type: ignore[list-item]
    delta = upstream  # identity output layer: dL/dz_last = upstream
    for t in range(net.num_layers - 1, -1, -1):
        a_prev = trace.inputs if t == 0 else trace.post_activations[t - 1]
        weight_grads[t] = delta.T @ a_prev
        bias_grads[t] = delta.sum(axis=0)
        delta = delta @ net.weights[t]
        if t > 0:
            # tanh'(z) = 1 - tanh(z)^2, and post_activations[t-1] = tanh(z)
            delta = delta * (1.0 - trace.post_activations[t - 1] ** 2)
    return Gradients(tuple(weight_grads), tuple(bias_grads)), delta


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators plus the ADAM hyperparameters."""

    m_weights: tuple[np.ndarray, ...]
    m_biases: tuple[np.ndarray, ...]
    v_weights: tuple[np.ndarray, ...]
    v_biases: tuple[np.ndarray, ...]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    learning_rate: float = 1e-3

    @classmethod
    def for_net(cls, net: Mlp, learning_rate=1e-3, beta1=0.9, beta2=0.999,
                epsilon=1e-8) -> "AdamState":
        return cls(
            m_weights=tuple(np.zeros_like(w) for w in net.weights),
            m_biases=tuple(np.zeros_like(b) for b in net.biases),
            v_weights=tuple(np.zeros_like(w) for w in net.weights),
            v_biases=tuple(np.zeros_like(b) for b in net.biases),
            step_count=0,
            beta1=float(beta1),
            beta2=float(beta2),
            epsilon=float(epsilon),
            learning_rate=float(learning_rate),
        )


def _check_shapes_match(net: Mlp, tensors_w, tensors_b, what: str):
    if len(tensors_w) != net.num_layers or len(tensors_b) != net.num_layers:
        raise DimensionError(f"{what} layer count does not match the net")
    for t in range(net.num_layers):
        if tensors_w[t].shape != net.weights[t].shape:
            raise DimensionError(
                f"{what} weight {t} has shape {tensors_w[t].shape}, "
                f"net expects {net.weights[t].shape}"
            )
        if tensors_b[t].shape != net.biases[t].shape:
            raise DimensionError(
                f"{what} bias {t} has shape {tensors_b[t].shape}, "
                f"net expects {net.biases[t].shape}"
            )


def adam_step(net: Mlp, state: AdamState, grads: Gradients) -> tuple[Mlp, AdamState]:
    """One bias-corrected ADAM update; returns the new net and state.

    Update per tensor: m <- b1*m + (1-b1)*g, v <- b2*v + (1-b2)*g^2, then
    param <- param - lr * m_hat / sqrt(v_hat + eps) with the usual 1-b^t
    bias corrections.
    """
    _check_shapes_match(net, grads.weights, grads.biases, "gradient")
    _check_shapes_match(net, state.m_weights, state.m_biases, "adam state")

    t = state.step_count + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t

    def update(param, m, v, g):
        m_new = state.beta1 * m + (1.0 - state.beta1) * g
        v_new = state.beta2 * v + (1.0 - state.beta2) * g * g
        step = state.learning_rate * (m_new / c1) / np.sqrt(v_new / c2 + state.epsilon)
        return param - step, m_new, v_new

    new_w, new_b = [], []
    m_w, m_b, v_w, v_b = [], [], [], []
    for layer in range(net.num_layers):
        w, mw, vw = update(net.weights[layer], state.m_weights[layer],
                           state.v_weights[layer], grads.weights[layer])
        b, mb, vb = update(net.biases[layer], state.m_biases[layer],
                           state.v_biases[layer], grads.biases[layer])
        new_w.append(w)
        new_b.append(b)
        m_w.append(mw)
        m_b.append(mb)
        v_w.append(vw)
        v_b.append(vb)

    new_net = replace(net, weights=tuple(new_w), biases=tuple(new_b))
    new_state = replace(
        state,
        m_weights=tuple(m_w),
        m_biases=tuple(m_b),
        v_weights=tuple(v_w),
        v_biases=tuple(v_b),
        step_count=t,
    )
    return new_net, new_state


def mac_count(layer_sizes) -> int:
    """Multiply-accumulate count of one forward pass: sum of consecutive
    layer-size products n*m1 + m1*m2 + ... + m_l*k."""
    sizes = _check_layer_sizes(layer_sizes)
    return sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))


def training_mac_estimate(layer_sizes, epochs: int, samples: int) -> int:
    """Total forward-MAC budget of a training run: epochs * samples * mac_count.

    A cost proxy only; backward-pass constant factors are not modeled.
    """
    return int(epochs) * int(samples) * mac_count(layer_sizes)


# ---------------------------------------------------------------------------
# Model file format: a versioned flat text file.  Header line, layer sizes
# line, then one line per parameter tensor (W0, b0, W1, b1, ...) as decimal
# doubles with 17 significant digits, which round-trips float64 exactly.

def _format_tensor(t: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in t.ravel())


def save_model(net: Mlp, path) -> None:
    """Write the network to ``path`` atomically (temp file + rename)."""
    lines = [MODEL_FORMAT_HEADER, " ".join(str(s) for s in net.layer_sizes)]
    for w, b in zip(net.weights, net.biases):
        lines.append(_format_tensor(w))
        lines.append(_format_tensor(b))
    text = "\n".join(lines) + "\n"
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path) -> Mlp:
    """Read a model file written by save_model; exact weight round trip."""
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ModelFormatError("empty model file", line_number=1)
    if lines[0].strip() != MODEL_FORMAT_HEADER:
        raise ModelVersionError(
            f"unsupported model header {lines[0]!r}, expected {MODEL_FORMAT_HEADER!r}",
            line_number=1,
        )
    try:
        sizes = tuple(int(tok) for tok in lines[1].split())
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"bad layer-sizes line: {exc}", line_number=2) from exc
    sizes = _check_layer_sizes(sizes)

    weights, biases = [], []
    lineno = 2
    for t in range(len(sizes) - 1):
        fan_out, fan_in = sizes[t + 1], sizes[t]
        for kind, count, shape in (
            ("weight", fan_out * fan_in, (fan_out, fan_in)),
            ("bias", fan_out, (fan_out,)),
        ):
            lineno += 1
            if lineno > len(lines):
                raise ModelFormatError(
                    f"truncated file: missing {kind} tensor for layer {t}",
                    line_number=lineno,
                )
            try:
                values = np.array([float(tok) for tok in lines[lineno - 1].split()])
            except ValueError as exc:
                raise ModelFormatError(
                    f"bad float in {kind} tensor for layer {t}: {exc}",
                    line_number=lineno,
                ) from exc
            if values.size != count:
                raise ModelFormatError(
                    f"{kind} tensor for layer {t} has {values.size} values, "
                    f"expected {count}",
                    line_number=lineno,
                )
            if kind == "weight":
                weights.append(values.reshape(shape))
            else:
                biases.append(values)
    extra = [ln for ln in lines[lineno:] if ln.strip()]
    if extra:
        raise ModelFormatError(
            "trailing content after final tensor", line_number=lineno + 1
        )
    return Mlp(layer_sizes=sizes, weights=tuple(weights), biases=tuple(biases))
