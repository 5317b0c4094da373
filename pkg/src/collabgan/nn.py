"""Dense MLP forward/backward passes, partial forward from any layer, and Adam.

All numeric data lives in row-major float64 numpy arrays; a batch is one row
per sample. Models and traces are plain immutable-by-convention values: safe
to share read-only across threads, mutated only through ``adam_step`` by a
single owner.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("leaky_relu", "tanh", "sigmoid", "identity")


class ContractViolation(ValueError):
    """A shape or value precondition was violated by the caller."""


def as_batch(x) -> np.ndarray:
    """Coerce to a 2-D float64 row-major array (one row per sample)."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ContractViolation(f"expected a 2-D batch, got shape {a.shape}")
    return a


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _apply_activation(kind: str, slope: float, z: np.ndarray) -> np.ndarray:
    if kind == "identity":
        return z
    if kind == "leaky_relu":
        return np.where(z >= 0.0, z, slope * z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return _sigmoid(z)
    raise ContractViolation(f"unknown activation {kind!r}")


def _activation_deriv(kind: str, slope: float, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative wrt pre-activation z, reusing the post-activation a."""
    if kind == "identity":
        return np.ones_like(z)
    if kind == "leaky_relu":
        return np.where(z >= 0.0, 1.0, slope)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "sigmoid":
        return a * (1.0 - a)
    raise ContractViolation(f"unknown activation {kind!r}")


@dataclass
class MlpLayer:
    """One affine-plus-activation layer: act(x @ weight + bias)."""

    weight: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str = "identity"
    slope: float = 0.2  # leaky_relu only

    def __post_init__(self):
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ContractViolation("layer weight must be 2-D and bias 1-D")
        if self.weight.shape[1] != self.bias.shape[0]:
            raise ContractViolation(
                f"bias length {self.bias.shape[0]} != weight out_dim {self.weight.shape[1]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ContractViolation(f"unknown activation {self.activation!r}")
        if self.activation == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ContractViolation(f"leaky_relu slope must be in (0, 1), got {self.slope}")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class MlpModel:
    """Sequential MLP. Serves as both generator body and discriminator body."""

    layers: list[MlpLayer]

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ContractViolation("model needs at least one layer")
        for i in range(1, len(self.layers)):
            if self.layers[i].in_dim != self.layers[i - 1].out_dim:
                raise ContractViolation(
                    f"layer {i + 1} expects in_dim {self.layers[i].in_dim} but layer {i} "
                    f"produces {self.layers[i - 1].out_dim}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)


@dataclass
class ForwardTrace:
    """Recorded intermediates of one (possibly partial) forward pass.

    ``activations[0]`` is the batch fed to layer ``from_layer``;
    ``activations[i]`` / ``pre_activations[i-1]`` belong to layer
    ``from_layer + i - 1``. A full forward has ``from_layer == 1``.
    """

    model: MlpModel
    from_layer: int
    pre_activations: list[np.ndarray] = field(repr=False)
    activations: list[np.ndarray] = field(repr=False)

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]

    @property
    def final_pre_activation(self) -> np.ndarray:
        return self.pre_activations[-1]


def forward_from(model: MlpModel, from_layer: int, activation) -> ForwardTrace:
    """Propagate ``activation`` through layers ``from_layer..L``, recording a trace.

    ``from_layer`` is 1-indexed; ``from_layer == L + 1`` yields an empty-tail
    trace whose output is the input itself.
    """
    L = model.num_layers
    if not 1 <= from_layer <= L + 1:
        raise ContractViolation(f"from_layer {from_layer} out of range 1..{L + 1}")
    a = as_batch(activation)
    want = model.layers[from_layer - 1].in_dim if from_layer <= L else model.output_dim
    if a.shape[1] != want:
        raise ContractViolation(
            f"activation width {a.shape[1]} does not match layer {from_layer} "
            f"input width {want}"
        )
    pres: list[np.ndarray] = []
    acts: list[np.ndarray] = [a]
    for i in range(from_layer - 1, L):
        layer = model.layers[i]
        z = acts[-1] @ layer.weight + layer.bias
        pres.append(z)
        acts.append(_apply_activation(layer.activation, layer.slope, z))
    return ForwardTrace(model=model, from_layer=from_layer, pre_activations=pres, activations=acts)


def mlp_forward(model: MlpModel, batch) -> ForwardTrace:
    """Full forward pass; batch width must equal the model input width."""
    batch = as_batch(batch)
    if batch.shape[1] != model.input_dim:
        raise ContractViolation(
            f"batch width {batch.shape[1]} does not match layer 1 input width {model.input_dim}"
        )
    return forward_from(model, 1, batch)


def partial_forward(model: MlpModel, from_layer: int, activation) -> np.ndarray:
    """Output of propagating ``activation`` through layers ``from_layer..L``."""
    return forward_from(model, from_layer, activation).output


def mlp_backward(
    trace: ForwardTrace,
    grad_output: np.ndarray,
    *,
    grad_at_final_pre_activation: bool = False,
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Reverse-mode gradients for the layers covered by ``trace``.

    Returns ``(param_grads, input_grad)`` where ``param_grads[i]`` is the
    ``(d_weight, d_bias)`` pair of covered layer ``i``. With
    ``grad_at_final_pre_activation`` the seed gradient is taken wrt the last
    layer's pre-activation instead of its output (numerically stable path for
    losses that are log-of-sigmoid).
    """
    grad_output = np.asarray(grad_output, dtype=np.float64)
    if grad_output.shape != trace.output.shape:
        raise ContractViolation(
            f"grad_output shape {grad_output.shape} != trace output shape {trace.output.shape}"
        )
    model = trace.model
    n_cov = len(trace.pre_activations)
    param_grads: list[tuple[np.ndarray, np.ndarray] | None] = [None] * n_cov
    dout = grad_output
    for i in range(n_cov - 1, -1, -1):
        layer = model.layers[trace.from_layer - 1 + i]
        z, a_in, a_out = trace.pre_activations[i], trace.activations[i], trace.activations[i + 1]
        if grad_at_final_pre_activation and i == n_cov - 1:
            dz = dout
        else:
            dz = dout * _activation_deriv(layer.activation, layer.slope, z, a_out)
        param_grads[i] = (a_in.T @ dz, dz.sum(axis=0))
        dout = dz @ layer.weight.T
    return param_grads, dout  # type: ignore[return-value]


def input_gradient(
    trace: ForwardTrace,
    grad_output: np.ndarray,
    *,
    grad_at_final_pre_activation: bool = False,
) -> np.ndarray:
    """Like mlp_backward but skips parameter gradients (refinement hot path)."""
    grad_output = np.asarray(grad_output, dtype=np.float64)
    if grad_output.shape != trace.output.shape:
        raise ContractViolation(
            f"grad_output shape {grad_output.shape} != trace output shape {trace.output.shape}"
        )
    model = trace.model
    n_cov = len(trace.pre_activations)
    dout = grad_output
    for i in range(n_cov - 1, -1, -1):
        layer = model.layers[trace.from_layer - 1 + i]
        z, a_out = trace.pre_activations[i], trace.activations[i + 1]
        if grad_at_final_pre_activation and i == n_cov - 1:
            dz = dout
        else:
            dz = dout * _activation_deriv(layer.activation, layer.slope, z, a_out)
        dout = dz @ layer.weight.T
    return dout


def glorot_init(
    layer_dims: list[int],
    activations: list[str],
    rng: np.random.Generator,
    slope: float = 0.2,
) -> MlpModel:
    """Build an MLP with uniform Glorot weights and zero biases.

    ``layer_dims`` is ``[input_dim, h1, ..., output_dim]``; ``activations``
    names one activation per layer.
    """
    if len(activations) != len(layer_dims) - 1:
        raise ContractViolation("need one activation per layer")
    layers = []
    for i, act in enumerate(activations):
        fan_in, fan_out = layer_dims[i], layer_dims[i + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(MlpLayer(weight=w, bias=np.zeros(fan_out), activation=act, slope=slope))
    return MlpModel(layers=layers)


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one MlpModel."""

    m: list[tuple[np.ndarray, np.ndarray]]
    v: list[tuple[np.ndarray, np.ndarray]]
    step: int = 0
    learning_rate: float = 1e-4
    beta1: float = 0.5  # GAN-training convention
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: MlpModel, learning_rate: float = 1e-4, **kw) -> "AdamState":
        if learning_rate <= 0:
            raise ContractViolation("learning rate must be positive")
        zeros = lambda arr: np.zeros_like(arr)
        m = [(zeros(l.weight), zeros(l.bias)) for l in model.layers]
        v = [(zeros(l.weight), zeros(l.bias)) for l in model.layers]
        return cls(m=m, v=v, learning_rate=learning_rate, **kw)


def adam_step(
    model: MlpModel,
    grads: list[tuple[np.ndarray, np.ndarray]],
    state: AdamState,
) -> None:
    """Apply one in-place bias-corrected Adam update to every layer parameter."""
    if len(grads) != model.num_layers:
        raise ContractViolation("gradient list length must match layer count")
    for i, (gw, gb) in enumerate(grads):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise ContractViolation(f"non-finite gradient for layer {i + 1}")
        if gw.shape != model.layers[i].weight.shape or gb.shape != model.layers[i].bias.shape:
            raise ContractViolation(f"gradient shape mismatch for layer {i + 1}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for i, (gw, gb) in enumerate(grads):
        layer = model.layers[i]
        for (m, v, g, p) in (
            (state.m[i][0], state.v[i][0], gw, layer.weight),
            (state.m[i][1], state.v[i][1], gb, layer.bias),
        ):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
