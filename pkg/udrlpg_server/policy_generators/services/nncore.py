"""
Dense feed-forward network engine: forward pass, analytic backpropagation,
mean-squared-error loss and Adam.

Every network is described by a NetSpec and stores all of its weights and
biases in a single flat float64 vector. The canonical flattening order is, for
each layer in turn, the weight matrix in row-major (output-neuron-major) order
followed by the bias vector.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, NonFiniteError, StaleCacheError

logger = logging.getLogger(__name__)

HIDDEN_ACTIVATIONS = ("tanh", "relu")
OUTPUT_ACTIVATIONS = ("identity", "tanh")


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _activation_derivative(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    return np.ones_like(z)


@dataclass(frozen=True)
class NetSpec:
    """Architecture of a dense network: layer sizes and activation names."""

    layer_sizes: Tuple[int, ...]
    hidden_activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        sizes = tuple(int(size) for size in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)

        if len(sizes) < 2:
            raise ConfigurationError(
                f"NetSpec needs at least 2 layer sizes, got {list(sizes)}"
            )
        if any(size < 1 for size in sizes):
            raise ConfigurationError(f"All layer sizes must be >= 1, got {list(sizes)}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigurationError(
                f"Unknown hidden activation '{self.hidden_activation}'"
            )
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigurationError(
                f"Unknown output activation '{self.output_activation}'"
            )

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def layer_shapes(self) -> List[Tuple[int, int]]:
        """(n_out, n_in) of every weight matrix, in order."""
        return [
            (n_out, n_in)
            for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:])
        ]

    @property
    def param_count(self) -> int:
        return param_count(self)

    def activation_for(self, layer_index: int) -> str:
        if layer_index == len(self.layer_sizes) - 2:
            return self.output_activation
        return self.hidden_activation

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layer_sizes": list(self.layer_sizes),
            "hidden_activation": self.hidden_activation,
            "output_activation": self.output_activation,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetSpec":
        return cls(
            layer_sizes=tuple(data["layer_sizes"]),
            hidden_activation=data.get("hidden_activation", "tanh"),
            output_activation=data.get("output_activation", "identity"),
        )


def param_count(spec: NetSpec) -> int:
    """Number of weights and biases: sum over layers of n_l * n_{l+1} + n_{l+1}."""
    return sum(n_out * n_in + n_out for n_out, n_in in spec.layer_shapes)


def split_layers(spec: NetSpec, values: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Reshape a flat vector into (weight, bias) pairs without copying."""
    values = np.asarray(values)
    if values.shape != (spec.param_count,):
        raise ConfigurationError(
            f"Expected {spec.param_count} parameters, got shape {values.shape}"
        )

    layers = []
    offset = 0
    for n_out, n_in in spec.layer_shapes:
        weight = values[offset : offset + n_out * n_in].reshape(n_out, n_in)
        offset += n_out * n_in
        bias = values[offset : offset + n_out]
        offset += n_out
        layers.append((weight, bias))
    return layers


def flatten_layers(layers: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Inverse of split_layers, in canonical order."""
    chunks = []
    for weight, bias in layers:
        chunks.append(np.asarray(weight, dtype=np.float64).ravel())
        chunks.append(np.asarray(bias, dtype=np.float64).ravel())
    return np.concatenate(chunks)


@dataclass(frozen=True, eq=False)
class FlatParams:
    """Every weight and bias of one network, as a read-only float64 vector."""

    spec: NetSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (self.spec.param_count,):
            raise ConfigurationError(
                f"FlatParams length {values.size} does not match "
                f"param_count {self.spec.param_count} for {list(self.spec.layer_sizes)}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("FlatParams contain non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return split_layers(self.spec, self.values)

    @classmethod
    def from_layers(
        cls, spec: NetSpec, layers: Sequence[Tuple[np.ndarray, np.ndarray]]
    ) -> "FlatParams":
        return cls(spec=spec, values=flatten_layers(layers))

    def with_values(self, values: np.ndarray) -> "FlatParams":
        return FlatParams(spec=self.spec, values=values)

    def to_fragment(self) -> Dict[str, Any]:
        """JSON-ready record: spec plus values in canonical order."""
        fragment = self.spec.to_dict()
        fragment["values"] = self.values.tolist()
        return fragment

    @classmethod
    def from_fragment(cls, fragment: Dict[str, Any]) -> "FlatParams":
        try:
            spec = NetSpec.from_dict(fragment)
            return cls(spec=spec, values=np.asarray(fragment["values"], dtype=np.float64))
        except KeyError as e:
            raise ConfigurationError(f"Network fragment is missing field {e}") from e


def init_params(
    spec: NetSpec, rng: np.random.Generator, output_scale: float = 1.0
) -> FlatParams:
    """
    Uniform initialization in +/- sqrt(6 / (fan_in + fan_out)) per layer,
    biases zero. The last layer's weights are multiplied by output_scale.
    """
    layers = []
    last = len(spec.layer_shapes) - 1
    for index, (n_out, n_in) in enumerate(spec.layer_shapes):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weight = rng.uniform(-bound, bound, size=(n_out, n_in))
        if index == last:
            weight = weight * output_scale
        layers.append((weight, np.zeros(n_out)))
    return FlatParams.from_layers(spec, layers)


def init_bounds(spec: NetSpec) -> np.ndarray:
    """Per-coordinate absolute bound of init_params, in canonical order."""
    bounds = []
    for n_out, n_in in spec.layer_shapes:
        bound = np.sqrt(6.0 / (n_in + n_out))
        bounds.append((np.full((n_out, n_in), bound), np.zeros(n_out)))
    return flatten_layers(bounds)


@dataclass
class ForwardCache:
    """Per-layer inputs, pre-activations and activations of one forward call."""

    spec: NetSpec
    params: FlatParams
    single: bool
    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    activations: List[np.ndarray] = field(default_factory=list)

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


def _check_params(spec: NetSpec, params: FlatParams) -> None:
    if params.spec != spec:
        raise ConfigurationError(
            f"Parameters built for {list(params.spec.layer_sizes)} "
            f"used with spec {list(spec.layer_sizes)}"
        )


def forward(
    spec: NetSpec, params: FlatParams, inputs: np.ndarray
) -> Tuple[np.ndarray, ForwardCache]:
    """
    Run the network on one input vector or a batch of row vectors.

    Returns the output (same batch layout as the input) and the cache that
    backward needs.
    """
    _check_params(spec, params)
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    batch = np.atleast_2d(x)
    if batch.ndim != 2 or batch.shape[1] != spec.input_size:
        raise ConfigurationError(
            f"Input of shape {x.shape} does not match input size {spec.input_size}"
        )

    cache = ForwardCache(spec=spec, params=params, single=single)
    activation = batch
    for index, (weight, bias) in enumerate(params.layers()):
        cache.inputs.append(activation)
        pre = activation @ weight.T + bias
        activation = _activate(spec.activation_for(index), pre)
        cache.pre_activations.append(pre)
        cache.activations.append(activation)

    output = cache.output[0] if single else cache.output
    return output.copy(), cache


def backward(
    cache: ForwardCache,
    upstream_grad: np.ndarray,
    params: Optional[FlatParams] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradient of a scalar loss w.r.t. the flat parameters and the input.

    upstream_grad is dL/d(output) in the same layout forward returned. Batch
    gradients are summed over rows. When params is given it must be the
    vector the cache was produced with.
    """
    if params is not None and (
        params.spec != cache.spec or not np.array_equal(params.values, cache.params.values)
    ):
        raise StaleCacheError()

    grad = np.asarray(upstream_grad, dtype=np.float64)
    grad = grad[np.newaxis, :] if cache.single and grad.ndim == 1 else grad
    if grad.shape != cache.output.shape:
        raise StaleCacheError(
            f"Upstream gradient shape {np.shape(upstream_grad)} does not match "
            f"cached output shape {cache.output.shape}"
        )

    layers = cache.params.layers()
    layer_grads: List[Tuple[np.ndarray, np.ndarray]] = [None] * len(layers)
    for index in reversed(range(len(layers))):
        weight, _ = layers[index]
        delta = grad * _activation_derivative(
            cache.spec.activation_for(index),
            cache.pre_activations[index],
            cache.activations[index],
        )
        layer_grads[index] = (delta.T @ cache.inputs[index], delta.sum(axis=0))
        grad = delta @ weight

    input_grad = grad[0] if cache.single else grad
    return flatten_layers(layer_grads), input_grad


def mse(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient 2(pred - target)/n."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ConfigurationError(
            f"mse shape mismatch: pred {pred.shape} vs target {target.shape}"
        )
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


@dataclass(frozen=True)
class AdamState:
    step: int
    m: np.ndarray
    v: np.ndarray
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, **constants) -> "AdamState":
        return cls(step=0, m=np.zeros(size), v=np.zeros(size), **constants)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "m": self.m.tolist(),
            "v": self.v.tolist(),
            "alpha": self.alpha,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AdamState":
        return cls(
            step=int(data["step"]),
            m=np.asarray(data["m"], dtype=np.float64),
            v=np.asarray(data["v"], dtype=np.float64),
            alpha=data["alpha"],
            beta1=data["beta1"],
            beta2=data["beta2"],
            eps=data["eps"],
        )


def adam_step(
    state: AdamState, params: np.ndarray, grad: np.ndarray
) -> Tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Raises NonFiniteError and leaves state untouched on bad gradients."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if not (params.shape == grad.shape == state.m.shape == state.v.shape):
        raise ConfigurationError(
            f"Adam shapes differ: params {params.shape}, grad {grad.shape}, "
            f"state {state.m.shape}"
        )
    if not np.all(np.isfinite(grad)):
        bad = int(np.count_nonzero(~np.isfinite(grad)))
        logger.warning(f"Adam update aborted at step {state.step}: {bad} non-finite gradient entries")
        raise NonFiniteError(f"{bad} non-finite gradient entries at Adam step {state.step}")

    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    updated = params - state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)

    return updated, replace(state, step=step, m=m, v=v)
