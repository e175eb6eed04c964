"""Small multilayer perceptrons with hand-written backpropagation and Adam.

Parameters live in one flat float vector so they can be copied, averaged,
sampled (CEM) and checkpointed as plain arrays.  Layer ``i`` stores its
weight matrix ``(fan_out, fan_in)`` row-major followed by its bias.  A
Gaussian head appends one state-independent log-std per output.

Forward and backward accept a single input vector or a batch ``(n, d)``;
batch gradients are summed over rows.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .exceptions import DomainError, TrainingError

HEADS = ("linear", "softmax", "gaussian")
ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_layers: tuple[int, ...] = (64, 64)
    activation: str = "tanh"
    output_dim: int = 1
    output_head: str = "linear"
    init_log_std: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden_layers):
            raise DomainError("network dimensions must be positive")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"activation must be one of {ACTIVATIONS}")
        if self.output_head not in HEADS:
            raise DomainError(f"output_head must be one of {HEADS}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_layers, self.output_dim)

    @property
    def n_outputs(self) -> int:
        """Length of the forward output (mean and log-std for a Gaussian head)."""
        return 2 * self.output_dim if self.output_head == "gaussian" else self.output_dim

    def layout(self) -> list[tuple[slice, slice, tuple[int, int]]]:
        """(weight slice, bias slice, weight shape) per affine layer."""
        out, pos = [], 0
        sizes = self.layer_sizes
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = slice(pos, pos + fan_in * fan_out)
            pos = w.stop
            b = slice(pos, pos + fan_out)
            pos = b.stop
            out.append((w, b, (fan_out, fan_in)))
        return out

    @property
    def log_std_slice(self) -> slice | None:
        if self.output_head != "gaussian":
            return None
        end = self.layout()[-1][1].stop
        return slice(end, end + self.output_dim)

    @property
    def n_params(self) -> int:
        n = self.layout()[-1][1].stop
        return n + (self.output_dim if self.output_head == "gaussian" else 0)


def init_params(spec: NetworkSpec, rng: np.random.Generator, output_scale: float = 1.0) -> np.ndarray:
    """Glorot-uniform weights, zero biases; the last layer is scaled by ``output_scale``."""
    params = np.zeros(spec.n_params)
    layers = spec.layout()
    for i, (w, _, shape) in enumerate(layers):
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        vals = rng.uniform(-limit, limit, size=shape)
        if i == len(layers) - 1:
            vals *= output_scale
        params[w] = vals.ravel()
    if spec.log_std_slice is not None:
        params[spec.log_std_slice] = spec.init_log_std
    return params


def _check(spec: NetworkSpec, params: np.ndarray, x):
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise DomainError(f"expected {spec.n_params} parameters, got shape {params.shape}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise DomainError(f"input must have {spec.input_dim} features, got shape {x.shape}")
    return params, X, single


def _act(spec: NetworkSpec, z):
    return np.tanh(z) if spec.activation == "tanh" else np.maximum(z, 0.0)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(spec: NetworkSpec, params: np.ndarray, X: np.ndarray):
    acts = [X]
    h = X
    layers = spec.layout()
    for i, (w, b, shape) in enumerate(layers):
        z = h @ params[w].reshape(shape).T + params[b]
        h = z if i == len(layers) - 1 else _act(spec, z)
        acts.append(h)
    if spec.output_head == "softmax":
        out = _softmax(h)
    elif spec.output_head == "gaussian":
        log_std = np.broadcast_to(params[spec.log_std_slice], h.shape)
        out = np.concatenate([h, log_std], axis=1)
    else:
        out = h
    return out, acts


def forward(spec: NetworkSpec, params, x) -> np.ndarray:
    """Network output for one input vector or a batch of rows.

    Softmax heads return probabilities; Gaussian heads return the mean
    followed by the log-std, ``2 * output_dim`` values per row.
    """
    params, X, single = _check(spec, params, x)
    out, _ = _forward(spec, params, X)
    return out[0] if single else out


def backward(spec: NetworkSpec, params, x, output_gradient) -> np.ndarray:
    """Gradient of ``sum(output * output_gradient)`` with respect to the parameters."""
    params, X, single = _check(spec, params, x)
    g = np.asarray(output_gradient, dtype=float)
    if single:
        g = g[None, :]
    if g.shape != (X.shape[0], spec.n_outputs):
        raise DomainError(f"output_gradient shape {np.shape(output_gradient)} does not match outputs")
    out, acts = _forward(spec, params, X)
    return _backward(spec, params, out, acts, g)


def _backward(spec: NetworkSpec, params: np.ndarray, out, acts, g) -> np.ndarray:
    grad = np.zeros_like(params)
    if spec.output_head == "softmax":
        delta = out * (g - np.sum(g * out, axis=1, keepdims=True))
    elif spec.output_head == "gaussian":
        k = spec.output_dim
        delta = g[:, :k]
        grad[spec.log_std_slice] = g[:, k:].sum(axis=0)
    else:
        delta = g
    layers = spec.layout()
    for i in range(len(layers) - 1, -1, -1):
        w, b, shape = layers[i]
        grad[w] = (delta.T @ acts[i]).ravel()
        grad[b] = delta.sum(axis=0)
        if i:
            back = delta @ params[w].reshape(shape)
            a = acts[i]
            delta = back * (1.0 - a * a) if spec.activation == "tanh" else back * (a > 0)
    return grad


class Network:
    """A spec plus a parameter vector, with forward/backward bound together."""

    def __init__(self, spec: NetworkSpec, params: np.ndarray):
        self.spec = spec
        self.params = np.asarray(params, dtype=float)

    @classmethod
    def create(cls, spec: NetworkSpec, rng: np.random.Generator, output_scale: float = 1.0) -> "Network":
        return cls(spec, init_params(spec, rng, output_scale))

    def __call__(self, x) -> np.ndarray:
        return forward(self.spec, self.params, x)

    def gradient(self, x, output_gradient) -> np.ndarray:
        return backward(self.spec, self.params, x, output_gradient)

    def forward_cached(self, X: np.ndarray):
        """Batch forward that keeps activations for :meth:`backward_cached`."""
        out, acts = _forward(self.spec, self.params, X)
        return out, (out, acts)

    def backward_cached(self, cache, output_gradient: np.ndarray) -> np.ndarray:
        out, acts = cache
        return _backward(self.spec, self.params, out, acts, output_gradient)

    def copy(self) -> "Network":
        return Network(self.spec, self.params.copy())


# --------------------------------------------------------------------------- Adam

@dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_grad_norm: float | None = None


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_update(params, gradient, state: AdamState, hyper: AdamHyper = AdamHyper()):
    """One bias-corrected Adam step for gradient *descent*.

    Returns ``(new_params, new_state)``; inputs are not modified.

    :raises TrainingError: if the gradient contains NaN or inf.
    """
    g = np.asarray(gradient, dtype=float)
    if not np.all(np.isfinite(g)):
        raise TrainingError("non-finite gradient")
    if hyper.max_grad_norm is not None:
        norm = float(np.sqrt(g @ g))
        if norm > hyper.max_grad_norm:
            g = g * (hyper.max_grad_norm / norm)
    t = state.t + 1
    m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * g
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * g * g
    m_hat = m / (1.0 - hyper.beta1 ** t)
    v_hat = v / (1.0 - hyper.beta2 ** t)
    new = np.asarray(params, dtype=float) - hyper.learning_rate * m_hat / (np.sqrt(v_hat) + hyper.eps)
    return new, AdamState(m, v, t)


class Adam:
    """Stateful convenience wrapper around :func:`adam_update` for one network."""

    def __init__(self, network: Network, hyper: AdamHyper = AdamHyper()):
        self.network = network
        self.hyper = hyper
        self.state = AdamState.zeros(network.spec.n_params)

    def step(self, gradient):
        self.network.params, self.state = adam_update(self.network.params, gradient, self.state, self.hyper)


# --------------------------------------------------------------------------- checkpoints

CHECKPOINT_MAGIC = "# gtdispatch-mlp v1"


def save_checkpoint(path, spec: NetworkSpec, params) -> Path:
    """Write a text checkpoint: magic line, JSON spec line, one ``repr`` float per line."""
    path = Path(path)
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise DomainError("parameter vector does not match spec")
    lines = [CHECKPOINT_MAGIC, json.dumps(asdict(spec))]
    lines += [repr(float(v)) for v in params]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_checkpoint(path) -> tuple[NetworkSpec, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise DomainError(f"{path} is not a gtdispatch network checkpoint")
    spec = NetworkSpec(**json.loads(lines[1]))
    params = np.array([float(v) for v in lines[2:]], dtype=float)
    if params.shape != (spec.n_params,):
        raise DomainError(f"{path}: expected {spec.n_params} parameters, found {params.size}")
    return spec, params
