"""Feedforward autoencoder: topology, flat parameter layout, forward pass,
sum-of-squares reconstruction loss, and exact backpropagation gradient.

Parameters live in one flat vector laid out layer by layer, row-major
weight matrix first, then the bias vector; the encoder layers come first.
The layout is fixed so parameter files are portable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("sigmoid", "tanh", "linear")


def sigmoid(z):
    # split by sign to stay finite for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _act(z, kind):
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _act_deriv_from_value(a, kind):
    """Activation derivative expressed through the activated value."""
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    return np.ones_like(a)


@dataclass(frozen=True)
class AutoencoderTopology:
    """Layer sizes [d_0, ..., d_K] with d_0 == d_K and the bottleneck at
    ``latent_index``.  Layers up to the bottleneck form the encoder, the
    rest the decoder."""

    layer_sizes: tuple[int, ...]
    latent_index: int = -1
    hidden_activation: str = "sigmoid"
    output_activation: str = "sigmoid"

    def __post_init__(self):
        sizes = tuple(int(d) for d in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("topology needs at least two layers")
        if any(d <= 0 for d in sizes):
            raise ValueError("layer sizes must be positive")
        if sizes[0] != sizes[-1]:
            raise ValueError("input and output dimensions must match")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.hidden_activation!r}")
        if self.output_activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.output_activation!r}")
        li = self.latent_index
        if li < 0:
            inner = sizes[1:-1]
            if inner:
                li = 1 + int(np.argmin(inner))
            else:
                li = 0
            object.__setattr__(self, "latent_index", li)
        elif li >= len(sizes):
            raise ValueError("latent_index out of range")

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def latent_dim(self) -> int:
        return self.layer_sizes[self.latent_index]

    def activation_of(self, layer: int) -> str:
        return (
            self.output_activation
            if layer == self.n_layers - 1
            else self.hidden_activation
        )

    def slices(self):
        """(weight_slice, bias_slice, shape) per layer in flat-vector order."""
        out = []
        off = 0
        for l in range(self.n_layers):
            din, dout = self.layer_sizes[l], self.layer_sizes[l + 1]
            w = slice(off, off + din * dout)
            off += din * dout
            b = slice(off, off + dout)
            off += dout
            out.append((w, b, (din, dout)))
        return out


def total_params(topology: AutoencoderTopology) -> int:
    sizes = topology.layer_sizes
    return sum(
        sizes[l] * sizes[l + 1] + sizes[l + 1] for l in range(len(sizes) - 1)
    )


def init_params(topology: AutoencoderTopology, rng, init_sd: float = 0.1) -> np.ndarray:
    """Chain starting point: i.i.d. Gaussian weights/biases, mean 0."""
    return rng.normal(0.0, init_sd, size=total_params(topology))


def _check(topology, params, batch):
    params = np.asarray(params, dtype=float)
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if params.shape != (total_params(topology),):
        raise ValueError(
            f"params length {params.size} != {total_params(topology)}"
        )
    if batch.shape[1] != topology.input_dim:
        raise ValueError(
            f"batch has {batch.shape[1]} features, topology wants {topology.input_dim}"
        )
    return params, batch


@dataclass
class ForwardResult:
    latent: np.ndarray
    reconstruction: np.ndarray
    activations: list = field(repr=False, default_factory=list)


def forward(topology, params, batch) -> ForwardResult:
    """Affine-then-activation through every layer, retaining intermediates."""
    params, batch = _check(topology, params, batch)
    acts = [batch]
    a = batch
    for l, (ws, bs, shape) in enumerate(topology.slices()):
        w = params[ws].reshape(shape)
        b = params[bs]
        a = _act(a @ w + b, topology.activation_of(l))
        acts.append(a)
    return ForwardResult(
        latent=acts[topology.latent_index],
        reconstruction=acts[-1],
        activations=acts,
    )


def encode(topology, params, batch) -> np.ndarray:
    """Encoder half only: activations at the bottleneck layer."""
    params, batch = _check(topology, params, batch)
    a = batch
    for l, (ws, bs, shape) in enumerate(topology.slices()):
        if l >= topology.latent_index:
            break
        w = params[ws].reshape(shape)
        a = _act(a @ w + params[bs], topology.activation_of(l))
    return a


def decode(topology, params, latent) -> np.ndarray:
    """Decoder half: from bottleneck activations to reconstruction."""
    params = np.asarray(params, dtype=float)
    a = np.atleast_2d(np.asarray(latent, dtype=float))
    for l, (ws, bs, shape) in enumerate(topology.slices()):
        if l < topology.latent_index:
            continue
        w = params[ws].reshape(shape)
        a = _act(a @ w + params[bs], topology.activation_of(l))
    return a


def loss(topology, params, batch) -> float:
    """Sum of squared reconstruction errors over all instances and features."""
    res = forward(topology, params, batch)
    diff = res.reconstruction - res.activations[0]
    return float(np.sum(diff * diff))


def mse(topology, params, batch) -> float:
    """Per-entry mean squared error: loss / (n_instances * n_features)."""
    _, batch = _check(topology, params, batch)
    return loss(topology, params, batch) / batch.size


def gradient(topology, params, batch) -> np.ndarray:
    """Exact gradient of loss() with respect to the flat parameter vector."""
    sse, grad = loss_and_gradient(topology, params, batch)
    return grad


def loss_and_gradient(topology, params, batch) -> tuple[float, np.ndarray]:
    """One forward plus one backward pass; returns (loss, gradient)."""
    params, batch = _check(topology, params, batch)
    res = forward(topology, params, batch)
    acts = res.activations
    diff = res.reconstruction - batch
    sse = float(np.sum(diff * diff))

    grad = np.zeros_like(params)
    slices = topology.slices()
    delta = 2.0 * diff * _act_deriv_from_value(
        acts[-1], topology.activation_of(topology.n_layers - 1)
    )
    for l in range(topology.n_layers - 1, -1, -1):
        ws, bs, shape = slices[l]
        grad[ws] = (acts[l].T @ delta).ravel()
        grad[bs] = delta.sum(axis=0)
        if l > 0:
            w = params[ws].reshape(shape)
            delta = (delta @ w.T) * _act_deriv_from_value(
                acts[l], topology.activation_of(l - 1)
            )
    return sse, grad
