"""Fully-connected network parameters, initializers, and plain forward pass.

The forward pass here is pure numpy (no tape) and returns every
pre-/post-activation so diagnostics and the closed-form operator algebra
can reuse the cached layers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .activations import ACTIVATION_KINDS, CENTRAL_BAND, act_eval_batch
from .errors import DimensionError

CHECKPOINT_FORMAT = "pinnkit-checkpoint-v1"


@dataclass
class MlpParams:
    """Dense MLP weights: ``weights[i]`` maps layer i to i+1, biases are rows.

    ``activations[i]`` names the nonlinearity after hidden layer i; the last
    layer is always linear with output width 1.
    """

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    activations: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise DimensionError(
                f"{len(self.weights)} weight matrices vs {len(self.biases)} bias rows")
        if len(self.activations) != max(len(self.weights) - 1, 0):
            raise DimensionError(
                f"need one activation per hidden layer "
                f"({len(self.weights) - 1}), got {len(self.activations)}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = w = np.asarray(w, dtype=np.float64)
            self.biases[i] = b = np.asarray(b, dtype=np.float64).reshape(1, -1)
            if w.ndim != 2 or b.shape[1] != w.shape[1]:
                raise DimensionError(
                    f"layer {i}: weight shape {w.shape} vs bias shape {b.shape}")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise DimensionError(
                    f"layer {i}: expected {self.weights[i - 1].shape[1]} inputs, "
                    f"weight shape is {w.shape}")
        for kind in self.activations:
            if kind not in ACTIVATION_KINDS:
                raise ValueError(f"unknown activation kind {kind!r}")

    @property
    def layer_sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases],
                         list(self.activations))


def _resolve_activations(layer_sizes, activation):
    n_hidden = len(layer_sizes) - 2
    if isinstance(activation, str):
        return [activation] * n_hidden
    activation = list(activation)
    if len(activation) != n_hidden:
        raise DimensionError(
            f"need {n_hidden} activation kinds for layer sizes {layer_sizes}, "
            f"got {len(activation)}")
    return activation


def init_xavier_normal(layer_sizes, activation, seed: int) -> MlpParams:
    """Glorot-normal weights, zero biases: W ~ N(0, 2 / (fan_in + fan_out))."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
        biases.append(np.zeros((1, fan_out)))
    return MlpParams(weights, biases, _resolve_activations(layer_sizes, activation))


def init_siren_uniform(layer_sizes, seed: int, omega0: float = 30.0) -> MlpParams:
    """Sine-network init with the frequency factor folded into layer one.

    First layer: omega0 * U(-1/n0, 1/n0); hidden layers: U(+-sqrt(6/fan_in)).
    Biases start at zero.  Activations are all sine.
    """
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        if i == 0:
            bound = omega0 / fan_in
        else:
            bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros((1, fan_out)))
    return MlpParams(weights, biases, _resolve_activations(layer_sizes, "sine"))


def forward(params: MlpParams, batch: np.ndarray):
    """Evaluate the network; returns (outputs, [(G_i, F_i) per layer]).

    ``G_i`` is the pre-activation, ``F_i`` the post-activation; the final
    layer is linear so its F equals its G.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[0]:
        raise DimensionError(
            f"batch shape {x.shape} does not match input width "
            f"{params.weights[0].shape[0]}")
    cache = []
    f = x
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        g = f @ w + b
        f = g if i == last else act_eval_batch(params.activations[i], 0, g)
        cache.append((g, f))
    return f, cache


@dataclass(frozen=True)
class LayerStats:
    """Histogram + concentration summary for one hidden layer's G values."""

    bin_edges: np.ndarray
    counts: np.ndarray
    fraction_in_central_band: float
    mean: float
    std: float


def pre_activation_stats(params: MlpParams, batch: np.ndarray, bins: int = 50):
    """Per-hidden-layer distribution of pre-activations over a batch.

    ``fraction_in_central_band`` counts |G| <= pi/2, the half-period band
    where periodic activations keep their relevant derivatives injective.
    """
    _, cache = forward(params, batch)
    half_band = CENTRAL_BAND[1]
    stats = []
    for g, _ in cache[:-1]:
        counts, edges = np.histogram(g, bins=bins)
        stats.append(LayerStats(
            bin_edges=edges,
            counts=counts,
            fraction_in_central_band=float(np.mean(np.abs(g) <= half_band)),
            mean=float(np.mean(g)),
            std=float(np.std(g)),
        ))
    return stats


def save_checkpoint(path, params: MlpParams, normalized_inputs: bool = False,
                    domain=None, extra: dict | None = None):
    """Write params as JSON; float repr keeps full 64-bit round-trip precision."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "layer_sizes": params.layer_sizes,
        "activations": list(params.activations),
        "weights": [w.tolist() for w in params.weights],
        "biases": [b[0].tolist() for b in params.biases],
        "normalized_inputs": bool(normalized_inputs),
        "domain": [[float(lo), float(hi)] for (lo, hi) in domain] if domain else None,
    }
    if extra:
        payload["extra"] = extra
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path):
    """Read a checkpoint; returns (MlpParams, metadata dict)."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    params = MlpParams(
        [np.asarray(w, dtype=np.float64) for w in payload["weights"]],
        [np.asarray(b, dtype=np.float64) for b in payload["biases"]],
        list(payload["activations"]),
    )
    meta = {
        "normalized_inputs": payload["normalized_inputs"],
        "domain": payload["domain"],
        "extra": payload.get("extra", {}),
    }
    return params, meta
