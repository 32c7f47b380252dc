"""Taylor-mode derivative propagation for MLPs on the reverse-mode tape.

A "stream" carries directional first derivatives of the network alongside
the value pass; a combined second-order stream carries any weighted sum of
pure second derivatives (sum_i c_i d^2/dx_i^2) in a single extra pass.
Everything is recorded on the tape, so one ``backward`` differentiates
losses built from values and derivatives alike.

Layer recurrences (value f, pre-activation G = f W + b):
    dG = df W                (no bias)
    dF = sigma'(G) o dG
    s2G = s2F_prev W
    s2F = sigma''(G) o q + sigma'(G) o s2G,   q = sum_i c_i (dG_i)^2
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .network import MlpParams
from .tape import (
    NodeRef,
    Tape,
    record_activation,
    record_add,
    record_const,
    record_hadamard,
    record_matmul,
    record_param,
    record_add_row_broadcast,
    record_elementwise_power,
    record_scale,
    record_slice_rows,
)


def record_mlp_params(tape: Tape, params: MlpParams):
    """Mark every weight/bias as a trainable tape leaf."""
    w_refs = [record_param(tape, w) for w in params.weights]
    b_refs = [record_param(tape, b) for b in params.biases]
    return w_refs, b_refs


@dataclass(frozen=True)
class StreamSpec:
    """One first-derivative stream: ``seed`` is d(input)/d(direction).

    ``rows`` streams cover the leading rows of the batch; the seed matrix
    holds one direction row per covered batch row (e.g. a basis vector for
    a plain coordinate derivative, or operator coefficients for a fused
    first-order residual).
    """

    seed: np.ndarray
    rows: int


@dataclass(frozen=True)
class SecondPlan:
    """Combined second-order stream sum_j c_j d^2/dx_j^2 over leading rows.

    ``terms`` pairs each coefficient with the index of the first-derivative
    stream for that coordinate.
    """

    rows: int
    terms: tuple


@dataclass
class StreamsOut:
    """Tape refs produced by :func:`mlp_streams`."""

    value: NodeRef
    streams: list
    second: NodeRef | None
    layer_values: list = field(default_factory=list)
    layer_streams: list = field(default_factory=list)
    layer_seconds: list = field(default_factory=list)


def _weighted_square_sum(tape, refs_and_coeffs):
    total = None
    for coeff, ref in refs_and_coeffs:
        term = record_elementwise_power(tape, ref, 2)
        if coeff != 1.0:
            term = record_scale(tape, term, coeff)
        total = term if total is None else record_add(tape, total, term)
    return total


def mlp_streams(tape: Tape, w_refs, b_refs, activations, x_ref: NodeRef,
                stream_specs=(), second_plan: SecondPlan | None = None) -> StreamsOut:
    """Run value + derivative streams through the network on the tape."""
    n_all = x_ref.value.shape[0]
    d = x_ref.value.shape[1]
    streams = []
    for spec in stream_specs:
        if not 0 < spec.rows <= n_all:
            raise DimensionError(f"stream rows {spec.rows} out of range for batch of {n_all}")
        if spec.seed.shape != (spec.rows, d):
            raise DimensionError(
                f"stream seed shape {spec.seed.shape} != ({spec.rows}, {d})")
        streams.append(record_const(tape, spec.seed))
    second = None
    if second_plan is not None:
        if not 0 < second_plan.rows <= n_all:
            raise DimensionError(
                f"second-order rows {second_plan.rows} out of range for batch of {n_all}")
        for _, idx in second_plan.terms:
            if stream_specs[idx].rows < second_plan.rows:
                raise DimensionError(
                    f"stream {idx} covers {stream_specs[idx].rows} rows, "
                    f"second-order plan needs {second_plan.rows}")
        # d^2(input)/dx^2 is zero: start the stream at zero rows.
        second = record_const(tape, np.zeros((second_plan.rows, d)))

    out = StreamsOut(value=x_ref, streams=streams, second=second)
    n_layers = len(w_refs)
    value = x_ref
    for i in range(n_layers):
        g = record_add_row_broadcast(tape, record_matmul(tape, value, w_refs[i]), b_refs[i])
        dg = [record_matmul(tape, s, w_refs[i]) for s in streams]
        s2g = record_matmul(tape, second, w_refs[i]) if second is not None else None
        if i == n_layers - 1:
            value, streams, second = g, dg, s2g
        else:
            kind = activations[i]
            value = record_activation(tape, g, kind, 0)
            # sigma'(G)/sigma''(G), computed once per distinct row count.
            deriv_cache = {}

            def d_of_g(order, rows, g=g, kind=kind, value=value):
                key = (order, rows)
                if key not in deriv_cache:
                    if order == 2 and kind in ("sine", "cosine"):
                        # sigma'' = -sigma: reuse the value node instead of
                        # a fresh transcendental pass
                        base = value if rows == n_all else \
                            record_slice_rows(tape, value, 0, rows)
                        deriv_cache[key] = record_scale(tape, base, -1.0)
                    else:
                        base = g if rows == n_all else record_slice_rows(tape, g, 0, rows)
                        deriv_cache[key] = record_activation(tape, base, kind, order)
                return deriv_cache[key]

            new_streams = []
            for spec, ref in zip(stream_specs, dg):
                new_streams.append(record_hadamard(tape, d_of_g(1, spec.rows), ref))
            if second is not None:
                rows2 = second_plan.rows
                q = _weighted_square_sum(
                    tape,
                    [(c, dg[idx] if stream_specs[idx].rows == rows2
                      else record_slice_rows(tape, dg[idx], 0, rows2))
                     for c, idx in second_plan.terms])
                second = record_add(
                    tape,
                    record_hadamard(tape, d_of_g(2, rows2), q),
                    record_hadamard(tape, d_of_g(1, rows2), s2g))
            streams = new_streams
        out.layer_values.append(value)
        out.layer_streams.append(list(streams))
        out.layer_seconds.append(second)
    out.value = value
    out.streams = streams
    out.second = second
    return out


def value_forward(tape: Tape, w_refs, b_refs, activations, x_ref: NodeRef) -> NodeRef:
    """Plain tape-recorded forward pass (no derivative streams)."""
    return mlp_streams(tape, w_refs, b_refs, activations, x_ref).value


@dataclass
class Jet:
    """Per-layer tape refs for one coordinate's derivative propagation."""

    values: list
    first: list
    second: list | None

    @property
    def value_out(self) -> NodeRef:
        return self.values[-1]

    @property
    def first_out(self) -> NodeRef:
        return self.first[-1]

    @property
    def second_out(self) -> NodeRef | None:
        return None if self.second is None else self.second[-1]


def jet_forward(tape: Tape, params: MlpParams, batch: np.ndarray, coord: int,
                order: int = 2, kind=None) -> Jet:
    """Propagate d/dx_coord (and optionally d^2/dx_coord^2) through the net.

    ``kind`` overrides every hidden activation when given; the default uses
    the kinds stored in ``params``.
    """
    batch = np.asarray(batch, dtype=np.float64)
    d = params.weights[0].shape[0]
    if batch.ndim != 2 or batch.shape[1] != d:
        raise DimensionError(f"batch shape {batch.shape} does not match input width {d}")
    if not 0 <= coord < d:
        raise ValueError(f"coord {coord} out of range for {d} input coordinates")
    if order not in (1, 2):
        raise ValueError(f"jet order must be 1 or 2, got {order}")
    activations = [kind] * len(params.activations) if kind else params.activations
    n = batch.shape[0]
    seed = np.zeros((n, d))
    seed[:, coord] = 1.0
    w_refs, b_refs = record_mlp_params(tape, params)
    plan = SecondPlan(rows=n, terms=((1.0, 0),)) if order == 2 else None
    run = mlp_streams(tape, w_refs, b_refs, activations, record_const(tape, batch),
                      [StreamSpec(seed, n)], plan)
    return Jet(
        values=run.layer_values,
        first=[s[0] for s in run.layer_streams],
        second=run.layer_seconds if order == 2 else None,
    )
