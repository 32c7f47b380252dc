"""A minimal reverse-mode tape over dense float64 matrices.

Forward values are computed eagerly as ops are recorded; ``backward``
replays the tape once in reverse topological order.  The op set is small
on purpose: just enough to express MLP forward passes, derivative jets,
and squared-error losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import MAX_ORDER, act_eval_batch
from .errors import DimensionError


@dataclass
class _Node:
    op: str
    inputs: tuple
    value: np.ndarray
    aux: tuple = ()
    requires_grad: bool = False


@dataclass(frozen=True)
class NodeRef:
    """Handle to one tape entry."""

    tape: "Tape"
    id: int

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.id].value

    @property
    def shape(self):
        return self.tape.nodes[self.id].value.shape


class Tape:
    """Append-only record of ops; owns node values and parameter markers."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self.param_ids: list[int] = []

    def _push(self, op, inputs, value, aux=(), requires_grad=False) -> NodeRef:
        self.nodes.append(_Node(op, inputs, value, aux, requires_grad))
        return NodeRef(self, len(self.nodes) - 1)

    def _get(self, ref: NodeRef) -> _Node:
        if ref.tape is not self:
            raise ValueError("node belongs to a different tape")
        return self.nodes[ref.id]


def _as_matrix(value) -> np.ndarray:
    out = np.asarray(value, dtype=np.float64)
    if out.ndim == 1:
        out = out[None, :]
    return out


def record_const(tape: Tape, value) -> NodeRef:
    """Record a constant leaf; no gradient flows into it."""
    return tape._push("const", (), _as_matrix(value))


def record_param(tape: Tape, value) -> NodeRef:
    """Record a trainable leaf; ``backward`` reports its gradient."""
    ref = tape._push("param", (), _as_matrix(value), requires_grad=True)
    tape.param_ids.append(ref.id)
    return ref


def _rg(tape, *refs):
    return any(tape._get(r).requires_grad for r in refs)


def record_matmul(tape: Tape, a: NodeRef, b: NodeRef) -> NodeRef:
    av, bv = a.value, b.value
    if av.shape[1] != bv.shape[0]:
        raise DimensionError(f"matmul shapes {av.shape} and {bv.shape} do not chain")
    return tape._push("matmul", (a.id, b.id), av @ bv, requires_grad=_rg(tape, a, b))


def record_add(tape: Tape, a: NodeRef, b: NodeRef) -> NodeRef:
    av, bv = a.value, b.value
    if av.shape != bv.shape:
        raise DimensionError(f"add shapes {av.shape} and {bv.shape} differ")
    return tape._push("add", (a.id, b.id), av + bv, requires_grad=_rg(tape, a, b))


def record_add_row_broadcast(tape: Tape, a: NodeRef, bias: NodeRef) -> NodeRef:
    """Add a 1 x m bias row to every row of an n x m matrix."""
    av, bv = a.value, bias.value
    if bv.ndim != 2 or bv.shape[0] != 1 or av.ndim != 2 or av.shape[1] != bv.shape[1]:
        raise DimensionError(f"row broadcast needs (n, m) + (1, m); got {av.shape} and {bv.shape}")
    return tape._push("add_row", (a.id, bias.id), av + bv, requires_grad=_rg(tape, a, bias))


def record_hadamard(tape: Tape, a: NodeRef, b: NodeRef) -> NodeRef:
    av, bv = a.value, b.value
    if av.shape != bv.shape:
        raise DimensionError(f"hadamard shapes {av.shape} and {bv.shape} differ")
    return tape._push("hadamard", (a.id, b.id), av * bv, requires_grad=_rg(tape, a, b))


def record_scale(tape: Tape, a: NodeRef, c: float) -> NodeRef:
    return tape._push("scale", (a.id,), float(c) * a.value, aux=(float(c),),
                      requires_grad=_rg(tape, a))


def record_activation(tape: Tape, a: NodeRef, kind: str, order: int = 0) -> NodeRef:
    """Apply sigma^(order) elementwise.  Backward needs order + 1 <= 4."""
    value = act_eval_batch(kind, order, a.value)
    return tape._push("activation", (a.id,), value, aux=(kind, int(order)),
                      requires_grad=_rg(tape, a))


def record_sum_of_squares(tape: Tape, a: NodeRef) -> NodeRef:
    value = np.asarray(np.sum(a.value * a.value))
    return tape._push("sum_sq", (a.id,), value, requires_grad=_rg(tape, a))


def record_elementwise_power(tape: Tape, a: NodeRef, p: int) -> NodeRef:
    p = int(p)
    if p < 1:
        raise ValueError(f"elementwise power wants p >= 1, got {p}")
    return tape._push("pow", (a.id,), a.value ** p, aux=(p,), requires_grad=_rg(tape, a))


def record_slice_rows(tape: Tape, a: NodeRef, start: int, stop: int) -> NodeRef:
    n = a.value.shape[0]
    if not 0 <= start <= stop <= n:
        raise DimensionError(f"row slice [{start}:{stop}] out of range for shape {a.value.shape}")
    return tape._push("slice_rows", (a.id,), a.value[start:stop].copy(),
                      aux=(start, stop), requires_grad=_rg(tape, a))


def record_sub(tape: Tape, a: NodeRef, b: NodeRef) -> NodeRef:
    """Convenience: a - b composed from the primitive ops."""
    return record_add(tape, a, record_scale(tape, b, -1.0))


def backward(tape: Tape, root: NodeRef) -> dict:
    """Single reverse sweep from a scalar root.

    Returns ``{param_node_id: gradient}`` covering every parameter on the
    tape; parameters the root does not depend on get zero gradients.
    """
    root_node = tape._get(root)
    if root_node.value.size != 1:
        raise ValueError(f"backward root must be scalar, got shape {root_node.value.shape}")

    nodes = tape.nodes
    adj: list = [None] * (root.id + 1)
    adj[root.id] = np.ones_like(root_node.value)

    def acc(i, contrib):
        if not nodes[i].requires_grad:
            return
        if adj[i] is None:
            adj[i] = contrib
        else:
            adj[i] = adj[i] + contrib

    for i in range(root.id, -1, -1):
        g = adj[i]
        node = nodes[i]
        if g is None or not node.requires_grad:
            continue
        op = node.op
        if op in ("const", "param"):
            continue
        if op == "matmul":
            ia, ib = node.inputs
            acc(ia, g @ nodes[ib].value.T)
            acc(ib, nodes[ia].value.T @ g)
        elif op == "add":
            ia, ib = node.inputs
            acc(ia, g)
            acc(ib, g)
        elif op == "add_row":
            ia, ib = node.inputs
            acc(ia, g)
            acc(ib, g.sum(axis=0, keepdims=True))
        elif op == "hadamard":
            ia, ib = node.inputs
            acc(ia, g * nodes[ib].value)
            acc(ib, g * nodes[ia].value)
        elif op == "scale":
            acc(node.inputs[0], node.aux[0] * g)
        elif op == "activation":
            kind, order = node.aux
            if order + 1 > MAX_ORDER:
                raise ValueError(
                    f"cannot backprop through {kind} derivative of order {order}: "
                    f"order {order + 1} exceeds the supported maximum {MAX_ORDER}"
                )
            ia = node.inputs[0]
            acc(ia, g * act_eval_batch(kind, order + 1, nodes[ia].value))
        elif op == "sum_sq":
            ia = node.inputs[0]
            acc(ia, (2.0 * float(g)) * nodes[ia].value)
        elif op == "pow":
            p = node.aux[0]
            ia = node.inputs[0]
            base = nodes[ia].value
            acc(ia, g if p == 1 else g * (p * base ** (p - 1)))
        elif op == "slice_rows":
            start, stop = node.aux
            ia = node.inputs[0]
            full = np.zeros_like(nodes[ia].value)
            full[start:stop] = g
            acc(ia, full)
        else:  # pragma: no cover - op table is closed
            raise RuntimeError(f"unknown op {op!r}")

    grads = {}
    for pid in tape.param_ids:
        grads[pid] = adj[pid] if adj[pid] is not None else np.zeros_like(nodes[pid].value)
    return grads
