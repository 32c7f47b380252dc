"""Benchmark PDE problems: operators, exact solutions, and sampling.

Each problem is a box domain, a differential operator with derivative
orders one or two per term (optionally plus an algebraic term in u), a
source f, a closed-form solution with its analytic derivatives, and a
list of boundary/initial conditions with their own samplers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .jets import SecondPlan, StreamSpec, mlp_streams, record_mlp_params
from .network import MlpParams
from .tape import (
    Tape,
    record_add,
    record_const,
    record_elementwise_power,
    record_scale,
    record_slice_rows,
)

ALGEBRAIC_KINDS = ("none", "linear_in_u", "cubic_in_u")


@dataclass(frozen=True)
class OperatorSpec:
    """Linear combination of pure derivatives, plus an optional term in u.

    ``terms`` holds (coefficient, coordinate index, derivative order) with
    orders restricted to 1 or 2.  ``algebraic`` adds +u or +u^3 to the
    operator output.
    """

    terms: tuple
    algebraic: str = "none"

    def __post_init__(self):
        if self.algebraic not in ALGEBRAIC_KINDS:
            raise ValueError(f"algebraic must be one of {ALGEBRAIC_KINDS}")
        for c, coord, order in self.terms:
            if order not in (1, 2):
                raise ValueError(f"derivative order must be 1 or 2, got {order}")
            if coord < 0:
                raise ValueError(f"negative coordinate index {coord}")

    @property
    def max_order(self) -> int:
        return max(order for _, _, order in self.terms)

    def uniform_order(self) -> int | None:
        """The common derivative order k, or None if terms mix orders."""
        orders = {order for _, _, order in self.terms}
        return orders.pop() if len(orders) == 1 else None


@dataclass
class ConditionBatch:
    """Sampled points (and pair points for periodic matching) plus targets."""

    points: np.ndarray
    targets: np.ndarray | None = None
    points2: np.ndarray | None = None


@dataclass
class Condition:
    """One boundary/initial constraint.

    kind: 'dirichlet' (u = g), 'derivative_dirichlet' (du/dx_coord = g), or
    'periodic_pair' (u(points) = u(points2)).  ``draw(m, rng)`` samples m
    constraint points and their targets.
    """

    kind: str
    name: str
    draw: callable
    coord: int | None = None


@dataclass
class PdeProblem:
    name: str
    domain: tuple
    operator: OperatorSpec
    source: callable
    exact: callable
    exact_derivs: dict = field(default_factory=dict)
    conditions: list = field(default_factory=list)
    notes: str = ""

    @property
    def d(self) -> int:
        return len(self.domain)


def sample_collocation(problem: PdeProblem, n: int, seed: int) -> np.ndarray:
    """n interior points, uniform iid over the box."""
    rng = np.random.default_rng(seed)
    lo = np.array([a for a, _ in problem.domain])
    hi = np.array([b for _, b in problem.domain])
    return rng.uniform(lo, hi, size=(n, problem.d))


def sample_conditions(problem: PdeProblem, m: int, seed: int) -> list:
    """Split a budget of m points equally across conditions (remainder to
    the first) and draw each condition's batch."""
    rng = np.random.default_rng(seed)
    k = len(problem.conditions)
    base, rem = divmod(m, k)
    counts = [base + (rem if i == 0 else 0) for i in range(k)]
    return [cond.draw(counts[i], rng) for i, cond in enumerate(problem.conditions)]


# --- operator recording on the tape ---------------------------------------

@dataclass
class OperatorBuild:
    """Tape refs from one fused operator pass over [colloc | extra] rows."""

    deriv: "NodeRef"        # operator's derivative part, colloc rows
    value: "NodeRef"        # network values, all rows
    u_colloc: "NodeRef"     # network values, colloc rows only
    extra_outs: list        # final d/dx_coord nodes for each extra spec


def record_operator(tape: Tape, w_refs, b_refs, activations,
                    operator: OperatorSpec, x_ref, n_colloc: int,
                    extra_derivs=()) -> OperatorBuild:
    """Record D[u] over the leading n_colloc rows of ``x_ref``.

    ``extra_derivs`` lists (coord, start, stop) row ranges for derivative
    conditions that need du/dx_coord on rows [start, stop); those ranges
    must directly follow the collocation block.
    """
    d = x_ref.value.shape[1]
    order1 = [(c, coord) for c, coord, o in operator.terms if o == 1]
    order2 = [(c, coord) for c, coord, o in operator.terms if o == 2]

    specs = []
    coord_stream = {}

    def basis_seed(coord, rows):
        seed = np.zeros((rows, d))
        seed[:, coord] = 1.0
        return seed

    if order2:
        # one stream per coordinate the operator touches
        for _, coord in order2 + order1:
            if coord not in coord_stream:
                coord_stream[coord] = len(specs)
                specs.append(StreamSpec(basis_seed(coord, n_colloc), n_colloc))
    elif order1:
        # pure first-order operator folds into a single weighted stream
        seed = np.zeros((n_colloc, d))
        for c, coord in order1:
            seed[:, coord] += c
        specs.append(StreamSpec(seed, n_colloc))

    extra_idx = []
    for coord, start, stop in extra_derivs:
        if start < n_colloc:
            raise DimensionError(
                f"derivative-condition rows [{start}:{stop}] overlap the "
                f"collocation block of {n_colloc}")
        if order2 and coord in coord_stream:
            # widen the existing coordinate stream to cover the extra rows
            i = coord_stream[coord]
            rows = max(specs[i].rows, stop)
            specs[i] = StreamSpec(basis_seed(coord, rows), rows)
            extra_idx.append(i)
        else:
            extra_idx.append(len(specs))
            specs.append(StreamSpec(basis_seed(coord, stop), stop))

    plan = None
    if order2:
        plan = SecondPlan(rows=n_colloc,
                          terms=tuple((c, coord_stream[coord]) for c, coord in order2))

    run = mlp_streams(tape, w_refs, b_refs, activations, x_ref, specs, plan)

    def colloc_rows(ref):
        return ref if ref.value.shape[0] == n_colloc else \
            record_slice_rows(tape, ref, 0, n_colloc)

    parts = []
    if order2:
        parts.append(run.second)
        for c, coord in order1:
            node = colloc_rows(run.streams[coord_stream[coord]])
            parts.append(record_scale(tape, node, c) if c != 1.0 else node)
    elif order1:
        parts.append(run.streams[0])

    u_colloc = colloc_rows(run.value)
    if operator.algebraic == "linear_in_u":
        parts.append(u_colloc)
    elif operator.algebraic == "cubic_in_u":
        parts.append(record_elementwise_power(tape, u_colloc, 3))

    if not parts:
        raise ValueError("operator has no terms")
    deriv = parts[0]
    for p in parts[1:]:
        deriv = record_add(tape, deriv, p)

    extra_outs = [record_slice_rows(tape, run.streams[i], start, stop)
                  for i, (_, start, stop) in zip(extra_idx, extra_derivs)]
    return OperatorBuild(deriv=deriv, value=run.value, u_colloc=u_colloc,
                         extra_outs=extra_outs)


def residual_at(problem: PdeProblem, params: MlpParams, batch: np.ndarray,
                tape: Tape | None = None):
    """PDE residual D[u_hat] - f at the given points.

    With a tape, returns the residual NodeRef (n x 1) for further
    composition; without one, returns a plain (n,) array.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != problem.d:
        raise DimensionError(f"batch shape {batch.shape}, expected (n, {problem.d})")
    own = tape is None
    t = Tape() if own else tape
    w_refs, b_refs = record_mlp_params(t, params)
    build = record_operator(t, w_refs, b_refs, params.activations,
                            problem.operator, record_const(t, batch), batch.shape[0])
    f = problem.source(batch).reshape(-1, 1)
    res = record_add(t, build.deriv, record_const(t, -f))
    return res.value.ravel().copy() if own else res


def exact_residual(problem: PdeProblem, batch: np.ndarray) -> np.ndarray:
    """Residual of the closed-form solution via its analytic derivatives.

    A self-consistency oracle: should vanish to rounding error.
    """
    batch = np.asarray(batch, dtype=np.float64)
    total = np.zeros(batch.shape[0])
    for c, coord, order in problem.operator.terms:
        total += c * problem.exact_derivs[(coord, order)](batch)
    u = problem.exact(batch)
    if problem.operator.algebraic == "linear_in_u":
        total += u
    elif problem.operator.algebraic == "cubic_in_u":
        total += u ** 3
    return total - problem.source(batch)


# --- problem factories ------------------------------------------------------

def _facet_sampler(domain, fixed: dict, target=None):
    """Uniform sampler over a box facet; `fixed` pins coordinates."""
    def draw(m, rng):
        pts = np.empty((m, len(domain)))
        for j, (lo, hi) in enumerate(domain):
            if j in fixed:
                pts[:, j] = fixed[j]
            else:
                pts[:, j] = rng.uniform(lo, hi, m)
        tg = None if target is None else np.asarray(target(pts), dtype=np.float64).reshape(-1, 1)
        return ConditionBatch(points=pts, targets=tg)
    return draw


def make_transport(speed: float = 30.0) -> PdeProblem:
    """u_t + speed * u_x = 0 on [0,1] x [0,2pi], u = sin(x - speed t).

    Periodic in x, initial profile sin(x).  Coordinates are (t, x).
    """
    domain = ((0.0, 1.0), (0.0, 2.0 * np.pi))

    def exact(X):
        return np.sin(X[:, 1] - speed * X[:, 0])

    def du_dt(X):
        return -speed * np.cos(X[:, 1] - speed * X[:, 0])

    def du_dx(X):
        return np.cos(X[:, 1] - speed * X[:, 0])

    def periodic_draw(m, rng):
        t = rng.uniform(0.0, 1.0, m)
        p1 = np.column_stack([t, np.zeros(m)])
        p2 = np.column_stack([t, np.full(m, 2.0 * np.pi)])
        return ConditionBatch(points=p1, points2=p2)

    return PdeProblem(
        name="transport",
        domain=domain,
        operator=OperatorSpec(terms=((1.0, 0, 1), (speed, 1, 1))),
        source=lambda X: np.zeros(X.shape[0]),
        exact=exact,
        exact_derivs={(0, 1): du_dt, (1, 1): du_dx},
        conditions=[
            Condition("dirichlet", "initial",
                      _facet_sampler(domain, {0: 0.0}, lambda P: np.sin(P[:, 1]))),
            Condition("periodic_pair", "periodic-x", periodic_draw, coord=1),
        ],
    )


def make_wave() -> PdeProblem:
    """u_tt - u_xx = 0 on [0,1]^2 with a two-mode standing wave solution."""
    domain = ((0.0, 1.0), (0.0, 1.0))
    a, b = 5.0 * np.pi, 7.0 * np.pi

    def exact(X):
        t, x = X[:, 0], X[:, 1]
        return np.sin(a * x) * np.cos(a * t) + 2.0 * np.sin(b * x) * np.cos(b * t)

    def d2_dt2(X):
        t, x = X[:, 0], X[:, 1]
        return -a * a * np.sin(a * x) * np.cos(a * t) \
            - 2.0 * b * b * np.sin(b * x) * np.cos(b * t)

    def d2_dx2(X):
        return d2_dt2(X)  # both modes satisfy u_tt = u_xx

    def du_dt(X):
        t, x = X[:, 0], X[:, 1]
        return -a * np.sin(a * x) * np.sin(a * t) - 2.0 * b * np.sin(b * x) * np.sin(b * t)

    return PdeProblem(
        name="wave",
        domain=domain,
        operator=OperatorSpec(terms=((1.0, 0, 2), (-1.0, 1, 2))),
        source=lambda X: np.zeros(X.shape[0]),
        exact=exact,
        exact_derivs={(0, 2): d2_dt2, (1, 2): d2_dx2, (0, 1): du_dt},
        conditions=[
            Condition("derivative_dirichlet", "initial-velocity",
                      _facet_sampler(domain, {0: 0.0}, lambda P: np.zeros(P.shape[0])),
                      coord=0),
            Condition("dirichlet", "initial-profile",
                      _facet_sampler(domain, {0: 0.0},
                                     lambda P: np.sin(a * P[:, 1]) + 2.0 * np.sin(b * P[:, 1]))),
            Condition("dirichlet", "boundary-x0",
                      _facet_sampler(domain, {1: 0.0}, lambda P: np.zeros(P.shape[0]))),
            Condition("dirichlet", "boundary-x1",
                      _facet_sampler(domain, {1: 1.0}, lambda P: np.zeros(P.shape[0]))),
        ],
    )


def make_helmholtz() -> PdeProblem:
    """u_xx + u_yy + u = f on [-1,1]^2 with u = sin(pi x) sin(6 pi y)."""
    domain = ((-1.0, 1.0), (-1.0, 1.0))
    ky = 6.0 * np.pi
    kx = np.pi
    amp = 1.0 - kx * kx - ky * ky

    def exact(X):
        return np.sin(kx * X[:, 0]) * np.sin(ky * X[:, 1])

    zero = lambda P: np.zeros(P.shape[0])
    return PdeProblem(
        name="helmholtz",
        domain=domain,
        operator=OperatorSpec(terms=((1.0, 0, 2), (1.0, 1, 2)), algebraic="linear_in_u"),
        source=lambda X: amp * np.sin(kx * X[:, 0]) * np.sin(ky * X[:, 1]),
        exact=exact,
        exact_derivs={
            (0, 2): lambda X: -kx * kx * np.sin(kx * X[:, 0]) * np.sin(ky * X[:, 1]),
            (1, 2): lambda X: -ky * ky * np.sin(kx * X[:, 0]) * np.sin(ky * X[:, 1]),
        },
        conditions=[
            Condition("dirichlet", "edge-x-lo", _facet_sampler(domain, {0: -1.0}, zero)),
            Condition("dirichlet", "edge-x-hi", _facet_sampler(domain, {0: 1.0}, zero)),
            Condition("dirichlet", "edge-y-lo", _facet_sampler(domain, {1: -1.0}, zero)),
            Condition("dirichlet", "edge-y-hi", _facet_sampler(domain, {1: 1.0}, zero)),
        ],
    )


def make_klein_gordon(literal_zero_init: bool = False) -> PdeProblem:
    """u_tt - u_xx + u^3 = f on [0,1]^2 with u = x cos(5 pi t) + (x t)^3.

    The default initial data is consistent with the closed-form solution
    (u(0,x) = x, u_t(0,x) = 0).  ``literal_zero_init`` instead clamps
    u(0,x) to zero, which contradicts the exact solution; the mismatch is
    recorded in ``notes`` when enabled.
    """
    domain = ((0.0, 1.0), (0.0, 1.0))
    w = 5.0 * np.pi

    def exact(X):
        t, x = X[:, 0], X[:, 1]
        return x * np.cos(w * t) + (x * t) ** 3

    def d2_dt2(X):
        t, x = X[:, 0], X[:, 1]
        return -w * w * x * np.cos(w * t) + 6.0 * x ** 3 * t

    def d2_dx2(X):
        t, x = X[:, 0], X[:, 1]
        return 6.0 * x * t ** 3

    def du_dt(X):
        t, x = X[:, 0], X[:, 1]
        return -w * x * np.sin(w * t) + 3.0 * x ** 3 * t ** 2

    def source(X):
        return d2_dt2(X) - d2_dx2(X) + exact(X) ** 3

    if literal_zero_init:
        initial = [Condition("dirichlet", "initial-zero",
                             _facet_sampler(domain, {0: 0.0},
                                            lambda P: np.zeros(P.shape[0])))]
        notes = ("initial-zero clamps u(0,x) to 0 although the reference "
                 "solution has u(0,x) = x")
    else:
        initial = [
            Condition("dirichlet", "initial-profile",
                      _facet_sampler(domain, {0: 0.0}, lambda P: P[:, 1])),
            Condition("derivative_dirichlet", "initial-velocity",
                      _facet_sampler(domain, {0: 0.0}, lambda P: np.zeros(P.shape[0])),
                      coord=0),
        ]
        notes = ""

    return PdeProblem(
        name="klein-gordon",
        domain=domain,
        operator=OperatorSpec(terms=((1.0, 0, 2), (-1.0, 1, 2)), algebraic="cubic_in_u"),
        source=source,
        exact=exact,
        exact_derivs={(0, 2): d2_dt2, (1, 2): d2_dx2, (0, 1): du_dt},
        conditions=initial + [
            Condition("dirichlet", "boundary-x0",
                      _facet_sampler(domain, {1: 0.0}, lambda P: np.zeros(P.shape[0]))),
            Condition("dirichlet", "boundary-x1",
                      _facet_sampler(domain, {1: 1.0},
                                     lambda P: np.cos(w * P[:, 0]) + P[:, 0] ** 3)),
        ],
        notes=notes,
    )


PROBLEMS = {
    "transport": make_transport,
    "wave": make_wave,
    "helmholtz": make_helmholtz,
    "klein-gordon": make_klein_gordon,
}


def get_problem(name: str, **options) -> PdeProblem:
    if name not in PROBLEMS:
        raise ValueError(f"unknown problem {name!r}; expected one of {sorted(PROBLEMS)}")
    return PROBLEMS[name](**options)
