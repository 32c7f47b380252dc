"""Full-batch Adam training of PINN residual + boundary objectives.

The residual objective is the mean squared PDE residual over a fixed
collocation set; each boundary/initial condition contributes the mean
squared mismatch over its own fixed sample, and conditions are summed.
Inputs are affinely normalized to [-1, 1]^d before entering the network,
with operator coefficients and derivative targets rescaled to match.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, NonFiniteLossError
from .jets import record_mlp_params
from .network import MlpParams, forward, init_siren_uniform, init_xavier_normal
from .pdes import (
    Condition,
    ConditionBatch,
    PdeProblem,
    get_problem,
    record_operator,
    sample_collocation,
    sample_conditions,
)
from .tape import (
    Tape,
    backward,
    record_add,
    record_const,
    record_scale,
    record_slice_rows,
    record_sub,
    record_sum_of_squares,
)


# --- input normalization ----------------------------------------------------

@dataclass(frozen=True)
class Normalizer:
    """Affine map between a box domain and the unit box [-1, 1]^d."""

    lo: np.ndarray
    hi: np.ndarray

    @property
    def scale(self) -> np.ndarray:
        """dz/dx per coordinate: 2 / (hi - lo)."""
        return 2.0 / (self.hi - self.lo)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.lo) * self.scale - 1.0

    def from_unit(self, z: np.ndarray) -> np.ndarray:
        return (np.asarray(z, dtype=np.float64) + 1.0) / self.scale + self.lo


def normalizer_for(problem: PdeProblem) -> Normalizer:
    lo = np.array([a for a, _ in problem.domain])
    hi = np.array([b for _, b in problem.domain])
    return Normalizer(lo=lo, hi=hi)


def normalize_problem(problem: PdeProblem):
    """Rewrite a problem in unit-box coordinates.

    A derivative d^o/dx^o picks up scale^o, so each operator term's
    coefficient is multiplied by (2/(hi-lo))^order once here; sources and
    exact solutions are pulled back through the inverse map, and
    derivative-condition targets are divided by the coordinate scale.
    """
    nrm = normalizer_for(problem)
    scale = nrm.scale

    terms = tuple((c * scale[coord] ** order, coord, order)
                  for c, coord, order in problem.operator.terms)
    operator = replace(problem.operator, terms=terms)

    def pullback(fn):
        return lambda Z: fn(nrm.from_unit(Z))

    exact_derivs = {
        (coord, order): (lambda fn, s: lambda Z: fn(nrm.from_unit(Z)) / s)(
            fn, scale[coord] ** order)
        for (coord, order), fn in problem.exact_derivs.items()
    }

    def wrap_condition(cond: Condition) -> Condition:
        def draw(m, rng):
            batch = cond.draw(m, rng)
            targets = batch.targets
            if targets is not None and cond.kind == "derivative_dirichlet":
                targets = targets / scale[cond.coord]
            return ConditionBatch(
                points=nrm.to_unit(batch.points),
                targets=targets,
                points2=None if batch.points2 is None else nrm.to_unit(batch.points2),
            )
        return Condition(kind=cond.kind, name=cond.name, draw=draw, coord=cond.coord)

    unit = PdeProblem(
        name=problem.name,
        domain=tuple((-1.0, 1.0) for _ in problem.domain),
        operator=operator,
        source=pullback(problem.source),
        exact=pullback(problem.exact),
        exact_derivs=exact_derivs,
        conditions=[wrap_condition(c) for c in problem.conditions],
        notes=problem.notes,
    )
    return unit, nrm


# --- losses ------------------------------------------------------------------

@dataclass
class EpochPlan:
    """Static per-run arrays: the stacked point set and loss bookkeeping.

    Row layout of ``x_all``: collocation block, then derivative-condition
    rows, then value-condition rows (periodic pairs contribute two blocks).
    """

    x_all: np.ndarray
    n_colloc: int
    neg_source: np.ndarray
    extra_derivs: list
    cond_terms: list     # (kind, payload) per condition, see record_losses


def make_epoch_plan(problem: PdeProblem, colloc: np.ndarray,
                    cond_batches: list) -> EpochPlan:
    n = colloc.shape[0]
    rows = [colloc]
    cursor = n
    extra_derivs = []
    cond_terms = []
    ordered = sorted(zip(problem.conditions, cond_batches),
                     key=lambda cb: cb[0].kind != "derivative_dirichlet")
    for cond, batch in ordered:
        m = batch.points.shape[0]
        if cond.kind == "derivative_dirichlet":
            rows.append(batch.points)
            extra_derivs.append((cond.coord, cursor, cursor + m))
            cond_terms.append(("deriv", (len(extra_derivs) - 1, batch.targets)))
            cursor += m
        elif cond.kind == "dirichlet":
            rows.append(batch.points)
            cond_terms.append(("value", (cursor, cursor + m, batch.targets)))
            cursor += m
        elif cond.kind == "periodic_pair":
            rows.append(batch.points)
            rows.append(batch.points2)
            cond_terms.append(("pair", (cursor, cursor + m, cursor + m, cursor + 2 * m)))
            cursor += 2 * m
        else:
            raise ValueError(f"unknown condition kind {cond.kind!r}")
    x_all = np.vstack(rows)
    return EpochPlan(
        x_all=x_all,
        n_colloc=n,
        neg_source=-problem.source(colloc).reshape(-1, 1),
        extra_derivs=extra_derivs,
        cond_terms=cond_terms,
    )


def record_losses(tape: Tape, w_refs, b_refs, activations,
                  operator, plan: EpochPlan):
    """Record (mean residual loss, summed per-condition boundary loss)."""
    build = record_operator(tape, w_refs, b_refs, activations, operator,
                            record_const(tape, plan.x_all), plan.n_colloc,
                            plan.extra_derivs)
    res = record_add(tape, build.deriv, record_const(tape, plan.neg_source))
    res_loss = record_scale(tape, record_sum_of_squares(tape, res),
                            1.0 / plan.n_colloc)

    bnd_loss = None
    for kind, payload in plan.cond_terms:
        if kind == "deriv":
            idx, targets = payload
            out = build.extra_outs[idx]
            m = out.value.shape[0]
            diff = out if not np.any(targets) else \
                record_add(tape, out, record_const(tape, -targets))
        elif kind == "value":
            start, stop, targets = payload
            out = record_slice_rows(tape, build.value, start, stop)
            m = stop - start
            diff = out if not np.any(targets) else \
                record_add(tape, out, record_const(tape, -targets))
        else:  # pair
            s1, e1, s2, e2 = payload
            m = e1 - s1
            diff = record_sub(tape,
                              record_slice_rows(tape, build.value, s1, e1),
                              record_slice_rows(tape, build.value, s2, e2))
        term = record_scale(tape, record_sum_of_squares(tape, diff), 1.0 / m)
        bnd_loss = term if bnd_loss is None else record_add(tape, bnd_loss, term)
    if bnd_loss is None:
        bnd_loss = record_const(tape, np.zeros(()))
    return res_loss, bnd_loss


def residual_loss(problem: PdeProblem, params: MlpParams, colloc: np.ndarray,
                  tape: Tape | None = None):
    """Mean squared PDE residual as a tape node (own tape when none given)."""
    t = tape if tape is not None else Tape()
    w_refs, b_refs = record_mlp_params(t, params)
    plan = make_epoch_plan(problem, np.asarray(colloc, dtype=np.float64), [])
    node, _ = record_losses(t, w_refs, b_refs, params.activations,
                            problem.operator, plan)
    return node


def boundary_loss(problem: PdeProblem, params: MlpParams, cond_batches: list,
                  tape: Tape | None = None):
    """Summed per-condition mean squared mismatch as a tape node.

    The network still needs at least one input row, so a single phantom
    collocation row at the domain center rides along (its residual is not
    part of the returned node).
    """
    t = tape if tape is not None else Tape()
    w_refs, b_refs = record_mlp_params(t, params)
    center = np.array([[(a + b) / 2.0 for a, b in problem.domain]])
    plan = make_epoch_plan(problem, center, cond_batches)
    _, node = record_losses(t, w_refs, b_refs, params.activations,
                            problem.operator, plan)
    return node


# --- optimizer ---------------------------------------------------------------

@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0


def adam_init(arrays) -> AdamState:
    return AdamState(m=[np.zeros_like(a) for a in arrays],
                     v=[np.zeros_like(a) for a in arrays])


def adam_step(state: AdamState, arrays, grads, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; returns (new arrays, new state)."""
    t = state.t + 1
    new_arrays, new_m, new_v = [], [], []
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        new_arrays.append(a - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_arrays, AdamState(m=new_m, v=new_v, t=t)


def lr_at(step: int, lr0: float, decay_factor: float, decay_every: int) -> float:
    """Staircase exponential decay: lr0 * factor^floor(step / every)."""
    return lr0 * decay_factor ** (step // decay_every)


# --- training loop -----------------------------------------------------------

@dataclass
class TrainConfig:
    problem: str
    layer_sizes: list
    activation: str | list = "tanh"
    init: str = "xavier-normal"
    omega0: float = 30.0
    n_collocation: int = 256
    n_boundary: int = 200
    epochs: int = 80000
    lr0: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_factor: float = 0.9
    decay_every: int = 1000
    w_residual: float = 1.0
    w_boundary: float = 1.0
    seed: int = 1
    snapshot_every: int = 200
    normalize_inputs: bool = True
    problem_options: dict = field(default_factory=dict)


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)
    residual_loss: list = field(default_factory=list)
    boundary_loss: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def append(self, epoch, res, bnd, lr, secs):
        self.epochs.append(int(epoch))
        self.residual_loss.append(float(res))
        self.boundary_loss.append(float(bnd))
        self.lr.append(float(lr))
        self.seconds.append(float(secs))


HISTORY_COLUMNS = ("epoch", "residual_loss", "boundary_loss", "lr", "seconds")


def write_history(path, history: TrainHistory):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for row in zip(history.epochs, history.residual_loss,
                       history.boundary_loss, history.lr, history.seconds):
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]),
                        f"{row[4]:.3f}"])


def read_history(path) -> TrainHistory:
    hist = TrainHistory()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            hist.append(int(rec["epoch"]), float(rec["residual_loss"]),
                        float(rec["boundary_loss"]), float(rec["lr"]),
                        float(rec["seconds"]))
    return hist


def _init_params(config: TrainConfig, d: int) -> MlpParams:
    sizes = list(config.layer_sizes)
    if sizes[0] != d:
        raise DimensionError(
            f"layer_sizes[0] = {sizes[0]} but the problem has {d} coordinates")
    if sizes[-1] != 1:
        raise DimensionError(f"output width must be 1, got {sizes[-1]}")
    if config.init == "xavier-normal":
        return init_xavier_normal(sizes, config.activation, config.seed)
    if config.init == "siren-uniform":
        return init_siren_uniform(sizes, config.seed, omega0=config.omega0)
    raise ValueError(f"unknown init {config.init!r}")


def prepare_run(config: TrainConfig, collocation: np.ndarray | None = None):
    """Deterministic run setup: (working problem, EpochPlan, initial params).

    ``collocation`` optionally overrides the sampled interior points (given
    in original domain coordinates).  The returned problem is the normalized
    rewrite when ``config.normalize_inputs`` is set.
    """
    raw = get_problem(config.problem, **config.problem_options)
    if config.normalize_inputs:
        problem, nrm = normalize_problem(raw)
    else:
        problem, nrm = raw, None

    if collocation is None:
        colloc = sample_collocation(problem, config.n_collocation, config.seed)
    else:
        colloc = np.asarray(collocation, dtype=np.float64)
        if nrm is not None:
            colloc = nrm.to_unit(colloc)
    cond_batches = sample_conditions(problem, config.n_boundary, config.seed + 1)
    plan = make_epoch_plan(problem, colloc, cond_batches)
    params = _init_params(config, problem.d)
    return problem, plan, params


def initial_losses(config: TrainConfig) -> tuple[float, float]:
    """Residual/boundary loss at the untrained initialization.

    Cheap one-forward-pass fingerprint of the full deterministic pipeline
    (sampling, init, loss assembly); used to detect stale cached runs.
    """
    problem, plan, params = prepare_run(config)
    tape = Tape()
    w_refs, b_refs = record_mlp_params(tape, params)
    res_node, bnd_node = record_losses(tape, w_refs, b_refs,
                                       params.activations, problem.operator, plan)
    return float(res_node.value), float(bnd_node.value)


def train(config: TrainConfig, collocation: np.ndarray | None = None,
          progress: callable | None = None):
    """Train on fixed full-batch samples; returns (MlpParams, TrainHistory).

    ``collocation`` optionally overrides the sampled interior points (given
    in original domain coordinates).  Aborts with NonFiniteLossError the
    moment the total loss stops being finite.
    """
    problem, plan, params = prepare_run(config, collocation)
    arrays = params.weights + params.biases
    n_w = len(params.weights)
    state = adam_init(arrays)
    history = TrainHistory()
    t0 = time.perf_counter()

    for epoch in range(config.epochs):
        tape = Tape()
        cur = MlpParams(arrays[:n_w], arrays[n_w:], params.activations)
        w_refs, b_refs = record_mlp_params(tape, cur)
        res_node, bnd_node = record_losses(tape, w_refs, b_refs,
                                           cur.activations, problem.operator, plan)
        total = record_add(tape,
                           record_scale(tape, res_node, config.w_residual),
                           record_scale(tape, bnd_node, config.w_boundary))
        loss = float(total.value)
        if not np.isfinite(loss):
            raise NonFiniteLossError(epoch, loss,
                                     max(float(np.max(np.abs(a))) for a in arrays))
        if epoch % config.snapshot_every == 0 or epoch == config.epochs - 1:
            history.append(epoch, float(res_node.value), float(bnd_node.value),
                           lr_at(epoch, config.lr0, config.decay_factor,
                                 config.decay_every),
                           time.perf_counter() - t0)
            if progress is not None:
                progress(epoch, cur, history)
        grads_by_id = backward(tape, total)
        grads = [grads_by_id[r.id] for r in w_refs] + [grads_by_id[r.id] for r in b_refs]
        arrays, state = adam_step(
            state, arrays, grads,
            lr_at(epoch, config.lr0, config.decay_factor, config.decay_every),
            config.beta1, config.beta2, config.eps)

    final = MlpParams(arrays[:n_w], arrays[n_w:], params.activations)
    return final, history


def evaluation_grid(problem: PdeProblem, resolution: int = 256) -> np.ndarray:
    """Tensor-product grid over the problem box, endpoints included."""
    axes = [np.linspace(lo, hi, resolution) for lo, hi in problem.domain]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def evaluate_mae(params: MlpParams, problem: PdeProblem, resolution: int = 256,
                 normalized_inputs: bool = True) -> float:
    """Mean absolute error of the network against the closed-form solution.

    ``normalized_inputs`` must match how the network was trained: when
    true, grid points are mapped to the unit box before the forward pass.
    """
    pts = evaluation_grid(problem, resolution)
    inputs = normalizer_for(problem).to_unit(pts) if normalized_inputs else pts
    total = 0.0
    for start in range(0, pts.shape[0], 8192):
        stop = min(start + 8192, pts.shape[0])
        pred, _ = forward(params, inputs[start:stop])
        total += float(np.sum(np.abs(pred.ravel() - problem.exact(pts[start:stop]))))
    return total / pts.shape[0]
