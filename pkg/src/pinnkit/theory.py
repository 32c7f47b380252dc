"""Closed-form residual algebra for two-layer networks.

For a single-hidden-layer network u(x) = sigma(x W1 + b1) W2 + b2 and a
pure k-th order operator D = sum_i c_i d^k/dx_i^k:

    D[u](x) = (sigma^(k)(x W1 + b1) o A) W2,   A = sum_i c_i (W1 row i)^k

with the k-th powers taken elementwise.  Everything here — the operator
evaluation, its W2 gradient, the rank certificate, and the explicit
full-rank / zero-residual constructions — runs on that identity.

The residual objective in this module is the plain sum of squared
residuals over the batch (no 1/N), matching the certificate algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import act_eval_batch
from .errors import ConstructionFailedError
from .network import MlpParams
from .pdes import OperatorSpec, PdeProblem

RANK_TOL_REL = 1e-8


def _two_layer_check(params: MlpParams, operator: OperatorSpec):
    if params.n_layers != 2:
        raise ValueError(
            f"closed form needs exactly one hidden layer, got {params.n_layers} layers")
    if operator.algebraic != "none":
        raise ValueError("closed form covers pure derivative operators only")
    k = operator.uniform_order()
    if k is None:
        raise ValueError("closed form needs a single derivative order across terms")
    return k


def operator_coefficient_vector(params: MlpParams, operator: OperatorSpec) -> np.ndarray:
    """A = sum_i c_i (W1 row i)^k, one entry per hidden neuron."""
    k = _two_layer_check(params, operator)
    w1 = params.weights[0]
    a = np.zeros(w1.shape[1])
    for c, coord, _ in operator.terms:
        a += c * w1[coord, :] ** k
    return a


@dataclass(frozen=True)
class FkMatrix:
    """sigma^(k) of the hidden pre-activations (N x n1), plus A and k."""

    matrix: np.ndarray
    coeff: np.ndarray
    k: int


def fk_matrix(params: MlpParams, batch: np.ndarray, operator: OperatorSpec) -> FkMatrix:
    k = _two_layer_check(params, operator)
    g1 = np.asarray(batch, dtype=np.float64) @ params.weights[0] + params.biases[0]
    return FkMatrix(
        matrix=act_eval_batch(params.activations[0], k, g1),
        coeff=operator_coefficient_vector(params, operator),
        k=k,
    )


def two_layer_operator(params: MlpParams, batch: np.ndarray,
                       operator: OperatorSpec) -> np.ndarray:
    """D[u](x) over the batch via the closed form; returns (N,)."""
    fk = fk_matrix(params, batch, operator)
    return ((fk.matrix * fk.coeff) @ params.weights[1]).ravel()


def two_layer_w2_gradient(params: MlpParams, batch: np.ndarray,
                          operator: OperatorSpec, source_values: np.ndarray) -> np.ndarray:
    """Gradient of sum_j (D[u](x_j) - f_j)^2 with respect to W2; (n1 x 1).

    Uses l'(r) = 2r:  grad = A o (L' F^(k)) arranged as a column.
    """
    fk = fk_matrix(params, batch, operator)
    r = (fk.matrix * fk.coeff) @ params.weights[1] - \
        np.asarray(source_values, dtype=np.float64).reshape(-1, 1)
    lprime = 2.0 * r
    return (fk.coeff * (lprime.T @ fk.matrix)).reshape(-1, 1)


def numerical_rank(matrix: np.ndarray, tol_rel: float = RANK_TOL_REL):
    """(rank, singular values) with rank = #{s_i > tol_rel * s_max}."""
    s = np.linalg.svd(np.asarray(matrix, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, s
    return int(np.sum(s > tol_rel * s[0])), s


@dataclass(frozen=True)
class CertificateTolerances:
    rank_tol_rel: float = RANK_TOL_REL
    coeff_min: float = 1e-12     # |A_i| must exceed this for every neuron
    grad_norm: float = 1e-6      # Frobenius norm of the W2 gradient
    residual_max: float = 1e-6   # max |D[u] - f| over the batch


@dataclass(frozen=True)
class Certificate:
    """Checkable evidence that a critical point is a global minimum.

    Verdicts: 'global-minimum-certified' when the point is critical in W2,
    every |A_i| is nonzero, sigma^(k) has full row rank N, and the residual
    vanishes; 'conditions-violated' when critical but a hypothesis fails;
    'not-critical' otherwise.
    """

    verdict: str
    rank: int
    n_points: int
    n_hidden: int
    singular_values: np.ndarray
    coeff_min_abs: float
    grad_w2_norm: float
    max_abs_residual: float
    tolerances: CertificateTolerances = field(default_factory=CertificateTolerances)


def theorem1_certificate(params: MlpParams, problem: PdeProblem, batch: np.ndarray,
                         tolerances: CertificateTolerances | None = None) -> Certificate:
    tol = tolerances or CertificateTolerances()
    batch = np.asarray(batch, dtype=np.float64)
    fk = fk_matrix(params, batch, problem.operator)
    f = problem.source(batch)
    residual = (fk.matrix * fk.coeff) @ params.weights[1] - f.reshape(-1, 1)
    grad = (fk.coeff * (2.0 * residual.T @ fk.matrix)).reshape(-1, 1)
    grad_norm = float(np.linalg.norm(grad))
    rank, svals = numerical_rank(fk.matrix, tol.rank_tol_rel)
    coeff_min = float(np.min(np.abs(fk.coeff)))
    max_res = float(np.max(np.abs(residual)))

    if grad_norm > tol.grad_norm:
        verdict = "not-critical"
    elif (rank == batch.shape[0] and coeff_min > tol.coeff_min
          and max_res <= tol.residual_max):
        verdict = "global-minimum-certified"
    else:
        verdict = "conditions-violated"
    return Certificate(
        verdict=verdict,
        rank=rank,
        n_points=batch.shape[0],
        n_hidden=params.weights[0].shape[1],
        singular_values=svals,
        coeff_min_abs=coeff_min,
        grad_w2_norm=grad_norm,
        max_abs_residual=max_res,
        tolerances=tol,
    )


@dataclass(frozen=True)
class FullRankConstruction:
    """Metadata from the ordering construction.

    ``direction`` is the vector a whose projections order the batch;
    ``row_order`` sorts batch rows by that projection, so
    ``F^(k)[row_order][:, :N]`` is the near-triangular leading block.
    ``gamma`` is sup |sigma^(k)|, the limit of the strictly-upper entries.
    """

    direction: np.ndarray
    row_order: np.ndarray
    alpha: float
    beta: float
    gamma: float


def construct_full_rank_params(batch: np.ndarray, n_hidden: int, kind: str, k: int,
                               beta: float = 0.0, alpha: float = 100.0,
                               seed: int = 0, max_tries: int = 64,
                               strict: bool = True):
    """First-layer weights that make sigma^(k)(X W1 + b1) full row rank.

    Neuron j (for j < N) reads -alpha * (a . x) + alpha * (a . x_sorted_j)
    + beta, so at x = x_sorted_i the pre-activation is
    alpha * a.(x_j - x_i) + beta: positive above the diagonal, beta on it,
    negative below.  As alpha grows, sigma^(k) of the leading block tends
    to a triangular matrix with sigma^(k)(beta) on the diagonal.

    Returns (MlpParams, FullRankConstruction); the second layer starts at
    zero.  Extra neurons beyond the first N are random.  ``strict=False``
    permits n_hidden < N (a deliberately rank-starved construction, used to
    demonstrate failure).
    """
    batch = np.asarray(batch, dtype=np.float64)
    n, d = batch.shape
    if strict and n_hidden < n:
        raise ValueError(f"need n_hidden >= N = {n}, got {n_hidden}")
    if np.unique(batch, axis=0).shape[0] != n:
        raise ValueError("batch has duplicate rows; distinct points are required")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        a = rng.normal(size=d)
        a /= np.linalg.norm(a)
        proj = batch @ a
        order = np.argsort(proj, kind="stable")
        gaps = np.diff(proj[order])
        if np.all(gaps > 1e-12 * max(1.0, np.max(np.abs(proj)))):
            break
    else:
        raise RuntimeError(
            f"could not find a strictly ordering direction in {max_tries} tries")

    w1 = np.empty((d, n_hidden))
    b1 = np.empty((1, n_hidden))
    for j in range(min(n, n_hidden)):
        w1[:, j] = -alpha * a
        b1[0, j] = alpha * proj[order[j]] + beta
    if n_hidden > n:
        w1[:, n:] = rng.normal(0.0, 1.0, size=(d, n_hidden - n))
        b1[0, n:] = rng.normal(0.0, 1.0, size=n_hidden - n)

    params = MlpParams([w1, np.zeros((n_hidden, 1))], [b1, np.zeros((1, 1))], [kind])
    x_grid = np.linspace(-30.0, 30.0, 120001)
    gamma = float(np.max(np.abs(act_eval_batch(kind, k, x_grid))))
    info = FullRankConstruction(direction=a, row_order=order,
                                alpha=float(alpha), beta=float(beta), gamma=gamma)
    return params, info


def _default_beta(kind: str, k: int) -> float:
    # put the diagonal where |sigma^(k)| is largest so it stays away from 0
    grid = np.linspace(-8.0, 8.0, 4001)
    vals = np.abs(act_eval_batch(kind, k, grid))
    return float(grid[np.argmax(vals)])


# Kinds whose sigma^(k) decays to 0 as the argument goes to -inf.  For these
# the ordering construction's leading block tends to a triangular matrix
# with nonzero diagonal.  For sine/cosine the same construction collapses:
# sigma^(k)(u_i + v_j) splits through the angle-addition formula into a sum
# of two rank-one products, capping the rank at 2.  Those kinds use an
# i.i.d. first layer instead, which is generically full rank.
_ORDERING_KINDS = ("softplus", "sigmoid", "tanh", "relu")


def _random_first_layer(batch, n_hidden, kind, seed):
    rng = np.random.default_rng(seed)
    d = batch.shape[1]
    span = np.maximum(np.max(np.abs(batch), axis=0), 1e-6)
    w1 = rng.normal(0.0, 1.0, size=(d, n_hidden)) * (2.0 / span)[:, None]
    b1 = rng.uniform(-np.pi, np.pi, size=(1, n_hidden))
    return MlpParams([w1, np.zeros((n_hidden, 1))], [b1, np.zeros((1, 1))], [kind])


def construct_global_minimum(problem: PdeProblem, batch: np.ndarray, n_hidden: int,
                             kind: str, seed: int = 0, alpha: float | None = None,
                             beta: float | None = None):
    """Two-layer params with zero residual at the batch points.

    Builds a full-row-rank first layer (ordering construction for decaying
    kinds, random features for periodic ones), then solves the linear
    system (F^(k) o A) W2 = f by least squares.  Raises
    ConstructionFailedError with the measured rank when F^(k) cannot reach
    rank N.  Returns (params, FullRankConstruction-or-None); the metadata
    is None on the random-features path.
    """
    batch = np.asarray(batch, dtype=np.float64)
    n = batch.shape[0]
    k = problem.operator.uniform_order()
    if k is None or problem.operator.algebraic != "none":
        raise ValueError("construction covers pure uniform-order linear operators only")
    use_ordering = kind in _ORDERING_KINDS
    if beta is None:
        beta = _default_beta(kind, k)

    best_rank = 0
    for attempt in range(8):
        if use_ordering:
            if alpha is None and n > 1:
                # scale alpha so even the smallest projection gap saturates
                _, probe = construct_full_rank_params(
                    batch, n_hidden, kind, k, beta=beta, alpha=1.0,
                    seed=seed + attempt, strict=False)
                gap = float(np.min(np.diff(np.sort(batch @ probe.direction))))
                use_alpha = 40.0 / gap
            else:
                use_alpha = 40.0 if alpha is None else alpha
            params, info = construct_full_rank_params(
                batch, n_hidden, kind, k, beta=beta, alpha=use_alpha,
                seed=seed + attempt, strict=False)
        else:
            params = _random_first_layer(batch, n_hidden, kind, seed + attempt)
            info = None
        fk = fk_matrix(params, batch, problem.operator)
        rank, _ = numerical_rank(fk.matrix)
        best_rank = max(best_rank, rank)
        if rank == n and np.min(np.abs(fk.coeff)) > 1e-12:
            f = problem.source(batch).reshape(-1, 1)
            w2, *_ = np.linalg.lstsq(fk.matrix * fk.coeff, f, rcond=None)
            solved = params.copy()
            solved.weights[1] = w2
            residual = (fk.matrix * fk.coeff) @ w2 - f
            if np.max(np.abs(residual)) <= 1e-8:
                return solved, info
    raise ConstructionFailedError(
        f"sigma^(k) matrix reached rank {best_rank} < N = {n} "
        f"(n_hidden = {n_hidden}, kind = {kind})",
        rank=best_rank, required=n)


HESSIAN_DIM_GUARD = 128


def restricted_hessian_min_eig(params: MlpParams, problem: PdeProblem,
                               batch: np.ndarray, include_bias: bool = True,
                               step_scale: float = 1e-4):
    """Smallest |eigenvalue| of the residual-objective Hessian over (W2, b2).

    The objective is the summed squared residual; derivatives are central
    finite differences.  Returns (min_abs_eig, dimension).  Refuses hidden
    widths above HESSIAN_DIM_GUARD to keep the O(dim^2) sweep tractable.
    """
    batch = np.asarray(batch, dtype=np.float64)
    n_hidden = params.weights[0].shape[1]
    if n_hidden > HESSIAN_DIM_GUARD:
        raise ValueError(
            f"hidden width {n_hidden} exceeds the finite-difference guard "
            f"({HESSIAN_DIM_GUARD}); restrict to a narrower probe network")
    f = problem.source(batch)

    def phi(theta):
        p = params.copy()
        p.weights[1] = theta[:n_hidden].reshape(-1, 1)
        if include_bias:
            p.biases[1] = theta[n_hidden:].reshape(1, 1)
        # inherits the closed form's pure-derivative-operator restriction
        r = two_layer_operator(p, batch, problem.operator) - f
        return float(np.sum(r * r))

    dim = n_hidden + (1 if include_bias else 0)
    theta0 = np.concatenate([params.weights[1].ravel(),
                             params.biases[1].ravel()[:1] if include_bias else []])
    steps = step_scale * np.maximum(1.0, np.abs(theta0))
    hess = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            ei = np.zeros(dim); ei[i] = steps[i]
            ej = np.zeros(dim); ej[j] = steps[j]
            val = (phi(theta0 + ei + ej) - phi(theta0 + ei - ej)
                   - phi(theta0 - ei + ej) + phi(theta0 - ei - ej)) \
                / (4.0 * steps[i] * steps[j])
            hess[i, j] = hess[j, i] = val
    eigs = np.linalg.eigvalsh(hess)
    return float(np.min(np.abs(eigs))), dim
