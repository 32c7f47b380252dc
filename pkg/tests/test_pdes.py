"""Benchmark PDE definitions: exact solutions, sources, sampling, residuals."""
import numpy as np
import pytest

from pinnkit.network import MlpParams, init_xavier_normal
from pinnkit.pdes import (PROBLEMS, exact_residual, get_problem, residual_at,
                          sample_collocation, sample_conditions)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_exact_solution_residual_vanishes(name):
    problem = get_problem(name)
    pts = sample_collocation(problem, 1000, seed=123)
    res = exact_residual(problem, pts)
    assert np.max(np.abs(res)) <= 1e-8, name


def test_sources_against_symbolic_oracle():
    sympy = pytest.importorskip("sympy")
    t, x = sympy.symbols("t x")
    cases = {
        # problem name -> (u expression, operator applied to u, coords)
        "transport": (sympy.sin(x - 30 * t),
                      lambda u: sympy.diff(u, t) + 30 * sympy.diff(u, x)),
        "wave": (sympy.sin(5 * sympy.pi * x) * sympy.cos(5 * sympy.pi * t)
                 + 2 * sympy.sin(7 * sympy.pi * x) * sympy.cos(7 * sympy.pi * t),
                 lambda u: sympy.diff(u, t, 2) - sympy.diff(u, x, 2)),
        "klein-gordon": (x * sympy.cos(5 * sympy.pi * t) + (x * t) ** 3,
                         lambda u: sympy.diff(u, t, 2) - sympy.diff(u, x, 2) + u ** 3),
        "helmholtz": (sympy.sin(sympy.pi * t) * sympy.sin(6 * sympy.pi * x),
                      lambda u: sympy.diff(u, t, 2) + sympy.diff(u, x, 2) + u),
    }
    rng = np.random.default_rng(5)
    for name, (u, apply_op) in cases.items():
        problem = get_problem(name)
        f = sympy.lambdify((t, x), sympy.simplify(apply_op(u)), "numpy")
        pts = sample_collocation(problem, 50, seed=int(rng.integers(1e6)))
        want = f(pts[:, 0], pts[:, 1])
        got = problem.source(pts)
        assert np.max(np.abs(got - want)) <= 1e-9, name


def test_exact_solution_point_facts():
    tr = get_problem("transport")
    x = np.linspace(0, 2 * np.pi, 9)
    pts0 = np.column_stack([np.zeros_like(x), x])
    assert np.allclose(tr.exact(pts0), np.sin(x), atol=1e-12)

    kg = get_problem("klein-gordon")
    ts = np.linspace(0, 1, 7)
    left = np.column_stack([ts, np.zeros_like(ts)])
    assert np.max(np.abs(kg.exact(left))) <= 1e-12          # u(t, 0) = 0
    assert abs(kg.exact(np.array([[1.0, 1.0]]))[0]) <= 1e-12  # cos(5pi)+1 = 0

    hh = get_problem("helmholtz")
    edges = np.array([[-1.0, 0.3], [1.0, -0.2], [0.4, -1.0], [0.7, 1.0]])
    assert np.max(np.abs(hh.exact(edges))) <= 1e-12

    wv = get_problem("wave")
    xs = np.linspace(0, 1, 11)
    init = np.column_stack([np.zeros_like(xs), xs])
    want = np.sin(5 * np.pi * xs) + 2 * np.sin(7 * np.pi * xs)
    assert np.allclose(wv.exact(init), want, atol=1e-12)


def test_helmholtz_forcing_amplitude():
    # f = (1 - pi^2 - 36 pi^2) sin(pi x) sin(6 pi y); honest amplitude below
    amp = 1.0 - np.pi ** 2 - 36.0 * np.pi ** 2
    assert abs(amp - (-364.17536284030626)) <= 1e-10
    hh = get_problem("helmholtz")
    pt = np.array([[0.5, 0.25]])
    want = amp * np.sin(np.pi * 0.5) * np.sin(6 * np.pi * 0.25)
    assert abs(hh.source(pt)[0] - want) <= 1e-12


def test_klein_gordon_literal_zero_variant():
    default = get_problem("klein-gordon")
    literal = get_problem("klein-gordon", literal_zero_init=True)
    names_d = {c.name for c in default.conditions}
    names_l = {c.name for c in literal.conditions}
    assert "initial-profile" in names_d
    assert "initial-zero" in names_l
    assert literal.notes  # the mismatch is recorded on the problem
    rng = np.random.default_rng(0)
    cond = next(c for c in literal.conditions if c.name == "initial-zero")
    batch = cond.draw(16, rng)
    assert np.all(batch.points[:, 0] == 0.0)
    assert np.all(batch.targets == 0.0)


def test_collocation_sampling_in_domain_and_deterministic():
    for name in sorted(PROBLEMS):
        problem = get_problem(name)
        a = sample_collocation(problem, 64, seed=9)
        b = sample_collocation(problem, 64, seed=9)
        assert np.array_equal(a, b)
        for j, (lo, hi) in enumerate(problem.domain):
            assert np.all((a[:, j] >= lo) & (a[:, j] <= hi))


def test_condition_budget_split():
    wave = get_problem("wave")
    batches = sample_conditions(wave, 256, seed=4)
    assert len(batches) == len(wave.conditions) == 4
    sizes = [b.points.shape[0] for b in batches]
    assert sum(sizes) == 256
    assert max(sizes) - min(sizes) <= 1  # equal split, remainder to the first

    # 200 into 2 transport conditions -> 100 each
    tr = get_problem("transport")
    tb = sample_conditions(tr, 200, seed=4)
    assert [b.points.shape[0] for b in tb] == [100, 100]


def test_periodic_pair_shares_time_samples():
    tr = get_problem("transport")
    cond = next(c for c in tr.conditions if c.kind == "periodic_pair")
    batch = cond.draw(32, np.random.default_rng(0))
    assert batch.points2 is not None
    assert np.array_equal(batch.points[:, 0], batch.points2[:, 0])  # same t
    assert np.all(batch.points[:, 1] == 0.0)
    assert np.allclose(batch.points2[:, 1], 2 * np.pi)


def test_residual_at_matches_exact_residual_identity():
    # residual_at on a random net equals D[u_net] - f computed via jets;
    # cross-check the plain-array path against the tape path
    from pinnkit.tape import Tape

    for name in sorted(PROBLEMS):
        problem = get_problem(name)
        params = init_xavier_normal([2, 6, 6, 1], "sine", seed=8)
        pts = sample_collocation(problem, 17, seed=2)
        plain = residual_at(problem, params, pts)
        node = residual_at(problem, params, pts, tape=Tape())
        assert plain.shape == (17,)
        assert np.max(np.abs(plain - node.value.ravel())) <= 1e-12, name


def test_transport_exact_representing_network():
    # u(t,x) = sin(x - 30 t) is exactly a width-2 sine network: residual 0
    problem = get_problem("transport")
    params = MlpParams([np.array([[-30.0, 0.0], [1.0, 0.0]]),
                        np.array([[1.0], [0.0]])],
                       [np.array([[0.0, 0.0]]), np.array([[0.0]])],
                       ["sine"])
    pts = sample_collocation(problem, 200, seed=1)
    res = residual_at(problem, params, pts)
    assert np.max(np.abs(res)) <= 1e-9
    pred_err = params and np.max(np.abs(
        np.sin(pts[:, 1] - 30 * pts[:, 0])
        - (np.sin(pts @ params.weights[0][:, :1]).ravel())))
    assert pred_err <= 1e-12


def test_operator_spec_metadata():
    tr = get_problem("transport")
    assert tr.operator.max_order == 1
    assert tr.operator.uniform_order() == 1
    assert tr.operator.algebraic == "none"
    hh = get_problem("helmholtz")
    assert hh.operator.algebraic == "linear_in_u"
    assert hh.operator.uniform_order() == 2
    kg = get_problem("klein-gordon")
    assert kg.operator.algebraic == "cubic_in_u"
    wv = get_problem("wave")
    assert wv.operator.algebraic == "none"
    assert [c for c, _, _ in wv.operator.terms] == [1.0, -1.0]


def test_unknown_problem_raises():
    with pytest.raises(ValueError):
        get_problem("burgers")
    with pytest.raises(TypeError):
        get_problem("transport", literal_zero_init=True)  # wrong option
