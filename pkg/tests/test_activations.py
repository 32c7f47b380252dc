"""Closed-form activation derivatives against finite-difference oracles."""
import numpy as np
import pytest

from pinnkit.activations import (ACTIVATION_KINDS, CENTRAL_BAND, MAX_ORDER,
                                 act_eval, act_eval_batch, bijectivity_report)

GRID = np.linspace(-3.0, 3.0, 201)
H = 1e-5

SMOOTH_KINDS = [k for k in ACTIVATION_KINDS if k != "relu"]


@pytest.mark.parametrize("kind", SMOOTH_KINDS)
@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivative_matches_finite_difference(kind, order):
    # central difference of the (order-1) closed form; error O(h^2) ~ 1e-11
    fd = (act_eval_batch(kind, order - 1, GRID + H)
          - act_eval_batch(kind, order - 1, GRID - H)) / (2 * H)
    got = act_eval_batch(kind, order, GRID)
    assert np.max(np.abs(got - fd)) <= 1e-6


def test_relu_derivatives():
    x = GRID[np.abs(GRID) > 1e-3]
    assert np.array_equal(act_eval_batch("relu", 0, x), np.maximum(x, 0.0))
    assert np.array_equal(act_eval_batch("relu", 1, x), (x > 0).astype(float))
    for order in (2, 3, 4):
        assert np.all(act_eval_batch("relu", order, x) == 0.0)


def test_sine_fourth_derivative_is_sine():
    assert np.max(np.abs(act_eval_batch("sine", 4, GRID)
                         - act_eval_batch("sine", 0, GRID))) <= 1e-12


def test_cosine_is_shifted_sine():
    # cos^(m) = sin^(m+1)
    for order in range(4):
        assert np.max(np.abs(act_eval_batch("cosine", order, GRID)
                             - act_eval_batch("sine", order + 1, GRID))) <= 1e-12


def test_scalar_wrapper_matches_batch():
    rng = np.random.default_rng(7)
    for kind in ACTIVATION_KINDS:
        for order in range(MAX_ORDER + 1):
            x = float(rng.uniform(-2, 2))
            batch = act_eval_batch(kind, order, np.array([x]))
            assert act_eval(kind, order, x) == batch[0]


def test_extreme_inputs_stay_finite():
    x = np.array([-1e4, -30.0, 0.0, 30.0, 1e4])
    for kind in ACTIVATION_KINDS:
        for order in range(MAX_ORDER + 1):
            assert np.all(np.isfinite(act_eval_batch(kind, order, x))), (kind, order)
    # softplus(x) -> x for large x, -> 0 for very negative x
    assert abs(act_eval("softplus", 0, 1e4) - 1e4) < 1e-6
    assert act_eval("softplus", 0, -1e4) == 0.0


def test_order_and_kind_validation():
    with pytest.raises(ValueError):
        act_eval_batch("tanh", MAX_ORDER + 1, GRID)
    with pytest.raises(ValueError):
        act_eval_batch("gelu", 0, GRID)
    with pytest.raises(ValueError):
        act_eval_batch("tanh", -1, GRID)


def _is_monotone(vals):
    d = np.diff(vals)
    return np.all(d > 0) or np.all(d < 0)


@pytest.mark.parametrize("kind", ACTIVATION_KINDS)
def test_bijective_orders_are_strictly_monotone(kind):
    meta = bijectivity_report(kind)
    wide = np.linspace(-12.0, 12.0, 4001)
    for order in meta.bijective_orders:
        assert _is_monotone(act_eval_batch(kind, order, wide)), (kind, order)


@pytest.mark.parametrize("kind", SMOOTH_KINDS)
def test_non_bijective_orders_repeat_values(kind):
    # an order absent from the set must take some value twice on the line
    meta = bijectivity_report(kind)
    wide = np.linspace(-12.0, 12.0, 4001)
    for order in range(1, MAX_ORDER + 1):
        if order in meta.bijective_orders:
            continue
        vals = act_eval_batch(kind, order, wide)
        assert not _is_monotone(vals), (kind, order)


@pytest.mark.parametrize("kind", ACTIVATION_KINDS)
def test_band_bijective_orders(kind):
    meta = bijectivity_report(kind)
    lo, hi = CENTRAL_BAND
    inner = np.linspace(lo + 1e-6, hi - 1e-6, 2001)
    for order in meta.band_bijective_orders:
        assert _is_monotone(act_eval_batch(kind, order, inner)), (kind, order)


@pytest.mark.parametrize("kind", ACTIVATION_KINDS)
def test_bounded_orders_respect_sup(kind):
    meta = bijectivity_report(kind)
    wide = np.linspace(-50.0, 50.0, 20001)
    for order in meta.bounded_orders:
        sup = meta.sup_abs[order]
        vals = np.abs(act_eval_batch(kind, order, wide))
        assert np.max(vals) <= sup + 1e-9, (kind, order)
        # the bound is tight somewhere
        assert np.max(vals) >= 0.5 * sup, (kind, order)


@pytest.mark.parametrize("kind", ACTIVATION_KINDS)
def test_infimum_zero_orders(kind):
    meta = bijectivity_report(kind)
    wide = np.linspace(-60.0, 60.0, 20001)
    for order in meta.infimum_zero_orders:
        vals = np.abs(act_eval_batch(kind, order, wide))
        assert np.min(vals) <= 1e-12, (kind, order)


def test_known_meta_facts():
    # tanh has no bijective derivative on the line; softplus' first
    # derivative is the sigmoid (bijective); sine's even derivatives are
    # bijective on the central band.
    assert bijectivity_report("tanh").bijective_orders == frozenset()
    assert 1 in bijectivity_report("softplus").bijective_orders
    assert 2 in bijectivity_report("sine").band_bijective_orders
    assert 1 in bijectivity_report("cosine").band_bijective_orders
    assert bijectivity_report("sine").sup_abs[1] == 1.0
