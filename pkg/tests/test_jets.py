"""Forward-propagated derivative streams against finite differences."""
import numpy as np
import pytest

from pinnkit.jets import jet_forward
from pinnkit.network import MlpParams, forward, init_xavier_normal
from pinnkit.tape import Tape

KINDS = ("tanh", "sine", "cosine", "softplus", "sigmoid")


def fd_first(params, batch, coord, h=1e-6):
    e = np.zeros(batch.shape[1])
    e[coord] = h
    fp, _ = forward(params, batch + e)
    fm, _ = forward(params, batch - e)
    return (fp - fm) / (2 * h)


def fd_second(params, batch, coord, h=1e-3):
    # 5-point stencil: O(h^4) truncation survives large 4th derivatives
    e = np.zeros(batch.shape[1])
    e[coord] = h
    f2p, _ = forward(params, batch + 2 * e)
    fp, _ = forward(params, batch + e)
    f0, _ = forward(params, batch)
    fm, _ = forward(params, batch - e)
    f2m, _ = forward(params, batch - 2 * e)
    return (-f2p + 16 * fp - 30 * f0 + 16 * fm - f2m) / (12 * h * h)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("depth", [1, 2, 3])
def test_jet_derivatives_match_finite_differences(kind, depth):
    rng = np.random.default_rng(hash((kind, depth)) % 2**32)
    d = 2
    sizes = [d] + [6] * depth + [1]
    params = init_xavier_normal(sizes, kind, seed=int(rng.integers(1e6)))
    # widen the weights so derivatives are not tiny
    params = MlpParams([w * 3.0 for w in params.weights],
                       [b + 0.1 for b in params.biases], params.activations)
    batch = rng.uniform(-1, 1, size=(4, d))
    for coord in range(d):
        jet = jet_forward(Tape(), params, batch, coord)
        value, _ = forward(params, batch)
        assert np.max(np.abs(jet.value_out.value - value)) <= 1e-12
        err1 = np.max(np.abs(jet.first_out.value - fd_first(params, batch, coord)))
        err2 = np.max(np.abs(jet.second_out.value - fd_second(params, batch, coord)))
        assert err1 <= 1e-6, (kind, depth, coord, err1)
        assert err2 <= 1e-4, (kind, depth, coord, err2)


def test_width_one_sine_example():
    # u(x) = 3 sin(2x - 1):  at x = 1, u = 3 sin 1, u' = 6 cos 1, u'' = -12 sin 1
    params = MlpParams([np.array([[2.0]]), np.array([[3.0]])],
                       [np.array([[-1.0]]), np.array([[0.0]])],
                       ["sine"])
    jet = jet_forward(Tape(), params, np.array([[1.0]]), coord=0)
    assert abs(jet.value_out.value[0, 0] - 3 * np.sin(1.0)) <= 1e-9
    assert abs(jet.first_out.value[0, 0] - 6 * np.cos(1.0)) <= 1e-9
    assert abs(jet.second_out.value[0, 0] + 12 * np.sin(1.0)) <= 1e-9
    # honest decimals of the above
    assert abs(jet.value_out.value[0, 0] - 2.5244129544236893) <= 1e-12
    assert abs(jet.first_out.value[0, 0] - 3.2418138352088386) <= 1e-12
    assert abs(jet.second_out.value[0, 0] + 10.097651817694756) <= 1e-12


def test_first_order_only_jet():
    params = init_xavier_normal([2, 8, 1], "softplus", seed=3)
    batch = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    jet = jet_forward(Tape(), params, batch, coord=1, order=1)
    err = np.max(np.abs(jet.first_out.value - fd_first(params, batch, 1)))
    assert err <= 1e-6
    assert jet.second_out is None


def test_jet_validation():
    params = init_xavier_normal([2, 4, 1], "tanh", seed=0)
    batch = np.zeros((3, 2))
    with pytest.raises(ValueError):
        jet_forward(Tape(), params, batch, coord=2)
    with pytest.raises(ValueError):
        jet_forward(Tape(), params, batch, coord=0, order=3)


def test_jet_backward_reaches_params():
    # gradients flow through value+derivative streams to every layer
    from pinnkit.jets import record_mlp_params, mlp_streams, StreamSpec, SecondPlan
    from pinnkit.tape import backward, record_sum_of_squares

    params = init_xavier_normal([2, 5, 5, 1], "sine", seed=9)
    batch = np.random.default_rng(1).uniform(-1, 1, (6, 2))
    tape = Tape()
    w_refs, b_refs = record_mlp_params(tape, params)
    from pinnkit.tape import record_const
    x_ref = record_const(tape, batch)
    seed_rows = np.zeros((6, 2))
    seed_rows[:, 0] = 1.0
    out = mlp_streams(tape, w_refs, b_refs, params.activations, x_ref,
                      stream_specs=(StreamSpec(seed=seed_rows, rows=6),),
                      second_plan=SecondPlan(rows=6, terms=((1.0, 0),)))
    root = record_sum_of_squares(tape, out.second)
    grads = backward(tape, root)
    for ref in list(w_refs) + list(b_refs[:-1]):
        g = grads[ref.id]
        assert np.any(g != 0.0), "gradient vanished for a layer"
