"""Recurrent cells, BiLSTM structure, and attention pooling."""

import numpy as np
import pytest

from moodpipe.nn import (
    RngState,
    Tensor,
    attention_pool,
    bilstm_forward,
    fc_forward,
    grad_check,
    gru_cell,
    init_attention,
    init_bilstm,
    init_fc,
    init_gru,
    lstm_cell,
)
from moodpipe.nn.tensor import tsum, tanh
from moodpipe.errors import ShapeError


def _zero_gru_params(n_in, hidden, layers=1, prefix="gru"):
    rng = RngState(0)
    params = init_gru(rng, n_in, hidden, layers, prefix)
    for p in params.values():
        p.data[:] = 0.0
    return params


# -- fc ---------------------------------------------------------------------------


def test_fc_identity_weights_pass_input_through():
    x = RngState(1).normal((4, 3))
    out = fc_forward(Tensor(x), Tensor(np.eye(3)), Tensor(np.zeros(3)))
    assert np.allclose(out.data, x)


def test_fc_zero_input_broadcasts_bias():
    b = np.array([0.5, -1.0])
    out = fc_forward(Tensor(np.zeros((3, 4))), Tensor(np.zeros((4, 2))), Tensor(b))
    assert np.allclose(out.data, np.tile(b, (3, 1)))


def test_fc_shape_mismatch():
    with pytest.raises(ShapeError):
        fc_forward(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))),
                   Tensor(np.zeros(2)))


# -- gru cell ----------------------------------------------------------------------


def test_gru_cell_zero_params_ones_hidden():
    # z = sigmoid(0) = 0.5, cand = tanh(0) = 0, h' = 0.5*h = 0.5
    params = _zero_gru_params(2, 3)
    h = gru_cell(Tensor(np.zeros((1, 2))), Tensor(np.ones((1, 3))), params, "gru.l0")
    assert np.allclose(h.data, 0.5)


def test_gru_cell_all_zero_inputs():
    params = _zero_gru_params(2, 3)
    h = gru_cell(Tensor(np.zeros((1, 2))), Tensor(np.zeros((1, 3))), params, "gru.l0")
    assert np.allclose(h.data, 0.0)


@pytest.mark.parametrize("seed", range(3))
def test_gru_cell_gradients(seed):
    rng = RngState(seed + 100)
    params = init_gru(rng, 3, 2, 1)
    x = Tensor(rng.normal((2, 3)))
    h0 = Tensor(rng.normal((2, 2)))

    def f():
        return tsum(tanh(gru_cell(x, h0, params, "gru.l0")))

    assert grad_check(f, params) < 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_lstm_cell_gradients(seed):
    rng = RngState(seed + 200)
    params = init_bilstm(rng, 3, 2, 1)
    x = Tensor(rng.normal((2, 3)))
    h0 = Tensor(rng.normal((2, 2)))
    c0 = Tensor(rng.normal((2, 2)))

    def f():
        h, c = lstm_cell(x, h0, c0, params, "bilstm.l0.fwd")
        return tsum(h * h) + tsum(tanh(c))

    assert grad_check(f, params) < 1e-4


# -- bilstm -----------------------------------------------------------------------


def _tie_directions(params, layers, prefix="bilstm"):
    for layer in range(layers):
        for name in ("w", "u", "b"):
            params[f"{prefix}.l{layer}.bwd.{name}"].data[:] = \
                params[f"{prefix}.l{layer}.fwd.{name}"].data
    return params


def test_bilstm_t1_directions_agree_with_tied_params():
    rng = RngState(4)
    params = _tie_directions(init_bilstm(rng, 4, 3, 2), 2)
    steps = [Tensor(rng.normal((2, 4)))]
    out_f, out_b = bilstm_forward(steps, params, 3, 2)
    assert np.allclose(out_f[0].data, out_b[0].data, atol=1e-14)


def test_bilstm_zero_params_zero_output():
    rng = RngState(5)
    params = init_bilstm(rng, 3, 2, 2)
    for p in params.values():
        p.data[:] = 0.0
    steps = [Tensor(rng.normal((2, 3))) for _ in range(4)]
    out_f, out_b = bilstm_forward(steps, params, 2, 2)
    for f, b in zip(out_f, out_b):
        assert np.allclose(f.data, 0.0)
        assert np.allclose(b.data, 0.0)


def test_bilstm_time_reversal_identity_single_layer():
    # running the reversed sequence with swapped direction parameters
    # reproduces the original outputs with roles and time swapped
    rng = RngState(6)
    params = init_bilstm(rng, 3, 2, 1)
    swapped = init_bilstm(RngState(0), 3, 2, 1)
    for name in ("w", "u", "b"):
        swapped[f"bilstm.l0.fwd.{name}"].data[:] = params[f"bilstm.l0.bwd.{name}"].data
        swapped[f"bilstm.l0.bwd.{name}"].data[:] = params[f"bilstm.l0.fwd.{name}"].data
    steps = [Tensor(rng.normal((2, 3))) for _ in range(5)]
    out_f, out_b = bilstm_forward(steps, params, 2, 1)
    rev_f, rev_b = bilstm_forward(list(reversed(steps)), swapped, 2, 1)
    for t in range(5):
        assert np.allclose(rev_f[t].data, out_b[4 - t].data, atol=1e-14)
        assert np.allclose(rev_b[t].data, out_f[4 - t].data, atol=1e-14)


def test_bilstm_time_reversal_identity_two_layers():
    # with stacked layers the layer-2 input halves swap too, so the swapped
    # parameter set also swaps each direction's input-weight column blocks
    rng = RngState(61)
    hidden = 2
    params = init_bilstm(rng, 3, hidden, 2)
    swapped = init_bilstm(RngState(0), 3, hidden, 2)
    for layer in range(2):
        for name in ("w", "u", "b"):
            a = params[f"bilstm.l{layer}.fwd.{name}"].data
            b = params[f"bilstm.l{layer}.bwd.{name}"].data
            swapped[f"bilstm.l{layer}.fwd.{name}"].data[:] = b
            swapped[f"bilstm.l{layer}.bwd.{name}"].data[:] = a
    for direction in ("fwd", "bwd"):
        w = swapped[f"bilstm.l1.{direction}.w"].data
        w[:] = np.vstack([w[hidden:], w[:hidden]])  # swap [fwd|bwd] input halves
    steps = [Tensor(rng.normal((2, 3))) for _ in range(4)]
    out_f, out_b = bilstm_forward(steps, params, hidden, 2)
    rev_f, rev_b = bilstm_forward(list(reversed(steps)), swapped, hidden, 2)
    for t in range(4):
        assert np.allclose(rev_f[t].data, out_b[3 - t].data, atol=1e-13)
        assert np.allclose(rev_b[t].data, out_f[3 - t].data, atol=1e-13)


@pytest.mark.parametrize("seed", range(2))
def test_bilstm_stack_gradients(seed):
    rng = RngState(seed + 300)
    params = init_bilstm(rng, 3, 2, 2)
    steps = [Tensor(rng.normal((2, 3))) for _ in range(3)]

    def f():
        out_f, out_b = bilstm_forward(steps, params, 2, 2)
        total = None
        for a, b in zip(out_f, out_b):
            term = tsum(tanh(a + b))
            total = term if total is None else total + term
        return total

    assert grad_check(f, params) < 1e-4


# -- attention ---------------------------------------------------------------------


def test_attention_zero_weight_gives_row_mean():
    rng = RngState(8)
    outputs = [Tensor(rng.normal((3, 4))) for _ in range(5)]
    w = Tensor(np.zeros((4, 1)))
    context, alpha = attention_pool(outputs, w)
    assert np.allclose(alpha.data, 1.0 / 5)
    mean = np.mean([o.data for o in outputs], axis=0)
    assert np.allclose(context.data, mean, atol=1e-14)


def test_attention_t1_returns_first_row():
    rng = RngState(9)
    o = Tensor(rng.normal((2, 4)))
    context, alpha = attention_pool([o], Tensor(rng.normal((4, 1))))
    assert np.allclose(alpha.data, 1.0)
    assert np.allclose(context.data, o.data)


def test_attention_weighted_sum_oracle_t4():
    # independent straight-line recomputation of c = tanh(O) w, softmax, sum
    rng = RngState(10)
    outputs = [rng.normal((2, 3)) for _ in range(4)]
    w = rng.normal((3, 1))
    context, alpha = attention_pool([Tensor(o) for o in outputs], Tensor(w))

    scores = np.stack([np.tanh(o) @ w[:, 0] for o in outputs], axis=1)  # (B, T)
    e = np.exp(scores - scores.max(axis=1, keepdims=True))
    a = e / e.sum(axis=1, keepdims=True)
    expected = sum(a[:, t:t + 1] * outputs[t] for t in range(4))
    assert np.allclose(alpha.data, a, atol=1e-12)
    assert np.allclose(context.data, expected, atol=1e-12)


def test_attention_simplex_and_convex_hull_1000_random():
    rng = RngState(11)
    for _ in range(1000):
        t = 1 + rng.randint(6)
        outputs = [rng.normal((1, 3)) for _ in range(t)]
        w = Tensor(rng.normal((3, 1)))
        context, alpha = attention_pool([Tensor(o) for o in outputs], w)
        a = alpha.data[0]
        assert (a >= 0).all()
        assert abs(a.sum() - 1.0) < 1e-12
        stacked = np.vstack([o[0] for o in outputs])
        assert (context.data[0] >= stacked.min(axis=0) - 1e-12).all()
        assert (context.data[0] <= stacked.max(axis=0) + 1e-12).all()


def test_attention_gradients():
    rng = RngState(12)
    params = init_attention(rng, 3)
    outputs = [Tensor(rng.normal((2, 3))) for _ in range(4)]

    def f():
        context, _ = attention_pool(outputs, params["attn.w"])
        return tsum(context * context)

    assert grad_check(f, params) < 1e-4
