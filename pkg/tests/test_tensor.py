"""Tensor ops, losses, optimizer, and the gradient checker itself."""

import numpy as np
import pytest

from moodpipe.errors import ShapeError
from moodpipe.nn import Adam, RngState, Tensor, cross_entropy, grad_check, softmax
from moodpipe.nn.tensor import (
    bmm,
    clip,
    concat,
    dropout,
    matmul,
    narrow,
    relu,
    reshape,
    swapaxes,
    tanh,
    tsum,
)


def test_matmul_against_triple_loop_oracle():
    rng = RngState(1)
    a = rng.normal((2, 3))
    b = rng.normal((3, 2))
    expected = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(3):
                expected[i, j] += a[i, k] * b[k, j]
    got = matmul(Tensor(a), Tensor(b)).data
    assert np.allclose(got, expected, atol=1e-15)


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


def test_backward_requires_scalar():
    t = Tensor(np.zeros(3), requires_grad=True)
    with pytest.raises(ShapeError):
        (t * 2.0).backward()


@pytest.mark.parametrize("seed", range(3))
def test_elementwise_op_gradients(seed):
    rng = RngState(seed)
    params = {
        "a": Tensor(rng.normal((3, 4)), requires_grad=True),
        "b": Tensor(rng.normal((3, 4)), requires_grad=True),
        "c": Tensor(rng.normal((4,)), requires_grad=True),
    }

    def f():
        x = params["a"] * params["b"] + params["c"]         # broadcast add
        x = tanh(x) + relu(params["a"] - 0.3)
        x = x / (params["b"] * params["b"] + 1.5)
        return tsum(x * x)

    assert grad_check(f, params) < 1e-6


def test_reshape_narrow_concat_swapaxes_gradients():
    rng = RngState(7)
    params = {"a": Tensor(rng.normal((2, 6)), requires_grad=True)}

    def f():
        x = reshape(params["a"], (3, 4))
        left = narrow(x, 1, 0, 2)
        right = narrow(x, 1, 2, 2)
        y = concat([left * 2.0, right], axis=1)
        z = swapaxes(reshape(y, (3, 2, 2)), 1, 2)
        return tsum(tanh(z))

    assert grad_check(f, params) < 1e-6


def test_bmm_matches_loop_and_gradients():
    rng = RngState(9)
    a = rng.normal((4, 2, 3))
    b = rng.normal((4, 3, 2))
    got = bmm(Tensor(a), Tensor(b)).data
    for i in range(4):
        assert np.allclose(got[i], a[i] @ b[i], atol=1e-14)
    params = {"a": Tensor(a, requires_grad=True), "b": Tensor(b, requires_grad=True)}

    def f():
        return tsum(tanh(bmm(params["a"], params["b"])))

    assert grad_check(f, params) < 1e-6


# -- softmax --------------------------------------------------------------------


def test_softmax_half_half():
    out = softmax(Tensor(np.array([0.0, 0.0]))).data
    assert np.allclose(out, [0.5, 0.5])


def test_softmax_overflow_safe():
    out = softmax(Tensor(np.array([1000.0, 0.0]))).data
    assert np.isfinite(out).all()
    assert out[0] > 1 - 1e-12 and out[1] < 1e-12


def test_softmax_against_direct_oracle():
    rng = RngState(5)
    x = rng.normal((6, 4))
    expected = np.exp(x) / np.exp(x).sum(axis=1, keepdims=True)
    got = softmax(Tensor(x), axis=1).data
    assert np.allclose(got, expected, atol=1e-12)
    assert np.allclose(got.sum(axis=1), 1.0, atol=1e-12)
    assert ((got >= 0) & (got <= 1)).all()


# -- cross entropy ----------------------------------------------------------------


def test_cross_entropy_at_half_is_ln2():
    loss = cross_entropy(Tensor(np.array([0.5])), np.array([1.0]))
    assert abs(loss.item() - np.log(2.0)) < 1e-12


def test_cross_entropy_confident_correct_goes_to_zero():
    loss = cross_entropy(Tensor(np.array([1.0 - 1e-9])), np.array([1.0]))
    assert loss.item() < 1e-6


def test_cross_entropy_hand_computed_batch():
    # -(1/2)(ln 0.9 + ln 0.8) = 0.16425196...
    loss = cross_entropy(Tensor(np.array([0.9, 0.2])), np.array([1.0, 0.0]))
    expected = -0.5 * (np.log(0.9) + np.log(0.8))
    assert abs(loss.item() - expected) < 1e-12
    assert abs(loss.item() - 0.164252) < 1e-6


def test_cross_entropy_nonnegative_and_clamped():
    rng = RngState(3)
    for _ in range(50):
        p = rng.uniform(0.0, 1.0, (8,))
        y = (rng.uniform(0.0, 1.0, (8,)) > 0.5).astype(float)
        assert cross_entropy(Tensor(p), y).item() >= 0.0
    # exact 0/1 probabilities survive via clamping
    loss = cross_entropy(Tensor(np.array([0.0, 1.0])), np.array([0.0, 1.0]))
    assert np.isfinite(loss.item())


def test_clip_gradient_masks_outside():
    p = {"x": Tensor(np.array([-2.0, 0.5, 2.0]), requires_grad=True)}
    out = tsum(clip(p["x"], 0.0, 1.0))
    out.backward()
    assert np.allclose(p["x"].grad, [0.0, 1.0, 0.0])


# -- dropout ----------------------------------------------------------------------


def test_dropout_eval_is_identity():
    x = Tensor(np.ones((10, 10)))
    out = dropout(x, 0.5, None, train=False)
    assert out is x


def test_dropout_train_zeroes_half_and_rescales():
    rng = RngState(11)
    x = Tensor(np.ones((200, 200)))
    out = dropout(x, 0.5, rng, train=True).data
    zeroed = (out == 0.0).mean()
    assert abs(zeroed - 0.5) < 0.02          # binomial noise
    assert np.allclose(out[out != 0.0], 2.0)  # inverted scaling 1/(1-0.5)


# -- Adam --------------------------------------------------------------------------


def test_adam_zero_gradient_no_change():
    p = {"w": Tensor(np.array([1.0, -2.0]), requires_grad=True)}
    opt = Adam(p)
    p["w"].grad = np.zeros(2)
    opt.step()
    assert np.allclose(p["w"].data, [1.0, -2.0])


def test_adam_first_step_scalar():
    # p=0, g=1: bias-corrected first step is -lr / (1 + eps) ~ -lr
    p = {"w": Tensor(np.array([0.0]), requires_grad=True)}
    opt = Adam(p, lr=1e-3)
    p["w"].grad = np.array([1.0])
    opt.step()
    assert abs(p["w"].data[0] + 1e-3) < 1e-9


def test_adam_constant_gradient_limit_is_lr_sign():
    # with constant gradient g, the bias-corrected step settles at lr*sign(g)
    p = {"w": Tensor(np.array([0.0]), requires_grad=True)}
    opt = Adam(p, lr=1e-3)
    for _ in range(500):
        p["w"].grad = np.array([2.5])
        opt.step()
    before = p["w"].data[0]
    p["w"].grad = np.array([2.5])
    opt.step()
    assert abs((before - p["w"].data[0]) - 1e-3) < 1e-6


# -- the checker itself -------------------------------------------------------------


def test_grad_check_on_square():
    p = {"x": Tensor(np.array([3.0]), requires_grad=True)}

    def f():
        return tsum(p["x"] * p["x"])

    assert grad_check(f, p) < 1e-8
