"""Recurrent cells, fully connected layers, and attention pooling.

Sequences are lists of per-step ``(batch, features)`` tensors; the recurrent
stacks walk them step by step on the tape.  Parameters live in ordered dicts
whose insertion order doubles as the init-draw order and the checkpoint
order.

Weight matrices initialize from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)),
biases from zero.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .rng import RngState
from .tensor import Tensor, concat, dropout, matmul, narrow, sigmoid, softmax, tanh


def _weight(rng: RngState, n_in: int, n_out: int) -> Tensor:
    bound = 1.0 / np.sqrt(n_in)
    return Tensor(rng.uniform(-bound, bound, (n_in, n_out)), requires_grad=True)


def _bias(n: int) -> Tensor:
    return Tensor(np.zeros(n), requires_grad=True)


def _vector(rng: RngState, n: int) -> Tensor:
    bound = 1.0 / np.sqrt(n)
    return Tensor(rng.uniform(-bound, bound, (n, 1)), requires_grad=True)


# -- fully connected ----------------------------------------------------------


def init_fc(rng: RngState, n_in: int, n_out: int, prefix: str) -> dict[str, Tensor]:
    return {f"{prefix}.w": _weight(rng, n_in, n_out), f"{prefix}.b": _bias(n_out)}


def fc_forward(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b for x of shape (batch, n_in)."""
    if x.shape[1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeError(f"fc shapes {x.shape} x {w.shape} + {b.shape} do not conform")
    return matmul(x, w) + b


# -- GRU -----------------------------------------------------------------------


def init_gru(rng: RngState, n_in: int, hidden: int, layers: int,
             prefix: str = "gru") -> dict[str, Tensor]:
    """Per layer: w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h (in that order)."""
    params: dict[str, Tensor] = {}
    for layer in range(layers):
        d = n_in if layer == 0 else hidden
        p = f"{prefix}.l{layer}"
        for gate in ("z", "r", "h"):
            params[f"{p}.w_{gate}"] = _weight(rng, d, hidden)
            params[f"{p}.u_{gate}"] = _weight(rng, hidden, hidden)
            params[f"{p}.b_{gate}"] = _bias(hidden)
    return params


def gru_cell(x: Tensor, h_prev: Tensor, params: dict[str, Tensor], prefix: str) -> Tensor:
    """One GRU step:

    z = sigmoid(x W_z + h U_z + b_z)
    r = sigmoid(x W_r + h U_r + b_r)
    h~ = tanh(x W_h + (r*h) U_h + b_h)
    h' = (1-z)*h + z*h~
    """
    z = sigmoid(matmul(x, params[f"{prefix}.w_z"]) + matmul(h_prev, params[f"{prefix}.u_z"])
                + params[f"{prefix}.b_z"])
    r = sigmoid(matmul(x, params[f"{prefix}.w_r"]) + matmul(h_prev, params[f"{prefix}.u_r"])
                + params[f"{prefix}.b_r"])
    cand = tanh(matmul(x, params[f"{prefix}.w_h"]) + matmul(r * h_prev, params[f"{prefix}.u_h"])
                + params[f"{prefix}.b_h"])
    return (1.0 - z) * h_prev + z * cand


def gru_forward(steps: list[Tensor], params: dict[str, Tensor], hidden: int,
                layers: int, drop: float = 0.0, train: bool = False,
                rng: RngState | None = None, prefix: str = "gru") -> list[Tensor]:
    """Run a stacked GRU; returns the top layer's hidden state at every step.

    Inter-layer dropout applies to each non-final layer's outputs in train mode.
    """
    batch = steps[0].shape[0]
    seq = steps
    for layer in range(layers):
        h = Tensor(np.zeros((batch, hidden)))
        outs = []
        for x in seq:
            h = gru_cell(x, h, params, f"{prefix}.l{layer}")
            outs.append(h)
        if layer < layers - 1 and drop > 0.0:
            outs = [dropout(o, drop, rng, train) for o in outs]
        seq = outs
    return seq


# -- LSTM / BiLSTM -------------------------------------------------------------


def init_bilstm(rng: RngState, n_in: int, hidden: int, layers: int,
                prefix: str = "bilstm") -> dict[str, Tensor]:
    """Per layer, per direction (fwd then bwd): fused w (in,4H), u (H,4H), b (4H).

    Gate order inside the fused matrices is input, forget, cell, output.
    Layer l>0 consumes the concat of both directions (2H wide).
    """
    params: dict[str, Tensor] = {}
    for layer in range(layers):
        d = n_in if layer == 0 else 2 * hidden
        for direction in ("fwd", "bwd"):
            p = f"{prefix}.l{layer}.{direction}"
            params[f"{p}.w"] = _weight(rng, d, 4 * hidden)
            params[f"{p}.u"] = _weight(rng, hidden, 4 * hidden)
            params[f"{p}.b"] = _bias(4 * hidden)
    return params


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor,
              params: dict[str, Tensor], prefix: str) -> tuple[Tensor, Tensor]:
    hidden = h_prev.shape[1]
    gates = matmul(x, params[f"{prefix}.w"]) + matmul(h_prev, params[f"{prefix}.u"]) \
        + params[f"{prefix}.b"]
    i = sigmoid(narrow(gates, 1, 0, hidden))
    f = sigmoid(narrow(gates, 1, hidden, hidden))
    g = tanh(narrow(gates, 1, 2 * hidden, hidden))
    o = sigmoid(narrow(gates, 1, 3 * hidden, hidden))
    c = f * c_prev + i * g
    return o * tanh(c), c


def _lstm_scan(steps: list[Tensor], params: dict[str, Tensor], hidden: int,
               prefix: str, reverse: bool) -> list[Tensor]:
    batch = steps[0].shape[0]
    h = Tensor(np.zeros((batch, hidden)))
    c = Tensor(np.zeros((batch, hidden)))
    outs: list[Tensor] = []
    order = reversed(steps) if reverse else steps
    for x in order:
        h, c = lstm_cell(x, h, c, params, prefix)
        outs.append(h)
    if reverse:
        outs.reverse()
    return outs


def bilstm_forward(steps: list[Tensor], params: dict[str, Tensor], hidden: int,
                   layers: int, drop: float = 0.0, train: bool = False,
                   rng: RngState | None = None, prefix: str = "bilstm",
                   ) -> tuple[list[Tensor], list[Tensor]]:
    """Stacked bidirectional LSTM.

    Returns the final layer's (forward, backward) output lists, time-aligned:
    backward[t] is the backward pass's state after consuming steps t..T-1.
    """
    seq = steps
    out_f: list[Tensor] = []
    out_b: list[Tensor] = []
    for layer in range(layers):
        p = f"{prefix}.l{layer}"
        out_f = _lstm_scan(seq, params, hidden, f"{p}.fwd", reverse=False)
        out_b = _lstm_scan(seq, params, hidden, f"{p}.bwd", reverse=True)
        if layer < layers - 1:
            seq = [concat([f, b], axis=1) for f, b in zip(out_f, out_b)]
            if drop > 0.0:
                seq = [dropout(s, drop, rng, train) for s in seq]
    return out_f, out_b


# -- attention pooling ---------------------------------------------------------


def init_attention(rng: RngState, hidden: int, prefix: str = "attn") -> dict[str, Tensor]:
    return {f"{prefix}.w": _vector(rng, hidden)}


def attention_pool(outputs: list[Tensor], w: Tensor) -> tuple[Tensor, Tensor]:
    """Score each step with tanh(O_t) . w, softmax over time, weight-sum rows.

    ``outputs``: T tensors of shape (batch, hidden).  Returns (context, alpha)
    with context (batch, hidden) and alpha (batch, T) summing to 1 per row.
    """
    scores = concat([matmul(tanh(o), w) for o in outputs], axis=1)  # (B, T)
    alpha = softmax(scores, axis=1)
    context = None
    for t, o in enumerate(outputs):
        term = narrow(alpha, 1, t, 1) * o
        context = term if context is None else context + term
    return context, alpha
