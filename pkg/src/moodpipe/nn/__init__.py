"""Minimal dense-tensor neural toolkit with reverse-mode gradients."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .layers import (
    attention_pool,
    bilstm_forward,
    fc_forward,
    gru_cell,
    gru_forward,
    init_attention,
    init_bilstm,
    init_fc,
    init_gru,
    lstm_cell,
)
from .optim import Adam
from .rng import RngState
from .tensor import (
    Tensor,
    clip,
    concat,
    cross_entropy,
    dropout,
    matmul,
    narrow,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    tanh,
    transpose,
)

__all__ = [
    "Adam", "RngState", "Tensor", "attention_pool", "bilstm_forward", "clip",
    "concat", "cross_entropy", "dropout", "fc_forward", "grad_check", "gru_cell",
    "gru_forward", "init_attention", "init_bilstm", "init_fc", "init_gru",
    "load_checkpoint", "lstm_cell", "matmul", "narrow", "relu", "reshape",
    "save_checkpoint", "sigmoid", "softmax", "sqrt", "tanh", "transpose",
]
