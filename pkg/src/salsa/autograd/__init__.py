from salsa.autograd.functional import cross_entropy, dropout, l2_normalize, layer_norm, log_softmax, masked_mean, softmax
from salsa.autograd.gradcheck import gradcheck, gradcheck_store
from salsa.autograd.rng import Rng
from salsa.autograd.tensor import (
    Tensor,
    elementwise,
    expand,
    gather,
    masked_fill,
    matmul,
    no_grad,
    reduce,
    relu,
    sigmoid,
    softplus,
    stack,
    tanh,
)

__all__ = [
    "Rng",
    "Tensor",
    "cross_entropy",
    "dropout",
    "elementwise",
    "expand",
    "gather",
    "gradcheck",
    "gradcheck_store",
    "l2_normalize",
    "layer_norm",
    "log_softmax",
    "masked_fill",
    "masked_mean",
    "matmul",
    "no_grad",
    "reduce",
    "relu",
    "sigmoid",
    "softmax",
    "softplus",
    "stack",
    "tanh",
]
