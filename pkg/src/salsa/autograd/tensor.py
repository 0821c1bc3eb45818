"""Dense float64 tensors with reverse-mode automatic differentiation.

Each operation returns a new :class:`Tensor`. When any input requires a gradient and gradient
recording is enabled, the result keeps its parents and a backward rule mapping the output
gradient to one gradient per parent. :meth:`Tensor.backward` walks the graph in reverse
topological order and accumulates into the ``grad`` buffers of leaf tensors.

Broadcasting is deliberately narrow: operands must have equal shapes, or the smaller operand's
shape must be a trailing suffix of the larger one (bias add), or it must hold a single element
(scalar scale). Anything else raises :class:`~salsa.exceptions.DimensionError`.
"""
import logging
import threading
from collections.abc import Callable, Sequence
from contextlib import contextmanager

import numpy as np
from scipy.special import expit

from salsa.exceptions import ContractError, DimensionError, NumericDomainError

logger = logging.getLogger(__name__)

_state = threading.local()

BackwardRule = Callable[[np.ndarray], tuple]


def is_grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    """Suspend graph recording in the current thread."""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    __slots__ = ("_backward", "_parents", "data", "grad", "name", "requires_grad")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardRule | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def backward(self, retain_graph: bool = False) -> None:
        """Populate ``grad`` on every leaf reachable from this scalar.

        Gradients accumulate, so callers zero them between optimisation steps. The graph is
        released afterwards unless ``retain_graph`` is set.

        :raises ContractError:
            If the tensor holds more than one element.
        """
        if self.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            return

        order = _topological_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.is_leaf:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g), strict=True):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

        if not retain_graph:
            for node in order:
                if not node.is_leaf:
                    node._parents = ()
                    node._backward = _released

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return reduce_mean(self, axis, keepdims)

    def max(self, axis=None, keepdims: bool = False):
        return reduce_max(self, axis, keepdims)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple | list) else shape)

    def transpose(self, *axes):
        return transpose(self, axes[0] if len(axes) == 1 and isinstance(axes[0], tuple | list) else axes)


def _released(_g):
    raise ContractError("graph already released by an earlier backward; pass retain_graph=True to reuse it")


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def make_result(data: np.ndarray, parents: Sequence[Tensor], backward: BackwardRule) -> Tensor:
    """Wrap ``data`` and record ``backward`` when any parent needs a gradient."""
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _broadcast_check(a: tuple, b: tuple) -> None:
    if a == b:
        return
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    if int(np.prod(small)) == 1:
        return
    if large[len(large) - len(small):] == small:
        return
    raise DimensionError(f"shapes {a} and {b} are not broadcastable (only trailing-suffix and scalar broadcasting is supported)")


def unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after a trailing-suffix or scalar broadcast."""
    if g.shape == shape:
        return g
    if int(np.prod(shape)) == 1:
        return np.full(shape, g.sum())
    lead = g.ndim - len(shape)
    return g.sum(axis=tuple(range(lead))) if lead else g


# -- binary elementwise --------------------------------------------------------------------------

def add(x, y) -> Tensor:
    x, y = as_tensor(x), as_tensor(y)
    _broadcast_check(x.shape, y.shape)
    return make_result(x.data + y.data, (x, y), lambda g: (unbroadcast(g, x.shape), unbroadcast(g, y.shape)))


def sub(x, y) -> Tensor:
    x, y = as_tensor(x), as_tensor(y)
    _broadcast_check(x.shape, y.shape)
    return make_result(x.data - y.data, (x, y), lambda g: (unbroadcast(g, x.shape), unbroadcast(-g, y.shape)))


def mul(x, y) -> Tensor:
    x, y = as_tensor(x), as_tensor(y)
    _broadcast_check(x.shape, y.shape)
    return make_result(
        x.data * y.data, (x, y), lambda g: (unbroadcast(g * y.data, x.shape), unbroadcast(g * x.data, y.shape))
    )


def div(x, y) -> Tensor:
    x, y = as_tensor(x), as_tensor(y)
    _broadcast_check(x.shape, y.shape)
    if np.any(y.data == 0.0):
        raise NumericDomainError(f"division by zero in tensor of shape {y.shape}")
    out = x.data / y.data
    return make_result(
        out, (x, y), lambda g: (unbroadcast(g / y.data, x.shape), unbroadcast(-g * out / y.data, y.shape))
    )


# -- unary elementwise ---------------------------------------------------------------------------

def neg(x: Tensor) -> Tensor:
    return make_result(-x.data, (x,), lambda g: (-g,))


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)
    return make_result(x.data * c, (x,), lambda g: (g * c,))


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return make_result(out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0.0):
        raise NumericDomainError(f"log of non-positive value in tensor of shape {x.shape}")
    return make_result(np.log(x.data), (x,), lambda g: (g / x.data,))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return make_result(out, (x,), lambda g: (g * (1.0 - out * out),))


def sigmoid(x: Tensor) -> Tensor:
    out = expit(x.data)
    return make_result(out, (x,), lambda g: (g * out * (1.0 - out),))


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0.0
    return make_result(np.where(positive, x.data, 0.0), (x,), lambda g: (g * positive,))


def softplus(x: Tensor) -> Tensor:
    """``log(1 + exp(x))`` evaluated without overflow."""
    return make_result(np.logaddexp(0.0, x.data), (x,), lambda g: (g * expit(x.data),))


_UNARY = {"exp": exp, "log": log, "tanh": tanh, "sigmoid": sigmoid, "relu": relu, "neg": neg, "softplus": softplus}
_BINARY = {"add": add, "sub": sub, "mul": mul, "div": div}


def elementwise(op: str, x, y=None) -> Tensor:
    """Dispatch an elementwise operation by tag.

    ``scale`` takes a Python number as ``y``; binary tags take a second tensor.
    """
    x = as_tensor(x)
    if op == "scale":
        return scale(x, y)
    if op in _UNARY:
        return _UNARY[op](x)
    if op in _BINARY:
        if y is None:
            raise ContractError(f"elementwise '{op}' needs two operands")
        return _BINARY[op](x, y)
    raise ContractError(f"unknown elementwise op '{op}'")


# -- linear algebra ------------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes.

    ``a`` may carry leading batch axes; ``b`` is either a plain matrix shared across the batch
    or has exactly the same batch axes as ``a``.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise DimensionError(f"matmul batch dimensions disagree: {a.shape} @ {b.shape}")

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        if b.ndim == 2:
            gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.swapaxes(a.data, -1, -2) @ g
        return ga, gb

    return make_result(a.data @ b.data, (a, b), backward)


# -- reductions ----------------------------------------------------------------------------------

def _normalize_axis(axis, ndim: int):
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise DimensionError(f"axis {ax} out of range for {ndim}-d tensor")
        out.append(ax % ndim)
    return tuple(sorted(out))


def _expand_reduced(g: np.ndarray, axes: tuple, shape: tuple, keepdims: bool) -> np.ndarray:
    if not keepdims:
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def reduce_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axis(axis, x.ndim)
    return make_result(
        x.data.sum(axis=axes, keepdims=keepdims), (x,), lambda g: (_expand_reduced(g, axes, x.shape, keepdims).copy(),)
    )


def reduce_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axis(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return make_result(
        x.data.mean(axis=axes, keepdims=keepdims),
        (x,),
        lambda g: (_expand_reduced(g, axes, x.shape, keepdims) / count,),
    )


def reduce_max(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    """Maximum along one axis (or all); the gradient goes to the first maximal entry only."""
    if axis is None:
        flat_index = int(np.argmax(x.data))

        def backward_all(g):
            out = np.zeros(x.size)
            out[flat_index] = float(np.sum(g))
            return (out.reshape(x.shape),)

        value = x.data.reshape(-1)[flat_index]
        return make_result(np.full((1,) * x.ndim, value) if keepdims else np.array(value), (x,), backward_all)

    (ax,) = _normalize_axis(axis, x.ndim)
    index = np.argmax(x.data, axis=ax, keepdims=True)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, ax)
        out = np.zeros_like(x.data)
        np.put_along_axis(out, index, g, axis=ax)
        return (out,)

    out = np.take_along_axis(x.data, index, axis=ax)
    return make_result(out if keepdims else np.squeeze(out, axis=ax), (x,), backward)


_REDUCTIONS = {"sum": reduce_sum, "mean": reduce_mean, "max": reduce_max}


def reduce(op: str, x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if op not in _REDUCTIONS:
        raise ContractError(f"unknown reduction '{op}'")
    return _REDUCTIONS[op](x, axis, keepdims)


# -- shape plumbing ------------------------------------------------------------------------------

def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    return make_result(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes=None) -> Tensor:
    axes = tuple(range(x.ndim))[::-1] if not axes else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, int | slice) or p is None or p is Ellipsis for p in parts)


def getitem(x: Tensor, index) -> Tensor:
    basic = _is_basic_index(index)

    def backward(g):
        out = np.zeros_like(x.data)
        if basic:
            out[index] = g
        else:
            np.add.at(out, index, g)
        return (out,)

    return make_result(x.data[index], (x,), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise DimensionError(f"stack needs equal shapes, got {sorted(shapes)}")
    out = np.stack([t.data for t in tensors], axis=axis)
    ax = axis % out.ndim
    return make_result(out, tensors, lambda g: tuple(np.take(g, i, axis=ax) for i in range(len(tensors))))


def expand(x: Tensor, axis: int, n: int) -> Tensor:
    """Insert a new axis at ``axis`` and repeat ``x`` ``n`` times along it."""
    out = np.repeat(np.expand_dims(x.data, axis), n, axis=axis)
    ax = axis % out.ndim
    return make_result(out, (x,), lambda g: (g.sum(axis=ax),))


def gather(embedding: Tensor, ids) -> Tensor:
    """Rows of ``embedding`` selected by integer ``ids`` of any shape."""
    ids = np.asarray(ids, dtype=np.int64)
    vocab = embedding.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise IndexError(f"token id out of range [0, {vocab}): min {ids.min()}, max {ids.max()}")

    def backward(g):
        out = np.zeros_like(embedding.data)
        np.add.at(out, ids.reshape(-1), g.reshape(-1, embedding.shape[1]))
        return (out,)

    return make_result(embedding.data[ids], (embedding,), backward)


def masked_fill(x: Tensor, mask: np.ndarray, value: float) -> Tensor:
    """Replace entries where the constant boolean ``mask`` is set (numpy broadcasting applies)."""
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    return make_result(np.where(mask, value, x.data), (x,), lambda g: (np.where(mask, 0.0, g),))


__all__ = [
    "Tensor",
    "add",
    "as_tensor",
    "div",
    "elementwise",
    "exp",
    "expand",
    "gather",
    "getitem",
    "is_grad_enabled",
    "log",
    "make_result",
    "masked_fill",
    "matmul",
    "mul",
    "neg",
    "no_grad",
    "reduce",
    "reduce_max",
    "reduce_mean",
    "reduce_sum",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "softplus",
    "stack",
    "sub",
    "tanh",
    "transpose",
    "unbroadcast",
]
