# core/numcore.py
"""
Dense arrays with reverse-mode automatic differentiation.

A Tensor wraps a numpy array. While a Tape is active (``with Tape() as tape``)
every primitive whose inputs are tracked appends its result to the tape
together with a closure mapping the output adjoint to input adjoints.
Tape.backward replays those closures in reverse recording order, which is a
reverse topological order because a node is always recorded after its inputs.

Without an active tape the same primitives just compute values, so inference
never builds a graph and can share parameters across threads.
"""
import contextvars
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import DistributionError, NonFiniteError, ShapeError, TargetRangeError

logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12

_ACTIVE_TAPE: contextvars.ContextVar = contextvars.ContextVar("active_tape", default=None)

Backward = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """An immutable array value, optionally recorded on a Tape."""

    __slots__ = ("data", "grad", "op", "param_name", "_parents", "_backward", "_tape", "_index")

    def __init__(self, data, op: str = "const", param_name: Optional[str] = None):
        array = np.asarray(data)
        if array.dtype.kind != "f":
            array = array.astype(np.float64)
        if not np.isfinite(array).all():
            raise NonFiniteError(f"non-finite value produced by '{op}'")
        self.data = array
        self.grad: Optional[np.ndarray] = None
        self.op = op
        self.param_name = param_name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Backward] = None
        self._tape: Optional["Tape"] = None
        self._index: Optional[int] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __len__(self) -> int:
        return len(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, key):
        return index(self, key)

    def sum(self, axis=None):
        return reduce_sum(self, axis)

    def mean(self, axis=None):
        return reduce_mean(self, axis)


class Tape:
    """Single-writer record of primitive operations for one training step."""

    def __init__(self):
        self.nodes: List[Tensor] = []
        self._token = None

    def __enter__(self) -> "Tape":
        if self._token is not None:
            raise RuntimeError("tape is already active")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, node: Tensor) -> Tensor:
        node._tape = self
        node._index = len(self.nodes)
        self.nodes.append(node)
        return node

    def watch(self, tensor: Tensor) -> Tensor:
        """Start tracking a leaf so gradients flow back to it."""
        if tensor._tape is not self:
            self.record(tensor)
        return tensor

    def backward(self, loss: Tensor, store=None) -> Dict[str, np.ndarray]:
        """
        Propagate d(loss)/d(node) to every recorded node.

        When a ParameterStore is given, the adjoints of all leaves created
        for a parameter name are summed into a gradient dict aligned with
        the store (exact zeros for parameters the loss never touched),
        which is also written to the store's gradient slots.
        """
        if loss.size != 1:
            raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
        if loss._tape is not self:
            raise ShapeError("loss was not recorded on this tape")

        adjoints: List[Optional[np.ndarray]] = [None] * len(self.nodes)
        adjoints[loss._index] = np.ones_like(loss.data)
        for position in range(loss._index, -1, -1):
            grad = adjoints[position]
            if grad is None:
                continue
            node = self.nodes[position]
            node.grad = grad
            if node._backward is None:
                continue
            for parent, parent_grad in zip(node._parents, node._backward(grad)):
                if parent_grad is None or parent._tape is not self:
                    continue
                assert parent._index < position, "computation graph contains a cycle"
                current = adjoints[parent._index]
                adjoints[parent._index] = parent_grad if current is None else current + parent_grad

        if store is None:
            return {}
        grads = {name: np.zeros_like(array) for name, array in store.items()}
        for node in self.nodes:
            if node.param_name in grads and node.grad is not None:
                grads[node.param_name] = grads[node.param_name] + node.grad
        store.set_grads(grads)
        return grads


def backward(tape: Tape, loss: Tensor, store=None) -> Dict[str, np.ndarray]:
    return tape.backward(loss, store)


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype or np.float64))


def parameter(data, name: str) -> Tensor:
    """A leaf bound to a ParameterStore entry; tracked when a tape is active."""
    leaf = Tensor(data, op="parameter", param_name=name)
    tape = _ACTIVE_TAPE.get()
    if tape is not None:
        tape.record(leaf)
    return leaf


def _result(data: np.ndarray, parents: Tuple[Tensor, ...], backward_fn: Backward, op: str) -> Tensor:
    out = Tensor(data, op=op)
    tape = _ACTIVE_TAPE.get()
    if tape is not None and any(p._tape is tape for p in parents):
        out._parents = parents
        out._backward = backward_fn
        tape.record(out)
    return out


def _pair(a, b) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor(np.asarray(b, dtype=a.dtype))
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor(np.asarray(a, dtype=b.dtype))
    return as_tensor(a), as_tensor(b)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------- Elementwise ---------- #

def add(a, b) -> Tensor:
    a, b = _pair(a, b)

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.data + b.data, (a, b), _backward, "add")


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result(a.data - b.data, (a, b), _backward, "sub")


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)

    def _backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), _backward, "mul")


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    # tanh form stays finite for large |a|
    y = 0.5 * (np.tanh(0.5 * a.data) + 1.0)
    return _result(y, (a,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _result(y, (a,), lambda g: (g * (1.0 - y * y),), "tanh")


def log(a, floor: float = PROBABILITY_FLOOR) -> Tensor:
    """Natural log of max(a, floor); the clamped region has zero gradient."""
    a = as_tensor(a)
    clamped = np.maximum(a.data, floor)

    def _backward(g):
        return (np.where(a.data > floor, g / clamped, 0.0),)

    return _result(np.log(clamped), (a,), _backward, "log")


# ---------- Linear algebra ---------- #

def linear(x, weight, bias=None) -> Tensor:
    """x @ weight.T (+ bias) over the last axis; weight is (out, in)."""
    x, weight = as_tensor(x), as_tensor(weight)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} does not match weight {weight.shape}")
    out = x.data @ weight.data.T
    parents: Tuple[Tensor, ...] = (x, weight)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"linear: bias {bias.shape} does not match weight {weight.shape}")
        out = out + bias.data
        parents = parents + (bias,)

    def _backward(g):
        g2 = g.reshape(-1, weight.shape[0])
        x2 = x.data.reshape(-1, weight.shape[1])
        grads = (g @ weight.data, g2.T @ x2)
        if bias is not None:
            grads = grads + (g2.sum(axis=0),)
        return grads

    return _result(out, parents, _backward, "linear")


# ---------- Reductions ---------- #

def _expand(g: np.ndarray, shape: Tuple[int, ...], axis) -> np.ndarray:
    if axis is not None:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def reduce_sum(a, axis: Optional[int] = None) -> Tensor:
    a = as_tensor(a)
    return _result(a.data.sum(axis=axis), (a,), lambda g: (_expand(g, a.shape, axis),), "sum")


def reduce_mean(a, axis: Optional[int] = None) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    if count == 0:
        raise ShapeError("mean of an empty array")
    return _result(a.data.mean(axis=axis), (a,), lambda g: (_expand(g / count, a.shape, axis),), "mean")


def reduce_max(a, axis: int) -> Tensor:
    """Coordinatewise max; the gradient goes to the first maximal entry."""
    a = as_tensor(a)
    if a.shape[axis] == 0:
        raise ShapeError("max of an empty axis")
    winners = np.expand_dims(np.argmax(a.data, axis=axis), axis)

    def _backward(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, winners, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return _result(np.take_along_axis(a.data, winners, axis=axis).squeeze(axis), (a,), _backward, "max")


def softmax(v, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max-subtracted) along ``axis``."""
    v = as_tensor(v)
    if v.ndim == 0 or v.size == 0:
        raise ShapeError("softmax of an empty array")
    shifted = v.data - v.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _result(y, (v,), _backward, "softmax")


# ---------- Indexing and layout ---------- #

def _is_advanced(key) -> bool:
    keys = key if isinstance(key, tuple) else (key,)
    return any(isinstance(k, (list, np.ndarray)) for k in keys)


def index(a, key) -> Tensor:
    a = as_tensor(a)
    advanced = _is_advanced(key)

    def _backward(g):
        grad = np.zeros_like(a.data)
        if advanced:
            np.add.at(grad, key, g)
        else:
            grad[key] = g
        return (grad,)

    return _result(a.data[key], (a,), _backward, "index")


def take(table, ids) -> Tensor:
    """Row gather: table[ids] for an integer array of any shape."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise TargetRangeError(f"row id out of range [0, {table.shape[0]})")

    def _backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids, g)
        return (grad,)

    return _result(table.data[ids], (table,), _backward, "take")


def pick(a, targets) -> Tensor:
    """a[..., targets] with one target per leading position."""
    a = as_tensor(a)
    targets = np.asarray(targets, dtype=np.int64)
    if a.ndim == 0 or targets.shape != a.shape[:-1]:
        raise ShapeError(f"pick: targets {targets.shape} do not match {a.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= a.shape[-1]):
        raise TargetRangeError(f"target out of range [0, {a.shape[-1]})")
    where = targets[..., None]

    def _backward(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, where, g[..., None], axis=-1)
        return (grad,)

    return _result(np.take_along_axis(a.data, where, axis=-1)[..., 0], (a,), _backward, "pick")


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, _backward, "concat")


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ShapeError("stack of an empty sequence")

    def _backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _result(np.stack([t.data for t in tensors], axis=axis), tensors, _backward, "stack")


def reshape(a, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


# ---------- Losses ---------- #

def _check_simplex(dist: Tensor) -> None:
    tolerance = 1e-6 if dist.dtype == np.float64 else 1e-4
    totals = dist.data.sum(axis=-1)
    if (dist.data < 0).any() or np.abs(totals - 1.0).max() > tolerance:
        raise DistributionError("input is not a probability distribution")


def nll(dist, target) -> Tensor:
    """
    -log(dist[target]), averaged over any leading batch positions.

    The probability is floored at PROBABILITY_FLOOR so a zero-mass target
    gives a large finite loss instead of infinity.
    """
    dist = as_tensor(dist)
    if dist.ndim == 0 or dist.shape[-1] == 0:
        raise ShapeError("nll needs a nonempty distribution")
    targets = np.asarray(target, dtype=np.int64)
    if targets.shape != dist.shape[:-1]:
        raise ShapeError(f"nll: target shape {targets.shape} does not match {dist.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= dist.shape[-1]):
        raise TargetRangeError(f"target out of range [0, {dist.shape[-1]})")
    _check_simplex(dist)
    return reduce_mean(neg(log(pick(dist, targets))))


