"""
Dense float64 tensors with reverse-mode automatic differentiation.

Each operation returns a new Tensor that remembers its parents and a closure
mapping the upstream gradient to gradients for those parents. Calling
backward() orders the graph topologically (the tape) and walks it in reverse.

Broadcasting is limited to what small MLPs need: same shape, a single value
against anything, and a single [1×d] row against a [B×d] batch.
"""

import numpy as np
from scipy.special import expit

from ..errors import ContractError, DimensionError, EmptyInputError, NonFiniteError

LOG_CLAMP = 1e-12
LEAKY_SLOPE = 0.2


class Tensor:
    """A dense array of float64 values that can take part in autodiff."""

    __array_priority__ = 100

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        if self.data.ndim > 2:
            raise DimensionError(f"tensors have at most 2 axes, got shape {self.data.shape}")
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None
        self._op = "leaf"

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data.copy()

    def detach(self):
        """Copy of the values, cut off from the graph."""
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

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

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _check_finite(data, op):
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{op} produced non-finite values")


def _make(data, parents, backward, op):
    """Wrap an operation result and attach it to the graph when needed."""
    _check_finite(data, op)
    out = Tensor(data)
    out._op = op
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _broadcast_shape(a, b, op):
    sa, sb = a.shape, b.shape
    if sa == sb:
        return sa
    if a.size == 1 and len(sa) <= len(sb):
        return sb
    if b.size == 1 and len(sb) <= len(sa):
        return sa
    if len(sa) == 2 and len(sb) == 2 and sa[1] == sb[1]:
        if sa[0] == 1:
            return sb
        if sb[0] == 1:
            return sa
    raise DimensionError(f"{op}: incompatible shapes {sa} and {sb}")


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to an operand's shape."""
    if grad.shape == shape:
        return grad
    if int(np.prod(shape)) == 1:
        return np.full(shape, grad.sum())
    # single row broadcast along the batch axis
    return grad.sum(axis=0, keepdims=True)


def matmul(a, b):
    """Matrix product of [m×k] and [k×n]."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not chain")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return _make(a.data @ b.data, (a, b), backward, "matmul")


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), backward, "mul")


def neg(a):
    a = as_tensor(a)
    return _make(-a.data, (a,), lambda g: (-g,), "neg")


def relu(a):
    a = as_tensor(a)
    mask = (a.data > 0).astype(np.float64)
    return _make(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def leaky_relu(a, alpha=LEAKY_SLOPE):
    a = as_tensor(a)
    slope = np.where(a.data > 0, 1.0, alpha)
    return _make(a.data * slope, (a,), lambda g: (g * slope,), "leaky_relu")


def sigmoid(a):
    a = as_tensor(a)
    out = expit(a.data)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def absolute(a):
    """Elementwise |a|, with subderivative 0 at exactly 0."""
    a = as_tensor(a)
    sign = np.sign(a.data)
    return _make(np.abs(a.data), (a,), lambda g: (g * sign,), "abs")


def log(a):
    """Natural log of inputs clamped to at least LOG_CLAMP."""
    a = as_tensor(a)
    clamped = np.maximum(a.data, LOG_CLAMP)
    inside = (a.data >= LOG_CLAMP).astype(np.float64)

    def backward(g):
        return (g * inside / clamped,)

    return _make(np.log(clamped), (a,), backward, "log")


def clamp(a, lo, hi):
    """Clip values into [lo, hi]; gradient passes only where no clipping happened."""
    a = as_tensor(a)
    inside = ((a.data >= lo) & (a.data <= hi)).astype(np.float64)
    return _make(np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,), "clamp")


ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "relu": relu,
    "leaky_relu": leaky_relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "abs": absolute,
    "log": log,
    "neg": neg,
}


def elementwise(op, *args, **kwargs):
    """Dispatch an elementwise primitive by name."""
    try:
        fn = ELEMENTWISE[op]
    except KeyError:
        raise ContractError(f"unknown elementwise op '{op}'") from None
    return fn(*args, **kwargs)


def mean_over_batch(t):
    """Average a [B×d] batch over axis 0 into a [1×d] row."""
    t = as_tensor(t)
    if t.data.ndim != 2:
        raise DimensionError(f"mean_over_batch expects a [B×d] batch, got shape {t.shape}")
    rows = t.shape[0]
    if rows == 0:
        raise EmptyInputError("mean_over_batch of an empty batch")

    def backward(g):
        return (np.broadcast_to(g / rows, t.shape).copy(),)

    return _make(t.data.mean(axis=0, keepdims=True), (t,), backward, "mean_over_batch")


def reduce_sum(t):
    """Sum of every entry, as a scalar tensor."""
    t = as_tensor(t)
    if t.size == 0:
        raise EmptyInputError("sum of an empty tensor")

    def backward(g):
        return (np.full(t.shape, float(g)),)

    return _make(np.array(t.data.sum()), (t,), backward, "sum")


REDUCTIONS = {
    "mean_over_batch": mean_over_batch,
    "sum": reduce_sum,
}


def reduce(op, t):
    """Dispatch a reduction by name."""
    try:
        fn = REDUCTIONS[op]
    except KeyError:
        raise ContractError(f"unknown reduction '{op}'") from None
    return fn(t)


class Tape:
    """Nodes reachable from a root, in topological order (inputs first)."""

    def __init__(self, root):
        self.nodes = []
        visited = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.nodes.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def backward(loss, grad=None, inputs=None):
    """
    Propagate gradients from loss to every requires_grad leaf.

    Gradients accumulate into existing .grad buffers. A non-scalar root is
    accepted only together with an explicit upstream grad of the same shape.
    Tensors listed in inputs always end up with a .grad buffer, zero when
    disconnected from loss, and receive their gradient even if they are not
    leaves.
    """
    if grad is None:
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        grad = np.ones_like(loss.data)
    else:
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != loss.shape:
            raise DimensionError(f"upstream grad shape {grad.shape} does not match {loss.shape}")

    wanted = {id(t) for t in inputs} if inputs else set()
    for t in inputs or ():
        if t.grad is None:
            t.zero_grad()

    if not loss.requires_grad:
        return

    tape = Tape(loss)
    grads = {id(loss): grad}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None or id(node) in wanted:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + pg
            else:
                grads[id(parent)] = pg
