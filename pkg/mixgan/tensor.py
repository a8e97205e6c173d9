"""Dense float64 tensors with reverse-mode automatic differentiation.

Every tensor produced by an operation below is also a node of the tape: it
keeps references to its inputs, the operation that produced it and a
gradient accumulator of its own shape. :func:`backward` walks the nodes
reachable from a scalar loss in reverse topological order, visiting each
node exactly once.

Only what two-layer perceptrons need is provided: matrix products, bias
addition, elementwise arithmetic, ReLU, sigmoid, clamped logarithms and
reductions to a scalar. Broadcasting is limited to a bias row added to a
batch and python scalars combined with tensors.
"""
import numpy as np

from mixgan.common import ContractError, DimensionError

DEFAULT_LOG_FLOOR = 1e-12
_SIGMOID_LOW = np.nextafter(0.0, 1.0)
_SIGMOID_HIGH = np.nextafter(1.0, 0.0)


class Tensor(object):
    """A dense n-dimensional array of 64-bit floats and its tape node."""

    def __init__(self, data, requires_grad=False, name=None):
        """Create a leaf tensor.

        :param data: array-like, copied and converted to float64.
        :param requires_grad: bool, whether gradients flow into this tensor.
        :param name: optional str, used in diagnostics and checkpoints.
        """
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.grad = None
        self.op = 'leaf'
        self._parents = ()
        self._backward = None

    @classmethod
    def _from_op(cls, data, op, parents, backward):
        out = cls(data)
        out.op = op
        live = tuple(p for p in parents if p.requires_grad)
        if live:
            out.requires_grad = True
            out._parents = live
            out._backward = backward
        return out

    def __repr__(self):
        return 'Tensor(shape={}, op={}, requires_grad={})'.format(
            self.shape, self.op, self.requires_grad)

    @property
    def shape(self):
        """Shape of the tensor as a tuple."""
        return self.data.shape

    @property
    def ndim(self):
        """Number of dimensions."""
        return self.data.ndim

    @property
    def size(self):
        """Number of elements."""
        return self.data.size

    @property
    def values(self):
        """Row-major flat copy of the elements."""
        return self.data.ravel().copy()

    def item(self):
        """Return the value of a single-element tensor as a python float."""
        if self.size != 1:
            raise ContractError(
                'item() requires a single element, shape is {}.'.format(
                    self.shape))
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        """Return a copy of the underlying array."""
        return self.data.copy()

    def zero_grad(self):
        """Reset the gradient accumulator."""
        self.grad = np.zeros_like(self.data)

    def __matmul__(self, other):
        return matmul(self, other)

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


def as_tensor(x):
    """Wrap a python number or array as a constant tensor."""
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _accumulate(node, grad):
    if node.grad is None:
        node.grad = np.zeros_like(node.data)
    node.grad += grad


def _reduce_to(grad, shape):
    # scalar operands of an elementwise op receive the summed gradient
    if grad.shape == shape:
        return grad
    return np.sum(grad).reshape(shape)


def _check_elementwise(a, b, op):
    if a.shape != b.shape and a.shape != () and b.shape != ():
        raise DimensionError(
            'Cannot apply {} to shapes {} and {}.'.format(op, a.shape, b.shape))


def matmul(a, b):
    """Matrix product of an [m x k] and a [k x n] tensor.

    :raises DimensionError: if either operand is not a matrix or the inner
        dimensions disagree.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(
            'Cannot multiply matrices of shapes {} and {}.'.format(
                a.shape, b.shape))

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    return Tensor._from_op(a.data @ b.data, 'matmul', (a, b), backward)


def add_bias(a, b):
    """Add a bias vector [n] to every row of a batch [m x n]."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 1 or a.shape[1] != b.shape[0]:
        raise DimensionError(
            'Cannot add bias of shape {} to shape {}.'.format(
                b.shape, a.shape))

    def backward(g):
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, g.sum(axis=0))

    return Tensor._from_op(a.data + b.data, 'add_bias', (a, b), backward)


def add(a, b):
    """Elementwise sum."""
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise(a, b, 'add')

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _reduce_to(g, a.shape))
        if b.requires_grad:
            _accumulate(b, _reduce_to(g, b.shape))

    return Tensor._from_op(a.data + b.data, 'add', (a, b), backward)


def sub(a, b):
    """Elementwise difference."""
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise(a, b, 'sub')

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _reduce_to(g, a.shape))
        if b.requires_grad:
            _accumulate(b, _reduce_to(-g, b.shape))

    return Tensor._from_op(a.data - b.data, 'sub', (a, b), backward)


def mul(a, b):
    """Elementwise product."""
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise(a, b, 'mul')

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _reduce_to(g * b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _reduce_to(g * a.data, b.shape))

    return Tensor._from_op(a.data * b.data, 'mul', (a, b), backward)


def neg(a):
    """Elementwise negation."""
    a = as_tensor(a)

    def backward(g):
        _accumulate(a, -g)

    return Tensor._from_op(-a.data, 'neg', (a,), backward)


def relu(a):
    """Elementwise max(0, a); the derivative at exactly 0 is 0."""
    a = as_tensor(a)
    mask = a.data > 0

    def backward(g):
        _accumulate(a, g * mask)

    return Tensor._from_op(
        np.where(mask, a.data, 0.0), 'relu', (a,), backward)


def _stable_sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    # saturated values stay strictly inside (0, 1)
    return np.clip(out, _SIGMOID_LOW, _SIGMOID_HIGH)


def sigmoid(a):
    """Elementwise logistic function, strictly within (0, 1)."""
    a = as_tensor(a)
    s = _stable_sigmoid(a.data)

    def backward(g):
        _accumulate(a, g * s * (1.0 - s))

    return Tensor._from_op(s, 'sigmoid', (a,), backward)


def log_clamped(a, floor=DEFAULT_LOG_FLOOR):
    """Elementwise ln(max(a, floor)).

    The gradient is 1/max(a, floor) where a >= floor and 0 below the floor.
    """
    if floor <= 0:
        raise ContractError('Log floor must be positive, got {}.'.format(floor))
    a = as_tensor(a)
    clamped = np.maximum(a.data, floor)
    live = a.data >= floor

    def backward(g):
        _accumulate(a, np.where(live, g / clamped, 0.0))

    return Tensor._from_op(np.log(clamped), 'log', (a,), backward)


def mean(a):
    """Mean over all elements, as a scalar tensor."""
    a = as_tensor(a)
    n = a.size

    def backward(g):
        _accumulate(a, np.full(a.shape, g / n))

    return Tensor._from_op(np.mean(a.data), 'mean', (a,), backward)


def sum(a):  # noqa: A001
    """Sum over all elements, as a scalar tensor."""
    a = as_tensor(a)

    def backward(g):
        _accumulate(a, np.full(a.shape, g))

    return Tensor._from_op(np.sum(a.data), 'sum', (a,), backward)


def _topological_order(root):
    """Nodes reachable from root, each after all of its inputs."""
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss, parameters=None):
    """Back-propagate from a scalar loss.

    Gradient accumulators of every node reachable from `loss` are reset
    before propagation, so repeated calls on the same graph give identical
    results.

    :param loss: scalar `Tensor` (shape ()).
    :param parameters: optional iterable of leaf tensors; any that are not
        reachable from `loss` have their gradient set to zero.

    :returns: list of gradient arrays for `parameters` (empty if None).
    :raises ContractError: if `loss` is not a scalar.
    """
    if loss.shape != ():
        raise ContractError(
            'backward() requires a scalar loss, got shape {}.'.format(
                loss.shape))
    order = _topological_order(loss)
    for node in order:
        node.zero_grad()
    loss.grad = np.ones(())
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)

    if parameters is None:
        return []
    reached = set(id(n) for n in order)
    grads = []
    for p in parameters:
        if id(p) not in reached:
            p.zero_grad()
        grads.append(p.grad)
    return grads
