"""Dense tensors with reverse-mode automatic differentiation.

A small numpy-backed tape: every operation records its input tensors and a
backward closure, and ``backward()`` on a scalar walks the recorded graph in
reverse topological order. Gradients accumulate into ``.grad`` buffers across
repeated backward calls until they are explicitly zeroed, which keeps
multi-loss graphs explicit.

float32 is the working precision. Constructing a tensor from a float64 array
keeps float64; the gradient-check tests rely on this to run the whole stack
in double precision.
"""

import numpy as np
from scipy.special import erf as _erf

from .errors import ContractError, NumericError, ShapeError

DEFAULT_DTYPE = np.float32

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


class Tensor:
    """A dense float array plus an optional same-shape gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data)

    def backward(self):
        backward(self)

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)

    def __truediv__(self, other):
        return div(self, other)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean_(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, axes):
        return transpose(self, axes)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def sqrt(self):
        return sqrt(self)


def _as_tensor(x, like=None):
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _make(data, parents, vjp):
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _sum_to_shape(g, shape):
    """Reduce a broadcast gradient back to the shape of its source."""
    shape = tuple(shape)
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


# -- elementwise arithmetic ------------------------------------------------


def add(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    data = a.data + b.data

    def vjp(g):
        return _sum_to_shape(g, a.shape), _sum_to_shape(g, b.shape)

    return _make(data, (a, b), vjp)


def sub(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    data = a.data - b.data

    def vjp(g):
        return _sum_to_shape(g, a.shape), _sum_to_shape(-g, b.shape)

    return _make(data, (a, b), vjp)


def mul(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    data = a.data * b.data

    def vjp(g):
        return _sum_to_shape(g * b.data, a.shape), _sum_to_shape(g * a.data, b.shape)

    return _make(data, (a, b), vjp)


def div(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    data = a.data / b.data

    def vjp(g):
        ga = _sum_to_shape(g / b.data, a.shape)
        gb = _sum_to_shape(-g * a.data / (b.data * b.data), b.shape)
        return ga, gb

    return _make(data, (a, b), vjp)


def neg(x):
    x = _as_tensor(x)

    def vjp(g):
        return (-g,)

    return _make(-x.data, (x,), vjp)


def power(x, p):
    """Elementwise x**p for a scalar exponent p."""
    x = _as_tensor(x)
    p = float(p)
    data = x.data ** p

    def vjp(g):
        return (g * p * x.data ** (p - 1.0),)

    return _make(data, (x,), vjp)


def exp(x):
    x = _as_tensor(x)
    data = np.exp(x.data)

    def vjp(g):
        return (g * data,)

    return _make(data, (x,), vjp)


def log(x):
    x = _as_tensor(x)
    data = np.log(x.data)

    def vjp(g):
        return (g / x.data,)

    return _make(data, (x,), vjp)


def sqrt(x):
    """Elementwise square root; the derivative is taken as 0 at x == 0."""
    x = _as_tensor(x)
    data = np.sqrt(x.data)

    def vjp(g):
        denom = 2.0 * data
        safe = np.where(denom == 0.0, 1.0, denom)
        return (np.where(x.data > 0.0, g / safe, 0.0),)

    return _make(data, (x,), vjp)


def relu(x):
    x = _as_tensor(x)
    data = np.maximum(x.data, 0.0)

    def vjp(g):
        return (g * (x.data > 0.0),)

    return _make(data, (x,), vjp)


def sigmoid(x):
    x = _as_tensor(x)
    # split by sign to keep exp() in the underflow-only regime
    pos = x.data >= 0
    e = np.exp(np.where(pos, -x.data, x.data))
    data = np.where(pos, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.data.dtype)

    def vjp(g):
        return (g * data * (1.0 - data),)

    return _make(data, (x,), vjp)


_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(x):
    """Exact (erf-based) GELU."""
    x = _as_tensor(x)
    cdf = 0.5 * (1.0 + _erf(x.data * _INV_SQRT2))
    data = (x.data * cdf).astype(x.data.dtype)

    def vjp(g):
        pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT2PI
        return (g * (cdf + x.data * pdf),)

    return _make(data, (x,), vjp)


def clip(x, lo, hi):
    """Clamp values to [lo, hi]; gradient passes only strictly inside."""
    x = _as_tensor(x)
    data = np.clip(x.data, lo, hi)

    def vjp(g):
        inside = (x.data > lo) & (x.data < hi)
        return (g * inside,)

    return _make(data, (x,), vjp)


# -- reductions and shape ops ------------------------------------------------


def sum_(x, axis=None, keepdims=False):
    x = _as_tensor(x)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, x.shape).astype(x.data.dtype, copy=True),)
        gg = g
        if not keepdims:
            gg = np.expand_dims(gg, axis)
        return (np.broadcast_to(gg, x.shape).copy(),)

    return _make(data, (x,), vjp)


def mean_(x, axis=None, keepdims=False):
    x = _as_tensor(x)
    if axis is None:
        n = x.data.size
    else:
        n = x.shape[axis]
    return mul(sum_(x, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(x, shape):
    x = _as_tensor(x)
    data = x.data.reshape(shape)

    def vjp(g):
        return (g.reshape(x.shape),)

    return _make(data, (x,), vjp)


def transpose(x, axes):
    x = _as_tensor(x)
    axes = tuple(axes)
    data = x.data.transpose(axes)
    inv = tuple(np.argsort(axes))

    def vjp(g):
        return (g.transpose(inv),)

    return _make(data, (x,), vjp)


def concat(tensors, axis):
    tensors = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _make(data, tuple(tensors), vjp)


# -- linear algebra ----------------------------------------------------------


def matmul(a, b):
    """Matrix product with numpy batch broadcasting on leading axes.

    backward accumulates dA = dC @ B^T and dB = A^T @ dC, reduced over any
    broadcast batch dimensions.
    """
    a = _as_tensor(a)
    b = _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs matrices, got shapes {a.shape} x {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    data = a.data @ b.data

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _sum_to_shape(ga, a.shape), _sum_to_shape(gb, b.shape)

    return _make(data, (a, b), vjp)


def softmax_rows(x):
    """Row-wise softmax over the last axis, computed with max subtraction."""
    x = _as_tensor(x)
    if np.isnan(x.data).any():
        raise NumericError("softmax input contains NaN")
    m = x.data.max(axis=-1, keepdims=True)
    e = np.exp(x.data - m)
    s = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        dot = (g * s).sum(axis=-1, keepdims=True)
        return (s * (g - dot),)

    return _make(s, (x,), vjp)


def layer_norm(x, gain, bias, eps=1e-5):
    """Per-row (last axis) normalization to zero mean/unit variance, then affine.

    Uses the population variance with eps inside the square root.
    """
    x = _as_tensor(x)
    gain = _as_tensor(gain, x)
    bias = _as_tensor(bias, x)
    d = x.shape[-1]
    if d < 2:
        raise ShapeError(f"layer_norm needs at least 2 features per row, got {d}")
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(f"layer_norm affine shapes {gain.shape}/{bias.shape} do not match width {d}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = xhat * gain.data + bias.data

    def vjp(g):
        dgain = _sum_to_shape(g * xhat, gain.shape)
        dbias = _sum_to_shape(g, bias.shape)
        dxh = g * gain.data
        m1 = dxh.mean(axis=-1, keepdims=True)
        m2 = (dxh * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (dxh - m1 - xhat * m2)
        return dx, dgain, dbias

    return _make(data, (x, gain, bias), vjp)


def conv1d(x, w, b, stride):
    """Valid (no padding) strided 1D convolution.

    x: (B, T, C_in), w: (K, C_in, C_out), b: (C_out,). Output frames are
    1 + floor((T - K) / stride).
    """
    x = _as_tensor(x)
    w = _as_tensor(w)
    b = _as_tensor(b)
    if x.ndim != 3 or w.ndim != 3:
        raise ShapeError(f"conv1d expects (B,T,C) x (K,C,O), got {x.shape} x {w.shape}")
    bsz, t, cin = x.shape
    k, cw, cout = w.shape
    if cw != cin:
        raise ShapeError(f"conv1d channel mismatch: input {cin} vs kernel {cw}")
    if t < k:
        raise ShapeError(f"conv1d input of {t} samples is shorter than kernel {k}")
    stride = int(stride)
    tp = (t - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x.data, k, axis=1)[:, ::stride]
    # (B, T', C_in, K) -> (B, T', K*C_in), k-major to match w.reshape
    col = np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(bsz, tp, k * cin)
    w2 = w.data.reshape(k * cin, cout)
    data = col @ w2 + b.data

    def vjp(g):
        gw2 = col.reshape(bsz * tp, k * cin).T @ g.reshape(bsz * tp, cout)
        gb = g.sum(axis=(0, 1))
        gcol = (g @ w2.T).reshape(bsz, tp, k, cin)
        gx = np.zeros_like(x.data)
        idx = stride * np.arange(tp)
        for kk in range(k):
            gx[:, idx + kk, :] += gcol[:, :, kk, :]
        return gx, gw2.reshape(w.shape), gb

    return _make(data, (x, w, b), vjp)


def dropout(x, p, rng):
    """Inverted dropout: scales kept values by 1/(1-p). Call only in training."""
    x = _as_tensor(x)
    if p <= 0.0:
        return x
    if p >= 1.0:
        raise ContractError(f"dropout probability must be < 1, got {p}")
    mask = (rng.random(x.shape) >= p).astype(x.data.dtype) / np.asarray(1.0 - p, dtype=x.data.dtype)

    def vjp(g):
        return (g * mask,)

    return _make(x.data * mask, (x,), vjp)


# -- backward pass -----------------------------------------------------------


def backward(loss):
    """Populate .grad on every reachable leaf that requires gradients.

    loss must be a scalar built from recorded operations. Repeated calls
    accumulate into .grad until the buffers are zeroed.
    """
    if not isinstance(loss, Tensor):
        raise ContractError("backward expects a Tensor")
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))

    flow = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = flow.pop(id(node), None)
        if g is None:
            continue
        if node._vjp is None:
            # leaf: accumulate into the persistent buffer
            node.grad = g if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            flow[key] = pg if key not in flow else flow[key] + pg


def zero_grads(params):
    """Clear gradient buffers on an iterable or dict of tensors."""
    values = params.values() if isinstance(params, dict) else params
    for p in values:
        p.zero_grad()
