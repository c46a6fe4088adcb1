"""Dense tensors with reverse-mode automatic differentiation.

All storage is float64 (float32 is permitted by the contract but 64-bit
keeps the finite-difference checks sharp and determinism trivial).
Every op records a closure on the implicit tape; backward() walks the
graph in reverse topological order and accumulates into .grad.
"""

import numpy as np

from . import kernels
from .errors import GraphError, LabelError, NumericError, ShapeError

DTYPE = np.float64


def row_stable_mm(a, b):
    """Matrix product whose row i is bit-identical no matter how many
    rows a has (BLAS gemm blocks over rows; einsum does not). Forward
    passes use this so causal prefix invariance holds exactly."""
    return np.einsum("ij,jk->ik", a, b)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = None
        self._prev = ()

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's .grad.

        self must be a scalar produced by recorded ops.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {self.data.shape}")
        if self._backward is None and not self._prev:
            raise GraphError("backward called on a node detached from any recorded graph")
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._prev:
                if id(p) not in visited:
                    stack.append((p, False))
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            node._accumulate(g)
            if node._backward is not None:
                for parent, pg in node._backward(g):
                    if not parent.requires_grad and parent._backward is None \
                            and not parent._prev:
                        continue
                    if id(parent) in grads:
                        grads[id(parent)] += pg
                    else:
                        grads[id(parent)] = pg


class Parameter(Tensor):
    """A named, learnable tensor. Frozen parameters never get gradients."""

    __slots__ = ("name", "trainable")

    def __init__(self, data, name="", trainable=True):
        super().__init__(data, requires_grad=trainable)
        self.name = name
        self.trainable = trainable
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def freeze(self):
        self.trainable = False
        self.requires_grad = False


def _node(data, parents, backward):
    out = Tensor(data)
    live = any(p.requires_grad or p._prev or p._backward is not None for p in parents)
    if live:
        out._prev = tuple(parents)
        out._backward = backward
    return out


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# elementwise and linear algebra


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data

    def bw(g):
        return [(a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(g, b.data.shape))]

    return _node(out, [a, b], bw)


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g):
        return [(a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(-g, b.data.shape))]

    return _node(a.data - b.data, [a, b], bw)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g):
        return [(a, _unbroadcast(g * b.data, a.data.shape)),
                (b, _unbroadcast(g * a.data, b.data.shape))]

    return _node(a.data * b.data, [a, b], bw)


def scale(a, s):
    a = _as_tensor(a)
    s = float(s)
    return _node(a.data * s, [a], lambda g: [(a, g * s)])


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shapes incompatible: {a.data.shape} x {b.data.shape}")

    def bw(g):
        return [(a, g @ b.data.T), (b, a.data.T @ g)]

    return _node(row_stable_mm(a.data, b.data), [a, b], bw)


def transpose(a):
    a = _as_tensor(a)
    return _node(a.data.T, [a], lambda g: [(a, g.T)])


def concat_cols(parts):
    parts = [_as_tensor(p) for p in parts]
    widths = [p.data.shape[1] for p in parts]
    offs = np.cumsum([0] + widths)

    def bw(g):
        return [(p, g[:, offs[i]:offs[i + 1]]) for i, p in enumerate(parts)]

    return _node(np.concatenate([p.data for p in parts], axis=1), parts, bw)


def gather_rows(a, indices):
    """out[i] = a[indices[i]]; backward scatter-adds."""
    a = _as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)

    def bw(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, idx, g)
        return [(a, ga)]

    return _node(a.data[idx], [a], bw)


def slice_cols(a, start, stop):
    a = _as_tensor(a)

    def bw(g):
        ga = np.zeros_like(a.data)
        ga[:, start:stop] = g
        return [(a, ga)]

    return _node(a.data[:, start:stop], [a], bw)


def mean_all(a):
    a = _as_tensor(a)
    n = a.data.size
    return _node(np.asarray(a.data.mean()), [a],
                 lambda g: [(a, np.full_like(a.data, float(g) / n))])


def sum_all(a):
    a = _as_tensor(a)
    return _node(np.asarray(a.data.sum()), [a],
                 lambda g: [(a, np.full_like(a.data, float(g)))])


# ---------------------------------------------------------------------------
# nonlinearities


def relu(a):
    a = _as_tensor(a)
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0.0), [a], lambda g: [(a, g * mask)])


def tanh(a):
    a = _as_tensor(a)
    t = np.tanh(a.data)
    return _node(t, [a], lambda g: [(a, g * (1.0 - t * t))])


def sigmoid(a):
    a = _as_tensor(a)
    s = _sigmoid(a.data)
    return _node(s, [a], lambda g: [(a, g * s * (1.0 - s))])


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[np.logical_not(pos)])
    out[np.logical_not(pos)] = ez / (1.0 + ez)
    return out


def softmax_rows(a, mask=None):
    """Row-wise softmax with max-subtraction.

    mask, if given, is a plain array of 0 / -inf added to the logits
    (used for causal attention); it is not differentiated through.
    """
    a = _as_tensor(a)
    if np.isnan(a.data).any():
        raise NumericError("softmax_rows received NaN input")
    z = a.data if mask is None else a.data + mask
    m = np.max(z, axis=-1, keepdims=True)
    # fully masked rows would give -inf max; not expected, guard anyway
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(z - m)
    # cumsum is strictly sequential, so a row's sum keeps its bits when
    # the row gains trailing masked (zero) entries; np.sum/einsum use
    # length-dependent accumulator groupings and do not
    p = e / np.cumsum(e, axis=-1)[..., -1:]

    def bw(g):
        dot = (g * p).sum(axis=-1, keepdims=True)
        return [(a, p * (g - dot))]

    return _node(p, [a], bw)


def layer_norm(a, gain, bias, eps=1e-6):
    """Per-row layer normalization with learned gain and bias."""
    a, gain, bias = _as_tensor(a), _as_tensor(gain), _as_tensor(bias)
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data
    n = a.data.shape[-1]

    def bw(g):
        dxhat = g * gain.data
        da = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return [(a, da),
                (gain, (g * xhat).sum(axis=0)),
                (bias, g.sum(axis=0))]

    return _node(out, [a, gain, bias], bw)


def dropout(a, p, rng, training):
    """Inverted dropout: scale survivors by 1/(1-p) at train time."""
    a = _as_tensor(a)
    if not training or p <= 0.0:
        return a
    keep = (rng.random(a.data.shape) >= p) / (1.0 - p)
    return _node(a.data * keep, [a], lambda g: [(a, g * keep)])


# ---------------------------------------------------------------------------
# structured ops


def conv1d(x, kernel, stride, causal=False):
    """1-d convolution over time, same-padded or causal (left-padded).

    x: [T, d_in], kernel: [w, d_in, d_out], stride in {1, 2}.
    Output length is ceil(T / stride). In causal mode output t depends
    only on input positions <= t * stride.
    """
    from .errors import ConfigError, DataError
    x, kernel = _as_tensor(x), _as_tensor(kernel)
    T, d_in = x.data.shape
    w, kd_in, d_out = kernel.data.shape
    if T == 0:
        raise DataError("conv1d on empty input (T=0)")
    if w % 2 == 0:
        raise ConfigError(f"conv1d kernel width must be odd, got {w}")
    if stride not in (1, 2):
        raise ConfigError(f"conv1d stride must be 1 or 2, got {stride}")
    if kd_in != d_in:
        raise ShapeError(f"conv1d input dim {d_in} != kernel input dim {kd_in}")
    pad_left = w - 1 if causal else w // 2
    pad_right = 0 if causal else w // 2
    t_out = -(-T // stride)
    xp = np.zeros((pad_left + T + pad_right, d_in), dtype=DTYPE)
    xp[pad_left:pad_left + T] = x.data
    # im2col: cols[t] = concatenated window around t*stride
    centers = np.arange(t_out) * stride
    cols = np.empty((t_out, w * d_in), dtype=DTYPE)
    for j in range(w):
        cols[:, j * d_in:(j + 1) * d_in] = xp[centers + j]
    kmat = kernel.data.reshape(w * d_in, d_out)
    out = row_stable_mm(cols, kmat)

    def bw(g):
        gk = (cols.T @ g).reshape(w, d_in, d_out)
        gcols = g @ kmat.T
        gxp = np.zeros_like(xp)
        for j in range(w):
            np.add.at(gxp, centers + j, gcols[:, j * d_in:(j + 1) * d_in])
        return [(x, gxp[pad_left:pad_left + T]), (kernel, gk)]

    return _node(out, [x, kernel], bw)


def lstm_step(x, h, c, wx, wh, b):
    """One LSTM cell step; returns (h', c')."""
    x, h, c, wx, wh, b = map(_as_tensor, (x, h, c, wx, wh, b))
    H = wh.data.shape[0]
    if x.data.shape[-1] != wx.data.shape[0] or h.data.shape[-1] != H:
        raise ShapeError(
            f"lstm_step shapes inconsistent: x {x.data.shape}, h {h.data.shape}, "
            f"wx {wx.data.shape}, wh {wh.data.shape}")
    z = x.data @ wx.data + h.data @ wh.data + b.data
    i = _sigmoid(z[..., :H])
    f = _sigmoid(z[..., H:2 * H])
    g_ = np.tanh(z[..., 2 * H:3 * H])
    o = _sigmoid(z[..., 3 * H:])
    c_new = f * c.data + i * g_
    tc = np.tanh(c_new)
    h_new = o * tc

    def bw_h(gh):
        return _lstm_step_bw(gh, np.zeros_like(c_new))

    def bw_c(gc):
        return _lstm_step_bw(np.zeros_like(h_new), gc)

    def _lstm_step_bw(gh, gc):
        dc = gh * o * (1.0 - tc * tc) + gc
        dz = np.concatenate([
            dc * g_ * i * (1.0 - i),
            dc * c.data * f * (1.0 - f),
            dc * i * (1.0 - g_ * g_),
            gh * tc * o * (1.0 - o),
        ], axis=-1)
        col = dz.reshape(-1, 4 * H)
        xr = x.data.reshape(-1, wx.data.shape[0])
        hr = h.data.reshape(-1, H)
        return [(x, (dz @ wx.data.T).reshape(x.data.shape)),
                (h, (dz @ wh.data.T).reshape(h.data.shape)),
                (c, dc * f),
                (wx, xr.T @ col),
                (wh, hr.T @ col),
                (b, col.sum(axis=0))]

    parents = [x, h, c, wx, wh, b]
    return _node(h_new, parents, bw_h), _node(c_new, parents, bw_c)


def lstm_sequence(x, wx, wh, b):
    """Left-to-right LSTM over a [T, d_in] sequence from zero state.

    Runs on the selected kernel backend (compiled when available).
    """
    x, wx, wh, b = map(_as_tensor, (x, wx, wh, b))
    if x.data.shape[1] != wx.data.shape[0]:
        raise ShapeError(
            f"lstm_sequence input dim {x.data.shape[1]} != wx rows {wx.data.shape[0]}")
    h_seq, cache = kernels.lstm_forward(
        np.ascontiguousarray(x.data), np.ascontiguousarray(wx.data),
        np.ascontiguousarray(wh.data), np.ascontiguousarray(b.data))

    def bw(g):
        dx, dwx, dwh, db = kernels.lstm_backward(np.ascontiguousarray(g), cache)
        return [(x, dx), (wx, dwx), (wh, dwh), (b, db)]

    return _node(h_seq, [x, wx, wh, b], bw)


def cross_entropy(probs, targets, n_classes=None):
    """Mean over positions of -ln(probs[i, target_i]), probs clamped at 1e-12."""
    probs = _as_tensor(probs)
    t = np.asarray(targets, dtype=np.intp)
    k = probs.data.shape[1]
    if n_classes is not None and k != n_classes:
        raise ShapeError(f"expected {n_classes} classes, got {k}")
    if t.size and (t.min() < 0 or t.max() >= k):
        raise LabelError(f"target id outside [0, {k})")
    eps = 1e-12
    picked = probs.data[np.arange(len(t)), t]
    clamped = np.maximum(picked, eps)
    loss = -np.log(clamped).mean() if len(t) else 0.0
    n = max(len(t), 1)

    def bw(g):
        gp = np.zeros_like(probs.data)
        live = picked > eps  # clamp kills the gradient below eps
        gp[np.arange(len(t)), t] = np.where(live, -1.0 / (clamped * n), 0.0) * float(g)
        return [(probs, gp)]

    return _node(np.asarray(loss), [probs], bw)


def _unbroadcast(g, shape):
    """Reduce a gradient back to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)
