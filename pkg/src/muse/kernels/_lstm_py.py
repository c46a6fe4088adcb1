"""Pure-numpy LSTM sequence kernel (fallback backend).

Gate layout along the 4H axis is [input, forget, candidate, output].
The compiled backend in _lstm_cy.pyx implements the same contract.
"""

import numpy as np

BACKEND = "python"


def lstm_forward(x, wx, wh, b):
    """Run a left-to-right LSTM from zero state.

    x: [T, d_in], wx: [d_in, 4H], wh: [H, 4H], b: [4H].
    Returns (h_seq [T, H], cache) where cache holds everything the
    backward pass needs.
    """
    T = x.shape[0]
    H = wh.shape[0]
    # einsum keeps each row's bits independent of T (prefix causality)
    pre = np.einsum("ij,jk->ik", x, wx) + b  # [T, 4H]
    h_seq = np.empty((T, H), dtype=x.dtype)
    c_seq = np.empty((T, H), dtype=x.dtype)
    gates = np.empty((T, 4 * H), dtype=x.dtype)
    tanh_c = np.empty((T, H), dtype=x.dtype)
    h = np.zeros(H, dtype=x.dtype)
    c = np.zeros(H, dtype=x.dtype)
    for t in range(T):
        z = pre[t] + h @ wh
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H:2 * H])
        g = np.tanh(z[2 * H:3 * H])
        o = _sigmoid(z[3 * H:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = g
        gates[t, 3 * H:] = o
        c_seq[t] = c
        tanh_c[t] = tc
        h_seq[t] = h
    cache = (x, wx, wh, h_seq, c_seq, gates, tanh_c)
    return h_seq, cache


def lstm_backward(dh_seq, cache):
    """Backprop through lstm_forward.

    dh_seq: [T, H] gradient w.r.t. each output state.
    Returns (dx, dwx, dwh, db).
    """
    x, wx, wh, h_seq, c_seq, gates, tanh_c = cache
    T, H = h_seq.shape
    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * H, dtype=x.dtype)
    dh_next = np.zeros(H, dtype=x.dtype)
    dc_next = np.zeros(H, dtype=x.dtype)
    dz = np.empty(4 * H, dtype=x.dtype)
    for t in range(T - 1, -1, -1):
        i = gates[t, :H]
        f = gates[t, H:2 * H]
        g = gates[t, 2 * H:3 * H]
        o = gates[t, 3 * H:]
        c_prev = c_seq[t - 1] if t > 0 else np.zeros(H, dtype=x.dtype)
        h_prev = h_seq[t - 1] if t > 0 else np.zeros(H, dtype=x.dtype)
        dh = dh_seq[t] + dh_next
        dc = dh * o * (1.0 - tanh_c[t] ** 2) + dc_next
        dz[:H] = dc * g * i * (1.0 - i)
        dz[H:2 * H] = dc * c_prev * f * (1.0 - f)
        dz[2 * H:3 * H] = dc * i * (1.0 - g ** 2)
        dz[3 * H:] = dh * tanh_c[t] * o * (1.0 - o)
        dx[t] = dz @ wx.T
        dwx += np.outer(x[t], dz)
        dwh += np.outer(h_prev, dz)
        db += dz
        dh_next = dz @ wh.T
        dc_next = dc * f
    return dx, dwx, dwh, db


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
