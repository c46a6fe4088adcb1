# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled LSTM sequence kernel. Same contract and gate layout as _lstm_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()

BACKEND = "cython"


cdef inline double _sig(double z) nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def lstm_forward(cnp.ndarray[cnp.float64_t, ndim=2] x,
                 cnp.ndarray[cnp.float64_t, ndim=2] wx,
                 cnp.ndarray[cnp.float64_t, ndim=2] wh,
                 cnp.ndarray[cnp.float64_t, ndim=1] b):
    cdef int T = x.shape[0]
    cdef int H = wh.shape[0]
    # einsum keeps each row's bits independent of T (prefix causality)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pre = np.ascontiguousarray(
        np.einsum("ij,jk->ik", x, wx) + b)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] h_seq = np.empty((T, H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c_seq = np.empty((T, H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gates = np.empty((T, 4 * H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tanh_c = np.empty((T, H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] whc = np.ascontiguousarray(wh)
    cdef double[::1] h = np.zeros(H)
    cdef double[::1] c = np.zeros(H)
    cdef double[::1] z = np.empty(4 * H)
    cdef int t, j, k
    cdef double i_g, f_g, g_g, o_g, cv, tc, acc
    with nogil:
        for t in range(T):
            for k in range(4 * H):
                acc = pre[t, k]
                for j in range(H):
                    acc += h[j] * whc[j, k]
                z[k] = acc
            for j in range(H):
                i_g = _sig(z[j])
                f_g = _sig(z[H + j])
                g_g = tanh(z[2 * H + j])
                o_g = _sig(z[3 * H + j])
                cv = f_g * c[j] + i_g * g_g
                tc = tanh(cv)
                c[j] = cv
                h[j] = o_g * tc
                gates[t, j] = i_g
                gates[t, H + j] = f_g
                gates[t, 2 * H + j] = g_g
                gates[t, 3 * H + j] = o_g
                c_seq[t, j] = cv
                tanh_c[t, j] = tc
                h_seq[t, j] = h[j]
    cache = (x, wx, wh, h_seq, c_seq, gates, tanh_c)
    return h_seq, cache


def lstm_backward(cnp.ndarray[cnp.float64_t, ndim=2] dh_seq, cache):
    x_o, wx_o, wh_o, h_o, c_o, g_o, tc_o = cache
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x = np.ascontiguousarray(x_o)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] wx = np.ascontiguousarray(wx_o)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] wh = np.ascontiguousarray(wh_o)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] h_seq = h_o
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c_seq = c_o
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gates = g_o
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tanh_c = tc_o
    cdef int T = x.shape[0]
    cdef int D = x.shape[1]
    cdef int H = wh.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dx = np.zeros((T, D))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dwx = np.zeros((D, 4 * H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dwh = np.zeros((H, 4 * H))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] db = np.zeros(4 * H)
    cdef double[::1] dh_next = np.zeros(H)
    cdef double[::1] dc_next = np.zeros(H)
    cdef double[::1] dz = np.empty(4 * H)
    cdef double[::1] dc = np.empty(H)
    cdef int t, j, k
    cdef double i_g, f_g, g_g, o_g, dh, c_prev, h_prev, acc
    with nogil:
        for t in range(T - 1, -1, -1):
            for j in range(H):
                i_g = gates[t, j]
                f_g = gates[t, H + j]
                g_g = gates[t, 2 * H + j]
                o_g = gates[t, 3 * H + j]
                c_prev = c_seq[t - 1, j] if t > 0 else 0.0
                dh = dh_seq[t, j] + dh_next[j]
                dc[j] = dh * o_g * (1.0 - tanh_c[t, j] * tanh_c[t, j]) + dc_next[j]
                dz[j] = dc[j] * g_g * i_g * (1.0 - i_g)
                dz[H + j] = dc[j] * c_prev * f_g * (1.0 - f_g)
                dz[2 * H + j] = dc[j] * i_g * (1.0 - g_g * g_g)
                dz[3 * H + j] = dh * tanh_c[t, j] * o_g * (1.0 - o_g)
            for j in range(D):
                acc = 0.0
                for k in range(4 * H):
                    acc += dz[k] * wx[j, k]
                dx[t, j] = acc
                for k in range(4 * H):
                    dwx[j, k] += x[t, j] * dz[k]
            for j in range(H):
                h_prev = h_seq[t - 1, j] if t > 0 else 0.0
                acc = 0.0
                for k in range(4 * H):
                    acc += dz[k] * wh[j, k]
                    dwh[j, k] += h_prev * dz[k]
                dh_next[j] = acc
            for k in range(4 * H):
                db[k] += dz[k]
            for j in range(H):
                dc_next[j] = dc[j] * gates[t, H + j]
    return dx, dwx, dwh, db
