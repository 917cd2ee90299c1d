# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: per-element loops over (batch, layer, pair).

Same contract and gradient convention as qproj.kernels._python; see that
module's docstring. Kept scalar on purpose: the arrays are small enough
that NumPy dispatch overhead dominates the fallback, which is exactly what
this extension removes.
"""

import numpy as np

from libc.math cimport sqrt


cdef double SQRT_CLAMP = 1e-12


def head_forward(amps, gates, Py_ssize_t d_out):
    """Batched head forward pass; see qproj.kernels._python.head_forward."""
    cdef double complex[:, :, :, :, ::1] g = np.ascontiguousarray(gates, dtype=np.complex128)
    state_arr = np.ascontiguousarray(amps, dtype=np.float64).copy()
    cdef Py_ssize_t B = state_arr.shape[0]
    cdef Py_ssize_t n = state_arr.shape[1]
    cdef Py_ssize_t L = g.shape[0]
    xs_arr = np.empty((L, B, d_out, 2), dtype=np.float64)
    ys_arr = np.empty((L, B, d_out, 2), dtype=np.float64)
    cs_arr = np.empty((L, B, d_out, 2), dtype=np.complex128)
    ts_arr = np.empty((L, B, d_out, 2), dtype=np.complex128)
    phis_arr = np.empty((L, B, d_out, 4), dtype=np.complex128)
    ps_arr = np.empty((L, B, d_out, 2), dtype=np.float64)

    cdef double[:, :, ::1] state = state_arr
    cdef double[:, :, :, ::1] xs = xs_arr
    cdef double[:, :, :, ::1] ys = ys_arr
    cdef double complex[:, :, :, ::1] cs = cs_arr
    cdef double complex[:, :, :, ::1] ts = ts_arr
    cdef double complex[:, :, :, ::1] phis = phis_arr
    cdef double[:, :, :, ::1] ps = ps_arr

    cdef Py_ssize_t layer, b, k, w, ic, it
    cdef double x0, x1, y0, y1, p0, p1
    cdef double complex c0, c1, t0, t1, phi0, phi1, phi2, phi3, psi2, psi3

    for layer in range(L):
        w = n - layer * d_out
        for b in range(B):
            for k in range(d_out):
                ic = w - 2 * d_out + k
                it = w - d_out + k
                x0 = state[b, ic, 0]
                x1 = state[b, ic, 1]
                y0 = state[b, it, 0]
                y1 = state[b, it, 1]
                c0 = g[layer, k, 0, 0, 0] * x0 + g[layer, k, 0, 0, 1] * x1
                c1 = g[layer, k, 0, 1, 0] * x0 + g[layer, k, 0, 1, 1] * x1
                t0 = g[layer, k, 1, 0, 0] * y0 + g[layer, k, 1, 0, 1] * y1
                t1 = g[layer, k, 1, 1, 0] * y0 + g[layer, k, 1, 1, 1] * y1
                phi0 = c0 * t0
                phi1 = c0 * t1
                psi2 = c1 * t0
                psi3 = c1 * t1
                phi2 = g[layer, k, 2, 0, 0] * psi2 + g[layer, k, 2, 0, 1] * psi3
                phi3 = g[layer, k, 2, 1, 0] * psi2 + g[layer, k, 2, 1, 1] * psi3
                p0 = phi0.real * phi0.real + phi0.imag * phi0.imag \
                    + phi2.real * phi2.real + phi2.imag * phi2.imag
                p1 = phi1.real * phi1.real + phi1.imag * phi1.imag \
                    + phi3.real * phi3.real + phi3.imag * phi3.imag
                xs[layer, b, k, 0] = x0
                xs[layer, b, k, 1] = x1
                ys[layer, b, k, 0] = y0
                ys[layer, b, k, 1] = y1
                cs[layer, b, k, 0] = c0
                cs[layer, b, k, 1] = c1
                ts[layer, b, k, 0] = t0
                ts[layer, b, k, 1] = t1
                phis[layer, b, k, 0] = phi0
                phis[layer, b, k, 1] = phi1
                phis[layer, b, k, 2] = phi2
                phis[layer, b, k, 3] = phi3
                ps[layer, b, k, 0] = p0
                ps[layer, b, k, 1] = p1
                state[b, ic, 0] = sqrt(p0)
                state[b, ic, 1] = sqrt(p1)

    out = np.array(state_arr[:, :d_out, :], copy=True)
    return out, (xs_arr, ys_arr, cs_arr, ts_arr, phis_arr, ps_arr)


def head_backward(g_out, gates, cache, Py_ssize_t n):
    """Batched head backward pass; see qproj.kernels._python.head_backward."""
    xs_arr, ys_arr, cs_arr, ts_arr, phis_arr, ps_arr = cache
    cdef double complex[:, :, :, :, ::1] g = np.ascontiguousarray(gates, dtype=np.complex128)
    cdef double[:, :, :, ::1] xs = xs_arr
    cdef double[:, :, :, ::1] ys = ys_arr
    cdef double complex[:, :, :, ::1] cs = cs_arr
    cdef double complex[:, :, :, ::1] ts = ts_arr
    cdef double complex[:, :, :, ::1] phis = phis_arr
    cdef double[:, :, :, ::1] ps = ps_arr

    cdef Py_ssize_t L = xs.shape[0]
    go_arr = np.ascontiguousarray(g_out, dtype=np.float64)
    cdef double[:, :, ::1] go = go_arr
    cdef Py_ssize_t B = go.shape[0]
    cdef Py_ssize_t d_out = go.shape[1]

    g_state_arr = np.zeros((B, n, 2), dtype=np.float64)
    g_state_arr[:, :d_out, :] = go_arr
    g_gates_arr = np.zeros((L, d_out, 3, 2, 2), dtype=np.complex128)
    cdef double[:, :, ::1] gs = g_state_arr
    cdef double complex[:, :, :, :, ::1] gg = g_gates_arr

    cdef Py_ssize_t layer, b, k, w, ic, it
    cdef double p0, p1, gp0, gp1, x0, x1, y0, y1, d0, d1
    cdef double complex gphi0, gphi1, gphi2, gphi3, gpsi2, gpsi3
    cdef double complex c0, c1, t0, t1, psi2, psi3, gc0, gc1, gt0, gt1

    for layer in range(L - 1, -1, -1):
        w = n - layer * d_out
        for b in range(B):
            for k in range(d_out):
                ic = w - 2 * d_out + k
                it = w - d_out + k
                p0 = ps[layer, b, k, 0]
                p1 = ps[layer, b, k, 1]
                d0 = p0 if p0 > SQRT_CLAMP else SQRT_CLAMP
                d1 = p1 if p1 > SQRT_CLAMP else SQRT_CLAMP
                gp0 = gs[b, ic, 0] / (2.0 * sqrt(d0))
                gp1 = gs[b, ic, 1] / (2.0 * sqrt(d1))
                gphi0 = 2.0 * gp0 * phis[layer, b, k, 0]
                gphi1 = 2.0 * gp1 * phis[layer, b, k, 1]
                gphi2 = 2.0 * gp0 * phis[layer, b, k, 2]
                gphi3 = 2.0 * gp1 * phis[layer, b, k, 3]
                c0 = cs[layer, b, k, 0]
                c1 = cs[layer, b, k, 1]
                t0 = ts[layer, b, k, 0]
                t1 = ts[layer, b, k, 1]
                psi2 = c1 * t0
                psi3 = c1 * t1
                gpsi2 = g[layer, k, 2, 0, 0].conjugate() * gphi2 \
                    + g[layer, k, 2, 1, 0].conjugate() * gphi3
                gpsi3 = g[layer, k, 2, 0, 1].conjugate() * gphi2 \
                    + g[layer, k, 2, 1, 1].conjugate() * gphi3
                gg[layer, k, 2, 0, 0] = gg[layer, k, 2, 0, 0] + gphi2 * psi2.conjugate()
                gg[layer, k, 2, 0, 1] = gg[layer, k, 2, 0, 1] + gphi2 * psi3.conjugate()
                gg[layer, k, 2, 1, 0] = gg[layer, k, 2, 1, 0] + gphi3 * psi2.conjugate()
                gg[layer, k, 2, 1, 1] = gg[layer, k, 2, 1, 1] + gphi3 * psi3.conjugate()
                gc0 = gphi0 * t0.conjugate() + gphi1 * t1.conjugate()
                gc1 = gpsi2 * t0.conjugate() + gpsi3 * t1.conjugate()
                gt0 = gphi0 * c0.conjugate() + gpsi2 * c1.conjugate()
                gt1 = gphi1 * c0.conjugate() + gpsi3 * c1.conjugate()
                x0 = xs[layer, b, k, 0]
                x1 = xs[layer, b, k, 1]
                y0 = ys[layer, b, k, 0]
                y1 = ys[layer, b, k, 1]
                gg[layer, k, 0, 0, 0] = gg[layer, k, 0, 0, 0] + gc0 * x0
                gg[layer, k, 0, 0, 1] = gg[layer, k, 0, 0, 1] + gc0 * x1
                gg[layer, k, 0, 1, 0] = gg[layer, k, 0, 1, 0] + gc1 * x0
                gg[layer, k, 0, 1, 1] = gg[layer, k, 0, 1, 1] + gc1 * x1
                gg[layer, k, 1, 0, 0] = gg[layer, k, 1, 0, 0] + gt0 * y0
                gg[layer, k, 1, 0, 1] = gg[layer, k, 1, 0, 1] + gt0 * y1
                gg[layer, k, 1, 1, 0] = gg[layer, k, 1, 1, 0] + gt1 * y0
                gg[layer, k, 1, 1, 1] = gg[layer, k, 1, 1, 1] + gt1 * y1
                gs[b, ic, 0] = (g[layer, k, 0, 0, 0].conjugate() * gc0
                                + g[layer, k, 0, 1, 0].conjugate() * gc1).real
                gs[b, ic, 1] = (g[layer, k, 0, 0, 1].conjugate() * gc0
                                + g[layer, k, 0, 1, 1].conjugate() * gc1).real
                gs[b, it, 0] = (g[layer, k, 1, 0, 0].conjugate() * gt0
                                + g[layer, k, 1, 1, 0].conjugate() * gt1).real
                gs[b, it, 1] = (g[layer, k, 1, 0, 1].conjugate() * gt0
                                + g[layer, k, 1, 1, 1].conjugate() * gt1).real

    return g_state_arr, g_gates_arr
