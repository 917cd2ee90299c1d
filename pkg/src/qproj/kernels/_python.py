"""Pure NumPy kernel backend.

Vectorizes the pair-compression schedule over (batch, pair). Mirrors the
compiled backend in qproj.kernels._core operation for operation; the two
must agree to float tolerance (see tests/test_kernels.py).

Gradient convention for complex intermediates: a gradient array g for a
complex quantity z stores dL/dRe(z) + i dL/dIm(z). Under that convention a
complex-linear map out = W @ z pulls back as g_z = W^H g_out, the gradient
on W is g_out * conj(z), and a product z = u*v gives g_u = g_z * conj(v).
"""

from __future__ import annotations

import numpy as np

SQRT_CLAMP = 1e-12


def head_forward(amps: np.ndarray, gates: np.ndarray, d_out: int):
    """Batched head forward pass.

    amps: (B, n, 2) float64 real amplitudes, gates: (L, P, 3, 2, 2) complex128
    with P == d_out. Returns (out (B, d_out, 2) float64, cache for backward).
    """
    B, n, _ = amps.shape
    L = gates.shape[0]
    state = np.array(amps, dtype=np.float64, copy=True)
    xs = np.empty((L, B, d_out, 2), dtype=np.float64)
    ys = np.empty((L, B, d_out, 2), dtype=np.float64)
    cs = np.empty((L, B, d_out, 2), dtype=np.complex128)
    ts = np.empty((L, B, d_out, 2), dtype=np.complex128)
    phis = np.empty((L, B, d_out, 4), dtype=np.complex128)
    ps = np.empty((L, B, d_out, 2), dtype=np.float64)
    for layer in range(L):
        w = n - layer * d_out
        x = state[:, w - 2 * d_out : w - d_out, :]
        y = state[:, w - d_out : w, :]
        uc = gates[layer, :, 0]
        ut = gates[layer, :, 1]
        v = gates[layer, :, 2]
        c0 = uc[:, 0, 0] * x[..., 0] + uc[:, 0, 1] * x[..., 1]
        c1 = uc[:, 1, 0] * x[..., 0] + uc[:, 1, 1] * x[..., 1]
        t0 = ut[:, 0, 0] * y[..., 0] + ut[:, 0, 1] * y[..., 1]
        t1 = ut[:, 1, 0] * y[..., 0] + ut[:, 1, 1] * y[..., 1]
        phi0 = c0 * t0
        phi1 = c0 * t1
        psi2 = c1 * t0
        psi3 = c1 * t1
        phi2 = v[:, 0, 0] * psi2 + v[:, 0, 1] * psi3
        phi3 = v[:, 1, 0] * psi2 + v[:, 1, 1] * psi3
        p0 = phi0.real**2 + phi0.imag**2 + phi2.real**2 + phi2.imag**2
        p1 = phi1.real**2 + phi1.imag**2 + phi3.real**2 + phi3.imag**2
        xs[layer] = x
        ys[layer] = y
        cs[layer, ..., 0] = c0
        cs[layer, ..., 1] = c1
        ts[layer, ..., 0] = t0
        ts[layer, ..., 1] = t1
        phis[layer, ..., 0] = phi0
        phis[layer, ..., 1] = phi1
        phis[layer, ..., 2] = phi2
        phis[layer, ..., 3] = phi3
        ps[layer, ..., 0] = p0
        ps[layer, ..., 1] = p1
        x[..., 0] = np.sqrt(p0)
        x[..., 1] = np.sqrt(p1)
    out = np.array(state[:, :d_out, :], copy=True)
    return out, (xs, ys, cs, ts, phis, ps)


def head_backward(g_out: np.ndarray, gates: np.ndarray, cache, n: int):
    """Batched head backward pass.

    g_out: (B, d_out, 2) float64 gradient on the output amplitudes. Returns
    (g_amps (B, n, 2) float64, g_gates (L, P, 3, 2, 2) complex128 summed over
    the batch, in the convention described in the module docstring).
    """
    xs, ys, cs, ts, phis, ps = cache
    L = xs.shape[0]
    B = g_out.shape[0]
    d_out = g_out.shape[1]
    g_state = np.zeros((B, n, 2), dtype=np.float64)
    g_state[:, :d_out, :] = g_out
    g_gates = np.zeros_like(gates)
    for layer in reversed(range(L)):
        w = n - layer * d_out
        go = np.array(g_state[:, w - 2 * d_out : w - d_out, :], copy=True)
        p0 = ps[layer, ..., 0]
        p1 = ps[layer, ..., 1]
        gp0 = go[..., 0] / (2.0 * np.sqrt(np.maximum(p0, SQRT_CLAMP)))
        gp1 = go[..., 1] / (2.0 * np.sqrt(np.maximum(p1, SQRT_CLAMP)))
        gphi0 = 2.0 * gp0 * phis[layer, ..., 0]
        gphi1 = 2.0 * gp1 * phis[layer, ..., 1]
        gphi2 = 2.0 * gp0 * phis[layer, ..., 2]
        gphi3 = 2.0 * gp1 * phis[layer, ..., 3]
        uc = gates[layer, :, 0]
        ut = gates[layer, :, 1]
        v = gates[layer, :, 2]
        c0 = cs[layer, ..., 0]
        c1 = cs[layer, ..., 1]
        t0 = ts[layer, ..., 0]
        t1 = ts[layer, ..., 1]
        psi2 = c1 * t0
        psi3 = c1 * t1
        gpsi2 = np.conj(v[:, 0, 0]) * gphi2 + np.conj(v[:, 1, 0]) * gphi3
        gpsi3 = np.conj(v[:, 0, 1]) * gphi2 + np.conj(v[:, 1, 1]) * gphi3
        g_gates[layer, :, 2, 0, 0] = np.sum(gphi2 * np.conj(psi2), axis=0)
        g_gates[layer, :, 2, 0, 1] = np.sum(gphi2 * np.conj(psi3), axis=0)
        g_gates[layer, :, 2, 1, 0] = np.sum(gphi3 * np.conj(psi2), axis=0)
        g_gates[layer, :, 2, 1, 1] = np.sum(gphi3 * np.conj(psi3), axis=0)
        gc0 = gphi0 * np.conj(t0) + gphi1 * np.conj(t1)
        gc1 = gpsi2 * np.conj(t0) + gpsi3 * np.conj(t1)
        gt0 = gphi0 * np.conj(c0) + gpsi2 * np.conj(c1)
        gt1 = gphi1 * np.conj(c0) + gpsi3 * np.conj(c1)
        x = xs[layer]
        y = ys[layer]
        g_gates[layer, :, 0, 0, 0] = np.sum(gc0 * x[..., 0], axis=0)
        g_gates[layer, :, 0, 0, 1] = np.sum(gc0 * x[..., 1], axis=0)
        g_gates[layer, :, 0, 1, 0] = np.sum(gc1 * x[..., 0], axis=0)
        g_gates[layer, :, 0, 1, 1] = np.sum(gc1 * x[..., 1], axis=0)
        g_gates[layer, :, 1, 0, 0] = np.sum(gt0 * y[..., 0], axis=0)
        g_gates[layer, :, 1, 0, 1] = np.sum(gt0 * y[..., 1], axis=0)
        g_gates[layer, :, 1, 1, 0] = np.sum(gt1 * y[..., 0], axis=0)
        g_gates[layer, :, 1, 1, 1] = np.sum(gt1 * y[..., 1], axis=0)
        gx0 = (np.conj(uc[:, 0, 0]) * gc0 + np.conj(uc[:, 1, 0]) * gc1).real
        gx1 = (np.conj(uc[:, 0, 1]) * gc0 + np.conj(uc[:, 1, 1]) * gc1).real
        gy0 = (np.conj(ut[:, 0, 0]) * gt0 + np.conj(ut[:, 1, 0]) * gt1).real
        gy1 = (np.conj(ut[:, 0, 1]) * gt0 + np.conj(ut[:, 1, 1]) * gt1).real
        g_state[:, w - 2 * d_out : w - d_out, 0] = gx0
        g_state[:, w - 2 * d_out : w - d_out, 1] = gx1
        g_state[:, w - d_out : w, 0] = gy0
        g_state[:, w - d_out : w, 1] = gy1
    return g_state, g_gates
