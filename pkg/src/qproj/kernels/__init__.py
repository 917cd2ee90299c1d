"""Batched compression-head kernels with a compiled core and a NumPy fallback.

The hot loops (head_forward / head_backward over a batch of product states)
exist twice: qproj.kernels._core is a Cython extension, qproj.kernels._python
is pure NumPy. The compiled backend is picked at import when present; set
QPROJ_KERNELS=python or QPROJ_KERNELS=cython to force one (forcing cython
raises if the extension is not built). Both backends take real (B, n, 2)
amplitude arrays, which is all the training pipeline needs: encoded states
are real and every compressed qubit is (sqrt(p0), sqrt(p1)).

Gate construction from angles is cheap and shared: build_gates turns an
(L, P, 12) angle array into (L, P, 3, 2, 2) ZYZ unitaries, and
build_gate_derivatives provides dU/dangle for the backward pass.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError
from . import _python

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"python": _python}
if _core is not None:
    _BACKENDS["cython"] = _core


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _initial_backend() -> str:
    forced = os.environ.get("QPROJ_KERNELS", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise ConfigError(
                f"QPROJ_KERNELS={forced!r} is not available (have {available_backends()})"
            )
        return forced
    return "cython" if _core is not None else "python"


_active_name = _initial_backend()
_active = _BACKENDS[_active_name]


def backend_name() -> str:
    """Name of the active kernel backend ('cython' or 'python')."""
    return _active_name


def set_backend(name: str) -> None:
    """Switch the process-global kernel backend (mainly for tests/benchmarks)."""
    global _active_name, _active
    if name not in _BACKENDS:
        raise ConfigError(f"unknown kernel backend {name!r} (have {available_backends()})")
    _active_name = name
    _active = _BACKENDS[name]


def head_forward(amps: np.ndarray, gates: np.ndarray, d_out: int):
    """Run the pair-compression schedule on a batch of real product states."""
    return _active.head_forward(amps, gates, d_out)


def head_backward(g_out: np.ndarray, gates: np.ndarray, cache, n: int):
    """Pull gradients back through a head_forward call (matching backend cache)."""
    return _active.head_backward(g_out, gates, cache, n)


def build_gates(angles: np.ndarray) -> np.ndarray:
    """ZYZ unitaries for an (L, P, 12) angle array, shape (L, P, 3, 2, 2).

    Quadruple order per pair is (u_ctrl, u_tgt, v_controlled), each
    (alpha, beta, gamma, delta). Uses the same factored form as
    qproj.circuit.zyz_matrix.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim != 3 or angles.shape[2] != 12:
        raise ConfigError(f"angle array must be (L, P, 12), got {angles.shape}")
    L, P = angles.shape[0], angles.shape[1]
    quad = angles.reshape(L, P, 3, 4)
    alpha, beta, gamma, delta = (quad[..., i] for i in range(4))
    phase = np.exp(1j * alpha)
    cg = np.cos(gamma / 2.0)
    sg = np.sin(gamma / 2.0)
    em_bd = np.exp(-0.5j * (beta + delta))
    em_bmd = np.exp(-0.5j * (beta - delta))
    gates = np.empty((L, P, 3, 2, 2), dtype=np.complex128)
    gates[..., 0, 0] = phase * em_bd * cg
    gates[..., 0, 1] = phase * (-em_bmd * sg)
    gates[..., 1, 0] = phase * np.conj(em_bmd) * sg
    gates[..., 1, 1] = phase * np.conj(em_bd) * cg
    return gates


def build_gate_derivatives(angles: np.ndarray) -> np.ndarray:
    """dU/dangle for every gate, shape (L, P, 3, 4, 2, 2).

    Axis 3 indexes the differentiated angle (alpha, beta, gamma, delta):
    dU/dalpha = iU, dU/dbeta = -i/2 sigma_z U, dU/ddelta = -i/2 U sigma_z,
    and dU/dgamma swaps the half-angle trig factors.
    """
    angles = np.asarray(angles, dtype=np.float64)
    L, P, _ = angles.shape
    quad = angles.reshape(L, P, 3, 4)
    alpha, beta, gamma, delta = (quad[..., i] for i in range(4))
    u = build_gates(angles)
    d = np.empty((L, P, 3, 4, 2, 2), dtype=np.complex128)
    d[..., 0, :, :] = 1j * u
    d[..., 1, 0, :] = -0.5j * u[..., 0, :]
    d[..., 1, 1, :] = 0.5j * u[..., 1, :]
    d[..., 3, :, 0] = -0.5j * u[..., :, 0]
    d[..., 3, :, 1] = 0.5j * u[..., :, 1]
    phase = np.exp(1j * alpha)
    cg2 = np.cos(gamma / 2.0) / 2.0
    sg2 = np.sin(gamma / 2.0) / 2.0
    em_bd = np.exp(-0.5j * (beta + delta))
    em_bmd = np.exp(-0.5j * (beta - delta))
    d[..., 2, 0, 0] = phase * em_bd * (-sg2)
    d[..., 2, 0, 1] = phase * (-em_bmd * cg2)
    d[..., 2, 1, 0] = phase * np.conj(em_bmd) * cg2
    d[..., 2, 1, 1] = phase * np.conj(em_bd) * (-sg2)
    return d


def angle_grads(g_gates: np.ndarray, d_gates: np.ndarray) -> np.ndarray:
    """Contract matrix-entry gradients with dU/dangle into (L, P, 12) angle grads.

    g_gates follows the re/im pair convention, so each angle gradient is
    sum over entries of Re(g)Re(dU) + Im(g)Im(dU).
    """
    real = np.einsum("lpgjk,lpgajk->lpga", g_gates.real, d_gates.real)
    imag = np.einsum("lpgjk,lpgajk->lpga", g_gates.imag, d_gates.imag)
    out = real + imag
    L, P = out.shape[0], out.shape[1]
    return out.reshape(L, P, 12)
