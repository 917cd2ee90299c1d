"""Two-qubit compression circuit: ZYZ single-qubit gates, a controlled
unitary, and measurement-based pair compression.

Single-qubit gates use the ZYZ decomposition

    U(alpha, beta, gamma, delta) = e^{i alpha} R_Z(beta) R_Y(gamma) R_Z(delta)

with

    R_Z(x) = [[e^{-ix/2}, 0      ],        R_Y(x) = [[cos x/2, -sin x/2],
              [0,        e^{ix/2}]]                  [sin x/2,  cos x/2]]

Pair compression applies independent ZYZ gates to a control and a target
qubit, entangles them with a controlled ZYZ gate (control = first qubit),
measures the target marginal, and re-initializes a fresh qubit from the
outcome probabilities: (sqrt(p0), sqrt(p1)). The control qubit is dropped,
so two qubits become one.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .encoding import QubitState
from .errors import DimensionError, DomainError

# Pauli-X realized exactly in ZYZ form: X = e^{-i pi/2} R_Z(pi) R_Y(pi).
PAULI_X_PARAMS = (-math.pi / 2.0, math.pi, math.pi, 0.0)


class GateParams(NamedTuple):
    """ZYZ angles (alpha, beta, gamma, delta); alpha is a global phase."""

    alpha: float
    beta: float
    gamma: float
    delta: float


class PairCompressorParams(NamedTuple):
    """Parameters of one pair compression: two local gates plus the controlled gate."""

    u_ctrl: GateParams
    u_tgt: GateParams
    v_controlled: GateParams


def _check_angles(p: GateParams) -> None:
    for x in p:
        if not math.isfinite(x):
            raise DomainError("gate angles must be finite")


def zyz_matrix(p: GateParams) -> np.ndarray:
    """2x2 unitary e^{i alpha} R_Z(beta) R_Y(gamma) R_Z(delta)."""
    p = GateParams(*p)
    _check_angles(p)
    phase = np.exp(1j * p.alpha)
    cg, sg = math.cos(p.gamma / 2.0), math.sin(p.gamma / 2.0)
    em_bd = np.exp(-0.5j * (p.beta + p.delta))  # e^{-i(beta+delta)/2}
    em_bmd = np.exp(-0.5j * (p.beta - p.delta))  # e^{-i(beta-delta)/2}
    return phase * np.array(
        [
            [em_bd * cg, -em_bmd * sg],
            [np.conj(em_bmd) * sg, np.conj(em_bd) * cg],
        ],
        dtype=np.complex128,
    )


def controlled_matrix(p: GateParams) -> np.ndarray:
    """4x4 controlled-V on |ctrl, tgt> with amplitude order |00>,|01>,|10>,|11>.

    Identity on the control-0 block, V = zyz_matrix(p) on the control-1 block.
    """
    v = zyz_matrix(p)
    out = np.eye(4, dtype=np.complex128)
    out[2:, 2:] = v
    return out


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    """True when m^H m is the identity within tol."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def _check_qubit(q: QubitState, name: str) -> None:
    norm = abs(q.a0) ** 2 + abs(q.a1) ** 2
    if not (math.isfinite(norm) and abs(norm - 1.0) <= 1e-9):
        raise DomainError(f"{name} is not a normalized qubit state")


def pair_state(qi: QubitState, qj: QubitState, params: PairCompressorParams) -> np.ndarray:
    """Two-qubit pre-measurement state of one pair compression.

    Returns the length-4 amplitude vector CU(v) . ((U_ctrl qi) (x) (U_tgt qj))
    in the |ctrl, tgt> order |00>,|01>,|10>,|11>.
    """
    _check_qubit(qi, "control qubit")
    _check_qubit(qj, "target qubit")
    uc = zyz_matrix(params.u_ctrl)
    ut = zyz_matrix(params.u_tgt)
    c = uc @ np.array([qi.a0, qi.a1], dtype=np.complex128)
    t = ut @ np.array([qj.a0, qj.a1], dtype=np.complex128)
    psi = np.kron(c, t)
    return controlled_matrix(params.v_controlled) @ psi


def pair_compress(
    qi: QubitState, qj: QubitState, params: PairCompressorParams
) -> tuple[QubitState, tuple[float, float]]:
    """Compress qubits (qi control, qj target) into one re-initialized qubit.

    Measures the target marginal of the entangled pair state:

        p0 = |psi_00|^2 + |psi_10|^2,   p1 = |psi_01|^2 + |psi_11|^2

    and returns (QubitState(sqrt(p0), sqrt(p1)), (p0, p1)). The output
    amplitudes are real and non-negative; any input phases are consumed by
    the measurement.
    """
    psi = pair_state(qi, qj, params)
    a = np.abs(psi) ** 2
    p0 = float(a[0] + a[2])
    p1 = float(a[1] + a[3])
    return QubitState(complex(math.sqrt(p0)), complex(math.sqrt(p1))), (p0, p1)


def cnot_compress_probs(qi: QubitState, qj: QubitState) -> tuple[float, float]:
    """Closed form of the CNOT special case (identity locals, V = Pauli-X):

        p0 = |a_i a_j|^2 + |b_i b_j|^2,   p1 = |a_i b_j|^2 + |b_i a_j|^2
    """
    _check_qubit(qi, "control qubit")
    _check_qubit(qj, "target qubit")
    p0 = abs(qi.a0 * qj.a0) ** 2 + abs(qi.a1 * qj.a1) ** 2
    p1 = abs(qi.a0 * qj.a1) ** 2 + abs(qi.a1 * qj.a0) ** 2
    return float(p0), float(p1)
