"""Qubit encoding of real vectors and product-state fidelity.

Each real coordinate u_i maps to one qubit through a squashed polar angle:

    theta_i = tanh(tau * u_i) * pi/2 + pi/2        (theta in (0, pi))
    |q_i>   = cos(theta_i / 2) |0> + e^{i pi} sin(theta_i / 2) |1>

The azimuthal phase is fixed at pi, so amplitudes are real with a0 > 0 and
a1 < 0 for finite input. A d-dim vector becomes a separable d-qubit product
state, and similarity between two encoded vectors is the product fidelity

    F(u, v) = prod_i |<u_i|v_i>|^2

which for this real encoding reduces per qubit to cos^2((theta_u - theta_v)/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DimensionError, DomainError

_NORM_TOL = 1e-12


class QubitState(NamedTuple):
    """Single-qubit state as two complex amplitudes (a0, a1)."""

    a0: complex
    a1: complex


@dataclass(frozen=True)
class EncoderConfig:
    """Encoding hyperparameters.

    tau scales the input before the tanh squash (trainable during head
    training, 1.0 at rest). eps is the additive floor inside log_fidelity.
    """

    tau: float = 1.0
    eps: float = 1e-12

    def __post_init__(self) -> None:
        if not math.isfinite(self.tau):
            raise DomainError("tau must be finite")
        if not (self.eps > 0.0 and math.isfinite(self.eps)):
            raise DomainError("eps must be a positive finite float")


class SeparableState:
    """Product state of n qubits, stored as an (n, 2) complex amplitude array."""

    __slots__ = ("amps",)

    def __init__(self, amps: np.ndarray, *, validate: bool = True):
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.ndim != 2 or amps.shape[1] != 2 or amps.shape[0] == 0:
            raise DimensionError(f"amplitude array must be (n, 2) with n >= 1, got {amps.shape}")
        if validate:
            norms = np.abs(amps[:, 0]) ** 2 + np.abs(amps[:, 1]) ** 2
            if not np.all(np.isfinite(amps)):
                raise DomainError("non-finite amplitude")
            drift = np.max(np.abs(norms - 1.0))
            if drift > _NORM_TOL:
                raise DomainError(f"qubit norm drift {drift:.3e} exceeds {_NORM_TOL:.0e}")
        self.amps = amps

    @property
    def n(self) -> int:
        return self.amps.shape[0]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> QubitState:
        return QubitState(complex(self.amps[i, 0]), complex(self.amps[i, 1]))

    def qubits(self) -> Iterable[QubitState]:
        for i in range(self.n):
            yield self[i]

    @classmethod
    def from_qubits(cls, qubits: Iterable[QubitState]) -> "SeparableState":
        rows = [(q.a0, q.a1) for q in qubits]
        if not rows:
            raise DimensionError("need at least one qubit")
        return cls(np.array(rows, dtype=np.complex128))


def encode_angles(vec: np.ndarray, tau: float) -> np.ndarray:
    """Polar angles theta_i = tanh(tau * u_i) * pi/2 + pi/2 for a real vector."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise DimensionError(f"expected a non-empty 1-d real vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DomainError("input vector has non-finite entries")
    return np.tanh(tau * vec) * (math.pi / 2.0) + math.pi / 2.0


def encode_component(u: float, config: EncoderConfig = EncoderConfig()) -> QubitState:
    """Encode one real coordinate as a qubit."""
    if not math.isfinite(u):
        raise DomainError("input coordinate must be finite")
    theta = math.tanh(config.tau * u) * (math.pi / 2.0) + math.pi / 2.0
    return QubitState(complex(math.cos(theta / 2.0)), complex(-math.sin(theta / 2.0)))


def encode(vec: np.ndarray, config: EncoderConfig = EncoderConfig()) -> SeparableState:
    """Encode a real vector as a separable product state, one qubit per coordinate."""
    theta = encode_angles(vec, config.tau)
    amps = np.empty((theta.size, 2), dtype=np.complex128)
    amps[:, 0] = np.cos(theta / 2.0)
    amps[:, 1] = -np.sin(theta / 2.0)
    return SeparableState(amps, validate=False)


def qubit_overlap(q1: QubitState, q2: QubitState) -> float:
    """Squared inner product |<q1|q2>|^2 of two single-qubit states."""
    ip = np.conj(q1.a0) * q2.a0 + np.conj(q1.a1) * q2.a1
    return float(ip.real**2 + ip.imag**2)


def fidelity(s1: SeparableState, s2: SeparableState) -> float:
    """Product fidelity prod_i |<s1_i|s2_i>|^2 between two separable states."""
    if s1.n != s2.n:
        raise DimensionError(f"state sizes differ: {s1.n} vs {s2.n}")
    ip = np.sum(np.conj(s1.amps) * s2.amps, axis=1)
    return float(np.prod(ip.real**2 + ip.imag**2))


def log_fidelity(s1: SeparableState, s2: SeparableState, eps: float = 1e-12) -> float:
    """Sum_i ln(|<s1_i|s2_i>|^2 + eps); the floor keeps orthogonal qubits finite."""
    if s1.n != s2.n:
        raise DimensionError(f"state sizes differ: {s1.n} vs {s2.n}")
    if not (eps > 0.0 and math.isfinite(eps)):
        raise DomainError("eps must be a positive finite float")
    ip = np.sum(np.conj(s1.amps) * s2.amps, axis=1)
    return float(np.sum(np.log(ip.real**2 + ip.imag**2 + eps)))
