"""Dense-statevector oracle.

Ground truth for everything the separable fast paths compute in closed
form. States live as full 2^n complex vectors with qubit 0 as the most
significant bit of the basis index, gates are applied by tensor
contraction, and marginals come from summing squared amplitudes. Nothing
here shares code with the product-state implementations; that independence
is the point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import controlled_matrix, zyz_matrix
from .encoding import EncoderConfig, SeparableState, encode, fidelity
from .errors import CapacityError, DimensionError, DomainError
from .head import HeadConfig, HeadParams, head_forward, schedule

MAX_QUBITS = 24


def _qubit_count(size: int) -> int:
    n = int(size).bit_length() - 1
    if size <= 0 or (1 << n) != size:
        raise DimensionError(f"dense state length {size} is not a power of two")
    return n


def _check_capacity(n: int) -> None:
    if n > MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceed the dense-oracle limit of {MAX_QUBITS}")


def densify(state: SeparableState) -> np.ndarray:
    """Kronecker product of all qubits; qubit 0 becomes the basis-index MSB."""
    _check_capacity(state.n)
    psi = np.array([1.0 + 0.0j])
    for i in range(state.n):
        psi = np.kron(psi, state.amps[i])
    return psi


def dense_apply(psi: np.ndarray, u: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    """Apply a k-qubit gate to the given qubit axes of a dense state.

    targets are qubit indices, most significant first, matching the row
    order of u. Preserves the norm for unitary u.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    n = _qubit_count(psi.size)
    k = len(targets)
    if len(set(targets)) != k or any(t < 0 or t >= n for t in targets):
        raise DimensionError(f"invalid target qubits {targets} for {n} qubits")
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (1 << k, 1 << k):
        raise DimensionError(f"gate must be {(1 << k, 1 << k)}, got {u.shape}")
    t = psi.reshape((2,) * n)
    t = np.tensordot(u.reshape((2,) * (2 * k)), t, axes=(tuple(range(k, 2 * k)), targets))
    t = np.moveaxis(t, tuple(range(k)), targets)
    return np.ascontiguousarray(t).reshape(-1)


def dense_marginal(psi: np.ndarray, qubit: int) -> tuple[float, float]:
    """Measurement probabilities (p0, p1) of one qubit in a dense state."""
    psi = np.asarray(psi, dtype=np.complex128)
    n = _qubit_count(psi.size)
    if qubit < 0 or qubit >= n:
        raise DimensionError(f"qubit {qubit} out of range for {n} qubits")
    probs = (np.abs(psi) ** 2).reshape((2,) * n)
    axes = tuple(a for a in range(n) if a != qubit)
    p = probs.sum(axis=axes) if axes else probs
    return float(p[0]), float(p[1])


def dense_fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """|<psi|phi>|^2 between two dense states."""
    psi = np.asarray(psi, dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128)
    if psi.shape != phi.shape:
        raise DimensionError(f"state sizes differ: {psi.shape} vs {phi.shape}")
    _qubit_count(psi.size)
    ip = np.vdot(psi, phi)
    return float(ip.real**2 + ip.imag**2)


def head_forward_dense(state: SeparableState, params: HeadParams) -> SeparableState:
    """Dense reference of the compression head.

    Each layer is simulated on the full 2^w statevector: local gates and the
    controlled gate applied by tensor contraction, target marginals read
    from the dense distribution, and the next (separable by construction)
    state assembled from those marginals before re-densifying for the next
    layer.
    """
    cfg = params.config
    if state.n != cfg.d_in:
        raise DimensionError(f"state has {state.n} qubits, head expects {cfg.d_in}")
    _check_capacity(cfg.d_in)
    current = state
    for layer, pairs in enumerate(schedule(cfg)):
        psi = densify(current)
        for k, (ci, ti) in enumerate(pairs):
            pp = params.pair(layer, k)
            psi = dense_apply(psi, zyz_matrix(pp.u_ctrl), (ci,))
            psi = dense_apply(psi, zyz_matrix(pp.u_tgt), (ti,))
            psi = dense_apply(psi, controlled_matrix(pp.v_controlled), (ci, ti))
        w = current.n
        d = cfg.d_out
        amps = np.array(current.amps[: w - d], copy=True)
        for k, (ci, ti) in enumerate(pairs):
            p0, p1 = dense_marginal(psi, ti)
            amps[ci, 0] = np.sqrt(p0)
            amps[ci, 1] = np.sqrt(p1)
        current = SeparableState(amps)
    return current


@dataclass(frozen=True)
class OracleReport:
    """Worst absolute deviations between fast paths and the dense oracle."""

    n: int
    trials: int
    max_head_dev: float
    max_fidelity_dev: float

    @property
    def max_dev(self) -> float:
        return max(self.max_head_dev, self.max_fidelity_dev)


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n) if n % d == 0]


def oracle_check(n: int, trials: int, seed: int = 0) -> OracleReport:
    """Randomized equivalence sweep of the separable pipeline against the oracle.

    Each trial draws a random vector, tau, output width, and full-range gate
    angles, then compares head output marginals and pairwise fidelity
    against the dense route.
    """
    if n < 2:
        raise DomainError("need at least 2 qubits to exercise the head")
    _check_capacity(n)
    rng = np.random.default_rng(seed)
    divisors = _divisors(n)
    max_head = 0.0
    max_fid = 0.0
    for _ in range(trials):
        vec = rng.normal(size=n)
        tau = float(rng.uniform(0.25, 2.0))
        cfg = EncoderConfig(tau=tau)
        state = encode(vec, cfg)

        d_out = int(rng.choice(divisors))
        hcfg = HeadConfig(n, d_out)
        shape = (hcfg.n_layers, hcfg.d_out, 12)
        params = HeadParams(hcfg, rng.uniform(-np.pi, np.pi, size=shape))
        fast = head_forward(state, params)
        slow = head_forward_dense(state, params)
        dev = float(np.max(np.abs(fast.amps - slow.amps)))
        max_head = max(max_head, dev)

        other = encode(rng.normal(size=n), cfg)
        f_fast = fidelity(state, other)
        f_dense = dense_fidelity(densify(state), densify(other))
        max_fid = max(max_fid, abs(f_fast - f_dense))
    return OracleReport(n=n, trials=trials, max_head_dev=max_head, max_fidelity_dev=max_fid)
