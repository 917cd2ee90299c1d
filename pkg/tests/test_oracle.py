"""Dense statevector oracle: an independent 2^n implementation of the head."""

import numpy as np
import pytest

from qproj.circuit import PAULI_X_PARAMS, GateParams, zyz_matrix
from qproj.encoding import SeparableState, encode
from qproj.errors import CapacityError, DimensionError
from qproj.head import ANGLES_PER_PAIR, HeadConfig, HeadParams, head_forward, init_params
from qproj.oracle import (
    MAX_QUBITS,
    dense_apply,
    dense_fidelity,
    dense_marginal,
    densify,
    head_forward_dense,
    oracle_check,
)

SQ2 = 0.7071067811865476


# ---------------------------------------------------------------------------
# densify

def test_densify_single_qubit():
    state = encode(np.array([0.7]))
    np.testing.assert_allclose(densify(state), state.amps[0], atol=1e-15)


def test_densify_two_qubits_msb_first():
    # |1> (x) |0> must land on index 2 = binary 10
    amps = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    psi = densify(SeparableState(amps))
    np.testing.assert_allclose(psi, [0, 0, 1, 0], atol=0)


def test_densify_midpoint_encoding():
    psi = densify(encode(np.zeros(2)))
    np.testing.assert_allclose(psi, [0.5, -0.5, -0.5, 0.5], atol=1e-15)


def test_densify_norm():
    rng = np.random.default_rng(90)
    psi = densify(encode(rng.normal(size=10)))
    assert psi.shape == (1024,)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


def test_densify_capacity_guard():
    amps = np.tile([1.0 + 0j, 0j], (MAX_QUBITS + 1, 1))
    with pytest.raises(CapacityError):
        densify(SeparableState(amps))


# ---------------------------------------------------------------------------
# dense operations

def test_dense_apply_x_on_qubit_zero():
    psi = np.zeros(4, dtype=np.complex128)
    psi[0] = 1.0  # |00>
    x = zyz_matrix(GateParams(*PAULI_X_PARAMS))
    out = dense_apply(psi, x, (0,))
    np.testing.assert_allclose(out, [0, 0, 1, 0], atol=1e-15)  # |10>


def test_dense_apply_x_on_qubit_one():
    psi = np.zeros(4, dtype=np.complex128)
    psi[0] = 1.0
    x = zyz_matrix(GateParams(*PAULI_X_PARAMS))
    out = dense_apply(psi, x, (1,))
    np.testing.assert_allclose(out, [0, 1, 0, 0], atol=1e-15)  # |01>


def test_dense_apply_preserves_norm():
    rng = np.random.default_rng(91)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    u, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    out = dense_apply(psi, u, (0, 2))
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)


def test_dense_apply_two_qubit_matches_kron():
    rng = np.random.default_rng(92)
    state = encode(rng.normal(size=2))
    psi = densify(state)
    u, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    out = dense_apply(psi, u, (0, 1))
    np.testing.assert_allclose(out, u @ psi, atol=1e-13)


def test_dense_apply_validates():
    psi = np.array([1.0, 0.0, 0.0], dtype=np.complex128)  # not a power of two
    with pytest.raises(DimensionError):
        dense_apply(psi, np.eye(2), (0,))


def test_dense_marginal_product_state():
    rng = np.random.default_rng(93)
    vec = rng.normal(size=4)
    state = encode(vec)
    psi = densify(state)
    for q in range(4):
        p0, p1 = dense_marginal(psi, q)
        assert p0 == pytest.approx(abs(state.amps[q, 0]) ** 2, abs=1e-12)
        assert p1 == pytest.approx(abs(state.amps[q, 1]) ** 2, abs=1e-12)
        assert p0 + p1 == pytest.approx(1.0, abs=1e-12)


def test_dense_marginal_after_entangling():
    # CNOT on the midpoint encoding gives a uniform target marginal
    psi = densify(encode(np.zeros(2)))
    cnot = np.eye(4, dtype=np.complex128)
    cnot[2:, 2:] = zyz_matrix(GateParams(*PAULI_X_PARAMS))
    out = dense_apply(psi, cnot, (0, 1))
    p0, p1 = dense_marginal(out, 1)
    assert (p0, p1) == pytest.approx((0.5, 0.5), abs=1e-12)


def test_dense_fidelity_matches_product_form():
    from qproj.encoding import fidelity

    rng = np.random.default_rng(94)
    a, b = rng.normal(size=(2, 5))
    sa, sb = encode(a), encode(b)
    got = dense_fidelity(densify(sa), densify(sb))
    assert got == pytest.approx(fidelity(sa, sb), rel=1e-11)


def test_dense_fidelity_extremes():
    e0 = np.array([1, 0, 0, 0], dtype=np.complex128)
    e3 = np.array([0, 0, 0, 1], dtype=np.complex128)
    assert dense_fidelity(e0, e0) == pytest.approx(1.0)
    assert dense_fidelity(e0, e3) == 0.0


# ---------------------------------------------------------------------------
# the dense head and the sweep

def test_dense_head_identity_gates():
    rng = np.random.default_rng(95)
    cfg = HeadConfig(6, 2)
    params = HeadParams(cfg, np.zeros((2, 2, ANGLES_PER_PAIR)))
    state = encode(rng.normal(size=6))
    out = head_forward_dense(state, params)
    np.testing.assert_allclose(out.amps, np.abs(state.amps[4:]), atol=1e-12)


def test_dense_head_matches_fast_path_once():
    rng = np.random.default_rng(96)
    cfg = HeadConfig(8, 2)
    params = HeadParams(
        cfg, rng.uniform(-np.pi, np.pi, size=(cfg.n_layers, cfg.d_out, ANGLES_PER_PAIR))
    )
    state = encode(rng.normal(size=8))
    fast = head_forward(state, params)
    dense = head_forward_dense(state, params)
    np.testing.assert_allclose(dense.amps, fast.amps, atol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_oracle_sweep_small(n):
    report = oracle_check(n, trials=25, seed=n)
    assert report.n == n
    assert report.trials == 25
    assert report.max_dev <= 1e-10


def test_oracle_check_rejects_silly_sizes():
    with pytest.raises(CapacityError):
        oracle_check(MAX_QUBITS + 2, trials=1)
