"""Exact gradients of the ranking losses against central finite differences."""

import math

import numpy as np
import pytest

from qproj.autodiff import (
    ClassicalRankingLoss,
    QuantumRankingLoss,
    backward,
    encode_backward,
    encode_batch,
    grad_check,
    softmax_ce,
)
from qproj.encoding import encode, log_fidelity
from qproj.errors import DimensionError, DomainError
from qproj.head import HeadConfig, HeadParams, head_forward
from qproj.training import ranking_loss


def make_quantum(rng, batch=4, d_in=4, d_out=2, **kw):
    q = rng.normal(size=(batch, d_in))
    c = rng.normal(size=(batch, 6, d_in))
    pos = rng.integers(0, 6, size=batch)
    return QuantumRankingLoss(q, c, pos, HeadConfig(d_in, d_out), **kw)


def make_classical(rng, batch=4, d_in=4, d_out=2, **kw):
    q = rng.normal(size=(batch, d_in))
    c = rng.normal(size=(batch, 6, d_in))
    pos = rng.integers(0, 6, size=batch)
    return ClassicalRankingLoss(q, c, pos, d_out, **kw)


def central_diff(f, params, h=1e-5):
    out = np.zeros_like(params)
    for i in range(params.size):
        up, dn = params.copy(), params.copy()
        up[i] += h
        dn[i] -= h
        out[i] = (f(up) - f(dn)) / (2 * h)
    return out


# ---------------------------------------------------------------------------
# shared stages

def test_encode_batch_matches_scalar_encoding():
    rng = np.random.default_rng(40)
    x = rng.normal(size=(3, 5))
    amps, _, _ = encode_batch(x, tau=1.3)
    from qproj.encoding import EncoderConfig

    cfg = EncoderConfig(tau=1.3)
    for b in range(3):
        want = encode(x[b], cfg).amps
        np.testing.assert_allclose(amps[b], want.real, atol=1e-15)


def test_encode_backward_matches_finite_differences():
    rng = np.random.default_rng(41)
    x = rng.normal(size=(2, 3))
    weights = rng.normal(size=(2, 3, 2))

    def f(flat_and_tau):
        xv = flat_and_tau[:-1].reshape(2, 3)
        amps, _, _ = encode_batch(xv, flat_and_tau[-1])
        return float(np.sum(weights * amps))

    tau = 0.9
    amps, tnh, half = encode_batch(x, tau)
    g_tau, g_x = encode_backward(weights, x, tau, tnh, half)
    packed = np.concatenate([x.ravel(), [tau]])
    fd = central_diff(f, packed)
    np.testing.assert_allclose(g_x.ravel(), fd[:-1], atol=1e-9)
    assert g_tau == pytest.approx(fd[-1], abs=1e-9)


def test_softmax_ce_against_direct_formula():
    rng = np.random.default_rng(42)
    logits = rng.normal(scale=3.0, size=(4, 6))
    pos = rng.integers(0, 6, size=4)
    loss, probs = softmax_ce(logits, pos)
    expv = np.exp(logits)
    direct = expv / expv.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(probs, direct, rtol=1e-12)
    want = -np.mean(np.log(direct[np.arange(4), pos]))
    assert loss == pytest.approx(want, rel=1e-12)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)


def test_softmax_ce_stable_at_extreme_logits():
    loss, probs = softmax_ce(np.array([[1000.0, 0.0]]), np.array([0]))
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(probs))


def test_softmax_ce_agrees_with_single_row_ranking_loss():
    logits = np.array([2.0, -1.0, 0.5, 0.0, 1.0, -0.3])
    want = ranking_loss(logits, 2)
    got, _ = softmax_ce(logits[None, :], np.array([2]))
    assert got == pytest.approx(want, rel=1e-14)


# ---------------------------------------------------------------------------
# quantum program: value cross-check and gradients

def test_quantum_value_matches_object_pipeline():
    """The batched loss must equal the same pipeline built from the scalar
    public pieces (encode, head_forward, log_fidelity, softmax)."""
    rng = np.random.default_rng(43)
    prog = make_quantum(rng, batch=3, d_in=6, d_out=2)
    params = prog.init_params(seed=8)
    angles, tau, temp = prog.unpack(params)
    head = HeadParams(prog.config, angles)

    from qproj.encoding import EncoderConfig

    cfg = EncoderConfig(tau=tau)
    rows = []
    for b in range(3):
        zq = head_forward(encode(prog.queries[b], cfg), head)
        row = []
        for m in range(6):
            zc = head_forward(encode(prog.candidates[b, m], cfg), head)
            row.append(log_fidelity(zq, zc) / temp)
        rows.append(row)
    want, _ = softmax_ce(np.array(rows), prog.pos)
    assert prog.value(params) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("dims", [(4, 2), (8, 4)])
def test_quantum_gradient_passes_fd(dims):
    rng = np.random.default_rng(44)
    prog = make_quantum(rng, batch=4, d_in=dims[0], d_out=dims[1])
    res = grad_check(prog, prog.init_params(seed=2))
    assert res.passed, f"max rel err {res.max_rel_err:.3e} at {res.worst_param}"


def test_quantum_gradient_at_identical_candidates_vanishes():
    # every candidate equals the query, so all logits tie and nothing moves
    rng = np.random.default_rng(45)
    q = rng.normal(size=(3, 4))
    c = np.repeat(q[:, None, :], 6, axis=1)
    prog = QuantumRankingLoss(q, c, np.zeros(3, dtype=np.int64), HeadConfig(4, 2))
    params = prog.init_params(seed=1)
    loss, grad = prog.value_and_grad(params)
    assert loss == pytest.approx(math.log(6.0), rel=1e-12)
    assert np.max(np.abs(grad)) < 1e-10


def test_quantum_gradient_finite_at_saturated_inputs():
    rng = np.random.default_rng(46)
    q = rng.choice([-40.0, 40.0], size=(3, 4))
    c = rng.choice([-40.0, 40.0], size=(3, 6, 4))
    prog = QuantumRankingLoss(q, c, np.zeros(3, dtype=np.int64), HeadConfig(4, 2))
    loss, grad = prog.value_and_grad(prog.init_params(seed=4))
    assert math.isfinite(loss)
    assert np.all(np.isfinite(grad))


def test_quantum_fixed_temperature_zeroes_that_slot():
    rng = np.random.default_rng(47)
    prog = make_quantum(rng, train_temperature=False)
    params = prog.init_params(seed=5)
    _, grad = prog.value_and_grad(params)
    assert grad[-1] == 0.0
    fd = central_diff(prog.value, params)
    np.testing.assert_allclose(grad[:-1], fd[:-1], atol=1e-7)
    assert abs(fd[-1]) > 1e-3  # the loss itself does vary with temperature


def test_quantum_param_names():
    rng = np.random.default_rng(48)
    prog = make_quantum(rng, d_in=4, d_out=2)
    names = prog.names
    assert len(names) == prog.n_params == 26
    assert names[0] == "layer0/pair0/u_ctrl/alpha"
    assert names[11] == "layer0/pair0/v/delta"
    assert names[-2:] == ("tau", "temperature")


def test_quantum_input_validation():
    rng = np.random.default_rng(49)
    q = rng.normal(size=(2, 4))
    c = rng.normal(size=(2, 6, 4))
    pos = np.zeros(2, dtype=np.int64)
    with pytest.raises(DimensionError):
        QuantumRankingLoss(q, c, pos, HeadConfig(8, 4))
    with pytest.raises(DimensionError):
        QuantumRankingLoss(q, c[:1], pos, HeadConfig(4, 2))
    with pytest.raises(DimensionError):
        QuantumRankingLoss(q, c, np.array([0, 6]), HeadConfig(4, 2))
    q_bad = q.copy()
    q_bad[0, 0] = np.inf
    with pytest.raises(DomainError):
        QuantumRankingLoss(q_bad, c, pos, HeadConfig(4, 2))


def test_quantum_rejects_nonpositive_temperature():
    rng = np.random.default_rng(50)
    prog = make_quantum(rng)
    params = prog.init_params(seed=0)
    params[-1] = 0.0
    with pytest.raises(DomainError):
        prog.value(params)


# ---------------------------------------------------------------------------
# log-fidelity input gradient, built from the exported pieces

def test_logfid_input_gradient_sign_and_value():
    """d log_fid / d u points toward closing the angle gap (and matches FD)."""
    eps = 1e-12
    for u, v in ((0.3, -0.2), (-1.0, 0.5), (2.0, 0.1), (0.0, 1.0)):
        x = np.array([[u], [v]])
        amps, tnh, half = encode_batch(x, tau=1.0)
        ip = amps[0, 0, 0] * amps[1, 0, 0] + amps[0, 0, 1] * amps[1, 0, 1]
        g_amps = np.zeros_like(amps)
        g_amps[0, 0] = (2.0 * ip / (ip * ip + eps)) * amps[1, 0]
        _, g_x = encode_backward(g_amps, x, 1.0, tnh, half)

        def f(uu):
            return log_fidelity(encode(np.array([uu])), encode(np.array([v])))

        h = 1e-6
        fd = (f(u + h) - f(u - h)) / (2 * h)
        assert g_x[0, 0] == pytest.approx(fd, abs=1e-7)
        tu, tv = 2 * half[0, 0], 2 * half[1, 0]
        if tu != tv:
            assert math.copysign(1.0, g_x[0, 0]) == -math.copysign(1.0, tu - tv)


# ---------------------------------------------------------------------------
# classical program

def test_classical_value_matches_direct_formula():
    rng = np.random.default_rng(51)
    prog = make_classical(rng, batch=3, d_in=5, d_out=3)
    params = prog.init_params(seed=6)
    w, bias, temp = prog.unpack(params)
    logits = np.zeros((3, 6))
    for b in range(3):
        hq = np.tanh(w @ prog.queries[b] + bias)
        for m in range(6):
            hc = np.tanh(w @ prog.candidates[b, m] + bias)
            logits[b, m] = hq @ hc / (np.linalg.norm(hq) * np.linalg.norm(hc) * temp)
    want, _ = softmax_ce(logits, prog.pos)
    assert prog.value(params) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("dims", [(4, 2), (8, 4)])
def test_classical_gradient_passes_fd(dims):
    rng = np.random.default_rng(52)
    prog = make_classical(rng, batch=4, d_in=dims[0], d_out=dims[1])
    res = grad_check(prog, prog.init_params(seed=3))
    assert res.passed, f"max rel err {res.max_rel_err:.3e} at {res.worst_param}"


def test_classical_gradient_at_identical_candidates_vanishes():
    rng = np.random.default_rng(53)
    q = rng.normal(size=(3, 4))
    c = np.repeat(q[:, None, :], 6, axis=1)
    prog = ClassicalRankingLoss(q, c, np.zeros(3, dtype=np.int64), d_out=2)
    loss, grad = prog.value_and_grad(prog.init_params(seed=1))
    assert loss == pytest.approx(math.log(6.0), rel=1e-12)
    assert np.max(np.abs(grad)) < 1e-10


def test_classical_param_names():
    rng = np.random.default_rng(54)
    prog = make_classical(rng, d_in=3, d_out=2)
    assert len(prog.names) == prog.n_params == 9
    assert prog.names[0] == "W[0,0]"
    assert prog.names[-1] == "temperature"


# ---------------------------------------------------------------------------
# the metric-only variant (no head layers)

def test_headless_program_has_two_params():
    rng = np.random.default_rng(55)
    q = rng.normal(size=(4, 3))
    c = rng.normal(size=(4, 6, 3))
    prog = QuantumRankingLoss(q, c, np.zeros(4, dtype=np.int64), HeadConfig(3, 3))
    assert prog.n_params == 2
    assert prog.names == ("tau", "temperature")
    res = grad_check(prog, prog.init_params(seed=2))
    assert res.passed


# ---------------------------------------------------------------------------
# the finite-difference referee itself

class Quadratic:
    """f(p) = p0^2 + 3 p1, with an optional deliberate gradient bug."""

    names = ("a", "b")
    n_params = 2

    def __init__(self, broken=False):
        self.broken = broken

    def value(self, params):
        return float(params[0] ** 2 + 3.0 * params[1])

    def value_and_grad(self, params):
        grad = np.array([2.0 * params[0], 3.0])
        if self.broken:
            grad[1] = -3.0
        return self.value(params), grad


def test_grad_check_accepts_exact_gradient():
    res = grad_check(Quadratic(), np.array([3.0, -1.0]))
    assert res.passed
    assert res.max_rel_err < 1e-9
    np.testing.assert_allclose(res.analytic, [6.0, 3.0])


def test_grad_check_flags_wrong_gradient():
    res = grad_check(Quadratic(broken=True), np.array([3.0, -1.0]))
    assert not res.passed
    assert res.worst_param == "b"
    assert res.max_rel_err > 1.0


def test_grad_check_custom_tolerance():
    assert not grad_check(Quadratic(), np.array([1.0, 1.0]), tol=0.0).passed


def test_backward_report():
    rng = np.random.default_rng(56)
    prog = make_quantum(rng)
    report = backward(prog, prog.init_params(seed=7))
    assert report.values.shape == (prog.n_params,)
    assert report.names == prog.names
    assert report.max_abs_grad == pytest.approx(np.max(np.abs(report.values)))
