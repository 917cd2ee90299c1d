"""Hand-derived reverse-mode differentiation of the ranking pipeline.

Losses are exposed as program objects: a flat parameter vector in, a scalar
loss (and its exact gradient) out. Two programs exist, one per model
family. QuantumRankingLoss differentiates through

    encode -> compression head -> log-fidelity -> temperature -> softmax CE

with the head stage delegated to the batched kernels; complex intermediates
are treated as independent real and imaginary parts throughout, so every
gradient is an ordinary real derivative and central finite differences must
reproduce it. ClassicalRankingLoss covers the tanh-affine baseline with
cosine scoring. grad_check is the referee: central differences with step h
on every coordinate, relative error |ad - fd| / max(1, |ad|, |fd|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError
from .head import HeadConfig

HALF_PI = math.pi / 2.0


def _ensure_finite(stage: str, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"non-finite values produced by stage {stage!r}")


# ---------------------------------------------------------------------------
# shared stages

def encode_batch(x: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized qubit encoding of a (M, d) batch.

    Returns (amps (M, d, 2) float64, tanh values, half-angles); the latter
    two are the cache for encode_backward.
    """
    tnh = np.tanh(tau * x)
    half = (tnh * HALF_PI + HALF_PI) / 2.0
    amps = np.empty(x.shape + (2,), dtype=np.float64)
    amps[..., 0] = np.cos(half)
    amps[..., 1] = -np.sin(half)
    return amps, tnh, half


def encode_backward(
    g_amps: np.ndarray, x: np.ndarray, tau: float, tnh: np.ndarray, half: np.ndarray
) -> tuple[float, np.ndarray]:
    """Pull amplitude gradients back to (d loss / d tau, d loss / d x)."""
    g_theta = -0.5 * (g_amps[..., 0] * np.sin(half) + g_amps[..., 1] * np.cos(half))
    sech2 = 1.0 - tnh**2
    g_tau = float(np.sum(g_theta * HALF_PI * x * sech2))
    g_x = g_theta * HALF_PI * tau * sech2
    return g_tau, g_x


def softmax_ce(logits: np.ndarray, pos: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of the positive candidate under a softmax over logits.

    logits: (B, M), pos: (B,) integer index of the positive. Returns
    (loss, probs) with probs the (B, M) softmax, computed logsumexp-stably.
    """
    shift = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shift)
    denom = expv.sum(axis=1, keepdims=True)
    probs = expv / denom
    rows = np.arange(logits.shape[0])
    logp = shift[rows, pos] - np.log(denom[:, 0])
    return float(-np.mean(logp)), probs


# ---------------------------------------------------------------------------
# programs

class LossProgram(Protocol):
    """Scalar loss of a flat parameter vector, with exact gradient."""

    @property
    def n_params(self) -> int: ...

    @property
    def names(self) -> tuple[str, ...]: ...

    def value(self, params: np.ndarray) -> float: ...

    def value_and_grad(self, params: np.ndarray) -> tuple[float, np.ndarray]: ...


class QuantumRankingLoss:
    """Ranking cross-entropy through encoding, compression head, and log-fidelity.

    Parameter layout: all head angles in (layer, pair, 12) order, then tau,
    then temperature. A zero-layer head config turns this into the
    metric-only variant (tau and temperature alone).
    """

    def __init__(
        self,
        queries: np.ndarray,
        candidates: np.ndarray,
        pos: np.ndarray,
        head_config: HeadConfig,
        eps: float = 1e-12,
        train_temperature: bool = True,
    ):
        queries = np.asarray(queries, dtype=np.float64)
        candidates = np.asarray(candidates, dtype=np.float64)
        pos = np.asarray(pos, dtype=np.int64)
        if queries.ndim != 2 or candidates.ndim != 3:
            raise DimensionError("queries must be (B, d), candidates (B, M, d)")
        if candidates.shape[0] != queries.shape[0] or candidates.shape[2] != queries.shape[1]:
            raise DimensionError("queries and candidates disagree on batch or dim")
        if queries.shape[1] != head_config.d_in:
            raise DimensionError(
                f"embeddings have dim {queries.shape[1]}, head expects {head_config.d_in}"
            )
        if pos.shape != (queries.shape[0],) or np.any(pos < 0) or np.any(pos >= candidates.shape[1]):
            raise DimensionError("pos must hold a valid candidate index per batch row")
        if not (np.all(np.isfinite(queries)) and np.all(np.isfinite(candidates))):
            raise DomainError("embeddings must be finite")
        self.queries = queries
        self.candidates = candidates
        self.pos = pos
        self.config = head_config
        self.eps = float(eps)
        self.train_temperature = bool(train_temperature)
        b, m, d = candidates.shape
        self._flat = np.vstack([queries, candidates.reshape(b * m, d)])
        self._n_angles = head_config.n_layers * head_config.d_out * 12

    @property
    def n_params(self) -> int:
        return self._n_angles + 2

    @property
    def names(self) -> tuple[str, ...]:
        gates = ("u_ctrl", "u_tgt", "v")
        angles = ("alpha", "beta", "gamma", "delta")
        out = [
            f"layer{l}/pair{k}/{g}/{a}"
            for l in range(self.config.n_layers)
            for k in range(self.config.d_out)
            for g in gates
            for a in angles
        ]
        out.append("tau")
        out.append("temperature")
        return tuple(out)

    def init_params(self, seed: int, tau: float = 1.0, temperature: float = 0.05) -> np.ndarray:
        rng = np.random.default_rng(seed)
        angles = rng.uniform(-math.pi / 8.0, math.pi / 8.0, size=self._n_angles)
        return np.concatenate([angles, [tau, temperature]])

    def unpack(self, params: np.ndarray) -> tuple[np.ndarray, float, float]:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise DimensionError(f"expected {self.n_params} parameters, got {params.shape}")
        cfg = self.config
        angles = params[: self._n_angles].reshape(cfg.n_layers, cfg.d_out, 12)
        return angles, float(params[-2]), float(params[-1])

    def _forward(self, params: np.ndarray):
        angles, tau, temp = self.unpack(params)
        if temp <= 0.0:
            raise DomainError("temperature must be positive")
        b, m, _ = self.candidates.shape
        d_out = self.config.d_out
        amps, tnh, half = encode_batch(self._flat, tau)
        gates = kernels.build_gates(angles)
        z, cache = kernels.head_forward(amps, gates, d_out)
        zq = z[:b]
        zc = z[b:].reshape(b, m, d_out, 2)
        ip = np.einsum("bpx,bmpx->bmp", zq, zc)
        o = ip**2
        lf = np.sum(np.log(o + self.eps), axis=2)
        logits = lf / temp
        loss, probs = softmax_ce(logits, self.pos)
        return loss, (angles, tau, temp, tnh, half, gates, cache, zq, zc, ip, o, lf, probs)

    def value(self, params: np.ndarray) -> float:
        return self._forward(params)[0]

    def value_and_grad(self, params: np.ndarray) -> tuple[float, np.ndarray]:
        loss, ctx = self._forward(params)
        angles, tau, temp, tnh, half, gates, cache, zq, zc, ip, o, lf, probs = ctx
        b, m, _ = self.candidates.shape
        d_out = self.config.d_out

        g_logits = probs.copy()
        g_logits[np.arange(b), self.pos] -= 1.0
        g_logits /= b
        _ensure_finite("softmax_ce", g_logits)

        g_temp = -float(np.sum(g_logits * lf)) / temp**2 if self.train_temperature else 0.0
        g_lf = g_logits / temp
        g_ip = 2.0 * ip * (g_lf[:, :, None] / (o + self.eps))
        g_zq = np.einsum("bmp,bmpx->bpx", g_ip, zc)
        g_zc = g_ip[..., None] * zq[:, None, :, :]
        _ensure_finite("log_fidelity", g_zq, g_zc)

        g_z = np.concatenate([g_zq, g_zc.reshape(b * m, d_out, 2)], axis=0)
        g_amps, g_gates = kernels.head_backward(g_z, gates, cache, self.config.d_in)
        g_angles = kernels.angle_grads(g_gates, kernels.build_gate_derivatives(angles))
        _ensure_finite("head", g_amps, g_angles)

        g_tau, _ = encode_backward(g_amps, self._flat, tau, tnh, half)
        _ensure_finite("encode", np.array([g_tau, g_temp]))

        grad = np.concatenate([g_angles.reshape(-1), [g_tau, g_temp]])
        return loss, grad


class ClassicalRankingLoss:
    """Ranking cross-entropy through the tanh-affine projection and cosine scoring.

    Parameter layout: W row-major (d_out, d_in), then bias (d_out,), then
    temperature.
    """

    def __init__(
        self,
        queries: np.ndarray,
        candidates: np.ndarray,
        pos: np.ndarray,
        d_out: int,
        train_temperature: bool = True,
    ):
        queries = np.asarray(queries, dtype=np.float64)
        candidates = np.asarray(candidates, dtype=np.float64)
        pos = np.asarray(pos, dtype=np.int64)
        if queries.ndim != 2 or candidates.ndim != 3:
            raise DimensionError("queries must be (B, d), candidates (B, M, d)")
        if candidates.shape[0] != queries.shape[0] or candidates.shape[2] != queries.shape[1]:
            raise DimensionError("queries and candidates disagree on batch or dim")
        if d_out < 1:
            raise DimensionError("d_out must be positive")
        if not (np.all(np.isfinite(queries)) and np.all(np.isfinite(candidates))):
            raise DomainError("embeddings must be finite")
        self.queries = queries
        self.candidates = candidates
        self.pos = pos
        self.d_in = queries.shape[1]
        self.d_out = int(d_out)
        self.train_temperature = bool(train_temperature)
        b, m, d = candidates.shape
        self._flat = np.vstack([queries, candidates.reshape(b * m, d)])

    @property
    def n_params(self) -> int:
        return self.d_out * self.d_in + self.d_out + 1

    @property
    def names(self) -> tuple[str, ...]:
        out = [f"W[{i},{j}]" for i in range(self.d_out) for j in range(self.d_in)]
        out += [f"b[{i}]" for i in range(self.d_out)]
        out.append("temperature")
        return tuple(out)

    def init_params(self, seed: int, temperature: float = 0.05) -> np.ndarray:
        rng = np.random.default_rng(seed)
        bound = 1.0 / math.sqrt(self.d_in)
        wb = rng.uniform(-bound, bound, size=self.d_out * self.d_in + self.d_out)
        return np.concatenate([wb, [temperature]])

    def unpack(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise DimensionError(f"expected {self.n_params} parameters, got {params.shape}")
        nw = self.d_out * self.d_in
        w = params[:nw].reshape(self.d_out, self.d_in)
        bias = params[nw : nw + self.d_out]
        return w, bias, float(params[-1])

    def _forward(self, params: np.ndarray):
        w, bias, temp = self.unpack(params)
        if temp <= 0.0:
            raise DomainError("temperature must be positive")
        b, m, _ = self.candidates.shape
        pre = self._flat @ w.T + bias
        h = np.tanh(pre)
        hq = h[:b]
        hc = h[b:].reshape(b, m, self.d_out)
        nq = np.linalg.norm(hq, axis=1)
        nc = np.linalg.norm(hc, axis=2)
        if np.any(nq == 0.0) or np.any(nc == 0.0):
            raise DomainError("cosine similarity undefined for a zero projection")
        dots = np.einsum("bp,bmp->bm", hq, hc)
        cos = dots / (nq[:, None] * nc)
        logits = cos / temp
        loss, probs = softmax_ce(logits, self.pos)
        return loss, (w, temp, h, hq, hc, nq, nc, dots, cos, probs)

    def value(self, params: np.ndarray) -> float:
        return self._forward(params)[0]

    def value_and_grad(self, params: np.ndarray) -> tuple[float, np.ndarray]:
        loss, ctx = self._forward(params)
        w, temp, h, hq, hc, nq, nc, dots, cos, probs = ctx
        b, m, _ = self.candidates.shape

        g_logits = probs.copy()
        g_logits[np.arange(b), self.pos] -= 1.0
        g_logits /= b
        g_temp = -float(np.sum(g_logits * cos)) / temp**2 if self.train_temperature else 0.0
        g_cos = g_logits / temp
        _ensure_finite("softmax_ce", g_cos)

        # d cos / d hq = hc/(|hq||hc|) - cos * hq/|hq|^2, symmetrically for hc
        inv = 1.0 / (nq[:, None] * nc)
        g_hq = np.einsum("bm,bmp->bp", g_cos * inv, hc) - (
            np.sum(g_cos * cos, axis=1) / nq**2
        )[:, None] * hq
        g_hc = (g_cos * inv)[..., None] * hq[:, None, :] - (
            (g_cos * cos / nc**2)[..., None] * hc
        )
        _ensure_finite("cosine", g_hq, g_hc)

        g_h = np.concatenate([g_hq, g_hc.reshape(b * m, self.d_out)], axis=0)
        g_pre = g_h * (1.0 - h**2)
        g_w = g_pre.T @ self._flat
        g_bias = g_pre.sum(axis=0)
        _ensure_finite("projection", g_w, g_bias)

        grad = np.concatenate([g_w.reshape(-1), g_bias, [g_temp]])
        return loss, grad


# ---------------------------------------------------------------------------
# reporting and the finite-difference referee

@dataclass(frozen=True)
class GradientReport:
    """Exact gradient of a loss program at a point."""

    values: np.ndarray
    names: tuple[str, ...]
    max_abs_grad: float
    checked_against: "GradCheckResult | None" = None


@dataclass(frozen=True)
class GradCheckResult:
    """Outcome of a central-finite-difference comparison."""

    passed: bool
    max_rel_err: float
    worst_param: str
    analytic: np.ndarray
    numeric: np.ndarray


def backward(program: LossProgram, params: np.ndarray) -> GradientReport:
    """Exact reverse-mode gradient of a loss program, wrapped in a report."""
    _, grad = program.value_and_grad(params)
    return GradientReport(
        values=grad,
        names=program.names,
        max_abs_grad=float(np.max(np.abs(grad))) if grad.size else 0.0,
    )


def grad_check(
    program: LossProgram,
    params: np.ndarray,
    h: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckResult:
    """Compare the program's gradient against central finite differences.

    Relative error per coordinate is |ad - fd| / max(1, |ad|, |fd|); the
    check passes when the worst coordinate stays within tol.
    """
    if not (h > 0.0 and math.isfinite(h)):
        raise DomainError("finite-difference step h must be positive")
    params = np.asarray(params, dtype=np.float64)
    _, analytic = program.value_and_grad(params)
    numeric = np.empty_like(analytic)
    for i in range(params.size):
        bump = params.copy()
        bump[i] = params[i] + h
        up = program.value(bump)
        bump[i] = params[i] - h
        down = program.value(bump)
        numeric[i] = (up - down) / (2.0 * h)
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    rel = np.abs(analytic - numeric) / denom
    worst = int(np.argmax(rel)) if rel.size else 0
    names = program.names
    return GradCheckResult(
        passed=bool(np.all(rel <= tol)),
        max_rel_err=float(rel[worst]) if rel.size else 0.0,
        worst_param=names[worst] if rel.size else "",
        analytic=analytic,
        numeric=numeric,
    )
