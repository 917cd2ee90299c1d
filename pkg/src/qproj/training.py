"""Training loop and trained-model wrappers.

A model is either quantum (encoding plus optional compression head, scored
by log-fidelity) or classical (tanh-affine projection, scored by cosine).
Ranking samples carry one positive and five negatives; the loss is softmax
cross-entropy of the positive under temperature-scaled scores, optimized
with Adam. Everything stochastic flows from TrainConfig.seed, so a run is
reproducible file-for-file.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .autodiff import ClassicalRankingLoss, QuantumRankingLoss, encode_batch, softmax_ce
from .baseline import (
    ClassicalHeadParams,
    cosine_similarity,
    load_classical_json,
    save_classical_json,
)
from .encoding import SeparableState, log_fidelity
from .errors import ConfigError, DataError, DimensionError, DomainError, TrainingDivergence
from .head import HeadConfig, HeadParams, load_head_json, save_head_json

HEAD_KINDS = ("quantum", "classical", "none")
N_NEGATIVES = 5
TEMPERATURE_FLOOR = 1e-4


@dataclass(frozen=True)
class TrainingSample:
    """One ranking example: a query, its positive, and five negatives."""

    query_id: str
    pos_id: str
    neg_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "neg_ids", tuple(self.neg_ids))
        if len(self.neg_ids) != N_NEGATIVES:
            raise ConfigError(f"expected {N_NEGATIVES} negatives, got {len(self.neg_ids)}")
        if self.pos_id in self.neg_ids:
            raise ConfigError(f"positive {self.pos_id!r} also appears as a negative")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    head_kind: str = "quantum"
    d_out: int | None = None
    lr: float = 0.02
    batch_size: int = 16
    max_epochs: int = 20
    seed: int = 42
    temperature: float = 0.05
    train_temperature: bool = True
    tau: float = 1.0
    eps: float = 1e-12

    def __post_init__(self) -> None:
        if self.head_kind not in HEAD_KINDS:
            raise ConfigError(f"head_kind must be one of {HEAD_KINDS}, got {self.head_kind!r}")
        if not (0.0 < self.lr < 1.0):
            raise ConfigError("lr must lie in (0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be non-negative")
        if not (self.temperature > 0.0 and math.isfinite(self.temperature)):
            raise ConfigError("temperature must be positive and finite")
        if self.head_kind in ("quantum", "classical") and (self.d_out is None or self.d_out < 1):
            raise ConfigError(f"head_kind {self.head_kind!r} needs a positive d_out")


# ---------------------------------------------------------------------------
# scoring

def ranking_loss(logits: np.ndarray, pos_index: int) -> float:
    """Cross-entropy of the positive under a softmax over one logit vector."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size == 0:
        raise DimensionError("logits must be a non-empty 1-d vector")
    if not 0 <= pos_index < logits.size:
        raise DimensionError(f"pos_index {pos_index} out of range")
    if not np.all(np.isfinite(logits)):
        raise DomainError("logits must be finite")
    loss, _ = softmax_ce(logits[None, :], np.array([pos_index]))
    return loss


def score(q, d, cfg: TrainConfig) -> float:
    """Temperature-scaled similarity of two already-projected representations.

    Quantum kinds take SeparableStates and return log-fidelity over
    temperature; the classical kind takes real vectors and returns cosine
    over temperature.
    """
    if cfg.head_kind in ("quantum", "none"):
        if not (isinstance(q, SeparableState) and isinstance(d, SeparableState)):
            raise DimensionError("quantum scoring expects SeparableState inputs")
        return log_fidelity(q, d, cfg.eps) / cfg.temperature
    return cosine_similarity(np.asarray(q), np.asarray(d)) / cfg.temperature


def _logfid_scores(zq: np.ndarray, zc: np.ndarray, eps: float) -> np.ndarray:
    """Log-fidelity of one projected query (P, 2) against (M, P, 2) candidates."""
    ip = np.einsum("px,mpx->mp", zq, zc)
    return np.sum(np.log(ip**2 + eps), axis=1)


def _cosine_scores(hq: np.ndarray, hc: np.ndarray) -> np.ndarray:
    nq = np.linalg.norm(hq)
    nc = np.linalg.norm(hc, axis=1)
    if nq == 0.0 or np.any(nc == 0.0):
        raise DomainError("cosine similarity undefined for a zero projection")
    return (hc @ hq) / (nq * nc)


# ---------------------------------------------------------------------------
# trained models

@dataclass
class QuantumModel:
    """Encoding plus optional compression head, scored by log-fidelity."""

    config: HeadConfig
    head: HeadParams | None
    tau: float = 1.0
    eps: float = 1e-12

    def __post_init__(self) -> None:
        if self.head is None and self.config.n_layers != 0:
            raise ConfigError("a non-identity head config needs head params")
        if self.head is not None and self.head.config != self.config:
            raise ConfigError("head params and config disagree")

    @property
    def kind(self) -> str:
        return "quantum" if self.config.n_layers > 0 else "none"

    @property
    def d_in(self) -> int:
        return self.config.d_in

    def project_batch(self, vecs: np.ndarray) -> np.ndarray:
        """Compress (M, d_in) embeddings to (M, d_out, 2) output amplitudes."""
        vecs = np.atleast_2d(np.asarray(vecs, dtype=np.float64))
        if vecs.shape[1] != self.config.d_in:
            raise DimensionError(f"expected dim {self.config.d_in}, got {vecs.shape[1]}")
        amps, _, _ = encode_batch(vecs, self.tau)
        if self.head is None:
            return amps
        gates = kernels.build_gates(self.head.angles)
        out, _ = kernels.head_forward(amps, gates, self.config.d_out)
        return out

    def scores(self, q_vec: np.ndarray, cand_vecs: np.ndarray) -> np.ndarray:
        """Log-fidelity scores of one query embedding against candidate rows."""
        zq = self.project_batch(np.asarray(q_vec)[None, :])[0]
        zc = self.project_batch(cand_vecs)
        return _logfid_scores(zq, zc, self.eps)

    def save(self, path: str) -> None:
        save_head_json(path, self.head, self.tau, self.config)


@dataclass
class ClassicalModel:
    """tanh-affine projection scored by cosine similarity."""

    params: ClassicalHeadParams

    @property
    def kind(self) -> str:
        return "classical"

    @property
    def d_in(self) -> int:
        return self.params.d_in

    def project_batch(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.atleast_2d(np.asarray(vecs, dtype=np.float64))
        if vecs.shape[1] != self.params.d_in:
            raise DimensionError(f"expected dim {self.params.d_in}, got {vecs.shape[1]}")
        return np.tanh(vecs @ self.params.weights.T + self.params.bias)

    def scores(self, q_vec: np.ndarray, cand_vecs: np.ndarray) -> np.ndarray:
        hq = self.project_batch(np.asarray(q_vec)[None, :])[0]
        hc = self.project_batch(cand_vecs)
        return _cosine_scores(hq, hc)

    def save(self, path: str) -> None:
        save_classical_json(path, self.params)


Model = QuantumModel | ClassicalModel


def load_model(path: str) -> Model:
    """Load either model flavor, dispatching on the persisted format tag."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError("json", f"{path}: not valid JSON ({exc})") from exc
    fmt = doc.get("format") if isinstance(doc, dict) else None
    if fmt == "qproj-head-v1":
        head, tau, config = load_head_json(path)
        return QuantumModel(config=config, head=head, tau=tau)
    if fmt == "qproj-classical-v1":
        return ClassicalModel(params=load_classical_json(path))
    raise DataError("format", f"{path}: unrecognized model format {fmt!r}")


# ---------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, n_params: int) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params))


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, lr: float) -> np.ndarray:
    """One bias-corrected Adam update; mutates state, returns new params."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise DimensionError("params, grads, and state shapes disagree")
    if not np.all(np.isfinite(grads)):
        raise DomainError("non-finite gradient handed to adam_step")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads**2
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------------------
# training

def _sample_arrays(
    store, samples: Sequence[TrainingSample]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Materialize (queries (N, d), candidates (N, 6, d), pos (N,)) from a store."""
    if not samples:
        raise DataError("empty", "no training samples")
    n = len(samples)
    d = store.dim
    queries = np.empty((n, d))
    cands = np.empty((n, 1 + N_NEGATIVES, d))
    for i, s in enumerate(samples):
        queries[i] = store[s.query_id]
        cands[i, 0] = store[s.pos_id]
        for j, nid in enumerate(s.neg_ids):
            cands[i, 1 + j] = store[nid]
    return queries, cands, np.zeros(n, dtype=np.int64)


def _make_program(queries, cands, pos, cfg: TrainConfig):
    d_in = queries.shape[1]
    if cfg.head_kind == "classical":
        return ClassicalRankingLoss(
            queries, cands, pos, cfg.d_out, train_temperature=cfg.train_temperature
        )
    d_out = d_in if cfg.head_kind == "none" else cfg.d_out
    return QuantumRankingLoss(
        queries,
        cands,
        pos,
        HeadConfig(d_in, d_out),
        eps=cfg.eps,
        train_temperature=cfg.train_temperature,
    )


def _model_from_params(params: np.ndarray, d_in: int, cfg: TrainConfig) -> Model:
    if cfg.head_kind == "classical":
        nw = cfg.d_out * d_in
        w = params[:nw].reshape(cfg.d_out, d_in)
        bias = params[nw : nw + cfg.d_out]
        return ClassicalModel(params=ClassicalHeadParams(w, bias))
    d_out = d_in if cfg.head_kind == "none" else cfg.d_out
    hcfg = HeadConfig(d_in, d_out)
    head = None
    if hcfg.n_layers > 0:
        angles = params[:-2].reshape(hcfg.n_layers, hcfg.d_out, 12)
        head = HeadParams(hcfg, angles.copy())
    return QuantumModel(config=hcfg, head=head, tau=float(params[-2]), eps=cfg.eps)


def _val_accuracy_arrays(model: Model, queries, cands) -> float:
    """Strict top-1 accuracy: the positive (index 0) must beat every negative."""
    hits = 0
    for i in range(queries.shape[0]):
        s = model.scores(queries[i], cands[i])
        if np.all(s[0] > s[1:]):
            hits += 1
    return hits / queries.shape[0]


def validation_accuracy(model: Model, samples: Sequence[TrainingSample], store) -> float:
    """Fraction of samples whose positive strictly outranks all five negatives."""
    queries, cands, _ = _sample_arrays(store, samples)
    return _val_accuracy_arrays(model, queries, cands)


@dataclass
class TrainResult:
    """Best-validation snapshot of one run plus its epoch history."""

    model: Model
    history: list[dict] = field(repr=False)
    best_epoch: int
    best_val_acc: float
    config: TrainConfig


def train(store, train_samples, val_samples, cfg: TrainConfig) -> TrainResult:
    """Run Adam over shuffled minibatches, snapshotting the best validation epoch.

    Ties on validation accuracy keep the earliest epoch. max_epochs == 0
    returns the untrained initial model with empty history. A non-finite
    loss or gradient aborts with the offending epoch and batch in the error.
    """
    tq, tc, _ = _sample_arrays(store, train_samples)
    vq, vc, _ = _sample_arrays(store, val_samples)
    d_in = store.dim
    proto = _make_program(tq[:1], tc[:1], np.zeros(1, dtype=np.int64), cfg)
    if cfg.head_kind == "classical":
        params = proto.init_params(cfg.seed, temperature=cfg.temperature)
    else:
        params = proto.init_params(cfg.seed, tau=cfg.tau, temperature=cfg.temperature)
    adam = AdamState.init(params.size)
    shuffle_rng = np.random.default_rng([cfg.seed, 1])

    n = tq.shape[0]
    history: list[dict] = []
    best_params = params.copy()
    best_acc = -1.0
    best_epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            program = _make_program(tq[idx], tc[idx], np.zeros(idx.size, dtype=np.int64), cfg)
            loss, grad = program.value_and_grad(params)
            if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
                raise TrainingDivergence(
                    f"non-finite loss or gradient at epoch {epoch}, "
                    f"batch {start // cfg.batch_size}"
                )
            params = adam_step(params, grad, adam, cfg.lr)
            if params[-1] < TEMPERATURE_FLOOR:
                params[-1] = TEMPERATURE_FLOOR
            total += loss * idx.size
        model = _model_from_params(params, d_in, cfg)
        val_acc = _val_accuracy_arrays(model, vq, vc)
        history.append(
            {"epoch": epoch, "train_loss": total / n, "val_acc": val_acc}
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best_params = params.copy()

    if cfg.max_epochs == 0:
        best_acc = _val_accuracy_arrays(_model_from_params(params, d_in, cfg), vq, vc)
        best_params = params
    return TrainResult(
        model=_model_from_params(best_params, d_in, cfg),
        history=history,
        best_epoch=best_epoch,
        best_val_acc=float(best_acc),
        config=cfg,
    )


def save_history(path: str, history: list[dict]) -> None:
    """Write per-epoch history as JSONL (atomic replace)."""
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for row in history:
            fh.write(
                json.dumps(
                    {
                        "epoch": row["epoch"],
                        "train_loss": row["train_loss"],
                        "val_acc": row["val_acc"],
                    }
                )
            )
            fh.write("\n")
    os.replace(tmp, path)
