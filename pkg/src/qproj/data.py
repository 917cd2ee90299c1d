"""Embedding stores, dataset files, and the synthetic ranking generator.

Store formats:

* JSONL: one object per line, {"id": str, "vec": [floats]}.
* Binary: magic b"QPEMB1\\0", then little-endian u32 dim and u64 count,
  then per record a u16 id byte-length, the UTF-8 id, and dim float64
  values. Round-trips are bit-exact.

Training samples are JSONL objects {"query_id", "pos_id", "neg_ids"};
relevance judgments are TSV lines "query_id<TAB>passage_id<TAB>grade" with
integer grades 0..3.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, DataError, DimensionError, DomainError
from .evaluation import RelevanceJudgments
from .training import TrainingSample

MAGIC = b"QPEMB1\x00"
STORE_FORMATS = ("jsonl", "binary")
MAX_GRADE = 3


class EmbeddingStore:
    """id -> fixed-dimension float64 vector map, insertion-ordered."""

    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionError("store dimension must be positive")
        self.dim = int(dim)
        self._vecs: dict[str, np.ndarray] = {}

    def add(self, vec_id: str, vec: np.ndarray) -> None:
        if not isinstance(vec_id, str) or not vec_id:
            raise DataError("id", "vector id must be a non-empty string")
        if vec_id in self._vecs:
            raise DataError("duplicate-id", f"duplicate id {vec_id!r}")
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionError(f"vector for {vec_id!r} has shape {vec.shape}, want ({self.dim},)")
        if not np.all(np.isfinite(vec)):
            raise DomainError(f"vector for {vec_id!r} has non-finite entries")
        self._vecs[vec_id] = vec

    def __contains__(self, vec_id: str) -> bool:
        return vec_id in self._vecs

    def __getitem__(self, vec_id: str) -> np.ndarray:
        try:
            return self._vecs[vec_id]
        except KeyError:
            raise DataError("missing-id", f"no vector with id {vec_id!r}") from None

    def __len__(self) -> int:
        return len(self._vecs)

    def ids(self) -> list[str]:
        return list(self._vecs)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self._vecs.items())

    def matrix(self, ids: Sequence[str]) -> np.ndarray:
        """Stack the vectors for the given ids into a (len(ids), dim) array."""
        out = np.empty((len(ids), self.dim))
        for i, vec_id in enumerate(ids):
            out[i] = self[vec_id]
        return out


def save_store(path: str, store: EmbeddingStore, format: str = "binary") -> None:
    """Write a store in the named format (atomic replace)."""
    if format not in STORE_FORMATS:
        raise ConfigError(f"unknown store format {format!r}")
    tmp = path + ".tmp"
    if format == "jsonl":
        with open(tmp, "w", encoding="utf-8") as fh:
            for vec_id, vec in store.items():
                fh.write(json.dumps({"id": vec_id, "vec": vec.tolist()}))
                fh.write("\n")
    else:
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IQ", store.dim, len(store)))
            for vec_id, vec in store.items():
                raw = vec_id.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise DataError("id", f"id too long to serialize: {vec_id[:32]!r}...")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(vec.astype("<f8").tobytes())
    os.replace(tmp, path)


def _load_store_jsonl(path: str) -> EmbeddingStore:
    store: EmbeddingStore | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError("json", f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "vec" not in obj:
                raise DataError("schema", f"{path}:{lineno}: need 'id' and 'vec' fields")
            vec = obj["vec"]
            if not isinstance(vec, list) or not vec:
                raise DataError("schema", f"{path}:{lineno}: 'vec' must be a non-empty list")
            if store is None:
                store = EmbeddingStore(len(vec))
            if len(vec) != store.dim:
                raise DataError(
                    "dim", f"{path}:{lineno}: vector has dim {len(vec)}, expected {store.dim}"
                )
            try:
                store.add(obj["id"], np.asarray(vec, dtype=np.float64))
            except (DataError, DomainError, DimensionError) as exc:
                raise DataError("record", f"{path}:{lineno}: {exc}") from exc
    if store is None:
        raise DataError("empty", f"{path}: empty JSONL store has no dimension")
    return store


def _load_store_binary(path: str) -> EmbeddingStore:
    def take(fh, size: int, what: str) -> bytes:
        raw = fh.read(size)
        if len(raw) != size:
            raise DataError("truncated", f"{path}: truncated while reading {what}")
        return raw

    with open(path, "rb") as fh:
        if take(fh, len(MAGIC), "magic") != MAGIC:
            raise DataError("magic", f"{path}: bad magic bytes, not a qproj store")
        dim, count = struct.unpack("<IQ", take(fh, 12, "header"))
        if dim < 1:
            raise DataError("dim", f"{path}: header dimension {dim} invalid")
        store = EmbeddingStore(dim)
        for i in range(count):
            (id_len,) = struct.unpack("<H", take(fh, 2, f"record {i} id length"))
            vec_id = take(fh, id_len, f"record {i} id").decode("utf-8")
            vec = np.frombuffer(take(fh, 8 * dim, f"record {i} vector"), dtype="<f8")
            store.add(vec_id, vec.astype(np.float64))
        if fh.read(1):
            raise DataError("trailing", f"{path}: trailing bytes after {count} records")
    return store


def load_store(path: str, format: str = "binary") -> EmbeddingStore:
    """Read a store written by save_store. Empty binary stores are valid."""
    if format not in STORE_FORMATS:
        raise ConfigError(f"unknown store format {format!r}")
    return _load_store_jsonl(path) if format == "jsonl" else _load_store_binary(path)


def infer_store_format(path: str) -> str:
    """Pick a store format from the file extension (.jsonl means JSONL)."""
    return "jsonl" if path.endswith(".jsonl") else "binary"


# ---------------------------------------------------------------------------
# samples and judgments

def save_samples(path: str, samples: Sequence[TrainingSample]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {"query_id": s.query_id, "pos_id": s.pos_id, "neg_ids": list(s.neg_ids)}
                )
            )
            fh.write("\n")
    os.replace(tmp, path)


def load_samples(path: str) -> list[TrainingSample]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(
                    TrainingSample(obj["query_id"], obj["pos_id"], tuple(obj["neg_ids"]))
                )
            except (json.JSONDecodeError, KeyError, TypeError, ConfigError) as exc:
                raise DataError("schema", f"{path}:{lineno}: bad sample ({exc})") from exc
    return out


def save_qrels(path: str, judgments: RelevanceJudgments) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for qid in judgments:
            for pid, grade in judgments[qid].items():
                fh.write(f"{qid}\t{pid}\t{int(grade)}\n")
    os.replace(tmp, path)


def load_qrels(path: str) -> dict[str, dict[str, int]]:
    out: dict[str, dict[str, int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError("schema", f"{path}:{lineno}: expected 3 tab-separated fields")
            qid, pid, grade_s = parts
            try:
                grade = int(grade_s)
            except ValueError as exc:
                raise DataError("schema", f"{path}:{lineno}: grade {grade_s!r} not an int") from exc
            if not 0 <= grade <= MAX_GRADE:
                raise DataError("grade", f"{path}:{lineno}: grade {grade} outside 0..{MAX_GRADE}")
            if pid in out.get(qid, {}):
                raise DataError("duplicate-id", f"{path}:{lineno}: duplicate judgment {qid}/{pid}")
            out.setdefault(qid, {})[pid] = grade
    return out


# ---------------------------------------------------------------------------
# synthetic ranking data

@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the synthetic retrieval task.

    Each query is a random unit latent; its embedding is a fixed random
    linear lift of that latent, and its positive passage is the lift of the
    latent plus Gaussian noise (sigma = 0 makes them identical). Candidate
    pools are the hardest other-query positives by latent cosine.
    """

    latent_dim: int = 8
    embed_dim: int = 32
    n_queries: int = 200
    n_passages_per_query: int = 6
    noise_sigma: float = 0.2
    val_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self) -> None:
        if self.latent_dim < 1 or self.embed_dim < 1:
            raise ConfigError("latent_dim and embed_dim must be positive")
        if self.n_passages_per_query < 6:
            raise ConfigError("need a pool of at least 6 (one positive, five negatives)")
        if self.n_queries < self.n_passages_per_query:
            raise ConfigError("need at least as many queries as the pool size")
        if self.noise_sigma < 0 or not math.isfinite(self.noise_sigma):
            raise ConfigError("noise_sigma must be non-negative and finite")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in (0, 1)")


@dataclass
class SynthDataset:
    """Generated store, sample split, and held-out judgments."""

    store: EmbeddingStore
    train_samples: list[TrainingSample]
    val_samples: list[TrainingSample]
    judgments: dict[str, dict[str, int]] = field(repr=False)
    config: SynthConfig = SynthConfig()


def gen_synth(cfg: SynthConfig = SynthConfig()) -> SynthDataset:
    """Generate the synthetic ranking dataset for one seed.

    Judgments cover validation queries only (they play the held-out
    benchmark role): grade 3 for the positive, grade 1 for the two hardest
    negatives, grade 0 for the rest of the pool.
    """
    rng = np.random.default_rng(cfg.seed)
    q = cfg.n_queries
    latents = rng.normal(size=(q, cfg.latent_dim))
    latents /= np.linalg.norm(latents, axis=1, keepdims=True)
    lift = rng.normal(size=(cfg.embed_dim, cfg.latent_dim)) / math.sqrt(cfg.latent_dim)
    noise = rng.normal(size=(q, cfg.latent_dim)) * cfg.noise_sigma

    query_emb = latents @ lift.T
    pos_emb = (latents + noise) @ lift.T

    sims = latents @ latents.T
    np.fill_diagonal(sims, -np.inf)
    hardest = np.argsort(-sims, axis=1, kind="stable")

    store = EmbeddingStore(cfg.embed_dim)
    qids = [f"q{i:04d}" for i in range(q)]
    pids = [f"p{i:04d}" for i in range(q)]
    for i in range(q):
        store.add(qids[i], query_emb[i])
    for i in range(q):
        store.add(pids[i], pos_emb[i])

    pool = cfg.n_passages_per_query
    samples = []
    for i in range(q):
        negs = [pids[j] for j in hardest[i, : pool - 1]]
        samples.append(TrainingSample(qids[i], pids[i], tuple(negs[:5])))

    n_val = max(1, round(q * cfg.val_fraction))
    train_samples = samples[: q - n_val]
    val_samples = samples[q - n_val :]

    judgments: dict[str, dict[str, int]] = {}
    for i in range(q - n_val, q):
        grades = {pids[i]: 3}
        for rank, j in enumerate(hardest[i, : pool - 1]):
            grades[pids[j]] = 1 if rank < 2 else 0
        judgments[qids[i]] = grades
    return SynthDataset(
        store=store,
        train_samples=train_samples,
        val_samples=val_samples,
        judgments=judgments,
        config=cfg,
    )
