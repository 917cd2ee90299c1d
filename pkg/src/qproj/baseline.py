"""Classical comparison arm: a tanh-squashed affine projection scored by
cosine similarity. Deliberately boring; its job is to give the compression
head a parameter-matched-per-output classical opponent.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DimensionError, DomainError

CLASSICAL_FORMAT = "qproj-classical-v1"


@dataclass
class ClassicalHeadParams:
    """Projection weights (d_out, d_in) and bias (d_out,)."""

    weights: np.ndarray = field(repr=False)
    bias: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise DimensionError("weights must be 2-d and bias 1-d")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise DimensionError(
                f"bias length {self.bias.shape[0]} does not match {self.weights.shape[0]} rows"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ConfigError("projection parameters must be finite")

    @property
    def d_in(self) -> int:
        return self.weights.shape[1]

    @property
    def d_out(self) -> int:
        return self.weights.shape[0]


def param_count_classical(d_in: int, d_out: int) -> int:
    """Trainable count of the projection: d_in * d_out + d_out."""
    if d_in < 1 or d_out < 1:
        raise ConfigError("d_in and d_out must be positive")
    return d_in * d_out + d_out


def init_classical(d_in: int, d_out: int, seed: int) -> ClassicalHeadParams:
    """Seeded uniform init in [-1/sqrt(d_in), 1/sqrt(d_in)] for weights and bias."""
    if d_in < 1 or d_out < 1:
        raise ConfigError("d_in and d_out must be positive")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(d_in)
    return ClassicalHeadParams(
        rng.uniform(-bound, bound, size=(d_out, d_in)),
        rng.uniform(-bound, bound, size=d_out),
    )


def classical_forward(vec: np.ndarray, params: ClassicalHeadParams) -> np.ndarray:
    """Project one embedding: tanh(W v + b)."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != params.d_in:
        raise DimensionError(f"expected a ({params.d_in},) vector, got {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DomainError("input vector has non-finite entries")
    return np.tanh(params.weights @ vec + params.bias)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Plain cosine similarity; zero-norm inputs are a domain error."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1 or u.size == 0:
        raise DimensionError(f"expected equal-length 1-d vectors, got {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0 or not (math.isfinite(nu) and math.isfinite(nv)):
        raise DomainError("cosine similarity undefined for zero or non-finite vectors")
    return float(np.dot(u, v) / (nu * nv))


def save_classical_json(path: str, params: ClassicalHeadParams) -> None:
    """Write the projection as qproj-classical-v1 JSON (atomic replace)."""
    doc = {
        "format": CLASSICAL_FORMAT,
        "d_in": params.d_in,
        "d_out": params.d_out,
        "weights": [[float(x) for x in row] for row in params.weights],
        "bias": [float(x) for x in params.bias],
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    os.replace(tmp, path)


def load_classical_json(path: str) -> ClassicalHeadParams:
    """Read a qproj-classical-v1 JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError("json", f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != CLASSICAL_FORMAT:
        raise DataError("format", f"{path}: expected format {CLASSICAL_FORMAT!r}")
    try:
        weights = np.asarray(doc["weights"], dtype=np.float64)
        bias = np.asarray(doc["bias"], dtype=np.float64)
        d_in, d_out = int(doc["d_in"]), int(doc["d_out"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError("schema", f"{path}: missing or malformed field ({exc})") from exc
    if weights.shape != (d_out, d_in) or bias.shape != (d_out,):
        raise DataError("schema", f"{path}: weight/bias shapes disagree with d_in/d_out")
    return ClassicalHeadParams(weights, bias)
