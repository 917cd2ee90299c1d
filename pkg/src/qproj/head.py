"""Trainable compression head: a schedule of pair compressions that shrinks
an n-qubit product state to d_out qubits, d_out at a time.

With w the current width, one layer runs d_out independent pair
compressions: pair k uses control w - 2*d_out + k and target w - d_out + k
(0-indexed), writes the compressed qubit into the control position, and the
top d_out positions fall away. After L = d_in/d_out - 1 layers the first
d_out positions hold the output. Every layer therefore folds one fresh
block of the input into the running compressed block, and position k only
ever interacts with positions congruent to k modulo d_out.

Parameters are 12 angles per pair (three ZYZ gates) stored as an
(L, d_out, 12) array in the quadruple order (u_ctrl, u_tgt, v_controlled).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .circuit import GateParams, PairCompressorParams, pair_compress
from .encoding import SeparableState
from .errors import ConfigError, DataError, DimensionError

ANGLES_PER_PAIR = 12
HEAD_FORMAT = "qproj-head-v1"
INIT_SCALE = math.pi / 8.0


@dataclass(frozen=True)
class HeadConfig:
    """Input and output widths of the head. d_out must divide d_in."""

    d_in: int
    d_out: int

    def __post_init__(self) -> None:
        if self.d_in < 1 or self.d_out < 1:
            raise ConfigError("d_in and d_out must be positive")
        if self.d_in % self.d_out != 0:
            raise ConfigError(f"d_out={self.d_out} must divide d_in={self.d_in}")

    @property
    def n_layers(self) -> int:
        return self.d_in // self.d_out - 1


def layer_count(config: HeadConfig) -> int:
    """Number of compression layers, d_in/d_out - 1."""
    return config.n_layers


def schedule(config: HeadConfig) -> list[list[tuple[int, int]]]:
    """(control, target) index pairs per layer; outputs land on the control index."""
    plan = []
    d = config.d_out
    for layer in range(config.n_layers):
        w = config.d_in - layer * d
        plan.append([(w - 2 * d + k, w - d + k) for k in range(d)])
    return plan


def param_count(config: HeadConfig) -> int:
    """Trainable angle count: layers * d_out * 12."""
    return config.n_layers * config.d_out * ANGLES_PER_PAIR


@dataclass
class HeadParams:
    """All gate angles of a head, shape (n_layers, d_out, 12)."""

    config: HeadConfig
    angles: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        expected = (self.config.n_layers, self.config.d_out, ANGLES_PER_PAIR)
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.angles.shape != expected:
            raise DimensionError(f"angle array must have shape {expected}, got {self.angles.shape}")
        if not np.all(np.isfinite(self.angles)):
            raise ConfigError("gate angles must be finite")

    def pair(self, layer: int, k: int) -> PairCompressorParams:
        a = self.angles[layer, k]
        return PairCompressorParams(
            GateParams(*a[0:4]), GateParams(*a[4:8]), GateParams(*a[8:12])
        )


def init_params(config: HeadConfig, seed: int) -> HeadParams:
    """Seeded uniform init of all angles in [-pi/8, pi/8]."""
    rng = np.random.default_rng(seed)
    shape = (config.n_layers, config.d_out, ANGLES_PER_PAIR)
    return HeadParams(config, rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape))


def head_forward(state: SeparableState, params: HeadParams) -> SeparableState:
    """Run the full compression schedule on one separable state.

    Reference implementation built on pair_compress; accepts any (possibly
    complex) product state. The batched kernels in qproj.kernels are the
    fast path for the real-amplitude training pipeline.
    """
    cfg = params.config
    if state.n != cfg.d_in:
        raise DimensionError(f"state has {state.n} qubits, head expects {cfg.d_in}")
    work = list(state.qubits())
    for layer, pairs in enumerate(schedule(cfg)):
        for k, (ci, ti) in enumerate(pairs):
            out, _ = pair_compress(work[ci], work[ti], params.pair(layer, k))
            work[ci] = out
    return SeparableState.from_qubits(work[: cfg.d_out])


def save_head_json(path: str, params: HeadParams | None, tau: float, config: HeadConfig) -> None:
    """Write head angles and tau as qproj-head-v1 JSON (atomic replace)."""
    if params is not None and params.config != config:
        raise ConfigError("params and config disagree")
    if params is None and config.n_layers != 0:
        raise ConfigError("a non-identity head needs params")
    layers = [] if params is None else [
        [[list(map(float, a[j : j + 4])) for j in (0, 4, 8)] for a in layer]
        for layer in params.angles
    ]
    doc = {
        "format": HEAD_FORMAT,
        "d_in": config.d_in,
        "d_out": config.d_out,
        "layers": layers,
        "tau": float(tau),
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    os.replace(tmp, path)


def load_head_json(path: str) -> tuple[HeadParams | None, float, HeadConfig]:
    """Read a qproj-head-v1 JSON file back into (params, tau, config)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError("json", f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != HEAD_FORMAT:
        raise DataError("format", f"{path}: expected format {HEAD_FORMAT!r}")
    try:
        config = HeadConfig(int(doc["d_in"]), int(doc["d_out"]))
        tau = float(doc["tau"])
        layers = doc["layers"]
    except (KeyError, TypeError) as exc:
        raise DataError("schema", f"{path}: missing or malformed field ({exc})") from exc
    if config.n_layers == 0:
        if layers:
            raise DataError("schema", f"{path}: identity head must have empty layers")
        return None, tau, config
    try:
        arr = np.asarray(layers, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DataError("schema", f"{path}: layers are not a rectangular float array") from exc
    expected = (config.n_layers, config.d_out, 3, 4)
    if arr.shape != expected:
        raise DataError(
            "schema", f"{path}: layers shape {arr.shape} does not match {expected}"
        )
    return HeadParams(config, arr.reshape(config.n_layers, config.d_out, 12)), tau, config
