"""Command-line interface.

Exit codes are categorized: 0 success, 2 usage errors (argparse), 3 file or
data-format errors, 4 validation/domain errors, 5 verification commands
(gradcheck, oraclecheck) reporting a failed check, 1 unexpected internal
errors. Output files are written to a temp path and renamed, so a failed
command never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import kernels
from .autodiff import ClassicalRankingLoss, QuantumRankingLoss, grad_check
from .baseline import cosine_similarity, param_count_classical
from .data import (
    SynthConfig,
    gen_synth,
    infer_store_format,
    load_qrels,
    load_samples,
    load_store,
    save_qrels,
    save_samples,
    save_store,
    EmbeddingStore,
)
from .encoding import EncoderConfig, encode, encode_angles, fidelity, log_fidelity
from .errors import (
    CapacityError,
    ConfigError,
    DataError,
    DimensionError,
    DomainError,
    QprojError,
    TrainingDivergence,
)
from .evaluation import evaluate, format_run_rows
from .head import HeadConfig, param_count
from .oracle import oracle_check
from .training import TrainConfig, load_model, save_history, train

ORACLE_TOL = 1e-10


def _write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load_store_arg(args) -> "EmbeddingStore":
    fmt = args.format or infer_store_format(args.store)
    return load_store(args.store, fmt)


def _cmd_encode(args) -> int:
    store = _load_store_arg(args)
    lines = []
    for i, (vec_id, vec) in enumerate(store.items()):
        if args.limit is not None and i >= args.limit:
            break
        theta = encode_angles(vec, args.tau)
        lines.append(json.dumps({"id": vec_id, "theta": theta.tolist()}))
    _write_text_atomic(args.out, "".join(line + "\n" for line in lines))
    print(f"wrote {len(lines)} angle records to {args.out}")
    return 0


def _cmd_similarity(args) -> int:
    store = _load_store_arg(args)
    u = store[args.id1]
    v = store[args.id2]
    cfg = EncoderConfig(tau=args.tau)
    su, sv = encode(u, cfg), encode(v, cfg)
    print(f"fidelity      {fidelity(su, sv):.10g}")
    print(f"log_fidelity  {log_fidelity(su, sv):.10g}")
    print(f"cosine        {cosine_similarity(u, v):.10g}")
    return 0


def _cmd_compress(args) -> int:
    store = _load_store_arg(args)
    model = load_model(args.model)
    if store.dim != model.d_in:
        raise DimensionError(f"store dim {store.dim} does not match model d_in {model.d_in}")
    ids = store.ids()
    if args.limit is not None:
        ids = ids[: args.limit]
    mat = store.matrix(ids)
    proj = model.project_batch(mat)
    if proj.ndim == 3:  # quantum amplitudes -> one probability angle per qubit
        proj = 2.0 * np.arctan2(np.abs(proj[..., 1]), proj[..., 0])
    out_store = EmbeddingStore(proj.shape[1])
    for i, vec_id in enumerate(ids):
        out_store.add(vec_id, proj[i])
    fmt = args.out_format or infer_store_format(args.out)
    save_store(args.out, out_store, fmt)
    print(f"wrote {len(ids)} compressed vectors (dim {out_store.dim}) to {args.out}")
    return 0


def _cmd_paramcount(args) -> int:
    q = param_count(HeadConfig(args.d_in, args.d_out))
    c = param_count_classical(args.d_in, args.d_out)
    print(f"quantum    {q}")
    print(f"classical  {c}")
    print(f"ratio      {c / q:.4f}" if q else "ratio      n/a")
    return 0


def _history_path(model_path: str) -> str:
    base = model_path[:-5] if model_path.endswith(".json") else model_path
    return base + ".history.jsonl"


def _cmd_train(args) -> int:
    store = _load_store_arg(args)
    train_samples = load_samples(args.train)
    val_samples = load_samples(args.val)
    d_out = None
    if args.dims is not None:
        d_in, d_out = args.dims
        if d_in != store.dim:
            raise DimensionError(f"--dims d_in {d_in} does not match store dim {store.dim}")
    seeds = list(range(args.seed, args.seed + args.runs))
    multi = args.runs > 1
    if multi:
        os.makedirs(args.out, exist_ok=True)
    for seed in seeds:
        cfg = TrainConfig(
            head_kind=args.head,
            d_out=d_out,
            lr=args.lr,
            batch_size=args.batch,
            max_epochs=args.epochs,
            seed=seed,
            temperature=args.temperature,
        )
        result = train(store, train_samples, val_samples, cfg)
        if multi:
            model_path = os.path.join(args.out, f"model-seed{seed}.json")
            history_path = os.path.join(args.out, f"history-seed{seed}.jsonl")
        else:
            model_path = args.out
            history_path = args.history or _history_path(args.out)
        result.model.save(model_path)
        save_history(history_path, result.history)
        print(
            f"seed {seed}: best val_acc {result.best_val_acc:.4f} "
            f"at epoch {result.best_epoch}; model -> {model_path}"
        )
    return 0


def _cmd_evaluate(args) -> int:
    store = _load_store_arg(args)
    model = load_model(args.model)
    if store.dim != model.d_in:
        raise DimensionError(f"store dim {store.dim} does not match model d_in {model.d_in}")
    judgments = load_qrels(args.qrels)
    if args.limit is not None:
        keep = sorted(judgments)[: args.limit]
        judgments = {qid: judgments[qid] for qid in keep}
    result = evaluate(model, store, judgments, k=args.k)
    if args.out:
        _write_text_atomic(args.out, format_run_rows(result.run_rows))
    if args.per_query:
        for qid, val in sorted(result.per_query.items()):
            print(f"{qid}\t{val:.6f}")
    for qid, reason in result.skipped:
        print(f"skipped {qid}: {reason}", file=sys.stderr)
    print(f"ndcg@{result.k} mean over {len(result.per_query)} queries: {result.mean_ndcg:.6f}")
    return 0


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    d_in, d_out = args.dims
    queries = rng.normal(size=(args.samples, d_in))
    cands = rng.normal(size=(args.samples, 6, d_in))
    pos = np.zeros(args.samples, dtype=np.int64)
    if args.head == "classical":
        program = ClassicalRankingLoss(queries, cands, pos, d_out)
    else:
        out = d_in if args.head == "none" else d_out
        program = QuantumRankingLoss(queries, cands, pos, HeadConfig(d_in, out))
    params = program.init_params(args.seed)
    result = grad_check(program, params, h=args.h, tol=args.tol)
    status = "PASS" if result.passed else "FAIL"
    print(
        f"{status}: {program.n_params} params, max rel err {result.max_rel_err:.3e} "
        f"(worst: {result.worst_param}), tol {args.tol:g}"
    )
    return 0 if result.passed else 5


def _cmd_oraclecheck(args) -> int:
    report = oracle_check(args.n, args.trials, seed=args.seed)
    print(
        f"n={report.n} trials={report.trials}: "
        f"max head deviation {report.max_head_dev:.3e}, "
        f"max fidelity deviation {report.max_fidelity_dev:.3e}"
    )
    if report.max_dev > ORACLE_TOL:
        print(f"FAIL: exceeds {ORACLE_TOL:g}")
        return 5
    print(f"PASS: within {ORACLE_TOL:g}")
    return 0


def _cmd_gensynth(args) -> int:
    cfg = SynthConfig(
        latent_dim=args.latent_dim,
        embed_dim=args.embed_dim,
        n_queries=args.queries,
        n_passages_per_query=args.pool,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    ds = gen_synth(cfg)
    os.makedirs(args.out, exist_ok=True)
    store_name = "store.jsonl" if args.store_format == "jsonl" else "store.bin"
    store_path = os.path.join(args.out, store_name)
    save_store(store_path, ds.store, args.store_format)
    save_samples(os.path.join(args.out, "train_samples.jsonl"), ds.train_samples)
    save_samples(os.path.join(args.out, "val_samples.jsonl"), ds.val_samples)
    save_qrels(os.path.join(args.out, "qrels.tsv"), ds.judgments)
    print(
        f"wrote {len(ds.store)} vectors, {len(ds.train_samples)} train / "
        f"{len(ds.val_samples)} val samples, {len(ds.judgments)} judged queries to {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qproj",
        description="Quantum-inspired embedding compression and ranking tools "
        f"(kernel backend: {kernels.backend_name()})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_store(p, required=True):
        p.add_argument("--store", required=required, help="embedding store path")
        p.add_argument(
            "--format", choices=("jsonl", "binary"), default=None,
            help="store format (default: by extension, .jsonl means JSONL)",
        )

    p = sub.add_parser("encode", help="dump qubit polar angles for every stored vector")
    add_store(p)
    p.add_argument("--out", required=True, help="output JSONL path")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--limit", type=int, default=None, help="encode at most this many records")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("similarity", help="fidelity, log-fidelity, and cosine of two stored ids")
    add_store(p)
    p.add_argument("id1")
    p.add_argument("id2")
    p.add_argument("--tau", type=float, default=1.0)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("compress", help="project a store through a trained model")
    add_store(p)
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--out", required=True, help="output store path")
    p.add_argument(
        "--out-format", choices=("jsonl", "binary"), default=None,
        help="output store format (default: by extension)",
    )
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("train", help="train a head on ranking samples")
    add_store(p)
    p.add_argument("--train", required=True, help="training samples JSONL")
    p.add_argument("--val", required=True, help="validation samples JSONL")
    p.add_argument("--out", required=True, help="model output path (a directory when --runs > 1)")
    p.add_argument("--history", default=None, help="history JSONL path (single run only)")
    p.add_argument("--head", choices=("quantum", "classical", "none"), default="quantum")
    p.add_argument(
        "--dims", type=int, nargs=2, metavar=("D_IN", "D_OUT"), default=None,
        help="input and output dims (required for quantum/classical heads)",
    )
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument(
        "--runs", type=int, default=1,
        help="train this many consecutive seeds (--seed 42 --runs 20 sweeps 42..61)",
    )
    p.add_argument("--temperature", type=float, default=0.05)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="NDCG@k of a model against graded judgments")
    add_store(p)
    p.add_argument("--model", required=True)
    p.add_argument("--qrels", required=True, help="TSV judgments: query, passage, grade")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", default=None, help="write run rows (query, rank, passage, score)")
    p.add_argument("--per-query", action="store_true")
    p.add_argument("--limit", type=int, default=None, help="evaluate at most this many queries")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("gradcheck", help="compare exact gradients against finite differences")
    p.add_argument("--head", choices=("quantum", "classical", "none"), default="quantum")
    p.add_argument("--dims", type=int, nargs=2, metavar=("D_IN", "D_OUT"), default=(4, 2))
    p.add_argument("--samples", type=int, default=4)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("oraclecheck", help="randomized sweep against the dense statevector oracle")
    p.add_argument("n", type=int, help="qubit count (2..24)")
    p.add_argument("trials", type=int)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_oraclecheck)

    p = sub.add_parser("gensynth", help="generate the synthetic ranking dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--latent-dim", type=int, default=8)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--pool", type=int, default=6)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--store-format", choices=("jsonl", "binary"), default="binary")
    p.set_defaults(func=_cmd_gensynth)

    p = sub.add_parser("paramcount", help="trainable parameter counts for a dim pair")
    p.add_argument("d_in", type=int)
    p.add_argument("d_out", type=int)
    p.set_defaults(func=_cmd_paramcount)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DomainError, DimensionError, ConfigError, CapacityError, TrainingDivergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except QprojError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
