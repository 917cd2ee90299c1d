"""Compare the compiled and pure-Python kernel backends.

Times the batched head forward/backward at a transformer-embedding size and
at the synthetic-benchmark size, plus one short end-to-end training run.
Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeat 9 --backends python
"""

import argparse
import statistics
import time

import numpy as np

from qproj import kernels
from qproj.autodiff import encode_batch
from qproj.data import SynthConfig, gen_synth
from qproj.head import HeadConfig
from qproj.training import TrainConfig, train

CASES = [
    # (label, d_in, d_out, batch)
    ("768->256 batch 32", 768, 256, 32),
    ("32->8 batch 112", 32, 8, 112),
]


def time_call(fn, repeat):
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def bench_kernels(backend, repeat):
    kernels.set_backend(backend)
    rng = np.random.default_rng(0)
    rows = []
    for label, d_in, d_out, batch in CASES:
        cfg = HeadConfig(d_in, d_out)
        amps, _, _ = encode_batch(rng.normal(size=(batch, d_in)), tau=1.0)
        angles = rng.uniform(-np.pi / 8, np.pi / 8, size=(cfg.n_layers, cfg.d_out, 12))
        gates = kernels.build_gates(angles)
        g_out = rng.normal(size=(batch, d_out, 2))

        fwd = time_call(lambda: kernels.head_forward(amps, gates, d_out), repeat)
        _, cache = kernels.head_forward(amps, gates, d_out)
        bwd = time_call(
            lambda: kernels.head_backward(g_out, gates, cache, d_in), repeat
        )
        rows.append((label, fwd, bwd))
    return rows


def bench_training(backend, repeat):
    kernels.set_backend(backend)
    ds = gen_synth(SynthConfig())
    cfg = TrainConfig(head_kind="quantum", d_out=8, max_epochs=5, seed=42)

    def run():
        train(ds.store, ds.train_samples, ds.val_samples, cfg)

    return time_call(run, repeat)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="median of this many runs")
    parser.add_argument(
        "--backends",
        nargs="+",
        default=list(kernels.available_backends()),
        choices=("python", "cython"),
    )
    args = parser.parse_args()

    missing = [b for b in args.backends if b not in kernels.available_backends()]
    if missing:
        parser.error(f"backend(s) not available here: {', '.join(missing)}")

    results = {}
    for backend in args.backends:
        results[backend] = {
            "kernels": bench_kernels(backend, args.repeat),
            "train": bench_training(backend, args.repeat),
        }

    both = {"python", "cython"} <= set(args.backends)
    print(f"median of {args.repeat} runs\n")
    header = f"{'case':<24}" + "".join(f"{b:>14}" for b in args.backends)
    if both:
        header += f"{'speedup':>10}"
    print(header)

    def emit(label, vals_by_backend):
        line = f"{label:<24}" + "".join(
            f"{vals_by_backend[b] * 1e3:>12.2f}ms" for b in args.backends
        )
        if both:
            line += f"{vals_by_backend['python'] / vals_by_backend['cython']:>9.2f}x"
        print(line)

    for i, (label, _, _) in enumerate(results[args.backends[0]]["kernels"]):
        for phase, idx in (("fwd", 1), ("bwd", 2)):
            emit(f"{label} {phase}", {b: results[b]["kernels"][i][idx] for b in args.backends})
    emit("train 5 epochs (32->8)", {b: results[b]["train"] for b in args.backends})


if __name__ == "__main__":
    main()
