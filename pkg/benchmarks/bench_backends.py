"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_backends.py [--repeat 5]

Prints one line per kernel with the best-of-N time for each backend and
the speedup, then the same for one full training epoch.
"""

import argparse
import timeit

import numpy as np

import cdwce
from cdwce import _backend, data, model, trainer
from cdwce.losses import LossSpec


def kernel_cases(rng):
    n, K = 64, 4
    P = np.ascontiguousarray(rng.dirichlet(np.ones(K), n))
    y = rng.integers(0, K, n).astype(np.int64)
    L = np.ascontiguousarray(rng.normal(size=(n, K - 1)))
    r = np.ascontiguousarray(rng.normal(size=n))
    G = np.ascontiguousarray(rng.normal(size=(n, K)))
    X = np.ascontiguousarray(rng.normal(size=(200, 16)))
    lab = rng.integers(0, K, 200).astype(np.int64)
    return {
        "ce (64x4)": lambda k: k.ce(P, y, 1e-12),
        "cdw_ce (64x4)": lambda k: k.cdw_ce(P, y, 5.0, 0.0, 1e-12),
        "cdw_ce+margin (64x4)": lambda k: k.cdw_ce(P, y, 5.0, 0.05, 1e-12),
        "co2 (64x4)": lambda k: k.unimodal(P, y, 1.0, 0.05, False, 1e-12),
        "corn (64x3)": lambda k: k.corn(L, y),
        "mse (64)": lambda k: k.mse_reg(r, y, K),
        "softmax_backward (64x4)": lambda k: k.softmax_backward(P, G),
        "silhouette (200x16)": lambda k: k.silhouette_samples(X, lab, K),
    }


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = cdwce.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the numpy fallback is available")
    mods = {name: _backend._BACKENDS[name] for name in backends}
    rng = np.random.default_rng(0)

    print(f"{'kernel':<26}" + "".join(f"{b + ' (us)':>16}" for b in backends) + f"{'speedup':>10}")
    for label, call in kernel_cases(rng).items():
        times = {b: best_of(lambda: call(m), args.repeat, 2000) * 1e6 for b, m in mods.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<26}" + "".join(f"{times[b]:>16.2f}" for b in backends) + f"{speed:>9.1f}x")

    ds = data.generate_synthetic(data.SyntheticParams(n_samples=2000), seed=0)
    tr, va, _ = data.split(ds, data.SplitSpec())
    cfg = trainer.TrainConfig(epochs=1)
    print()
    for spec in (LossSpec("CE", 4), LossSpec("CDW-CE", 4), LossSpec("CO2", 4)):
        m = model.init(model.MlpConfig(input_dim=ds.input_dim))
        times = {}
        for b in backends:
            previous = cdwce.use_backend(b)
            try:
                times[b] = best_of(lambda: trainer.train(m, spec, tr, va, cfg), args.repeat, 3) * 1e3
            finally:
                cdwce.use_backend(previous)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        line = f"epoch {spec.label:<20}" + "".join(f"{times[b]:>13.2f} ms" for b in backends)
        print(line + f"{speed:>9.2f}x")


if __name__ == "__main__":
    main()
