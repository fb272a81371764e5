"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel: median wall time of each path and the speedup.
numba compile time is excluded (one warm-up call before timing).
"""

import argparse
import time

import numpy as np

from ckpt_curator import _kernels as K


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def cases(rng):
    payload = rng.integers(0, 256, 2_000_000, dtype=np.uint8)  # ~500k f32 parameters
    walks = [np.cumsum(rng.integers(-2, 3, 200)).astype(float) for _ in range(2000)]
    acc = np.zeros(1_000_000)
    ckpts = [rng.standard_normal(1_000_000).astype(np.float32) for _ in range(20)]
    y = rng.dirichlet(np.ones(10), size=2000)
    logp = np.log(rng.dirichlet(np.ones(10), size=(10, 2000)))

    def stop_all(fn):
        return lambda: [fn(w, 5) for w in walks]

    def accumulate_all(fn):
        def run():
            acc[:] = 0.0
            for c in ckpts:
                fn(acc, c)
        return run

    return {
        "fnv1a64 (2 MB)": (lambda: K.fnv1a64_numpy(payload), lambda: K.fnv1a64_numba(payload)),
        "stop_scan (2000 x 200)": (stop_all(K.stop_scan_numpy), stop_all(K.stop_scan_numba)),
        "accumulate (20 x 1M f32)": (accumulate_all(K.accumulate_numpy), accumulate_all(K.accumulate_numba)),
        "bv_terms (R=10, n=2000, C=10)": (lambda: K.bv_terms_numpy(y, logp), lambda: K.bv_terms_numba(y, logp)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy [s]':>11s} {'numba [s]':>11s} {'speedup':>8s}")
    for name, (np_fn, nb_fn) in cases(rng).items():
        nb_fn()  # compile
        # the byte-serial FNV fallback is slow; time it once
        t_np = _median_time(np_fn, 1 if name.startswith("fnv") else args.repeat)
        t_nb = _median_time(nb_fn, args.repeat)
        print(f"{name:32s} {t_np:11.5f} {t_nb:11.5f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
