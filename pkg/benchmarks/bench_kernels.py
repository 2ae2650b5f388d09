"""Compare the compiled kernels against the pure-NumPy fallback.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

Reports best-of-``repeat`` wall time per kernel and backend, plus speedup.
"""

import argparse
import time

import numpy as np

from constmap import kernels, make_uniform_levels, mic_from_qam, mrc_init


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000, help="points per call")
    parser.add_argument("--repeat", type=int, default=5, help="best-of repetitions")
    parser.add_argument("--m", type=int, default=8, help="levels per axis")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    x = rng.uniform(-2.5, 2.5, args.n)
    pre = rng.uniform(-2.0, 2.0, args.n)
    pim = rng.uniform(-2.0, 2.0, args.n)
    levels = make_uniform_levels(args.m)
    mrc = mrc_init(args.m)
    mic = mic_from_qam(levels, levels)
    d = np.asarray(mrc.boundaries_re.boundaries)
    lv = np.asarray(levels.levels)
    cre = np.ascontiguousarray(mic.constellation.points[:, 0])
    cim = np.ascontiguousarray(mic.constellation.points[:, 1])
    delta = 20.0

    cases = [
        ("mrc_forward_block", lambda impl: impl.mrc_forward_block(x, d, lv)),
        ("mrc_backward_value_block", lambda impl: impl.mrc_backward_value_block(x, d, lv, delta)),
        ("mrc_backward_grad_block", lambda impl: impl.mrc_backward_grad_block(x, d, lv, delta)),
        ("mic_forward_block", lambda impl: impl.mic_forward_block(pre, pim, cre, cim)),
        ("mic_backward_value_block", lambda impl: impl.mic_backward_value_block(pre, pim, cre, cim, delta)),
        ("mic_backward_grad_block", lambda impl: impl.mic_backward_grad_block(pre, pim, cre, cim, delta)),
    ]

    impls = kernels.implementations()
    print(f"active backend: {kernels.backend()}; n={args.n}, m={args.m}, "
          f"points={args.m * args.m}, best of {args.repeat}")
    if "cython" not in impls:
        print("compiled backend unavailable; timing the fallback only")
    header = f"{'kernel':<26} " + " ".join(f"{name:>12}" for name in impls) + "  speedup"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        times = {impl_name: best_of(lambda: call(impl), args.repeat)
                 for impl_name, impl in impls.items()}
        cols = " ".join(f"{times[k] * 1e3:>10.2f}ms" for k in impls)
        if "cython" in times and "python" in times:
            speed = f"{times['python'] / times['cython']:>8.1f}x"
        else:
            speed = "     n/a"
        print(f"{name:<26} {cols} {speed}")


if __name__ == "__main__":
    main()
