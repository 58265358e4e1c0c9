"""Time the batched tridiagonal kernel: compiled extension against the NumPy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 8x1025,64x257,512x129]

Each case solves ``m`` diagonally dominant systems of ``n`` unknowns, the
shape produced by a polar grid with ``m`` angular modes.  The script checks
that both backends agree before reporting timings.
"""

import argparse
import timeit

import numpy as np

from asymhier import kernels


def make_systems(m, n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 0.0, (m, n))
    c = rng.uniform(-1.0, 0.0, (m, n))
    b = 2.5 + rng.uniform(0.0, 1.0, (m, n))
    d = rng.standard_normal((m, n))
    return a, b, c, d


def parse_sizes(text):
    out = []
    for item in text.split(","):
        m, n = item.lower().split("x")
        out.append((int(m), int(n)))
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5, help="timing repetitions (best is reported)")
    p.add_argument("--sizes", default="8x1025,64x257,512x129,32x4097",
                   help="comma-separated MxN batch shapes")
    args = p.parse_args(argv)

    backends = ["python"] + (["cython"] if kernels._thomas_compiled is not None else [])
    print(f"active backend: {kernels.BACKEND}")
    header = f"{'shape':>10s}" + "".join(f"{b + ' [ms]':>14s}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for m, n in parse_sizes(args.sizes):
        arrs = make_systems(m, n)
        results = {b: kernels.thomas_batch(*arrs, backend=b) for b in backends}
        if len(backends) == 2:
            diff = np.max(np.abs(results["python"] - results["cython"]))
            if diff > 1e-12 * (1.0 + np.max(np.abs(results["python"]))):
                raise SystemExit(f"backends disagree on {m}x{n}: {diff:.3e}")
        best = {}
        for b in backends:
            t = timeit.repeat(lambda: kernels.thomas_batch(*arrs, backend=b), number=1, repeat=args.repeat)
            best[b] = min(t) * 1e3
        line = f"{f'{m}x{n}':>10s}" + "".join(f"{best[b]:14.3f}" for b in backends)
        if len(backends) == 2:
            line += f"{best['python'] / best['cython']:10.1f}x"
        print(line)


if __name__ == "__main__":
    main()
