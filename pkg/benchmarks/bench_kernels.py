"""Compare the compiled series kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``. Results agree
bit for bit between the two backends (checked here before timing), so the
table only reports speed.
"""

import argparse
import sys
import timeit

import numpy as np

from qstefan import _kernels_py as slow

try:
    from qstefan import _kernels as fast
except ImportError:
    fast = None

ZS = np.linspace(0.0, 40.0, 256)

CASES = {
    "hyp1f1_series(0.5, 1.5, 20)": lambda k: k.hyp1f1_series(0.5, 1.5, 20.0),
    "hyp1f1_terminating(12, 0.5, -8)": lambda k: k.hyp1f1_terminating(12, 0.5, -8.0),
    "laguerre(10, 1.5, 7)": lambda k: k.laguerre(10, 1.5, 7.0),
    "pochhammer(0.25, 20)": lambda k: k.pochhammer(0.25, 20),
    "hyp1f1_array(0.5, 1.5, 256 pts)": lambda k: k.hyp1f1_array(0.5, 1.5, ZS),
    "laguerre_array(8, 0.5, 256 pts)": lambda k: k.laguerre_array(8, 0.5, ZS),
}


def _best(fn, kernels, repeat):
    timer = timeit.Timer(lambda: fn(kernels))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if fast is None:
        print("compiled kernels not built; run `pip install --no-build-isolation -e .` first", file=sys.stderr)
        return 1

    print(f"{'kernel':36s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, fn in CASES.items():
        a, b = np.asarray(fn(slow)), np.asarray(fn(fast))
        if not np.array_equal(a, b):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        ts, tf = _best(fn, slow, args.repeat), _best(fn, fast, args.repeat)
        print(f"{name:36s} {ts * 1e6:10.2f}us {tf * 1e6:10.2f}us {ts / tf:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
