"""Compare the compiled RLE kernels with the pure-Python fallback.

    python benchmarks/bench_rle.py [--frames N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from visdiag import _rle_py, rle
from visdiag.synth import ellipse_mask

try:
    from visdiag import _rle_core
except ImportError:
    _rle_core = None


def workload(n, h=360, w=480, seed=0):
    rng = np.random.default_rng(seed)
    a, b = [], []
    for _ in range(n):
        cy, cx = rng.uniform(60, h - 60), rng.uniform(60, w - 60)
        a.append(ellipse_mask(h, w, cy, cx, 50, 70))
        b.append(ellipse_mask(h, w, cy + rng.uniform(-20, 20), cx + rng.uniform(-20, 20), 45, 65))
    grids = [rle.decode(m) for m in a[:20]]
    return a, b, grids


def cases(mod, a, b, grids):
    ca = [np.ascontiguousarray(m.counts) for m in a]
    cb = [np.ascontiguousarray(m.counts) for m in b]
    strings = [mod.counts_to_string(c) for c in ca]
    inter = np.zeros(len(a), np.int64)
    union = np.zeros(len(a), np.int64)
    flats = [np.ascontiguousarray(g.ravel(order="F")).view(np.uint8) for g in grids]
    return {
        "frame_stats": lambda: mod.frame_stats(ca, cb, inter, union),
        "intersect_area": lambda: [mod.intersect_area(x, y) for x, y in zip(ca, cb)],
        "area": lambda: [mod.area(x) for x in ca],
        "counts_to_string": lambda: [mod.counts_to_string(x) for x in ca],
        "counts_from_string": lambda: [mod.counts_from_string(s.encode()) for s in strings],
        "runs_from_flat": lambda: [mod.runs_from_flat(f) for f in flats],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    a, b, grids = workload(args.frames)
    backends = {"python": _rle_py}
    if _rle_core is not None:
        backends["cython"] = _rle_core
    results = {}
    for name, mod in backends.items():
        for case, fn in cases(mod, a, b, grids).items():
            results[case, name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"{'kernel':<20}" + "".join(f"{n:>12}" for n in backends) + f"{'speedup':>10}")
    for case in cases(_rle_py, a, b, grids):
        row = [results[case, n] for n in backends]
        speed = f"{row[0] / row[-1]:>9.1f}x" if len(row) > 1 else ""
        print(f"{case:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row) + speed)
    if _rle_core is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
