#!/usr/bin/env python3
"""Compare the compiled geometry kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--objects 40] [--repeat 5]

Both modules are imported directly, so the SITUGEN_PURE_PYTHON switch does
not matter here. Results are checked for bitwise equality before timing.
"""

import argparse
import random
import sys
import timeit

import numpy as np

from situgen import _kernels_py

try:
    from situgen import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def workload(n_objects, seed=0):
    rng = random.Random(seed)
    boxes = np.array([[rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.1, 1.0),
                       rng.uniform(0.1, 1.0), rng.uniform(0, 360)] for _ in range(n_objects)])
    rects = np.array([[x - hx, y - hy, x + hx, y + hy] for x, y, hx, hy, _ in boxes])
    points = boxes[:, :2].copy()
    centers = np.column_stack([points, np.array([rng.uniform(0, 2) for _ in range(n_objects)])])
    segments = [(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6))
                for _ in range(n_objects)]
    return boxes, rects, points, centers, segments


def cases(k, boxes, rects, points, centers, segments):
    """name -> zero-argument callable; one call covers a full scene's worth of work."""
    return {
        "segment_hits_obb": lambda: [k.segment_hits_obb(*s, boxes) for s in segments],
        "segment_hits_aabb": lambda: [k.segment_hits_aabb(*s, rects) for s in segments],
        "rotation_angles": lambda: k.rotation_angles(0.0, 0.0, 1.0, 0.5, points),
        "pairwise_features": lambda: k.pairwise_features(centers),
    }


def same(a, b):
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and a.tobytes() == np.asarray(b).tobytes()
    if isinstance(a, list):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    return a == b


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--objects", type=int, default=40)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--number", type=int, default=20)
    args = p.parse_args(argv)

    data = workload(args.objects)
    py = cases(_kernels_py, *data)
    if _kernels_c is None:
        print("compiled extension not built; timing the Python fallback only", file=sys.stderr)
    cy = cases(_kernels_c, *data) if _kernels_c is not None else {}

    print(f"{'kernel':<20} {'python ms':>10} {'cython ms':>10} {'speedup':>8}  identical")
    for name, fn in py.items():
        t_py = min(timeit.repeat(fn, number=args.number, repeat=args.repeat)) / args.number
        if name in cy:
            identical = same(fn(), cy[name]())
            t_cy = min(timeit.repeat(cy[name], number=args.number, repeat=args.repeat)) / args.number
            print(f"{name:<20} {t_py * 1e3:>10.3f} {t_cy * 1e3:>10.3f} {t_py / t_cy:>7.1f}x  {identical}")
        else:
            print(f"{name:<20} {t_py * 1e3:>10.3f} {'-':>10} {'-':>8}  -")
    return 0


if __name__ == "__main__":
    sys.exit(main())
