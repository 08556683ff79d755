#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure numpy fallback.

Times the three hot paths on evaluation-shaped workloads: pairwise IoU
matrices, greedy matching, and the 101-point precision envelope. Both
backends are imported directly, so this runs regardless of which one the
package selected at import.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from trafficlens._kernels import _pure

try:
    from trafficlens._kernels import _native
except ImportError:
    _native = None


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - started)
    return best


def make_boxes(rng, n):
    out = rng.uniform(0, 1000, (n, 4))
    out[:, 2:] = rng.uniform(5, 120, (n, 2))
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    backends = [("pure", _pure)] + ([("native", _native)] if _native else [])
    if not _native:
        print("note: compiled kernels unavailable, benchmarking fallback only")

    cases = []

    # IoU matrix: a large image batch worth of detections x ground truths
    a, b = make_boxes(rng, 2000), make_boxes(rng, 500)
    cases.append(("iou_matrix 2000x500", lambda impl: impl.iou_matrix(a, b)))

    # Greedy matching over a big score matrix, repeated per threshold sweep
    ious = _pure.iou_matrix(make_boxes(rng, 400), make_boxes(rng, 400))
    cases.append(
        ("greedy_match 400x400 x10 thresholds", lambda impl: [impl.greedy_match(ious, t / 20) for t in range(10, 20)])
    )

    # Envelope over a long ranking, repeated as in a many-class evaluation
    n = 200_000
    flags = rng.uniform(0, 1, n) < 0.6
    tp = np.cumsum(flags)
    recall = tp / tp[-1]
    precision = tp / np.arange(1, n + 1)
    cases.append(("envelope_101 n=200k x20", lambda impl: [impl.envelope_101(recall, precision) for _ in range(20)]))

    width = max(len(name) for name, _ in cases)
    header = f"{'case'.ljust(width)}  " + "  ".join(f"{name:>10}" for name, _ in backends)
    if _native:
        header += f"  {'speedup':>8}"
    print(header)
    for name, call in cases:
        times = [time_call(call, impl, repeats=args.repeats) for _, impl in backends]
        row = f"{name.ljust(width)}  " + "  ".join(f"{t * 1000:8.2f}ms" for t in times)
        if _native:
            row += f"  {times[0] / times[1]:7.1f}x"
        print(row)

    # sanity: identical outputs
    if _native:
        assert np.array_equal(_native.iou_matrix(a, b), _pure.iou_matrix(a, b))
        assert np.array_equal(_native.envelope_101(recall, precision), _pure.envelope_101(recall, precision))
        print("outputs bit-identical across backends")


if __name__ == "__main__":
    main()
