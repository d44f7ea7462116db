"""Compare the compiled and pure-Python kernel lanes on identical inputs.

Run: python benchmarks/bench_kernels.py [--tile-size N] [--repeat N]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from geosensordb.kernels import _pykernels

try:
    from geosensordb.kernels import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--tile-size", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    ts = args.tile_size
    rng = np.random.default_rng(7)
    cells = rng.uniform(-5.0, 40.0, size=(ts, ts))
    cells[rng.random((ts, ts)) < 0.1] = -9999.0
    nodata = -9999.0

    lanes = [("python", _pykernels)]
    if _ckernels is not None:
        lanes.append(("c", _ckernels))
    else:
        print("compiled kernels unavailable; benchmarking python lane only")

    print(f"tile_stats on a {ts}x{ts} tile (best of {args.repeat}):")
    base = None
    for name, mod in lanes:
        dt = _time(lambda m=mod: m.tile_stats(cells, nodata, True), args.repeat)
        note = "" if base is None else f"  ({base / dt:.1f}x vs python)"
        base = base or dt
        print(f"  {name:7s} {dt * 1e3:8.3f} ms{note}")

    radius = ts * 0.4
    cx = cy = ts / 2.0
    print(f"buffer_weighted_sum, radius {radius:g} cells, supersample 4:")
    base = None
    for name, mod in lanes:
        dt = _time(
            lambda m=mod: m.buffer_weighted_sum(
                cells, 0.0, float(ts), 1.0, -1.0, 0, 0,
                cx, cy, radius, 4, nodata, True),
            args.repeat)
        note = "" if base is None else f"  ({base / dt:.1f}x vs python)"
        base = base or dt
        print(f"  {name:7s} {dt * 1e3:8.3f} ms{note}")

    # Same-answer check: the lanes must agree to float64 round-off.
    if _ckernels is not None:
        a = _pykernels.tile_stats(cells, nodata, True)
        b = _ckernels.tile_stats(cells, nodata, True)
        assert all(math.isclose(x, y, rel_tol=1e-12) for x, y in zip(a, b)), (a, b)
        wa = _pykernels.buffer_weighted_sum(
            cells, 0.0, float(ts), 1.0, -1.0, 0, 0, cx, cy, radius, 4, nodata, True)
        wb = _ckernels.buffer_weighted_sum(
            cells, 0.0, float(ts), 1.0, -1.0, 0, 0, cx, cy, radius, 4, nodata, True)
        assert all(math.isclose(x, y, rel_tol=1e-9) for x, y in zip(wa, wb)), (wa, wb)
        print("lanes agree")


if __name__ == "__main__":
    main()
