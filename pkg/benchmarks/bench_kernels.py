#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

The two hot kernels are the discrete Legendre conjugate (hull sweep vs
dense max) and the subgradient-cell clipper (C loop vs python loop).
Run:  python3 benchmarks/bench_kernels.py [--csv out.csv]
"""

import argparse
import time

import numpy as np

from torapot import kernels


def _time(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_conjugate(mod, n):
    x = np.linspace(-1.0, 1.0, n)
    u = 0.5 * x**2 + 0.05 * np.sin(9 * x)
    y = np.ascontiguousarray(np.linspace(-2.0, 2.0, n))
    # convexify the data so the sweep has a realistic hull
    u = np.maximum.accumulate(np.minimum.accumulate(u[::-1])[::-1])
    return _time(mod.conjugate_1d, np.ascontiguousarray(x), np.ascontiguousarray(u), y)


def bench_cells(mod, res):
    from torapot.convex import hull_structure
    from torapot.ma import build_context

    ctx = build_context(2, (-1, 1), res)
    r = ctx.reference_potential
    hs = hull_structure(r, ctx.gradient_body)
    pts = ctx.domain.points
    vals = r.values
    chunks_n, chunks_o = [], []
    indptr = [0]
    for i in range(ctx.domain.size):
        nb = hs.neighbors(i)
        if len(nb) == 0:
            indptr.append(indptr[-1])
            continue
        chunks_n.append(pts[nb] - pts[i])
        chunks_o.append(vals[nb] - vals[i])
        indptr.append(indptr[-1] + len(nb))
    normals = np.ascontiguousarray(np.vstack(chunks_n))
    offsets = np.ascontiguousarray(np.concatenate(chunks_o))
    indptr = np.asarray(indptr, dtype=np.intp)
    v = ctx.gradient_body.vertices
    bx = np.ascontiguousarray(v[:, 0])
    by = np.ascontiguousarray(v[:, 1])
    return _time(mod.cell_areas_2d, bx, by, normals, offsets, indptr)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--csv", default=None)
    args = parser.parse_args()
    mods = kernels.backends()
    if "compiled" not in mods:
        print("compiled backend unavailable; benchmarking fallback only")
    rows = []
    for n in (201, 2001, 20001):
        times = {name: bench_conjugate(mod, n) for name, mod in mods.items()}
        rows.append(("conjugate_1d", n, times))
    for res in (33, 65):
        times = {name: bench_cells(mod, res) for name, mod in mods.items()}
        rows.append(("cell_areas_2d", res, times))
    print(f"{'kernel':<16}{'size':>8}" + "".join(f"{k:>14}" for k in mods) + f"{'speedup':>10}")
    lines = ["kernel,size," + ",".join(mods) + ",speedup"]
    for name, size, times in rows:
        speed = times.get("python", float("nan")) / times.get("compiled", times["python"])
        print(
            f"{name:<16}{size:>8}"
            + "".join(f"{times[k] * 1e3:>12.3f}ms" for k in mods)
            + f"{speed:>9.1f}x"
        )
        lines.append(
            f"{name},{size},"
            + ",".join(repr(times[k]) for k in mods)
            + f",{speed!r}"
        )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
