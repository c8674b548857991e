#!/usr/bin/env python3
"""Benchmark the compiled mesh kernels against the pure-Python fallback.

Runs the three hot kernels (grid clustering, edge-manifold counting,
centroid accumulation) on generation-scale meshes, including one inside
the 50K-100K triangle output budget. Usage:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from heritage3d.meshkit import _kernels, _kernels_py
from heritage3d.meshkit.document import world_soup
from heritage3d.meshkit.geometry import WELD_TOLERANCE
from heritage3d.meshkit.primitives import building, icosphere

BACKENDS = {"cython": _kernels, "python": _kernels_py}


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def bench_mesh(name, doc, repeats):
    positions, tris = world_soup(doc)
    origin = positions.min(axis=0)
    extent = float((positions.max(axis=0) - origin).max())
    rows = []

    for op_name, make_call in (
        (
            "weld labels",
            lambda impl: lambda: impl.grid_labels(
                positions, *origin, 1.0 / WELD_TOLERANCE, 1 << 62
            ),
        ),
        (
            "cluster 32^3",
            lambda impl: lambda: impl.grid_labels(
                positions, *origin, 32.0 / extent, 31
            ),
        ),
    ):
        timings = {}
        for backend, impl in BACKENDS.items():
            timings[backend], _ = best_of(make_call(impl), repeats)
        rows.append((op_name, timings))

    # Edge counting and centroids need labels; compute once per backend input.
    labels, count = _kernels.grid_labels(
        positions, *origin, 1.0 / WELD_TOLERANCE, 1 << 62
    )
    tri_labels = np.ascontiguousarray(labels[tris])
    keep = (
        (tri_labels[:, 0] != tri_labels[:, 1])
        & (tri_labels[:, 1] != tri_labels[:, 2])
        & (tri_labels[:, 2] != tri_labels[:, 0])
    )
    tri_labels = np.ascontiguousarray(tri_labels[keep])

    timings = {}
    results = {}
    for backend, impl in BACKENDS.items():
        timings[backend], results[backend] = best_of(
            lambda impl=impl: impl.edges_all_shared_twice(tri_labels), repeats
        )
    assert results["cython"] == results["python"]
    rows.append(("edge counts", timings))

    timings = {}
    for backend, impl in BACKENDS.items():
        timings[backend], _ = best_of(
            lambda impl=impl: impl.label_centroids(positions, labels, count), repeats
        )
    rows.append(("centroids", timings))

    print(f"\n{name}: {len(positions)} vertices, {len(tris)} triangles")
    print(f"  {'kernel':<14} {'cython':>10} {'python':>10} {'speedup':>8}")
    for op_name, timings in rows:
        speedup = timings["python"] / timings["cython"] if timings["cython"] else 0.0
        print(
            f"  {op_name:<14} {timings['cython'] * 1e3:9.2f}ms "
            f"{timings['python'] * 1e3:9.2f}ms {speedup:7.1f}x"
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"kernel backends: {sorted(BACKENDS)} (repeats: best of {args.repeats})")
    bench_mesh("icosphere s=5 (20,480 tris)", icosphere(5), args.repeats)
    bench_mesh("building n=68 s=4 (60,608 tris, in budget)", building(68, 4), args.repeats)
    bench_mesh("icosphere s=6 (81,920 tris, in budget)", icosphere(6), args.repeats)


if __name__ == "__main__":
    main()
