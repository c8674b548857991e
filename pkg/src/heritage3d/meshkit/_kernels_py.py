"""Pure-Python (numpy) mesh kernels.

Fallback twin of the compiled ``_kernels`` extension: identical signatures
and identical results, selected by ``meshkit.kernels`` when the extension
is unavailable or HERITAGE3D_PURE_PYTHON=1.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

# Per-axis label packing (21 bits each) is the fast path; larger inputs
# take the exact row-wise unique path. Both give identical labels.
_PACK_LIMIT = 1 << 21


def _first_occurrence_labels(keys: np.ndarray, axis=None) -> tuple[np.ndarray, int]:
    """Labels in order of first appearance (0 for the first distinct key)."""
    uniq, first_idx, inverse = np.unique(
        keys, axis=axis, return_index=True, return_inverse=True
    )
    inverse = inverse.reshape(-1)
    order = np.argsort(first_idx, kind="stable")
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[order] = np.arange(len(uniq), dtype=np.int64)
    return rank[inverse], len(uniq)


def grid_labels(
    points: np.ndarray,
    ox: float,
    oy: float,
    oz: float,
    inv_cell: float,
    max_coord: int,
) -> tuple[np.ndarray, int]:
    """First-occurrence cluster labels for grid-quantized points.

    Cell coordinates are floor((p - origin) * inv_cell) clamped to
    [0, max_coord]. Returns (labels int64 (N,), cluster_count).
    """
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    origin = np.array([ox, oy, oz], dtype=np.float64)
    coords = np.floor((points - origin) * inv_cell).astype(np.int64)
    np.clip(coords, 0, max_coord, out=coords)
    if n >= _PACK_LIMIT:
        return _first_occurrence_labels(coords, axis=0)
    packed = np.zeros(n, dtype=np.int64)
    for axis in range(3):
        _, axis_labels = np.unique(coords[:, axis], return_inverse=True)
        packed = (packed << 21) | axis_labels.reshape(-1).astype(np.int64)
    return _first_occurrence_labels(packed)


def edges_all_shared_twice(tris: np.ndarray) -> bool:
    """True iff every undirected edge occurs in exactly two triangles.

    Expects (T, 3) int64 vertex labels with degenerate rows already removed
    and labels < 2**31.
    """
    if len(tris) == 0:
        return True
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keys = (lo << 32) | hi
    _, counts = np.unique(keys, return_counts=True)
    return bool((counts == 2).all())


def label_centroids(points: np.ndarray, labels: np.ndarray, count: int) -> np.ndarray:
    """Mean position per label, shape (count, 3)."""
    out = np.empty((count, 3), dtype=np.float64)
    weights = np.bincount(labels, minlength=count).astype(np.float64)
    for axis in range(3):
        sums = np.bincount(labels, weights=points[:, axis], minlength=count)
        out[:, axis] = sums
    out /= weights[:, None]
    return out
