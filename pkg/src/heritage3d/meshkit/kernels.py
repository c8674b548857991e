"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the numpy twin when
the extension is missing or HERITAGE3D_PURE_PYTHON=1 is set. Both expose
the same functions with identical results.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("HERITAGE3D_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # compiled extension
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME

# Coordinate clamp bound used when no grid bound applies (welding).
UNBOUNDED = (1 << 62)


def backend_name() -> str:
    return BACKEND


def grid_labels(points, origin, inv_cell: float, max_coord: int = UNBOUNDED):
    """(labels, count) of first-occurrence grid-cell labels for points."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    ox, oy, oz = (float(v) for v in origin)
    return _impl.grid_labels(pts, ox, oy, oz, float(inv_cell), int(max_coord))


def edges_all_shared_twice(tris) -> bool:
    """True iff every undirected edge occurs in exactly two triangles."""
    t = np.ascontiguousarray(tris, dtype=np.int64)
    if t.size and t.max() >= (1 << 31):
        raise ValueError("vertex labels exceed 2**31; edge packing would overflow")
    return _impl.edges_all_shared_twice(t)


def label_centroids(points, labels, count: int):
    """Mean position per label, shape (count, 3) float64."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    lab = np.ascontiguousarray(labels, dtype=np.int64)
    return _impl.label_centroids(pts, lab, int(count))
