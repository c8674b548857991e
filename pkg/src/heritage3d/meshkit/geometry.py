"""Geometric queries and decimation over mesh documents.

Everything here works on world-space geometry (node transforms applied)
and treats documents as immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidDocument, NoVertices
from . import kernels
from .document import MeshDocument, world_soup

WELD_TOLERANCE = 1e-6

# Stage-4 output budget: generated assets should land in this band.
TRIANGLE_BUDGET_LOW = 50_000
TRIANGLE_BUDGET_HIGH = 100_000


@dataclass(frozen=True)
class AABB:
    """Axis-aligned bounding box; min <= max componentwise."""

    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def contains(self, other: "AABB", slack: float = 0.0) -> bool:
        return all(
            self.min[i] - slack <= other.min[i] and other.max[i] <= self.max[i] + slack
            for i in range(3)
        )

    def to_dict(self) -> dict:
        return {"min": list(self.min), "max": list(self.max)}


def triangle_count(doc: MeshDocument) -> int:
    """Total triangles across all primitives (instances not double-counted)."""
    return sum(p.triangle_count for m in doc.meshes for p in m.primitives)


def bounding_box(doc: MeshDocument) -> AABB:
    positions, _ = world_soup(doc)
    if len(positions) == 0:
        raise NoVertices("document has no vertices")
    lo = positions.min(axis=0)
    hi = positions.max(axis=0)
    return AABB(tuple(float(v) for v in lo), tuple(float(v) for v in hi))


def weld_labels(positions: np.ndarray, tolerance: float = WELD_TOLERANCE):
    """Cluster positionally identical vertices (grid quantization at tolerance).

    Returns (labels, count) with labels in first-occurrence order, so label
    k's representative is the first vertex that mapped to it.
    """
    if len(positions) == 0:
        return np.zeros(0, dtype=np.int64), 0
    origin = positions.min(axis=0)
    return kernels.grid_labels(positions, origin, 1.0 / tolerance)


def _nondegenerate(tri_labels: np.ndarray) -> np.ndarray:
    a, b, c = tri_labels[:, 0], tri_labels[:, 1], tri_labels[:, 2]
    return tri_labels[(a != b) & (b != c) & (c != a)]


def is_watertight(doc: MeshDocument, tolerance: float = WELD_TOLERANCE) -> bool:
    """True iff every undirected edge is shared by exactly two triangles.

    Vertices are welded at `tolerance` first, so seams between primitives
    that merely duplicate coordinates do not count as boundaries. Disjoint
    closed components are watertight together.
    """
    positions, tris = world_soup(doc)
    if len(tris) == 0:
        return True
    labels, _ = weld_labels(positions, tolerance)
    tri_labels = _nondegenerate(labels[tris])
    if len(tri_labels) == 0:
        return True
    return kernels.edges_all_shared_twice(tri_labels)


def decimate(doc: MeshDocument, target_triangles: int) -> MeshDocument:
    """Reduce triangle count to at most `target_triangles` by vertex clustering.

    Vertices are snapped to a uniform cubic grid and each cluster is
    replaced by its centroid; degenerate triangles are dropped. The grid is
    refined by doubling (1, 2, 4, ... cells along the longest axis) and the
    finest grid whose output still meets the target wins, so the result
    keeps as much shape as the budget allows. Documents already at or under
    the target are returned unchanged. The output is a flattened
    single-primitive document in world space; its bounding box never
    exceeds the input's.
    """
    from .validate import validate  # local import to avoid a cycle

    if target_triangles < 1:
        raise ValueError("target_triangles must be >= 1")
    report = validate(doc)
    if report.errors:
        raise InvalidDocument("; ".join(report.errors))
    if triangle_count(doc) <= target_triangles:
        return doc

    positions, tris = world_soup(doc)
    lo = positions.min(axis=0)
    extent = float((positions.max(axis=0) - lo).max())
    name = doc.meshes[0].name if doc.meshes else "decimated"

    if extent == 0.0:
        return MeshDocument.from_geometry(
            np.zeros((0, 3), np.float32), np.zeros(0, np.uint32), name=name
        )

    best = None
    cells = 1
    while cells <= (1 << 22):
        labels, count = kernels.grid_labels(
            positions, lo, cells / extent, max_coord=cells - 1
        )
        tri_labels = _nondegenerate(labels[tris])
        if len(tri_labels) > target_triangles:
            break
        best = (labels, count, tri_labels)
        if count == len(positions):
            break  # every vertex is its own cluster; no finer grid changes anything
        cells *= 2

    labels, count, tri_labels = best
    centroids = kernels.label_centroids(positions, labels, count)
    used, compact_tris = np.unique(tri_labels.reshape(-1), return_inverse=True)
    return MeshDocument.from_geometry(
        centroids[used].astype(np.float32),
        compact_tris.reshape(-1).astype(np.uint32),
        name=name,
    )
