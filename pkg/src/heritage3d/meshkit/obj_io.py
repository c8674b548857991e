"""Wavefront OBJ export (and a minimal reader used to verify exports).

Output is ASCII with LF line endings, `v x y z` records first, then
`f i j k` records with 1-based indices, in world space with vertices
welded at the standard tolerance.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidDocument, MalformedDocument
from .document import MeshDocument, world_soup
from .geometry import WELD_TOLERANCE, weld_labels


def _fmt(value: float) -> str:
    # 9 significant digits round-trips float32 exactly; integers print bare.
    return f"{value:.9g}"


def export_obj(doc: MeshDocument, tolerance: float = WELD_TOLERANCE) -> bytes:
    """World-space OBJ bytes: welded vertices, 1-based triangular faces."""
    from .validate import validate

    report = validate(doc)
    if report.errors:
        raise InvalidDocument("; ".join(report.errors))

    positions, tris = world_soup(doc)
    lines: list[str] = []
    if len(positions):
        labels, count = weld_labels(positions, tolerance)
        # Representative of each cluster: first vertex that mapped to it.
        first_index = np.full(count, -1, dtype=np.int64)
        seen_order = np.arange(len(labels) - 1, -1, -1, dtype=np.int64)
        first_index[labels[::-1]] = seen_order
        reps = positions[first_index]
        for x, y, z in reps:
            lines.append(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}")
        for a, b, c in labels[tris] + 1:
            lines.append(f"f {a} {b} {c}")
    text = "\n".join(lines)
    if text:
        text += "\n"
    return text.encode("ascii")


def parse_obj(data: bytes) -> MeshDocument:
    """Read `v`/`f` records into a single-primitive document.

    Faces may use `i`, `i/t`, or `i/t/n` forms; polygons are fan-
    triangulated. Only positive 1-based indices are supported.
    """
    positions: list[tuple[float, float, float]] = []
    triangles: list[tuple[int, int, int]] = []
    for line_no, raw in enumerate(data.decode("utf-8", errors="replace").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MalformedDocument(f"line {line_no}: vertex needs 3 coordinates")
            positions.append(tuple(float(v) for v in parts[1:4]))
        elif parts[0] == "f":
            if len(parts) < 4:
                raise MalformedDocument(f"line {line_no}: face needs 3+ vertices")
            corner_ids = []
            for token in parts[1:]:
                index_text = token.split("/")[0]
                index = int(index_text)
                if index < 1:
                    raise MalformedDocument(
                        f"line {line_no}: only positive 1-based indices supported"
                    )
                corner_ids.append(index - 1)
            for second, third in zip(corner_ids[1:], corner_ids[2:]):
                triangles.append((corner_ids[0], second, third))
        # other record types (vn, vt, usemtl, o, g, s) are ignored

    pos = np.asarray(positions, dtype=np.float32).reshape(-1, 3)
    tris = np.asarray(triangles, dtype=np.uint32).reshape(-1, 3)
    if len(tris) and tris.max() >= len(pos):
        raise MalformedDocument("face index out of range")
    return MeshDocument.from_geometry(pos, tris.reshape(-1), name="obj")
