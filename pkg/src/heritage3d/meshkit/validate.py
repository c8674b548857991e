"""Structural validation and the stage-4 quality report.

Structural problems (bad indices, bad shapes, bad references, wrong
version) are errors; triangle-budget violations and non-watertightness
are warnings only, since the budget is approximate and desk-scale
fixtures must still validate cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .document import MeshDocument
from .geometry import (
    AABB,
    TRIANGLE_BUDGET_HIGH,
    TRIANGLE_BUDGET_LOW,
    bounding_box,
    is_watertight,
    triangle_count,
)
from ..errors import NoVertices


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    triangle_count: int = 0
    budget_ok: bool = False
    bbox: AABB | None = None
    watertight: bool = False

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "triangle_count": self.triangle_count,
            "budget_ok": self.budget_ok,
            "bbox": self.bbox.to_dict() if self.bbox else None,
            "watertight": self.watertight,
        }


def validate(doc: MeshDocument) -> ValidationReport:
    """Validate structure and report budget/watertight quality signals."""
    report = ValidationReport()
    errors = report.errors

    if doc.asset_version != "2.0":
        errors.append(f"unsupported asset version {doc.asset_version!r}")

    indices_ok = True
    for mi, mesh in enumerate(doc.meshes):
        for pi, prim in enumerate(mesh.primitives):
            where = f"mesh {mi} primitive {pi}"
            if prim.positions.ndim != 2 or prim.positions.shape[1] != 3:
                errors.append(f"{where}: positions are not 3-vectors")
                indices_ok = False
                continue
            if len(prim.indices) % 3 != 0:
                errors.append(f"{where}: index count {len(prim.indices)} not divisible by 3")
                indices_ok = False
            if len(prim.indices) and int(prim.indices.max()) >= len(prim.positions):
                errors.append(
                    f"{where}: index_out_of_range "
                    f"(max index {int(prim.indices.max())}, {len(prim.positions)} vertices)"
                )
                indices_ok = False

    for ni, node in enumerate(doc.nodes):
        if node.mesh is not None and not (0 <= node.mesh < len(doc.meshes)):
            errors.append(f"node {ni}: mesh reference {node.mesh} out of range")
        for child in node.children:
            if not (0 <= child < len(doc.nodes)):
                errors.append(f"node {ni}: child {child} out of range")

    for root in doc.scene_roots:
        if not (0 <= root < len(doc.nodes)):
            errors.append(f"scene root {root} out of range")

    if _has_node_cycle(doc):
        errors.append("node graph contains a cycle")

    report.triangle_count = triangle_count(doc)
    report.budget_ok = (
        TRIANGLE_BUDGET_LOW <= report.triangle_count <= TRIANGLE_BUDGET_HIGH
    )
    if not report.budget_ok:
        report.warnings.append(
            f"triangle count {report.triangle_count} outside the "
            f"{TRIANGLE_BUDGET_LOW}-{TRIANGLE_BUDGET_HIGH} budget"
        )

    try:
        report.bbox = bounding_box(doc)
    except NoVertices:
        report.bbox = None

    if report.ok and indices_ok:
        report.watertight = is_watertight(doc)
        if not report.watertight:
            report.warnings.append("mesh is not watertight (boundary edges present)")

    report.warnings.extend(doc.warnings)
    return report


def _has_node_cycle(doc: MeshDocument) -> bool:
    valid = range(len(doc.nodes))

    def walk(index: int, trail: frozenset[int]) -> bool:
        if index in trail:
            return True
        if index not in valid:
            return False
        return any(walk(c, trail | {index}) for c in doc.nodes[index].children)

    return any(walk(root, frozenset()) for root in doc.scene_roots)
