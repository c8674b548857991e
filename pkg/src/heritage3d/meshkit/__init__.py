"""glTF 2.0 mesh toolkit: parse/write, validate, measure, decimate, export."""

from .document import (
    Mesh,
    MeshDocument,
    Node,
    Primitive,
    documents_equal,
    world_soup,
)
from .geometry import (
    AABB,
    TRIANGLE_BUDGET_HIGH,
    TRIANGLE_BUDGET_LOW,
    WELD_TOLERANCE,
    bounding_box,
    decimate,
    is_watertight,
    triangle_count,
)
from .gltf_io import parse_gltf, write_gltf
from .kernels import backend_name
from .obj_io import export_obj, parse_obj
from .validate import ValidationReport, validate

__all__ = [
    "AABB",
    "Mesh",
    "MeshDocument",
    "Node",
    "Primitive",
    "TRIANGLE_BUDGET_HIGH",
    "TRIANGLE_BUDGET_LOW",
    "ValidationReport",
    "WELD_TOLERANCE",
    "backend_name",
    "bounding_box",
    "decimate",
    "documents_equal",
    "export_obj",
    "is_watertight",
    "parse_gltf",
    "parse_obj",
    "triangle_count",
    "validate",
    "world_soup",
    "write_gltf",
]
