"""In-memory model of the supported glTF 2.0 subset.

Triangle primitives with float32 positions and uint32 indices, a node tree
with TRS transforms, and a single scene. Materials and texture tables are
carried opaquely so a base-color reference survives a round trip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IDENTITY_TRANSLATION = (0.0, 0.0, 0.0)
IDENTITY_ROTATION = (0.0, 0.0, 0.0, 1.0)  # quaternion xyzw, glTF order
IDENTITY_SCALE = (1.0, 1.0, 1.0)


@dataclass
class Primitive:
    positions: np.ndarray  # (N, 3) float32
    indices: np.ndarray  # (K,) uint32, K % 3 == 0
    material: dict | None = None  # opaque glTF material dict, passed through

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float32)
        if self.positions.ndim == 1:
            self.positions = self.positions.reshape(-1, 3)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.uint32).reshape(-1)

    @property
    def triangle_count(self) -> int:
        return len(self.indices) // 3

    def triangles(self) -> np.ndarray:
        """Index triples, shape (T, 3); trailing partial triples dropped."""
        whole = 3 * (len(self.indices) // 3)
        return self.indices[:whole].reshape(-1, 3)


@dataclass
class Mesh:
    primitives: list[Primitive]
    name: str = ""


@dataclass
class Node:
    mesh: int | None = None
    children: list[int] = field(default_factory=list)
    translation: tuple[float, float, float] = IDENTITY_TRANSLATION
    rotation: tuple[float, float, float, float] = IDENTITY_ROTATION
    scale: tuple[float, float, float] = IDENTITY_SCALE
    name: str = ""

    def local_matrix(self) -> np.ndarray:
        return trs_matrix(self.translation, self.rotation, self.scale)


@dataclass
class MeshDocument:
    meshes: list[Mesh] = field(default_factory=list)
    nodes: list[Node] = field(default_factory=list)
    scene_roots: list[int] = field(default_factory=list)
    asset_version: str = "2.0"
    warnings: list[str] = field(default_factory=list)
    # Opaque top-level glTF tables (textures/images/samplers) kept verbatim.
    passthrough: dict = field(default_factory=dict)

    @classmethod
    def from_geometry(
        cls,
        positions,
        indices,
        name: str = "mesh",
        translation: tuple[float, float, float] = IDENTITY_TRANSLATION,
    ) -> "MeshDocument":
        """Single-mesh document with one node instancing it."""
        prim = Primitive(np.asarray(positions), np.asarray(indices))
        return cls(
            meshes=[Mesh([prim], name=name)],
            nodes=[Node(mesh=0, translation=translation, name=name)],
            scene_roots=[0],
        )

    def vertex_count(self) -> int:
        return sum(len(p.positions) for m in self.meshes for p in m.primitives)


def quaternion_matrix(q: tuple[float, float, float, float]) -> np.ndarray:
    """3x3 rotation matrix from a glTF xyzw quaternion (normalized here)."""
    x, y, z, w = q
    norm = np.sqrt(x * x + y * y + z * z + w * w)
    if norm == 0.0:
        return np.eye(3)
    x, y, z, w = x / norm, y / norm, z / norm, w / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def trs_matrix(translation, rotation, scale) -> np.ndarray:
    """4x4 affine T @ R @ S, the glTF node transform composition."""
    m = np.eye(4)
    rs = quaternion_matrix(rotation) * np.asarray(scale, dtype=np.float64)
    m[:3, :3] = rs
    m[:3, 3] = translation
    return m


def iter_world_primitives(doc: MeshDocument):
    """Yield (primitive, world_positions float64 (N,3)) per mesh instance.

    Walks the scene graph composing TRS transforms. Meshes not referenced
    by any node are yielded once at identity so validation still sees them.
    """
    referenced: set[int] = set()

    def walk(node_index: int, parent: np.ndarray, trail: frozenset[int]):
        if node_index in trail or not (0 <= node_index < len(doc.nodes)):
            return  # cycles and dangling children are reported by validate()
        node = doc.nodes[node_index]
        world = parent @ node.local_matrix()
        if node.mesh is not None and 0 <= node.mesh < len(doc.meshes):
            referenced.add(node.mesh)
            for prim in doc.meshes[node.mesh].primitives:
                yield prim, _apply(world, prim.positions)
        for child in node.children:
            yield from walk(child, world, trail | {node_index})

    identity = np.eye(4)
    for root in doc.scene_roots:
        yield from walk(root, identity, frozenset())
    for mesh_index, mesh in enumerate(doc.meshes):
        if mesh_index not in referenced:
            for prim in mesh.primitives:
                yield prim, prim.positions.astype(np.float64)


def _apply(matrix: np.ndarray, positions: np.ndarray) -> np.ndarray:
    pts = positions.astype(np.float64)
    return pts @ matrix[:3, :3].T + matrix[:3, 3]


def world_soup(doc: MeshDocument) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated world-space geometry: (positions (V,3) f64, tris (T,3) i64)."""
    pos_blocks: list[np.ndarray] = []
    tri_blocks: list[np.ndarray] = []
    offset = 0
    for prim, world_pos in iter_world_primitives(doc):
        pos_blocks.append(world_pos)
        tri_blocks.append(prim.triangles().astype(np.int64) + offset)
        offset += len(world_pos)
    if not pos_blocks:
        return np.zeros((0, 3), dtype=np.float64), np.zeros((0, 3), dtype=np.int64)
    return np.vstack(pos_blocks), np.vstack(tri_blocks)


def documents_equal(a: MeshDocument, b: MeshDocument) -> bool:
    """Semantic equality: same vertices, indices, transforms, names, scenes."""
    if a.asset_version != b.asset_version:
        return False
    if len(a.meshes) != len(b.meshes) or len(a.nodes) != len(b.nodes):
        return False
    if a.scene_roots != b.scene_roots:
        return False
    for ma, mb in zip(a.meshes, b.meshes):
        if ma.name != mb.name or len(ma.primitives) != len(mb.primitives):
            return False
        for pa, pb in zip(ma.primitives, mb.primitives):
            if not np.array_equal(pa.positions, pb.positions):
                return False
            if not np.array_equal(pa.indices, pb.indices):
                return False
    for na, nb in zip(a.nodes, b.nodes):
        if (na.mesh, na.children, na.name) != (nb.mesh, nb.children, nb.name):
            return False
        if (
            tuple(na.translation) != tuple(nb.translation)
            or tuple(na.rotation) != tuple(nb.rotation)
            or tuple(na.scale) != tuple(nb.scale)
        ):
            return False
    return True
