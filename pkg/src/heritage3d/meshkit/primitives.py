"""Parametric mesh generators with analytically known triangle counts.

Used by the deterministic mock mesh backend and as test fixtures:
 - unit cube: 12 triangles, watertight
 - icosphere with s subdivisions: 20 * 4**s triangles, watertight
 - building (grid-subdivided box + icosphere dome): 12*n^2 + 20*4**s
"""

from __future__ import annotations

import numpy as np

from .document import MeshDocument

_CUBE_CORNERS = np.array(
    [
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ],
    dtype=np.float32,
)

_CUBE_FACES = np.array(
    [
        [0, 3, 2], [0, 2, 1],  # bottom, -z
        [4, 5, 6], [4, 6, 7],  # top, +z
        [0, 1, 5], [0, 5, 4],  # front, -y
        [1, 2, 6], [1, 6, 5],  # right, +x
        [2, 3, 7], [2, 7, 6],  # back, +y
        [3, 0, 4], [3, 4, 7],  # left, -x
    ],
    dtype=np.uint32,
)


def unit_cube(name: str = "cube") -> MeshDocument:
    """Axis-aligned cube spanning (0,0,0)-(1,1,1): 8 vertices, 12 triangles."""
    return MeshDocument.from_geometry(_CUBE_CORNERS.copy(), _CUBE_FACES.reshape(-1), name=name)


def cube_missing_face(name: str = "open-cube") -> MeshDocument:
    """Unit cube with the left face removed: 10 triangles, boundary edges."""
    return MeshDocument.from_geometry(
        _CUBE_CORNERS.copy(), _CUBE_FACES[:10].reshape(-1), name=name
    )


def tetrahedron(offset=(0.0, 0.0, 0.0), scale: float = 1.0, name: str = "tet") -> MeshDocument:
    """Closed tetrahedron: 4 vertices, 4 triangles."""
    verts = np.array(
        [[0, 0, 0], [1, 0, 0], [0.5, 1, 0], [0.5, 0.5, 1]], dtype=np.float64
    ) * scale + np.asarray(offset, dtype=np.float64)
    faces = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]], dtype=np.uint32)
    return MeshDocument.from_geometry(verts.astype(np.float32), faces.reshape(-1), name=name)


def icosphere_geometry(
    subdivisions: int, radius: float = 0.5, center=(0.0, 0.0, 0.0)
) -> tuple[np.ndarray, np.ndarray]:
    """Vertices/faces of an icosphere: 20 * 4**s faces, 10 * 4**s + 2 vertices."""
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vert_list = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            cached = midpoint_cache.get(key)
            if cached is not None:
                return cached
            va, vb = vert_list[a], vert_list[b]
            vert_list.append(
                ((va[0] + vb[0]) / 2, (va[1] + vb[1]) / 2, (va[2] + vb[2]) / 2)
            )
            midpoint_cache[key] = len(vert_list) - 1
            return midpoint_cache[key]

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces

    pts = np.asarray(vert_list, dtype=np.float64)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts = pts * radius + np.asarray(center, dtype=np.float64)
    return pts.astype(np.float32), np.asarray(faces, dtype=np.uint32).reshape(-1)


def icosphere(
    subdivisions: int, radius: float = 0.5, center=(0.0, 0.0, 0.0), name: str = "icosphere"
) -> MeshDocument:
    positions, indices = icosphere_geometry(subdivisions, radius, center)
    return MeshDocument.from_geometry(positions, indices, name=name)


def box_grid_geometry(
    divisions: int, size=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)
) -> tuple[np.ndarray, np.ndarray]:
    """Box with each face split into divisions^2 quads: 12 * n^2 triangles.

    Faces duplicate their boundary vertices; welding at any tolerance
    closes the surface.
    """
    if divisions < 1:
        raise ValueError("divisions must be >= 1")
    n = divisions
    sx, sy, sz = size
    ox, oy, oz = origin
    # Each face: origin corner, u edge vector, v edge vector (outward u x v).
    face_frames = [
        ((ox, oy, oz), (0, sy, 0), (sx, 0, 0)),          # bottom (-z)
        ((ox, oy, oz + sz), (sx, 0, 0), (0, sy, 0)),     # top (+z)
        ((ox, oy, oz), (sx, 0, 0), (0, 0, sz)),          # front (-y)
        ((ox + sx, oy, oz), (0, sy, 0), (0, 0, sz)),     # right (+x)
        ((ox + sx, oy + sy, oz), (-sx, 0, 0), (0, 0, sz)),  # back (+y)
        ((ox, oy + sy, oz), (0, -sy, 0), (0, 0, sz)),    # left (-x)
    ]
    all_pts = []
    all_tris = []
    offset = 0
    for corner, u_vec, v_vec in face_frames:
        corner = np.asarray(corner, dtype=np.float64)
        u_vec = np.asarray(u_vec, dtype=np.float64)
        v_vec = np.asarray(v_vec, dtype=np.float64)
        steps = np.linspace(0.0, 1.0, n + 1)
        grid = (
            corner
            + steps[:, None, None] * u_vec[None, None, :]
            + steps[None, :, None] * v_vec[None, None, :]
        )
        all_pts.append(grid.reshape(-1, 3))
        idx = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1) + offset
        a = idx[:-1, :-1].reshape(-1)
        b = idx[1:, :-1].reshape(-1)
        c = idx[1:, 1:].reshape(-1)
        d = idx[:-1, 1:].reshape(-1)
        all_tris.append(np.stack([a, b, c], axis=1))
        all_tris.append(np.stack([a, c, d], axis=1))
        offset += (n + 1) * (n + 1)
    positions = np.vstack(all_pts).astype(np.float32)
    indices = np.vstack(all_tris).astype(np.uint32).reshape(-1)
    return positions, indices


def building_geometry(
    wall_divisions: int, dome_subdivisions: int
) -> tuple[np.ndarray, np.ndarray]:
    """Boxy body plus icosphere dome: 12*n^2 + 20*4**s triangles."""
    body_pos, body_idx = box_grid_geometry(
        wall_divisions, size=(1.0, 1.0, 0.6), origin=(-0.5, -0.5, 0.0)
    )
    dome_pos, dome_idx = icosphere_geometry(
        dome_subdivisions, radius=0.3, center=(0.0, 0.0, 0.62)
    )
    positions = np.vstack([body_pos, dome_pos])
    indices = np.concatenate([body_idx, dome_idx + len(body_pos)])
    return positions, indices


def building(
    wall_divisions: int, dome_subdivisions: int, name: str = "building"
) -> MeshDocument:
    positions, indices = building_geometry(wall_divisions, dome_subdivisions)
    return MeshDocument.from_geometry(positions, indices, name=name)
