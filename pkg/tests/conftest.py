import io
import random

import numpy as np
import pytest
from PIL import Image

from heritage3d.catalog import CaptureMeta, SiteRecord
from heritage3d.meshkit import Mesh, MeshDocument, Node, Primitive
from heritage3d.workspace import Workspace

TABLE_SITE = dict(
    name="Choto Sona Mosque, Gaur, Naogaon",
    site_type="Single-domed mosque",
    material="Gray sandstone",
    features=["Bronze dome top", "carved façade", "ornamental lattice"],
)


def make_png(color=(12, 34, 56), size=(64, 48)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


def make_jpeg(color=(12, 34, 56), size=(64, 48)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="JPEG")
    return buf.getvalue()


@pytest.fixture
def workspace(tmp_path) -> Workspace:
    return Workspace(tmp_path / "ws")


@pytest.fixture
def ready_site(workspace) -> str:
    """A registered site with two views spanning exactly 90 degrees."""
    site_id = workspace.catalog.register_site(SiteRecord(**TABLE_SITE))
    workspace.catalog.ingest_image(
        site_id, make_png((10, 20, 30)), CaptureMeta(azimuth_deg=350.0)
    )
    workspace.catalog.ingest_image(
        site_id, make_png((40, 50, 60)), CaptureMeta(azimuth_deg=80.0)
    )
    return site_id


def random_document(rng: random.Random) -> MeshDocument:
    """A structurally valid document with random geometry, names, and TRS."""
    meshes = []
    for mi in range(rng.randint(1, 3)):
        primitives = []
        for _ in range(rng.randint(1, 2)):
            n_verts = rng.randint(4, 40)
            positions = np.array(
                [
                    [rng.uniform(-10, 10) for _ in range(3)]
                    for _ in range(n_verts)
                ],
                dtype=np.float32,
            )
            n_tris = rng.randint(1, 30)
            indices = np.array(
                [rng.randrange(n_verts) for _ in range(3 * n_tris)], dtype=np.uint32
            )
            material = None
            if rng.random() < 0.3:
                material = {
                    "pbrMetallicRoughness": {
                        "baseColorFactor": [
                            round(rng.random(), 4) for _ in range(3)
                        ]
                        + [1.0]
                    }
                }
            primitives.append(Primitive(positions, indices, material=material))
        meshes.append(Mesh(primitives, name=f"mesh-{mi}" if rng.random() < 0.7 else ""))

    def random_trs():
        if rng.random() < 0.4:
            return (0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 1.0), (1.0, 1.0, 1.0)
        translation = tuple(rng.uniform(-5, 5) for _ in range(3))
        q = [rng.uniform(-1, 1) for _ in range(4)]
        norm = sum(v * v for v in q) ** 0.5 or 1.0
        rotation = tuple(v / norm for v in q)
        scale = tuple(rng.uniform(0.2, 3.0) for _ in range(3))
        return translation, rotation, scale

    nodes = []
    for mi in range(len(meshes)):
        translation, rotation, scale = random_trs()
        nodes.append(
            Node(
                mesh=mi,
                translation=translation,
                rotation=rotation,
                scale=scale,
                name=f"node-{mi}" if rng.random() < 0.5 else "",
            )
        )
    # Sometimes hang the mesh nodes off a transform-only parent.
    if rng.random() < 0.3:
        translation, rotation, scale = random_trs()
        nodes.append(
            Node(
                children=list(range(len(meshes))),
                translation=translation,
                rotation=rotation,
                scale=scale,
                name="root",
            )
        )
        roots = [len(nodes) - 1]
    else:
        roots = list(range(len(meshes)))
    return MeshDocument(meshes=meshes, nodes=nodes, scene_roots=roots)
