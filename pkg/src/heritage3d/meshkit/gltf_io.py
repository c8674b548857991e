"""glTF 2.0 reading and writing for the supported subset.

Subset: triangle primitives, float32 VEC3 positions, uint16/uint32 scalar
indices, node TRS transforms, a single scene, embedded buffers (data URIs
or the GLB binary chunk). Materials and texture tables ride along opaquely.
Writing is deterministic: equal documents produce identical bytes.
"""

from __future__ import annotations

import base64
import json
import struct

import numpy as np

from ..errors import InvalidDocument, MalformedDocument, UnsupportedVersion
from .document import (
    IDENTITY_ROTATION,
    IDENTITY_SCALE,
    IDENTITY_TRANSLATION,
    Mesh,
    MeshDocument,
    Node,
    Primitive,
)

GLB_MAGIC = 0x46546C67  # "glTF"
GLB_JSON_CHUNK = 0x4E4F534A  # "JSON"
GLB_BIN_CHUNK = 0x004E4942  # "BIN\0"

COMPONENT_FLOAT = 5126
COMPONENT_USHORT = 5123
COMPONENT_UINT = 5125

MODE_TRIANGLES = 4

_DATA_URI_PREFIX = "data:application/octet-stream;base64,"

_COMPONENT_DTYPES = {
    COMPONENT_FLOAT: np.dtype("<f4"),
    COMPONENT_USHORT: np.dtype("<u2"),
    COMPONENT_UINT: np.dtype("<u4"),
}

_TYPE_WIDTH = {"SCALAR": 1, "VEC3": 3}

# Top-level tables we neither interpret nor rebuild; they pass through.
_PASSTHROUGH_KEYS = ("textures", "images", "samplers", "extensions", "extras")


# --- parsing -----------------------------------------------------------------

def parse_gltf(data: bytes) -> MeshDocument:
    """Parse glTF JSON or a GLB container into a MeshDocument."""
    if data[:4] == b"glTF":
        json_bytes, bin_chunk = _split_glb(data)
    else:
        json_bytes, bin_chunk = data, None

    try:
        obj = json.loads(json_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"not valid glTF JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedDocument("glTF root must be a JSON object")

    asset = obj.get("asset")
    if not isinstance(asset, dict) or "version" not in asset:
        raise MalformedDocument("missing required field: asset.version")
    version = asset["version"]
    if version != "2.0":
        raise UnsupportedVersion(f"unsupported glTF version {version!r}")

    warnings: list[str] = []
    buffers = _load_buffers(obj.get("buffers", []), bin_chunk)
    views = _load_buffer_views(obj.get("bufferViews", []), buffers)
    accessors = obj.get("accessors", [])
    materials = obj.get("materials", [])

    meshes = [
        _parse_mesh(mesh_obj, i, accessors, views, materials, warnings)
        for i, mesh_obj in enumerate(obj.get("meshes", []))
    ]
    nodes = [_parse_node(node_obj, i) for i, node_obj in enumerate(obj.get("nodes", []))]

    scenes = obj.get("scenes", [])
    scene_index = obj.get("scene", 0)
    if len(scenes) > 1:
        warnings.append(f"document has {len(scenes)} scenes; using scene {scene_index}")
    if scenes:
        if not (0 <= scene_index < len(scenes)):
            raise MalformedDocument(f"scene index {scene_index} out of range")
        scene_roots = list(scenes[scene_index].get("nodes", []))
    else:
        scene_roots = []

    for ext in obj.get("extensionsUsed", []):
        warnings.append(f"extension {ext!r} passed through opaquely")

    passthrough = {}
    for key in _PASSTHROUGH_KEYS:
        if key in obj:
            passthrough[key] = obj[key]
    if _images_reference_buffers(passthrough):
        warnings.append("texture images referencing buffer views were dropped")
        passthrough.pop("textures", None)
        passthrough.pop("images", None)
        passthrough.pop("samplers", None)

    return MeshDocument(
        meshes=meshes,
        nodes=nodes,
        scene_roots=scene_roots,
        asset_version=version,
        warnings=warnings,
        passthrough=passthrough,
    )


def _split_glb(data: bytes) -> tuple[bytes, bytes | None]:
    if len(data) < 12:
        raise MalformedDocument("GLB shorter than its 12-byte header")
    magic, version, total = struct.unpack_from("<III", data, 0)
    if magic != GLB_MAGIC:
        raise MalformedDocument("bad GLB magic")
    if version != 2:
        raise UnsupportedVersion(f"unsupported GLB container version {version}")
    if total != len(data):
        raise MalformedDocument(
            f"GLB declares {total} bytes but stream has {len(data)}"
        )
    chunks = []
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise MalformedDocument("truncated GLB chunk header")
        length, kind = struct.unpack_from("<II", data, pos)
        pos += 8
        if pos + length > len(data):
            raise MalformedDocument("truncated GLB chunk payload")
        chunks.append((kind, data[pos:pos + length]))
        pos += length
    if not chunks or chunks[0][0] != GLB_JSON_CHUNK:
        raise MalformedDocument("first GLB chunk must be JSON")
    bin_chunk = None
    for kind, payload in chunks[1:]:
        if kind == GLB_BIN_CHUNK:
            bin_chunk = payload
            break
    return chunks[0][1], bin_chunk


def _load_buffers(buffer_objs, bin_chunk: bytes | None) -> list[bytes]:
    buffers = []
    for i, entry in enumerate(buffer_objs):
        uri = entry.get("uri")
        declared = entry.get("byteLength")
        if uri is None:
            if i != 0 or bin_chunk is None:
                raise MalformedDocument(f"buffer {i} has no data source")
            data = bin_chunk
        elif uri.startswith("data:"):
            comma = uri.find(",")
            if comma == -1 or ";base64" not in uri[:comma]:
                raise MalformedDocument(f"buffer {i} data URI is not base64")
            try:
                data = base64.b64decode(uri[comma + 1:], validate=True)
            except Exception as exc:
                raise MalformedDocument(f"buffer {i} base64 decode failed") from exc
        else:
            raise MalformedDocument(
                f"buffer {i} references external uri {uri!r} (unsupported)"
            )
        if declared is not None and declared > len(data):
            raise MalformedDocument(
                f"buffer {i} declares {declared} bytes, data has {len(data)}"
            )
        buffers.append(data)
    return buffers


def _load_buffer_views(view_objs, buffers: list[bytes]):
    views = []
    for i, entry in enumerate(view_objs):
        buf_index = entry.get("buffer")
        if buf_index is None or not (0 <= buf_index < len(buffers)):
            raise MalformedDocument(f"bufferView {i} references missing buffer")
        offset = entry.get("byteOffset", 0)
        length = entry.get("byteLength")
        if length is None:
            raise MalformedDocument(f"bufferView {i} missing byteLength")
        if offset + length > len(buffers[buf_index]):
            raise MalformedDocument(f"bufferView {i} out of range of its buffer")
        views.append(
            {
                "data": buffers[buf_index][offset:offset + length],
                "stride": entry.get("byteStride"),
            }
        )
    return views


def _read_accessor(accessors, views, index: int, expect_type: str):
    if not (0 <= index < len(accessors)):
        raise MalformedDocument(f"accessor {index} out of range")
    acc = accessors[index]
    if "sparse" in acc:
        raise MalformedDocument(f"accessor {index} is sparse (unsupported)")
    kind = acc.get("type")
    if kind != expect_type:
        raise MalformedDocument(
            f"accessor {index} has type {kind!r}, expected {expect_type!r}"
        )
    component = acc.get("componentType")
    dtype = _COMPONENT_DTYPES.get(component)
    if dtype is None:
        raise MalformedDocument(
            f"accessor {index} componentType {component} unsupported "
            "(subset: float32, uint16, uint32)"
        )
    count = acc.get("count")
    if count is None or count < 0:
        raise MalformedDocument(f"accessor {index} missing count")
    width = _TYPE_WIDTH[expect_type]
    view_index = acc.get("bufferView")
    if view_index is None:
        # All-zeros accessor per glTF default.
        return np.zeros(count * width, dtype=dtype).reshape(count, width), component
    if not (0 <= view_index < len(views)):
        raise MalformedDocument(f"accessor {index} references missing bufferView")
    view = views[view_index]
    data = view["data"]
    stride = view["stride"]
    offset = acc.get("byteOffset", 0)
    item_size = dtype.itemsize * width
    if stride is None or stride == item_size:
        end = offset + count * item_size
        if end > len(data):
            raise MalformedDocument(f"accessor {index} out of range of its view")
        arr = np.frombuffer(data, dtype=dtype, count=count * width, offset=offset)
        return arr.reshape(count, width), component
    if stride < item_size:
        raise MalformedDocument(f"accessor {index} stride smaller than element")
    end = offset + stride * (count - 1) + item_size if count else offset
    if end > len(data):
        raise MalformedDocument(f"accessor {index} out of range of its view")
    raw = np.frombuffer(data, dtype=np.uint8)
    gather = (offset + np.arange(count)[:, None] * stride + np.arange(item_size)[None, :])
    return np.ascontiguousarray(raw[gather]).view(dtype).reshape(count, width), component


def _parse_mesh(mesh_obj, mesh_index, accessors, views, materials, warnings) -> Mesh:
    primitives = []
    for pi, prim in enumerate(mesh_obj.get("primitives", [])):
        where = f"mesh {mesh_index} primitive {pi}"
        mode = prim.get("mode", MODE_TRIANGLES)
        if mode != MODE_TRIANGLES:
            raise MalformedDocument(f"{where}: mode {mode} unsupported (triangles only)")
        attributes = prim.get("attributes", {})
        if "POSITION" not in attributes:
            raise MalformedDocument(f"{where}: missing required POSITION attribute")
        positions, component = _read_accessor(
            accessors, views, attributes["POSITION"], "VEC3"
        )
        if component != COMPONENT_FLOAT:
            raise MalformedDocument(f"{where}: POSITION must be float32")
        dropped = [k for k in attributes if k != "POSITION"]
        if dropped:
            warnings.append(f"{where}: attributes {dropped} ignored")
        if "indices" in prim:
            indices, component = _read_accessor(accessors, views, prim["indices"], "SCALAR")
            if component == COMPONENT_FLOAT:
                raise MalformedDocument(f"{where}: float indices unsupported")
            indices = indices.reshape(-1).astype(np.uint32)
        else:
            indices = np.arange(len(positions), dtype=np.uint32)
        material = None
        mat_index = prim.get("material")
        if mat_index is not None:
            if not (0 <= mat_index < len(materials)):
                raise MalformedDocument(f"{where}: material {mat_index} out of range")
            material = materials[mat_index]
        primitives.append(
            Primitive(positions.astype(np.float32), indices, material=material)
        )
    return Mesh(primitives, name=mesh_obj.get("name", ""))


def _parse_node(node_obj, index: int) -> Node:
    if "matrix" in node_obj:
        raise MalformedDocument(
            f"node {index} uses a matrix transform (subset supports TRS only)"
        )
    return Node(
        mesh=node_obj.get("mesh"),
        children=list(node_obj.get("children", [])),
        translation=tuple(node_obj.get("translation", IDENTITY_TRANSLATION)),
        rotation=tuple(node_obj.get("rotation", IDENTITY_ROTATION)),
        scale=tuple(node_obj.get("scale", IDENTITY_SCALE)),
        name=node_obj.get("name", ""),
    )


def _images_reference_buffers(passthrough: dict) -> bool:
    return any("bufferView" in img for img in passthrough.get("images", []))


# --- writing -----------------------------------------------------------------

def write_gltf(doc: MeshDocument, container: str = "json") -> bytes:
    """Serialize a valid document as glTF JSON or a GLB container.

    Deterministic: equal documents yield byte-identical output. Raises
    InvalidDocument when validate() reports structural errors.
    """
    from .validate import validate  # local import to avoid a cycle

    if container not in ("json", "glb"):
        raise ValueError(f"container must be 'json' or 'glb', not {container!r}")
    report = validate(doc)
    if report.errors:
        raise InvalidDocument("; ".join(report.errors))

    blob = bytearray()
    buffer_views = []
    accessors = []

    def add_block(data: bytes, target: int) -> int:
        while len(blob) % 4:
            blob.append(0)
        buffer_views.append(
            {
                "buffer": 0,
                "byteOffset": len(blob),
                "byteLength": len(data),
                "target": target,
            }
        )
        blob.extend(data)
        return len(buffer_views) - 1

    materials: list[dict] = []
    material_keys: dict[str, int] = {}

    meshes_json = []
    for mesh in doc.meshes:
        prims_json = []
        for prim in mesh.primitives:
            positions = np.ascontiguousarray(prim.positions, dtype="<f4")
            vertex_count = len(positions)
            index_dtype = "<u2" if vertex_count <= 0xFFFF + 1 else "<u4"
            indices = np.ascontiguousarray(prim.indices, dtype=index_dtype)

            pos_view = add_block(positions.tobytes(), 34962)
            accessors.append(
                {
                    "bufferView": pos_view,
                    "componentType": COMPONENT_FLOAT,
                    "count": vertex_count,
                    "type": "VEC3",
                    "min": _axis_reduce(positions, np.min),
                    "max": _axis_reduce(positions, np.max),
                }
            )
            pos_accessor = len(accessors) - 1

            idx_view = add_block(indices.tobytes(), 34963)
            accessors.append(
                {
                    "bufferView": idx_view,
                    "componentType": COMPONENT_USHORT
                    if index_dtype == "<u2"
                    else COMPONENT_UINT,
                    "count": len(indices),
                    "type": "SCALAR",
                }
            )
            idx_accessor = len(accessors) - 1

            prim_json = {
                "attributes": {"POSITION": pos_accessor},
                "indices": idx_accessor,
                "mode": MODE_TRIANGLES,
            }
            if prim.material is not None:
                key = json.dumps(prim.material, sort_keys=True)
                if key not in material_keys:
                    material_keys[key] = len(materials)
                    materials.append(prim.material)
                prim_json["material"] = material_keys[key]
            prims_json.append(prim_json)
        mesh_json = {"primitives": prims_json}
        if mesh.name:
            mesh_json["name"] = mesh.name
        meshes_json.append(mesh_json)

    nodes_json = []
    for node in doc.nodes:
        node_json = {}
        if node.name:
            node_json["name"] = node.name
        if node.mesh is not None:
            node_json["mesh"] = node.mesh
        if node.children:
            node_json["children"] = list(node.children)
        if tuple(node.translation) != IDENTITY_TRANSLATION:
            node_json["translation"] = [float(v) for v in node.translation]
        if tuple(node.rotation) != IDENTITY_ROTATION:
            node_json["rotation"] = [float(v) for v in node.rotation]
        if tuple(node.scale) != IDENTITY_SCALE:
            node_json["scale"] = [float(v) for v in node.scale]
        nodes_json.append(node_json)

    root: dict = {"asset": {"version": "2.0", "generator": "heritage3d meshkit"}}
    root["scene"] = 0
    root["scenes"] = [{"nodes": list(doc.scene_roots)}]
    if nodes_json:
        root["nodes"] = nodes_json
    if meshes_json:
        root["meshes"] = meshes_json
    if materials:
        root["materials"] = materials
    if accessors:
        root["accessors"] = accessors
        root["bufferViews"] = buffer_views
    for key, value in doc.passthrough.items():
        root.setdefault(key, value)

    blob_bytes = bytes(blob)
    if container == "json":
        if blob_bytes:
            root["buffers"] = [
                {
                    "byteLength": len(blob_bytes),
                    "uri": _DATA_URI_PREFIX + base64.b64encode(blob_bytes).decode("ascii"),
                }
            ]
        return json.dumps(root, ensure_ascii=False, separators=(",", ":")).encode("utf-8")

    if blob_bytes:
        root["buffers"] = [{"byteLength": len(blob_bytes)}]
    json_payload = json.dumps(root, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    json_payload += b" " * (-len(json_payload) % 4)
    chunks = struct.pack("<II", len(json_payload), GLB_JSON_CHUNK) + json_payload
    if blob_bytes:
        bin_payload = blob_bytes + b"\x00" * (-len(blob_bytes) % 4)
        chunks += struct.pack("<II", len(bin_payload), GLB_BIN_CHUNK) + bin_payload
    header = struct.pack("<III", GLB_MAGIC, 2, 12 + len(chunks))
    return header + chunks


def _axis_reduce(positions: np.ndarray, fn) -> list[float]:
    if len(positions) == 0:
        return [0.0, 0.0, 0.0]
    return [float(v) for v in fn(positions, axis=0)]
