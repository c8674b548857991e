import base64
import json
import random
import struct

import numpy as np
import pytest

from conftest import random_document

from heritage3d.errors import InvalidDocument, MalformedDocument, UnsupportedVersion
from heritage3d.meshkit import (
    MeshDocument,
    documents_equal,
    parse_gltf,
    triangle_count,
    write_gltf,
)
from heritage3d.meshkit.primitives import unit_cube


def minimal_triangle_doc() -> MeshDocument:
    return MeshDocument.from_geometry(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=np.float32),
        np.array([0, 1, 2], dtype=np.uint32),
        name="tri",
    )


class TestParse:
    def test_minimal_valid_document(self):
        doc = parse_gltf(write_gltf(minimal_triangle_doc(), "json"))
        assert doc.asset_version == "2.0"
        assert triangle_count(doc) == 1

    def test_version_1_rejected(self):
        payload = json.dumps({"asset": {"version": "1.0"}}).encode()
        with pytest.raises(UnsupportedVersion):
            parse_gltf(payload)

    def test_missing_asset_rejected(self):
        with pytest.raises(MalformedDocument):
            parse_gltf(b"{}")

    def test_truncated_stream_rejected(self):
        data = write_gltf(minimal_triangle_doc(), "glb")
        with pytest.raises(MalformedDocument):
            parse_gltf(data[:20])

    def test_garbage_rejected(self):
        with pytest.raises(MalformedDocument):
            parse_gltf(b"\x00\x01\x02 not a gltf at all")

    def test_glb_bad_magic(self):
        data = bytearray(write_gltf(minimal_triangle_doc(), "glb"))
        # valid header but declared length lies
        struct.pack_into("<I", data, 8, len(data) + 4)
        with pytest.raises(MalformedDocument):
            parse_gltf(bytes(data))

    def test_external_buffer_uri_rejected(self):
        payload = json.dumps(
            {"asset": {"version": "2.0"}, "buffers": [{"uri": "model.bin", "byteLength": 4}]}
        ).encode()
        with pytest.raises(MalformedDocument):
            parse_gltf(payload)

    def test_accessor_out_of_range(self):
        raw = base64.b64encode(b"\x00" * 8).decode()
        payload = json.dumps(
            {
                "asset": {"version": "2.0"},
                "buffers": [
                    {"uri": "data:application/octet-stream;base64," + raw, "byteLength": 8}
                ],
                "bufferViews": [{"buffer": 0, "byteOffset": 0, "byteLength": 8}],
                "accessors": [
                    {
                        "bufferView": 0,
                        "componentType": 5126,
                        "count": 10,
                        "type": "VEC3",
                    }
                ],
                "meshes": [
                    {"primitives": [{"attributes": {"POSITION": 0}, "mode": 4}]}
                ],
            }
        ).encode()
        with pytest.raises(MalformedDocument):
            parse_gltf(payload)

    def test_non_triangle_mode_rejected(self):
        payload = json.dumps(
            {
                "asset": {"version": "2.0"},
                "meshes": [{"primitives": [{"attributes": {"POSITION": 0}, "mode": 1}]}],
            }
        ).encode()
        with pytest.raises(MalformedDocument):
            parse_gltf(payload)

    def test_unknown_extension_becomes_warning(self):
        doc_json = json.loads(write_gltf(minimal_triangle_doc(), "json"))
        doc_json["extensionsUsed"] = ["VENDOR_fancy_lighting"]
        doc = parse_gltf(json.dumps(doc_json).encode())
        assert any("VENDOR_fancy_lighting" in w for w in doc.warnings)

    def test_non_indexed_primitive_gets_sequential_indices(self):
        doc_json = json.loads(write_gltf(minimal_triangle_doc(), "json"))
        del doc_json["meshes"][0]["primitives"][0]["indices"]
        doc = parse_gltf(json.dumps(doc_json).encode())
        assert triangle_count(doc) == 1
        assert list(doc.meshes[0].primitives[0].indices) == [0, 1, 2]

    def test_strided_positions_read_correctly(self):
        # Interleave positions with 4 bytes of padding: stride 16.
        positions = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype="<f4")
        interleaved = bytearray()
        for row in positions:
            interleaved += row.tobytes() + b"\xde\xad\xbe\xef"
        raw = base64.b64encode(bytes(interleaved)).decode()
        payload = json.dumps(
            {
                "asset": {"version": "2.0"},
                "buffers": [
                    {
                        "uri": "data:application/octet-stream;base64," + raw,
                        "byteLength": len(interleaved),
                    }
                ],
                "bufferViews": [
                    {
                        "buffer": 0,
                        "byteOffset": 0,
                        "byteLength": len(interleaved),
                        "byteStride": 16,
                    }
                ],
                "accessors": [
                    {"bufferView": 0, "componentType": 5126, "count": 3, "type": "VEC3"}
                ],
                "meshes": [
                    {"primitives": [{"attributes": {"POSITION": 0}, "mode": 4}]}
                ],
            }
        ).encode()
        doc = parse_gltf(payload)
        assert np.array_equal(doc.meshes[0].primitives[0].positions, positions)


class TestWrite:
    def test_round_trip_unit_cube(self):
        cube = unit_cube()
        for container in ("json", "glb"):
            assert documents_equal(cube, parse_gltf(write_gltf(cube, container)))

    def test_write_deterministic(self):
        cube = unit_cube()
        assert write_gltf(cube, "json") == write_gltf(cube, "json")
        assert write_gltf(cube, "glb") == write_gltf(cube, "glb")

    def test_dangling_index_rejected(self):
        doc = MeshDocument.from_geometry(
            np.zeros((3, 3), dtype=np.float32), np.array([0, 1, 3], dtype=np.uint32)
        )
        with pytest.raises(InvalidDocument):
            write_gltf(doc, "json")

    def test_glb_layout(self):
        data = write_gltf(unit_cube(), "glb")
        magic, version, total = struct.unpack_from("<III", data, 0)
        assert magic == 0x46546C67 and version == 2 and total == len(data)
        json_len, json_kind = struct.unpack_from("<II", data, 12)
        assert json_kind == 0x4E4F534A and json_len % 4 == 0

    def test_uint32_indices_used_above_u16_range(self):
        rng = np.random.default_rng(0)
        n = 70_000
        positions = rng.random((n, 3), dtype=np.float32)
        indices = np.arange(n - (n % 3), dtype=np.uint32)
        doc = MeshDocument.from_geometry(positions, indices)
        parsed = parse_gltf(write_gltf(doc, "json"))
        assert documents_equal(doc, parsed)

    def test_material_passthrough(self):
        doc = minimal_triangle_doc()
        doc.meshes[0].primitives[0].material = {
            "pbrMetallicRoughness": {"baseColorFactor": [0.5, 0.25, 0.125, 1.0]}
        }
        parsed = parse_gltf(write_gltf(doc, "json"))
        assert parsed.meshes[0].primitives[0].material == doc.meshes[0].primitives[0].material


class TestRoundTripProperty:
    def test_seeded_documents_round_trip_both_containers(self):
        rng = random.Random(20260809)
        for i in range(60):
            doc = random_document(rng)
            container = "json" if i % 2 == 0 else "glb"
            data = write_gltf(doc, container)
            assert documents_equal(doc, parse_gltf(data)), f"doc {i} ({container})"
            assert data == write_gltf(doc, container), f"doc {i} determinism"
