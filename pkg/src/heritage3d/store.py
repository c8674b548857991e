"""Content-addressed asset storage.

Blobs live at ``assets/<first two hex>/<sha256>`` with a ``<sha256>.meta``
sidecar next to them (line-oriented ``key=value``: media type and byte
length). The store is append-only: a blob, once written, is never mutated,
and re-putting identical bytes is a no-op that returns the same reference.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import UnknownAsset


class MediaType(str, Enum):
    PNG = "png"
    JPEG = "jpeg"
    GLTF_JSON = "gltf_json"
    GLB = "glb"
    OBJ = "obj"

    @property
    def mime(self) -> str:
        return _MIME[self]


_MIME = {
    MediaType.PNG: "image/png",
    MediaType.JPEG: "image/jpeg",
    MediaType.GLTF_JSON: "model/gltf+json",
    MediaType.GLB: "model/gltf-binary",
    MediaType.OBJ: "text/plain",
}

_MIME_TO_MEDIA = {
    "image/png": MediaType.PNG,
    "image/jpeg": MediaType.JPEG,
    "model/gltf+json": MediaType.GLTF_JSON,
    "model/gltf-binary": MediaType.GLB,
    "text/plain": MediaType.OBJ,
}


def media_type_for_mime(mime: str) -> MediaType | None:
    """Map a MIME string (parameters stripped) to a MediaType, if known."""
    return _MIME_TO_MEDIA.get(mime.split(";")[0].strip().lower())


@dataclass(frozen=True)
class AssetRef:
    """Handle to stored bytes: the id is the SHA-256 hex of the content."""

    asset_id: str
    media_type: MediaType
    byte_length: int

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "media_type": self.media_type.value,
            "byte_length": self.byte_length,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssetRef":
        return cls(d["asset_id"], MediaType(d["media_type"]), int(d["byte_length"]))


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class AssetStore:
    """Append-only blob store addressed by SHA-256 of the content.

    Reads are safe from any thread; writes are serialized by an internal
    lock (single-writer contract).
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _blob_path(self, asset_id: str) -> Path:
        return self.root / asset_id[:2] / asset_id

    def _meta_path(self, asset_id: str) -> Path:
        return self.root / asset_id[:2] / (asset_id + ".meta")

    def put(self, data: bytes, media_type: MediaType) -> AssetRef:
        asset_id = content_hash(data)
        ref = AssetRef(asset_id, media_type, len(data))
        blob = self._blob_path(asset_id)
        if blob.exists():
            return ref
        with self._write_lock:
            if blob.exists():
                return ref
            blob.parent.mkdir(parents=True, exist_ok=True)
            tmp = blob.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, blob)
            meta = f"media_type={media_type.value}\nbyte_length={len(data)}\n"
            self._meta_path(asset_id).write_text(meta, encoding="utf-8")
        return ref

    def get(self, asset_id: str) -> bytes:
        blob = self._blob_path(asset_id)
        if not blob.exists():
            raise UnknownAsset(f"no asset {asset_id!r}")
        return blob.read_bytes()

    def ref(self, asset_id: str) -> AssetRef:
        meta = self._meta_path(asset_id)
        if not meta.exists():
            raise UnknownAsset(f"no asset {asset_id!r}")
        fields = {}
        for line in meta.read_text(encoding="utf-8").splitlines():
            if "=" in line:
                key, value = line.split("=", 1)
                fields[key.strip()] = value.strip()
        return AssetRef(asset_id, MediaType(fields["media_type"]), int(fields["byte_length"]))

    def exists(self, asset_id: str) -> bool:
        return self._blob_path(asset_id).exists()

    def __len__(self) -> int:
        """Number of stored blobs (meta sidecars excluded)."""
        return sum(
            1
            for shard in self.root.iterdir()
            if shard.is_dir()
            for p in shard.iterdir()
            if not p.name.endswith(".meta") and not p.name.endswith(".tmp")
        )
