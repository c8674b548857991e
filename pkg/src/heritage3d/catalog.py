"""Heritage site registry and multi-view image ingestion.

Sites are persisted one JSON document each under ``catalog/<site_id>.json``
(UTF-8, stable key order). Image bytes go to the content-addressed asset
store; the site document keeps an (asset, capture metadata) entry per view
so acquisition readiness can be judged from the capture azimuths.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import (
    DuplicateSite,
    EmptyName,
    InvalidAzimuth,
    UndecodableImage,
    UnknownSite,
)
from .imagehdr import sniff_image
from .store import AssetRef, AssetStore, MediaType

MIN_COVERAGE_DEG = 90.0


class CaptureSource(str, Enum):
    STREET_VIEW_URL = "street_view_url"
    LOCAL_FILE = "local_file"
    REMOTE_URL = "remote_url"


@dataclass(frozen=True)
class CaptureMeta:
    """Where and how a view was captured. Azimuth is degrees in [0, 360)."""

    azimuth_deg: float
    source: CaptureSource = CaptureSource.LOCAL_FILE
    captured_at: str | None = None
    width_px: int | None = None
    height_px: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.azimuth_deg < 360.0):
            raise InvalidAzimuth(
                f"azimuth_deg must be in [0, 360), got {self.azimuth_deg}"
            )
        for name in ("width_px", "height_px"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise InvalidAzimuth(f"{name} must be positive, got {value}")

    def to_dict(self) -> dict:
        return {
            "azimuth_deg": self.azimuth_deg,
            "source": self.source.value,
            "captured_at": self.captured_at,
            "width_px": self.width_px,
            "height_px": self.height_px,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaptureMeta":
        return cls(
            azimuth_deg=float(d["azimuth_deg"]),
            source=CaptureSource(d.get("source", "local_file")),
            captured_at=d.get("captured_at"),
            width_px=d.get("width_px"),
            height_px=d.get("height_px"),
        )


@dataclass(frozen=True)
class ImageEntry:
    asset: AssetRef
    capture: CaptureMeta

    def to_dict(self) -> dict:
        return {"asset": self.asset.to_dict(), "capture": self.capture.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ImageEntry":
        return cls(AssetRef.from_dict(d["asset"]), CaptureMeta.from_dict(d["capture"]))


@dataclass
class SiteRecord:
    """A heritage site: identity, architectural attributes, ingested views."""

    name: str
    site_type: str = ""
    material: str = ""
    features: list[str] = field(default_factory=list)
    location: str = ""
    site_id: str = ""
    images: list[ImageEntry] = field(default_factory=list)

    def identity_fields(self) -> tuple:
        """The content compared when deciding idempotent re-registration."""
        return (self.name, self.site_type, self.material, tuple(self.features), self.location)

    def image_assets(self) -> list[AssetRef]:
        return [entry.asset for entry in self.images]

    def to_dict(self) -> dict:
        return {
            "site_id": self.site_id,
            "name": self.name,
            "site_type": self.site_type,
            "material": self.material,
            "features": list(self.features),
            "location": self.location,
            "images": [entry.to_dict() for entry in self.images],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SiteRecord":
        return cls(
            name=d["name"],
            site_type=d.get("site_type", ""),
            material=d.get("material", ""),
            features=list(d.get("features", [])),
            location=d.get("location", ""),
            site_id=d.get("site_id", ""),
            images=[ImageEntry.from_dict(e) for e in d.get("images", [])],
        )


@dataclass(frozen=True)
class ReadinessReport:
    """Stage-1 acquisition check. Low coverage is advisory, never blocking."""

    has_images: bool
    coverage_deg: float
    coverage_ok: bool
    issues: list[str]

    def to_dict(self) -> dict:
        return {
            "has_images": self.has_images,
            "coverage_deg": self.coverage_deg,
            "coverage_ok": self.coverage_ok,
            "issues": list(self.issues),
        }


def azimuthal_coverage(metas: list[CaptureMeta] | list[float]) -> float:
    """Angular spread of the capture set: 360 minus the largest circular gap.

    Rotation- and permutation-invariant; 0 for zero or one view; always in
    [0, 360). For two views this reduces to the smaller arc between them.
    """
    azimuths = [
        m.azimuth_deg if isinstance(m, CaptureMeta) else float(m) for m in metas
    ]
    if len(azimuths) <= 1:
        return 0.0
    ordered = sorted(a % 360.0 for a in azimuths)
    gaps = [b - a for a, b in zip(ordered, ordered[1:])]
    gaps.append(ordered[0] + 360.0 - ordered[-1])
    # The wrap gap can exceed 360 by an ulp when views coincide; clamp.
    return max(0.0, 360.0 - max(gaps))


def slugify(text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return slug or "site"


class Catalog:
    """Site registry backed by one JSON file per site.

    Reads are safe from concurrent callers; register/ingest are serialized
    through a single lock.
    """

    def __init__(self, root: Path | str, store: AssetStore):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.store = store
        self._lock = threading.Lock()

    def _site_path(self, site_id: str) -> Path:
        return self.root / f"{site_id}.json"

    def _save(self, record: SiteRecord) -> None:
        path = self._site_path(record.site_id)
        text = json.dumps(record.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(text + "\n", encoding="utf-8")
        tmp.replace(path)

    def register_site(self, record: SiteRecord) -> str:
        """Register a site; idempotent when re-registering identical content."""
        if not record.name.strip():
            raise EmptyName("site name must be non-empty")
        site_id = record.site_id or slugify(record.name)
        with self._lock:
            existing = self._load_or_none(site_id)
            if existing is not None:
                if existing.identity_fields() != record.identity_fields():
                    raise DuplicateSite(
                        f"site {site_id!r} already registered with different content"
                    )
                return site_id
            self._save(replace(record, site_id=site_id, images=list(record.images)))
        return site_id

    def _load_or_none(self, site_id: str) -> SiteRecord | None:
        path = self._site_path(site_id)
        if not path.exists():
            return None
        return SiteRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def get_site(self, site_id: str) -> SiteRecord:
        record = self._load_or_none(site_id)
        if record is None:
            raise UnknownSite(f"no site {site_id!r}")
        return record

    def list_sites(self) -> list[SiteRecord]:
        records = [
            SiteRecord.from_dict(json.loads(p.read_text(encoding="utf-8")))
            for p in sorted(self.root.glob("*.json"))
        ]
        return records

    def ingest_image(self, site_id: str, data: bytes, meta: CaptureMeta) -> AssetRef:
        """Store image bytes content-addressed and attach the view to the site.

        Re-ingesting identical bytes returns the same asset id and never
        grows the asset store; an identical (bytes, azimuth, source) entry
        is not appended twice.
        """
        with self._lock:
            record = self._load_or_none(site_id)
            if record is None:
                raise UnknownSite(f"no site {site_id!r}")
            media_type, width, height = sniff_image(data)
            if media_type not in (MediaType.PNG, MediaType.JPEG):
                raise UndecodableImage("only PNG and JPEG views can be ingested")
            ref = self.store.put(data, media_type)
            stored_meta = replace(meta, width_px=width, height_px=height)
            entry = ImageEntry(ref, stored_meta)
            is_dup = any(
                e.asset.asset_id == ref.asset_id
                and e.capture.azimuth_deg == stored_meta.azimuth_deg
                and e.capture.source == stored_meta.source
                for e in record.images
            )
            if not is_dup:
                record.images.append(entry)
                self._save(record)
        return ref

    def validate_site_ready(self, site_id: str) -> ReadinessReport:
        record = self.get_site(site_id)
        metas = [entry.capture for entry in record.images]
        coverage = azimuthal_coverage(metas)
        coverage_ok = coverage >= MIN_COVERAGE_DEG
        issues = []
        if not record.images:
            issues.append("no images ingested")
        if not coverage_ok:
            issues.append(
                f"azimuthal coverage {coverage:.1f}° is below the "
                f"{MIN_COVERAGE_DEG:.0f}° guideline"
            )
        return ReadinessReport(
            has_images=bool(record.images),
            coverage_deg=coverage,
            coverage_ok=coverage_ok,
            issues=issues,
        )
