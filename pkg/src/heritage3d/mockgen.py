"""Deterministic mock generation backends.

The image mock draws a procedural isometric "building" (flat-shaded walls,
roof or dome silhouette) seeded by a hash of the prompt and reference set;
the mesh mock emits parametric geometry with analytically known triangle
counts. Both are pure functions of their inputs, so fixtures are stable
across runs and machines.
"""

from __future__ import annotations

import hashlib
import io

from PIL import Image, ImageDraw

from .meshkit import write_gltf
from .meshkit.primitives import building, icosphere

OUTPUT_SIZE = 1024


def _seed_bytes(*parts: str) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


def _pick(seed: bytes, index: int, low: int, high: int) -> int:
    """Deterministic integer in [low, high] from one digest byte."""
    return low + seed[index % len(seed)] % (high - low + 1)


def mock_isometric_png(prompt_text: str, reference_ids: list[str]) -> bytes:
    """Render a deterministic 1024x1024 PNG for (prompt, sorted references)."""
    seed = _seed_bytes(prompt_text, *sorted(reference_ids))

    sky = (200 + seed[0] % 40, 215 + seed[1] % 30, 235 + seed[2] % 20)
    ground = (90 + seed[3] % 60, 120 + seed[4] % 60, 70 + seed[5] % 40)
    wall = (150 + seed[6] % 90, 130 + seed[7] % 80, 110 + seed[8] % 70)
    wall_dark = tuple(max(0, c - 45) for c in wall)
    roof = (120 + seed[9] % 100, 70 + seed[10] % 60, 60 + seed[11] % 50)

    img = Image.new("RGB", (OUTPUT_SIZE, OUTPUT_SIZE), sky)
    draw = ImageDraw.Draw(img)

    horizon = _pick(seed, 12, 640, 760)
    draw.rectangle([0, horizon, OUTPUT_SIZE, OUTPUT_SIZE], fill=ground)

    # Isometric massing: front and side walls as parallelograms.
    cx = OUTPUT_SIZE // 2
    half_w = _pick(seed, 13, 180, 300)
    depth = _pick(seed, 14, 120, 200)
    height = _pick(seed, 15, 260, 420)
    base_y = horizon + _pick(seed, 16, 20, 80)
    rise = depth // 2

    front = [
        (cx - half_w, base_y),
        (cx, base_y + rise),
        (cx, base_y + rise - height),
        (cx - half_w, base_y - height),
    ]
    side = [
        (cx, base_y + rise),
        (cx + half_w, base_y),
        (cx + half_w, base_y - height),
        (cx, base_y + rise - height),
    ]
    draw.polygon(front, fill=wall)
    draw.polygon(side, fill=wall_dark)

    if seed[17] % 2:  # dome
        dome_r = half_w * 3 // 4
        top = base_y + rise - height
        draw.pieslice(
            [cx - dome_r, top - dome_r, cx + dome_r, top + dome_r],
            180,
            360,
            fill=roof,
        )
    else:  # pitched roof
        peak = base_y + rise - height - _pick(seed, 18, 80, 160)
        draw.polygon(
            [
                (cx - half_w, base_y - height),
                (cx + half_w, base_y - height),
                (cx, peak),
            ],
            fill=roof,
        )

    # Door and a row of windows keyed off remaining digest bytes.
    door_w = half_w // 4
    draw.rectangle(
        [cx - half_w // 2 - door_w // 2, base_y - height // 3,
         cx - half_w // 2 + door_w // 2, base_y],
        fill=wall_dark,
    )
    for i in range(_pick(seed, 19, 2, 4)):
        wx = cx - half_w + (i + 1) * half_w // 3
        wy = base_y - height + height // 4
        draw.rectangle([wx - 18, wy - 26, wx + 18, wy + 26], fill=sky)

    out = io.BytesIO()
    img.save(out, format="PNG", optimize=False, compress_level=6)
    return out.getvalue()


def mock_mesh_gltf(
    source_asset_id: str,
    style: str | None = None,
    subdivision: int | None = None,
    wall_divisions: int | None = None,
) -> bytes:
    """Emit deterministic glTF for an input image asset.

    Parameters not pinned by the caller are derived from the asset id:
    subdivision in {2, 3}, wall divisions in {1..4}. `icosphere` style
    yields exactly 20 * 4**s triangles; `building` yields 12*n^2 + 20*4**s.
    """
    seed = _seed_bytes(source_asset_id)
    if style is None:
        style = "building"
    if subdivision is None:
        subdivision = 2 + seed[0] % 2
    if wall_divisions is None:
        wall_divisions = 1 + seed[1] % 4

    if style == "icosphere":
        doc = icosphere(subdivision, name=f"mock-{source_asset_id[:8]}")
    elif style == "building":
        doc = building(wall_divisions, subdivision, name=f"mock-{source_asset_id[:8]}")
    else:
        raise ValueError(f"unknown mock mesh style {style!r}")
    return write_gltf(doc, "json")
