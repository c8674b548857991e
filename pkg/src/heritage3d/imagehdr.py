"""Header-only sniffing of PNG and JPEG byte streams.

Ingestion only needs the format and pixel dimensions, so this checks magic
bytes and pulls width/height from the header without decoding pixel data.
"""

from __future__ import annotations

import struct

from .errors import UndecodableImage
from .store import MediaType

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# JPEG start-of-frame markers (all SOFn except DHT/JPG/DAC which share the
# 0xC0 block but are not frames).
_JPEG_SOF = {
    0xC0, 0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7,
    0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF,
}


def sniff_image(data: bytes) -> tuple[MediaType, int, int]:
    """Return (media_type, width_px, height_px) or raise UndecodableImage."""
    if data.startswith(PNG_SIGNATURE):
        return (MediaType.PNG, *_png_size(data))
    if data[:2] == b"\xff\xd8":
        return (MediaType.JPEG, *_jpeg_size(data))
    raise UndecodableImage("bytes are neither PNG nor JPEG")


def _png_size(data: bytes) -> tuple[int, int]:
    # Signature (8) + chunk length (4) + chunk type (4); IHDR must come first.
    if len(data) < 24 or data[12:16] != b"IHDR":
        raise UndecodableImage("PNG missing IHDR header")
    width, height = struct.unpack(">II", data[16:24])
    if width <= 0 or height <= 0:
        raise UndecodableImage("PNG header declares empty image")
    return width, height


def _jpeg_size(data: bytes) -> tuple[int, int]:
    pos = 2
    n = len(data)
    while pos + 4 <= n:
        if data[pos] != 0xFF:
            raise UndecodableImage("JPEG marker stream corrupt")
        marker = data[pos + 1]
        if marker == 0xD8 or 0xD0 <= marker <= 0xD7 or marker == 0x01:
            pos += 2  # standalone marker, no payload
            continue
        seg_len = struct.unpack(">H", data[pos + 2:pos + 4])[0]
        if seg_len < 2 or pos + 2 + seg_len > n:
            raise UndecodableImage("JPEG segment truncated")
        if marker in _JPEG_SOF:
            if seg_len < 7:
                raise UndecodableImage("JPEG SOF segment too short")
            height, width = struct.unpack(">HH", data[pos + 5:pos + 9])
            if width <= 0 or height <= 0:
                raise UndecodableImage("JPEG header declares empty image")
            return width, height
        pos += 2 + seg_len
    raise UndecodableImage("JPEG has no start-of-frame header")
