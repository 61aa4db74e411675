"""Image values, pixel application, perturbed-area arithmetic and file I/O.

Images are immutable byte tensors so the evolutionary loop can evaluate many
candidate perturbations against the same base image without copies or locks.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from PIL import Image

RAW_MAGIC = b"PXR1"
_RAW_HEADER = struct.Struct("<4sII")
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class DecodedPixel(NamedTuple):
    """One concrete pixel overwrite: column x, row y, channel bytes r/g/b."""

    x: int
    y: int
    r: int
    g: int
    b: int


@dataclass(frozen=True)
class PreprocessedImage:
    """Fixed-size RGB image, row-major bytes, origin top-left.

    `data` holds width*height*3 bytes; the value is immutable after
    construction and safe to share across concurrent oracle queries.
    """

    width: int
    height: int
    data: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        expected = self.width * self.height * 3
        if len(self.data) != expected:
            raise ValueError(
                f"data length {len(self.data)} != width*height*3 = {expected}"
            )

    @classmethod
    def filled(cls, width: int, height: int, rgb: tuple[int, int, int] = (0, 0, 0)) -> "PreprocessedImage":
        return cls(width, height, bytes(rgb) * (width * height))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "PreprocessedImage":
        """Build from a (height, width, 3) uint8 array."""
        a = np.asarray(arr, dtype=np.uint8)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {a.shape}")
        return cls(a.shape[1], a.shape[0], a.tobytes())

    def to_array(self) -> np.ndarray:
        """Return a (height, width, 3) uint8 view-copy of the pixel data."""
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.height, self.width, 3)

    def pixel(self, x: int, y: int) -> tuple[int, int, int]:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ValueError(f"pixel ({x},{y}) out of bounds for {self.width}x{self.height}")
        off = (y * self.width + x) * 3
        return self.data[off], self.data[off + 1], self.data[off + 2]


def apply_perturbation(image: PreprocessedImage, pixels: Iterable[DecodedPixel]) -> PreprocessedImage:
    """Return a copy of `image` with the listed pixels overwritten.

    Later entries win when coordinates coincide, so the output differs from
    the input in at most len(pixels) positions (the L0 budget).
    """
    buf = bytearray(image.data)
    w, h = image.width, image.height
    for p in pixels:
        if not (0 <= p.x < w and 0 <= p.y < h):
            raise ValueError(f"decoded pixel ({p.x},{p.y}) out of bounds for {w}x{h} image")
        off = (p.y * w + p.x) * 3
        buf[off] = p.r
        buf[off + 1] = p.g
        buf[off + 2] = p.b
    return PreprocessedImage(w, h, bytes(buf))


def perturbed_area_fraction(n_pixels: int, width: int, height: int) -> float:
    """Fraction of image area covered by n_pixels perturbed pixels."""
    if n_pixels < 0:
        raise ValueError("n_pixels must be >= 0")
    area = width * height
    if area <= 0:
        raise ValueError("image area must be positive")
    return n_pixels / area


def format_area_percent(n_pixels: int, width: int, height: int) -> str:
    """Perturbed-area percentage truncated to 5 decimals, e.g. '0.00478%'.

    Truncation (not rounding) is deliberate; computed in exact integer
    arithmetic so printed digits never drift with float error.
    """
    if n_pixels < 0:
        raise ValueError("n_pixels must be >= 0")
    area = width * height
    if area <= 0:
        raise ValueError("image area must be positive")
    digits = n_pixels * 10**7 // area
    return f"{digits // 10**5}.{digits % 10**5:05d}%"


def save_image(image: PreprocessedImage, path: str | Path) -> None:
    """Write PNG (.png) or raw PXR1 (.pxr) depending on extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        pil = Image.frombytes("RGB", (image.width, image.height), image.data)
        pil.save(path, format="PNG")
    elif suffix == ".pxr":
        with open(path, "wb") as fh:
            fh.write(_RAW_HEADER.pack(RAW_MAGIC, image.width, image.height))
            fh.write(image.data)
    else:
        raise ValueError(f"unsupported image extension {suffix!r} (use .png or .pxr)")


def load_image(path: str | Path) -> PreprocessedImage:
    """Read a PNG or raw PXR1 file; the format is sniffed from the header.

    PNG alpha is dropped and grayscale is replicated to RGB; both formats
    round-trip losslessly through save_image.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(_PNG_MAGIC))
        if head == _PNG_MAGIC:
            pil = Image.open(path)
            if pil.mode != "RGB":
                pil = pil.convert("RGB")
            return PreprocessedImage(pil.width, pil.height, pil.tobytes())
        if head[: len(RAW_MAGIC)] == RAW_MAGIC:
            rest = head[len(RAW_MAGIC):] + fh.read()
            if len(rest) < _RAW_HEADER.size - len(RAW_MAGIC):
                raise ValueError(f"{path}: truncated PXR1 header")
            width, height = struct.unpack_from("<II", rest, 0)
            data = rest[8:]
            if width < 1 or height < 1:
                raise ValueError(f"{path}: invalid PXR1 dimensions {width}x{height}")
            if len(data) != width * height * 3:
                raise ValueError(
                    f"{path}: PXR1 payload is {len(data)} bytes, header implies {width * height * 3}"
                )
            return PreprocessedImage(width, height, bytes(data))
    raise ValueError(f"{path}: unrecognized image format (expected PNG or PXR1)")
