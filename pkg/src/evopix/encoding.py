"""Genome layouts, seeded randomness, initialization, clamping and decoding.

A genome is a flat real vector describing one candidate perturbation.  The
sparse layout stores [x, y, r, g, b] per pixel; the contiguous layouts store
one start coordinate pair plus an RGB triple per pixel:

    sparse      [x1, y1, r1, g1, b1, ..., xN, yN, rN, gN, bN]      length 5N
    contiguous  [x, y, r1, g1, b1, ..., rN, gN, bN]                length 2+3N

Coordinate convention: x is the column, y the row, origin top-left, y grows
downward.  The anti-diagonal therefore starts at its lowest (largest-y) pixel
and walks up-right.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .imagecore import DecodedPixel

_MASK64 = (1 << 64) - 1

RGB_INIT_MEAN = 128.0
RGB_INIT_STD = 127.0


class SplitMix64:
    """Deterministic 64-bit generator; same seed gives the same stream everywhere.

    Scalar draws come straight from the SplitMix64 step; normal deviates use
    Box-Muller (two uniforms per call, cosine branch, nothing cached).
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_float(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_int(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError(f"empty integer range [{lo}, {hi}]")
        span = hi - lo + 1
        v = int(self.next_float() * span)
        if v >= span:  # guard against rounding at the top edge
            v = span - 1
        return lo + v

    def normal(self, mean: float, std: float) -> float:
        """Gaussian deviate via Box-Muller; u1 is drawn first, then u2."""
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53  # (0, 1]
        u2 = self.next_float()
        return mean + std * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-stream seed: one SplitMix64 output of (master XOR index)."""
    return SplitMix64(master_seed ^ index).next_u64()


class ShapeKind(enum.Enum):
    SPARSE = "sparse"
    ANTI_DIAGONAL = "antidiag"
    DIAGONAL = "diag"
    COLUMN = "column"
    ROW = "row"
    PATCH = "patch"

    @classmethod
    def parse(cls, name: str) -> "ShapeKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(f"unknown shape {name!r} (choose from {[k.value for k in cls]})")


@dataclass(frozen=True)
class Genome:
    """One candidate perturbation as a flat real vector."""

    values: tuple[float, ...]
    shape: ShapeKind
    n_pixels: int

    def __post_init__(self) -> None:
        expected = genome_length(self.shape, self.n_pixels)
        if len(self.values) != expected:
            raise ValueError(
                f"{self.shape.value} genome with n_pixels={self.n_pixels} "
                f"needs {expected} values, got {len(self.values)}"
            )


def patch_side(n_pixels: int) -> int:
    k = math.isqrt(n_pixels)
    if k * k != n_pixels:
        raise ValueError(f"patch needs a perfect-square pixel count, got {n_pixels}")
    return k


def genome_length(shape: ShapeKind, n_pixels: int) -> int:
    if n_pixels < 1:
        raise ValueError("n_pixels must be >= 1")
    if shape is ShapeKind.PATCH:
        patch_side(n_pixels)
    if shape is ShapeKind.SPARSE:
        return 5 * n_pixels
    return 2 + 3 * n_pixels


def coordinate_ranges(
    shape: ShapeKind, n_pixels: int, width: int, height: int
) -> tuple[tuple[int, int], tuple[int, int]]:
    """Valid inclusive (x, y) start ranges for the shape, or ValueError if it cannot fit."""
    n = n_pixels
    if shape is ShapeKind.SPARSE:
        return (0, width - 1), (0, height - 1)
    if shape is ShapeKind.ROW:
        x_hi, y_hi = width - n, height - 1
    elif shape is ShapeKind.COLUMN:
        x_hi, y_hi = width - 1, height - n
    elif shape is ShapeKind.DIAGONAL:
        x_hi, y_hi = width - n, height - n
    elif shape is ShapeKind.ANTI_DIAGONAL:
        if n - 1 > height - 1 or width - n < 0:
            raise ValueError(f"{shape.value} of {n} pixels cannot fit in {width}x{height}")
        return (0, width - n), (n - 1, height - 1)
    elif shape is ShapeKind.PATCH:
        k = patch_side(n)
        x_hi, y_hi = width - k, height - k
    else:  # pragma: no cover
        raise AssertionError(shape)
    if x_hi < 0 or y_hi < 0:
        raise ValueError(f"{shape.value} of {n} pixels cannot fit in {width}x{height}")
    return (0, x_hi), (0, y_hi)


def init_genome(rng: SplitMix64, shape: ShapeKind, n_pixels: int, width: int, height: int) -> Genome:
    """Draw a fresh genome: start coordinates uniform over the valid integer
    range, RGB slots from Normal(128, 127), everything clamped afterwards.

    Slots are drawn in layout order, so a genome costs a fixed number of RNG
    draws and streams reproduce exactly.
    """
    (x_lo, x_hi), (y_lo, y_hi) = coordinate_ranges(shape, n_pixels, width, height)
    values: list[float] = []
    if shape is ShapeKind.SPARSE:
        for _ in range(n_pixels):
            values.append(float(rng.next_int(x_lo, x_hi)))
            values.append(float(rng.next_int(y_lo, y_hi)))
            for _ in range(3):
                values.append(rng.normal(RGB_INIT_MEAN, RGB_INIT_STD))
    else:
        values.append(float(rng.next_int(x_lo, x_hi)))
        values.append(float(rng.next_int(y_lo, y_hi)))
        for _ in range(3 * n_pixels):
            values.append(rng.normal(RGB_INIT_MEAN, RGB_INIT_STD))
    return clamp_genome(Genome(tuple(values), shape, n_pixels), width, height)


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def clamp_genome(genome: Genome, width: int, height: int) -> Genome:
    """Clamp coordinate slots to the shape's valid start range and RGB slots
    to [0, 255].  Operates on the real values, before any rounding."""
    (x_lo, x_hi), (y_lo, y_hi) = coordinate_ranges(genome.shape, genome.n_pixels, width, height)
    vals = list(genome.values)
    if genome.shape is ShapeKind.SPARSE:
        for i in range(genome.n_pixels):
            base = 5 * i
            vals[base] = _clamp(vals[base], x_lo, x_hi)
            vals[base + 1] = _clamp(vals[base + 1], y_lo, y_hi)
            for j in range(base + 2, base + 5):
                vals[j] = _clamp(vals[j], 0.0, 255.0)
    else:
        vals[0] = _clamp(vals[0], x_lo, x_hi)
        vals[1] = _clamp(vals[1], y_lo, y_hi)
        for j in range(2, len(vals)):
            vals[j] = _clamp(vals[j], 0.0, 255.0)
    return Genome(tuple(vals), genome.shape, genome.n_pixels)


def _round_away(v: float) -> int:
    """Nearest integer, ties away from zero (fixed so runs are bit-reproducible)."""
    if v >= 0:
        return int(math.floor(v + 0.5))
    return int(math.ceil(v - 0.5))


def decode(genome: Genome, width: int, height: int) -> list[DecodedPixel]:
    """Round the genome and emit its concrete pixels, one per perturbed pixel.

    Walk orders: row walks right, column down, diagonal down-right,
    anti-diagonal up-right from its lowest pixel, patch row-major from its
    up-left corner.  A clamped genome always decodes fully in bounds.
    """
    n = genome.n_pixels
    vals = genome.values
    pixels: list[DecodedPixel] = []
    if genome.shape is ShapeKind.SPARSE:
        for i in range(n):
            base = 5 * i
            pixels.append(
                DecodedPixel(
                    _round_away(vals[base]),
                    _round_away(vals[base + 1]),
                    _round_away(vals[base + 2]),
                    _round_away(vals[base + 3]),
                    _round_away(vals[base + 4]),
                )
            )
        return pixels

    x0 = _round_away(vals[0])
    y0 = _round_away(vals[1])
    if genome.shape is ShapeKind.ROW:
        coords = [(x0 + i, y0) for i in range(n)]
    elif genome.shape is ShapeKind.COLUMN:
        coords = [(x0, y0 + i) for i in range(n)]
    elif genome.shape is ShapeKind.DIAGONAL:
        coords = [(x0 + i, y0 + i) for i in range(n)]
    elif genome.shape is ShapeKind.ANTI_DIAGONAL:
        coords = [(x0 + i, y0 - i) for i in range(n)]
    else:  # PATCH
        k = patch_side(n)
        coords = [(x0 + (i % k), y0 + (i // k)) for i in range(n)]
    for i, (x, y) in enumerate(coords):
        base = 2 + 3 * i
        pixels.append(
            DecodedPixel(
                x,
                y,
                _round_away(vals[base]),
                _round_away(vals[base + 1]),
                _round_away(vals[base + 2]),
            )
        )
    return pixels
