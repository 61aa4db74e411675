"""Image substrate: construction, perturbation application, area math, file I/O."""

import struct

import numpy as np
import pytest

from evopix.imagecore import (
    DecodedPixel,
    PreprocessedImage,
    apply_perturbation,
    format_area_percent,
    load_image,
    perturbed_area_fraction,
    save_image,
)


def test_construction_validates_dimensions_and_length():
    PreprocessedImage(2, 3, bytes(2 * 3 * 3))
    with pytest.raises(ValueError):
        PreprocessedImage(0, 3, b"")
    with pytest.raises(ValueError):
        PreprocessedImage(2, 0, b"")
    with pytest.raises(ValueError):
        PreprocessedImage(2, 3, bytes(17))  # needs 18


def test_filled_and_pixel_accessor():
    img = PreprocessedImage.filled(3, 2, (10, 20, 30))
    assert img.width == 3 and img.height == 2
    assert img.pixel(0, 0) == (10, 20, 30)
    assert img.pixel(2, 1) == (10, 20, 30)
    with pytest.raises(ValueError):
        img.pixel(3, 0)
    with pytest.raises(ValueError):
        img.pixel(0, -1)


def test_array_round_trip():
    arr = np.arange(2 * 2 * 3, dtype=np.uint8).reshape(2, 2, 3)
    img = PreprocessedImage.from_array(arr)
    assert img.width == 2 and img.height == 2
    assert np.array_equal(img.to_array(), arr)
    with pytest.raises(ValueError):
        PreprocessedImage.from_array(np.zeros((2, 2), dtype=np.uint8))


def test_apply_perturbation_single_red_pixel():
    img = PreprocessedImage.filled(2, 2, (0, 0, 0))
    out = apply_perturbation(img, [DecodedPixel(0, 0, 255, 0, 0)])
    assert out.pixel(0, 0) == (255, 0, 0)
    assert out.pixel(1, 0) == (0, 0, 0)
    assert out.pixel(0, 1) == (0, 0, 0)
    assert out.pixel(1, 1) == (0, 0, 0)
    # original untouched
    assert img.pixel(0, 0) == (0, 0, 0)


def test_apply_perturbation_empty_is_identity():
    img = PreprocessedImage.filled(3, 3, (9, 9, 9))
    out = apply_perturbation(img, [])
    assert out == img


def test_apply_perturbation_later_entry_wins():
    img = PreprocessedImage.filled(2, 2, (0, 0, 0))
    out = apply_perturbation(
        img, [DecodedPixel(1, 1, 10, 10, 10), DecodedPixel(1, 1, 20, 20, 20)]
    )
    assert out.pixel(1, 1) == (20, 20, 20)
    # L0 difference stays at one pixel
    diff = sum(
        out.pixel(x, y) != img.pixel(x, y) for x in range(2) for y in range(2)
    )
    assert diff == 1


def test_apply_perturbation_bounds_checked():
    img = PreprocessedImage.filled(2, 2, (0, 0, 0))
    with pytest.raises(ValueError):
        apply_perturbation(img, [DecodedPixel(2, 0, 1, 1, 1)])
    with pytest.raises(ValueError):
        apply_perturbation(img, [DecodedPixel(0, -1, 1, 1, 1)])


def test_area_fraction_values():
    assert perturbed_area_fraction(16, 289, 289) == 16 / (289 * 289)
    assert f"{perturbed_area_fraction(16, 289, 289):.9f}".startswith("0.0001915")
    assert f"{perturbed_area_fraction(4, 224, 224):.9f}".startswith("0.0000797")
    assert perturbed_area_fraction(0, 224, 224) == 0.0


def test_area_fraction_errors():
    with pytest.raises(ValueError):
        perturbed_area_fraction(1, 0, 10)
    with pytest.raises(ValueError):
        perturbed_area_fraction(-1, 10, 10)


def test_format_area_percent_known_grids():
    # truncated (not rounded) to five decimals
    assert format_area_percent(4, 289, 289) == "0.00478%"
    assert format_area_percent(9, 289, 289) == "0.01077%"
    assert format_area_percent(16, 289, 289) == "0.01915%"
    assert format_area_percent(4, 224, 224) == "0.00797%"
    assert format_area_percent(9, 224, 224) == "0.01793%"
    assert format_area_percent(16, 224, 224) == "0.03188%"


def test_format_area_percent_truncates():
    # 1/3 of the area = 33.33333...%; rounding would give the same here, so
    # also check a case where rounding up would differ: 2/3 -> 66.66666%.
    assert format_area_percent(1, 3, 1) == "33.33333%"
    assert format_area_percent(2, 3, 1) == "66.66666%"
    assert format_area_percent(0, 5, 5) == "0.00000%"
    assert format_area_percent(25, 5, 5) == "100.00000%"


def test_png_round_trip(tmp_path):
    data = bytes(range(3 * 2 * 3))
    img = PreprocessedImage(3, 2, data)
    path = tmp_path / "img.png"
    save_image(img, path)
    back = load_image(path)
    assert back == img


def test_pxr_round_trip(tmp_path):
    data = bytes((i * 7) % 256 for i in range(4 * 5 * 3))
    img = PreprocessedImage(4, 5, data)
    path = tmp_path / "img.pxr"
    save_image(img, path)
    back = load_image(path)
    assert back == img
    raw = path.read_bytes()
    assert raw[:4] == b"PXR1"
    assert struct.unpack("<II", raw[4:12]) == (4, 5)


def test_load_sniffs_content_not_extension(tmp_path):
    img = PreprocessedImage.filled(2, 2, (1, 2, 3))
    pxr = tmp_path / "a.pxr"
    save_image(img, pxr)
    disguised = tmp_path / "b.png"
    disguised.write_bytes(pxr.read_bytes())
    assert load_image(disguised) == img


def test_load_missing_and_malformed(tmp_path):
    with pytest.raises(OSError):
        load_image(tmp_path / "nope.png")
    bad = tmp_path / "bad.pxr"
    bad.write_bytes(b"PXR1\x02\x00")
    with pytest.raises(ValueError):
        load_image(bad)
    short = tmp_path / "short.pxr"
    short.write_bytes(b"PXR1" + struct.pack("<II", 4, 4) + bytes(5))
    with pytest.raises(ValueError):
        load_image(short)
    junk = tmp_path / "junk.png"
    junk.write_bytes(b"not an image at all")
    with pytest.raises(ValueError):
        load_image(junk)


def test_save_rejects_unknown_extension(tmp_path):
    img = PreprocessedImage.filled(1, 1, (0, 0, 0))
    with pytest.raises(ValueError):
        save_image(img, tmp_path / "img.bmp")


def test_png_alpha_and_grayscale_convert(tmp_path):
    from PIL import Image

    rgba = Image.new("RGBA", (2, 2), (10, 20, 30, 77))
    p1 = tmp_path / "a.png"
    rgba.save(p1)
    img = load_image(p1)
    assert img.pixel(0, 0) == (10, 20, 30)

    gray = Image.new("L", (2, 2), 99)
    p2 = tmp_path / "g.png"
    gray.save(p2)
    img2 = load_image(p2)
    assert img2.pixel(1, 1) == (99, 99, 99)
