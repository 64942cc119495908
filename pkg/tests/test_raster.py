import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from fishscan.errors import CorruptFile, IoFailure, UnsupportedFormat
from fishscan.raster import BinaryMask, GrayImage, RgbImage, load_image, save_image, to_gray


def write_ppm(path, w, h, payload: bytes):
    path.write_bytes(f"P6\n{w} {h}\n255\n".encode() + payload)


def test_ppm_bytes_map_to_unit_range(tmp_path):
    p = tmp_path / "a.ppm"
    write_ppm(p, 2, 1, bytes([255, 0, 0, 0, 0, 0]))
    img = load_image(p)
    assert (img.width, img.height) == (2, 1)
    np.testing.assert_array_equal(img.pixels[0], [[1, 0, 0], [0, 0, 0]])


def test_ppm_with_comment_and_odd_whitespace(tmp_path):
    p = tmp_path / "c.ppm"
    p.write_bytes(b"P6 # made by hand\n1  1\n255\n" + bytes([0, 51, 255]))
    np.testing.assert_allclose(load_image(p).pixels[0, 0], [0, 0.2, 1])


@pytest.mark.parametrize("data", [b"P6\n2", b"P6\n2 1\n255\n\x00\x00", b"P6\nx y\n255\n"])
def test_truncated_or_garbled_ppm_is_corrupt(tmp_path, data):
    p = tmp_path / "t.ppm"
    p.write_bytes(data)
    with pytest.raises(CorruptFile, match="t.ppm"):
        load_image(p)


def test_png_decodes_with_independent_encoder(tmp_path):
    pattern = np.arange(27, dtype=np.uint8).reshape(3, 3, 3) * 9
    p = tmp_path / "k.png"
    Image.fromarray(pattern).save(p)
    img = load_image(p)
    assert (img.width, img.height) == (3, 3)
    np.testing.assert_array_equal(np.rint(img.pixels * 255).astype(np.uint8), pattern)


def test_png_alpha_is_discarded(tmp_path):
    rgba = np.zeros((2, 2, 4), dtype=np.uint8)
    rgba[..., 0] = 200
    rgba[..., 3] = 10
    p = tmp_path / "alpha.png"
    Image.fromarray(rgba).save(p)
    img = load_image(p)
    assert img.pixels.shape == (2, 2, 3)
    np.testing.assert_allclose(img.pixels[..., 0], 200 / 255)


def test_unknown_format_names_path(tmp_path):
    p = tmp_path / "x.gif"
    p.write_bytes(b"GIF89a" + bytes(20))
    with pytest.raises(UnsupportedFormat, match="x.gif"):
        load_image(p)


def test_missing_file_is_io_failure(tmp_path):
    with pytest.raises(IoFailure, match="nope.png"):
        load_image(tmp_path / "nope.png")


def test_gray_roundtrip_within_quantization(tmp_path):
    img = RgbImage(np.full((4, 5, 3), 0.5))
    for name in ("g.png", "g.ppm"):
        save_image(img, tmp_path / name)
        back = load_image(tmp_path / name)
        assert np.abs(back.pixels - 0.5).max() <= 1 / 255


@pytest.mark.parametrize("name", ["r.png", "r.ppm"])
def test_grid_aligned_roundtrip_is_exact(tmp_path, rng, name):
    px = rng.integers(0, 256, size=(7, 9, 3)) / 255.0
    save_image(RgbImage(px), tmp_path / name)
    np.testing.assert_array_equal(load_image(tmp_path / name).pixels, px)


def test_save_into_missing_directory_fails(tmp_path):
    with pytest.raises(IoFailure):
        save_image(RgbImage(np.zeros((2, 2, 3))), tmp_path / "no" / "such" / "a.png")


def test_luma_examples():
    px = np.array([[[1, 1, 1], [0, 0, 0], [1, 0, 0]]], dtype=float)
    np.testing.assert_allclose(to_gray(RgbImage(px)).pixels[0], [1.0, 0.0, 0.299], atol=1e-15)


@given(st.floats(0, 1))
def test_gray_pixel_maps_to_itself(g):
    assert to_gray(RgbImage(np.full((1, 1, 3), g))).pixels[0, 0] == pytest.approx(g, abs=1e-15)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_gray_preserves_shape_and_range(h, w, seed):
    px = np.random.default_rng(seed).random((h, w, 3))
    g = to_gray(RgbImage(px)).pixels
    assert g.shape == (h, w)
    assert g.min() >= 0 and g.max() <= 1


def test_images_are_read_only():
    img = RgbImage(np.zeros((2, 2, 3)))
    with pytest.raises(ValueError):
        img.pixels[0, 0, 0] = 1.0


@pytest.mark.parametrize("bad", [np.full((2, 2, 3), 1.5), np.zeros((2, 2)), np.zeros((0, 2, 3))])
def test_rgb_invariants_enforced(bad):
    with pytest.raises(ValueError):
        RgbImage(bad)


def test_gray_and_mask_invariants():
    with pytest.raises(ValueError):
        GrayImage(np.full((2, 2), -0.1))
    m = BinaryMask(np.array([[1, 0], [1, 1]]))
    assert m.count == 3 and m.bits.dtype == bool
