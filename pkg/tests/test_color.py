import numpy as np
import pytest

from semcolor.color import (
    gray_to_lightness,
    lab_to_rgb,
    merge_channels,
    rgb_to_lab,
    split_channels,
)

from reference import srgb8_to_lab_scalar


def as_pixel(r, g, b):
    return np.array([[[r, g, b]]], dtype=np.uint8)


def test_white_maps_to_achromatic_l100():
    lab = rgb_to_lab(as_pixel(255, 255, 255))[0, 0]
    assert lab[0] == pytest.approx(100.0, abs=1e-9)
    assert abs(lab[1]) <= 1e-6
    assert abs(lab[2]) <= 1e-6


def test_black_maps_to_origin():
    lab = rgb_to_lab(as_pixel(0, 0, 0))[0, 0]
    assert np.allclose(lab, 0.0, atol=1e-9)


def test_primary_red_matches_scalar_oracle():
    # frozen from the scalar pipeline; the oracle is also evaluated live
    expected = (53.24079183328088, 80.09246954480042, 67.20319253649727)
    lab = rgb_to_lab(as_pixel(255, 0, 0))[0, 0]
    assert np.allclose(lab, expected, atol=1e-9)
    assert np.allclose(lab, srgb8_to_lab_scalar(255, 0, 0), atol=1e-9)


def test_random_pixels_match_scalar_oracle(rng):
    pix = rng.integers(0, 256, size=(40, 3))
    lab = rgb_to_lab(pix.reshape(1, -1, 3).astype(np.uint8))[0]
    for row, (r, g, b) in zip(lab, pix):
        assert np.allclose(row, srgb8_to_lab_scalar(int(r), int(g), int(b)), atol=1e-9)


def test_roundtrip_over_srgb_lattice():
    v = np.linspace(0, 255, 17).round().astype(np.uint8)
    r, g, b = np.meshgrid(v, v, v, indexing="ij")
    img = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=-1).reshape(1, -1, 3)
    back = lab_to_rgb(rgb_to_lab(img))
    diff = np.abs(back.astype(int) - img.astype(int))
    assert diff.max() <= 1


def test_lab_white_back_to_rgb_white():
    lab = np.array([[[100.0, 0.0, 0.0]]])
    assert np.array_equal(lab_to_rgb(lab)[0, 0], [255, 255, 255])


def test_out_of_gamut_is_clamped():
    lab = np.array([[[50.0, 200.0, 0.0]]])
    rgb = lab_to_rgb(lab)[0, 0]
    assert rgb.dtype == np.uint8
    assert rgb.min() >= 0 and rgb.max() <= 255


def test_achromatic_axis_and_lightness_monotone():
    grays = np.arange(256, dtype=np.uint8)
    img = np.repeat(grays[None, :, None], 3, axis=2)
    lab = rgb_to_lab(img)
    assert np.abs(lab[0, :, 1]).max() <= 1e-6
    assert np.abs(lab[0, :, 2]).max() <= 1e-6
    assert np.all(np.diff(lab[0, :, 0]) > 0)


def test_split_merge_roundtrip(rng):
    lab = np.stack(
        [
            rng.uniform(0, 100, (6, 5)),
            rng.uniform(-128, 128, (6, 5)),
            rng.uniform(-128, 128, (6, 5)),
        ],
        axis=-1,
    )
    lightness, chroma = split_channels(lab)
    assert np.array_equal(merge_channels(lightness, chroma), lab)


def test_constant_gray_has_flat_lightness_and_zero_chroma():
    img = np.full((4, 4, 3), 128, dtype=np.uint8)
    lightness, chroma = split_channels(rgb_to_lab(img))
    assert np.ptp(lightness) == 0.0
    assert np.abs(chroma).max() <= 0.5


def test_gray_ramp_chroma_near_zero():
    ramp = np.tile(np.arange(0, 256, 8, dtype=np.uint8), (2, 1))
    img = np.repeat(ramp[..., None], 3, axis=2)
    _, chroma = split_channels(rgb_to_lab(img))
    assert np.abs(chroma).max() <= 0.5


def test_gray_to_lightness_matches_rgb_path():
    gray = np.arange(0, 256, 51, dtype=np.uint8).reshape(2, 3)
    rgb = np.repeat(gray[..., None], 3, axis=2)
    assert np.allclose(gray_to_lightness(gray), rgb_to_lab(rgb)[..., 0], atol=1e-12)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        rgb_to_lab(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        rgb_to_lab(np.zeros((4, 4, 3), dtype=np.float64))
    with pytest.raises(ValueError):
        merge_channels(np.zeros((4, 4)), np.zeros((4, 5, 2)))
