"""sRGB <-> CIE Lab conversions and lightness/chroma plane handling.

All conversions run in double precision through the standard pipeline
sRGB (IEC 61966-2-1 transfer function) <-> linear RGB <-> XYZ (D65) <-> Lab.
The reference white is taken from the row sums of the sRGB-to-XYZ matrix so
that pure white maps exactly to L=100, a=b=0.
"""

from __future__ import annotations

import numpy as np

from .validation import check_lab_image, check_rgb_image

# sRGB to XYZ (D65, 2 degree observer), IEC 61966-2-1.
SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])

# Exact double-precision inverse keeps the roundtrip self-consistent.
XYZ_TO_SRGB = np.linalg.inv(SRGB_TO_XYZ)

# White point implied by the matrix itself ((1,1,1) maps to it exactly).
WHITE_POINT = SRGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0


def _srgb_to_linear(srgb: np.ndarray) -> np.ndarray:
    """sRGB transfer function (gamma with linear toe), input in [0, 1]."""
    return np.where(srgb <= 0.04045, srgb / 12.92, ((srgb + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(linear: np.ndarray) -> np.ndarray:
    """Inverse transfer function; expects linear values already in [0, 1]."""
    return np.where(
        linear <= 0.0031308,
        linear * 12.92,
        1.055 * linear ** (1.0 / 2.4) - 0.055,
    )


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA**2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t**3, 3.0 * _DELTA**2 * (t - 4.0 / 29.0))


def srgb_to_lab(rgb01: np.ndarray) -> np.ndarray:
    """Convert float sRGB values in [0, 1], shape (..., 3), to Lab.

    Core conversion used by both the 8-bit image path and the gamut
    sampling in the quantizer.
    """
    rgb01 = np.asarray(rgb01, dtype=np.float64)
    linear = _srgb_to_linear(rgb01)
    xyz = linear @ SRGB_TO_XYZ.T
    f = _lab_f(xyz / WHITE_POINT)
    lightness = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([lightness, a, b], axis=-1)


def lab_to_srgb(lab: np.ndarray) -> np.ndarray:
    """Convert Lab, shape (..., 3), to float sRGB in [0, 1].

    Out-of-gamut colors are clamped in linear RGB before the transfer
    function is applied.
    """
    lab = np.asarray(lab, dtype=np.float64)
    f_y = (lab[..., 0] + 16.0) / 116.0
    f_x = f_y + lab[..., 1] / 500.0
    f_z = f_y - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(f_x), _lab_f_inv(f_y), _lab_f_inv(f_z)], axis=-1)
    xyz = xyz * WHITE_POINT
    linear = xyz @ XYZ_TO_SRGB.T
    linear = np.clip(linear, 0.0, 1.0)
    return _linear_to_srgb(linear)


def lab_in_srgb_gamut(lab: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Boolean mask of Lab values whose linear RGB lies inside [0, 1]."""
    lab = np.asarray(lab, dtype=np.float64)
    f_y = (lab[..., 0] + 16.0) / 116.0
    f_x = f_y + lab[..., 1] / 500.0
    f_z = f_y - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(f_x), _lab_f_inv(f_y), _lab_f_inv(f_z)], axis=-1)
    linear = (xyz * WHITE_POINT) @ XYZ_TO_SRGB.T
    return np.all((linear >= -tol) & (linear <= 1.0 + tol), axis=-1)


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """8-bit RGB image (H, W, 3) uint8 -> Lab image (H, W, 3) float64."""
    check_rgb_image(img)
    return srgb_to_lab(img.astype(np.float64) / 255.0)


def lab_to_rgb(img: np.ndarray) -> np.ndarray:
    """Lab image (H, W, 3) -> 8-bit RGB image, rounding to nearest level."""
    check_lab_image(img)
    srgb = lab_to_srgb(img)
    return np.clip(np.rint(srgb * 255.0), 0, 255).astype(np.uint8)


def gray_to_lightness(gray: np.ndarray) -> np.ndarray:
    """8-bit grayscale (H, W) -> Lab lightness plane (achromatic axis)."""
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError(f"expected a 2-d grayscale image, got shape {gray.shape}")
    rgb01 = np.repeat(gray.astype(np.float64)[..., None] / 255.0, 3, axis=-1)
    return srgb_to_lab(rgb01)[..., 0]


def split_channels(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a Lab image into the lightness plane and the (a, b) planes."""
    check_lab_image(img)
    return img[..., 0].copy(), img[..., 1:].copy()


def merge_channels(lightness: np.ndarray, chroma: np.ndarray) -> np.ndarray:
    """Recombine a lightness plane (H, W) and chroma planes (H, W, 2)."""
    lightness = np.asarray(lightness, dtype=np.float64)
    chroma = np.asarray(chroma, dtype=np.float64)
    if lightness.ndim != 2 or chroma.shape != lightness.shape + (2,):
        raise ValueError(
            f"incompatible plane shapes {lightness.shape} and {chroma.shape}"
        )
    return np.concatenate([lightness[..., None], chroma], axis=-1)
