"""Joint bilateral filtering and joint bilateral upsampling.

Both operations smooth chroma planes with a spatial Gaussian while a range
Gaussian on a grayscale guide stops the smoothing at intensity edges. The
upsampler transfers low-resolution chroma to the guide's resolution, which
is how low-resolution color predictions become full-resolution color maps
with sharp edges.

Conventions shared by every routine here:
  * guide intensities are Lab lightness in [0, 100], rescaled to [0, 255]
    before the range kernel is applied (sigma_r is meant on 8-bit scale);
  * fractional coordinates are pixel-center aligned: hi-res pixel p maps to
    low-res (p + 0.5) / scale - 0.5;
  * windows are clamped at image borders, so weights always renormalize
    over valid samples only.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .validation import check_chroma_planes, check_plane

GUIDE_SCALE = 255.0 / 100.0


@dataclass(frozen=True)
class BilateralParams:
    """Kernel widths: sigma_s in (low-res) pixels, sigma_r in 8-bit intensity
    units, radius the window half-width (defaults to ceil(3 * sigma_s))."""

    sigma_s: float = 3.0
    sigma_r: float = 15.0
    radius: int | None = None

    def __post_init__(self):
        if self.sigma_s <= 0:
            raise ValueError(f"sigma_s must be positive, got {self.sigma_s}")
        if self.sigma_r <= 0:
            raise ValueError(f"sigma_r must be positive, got {self.sigma_r}")
        if self.radius is None:
            object.__setattr__(self, "radius", int(math.ceil(3.0 * self.sigma_s)))
        elif self.radius < 1:
            raise ValueError(f"radius must be at least 1, got {self.radius}")


def joint_bilateral_filter(
    chroma: np.ndarray, guide: np.ndarray, params: BilateralParams
) -> np.ndarray:
    """Filter chroma planes (H, W, C) guided by a lightness plane (H, W).

    Each output pixel is the kernel-weighted mean of its (2 radius + 1)^2
    window, with spatial weights exp(-|p-q|^2 / 2 sigma_s^2) and range
    weights exp(-(I_p - I_q)^2 / 2 sigma_r^2) read from the guide.
    """
    chroma = check_chroma_planes(chroma)
    guide = check_plane(guide, "guide")
    if guide.shape != chroma.shape[:2]:
        raise ValueError(
            f"guide resolution {guide.shape} does not match chroma {chroma.shape[:2]}"
        )
    h, w = guide.shape
    r = params.radius
    intensity = guide * GUIDE_SCALE
    inv2ss = 1.0 / (2.0 * params.sigma_s**2)
    inv2sr = 1.0 / (2.0 * params.sigma_r**2)

    num = np.zeros_like(chroma)
    den = np.zeros((h, w))
    for dy in range(-r, r + 1):
        ys0, ys1 = max(0, -dy), h - max(0, dy)
        if ys0 >= ys1:
            continue
        for dx in range(-r, r + 1):
            xs0, xs1 = max(0, -dx), w - max(0, dx)
            if xs0 >= xs1:
                continue
            f = math.exp(-(dx * dx + dy * dy) * inv2ss)
            dst = (slice(ys0, ys1), slice(xs0, xs1))
            src = (slice(ys0 + dy, ys1 + dy), slice(xs0 + dx, xs1 + dx))
            g = np.exp(-((intensity[dst] - intensity[src]) ** 2) * inv2sr)
            weight = f * g
            num[dst] += weight[..., None] * chroma[src]
            den[dst] += weight
    return num / den[..., None]


def _window_1d(n_lo: int, n_hi: int, radius: int):
    """Per-offset low-res sample positions for each hi-res coordinate.

    Returns (coords, positions, valid): coords is the fractional low-res
    coordinate of every hi-res pixel; positions[j] and valid[j] give, for
    window slot j, the integer low-res position and whether it lies inside
    both the window and the image.
    """
    scale = n_hi / n_lo
    coords = (np.arange(n_hi) + 0.5) / scale - 0.5
    base = np.ceil(coords - radius).astype(np.int64)
    top = np.floor(coords + radius).astype(np.int64)
    positions = []
    valid = []
    for j in range(2 * radius + 1):
        pos = base + j
        ok = (pos <= top) & (pos >= 0) & (pos < n_lo)
        positions.append(np.clip(pos, 0, n_lo - 1))
        valid.append(ok)
    return coords, positions, valid


def _guide_positions(n_lo: int, n_hi: int) -> np.ndarray:
    """Hi-res position sampled for each low-res index: the nearest integer
    of (q + 0.5) * scale - 0.5."""
    scale = n_hi / n_lo
    pos = np.floor((np.arange(n_lo) + 0.5) * scale).astype(np.int64)
    return np.clip(pos, 0, n_hi - 1)


def joint_bilateral_upsample(
    low_chroma: np.ndarray, guide: np.ndarray, params: BilateralParams
) -> np.ndarray:
    """Upsample low-res chroma (h, w, C) to the guide's resolution (H, W).

    For hi-res pixel p with fractional low-res coordinate p', the output is
    the weighted mean of low-res samples q within `radius` of p' (in low-res
    units, window clamped at borders). Spatial weights use |p' - q|; range
    weights compare the guide at p against the guide sampled at q mapped
    back to hi-res.
    """
    low_chroma = check_chroma_planes(low_chroma)
    guide = check_plane(guide, "guide")
    h_lo, w_lo = low_chroma.shape[:2]
    h_hi, w_hi = guide.shape
    if h_hi < h_lo or w_hi < w_lo:
        raise ValueError(
            f"guide {guide.shape} is smaller than the chroma {low_chroma.shape[:2]}"
        )
    r = params.radius
    intensity = guide * GUIDE_SCALE
    inv2ss = 1.0 / (2.0 * params.sigma_s**2)
    inv2sr = 1.0 / (2.0 * params.sigma_r**2)

    ys, y_pos, y_ok = _window_1d(h_lo, h_hi, r)
    xs, x_pos, x_ok = _window_1d(w_lo, w_hi, r)
    gy = _guide_positions(h_lo, h_hi)
    gx = _guide_positions(w_lo, w_hi)

    num = np.zeros((h_hi, w_hi, low_chroma.shape[2]))
    den = np.zeros((h_hi, w_hi))
    for jy in range(2 * r + 1):
        qy, oky = y_pos[jy], y_ok[jy]
        if not oky.any():
            continue
        fy = np.exp(-((ys - qy) ** 2) * inv2ss) * oky
        for jx in range(2 * r + 1):
            qx, okx = x_pos[jx], x_ok[jx]
            if not okx.any():
                continue
            fx = np.exp(-((xs - qx) ** 2) * inv2ss) * okx
            guide_q = intensity[gy[qy][:, None], gx[qx][None, :]]
            g = np.exp(-((intensity - guide_q) ** 2) * inv2sr)
            weight = (fy[:, None] * fx[None, :]) * g
            num += weight[..., None] * low_chroma[qy[:, None], qx[None, :], :]
            den += weight
    return num / den[..., None]


def bilinear_resize(img: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resample of (H, W) or (H, W, C) data, pixel-center aligned.

    Uses the same coordinate convention as the upsampler, so it is the
    direct drop-in comparison when bilateral guidance is disabled.
    """
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[..., None]
    h_in, w_in = img.shape[:2]
    h_out, w_out = out_shape

    def axis_coords(n_in, n_out):
        c = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        c = np.clip(c, 0.0, n_in - 1.0)
        lo = np.floor(c).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, c - lo

    y0, y1, fy = axis_coords(h_in, h_out)
    x0, x1, fx = axis_coords(w_in, w_out)
    top = img[y0[:, None], x0[None, :]] * (1 - fx)[None, :, None] + img[
        y0[:, None], x1[None, :]
    ] * fx[None, :, None]
    bot = img[y1[:, None], x0[None, :]] * (1 - fx)[None, :, None] + img[
        y1[:, None], x1[None, :]
    ] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return out[..., 0] if squeeze else out
