"""Independent reference implementations used as test oracles.

Everything here is written directly from the defining formulas as plain
loops (or per-pixel numpy at most), deliberately ignoring the vectorized
structure of the library code it checks.
"""

import math

import numpy as np

# ---------------------------------------------------------------------------
# scalar sRGB -> Lab pipeline (IEC 61966-2-1 + CIE Lab, D65)

_M = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
_WHITE = tuple(sum(row) for row in _M)


def srgb8_to_lab_scalar(r8, g8, b8):
    def inv_gamma(u):
        u = u / 255.0
        return u / 12.92 if u <= 0.04045 else ((u + 0.055) / 1.055) ** 2.4

    rl, gl, bl = inv_gamma(r8), inv_gamma(g8), inv_gamma(b8)
    xyz = [m[0] * rl + m[1] * gl + m[2] * bl for m in _M]

    def f(t):
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d**3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = (f(c / w) for c, w in zip(xyz, _WHITE))
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


# ---------------------------------------------------------------------------
# joint bilateral filter / upsample, straight from the formulas

GUIDE_SCALE = 255.0 / 100.0


def jbf_scalar(chroma, guide, sigma_s, sigma_r, radius):
    h, w, c = chroma.shape
    out = np.zeros_like(chroma, dtype=np.float64)
    gi = np.asarray(guide, dtype=np.float64) * GUIDE_SCALE
    for y in range(h):
        for x in range(w):
            acc = [0.0] * c
            k = 0.0
            for qy in range(max(0, y - radius), min(h - 1, y + radius) + 1):
                for qx in range(max(0, x - radius), min(w - 1, x + radius) + 1):
                    f = math.exp(-((y - qy) ** 2 + (x - qx) ** 2) / (2 * sigma_s**2))
                    g = math.exp(-((gi[y, x] - gi[qy, qx]) ** 2) / (2 * sigma_r**2))
                    k += f * g
                    for ch in range(c):
                        acc[ch] += chroma[qy, qx, ch] * f * g
            for ch in range(c):
                out[y, x, ch] = acc[ch] / k
    return out


def jbu_scalar(low, guide, sigma_s, sigma_r, radius):
    h_lo, w_lo, c = low.shape
    h_hi, w_hi = guide.shape
    sy, sx = h_hi / h_lo, w_hi / w_lo
    gi = np.asarray(guide, dtype=np.float64) * GUIDE_SCALE
    out = np.zeros((h_hi, w_hi, c))

    def back(q, s, n_hi):
        return min(n_hi - 1, max(0, int(math.floor((q + 0.5) * s - 0.5 + 0.5))))

    for y in range(h_hi):
        py = (y + 0.5) / sy - 0.5
        qy0, qy1 = max(0, math.ceil(py - radius)), min(h_lo - 1, math.floor(py + radius))
        for x in range(w_hi):
            px = (x + 0.5) / sx - 0.5
            qx0 = max(0, math.ceil(px - radius))
            qx1 = min(w_lo - 1, math.floor(px + radius))
            acc = [0.0] * c
            k = 0.0
            for qy in range(qy0, qy1 + 1):
                for qx in range(qx0, qx1 + 1):
                    f = math.exp(-((py - qy) ** 2 + (px - qx) ** 2) / (2 * sigma_s**2))
                    gq = gi[back(qy, sy, h_hi), back(qx, sx, w_hi)]
                    g = math.exp(-((gi[y, x] - gq) ** 2) / (2 * sigma_r**2))
                    k += f * g
                    for ch in range(c):
                        acc[ch] += low[qy, qx, ch] * f * g
            for ch in range(c):
                out[y, x, ch] = acc[ch] / k
    return out


def jbu_bruteforce(low, guide, sigma_s, sigma_r, radius):
    """Per-output-pixel double loop; the window math uses numpy so large
    acceptance instances stay fast, but the structure is still the direct
    formula, independent of the production kernel's offset accumulation."""
    h_lo, w_lo, c = low.shape
    h_hi, w_hi = guide.shape
    sy, sx = h_hi / h_lo, w_hi / w_lo
    gi = np.asarray(guide, dtype=np.float64) * GUIDE_SCALE
    back_y = np.clip(np.floor((np.arange(h_lo) + 0.5) * sy).astype(int), 0, h_hi - 1)
    back_x = np.clip(np.floor((np.arange(w_lo) + 0.5) * sx).astype(int), 0, w_hi - 1)
    out = np.zeros((h_hi, w_hi, c))
    for y in range(h_hi):
        py = (y + 0.5) / sy - 0.5
        qy = np.arange(max(0, math.ceil(py - radius)),
                       min(h_lo - 1, math.floor(py + radius)) + 1)
        for x in range(w_hi):
            px = (x + 0.5) / sx - 0.5
            qx = np.arange(max(0, math.ceil(px - radius)),
                           min(w_lo - 1, math.floor(px + radius)) + 1)
            f = np.exp(
                -((py - qy)[:, None] ** 2 + (px - qx)[None, :] ** 2)
                / (2 * sigma_s**2)
            )
            gq = gi[back_y[qy][:, None], back_x[qx][None, :]]
            g = np.exp(-((gi[y, x] - gq) ** 2) / (2 * sigma_r**2))
            wgt = f * g
            k = wgt.sum()
            for ch in range(c):
                out[y, x, ch] = (wgt * low[np.ix_(qy, qx)][..., ch]).sum() / k
    return out


# ---------------------------------------------------------------------------
# finite differences

def finite_difference_grad(f, x, step=1e-5):
    """Central-difference gradient of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f(x)
        flat[i] = orig - step
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * step)
    return grad


def relative_grad_error(analytic, numeric, floor=1e-7):
    """Worst-case elementwise relative error with an absolute floor."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((np.abs(analytic - numeric) / denom).max())
