"""Quantization of the ab chroma plane into a finite set of color bins.

The bin grid is the lattice {-110, -100, ..., 110}^2 restricted to cells
near the sRGB gamut. Ground-truth chroma is soft-encoded over its nearest
bins; predicted distributions are decoded back to chroma point estimates
by mode, mean, or annealed mean. Rarity-based rebalance weights for the
training loss are derived from an empirical color prior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .color import srgb_to_lab
from .validation import check_distribution_map

DECODE_MODES = ("mode", "mean", "annealed")

LATTICE_BOUND = 110.0


@dataclass(frozen=True)
class ChromaGrid:
    """Bin centers of the quantized ab plane.

    bin_centers has shape (q, 2), each row on the integer lattice with
    spacing grid_step, sorted lexicographically by (a, b). gamut_samples
    records how densely the sRGB cube was sampled when the gamut mask was
    built.
    """

    bin_centers: np.ndarray
    grid_step: float
    gamut_samples: int = field(default=0)

    @property
    def q(self) -> int:
        return len(self.bin_centers)

    def __post_init__(self):
        centers = np.asarray(self.bin_centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[1] != 2:
            raise ValueError(f"bin_centers must have shape (q, 2), got {centers.shape}")
        if len(centers) == 0:
            raise ValueError("grid has no bins")
        if len(np.unique(centers, axis=0)) != len(centers):
            raise ValueError("bin centers must be pairwise distinct")
        object.__setattr__(self, "bin_centers", centers)


def build_grid(grid_step: float = 10.0, gamut_samples: int = 18) -> ChromaGrid:
    """Construct the chroma bin grid from a sampled sRGB gamut.

    The sRGB cube is sampled on a gamut_samples^3 lattice and converted to
    Lab. A lattice cell is kept when the sampled gamut comes within one
    cell diagonal (grid_step * sqrt(2)) of its center, i.e. when the bin
    can carry soft-encoded mass for some in-gamut color. With the defaults
    this yields q = 313 bins.
    """
    if grid_step <= 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    if gamut_samples < 2:
        raise ValueError(f"gamut_samples must be at least 2, got {gamut_samples}")

    v = np.linspace(0.0, 1.0, gamut_samples)
    r, g, b = np.meshgrid(v, v, v, indexing="ij")
    rgb = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=-1)
    gamut_ab = srgb_to_lab(rgb)[:, 1:]

    half_cells = int(np.ceil(LATTICE_BOUND / grid_step))
    axis = np.arange(-half_cells, half_cells + 1) * grid_step
    lattice = np.stack(
        [g.ravel() for g in np.meshgrid(axis, axis, indexing="ij")], axis=-1
    )

    # min distance from every lattice point to the sampled gamut, chunked
    # to keep the distance matrix small
    min_d2 = np.full(len(lattice), np.inf)
    for start in range(0, len(gamut_ab), 4096):
        chunk = gamut_ab[start : start + 4096]
        d2 = ((lattice[:, None, :] - chunk[None, :, :]) ** 2).sum(axis=-1)
        min_d2 = np.minimum(min_d2, d2.min(axis=1))

    keep = np.sqrt(min_d2) <= grid_step * np.sqrt(2.0) + 1e-12
    if not np.any(keep):
        raise ValueError(
            f"no bins within reach of the gamut at grid_step={grid_step}; "
            "the step is too large for the lattice bound"
        )
    centers = lattice[keep]
    order = np.lexsort((centers[:, 1], centers[:, 0]))
    return ChromaGrid(centers[order], float(grid_step), int(gamut_samples))


def encode_soft(
    ab: np.ndarray, grid: ChromaGrid, k: int = 5, sigma: float = 5.0
) -> np.ndarray:
    """Soft-encode chroma values over their k nearest bin centers.

    ab has shape (..., 2); the result has shape (..., q) with Gaussian
    weights exp(-d^2 / (2 sigma^2)) on the k nearest centers, normalized
    to sum to one, and exact zeros elsewhere.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    ab = np.asarray(ab, dtype=np.float64)
    if ab.shape[-1] != 2:
        raise ValueError(f"expected chroma with trailing axis 2, got {ab.shape}")

    lead = ab.shape[:-1]
    flat = ab.reshape(-1, 2)
    k_eff = min(k, grid.q)
    d2 = ((flat[:, None, :] - grid.bin_centers[None, :, :]) ** 2).sum(axis=-1)
    # stable sort so equidistant centers resolve to the lowest bin index
    idx = np.argsort(d2, axis=1, kind="stable")[:, :k_eff]
    w = np.exp(-np.take_along_axis(d2, idx, axis=1) / (2.0 * sigma**2))
    w /= w.sum(axis=1, keepdims=True)

    out = np.zeros((len(flat), grid.q))
    np.put_along_axis(out, idx, w, axis=1)
    return out.reshape(*lead, grid.q)


def empirical_prior(
    dataset: list[np.ndarray], grid: ChromaGrid, k: int = 5, sigma: float = 5.0
) -> np.ndarray:
    """Pixel-weighted mean of soft encodings over a dataset of Lab images.

    Accepts (H, W, 3) Lab images or bare (H, W, 2) chroma planes; returns a
    probability vector of length q.
    """
    if not dataset:
        raise ValueError("empirical prior requires a non-empty dataset")
    total = np.zeros(grid.q)
    n_pixels = 0
    for img in dataset:
        img = np.asarray(img, dtype=np.float64)
        if img.ndim != 3 or img.shape[-1] not in (2, 3):
            raise ValueError(
                f"expected (H, W, 3) Lab or (H, W, 2) chroma, got {img.shape}"
            )
        ab = img[..., 1:] if img.shape[-1] == 3 else img
        enc = encode_soft(ab.reshape(-1, 2), grid, k=k, sigma=sigma)
        total += enc.sum(axis=0)
        n_pixels += enc.shape[0]
    return total / n_pixels


@dataclass(frozen=True)
class RebalanceWeights:
    """Per-bin loss weights, normalized so their mean under the prior is 1."""

    w: np.ndarray
    mix_lambda: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("rebalance weights must be a strictly positive vector")
        if not 0.0 <= self.mix_lambda <= 1.0:
            raise ValueError(f"mix_lambda must be in [0, 1], got {self.mix_lambda}")
        object.__setattr__(self, "w", w)


def rebalance_weights(prior: np.ndarray, mix_lambda: float = 0.5) -> RebalanceWeights:
    """Inverse-frequency weights from a color prior.

    w_q is proportional to ((1 - lambda) * prior_q + lambda / Q)^-1 and
    scaled so that the expectation of w under the prior equals 1.
    """
    prior = np.asarray(prior, dtype=np.float64)
    if prior.ndim != 1:
        raise ValueError(f"prior must be a vector, got shape {prior.shape}")
    if not np.isclose(prior.sum(), 1.0, atol=1e-6):
        raise ValueError(f"prior must sum to 1, got {prior.sum():g}")
    if not 0.0 <= mix_lambda <= 1.0:
        raise ValueError(f"mix_lambda must be in [0, 1], got {mix_lambda}")

    smoothed = (1.0 - mix_lambda) * prior + mix_lambda / len(prior)
    if np.any(smoothed <= 0.0):
        raise ValueError(
            "prior has empty bins and mix_lambda is 0; use mix_lambda > 0 "
            "to keep the weights finite"
        )
    w = 1.0 / smoothed
    w /= float(prior @ w)
    return RebalanceWeights(w, float(mix_lambda))


def decode(
    dist: np.ndarray,
    grid: ChromaGrid,
    mode: str = "annealed",
    temperature: float = 0.38,
) -> np.ndarray:
    """Point-estimate chroma from per-pixel bin distributions.

    dist has shape (..., q). mode picks the argmax center (ties resolved
    toward the lowest bin index), mean the probability-weighted center,
    and annealed the mean after renormalizing probs^(1/T).
    """
    if mode not in DECODE_MODES:
        raise ValueError(f"decode mode must be one of {DECODE_MODES}, got {mode!r}")
    dist = check_distribution_map(dist, n_bins=grid.q)

    if mode == "mode":
        return grid.bin_centers[np.argmax(dist, axis=-1)]
    if mode == "mean":
        return dist @ grid.bin_centers
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    # annealed mean, computed in log space so small temperatures stay stable
    with np.errstate(divide="ignore"):
        logp = np.log(dist)
    logp = logp - logp.max(axis=-1, keepdims=True)
    sharp = np.exp(logp / temperature)
    sharp /= sharp.sum(axis=-1, keepdims=True)
    return sharp @ grid.bin_centers


class ChromaQuantizer(BaseEstimator, TransformerMixin):
    """Estimator facade over the quantizer: fit a prior, encode, decode.

    fit builds the bin grid, estimates the empirical color prior from a
    dataset of Lab images, and derives the rebalance weights. transform
    soft-encodes the chroma of one image; inverse_transform decodes a
    distribution map back to chroma planes.
    """

    def __init__(
        self,
        grid_step: float = 10.0,
        gamut_samples: int = 18,
        k_neighbors: int = 5,
        encode_sigma: float = 5.0,
        mix_lambda: float = 0.5,
        decode_mode: str = "annealed",
        temperature: float = 0.38,
    ):
        self.grid_step = grid_step
        self.gamut_samples = gamut_samples
        self.k_neighbors = k_neighbors
        self.encode_sigma = encode_sigma
        self.mix_lambda = mix_lambda
        self.decode_mode = decode_mode
        self.temperature = temperature

    def fit(self, X, y=None):
        """X is a list of (H, W, 3) Lab images or (H, W, 2) chroma planes."""
        self.grid_ = build_grid(self.grid_step, self.gamut_samples)
        self.prior_ = empirical_prior(
            X, self.grid_, k=self.k_neighbors, sigma=self.encode_sigma
        )
        self.weights_ = rebalance_weights(self.prior_, self.mix_lambda)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Soft-encode one image's chroma, (H, W, 2|3) -> (H, W, q)."""
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        ab = X[..., 1:] if X.shape[-1] == 3 else X
        return encode_soft(ab, self.grid_, k=self.k_neighbors, sigma=self.encode_sigma)

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        """Decode a distribution map (H, W, q) back to chroma planes."""
        self._check_fitted()
        return decode(Z, self.grid_, mode=self.decode_mode, temperature=self.temperature)

    def _check_fitted(self):
        if not hasattr(self, "grid_"):
            raise RuntimeError("ChromaQuantizer is not fitted; call fit first")
