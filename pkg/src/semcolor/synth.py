"""Synthetic shapes corpus where color is determined by object class.

Each image holds one to three non-overlapping shapes on a flat background;
the shape kind (circle, square, triangle) is the class, and every class
paints a fixed chroma. With lightness_overlap set, all classes draw their
lightness from the same distribution, so the lightness plane carries no
class signal: a colorizer can only recover chroma by recognizing shapes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .color import lab_in_srgb_gamut, merge_channels

DEFAULT_CLASS_CHROMA = ((0.0, 0.0), (40.0, 20.0), (-35.0, 30.0), (10.0, -45.0))

# classes share one lightness band when overlapping; otherwise each class
# gets its own disjoint band so lightness alone reveals the class
OVERLAP_BAND = (40.0, 60.0)
PLACEMENT_ATTEMPTS = 40


@dataclass(frozen=True)
class SynthSpec:
    n_images: int
    size: int = 32
    n_classes: int = 4
    class_chroma: tuple[tuple[float, float], ...] = DEFAULT_CLASS_CHROMA
    lightness_overlap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_images < 1:
            raise ValueError("n_images must be at least 1")
        if self.size < 16:
            raise ValueError("size must be at least 16")
        if not 2 <= self.n_classes <= 4:
            raise ValueError("n_classes must be in [2, 4] (background + shape kinds)")
        chroma = tuple(tuple(float(v) for v in pair) for pair in self.class_chroma)
        if len(chroma) != self.n_classes:
            raise ValueError(
                f"class_chroma has {len(chroma)} entries for {self.n_classes} classes"
            )
        mid = np.array([[50.0, a, b] for a, b in chroma])
        if not np.all(lab_in_srgb_gamut(mid, tol=1e-6)):
            raise ValueError("class chroma must be inside the sRGB gamut at L=50")
        object.__setattr__(self, "class_chroma", chroma)


@dataclass
class SynthSample:
    lab: np.ndarray
    labels: np.ndarray


def _class_band(cls: int, overlap: bool) -> tuple[float, float]:
    if overlap:
        return OVERLAP_BAND
    return (20.0 + 15.0 * cls, 32.0 + 15.0 * cls)


def _shape_mask(kind: int, cy: float, cx: float, scale: float, grid):
    """Rasterize one shape at the given scale.

    Returns (mask, bbox) with bbox = (up, down, left, right) extents from
    the center, so placement can use the true footprint of each kind.
    """
    yy, xx = grid
    if kind == 1:  # circle, scale = radius
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= scale * scale
        bbox = (scale, scale, scale, scale)
    elif kind == 2:  # axis-aligned square, scale = half side
        mask = (np.abs(yy - cy) <= scale) & (np.abs(xx - cx) <= scale)
        bbox = (scale, scale, scale, scale)
    else:  # equilateral triangle (apex up), scale = circumradius
        side = scale * np.sqrt(3.0)
        verts = [
            (cx, cy - scale),
            (cx - side / 2.0, cy + scale / 2.0),
            (cx + side / 2.0, cy + scale / 2.0),
        ]
        mask = np.ones(yy.shape, dtype=bool)
        for (x0, y0), (x1, y1) in zip(verts, verts[1:] + verts[:1]):
            cross = (x1 - x0) * (yy - y0) - (y1 - y0) * (xx - x0)
            mask &= cross <= 0
        bbox = (scale, scale / 2.0, side / 2.0, side / 2.0)
    return mask, bbox


def _mask_for_pixel_count(kind: int, cy: float, cx: float, target: float, grid):
    """Size the shape by bisection so its rasterized pixel count hits the
    target; exact-count sizing keeps the classes' pixel mass balanced no
    matter how each outline discretizes."""
    if kind == 1:
        s0 = np.sqrt(target / np.pi)
    elif kind == 2:
        s0 = np.sqrt(target) / 2.0
    else:
        s0 = np.sqrt(4.0 * target / (np.sqrt(3.0) * 3.0))  # circum of area-target
    lo, hi = 0.5 * s0, 1.8 * s0
    for _ in range(18):
        mid = 0.5 * (lo + hi)
        mask, _ = _shape_mask(kind, cy, cx, mid, grid)
        if mask.sum() < target:
            lo = mid
        else:
            hi = mid
    return _shape_mask(kind, cy, cx, hi, grid)


def generate(spec: SynthSpec) -> list[SynthSample]:
    """Render the corpus; equal seeds produce bitwise-identical output."""
    rng = np.random.default_rng(spec.seed)
    size = spec.size
    area_lo, area_hi = (0.20 * size) ** 2, (0.36 * size) ** 2
    n_kinds = spec.n_classes - 1
    grid = np.mgrid[0:size, 0:size].astype(np.float64)

    # kinds come from a shuffled bag (stratified sampling) so class counts
    # stay balanced across the corpus instead of drifting multinomially
    kind_bag: list[int] = []

    def next_kind() -> int:
        if not kind_bag:
            kind_bag.extend(int(k) for k in rng.permutation(n_kinds) + 1)
        return kind_bag.pop()

    samples = []
    for _ in range(spec.n_images):
        labels = np.zeros((size, size), dtype=np.int64)
        lightness = np.full((size, size), rng.uniform(*_class_band(0, spec.lightness_overlap)))
        occupied = np.zeros((size, size), dtype=bool)
        n_shapes = int(rng.integers(1, 4))
        kinds = [next_kind() for _ in range(n_shapes)]
        # big shapes go first while the canvas is still empty, so placement
        # feasibility does not depend on the shape kind
        areas = sorted(
            (float(rng.uniform(area_lo, area_hi)) for _ in range(n_shapes)),
            reverse=True,
        )
        for kind, area in zip(kinds, areas):
            shade = rng.uniform(*_class_band(kind, spec.lightness_overlap))
            # size first (at the image center), then draw positions from the
            # region where the sized shape fits; this keeps the placement
            # success rate independent of the shape kind
            half = (size - 1) / 2.0
            _, (up, down, left, right) = _mask_for_pixel_count(
                kind, half, half, area, grid
            )
            y_lo, y_hi = up + 0.5, size - 1.5 - down
            x_lo, x_hi = left + 0.5, size - 1.5 - right
            if y_lo >= y_hi or x_lo >= x_hi:
                continue
            for _ in range(PLACEMENT_ATTEMPTS):
                cy = rng.uniform(y_lo, y_hi)
                cx = rng.uniform(x_lo, x_hi)
                mask, _ = _mask_for_pixel_count(kind, cy, cx, area, grid)
                if not (mask & occupied).any():
                    labels[mask] = kind
                    lightness[mask] = shade
                    occupied |= mask
                    break
            # unplaceable shapes are skipped, never an error
        chroma = np.asarray(spec.class_chroma)[labels]
        samples.append(SynthSample(merge_channels(lightness, chroma), labels))
    return samples
