"""Miniature two-branch colorization network with manual backpropagation.

Topology: a shared four-stage convolutional trunk (stride 2 on stages 2-4,
so features sit at 1/8 resolution), three further 3x3 stages on top, a
segmentation branch that deconvolves each of the three top stages back to
full resolution and concatenates them before a 1x1 classifier, and a
colorization branch that deconvolves the last stage to the color-head
resolution and predicts a distribution over chroma bins. Everything runs
in float64 on the CPU; widths are configuration, not architecture.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bilateral import BilateralParams, bilinear_resize, joint_bilateral_upsample
from .color import merge_channels
from .layers import (
    conv2d_backward,
    conv2d_forward,
    relu_backward,
    relu_forward,
    softmax_channels,
    upconv_backward,
    upconv_forward,
)
from .losses import LossWeights, colorization_loss_from_logits, segmentation_loss
from .quantizer import ChromaGrid, decode
from .validation import check_plane

TRUNK_STRIDE = 8


@dataclass(frozen=True)
class ToyNetConfig:
    input_size: int = 32
    trunk_channels: tuple[int, ...] = (8, 16, 16, 32)
    head_channels: tuple[int, ...] = (32, 32, 32)
    n_classes: int = 4
    q: int = 313
    seed: int = 0
    color_head_stride: int = 4
    seg_deconv_channels: int = 4

    def __post_init__(self):
        if self.input_size % TRUNK_STRIDE != 0:
            raise ValueError(f"input_size must be divisible by {TRUNK_STRIDE}")
        if len(self.trunk_channels) != 4 or len(self.head_channels) != 3:
            raise ValueError("expected 4 trunk stages and 3 head stages")
        for c in (*self.trunk_channels, *self.head_channels,
                  self.seg_deconv_channels, self.n_classes, self.q):
            if c < 1:
                raise ValueError("all channel/class/bin counts must be >= 1")
        if (self.color_head_stride < 1
                or TRUNK_STRIDE % self.color_head_stride != 0):
            raise ValueError(
                f"color_head_stride must divide {TRUNK_STRIDE}, "
                f"got {self.color_head_stride}"
            )

    @property
    def color_up_factor(self) -> int:
        return TRUNK_STRIDE // self.color_head_stride

    @property
    def color_resolution(self) -> int:
        return self.input_size // self.color_head_stride


@dataclass
class TrainingExample:
    """One supervised sample: lightness plane (Lab units) at the network
    input size, a color-bin target at the color-head resolution, and a
    per-pixel class map at full input resolution."""

    lightness: np.ndarray
    color_target: np.ndarray
    labels: np.ndarray


@dataclass
class TrainReport:
    color_losses: list[float] = field(default_factory=list)
    seg_losses: list[float] = field(default_factory=list)
    total_losses: list[float] = field(default_factory=list)
    holdout_color_ce: float | None = None
    diverged: bool = False


def _layer_shapes(config: ToyNetConfig):
    """(name, kind, shape) for every parameter tensor, in build order."""
    t = config.trunk_channels
    h = config.head_channels
    k_up = TRUNK_STRIDE  # seg deconvs restore full resolution from 1/8
    shapes = [
        ("conv1", "conv", (t[0], 1, 3, 3)),
        ("conv2", "conv", (t[1], t[0], 3, 3)),
        ("conv3", "conv", (t[2], t[1], 3, 3)),
        ("conv4", "conv", (t[3], t[2], 3, 3)),
        ("conv5", "conv", (h[0], t[3], 3, 3)),
        ("conv6", "conv", (h[1], h[0], 3, 3)),
        ("conv7", "conv", (h[2], h[1], 3, 3)),
        ("up5", "upconv", (h[0], config.seg_deconv_channels, k_up, k_up)),
        ("up6", "upconv", (h[1], config.seg_deconv_channels, k_up, k_up)),
        ("up7", "upconv", (h[2], config.seg_deconv_channels, k_up, k_up)),
        ("seg", "conv", (config.n_classes, 3 * config.seg_deconv_channels, 1, 1)),
        ("upc", "upconv", (h[2], h[2], config.color_up_factor, config.color_up_factor)),
        ("color", "conv", (config.q, h[2], 1, 1)),
    ]
    return shapes


def parameter_count(config: ToyNetConfig) -> int:
    total = 0
    for _, kind, shape in _layer_shapes(config):
        n_bias = shape[1] if kind == "upconv" else shape[0]
        total += int(np.prod(shape)) + n_bias
    return total


class ToyNet:
    """Parameter set plus the fixed computation graph described above."""

    def __init__(self, params: dict[str, np.ndarray], config: ToyNetConfig):
        self.params = params
        self.config = config

    @classmethod
    def build(cls, config: ToyNetConfig) -> "ToyNet":
        """Initialize weights and biases with centered uniform fan-in
        scaling from the seeded generator.

        The bound sqrt(6 / fan_in) gives weight variance 2 / fan_in, the
        gain that keeps activation scale constant through rectified
        layers; smaller bounds shrink activations geometrically with
        depth and stall the deconvolution heads.
        """
        rng = np.random.default_rng(config.seed)
        params: dict[str, np.ndarray] = {}
        for name, kind, shape in _layer_shapes(config):
            if kind == "upconv":
                fan_in = shape[0]  # stride == kernel: one input tap per output
                n_bias = shape[1]
            else:
                fan_in = shape[1] * shape[2] * shape[3]
                n_bias = shape[0]
            bound = np.sqrt(6.0 / fan_in)
            params[name + "_w"] = rng.uniform(-bound, bound, size=shape)
            params[name + "_b"] = rng.uniform(-bound, bound, size=n_bias)
        return cls(params, config)

    # ----------------------------------------------------------------- forward

    def _check_input(self, lightness: np.ndarray) -> np.ndarray:
        lightness = check_plane(lightness, "lightness")
        n = self.config.input_size
        if lightness.shape != (n, n):
            raise ValueError(
                f"lightness must be {n}x{n}, got {lightness.shape}"
            )
        return lightness

    def _forward(self, lightness: np.ndarray):
        p = self.params
        x = ((lightness - 50.0) / 50.0)[None, :, :]
        cache = {"x": x}

        h = x
        for i, stride in (("1", 1), ("2", 2), ("3", 2), ("4", 2)):
            name = "conv" + i
            z, cols = conv2d_forward(h, p[name + "_w"], p[name + "_b"], stride=stride)
            a, mask = relu_forward(z)
            cache[name] = (h.shape, cols, mask)
            h = a
        for i in ("5", "6", "7"):
            name = "conv" + i
            z, cols = conv2d_forward(h, p[name + "_w"], p[name + "_b"], stride=1)
            a, mask = relu_forward(z)
            cache[name] = (h.shape, cols, mask, a)
            h = a

        # segmentation branch: one deconv path per top stage, concatenated
        seg_feats = []
        for i in ("5", "6", "7"):
            src = cache["conv" + i][3]
            z = upconv_forward(src, p[f"up{i}_w"], p[f"up{i}_b"])
            a, mask = relu_forward(z)
            cache[f"up{i}"] = (src, mask)
            seg_feats.append(a)
        seg_cat = np.concatenate(seg_feats, axis=0)
        seg_logits, seg_cols = conv2d_forward(seg_cat, p["seg_w"], p["seg_b"], pad=0)
        cache["seg"] = (seg_cat.shape, seg_cols)

        # colorization branch from the last stage
        src = cache["conv7"][3]
        z = upconv_forward(src, p["upc_w"], p["upc_b"])
        a, mask = relu_forward(z)
        cache["upc"] = (src, mask)
        color_logits, color_cols = conv2d_forward(a, p["color_w"], p["color_b"], pad=0)
        cache["color"] = (a.shape, color_cols)
        return color_logits, seg_logits, cache

    def forward(self, lightness: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Lightness plane (input_size^2, Lab units) -> (color distribution
        (hc, wc, q), segmentation logits (H, W, n_classes))."""
        lightness = self._check_input(lightness)
        color_logits, seg_logits, _ = self._forward(lightness)
        dist = softmax_channels(color_logits)
        return dist.transpose(1, 2, 0), seg_logits.transpose(1, 2, 0)

    # ---------------------------------------------------------------- backward

    def _forward_backward(
        self,
        lightness: np.ndarray,
        color_target: np.ndarray,
        labels: np.ndarray,
        loss_weights: LossWeights,
        rebalance=None,
        seg_weights=None,
    ):
        cfg = self.config
        p = self.params
        nc = cfg.color_resolution
        if color_target.shape != (nc, nc, cfg.q):
            raise ValueError(
                f"color target must be {(nc, nc, cfg.q)}, got {color_target.shape}"
            )
        if labels.shape != (cfg.input_size, cfg.input_size):
            raise ValueError(
                f"labels must be {cfg.input_size}x{cfg.input_size}, got {labels.shape}"
            )
        color_logits, seg_logits, cache = self._forward(lightness)

        lc, g_color = colorization_loss_from_logits(
            color_logits.transpose(1, 2, 0), color_target, rebalance
        )
        ls, g_seg = segmentation_loss(
            seg_logits.transpose(1, 2, 0), labels, seg_weights
        )
        total = loss_weights.lambda_c * lc + loss_weights.lambda_s * ls
        g_color = (loss_weights.lambda_c * g_color).transpose(2, 0, 1)
        g_seg = (loss_weights.lambda_s * g_seg).transpose(2, 0, 1)

        grads: dict[str, np.ndarray] = {}

        # color head
        a_shape, color_cols = cache["color"]
        ga, gw, gb = conv2d_backward(g_color, a_shape, p["color_w"], color_cols, pad=0)
        grads["color_w"], grads["color_b"] = gw, gb
        src, mask = cache["upc"]
        gz = relu_backward(ga, mask)
        g_conv7_color, gw, gb = upconv_backward(gz, src, p["upc_w"])
        grads["upc_w"], grads["upc_b"] = gw, gb

        # segmentation head
        cat_shape, seg_cols = cache["seg"]
        gcat, gw, gb = conv2d_backward(g_seg, cat_shape, p["seg_w"], seg_cols, pad=0)
        grads["seg_w"], grads["seg_b"] = gw, gb
        g_tops = {}
        sdc = cfg.seg_deconv_channels
        for slot, i in enumerate(("5", "6", "7")):
            src, mask = cache[f"up{i}"]
            gz = relu_backward(gcat[slot * sdc : (slot + 1) * sdc], mask)
            gsrc, gw, gb = upconv_backward(gz, src, p[f"up{i}_w"])
            grads[f"up{i}_w"], grads[f"up{i}_b"] = gw, gb
            g_tops[i] = gsrc
        g_tops["7"] = g_tops["7"] + g_conv7_color

        # top stages (reverse order, gradients flow through the relu chain)
        g_next = None
        for i in ("7", "6", "5"):
            name = "conv" + i
            in_shape, cols, mask, _ = cache[name]
            gout = g_tops[i] if g_next is None else g_tops[i] + g_next
            gz = relu_backward(gout, mask)
            g_next, gw, gb = conv2d_backward(gz, in_shape, p[name + "_w"], cols)
            grads[name + "_w"], grads[name + "_b"] = gw, gb

        # shared trunk
        for i, stride in (("4", 2), ("3", 2), ("2", 2), ("1", 1)):
            name = "conv" + i
            in_shape, cols, mask = cache[name]
            gz = relu_backward(g_next, mask)
            g_next, gw, gb = conv2d_backward(
                gz, in_shape, p[name + "_w"], cols, stride=stride
            )
            grads[name + "_w"], grads[name + "_b"] = gw, gb

        return lc, ls, total, grads

    def backward(
        self,
        lightness: np.ndarray,
        color_target: np.ndarray,
        labels: np.ndarray,
        loss_weights: LossWeights,
        rebalance=None,
        seg_weights=None,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Exact reverse-mode gradients of the combined objective for one
        sample; returns (total loss, gradients keyed like the parameters)."""
        lightness = self._check_input(lightness)
        _, _, total, grads = self._forward_backward(
            lightness, color_target, labels, loss_weights, rebalance, seg_weights
        )
        return total, grads

    # ---------------------------------------------------------------- training

    def train(
        self,
        dataset: list[TrainingExample],
        epochs: int,
        lr: float,
        loss_weights: LossWeights,
        rebalance=None,
        seg_weights=None,
        holdout: list[TrainingExample] | None = None,
    ) -> TrainReport:
        """Plain per-sample SGD with a fixed learning rate and seeded
        shuffling. Training stops early (diverged=True) if the loss goes
        non-finite. Updates parameters in place and returns the report."""
        if not dataset:
            raise ValueError("training requires a non-empty dataset")
        report = TrainReport()
        shuffle_rng = np.random.default_rng([self.config.seed, 1])
        for _ in range(epochs):
            order = shuffle_rng.permutation(len(dataset))
            lc_sum = ls_sum = tot_sum = 0.0
            for idx in order:
                ex = dataset[idx]
                lc, ls, total, grads = self._forward_backward(
                    ex.lightness, ex.color_target, ex.labels,
                    loss_weights, rebalance, seg_weights,
                )
                if not np.isfinite(total):
                    report.diverged = True
                    return report
                for name, g in grads.items():
                    self.params[name] -= lr * g
                lc_sum += lc
                ls_sum += ls
                tot_sum += total
            n = len(dataset)
            report.color_losses.append(lc_sum / n)
            report.seg_losses.append(ls_sum / n)
            report.total_losses.append(tot_sum / n)
        if holdout:
            report.holdout_color_ce = self.holdout_color_ce(holdout)
        return report

    def holdout_color_ce(self, samples: list[TrainingExample]) -> float:
        """Mean per-pixel unweighted colorization cross entropy."""
        total = 0.0
        n_pix = 0
        for ex in samples:
            lightness = self._check_input(ex.lightness)
            color_logits, _, _ = self._forward(lightness)
            lc, _ = colorization_loss_from_logits(
                color_logits.transpose(1, 2, 0), ex.color_target, None
            )
            total += lc
            n_pix += ex.color_target.shape[0] * ex.color_target.shape[1]
        return total / n_pix

    # --------------------------------------------------------------- inference

    def infer_color(
        self,
        lightness: np.ndarray,
        grid: ChromaGrid,
        decode_mode: str = "annealed",
        temperature: float = 0.38,
        params: BilateralParams | None = None,
        use_jbu: bool = True,
    ) -> np.ndarray:
        """Colorize a full-resolution lightness plane.

        The plane is center-cropped square and resized to the network input,
        the predicted distribution is decoded at the color-head resolution,
        and the chroma is carried to full resolution either by joint
        bilateral upsampling against the original lightness guide or by
        plain bilinear upsampling. Returns a Lab image whose lightness is
        the untouched input plane.
        """
        lightness = check_plane(lightness, "lightness")
        n = self.config.input_size
        h, w = lightness.shape
        if min(h, w) < n:
            raise ValueError(
                f"input resolution {lightness.shape} is below the network "
                f"input size {n}"
            )
        side = min(h, w)
        top, left = (h - side) // 2, (w - side) // 2
        crop = lightness[top : top + side, left : left + side]
        net_in = bilinear_resize(crop, (n, n)) if side != n else crop

        dist, _ = self.forward(net_in)
        ab_low = decode(dist, grid, mode=decode_mode, temperature=temperature)
        if use_jbu:
            ab = joint_bilateral_upsample(
                ab_low, lightness, params or BilateralParams()
            )
        else:
            ab = bilinear_resize(ab_low, (h, w))
        return merge_channels(lightness, ab)
