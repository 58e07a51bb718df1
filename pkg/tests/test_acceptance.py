"""Acceptance suite: one test per criterion, one printed pass/fail line each.

The ablation criterion trains ten small networks and dominates the
runtime; its per-seed results are shared with the PSNR-neutrality
criterion through a module fixture.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from semcolor import io
from semcolor.bilateral import (
    BilateralParams,
    bilinear_resize,
    joint_bilateral_upsample,
)
from semcolor.cli import main as cli_main
from semcolor.color import lab_to_rgb, rgb_to_lab, srgb_to_lab
from semcolor.colorizer import SemanticColorizer
from semcolor.losses import colorization_loss, segmentation_loss
from semcolor.metrics import psnr
from semcolor.network import ToyNet
from semcolor.quantizer import decode, encode_soft
from semcolor.synth import SynthSpec, generate

from conftest import record_acceptance
from reference import (
    finite_difference_grad,
    jbu_bruteforce,
    relative_grad_error,
)
from test_network import TINY, min_abs_preactivation

# settings for the semantics-helps ablation (criterion 4); the per-seed
# budget in the criterion is 15 minutes, these land near two minutes
ABLATION_SEEDS = (1, 2, 3, 4, 5)
ABLATION = dict(epochs=30, lr=5e-3)
CHANCE_MARGIN = 0.2


def verdict(name: str, ok: bool, detail: str = ""):
    record_acceptance(f"criterion {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{name}: {detail}"


# --------------------------------------------------------------- criterion 1

def test_criterion_1_jbu_oracle_equivalence():
    rng = np.random.default_rng(2024)
    params = BilateralParams(sigma_s=3.0, sigma_r=15.0)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        if i == 0:
            h_lo = w_lo = 16
            h_hi = w_hi = 64
        else:
            h_lo, w_lo = rng.integers(2, 17, size=2)
            h_hi = int(rng.integers(h_lo, 65))
            w_hi = int(rng.integers(w_lo, 65))
        low = rng.uniform(-80, 80, size=(h_lo, w_lo, 2))
        guide = rng.uniform(0, 100, size=(h_hi, w_hi))
        fast = joint_bilateral_upsample(low, guide, params)
        ref = jbu_bruteforce(low, guide, params.sigma_s, params.sigma_r, params.radius)
        worst = max(worst, float(np.abs(fast - ref).max()))
    elapsed = time.perf_counter() - t0
    verdict(
        "1 (JBU oracle equivalence)",
        worst <= 1e-9 and elapsed < 10.0,
        f"max |diff| {worst:.2e}, {elapsed:.1f}s for 50 instances",
    )


# --------------------------------------------------------------- criterion 2

def test_criterion_2_edge_keeping():
    from test_bilateral import STEP_HIGH, STEP_LOW, step_edge_scene, transition_width

    low, guide = step_edge_scene(h_lo=8, w_lo=8, scale=4)
    params = BilateralParams(sigma_s=3.0, sigma_r=15.0)
    jbu = joint_bilateral_upsample(low, guide, params)
    lin = bilinear_resize(low, guide.shape)
    row = guide.shape[0] // 2
    w_jbu = transition_width(jbu[row, :, 0])
    w_lin = transition_width(lin[row, :, 0])
    verdict(
        "2 (edge keeping)",
        w_jbu <= 1 and w_lin >= 3,
        f"transition width: jbu {w_jbu}px, bilinear {w_lin}px",
    )


# --------------------------------------------------------------- criterion 3

def test_criterion_3_gradient_correctness(rng):
    q = 9
    logits = rng.normal(size=(4, 4, q))
    target = rng.random((4, 4, q))
    target /= target.sum(axis=-1, keepdims=True)

    def softmax(z):
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)

    _, g_color = colorization_loss(softmax(logits), target)
    fd = finite_difference_grad(
        lambda z: colorization_loss(softmax(z), target)[0], logits
    )
    err_color = relative_grad_error(g_color, fd)

    seg_logits = rng.normal(size=(4, 4, 5))
    labels = rng.integers(0, 5, (4, 4))
    _, g_seg = segmentation_loss(seg_logits, labels)
    fd_seg = finite_difference_grad(
        lambda z: segmentation_loss(z, labels)[0], seg_logits
    )
    err_seg = relative_grad_error(g_seg, fd_seg)

    # full network at <= 500 parameters (fresh stream keeps the fixture on
    # the kink-free input the seed was chosen for)
    from semcolor.losses import LossWeights
    from semcolor.network import parameter_count

    net_rng = np.random.default_rng(1234)
    net = ToyNet.build(TINY)
    n_params = parameter_count(TINY)
    lightness = net_rng.uniform(20, 80, (TINY.input_size, TINY.input_size))
    assert min_abs_preactivation(net, lightness) > 1e-3
    nc = TINY.color_resolution
    target_net = net_rng.random((nc, nc, TINY.q))
    target_net /= target_net.sum(axis=-1, keepdims=True)
    labels_net = net_rng.integers(0, TINY.n_classes, (TINY.input_size, TINY.input_size))
    lw = LossWeights(1.0, 2.5)
    _, grads = net.backward(lightness, target_net, labels_net, lw)
    step = 1e-6
    worst_excess = -np.inf
    for name, p in net.params.items():
        flat = p.ravel()
        fd_g = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi, _ = net.backward(lightness, target_net, labels_net, lw)
            flat[i] = orig - step
            lo, _ = net.backward(lightness, target_net, labels_net, lw)
            flat[i] = orig
            fd_g[i] = (hi - lo) / (2 * step)
        g = grads[name].ravel()
        excess = np.abs(g - fd_g) - (1e-7 + 1e-4 * np.maximum(np.abs(g), np.abs(fd_g)))
        worst_excess = max(worst_excess, float(excess.max()))

    verdict(
        "3 (gradient correctness)",
        err_color < 1e-6 and err_seg < 1e-6 and worst_excess <= 0.0,
        f"loss rel err: color {err_color:.1e}, seg {err_seg:.1e}; "
        f"network ({n_params} params) worst tolerance excess {worst_excess:.1e}",
    )


# --------------------------------------------------------------- criterion 4

@pytest.fixture(scope="module")
def ablation_results():
    results = {"joint_ce": [], "color_ce": [], "miou": [], "seconds": []}
    keep = {}
    for seed in ABLATION_SEEDS:
        t0 = time.perf_counter()
        corpus = generate(SynthSpec(n_images=500, size=32, seed=seed))
        train, hold = corpus[:400], corpus[400:]
        joint = SemanticColorizer(lambda_s=100.0, lambda_c=1.0, seed=seed, **ABLATION)
        joint.fit(train)
        color_only = SemanticColorizer(lambda_s=0.0, lambda_c=1.0, seed=seed, **ABLATION)
        color_only.fit(train)
        results["joint_ce"].append(joint.holdout_color_ce(hold))
        results["color_ce"].append(color_only.holdout_color_ce(hold))
        results["miou"].append(joint.holdout_miou(hold).mean_iou)
        results["seconds"].append(time.perf_counter() - t0)
        if seed == ABLATION_SEEDS[0]:
            keep["model"] = joint
            keep["holdout"] = hold
    results.update(keep)
    return results


def test_criterion_4_semantics_helps(ablation_results):
    r = ablation_results
    med_joint = float(np.median(r["joint_ce"]))
    med_color = float(np.median(r["color_ce"]))
    med_miou = float(np.median(r["miou"]))
    chance = 1.0 / 4.0
    within_budget = max(r["seconds"]) < 15 * 60
    verdict(
        "4 (semantics-helps ablation)",
        med_joint < med_color and med_miou >= chance + CHANCE_MARGIN and within_budget,
        f"median held-out CE {med_joint:.4f} (joint) vs {med_color:.4f} "
        f"(color-only); median mIoU {med_miou:.3f} vs bar {chance + CHANCE_MARGIN}; "
        f"worst seed {max(r['seconds']):.0f}s",
    )


# --------------------------------------------------------------- criterion 5

def test_criterion_5_jbu_quality_neutrality(ablation_results):
    model = ablation_results["model"]
    holdout = ablation_results["holdout"][:20]
    diffs = []
    for sample in holdout:
        reference = lab_to_rgb(sample.lab)
        lightness = sample.lab[..., 0]
        outs = {}
        for use_jbu in (True, False):
            lab = model.net_.infer_color(
                lightness,
                model.quantizer_.grid_,
                decode_mode=model.decode_mode,
                temperature=model.temperature,
                params=BilateralParams(model.sigma_s, model.sigma_r),
                use_jbu=use_jbu,
            )
            outs[use_jbu] = psnr(lab_to_rgb(lab), reference)
        diffs.append(abs(outs[True] - outs[False]))
    med = float(np.median(diffs))
    verdict(
        "5 (JBU quality neutrality)",
        med <= 1.5,
        f"median |PSNR(jbu) - PSNR(bilinear)| = {med:.3f} dB over 20 samples",
    )


# --------------------------------------------------------------- criterion 6

def test_criterion_6_quantizer(default_grid, rng):
    q_ok = abs(default_grid.q - 313) <= 7

    rgb = rng.random((20000, 3))
    ab = srgb_to_lab(rgb)[:, 1:]
    enc = encode_soft(ab, default_grid, k=5, sigma=5.0)
    dec = decode(enc, default_grid, mode="mode")
    err = float(np.sqrt(((dec - ab) ** 2).sum(axis=-1)).max())
    bound = default_grid.grid_step / math.sqrt(2.0)

    dist = rng.random((64, default_grid.q))
    dist /= dist.sum(axis=-1, keepdims=True)
    mean_dec = decode(dist, default_grid, mode="mean")
    annealed_dec = decode(dist, default_grid, mode="annealed", temperature=1.0)
    t1_err = float(np.abs(mean_dec - annealed_dec).max())

    verdict(
        "6 (quantizer)",
        q_ok and err <= bound + 1e-12 and t1_err <= 1e-12,
        f"q={default_grid.q}; decode-encode err {err:.4f} <= {bound:.4f}; "
        f"annealed(T=1) vs mean {t1_err:.1e}",
    )


# --------------------------------------------------------------- criterion 7

def test_criterion_7_color_space():
    v = np.linspace(0, 255, 17).round().astype(np.uint8)
    r, g, b = np.meshgrid(v, v, v, indexing="ij")
    img = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=-1).reshape(1, -1, 3)
    back = lab_to_rgb(rgb_to_lab(img))
    roundtrip = int(np.abs(back.astype(int) - img.astype(int)).max())

    white = rgb_to_lab(np.full((1, 1, 3), 255, dtype=np.uint8))[0, 0]
    black = rgb_to_lab(np.zeros((1, 1, 3), dtype=np.uint8))[0, 0]
    white_ok = abs(white[0] - 100.0) <= 1e-9 and max(abs(white[1]), abs(white[2])) <= 1e-6
    black_ok = bool(np.all(np.abs(black) <= 1e-9))
    inverse_ok = bool(
        np.array_equal(
            lab_to_rgb(np.array([[[100.0, 0.0, 0.0]]]))[0, 0], [255, 255, 255]
        )
    )
    verdict(
        "7 (color space)",
        roundtrip <= 1 and white_ok and black_ok and inverse_ok,
        f"17^3 roundtrip max |diff| {roundtrip}; anchors "
        f"{'exact' if white_ok and black_ok and inverse_ok else 'off'}",
    )


# --------------------------------------------------------------- criterion 8

def test_criterion_8_determinism(tmp_path):
    def tree_bytes(root: Path) -> dict:
        return {p.name: p.read_bytes() for p in sorted(root.iterdir())}

    synth_dirs = []
    for name in ("s1", "s2"):
        out = tmp_path / name
        assert cli_main(["synth", "--n", "8", "--seed", "9", "--out", str(out)]) == 0
        synth_dirs.append(tree_bytes(out))
    synth_ok = synth_dirs[0] == synth_dirs[1]

    models = []
    for name in ("m1.ckpt", "m2.ckpt"):
        out = tmp_path / name
        assert cli_main([
            "train", "--corpus", str(tmp_path / "s1"), "--out", str(out),
            "--epochs", "2", "--lr", "0.002",
        ]) == 0
        models.append(out.read_bytes() + Path(str(out) + ".report.txt").read_bytes())
    train_ok = models[0] == models[1]

    gray = (np.indices((32, 32)).sum(axis=0) * 4).astype(np.uint8)
    io.write_png(tmp_path / "in.png", gray)
    outs = []
    for name in ("c1.png", "c2.png"):
        out = tmp_path / name
        assert cli_main([
            "colorize", "--model", str(tmp_path / "m1.ckpt"),
            "--input", str(tmp_path / "in.png"), "--output", str(out),
        ]) == 0
        outs.append(out.read_bytes())
    colorize_ok = outs[0] == outs[1]

    verdict(
        "8 (determinism)",
        synth_ok and train_ok and colorize_ok,
        f"synth {'ok' if synth_ok else 'DIFF'}, train {'ok' if train_ok else 'DIFF'}, "
        f"colorize {'ok' if colorize_ok else 'DIFF'}",
    )
