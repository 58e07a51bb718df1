"""Command-line entry point: corpus synthesis, training, colorization,
metric evaluation, and direct access to the bilateral kernels.

Every command is deterministic given its flags and input files; all
randomness flows from the seed in the run configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .bilateral import BilateralParams, joint_bilateral_filter, joint_bilateral_upsample
from .color import gray_to_lightness, lab_to_rgb, merge_channels, rgb_to_lab
from .colorizer import SemanticColorizer
from .metrics import mean_iou, psnr
from .network import ToyNet, ToyNetConfig
from .quantizer import ChromaGrid
from .synth import SynthSample, SynthSpec, generate


def _load_lightness(path, warn_color=True) -> np.ndarray:
    img = io.read_png(path)
    if img.ndim == 2:
        return gray_to_lightness(img)
    if warn_color:
        print(f"warning: {path} is not grayscale, converting via luminance",
              file=sys.stderr)
    return rgb_to_lab(img)[..., 0]


def _load_chroma(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Chroma planes from a tensor file or the ab planes of a color PNG.
    Returns (chroma, lightness or None)."""
    if str(path).endswith(".png"):
        lab = rgb_to_lab(io.read_png(path))
        return lab[..., 1:], lab[..., 0]
    arr = io.read_tensor(path)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"chroma tensor must be (H, W, 2), got {arr.shape}")
    return arr, None


def _write_chroma_result(path, chroma: np.ndarray, guide_lightness: np.ndarray):
    if str(path).endswith(".png"):
        io.write_png(path, lab_to_rgb(merge_channels(guide_lightness, chroma)))
    else:
        io.write_tensor(path, chroma)


# ------------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(
        n_images=args.n, size=args.size, n_classes=args.classes,
        lightness_overlap=args.overlap, seed=args.seed,
    )
    pairs = []
    for i, sample in enumerate(generate(spec)):
        rgb_name, label_name = f"{i:04d}_rgb.png", f"{i:04d}_label.png"
        io.write_png(out / rgb_name, lab_to_rgb(sample.lab))
        io.write_png(out / label_name, sample.labels.astype(np.uint8))
        pairs.append((rgb_name, label_name))
    meta = {
        "seed": spec.seed, "n": spec.n_images, "size": spec.size,
        "classes": spec.n_classes, "overlap": int(spec.lightness_overlap),
    }
    io.write_manifest(out / "manifest.txt", meta, pairs)
    return 0


def _load_corpus(corpus_dir) -> tuple[dict, list[SynthSample]]:
    corpus = Path(corpus_dir)
    meta, pairs = io.read_manifest(corpus / "manifest.txt")
    size, n_classes = int(meta["size"]), int(meta["classes"])
    samples = []
    for rgb_name, label_name in pairs:
        rgb = io.read_png(corpus / rgb_name)
        labels = io.read_png(corpus / label_name)
        if rgb.shape != (size, size, 3) or labels.shape != (size, size):
            raise ValueError(
                f"corpus/manifest mismatch: {rgb_name} is {rgb.shape}, "
                f"{label_name} is {labels.shape}, manifest says {size}x{size}"
            )
        if labels.max() >= n_classes:
            raise ValueError(
                f"corpus/manifest mismatch: {label_name} has class "
                f"{labels.max()} but manifest says {n_classes} classes"
            )
        samples.append(SynthSample(rgb_to_lab(rgb), labels.astype(np.int64)))
    return meta, samples


CONFIG_OVERRIDES = list(io.RUN_CONFIG_SCHEMA)


def cmd_train(args) -> int:
    values = io.read_run_config(args.config) if args.config else io.parse_run_config("")
    for key in CONFIG_OVERRIDES:
        override = getattr(args, key)
        if override is not None:
            values[key] = io.RUN_CONFIG_SCHEMA[key][0](override)

    meta, samples = _load_corpus(args.corpus)
    if int(meta["size"]) != values["input_size"]:
        raise ValueError(
            f"corpus size {meta['size']} does not match input_size "
            f"{values['input_size']}"
        )
    model = SemanticColorizer(
        input_size=values["input_size"],
        n_classes=int(meta["classes"]),
        epochs=values["epochs"],
        lr=values["lr"],
        lambda_c=values["lambda_c"],
        lambda_s=values["lambda_s"],
        k_neighbors=values["k_neighbors"],
        encode_sigma=values["encode_sigma"],
        mix_lambda=values["mix_lambda"],
        decode_mode=values["decode_mode"],
        temperature=values["temperature"],
        sigma_s=values["sigma_s"],
        sigma_r=values["sigma_r"],
        seed=values["seed"],
    )
    model.fit(samples)
    if model.report_.diverged:
        print("warning: training diverged, checkpoint holds the last finite state",
              file=sys.stderr)

    net, quant = model.net_, model.quantizer_
    config = {
        "input_size": net.config.input_size,
        "trunk_channels": ",".join(map(str, net.config.trunk_channels)),
        "head_channels": ",".join(map(str, net.config.head_channels)),
        "n_classes": net.config.n_classes,
        "q": net.config.q,
        "seed": net.config.seed,
        "color_head_stride": net.config.color_head_stride,
        "seg_deconv_channels": net.config.seg_deconv_channels,
        "grid_step": quant.grid_.grid_step,
        "gamut_samples": quant.grid_.gamut_samples,
        "decode_mode": values["decode_mode"],
        "temperature": values["temperature"],
        "sigma_s": values["sigma_s"],
        "sigma_r": values["sigma_r"],
    }
    tensors = dict(net.params)
    tensors["grid_centers"] = quant.grid_.bin_centers
    tensors["rebalance_w"] = quant.weights_.w
    tensors["prior"] = quant.prior_
    io.save_checkpoint(args.out, config, tensors)

    report_path = args.report or (str(args.out) + ".report.txt")
    rep = model.report_
    lines = ["epoch color_ce seg_ce total"]
    for i, (lc, ls, tot) in enumerate(
        zip(rep.color_losses, rep.seg_losses, rep.total_losses), 1
    ):
        lines.append(f"{i} {lc:.12g} {ls:.12g} {tot:.12g}")
    Path(report_path).write_text("\n".join(lines) + "\n")
    return 0


def _net_from_checkpoint(path) -> tuple[ToyNet, ChromaGrid, dict]:
    config, tensors = io.load_checkpoint(path)
    net_config = ToyNetConfig(
        input_size=int(config["input_size"]),
        trunk_channels=tuple(int(v) for v in config["trunk_channels"].split(",")),
        head_channels=tuple(int(v) for v in config["head_channels"].split(",")),
        n_classes=int(config["n_classes"]),
        q=int(config["q"]),
        seed=int(config["seed"]),
        color_head_stride=int(config["color_head_stride"]),
        seg_deconv_channels=int(config["seg_deconv_channels"]),
    )
    grid = ChromaGrid(
        tensors.pop("grid_centers"),
        float(config["grid_step"]),
        int(config.get("gamut_samples", 0)),
    )
    tensors.pop("rebalance_w", None)
    tensors.pop("prior", None)
    return ToyNet(tensors, net_config), grid, config


def cmd_colorize(args) -> int:
    net, grid, config = _net_from_checkpoint(args.model)
    lightness = _load_lightness(args.input)
    lab = net.infer_color(
        lightness,
        grid,
        decode_mode=args.decode or config.get("decode_mode", "annealed"),
        temperature=(
            args.temperature if args.temperature is not None
            else float(config.get("temperature", 0.38))
        ),
        params=BilateralParams(
            args.sigma_s if args.sigma_s is not None else float(config.get("sigma_s", 3.0)),
            args.sigma_r if args.sigma_r is not None else float(config.get("sigma_r", 15.0)),
        ),
        use_jbu=args.jbu,
    )
    io.write_png(args.output, lab_to_rgb(lab))
    return 0


def cmd_eval(args) -> int:
    if args.metric == "psnr":
        a, b = io.read_png(args.pred), io.read_png(args.ref)
        value = psnr(a, b)
        print("psnr inf" if value == float("inf") else f"psnr {value:.6f}")
    else:
        pred = io.read_png(args.pred).astype(np.int64)
        ref = io.read_png(args.ref).astype(np.int64)
        report = mean_iou(pred, ref, args.classes)
        for c, v in enumerate(report.per_class_iou):
            print(f"iou {c} {'nan' if np.isnan(v) else f'{v:.6f}'}")
        print(f"miou {report.mean_iou:.6f}")
    return 0


def _bilateral_args(args) -> BilateralParams:
    return BilateralParams(args.sigma_s, args.sigma_r, args.radius)


def cmd_filter(args) -> int:
    chroma, _ = _load_chroma(args.chroma)
    guide = _load_lightness(args.guide, warn_color=False)
    out = joint_bilateral_filter(chroma, guide, _bilateral_args(args))
    _write_chroma_result(args.output, out, guide)
    return 0


def cmd_upsample(args) -> int:
    chroma, _ = _load_chroma(args.chroma)
    guide = _load_lightness(args.guide, warn_color=False)
    out = joint_bilateral_upsample(chroma, guide, _bilateral_args(args))
    _write_chroma_result(args.output, out, guide)
    return 0


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcolor",
        description="semantic-guided colorization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic shapes corpus")
    p.add_argument("--n", type=int, required=True, help="number of images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--overlap", action=argparse.BooleanOptionalAction, default=True,
                   help="share one lightness band across classes")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--config", help="run configuration file (key = value lines)")
    p.add_argument("--report", help="per-epoch loss table path")
    for key, (parser_fn, _) in io.RUN_CONFIG_SCHEMA.items():
        p.add_argument(f"--{key}", type=parser_fn, default=None,
                       help=f"override config key {key}")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("colorize", help="colorize a grayscale PNG")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--jbu", action=argparse.BooleanOptionalAction, default=True,
                   help="joint bilateral upsampling (default) vs bilinear")
    p.add_argument("--decode", choices=("mode", "mean", "annealed"))
    p.add_argument("--temperature", type=float)
    p.add_argument("--sigma_s", type=float)
    p.add_argument("--sigma_r", type=float)
    p.set_defaults(func=cmd_colorize)

    p = sub.add_parser("eval", help="compare images or label maps")
    p.add_argument("--metric", choices=("psnr", "miou"), required=True)
    p.add_argument("pred")
    p.add_argument("ref")
    p.add_argument("--classes", type=int, default=4, help="class count for miou")
    p.set_defaults(func=cmd_eval)

    for name, help_text, fn in (
        ("filter", "joint bilateral filter at equal resolution", cmd_filter),
        ("upsample", "joint bilateral upsampling to the guide resolution", cmd_upsample),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--chroma", required=True, help="chroma tensor (.cft) or PNG")
        p.add_argument("--guide", required=True, help="guide PNG")
        p.add_argument("--output", required=True, help="output .cft or .png")
        p.add_argument("--sigma_s", type=float, default=3.0)
        p.add_argument("--sigma_r", type=float, default=15.0)
        p.add_argument("--radius", type=int, default=None)
        p.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
