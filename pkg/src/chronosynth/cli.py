"""Command-line entry points: synth-data, train, generate, evaluate.

Exit codes: 0 success, 2 usage/validation error, 3 runtime failure. The
CHRONOSYNTH_SEED environment variable overrides every command's seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import torch

from .checkpoint import CheckpointError, load_checkpoint, read_index
from .config import (
    PRESETS,
    SEED_ENV_VAR,
    ConfigError,
    RunConfig,
    build_run_config,
    write_materialized,
)
from .data import DataError, iterate_triplets, load_manifest
from .generator import Generator, GeneratorConfig
from .inference import generator_image_source
from .losses import NonFiniteLoss
from .metrics import directory_image_source, evaluate_dataset, generated_image_name
from .raster import RasterImage, save_png, signed_to_unit
from .synthetic import make_synthetic_dataset
from .training import create_train_state, resume_train_state, train


class UsageError(Exception):
    pass


def _env_seed(default: int) -> int:
    value = os.environ.get(SEED_ENV_VAR)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError as e:
        raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {value!r}") from e


def _direction(value: str) -> str:
    if value not in ("past", "future", "all"):
        raise UsageError(f"direction must be past, future, or all, got {value!r}")
    return value


def cmd_synth_data(args) -> int:
    if args.size % args.factor != 0:
        raise UsageError(f"--factor {args.factor} does not divide --size {args.size}")
    if args.timestamps < 2:
        raise UsageError("--timestamps must be at least 2")
    manifest = make_synthetic_dataset(
        args.out,
        seed=_env_seed(args.seed),
        n_locations=args.locations,
        image_size=args.size,
        lr_factor=args.factor,
        n_timestamps=args.timestamps,
        noise_sigma=args.noise_sigma,
        test_fraction=args.test_fraction,
        time_unit=args.time_unit,
        time_step=args.time_step,
    )
    print(manifest.root / "manifest.json")
    return 0


def _resolve_run(args) -> tuple[RunConfig, "object", int, float]:
    cfg = build_run_config(args.config, preset=args.preset)
    manifest_path = args.manifest or cfg.data.manifest
    if manifest_path is None:
        raise UsageError("no dataset: set data.manifest in the config or pass --manifest")
    manifest = load_manifest(manifest_path)
    image_size = cfg.data.image_size or manifest.image_size
    u = cfg.data.u or manifest.u
    return cfg, manifest, image_size, u


def cmd_train(args) -> int:
    cfg, manifest, image_size, u = _resolve_run(args)
    cfg.train.seed = _env_seed(cfg.train.seed)
    patch = cfg.data.patch_size if cfg.data.patch_size is not None else cfg.train.patch_size
    cfg.train.patch_size = patch
    cfg.data.patch_size = patch
    cfg.data.manifest = str(Path(args.manifest or cfg.data.manifest))
    cfg.data.image_size = image_size
    cfg.data.u = u
    gen_cfg = cfg.generator_config(image_size, u)
    if patch is not None and (patch > image_size or image_size % patch):
        raise UsageError(f"patch size {patch} does not divide image size {image_size}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_materialized(cfg, out_dir / "config.json")

    state = create_train_state(gen_cfg, cfg.train, cfg.discriminator_settings())
    if args.resume:
        resume_train_state(state, args.resume)
        print(f"resumed from {args.resume} at step {state.step}")
    dataset = list(
        iterate_triplets(
            manifest, direction="all", split="train",
            extra_lr_frames=gen_cfg.extra_lr_frames,
        )
    )
    print(
        f"training {gen_cfg.variant} on {len(dataset)} triplets "
        f"({image_size}px, u={u}) for {cfg.train.total_steps} steps"
    )
    history = train(state, dataset, out_dir=out_dir)
    if history:
        last = history[-1]
        print(
            f"step {last['step']}: g_loss={last['g_loss']:.4f} "
            f"d_loss={last['d_loss']:.4f} l1={last['l1']:.4f}"
        )
    print(out_dir / "checkpoint")
    return 0


def load_generator(checkpoint_dir) -> Generator:
    index = read_index(checkpoint_dir)
    stored = index.get("config", {}).get("generator")
    if not stored:
        raise CheckpointError(f"checkpoint {checkpoint_dir} has no embedded generator config")
    generator = Generator(GeneratorConfig.from_dict(stored))
    load_checkpoint(checkpoint_dir, generator)
    generator.eval()
    return generator


def cmd_generate(args) -> int:
    generator = load_generator(args.checkpoint)
    manifest = load_manifest(args.manifest)
    if abs(generator.config.time_unit - manifest.u) > 1e-9:
        raise UsageError(
            f"time unit mismatch: checkpoint {generator.config.time_unit} vs "
            f"manifest {manifest.u}"
        )
    sliding = args.S if args.sliding else None
    if args.sliding and args.S is None:
        raise UsageError("--sliding needs --S")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = _env_seed(args.seed)
    source = generator_image_source(
        generator,
        z_policy=args.z_policy,
        seed=seed,
        sliding_size=sliding,
        lambda_s=args.lambda_s,
    )
    split = None if args.split == "all" else args.split
    count = 0
    with torch.no_grad():
        for sample in iterate_triplets(
            manifest, direction=_direction(args.direction), split=split,
            extra_lr_frames=generator.config.extra_lr_frames,
            with_ground_truth=False,
        ):
            unit = source(sample)
            stem = generated_image_name(sample.location_id, sample.t, sample.t_ref)
            save_png(RasterImage(np.clip(unit, 0.0, 1.0)), out_dir / f"{stem}.png")
            if args.float32:
                np.save(out_dir / f"{stem}.npy", unit.astype(np.float32))
            count += 1
    settings = {
        "checkpoint": str(args.checkpoint), "manifest": str(args.manifest),
        "direction": args.direction, "split": args.split, "seed": seed,
        "sliding": sliding, "lambda_s": args.lambda_s, "z_policy": args.z_policy,
    }
    with open(out_dir / "generate_config.json", "w") as f:
        json.dump(settings, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {count} images to {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    if (args.gen_dir is None) == (args.checkpoint is None):
        raise UsageError("pass exactly one of --gen-dir or --checkpoint")
    if args.gen_dir is not None:
        source = directory_image_source(args.gen_dir)
        extra = 0
    else:
        generator = load_generator(args.checkpoint)
        source = generator_image_source(
            generator, z_policy=args.z_policy, seed=_env_seed(args.seed),
            sliding_size=args.S, lambda_s=args.lambda_s,
        )
        extra = generator.config.extra_lr_frames
    split = None if args.split == "all" else args.split
    metric_names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    with torch.no_grad():
        report = evaluate_dataset(
            manifest, source, metric_names=metric_names,
            direction=_direction(args.direction), split=split, extra_lr_frames=extra,
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_json(out_dir / "report.json")
    report.write_csv(out_dir / "report.csv")
    for key, entry in report.aggregates().items():
        stats = " ".join(
            f"{name}={entry[name]:.4f}" if isinstance(entry[name], float) else
            f"{name}={entry[name]}"
            for name in metric_names
        )
        print(f"{key}: count={entry['count']} {stats}")
    if report.failures:
        for row in report.failures:
            print(
                f"FAILED {row.location_id} t={row.t} t'={row.t_ref}: {row.error}",
                file=sys.stderr,
            )
        if len(report.failures) == len(report.rows):
            raise RuntimeError("every evaluation row failed")
    print(out_dir / "report.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chronosynth",
        description="Train and run the conditional pixel-synthesis generator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="write a deterministic synthetic dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--locations", type=int, default=16)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--factor", type=int, default=8)
    p.add_argument("--timestamps", type=int, default=2)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--time-unit", type=float, default=2.0)
    p.add_argument("--time-step", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("config", nargs="?", help="run config JSON")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--manifest", default=None, help="dataset manifest override")
    p.add_argument("--resume", default=None, help="checkpoint directory to resume")
    p.add_argument("--out", default="runs/run")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="generate HR images for every pair")
    p.add_argument("checkpoint")
    p.add_argument("manifest")
    p.add_argument("--direction", default="all")
    p.add_argument("--split", default="test", choices=["train", "test", "all"])
    p.add_argument("--sliding", action="store_true")
    p.add_argument("--S", type=int, default=None, help="sliding window size")
    p.add_argument("--lambda-s", type=float, default=1.0, dest="lambda_s")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z-policy", default="per_pair", choices=["per_pair", "fixed"],
                   dest="z_policy")
    p.add_argument("--float32", action="store_true",
                   help="also dump float32 .npy alongside each PNG")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="pair-averaged metric report")
    p.add_argument("manifest")
    p.add_argument("--gen-dir", default=None, help="directory of generated images")
    p.add_argument("--checkpoint", default=None, help="generate on the fly")
    p.add_argument("--direction", default="all")
    p.add_argument("--split", default="test", choices=["train", "test", "all"])
    p.add_argument("--metrics", default="psnr,ssim,fsim")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z-policy", default="per_pair", choices=["per_pair", "fixed"],
                   dest="z_policy")
    p.add_argument("--S", type=int, default=None)
    p.add_argument("--lambda-s", type=float, default=1.0, dest="lambda_s")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DataError, CheckpointError, NonFiniteLoss, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
