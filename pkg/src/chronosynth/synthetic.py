"""Deterministic synthetic paired-time-series generator.

Each location is a smooth background texture plus axis-aligned "buildings"
(rectangles) and small "pools" (squares), every object carrying an
appearance time. The HR frame at time t renders objects whose appearance
time is <= t; the LR frame is the r x r block average of the HR frame plus
optional Gaussian noise. Everything derives from one seed, so the dataset
on disk is byte-identical across runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import MANIFEST_FORMAT, DataError, DatasetManifest, format_time, load_manifest
from .raster import RasterImage, save_png


@dataclass
class SceneObject:
    top: int
    left: int
    height: int
    width: int
    color: np.ndarray
    appear_t: float


@dataclass
class LocationScene:
    """Float-valued rendering of one location at every timestamp, pre-quantization."""

    location_id: str
    timestamps: list
    hr: dict  # t -> (3, H, W) float array in [0, 1]
    lr: dict  # t -> (3, H/r, W/r) float array in [0, 1]
    objects: list


def block_mean(hr: np.ndarray, factor: int) -> np.ndarray:
    c, h, w = hr.shape
    if h % factor or w % factor:
        raise DataError(f"block factor {factor} does not divide {h}x{w}")
    return hr.reshape(c, h // factor, factor, w // factor, factor).mean(axis=(2, 4))


def _smooth_field(rng: np.random.Generator, height: int, width: int, cells: int = 8) -> np.ndarray:
    """Bilinearly upsampled coarse noise, one channel, roughly in [-1, 1]."""
    coarse = rng.normal(0.0, 0.5, size=(cells + 1, cells + 1))
    ys = np.linspace(0, cells, height)
    xs = np.linspace(0, cells, width)
    y0 = np.clip(ys.astype(int), 0, cells - 1)
    x0 = np.clip(xs.astype(int), 0, cells - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    a = coarse[y0][:, x0]
    b = coarse[y0][:, x0 + 1]
    c = coarse[y0 + 1][:, x0]
    d = coarse[y0 + 1][:, x0 + 1]
    return a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx + c * fy * (1 - fx) + d * fy * fx


def render_location(
    location_id: str,
    rng: np.random.Generator,
    image_size: int,
    lr_factor: int,
    timestamps,
    noise_sigma: float = 0.0,
) -> LocationScene:
    h = w = image_size
    timestamps = sorted(float(t) for t in timestamps)

    base = np.array(
        [0.28 + 0.15 * rng.random(), 0.34 + 0.15 * rng.random(), 0.16 + 0.10 * rng.random()],
        dtype=np.float64,
    )
    field = _smooth_field(rng, h, w)
    grain = rng.normal(0.0, 0.02, size=(h, w))
    background = base[:, None, None] + 0.08 * field[None] + grain[None]

    objects = []
    n_buildings = int(rng.integers(3, 8))
    for i in range(n_buildings):
        bh = int(rng.integers(max(3, h // 10), max(4, h // 4)))
        bw = int(rng.integers(max(3, w // 10), max(4, w // 4)))
        top = int(rng.integers(0, h - bh + 1))
        left = int(rng.integers(0, w - bw + 1))
        gray = 0.45 + 0.35 * rng.random()
        tint = rng.normal(0.0, 0.03, size=3)
        color = np.clip(gray + tint, 0.0, 1.0)
        appear = timestamps[0] if i == 0 else float(rng.choice(timestamps))
        objects.append(SceneObject(top, left, bh, bw, color, appear))
    # guarantee at least one appearing object so consecutive frames differ
    if len(timestamps) > 1:
        objects[-1].appear_t = float(rng.choice(timestamps[1:]))

    n_pools = int(rng.integers(1, 4))
    side = max(2, h // 16)
    for _ in range(n_pools):
        top = int(rng.integers(0, h - side + 1))
        left = int(rng.integers(0, w - side + 1))
        color = np.array(
            [0.10 + 0.15 * rng.random(), 0.45 + 0.15 * rng.random(), 0.65 + 0.2 * rng.random()]
        )
        appear = float(rng.choice(timestamps))
        objects.append(SceneObject(top, left, side, side, color, appear))

    # draw noise for every timestamp upfront so frame content does not shift
    # the RNG stream consumed by later frames
    lr_h = h // lr_factor
    lr_noise = {
        t: rng.normal(0.0, 1.0, size=(3, lr_h, lr_h)) if noise_sigma > 0 else None
        for t in timestamps
    }

    hr_frames, lr_frames = {}, {}
    for t in timestamps:
        frame = background.copy()
        for obj in objects:
            if obj.appear_t <= t:
                frame[
                    :, obj.top : obj.top + obj.height, obj.left : obj.left + obj.width
                ] = obj.color[:, None, None]
        frame = np.clip(frame, 0.0, 1.0)
        lr = block_mean(frame, lr_factor)
        if noise_sigma > 0:
            lr = np.clip(lr + noise_sigma * lr_noise[t], 0.0, 1.0)
        hr_frames[t] = frame.astype(np.float32)
        lr_frames[t] = lr.astype(np.float32)

    return LocationScene(location_id, timestamps, hr_frames, lr_frames, objects)


def make_synthetic_dataset(
    out_dir,
    seed: int,
    n_locations: int,
    image_size: int = 64,
    lr_factor: int = 8,
    n_timestamps: int = 2,
    noise_sigma: float = 0.0,
    test_fraction: float = 0.25,
    time_unit: float = 2.0,
    time_step: float = 2.0,
) -> DatasetManifest:
    """Render a dataset to disk and return its validated manifest.

    Raw times are 0, time_step, 2*time_step, ... and the manifest stores the
    time unit u used for normalization.
    """
    if image_size % lr_factor != 0:
        raise DataError(f"LR factor {lr_factor} does not divide image size {image_size}")
    if n_timestamps < 2:
        raise DataError(f"need at least 2 timestamps, got {n_timestamps}")
    if n_locations < 1:
        raise DataError("need at least one location")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    timestamps = [i * time_step for i in range(n_timestamps)]
    children = np.random.SeedSequence(seed).spawn(n_locations)

    records = []
    location_ids = []
    for idx, child in enumerate(children):
        loc = f"loc_{idx:04d}"
        location_ids.append(loc)
        scene = render_location(
            loc, np.random.default_rng(child), image_size, lr_factor, timestamps, noise_sigma
        )
        loc_dir = out_dir / loc
        loc_dir.mkdir(exist_ok=True)
        for t in scene.timestamps:
            hr_name = f"{loc}/hr_{format_time(t)}.png"
            lr_name = f"{loc}/lr_{format_time(t)}.png"
            save_png(RasterImage(scene.hr[t]), out_dir / hr_name)
            save_png(RasterImage(scene.lr[t]), out_dir / lr_name)
            records.append(
                {"location_id": loc, "t": t, "hr": hr_name, "lr": lr_name}
            )

    n_test = int(math.ceil(n_locations * test_fraction)) if n_locations > 1 else 0
    split = {
        "train": location_ids[: n_locations - n_test],
        "test": location_ids[n_locations - n_test :],
    }

    manifest = {
        "format": MANIFEST_FORMAT,
        "u": time_unit,
        "image_size": image_size,
        "lr_factor": lr_factor,
        "records": records,
        "split": split,
    }
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return load_manifest(out_dir / "manifest.json")
