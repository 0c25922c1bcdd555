"""Dataset ingestion, input assembly, time normalization, and patch cropping.

A dataset lives under a root directory as
``<root>/<location_id>/{hr_<traw>.png, lr_<traw>.png}`` plus a
``manifest.json`` describing records, the time unit, the image size, and the
train/test split by location.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .raster import RasterImage, load_png

MANIFEST_FORMAT = "chronosynth/manifest-v1"

INPUT_MODES = ("standard", "no_hr_ref", "multi_lr")

# Direction of a (target t, reference t') pair: "past" rewinds the scene
# (reference postdates the target), "future" predicts it.
DIRECTION_PAST = "past"
DIRECTION_FUTURE = "future"
DIRECTION_ALL = "all"
DIRECTIONS = (DIRECTION_PAST, DIRECTION_FUTURE, DIRECTION_ALL)


class DataError(Exception):
    pass


@dataclass
class TripletSample:
    """One training/eval record: LR at t, HR reference at t', optional HR truth at t."""

    location_id: str
    lr_t: RasterImage
    hr_ref: RasterImage
    t: float
    t_ref: float
    hr_gt: RasterImage | None = None
    extra_lr: list = field(default_factory=list)

    def __post_init__(self):
        if self.t == self.t_ref:
            raise DataError(f"{self.location_id}: target and reference times both {self.t}")
        for other in [self.hr_gt] if self.hr_gt is not None else []:
            if other.values.shape != self.hr_ref.values.shape:
                raise DataError(
                    f"{self.location_id}: hr_gt shape {other.values.shape} != "
                    f"hr_ref shape {self.hr_ref.values.shape}"
                )


@dataclass(frozen=True)
class PatchSpec:
    """Crop geometry: side S, top-left origin, quarter size S/4, blend weight."""

    size: int
    origin: tuple[int, int]
    lambda_s: float = 1.0

    @property
    def quarter(self) -> int:
        return self.size // 4

    def validate(self, height: int, width: int) -> None:
        s = self.size
        if s % 4 != 0:
            raise DataError(f"patch size {s} not divisible by 4")
        if height % s != 0 or width % s != 0:
            raise DataError(f"patch size {s} does not divide image {height}x{width}")
        h0, w0 = self.origin
        if not (0 <= h0 <= height - s and 0 <= w0 <= width - s):
            raise DataError(f"patch origin {self.origin} out of bounds for {height}x{width}")


def resample_nearest(lr: RasterImage, target_h: int, target_w: int) -> RasterImage:
    """Nearest-neighbor upsample with floor index mapping.

    output(c, x, y) = lr(c, floor(x * H_lr / target_h), floor(y * W_lr / target_w))
    """
    if target_h < 1 or target_w < 1:
        raise DataError(f"invalid resample target {target_h}x{target_w}")
    h_lr, w_lr = lr.height, lr.width
    if target_h < h_lr or target_w < w_lr:
        raise DataError(f"target {target_h}x{target_w} smaller than source {h_lr}x{w_lr}")
    rows = (np.arange(target_h) * h_lr) // target_h
    cols = (np.arange(target_w) * w_lr) // target_w
    return RasterImage(lr.values[:, rows][:, :, cols], lr.range_tag)


def assemble_input(
    lr_t: RasterImage,
    hr_ref: RasterImage,
    mode: str = "standard",
    extra_lr: list | None = None,
) -> RasterImage:
    """Stack the model input along channels: [LR | HR ref | extra LR frames].

    ``lr_t`` and any extra frames must already be resampled to the HR grid.
    ``no_hr_ref`` zero-fills the reference slots; ``multi_lr`` appends the
    extra frames after the reference.
    """
    if mode not in INPUT_MODES:
        raise DataError(f"unknown input mode {mode!r}")
    if lr_t.values.shape != hr_ref.values.shape:
        raise DataError(
            f"LR {lr_t.values.shape} and HR ref {hr_ref.values.shape} disagree after resampling"
        )
    ref = hr_ref.values if mode != "no_hr_ref" else np.zeros_like(hr_ref.values)
    parts = [lr_t.values, ref]
    if mode == "multi_lr":
        if not extra_lr:
            raise DataError("multi_lr mode needs at least one extra LR frame")
        for frame in extra_lr:
            if frame.values.shape != lr_t.values.shape:
                raise DataError("extra LR frame shape mismatch")
            parts.append(frame.values)
    return RasterImage(np.concatenate(parts, axis=0), lr_t.range_tag)


def normalize_time(t_raw: float, u: float) -> float:
    """Normalized temporal coordinate t/u."""
    if u <= 0:
        raise DataError(f"time unit must be positive, got {u}")
    return float(t_raw) / float(u)


def crop_at(arrays, origin: tuple[int, int], size: int):
    """Crop each C x H x W array at the same origin. Returns a list."""
    h0, w0 = origin
    return [a[:, h0 : h0 + size, w0 : w0 + size] for a in arrays]


def random_patch_crop(arrays, size: int, rng_seed: int, lambda_s: float = 1.0):
    """Crop a random S x S patch shared across all arrays of one sample.

    The returned PatchSpec carries the absolute origin so positional state
    can be sampled at absolute coordinates.
    """
    arrays = list(arrays)
    if not arrays:
        raise DataError("nothing to crop")
    _, h, w = arrays[0].shape
    if size > h or size > w:
        raise DataError(f"patch size {size} exceeds image {h}x{w}")
    if h % size != 0 or w % size != 0:
        raise DataError(f"patch size {size} does not divide image {h}x{w}")
    if size % 4 != 0:
        raise DataError(f"patch size {size} not divisible by 4")
    rng = np.random.default_rng(rng_seed)
    h0 = int(rng.integers(0, h - size + 1))
    w0 = int(rng.integers(0, w - size + 1))
    spec = PatchSpec(size=size, origin=(h0, w0), lambda_s=lambda_s)
    spec.validate(h, w)
    return crop_at(arrays, (h0, w0), size), spec


@dataclass(frozen=True)
class ManifestRecord:
    location_id: str
    t: float
    hr_path: str
    lr_path: str


@dataclass
class DatasetManifest:
    """Index of one dataset: records, time unit, image size, location split."""

    root: Path
    u: float
    image_size: int
    lr_factor: int
    records: list[ManifestRecord]
    split: dict

    def locations(self, split: str | None = None):
        ids = sorted({r.location_id for r in self.records})
        if split is None:
            return ids
        wanted = set(self.split.get(split, []))
        return [i for i in ids if i in wanted]

    def records_for(self, location_id: str):
        return sorted(
            (r for r in self.records if r.location_id == location_id), key=lambda r: r.t
        )


def format_time(t: float) -> str:
    return f"{t:g}"


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    with open(path) as f:
        raw = json.load(f)
    if raw.get("format") != MANIFEST_FORMAT:
        raise DataError(f"unrecognized manifest format {raw.get('format')!r}")
    root = path.parent
    records = [
        ManifestRecord(r["location_id"], float(r["t"]), r["hr"], r["lr"])
        for r in raw["records"]
    ]
    problems = []
    seen = set()
    for r in records:
        key = (r.location_id, r.t)
        if key in seen:
            problems.append(f"duplicate record for location {r.location_id} at t={r.t}")
        seen.add(key)
        for p in (r.hr_path, r.lr_path):
            if not (root / p).exists():
                problems.append(f"missing raster file {p}")
    split = {k: list(v) for k, v in raw.get("split", {}).items()}
    overlap = set(split.get("train", [])) & set(split.get("test", []))
    if overlap:
        problems.append(f"locations in both train and test: {sorted(overlap)}")
    if problems:
        raise DataError("invalid manifest:\n  " + "\n  ".join(problems))
    return DatasetManifest(
        root=root,
        u=float(raw["u"]),
        image_size=int(raw["image_size"]),
        lr_factor=int(raw.get("lr_factor", 1)),
        records=records,
        split=split,
    )


def _direction_keep(direction: str, t: float, t_ref: float) -> bool:
    if direction == DIRECTION_ALL:
        return True
    if direction == DIRECTION_PAST:
        return t_ref > t
    if direction == DIRECTION_FUTURE:
        return t_ref < t
    raise DataError(f"unknown direction {direction!r}")


def iterate_triplets(
    manifest: DatasetManifest,
    direction: str = DIRECTION_ALL,
    split: str | None = None,
    extra_lr_frames: int = 0,
    with_ground_truth: bool = True,
):
    """Stream every ordered (target t, reference t') pair with t != t'.

    Pairs are emitted per location in sorted (t, t') order, filtered by
    direction. ``extra_lr_frames`` attaches the k nearest-in-time LR frames
    from other timestamps (multi_lr input mode).
    """
    if direction not in DIRECTIONS:
        raise DataError(f"unknown direction {direction!r}")
    for loc in manifest.locations(split):
        recs = manifest.records_for(loc)
        by_time = {r.t: r for r in recs}
        for target in recs:
            for ref in recs:
                if ref.t == target.t or not _direction_keep(direction, target.t, ref.t):
                    continue
                extras = []
                if extra_lr_frames > 0:
                    others = [r for r in recs if r.t != target.t]
                    others.sort(key=lambda r: (abs(r.t - target.t), r.t))
                    if len(others) < extra_lr_frames:
                        raise DataError(
                            f"{loc}: multi_lr wants {extra_lr_frames} extra LR frames, "
                            f"only {len(others)} other timestamps available"
                        )
                    extras = [
                        load_png(manifest.root / r.lr_path) for r in others[:extra_lr_frames]
                    ]
                yield TripletSample(
                    location_id=loc,
                    lr_t=load_png(manifest.root / target.lr_path),
                    hr_ref=load_png(manifest.root / ref.hr_path),
                    hr_gt=load_png(manifest.root / by_time[target.t].hr_path)
                    if with_ground_truth
                    else None,
                    t=target.t,
                    t_ref=ref.t,
                    extra_lr=extras,
                )
