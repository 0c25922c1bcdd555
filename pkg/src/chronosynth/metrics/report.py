"""Pair-averaged dataset evaluation.

Evaluation walks every ordered (t, t') pair of the manifest, obtains the
generated image for the pair from an image source, rescales everything to
the unit range, and reports per-pair metric rows plus per-direction
aggregates ("t'>t", "t'<t", "all"). Additional metrics (e.g. perceptual
ones needing pretrained weights) can be registered as plugins taking two
unit-range C x H x W arrays.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import DatasetManifest, TripletSample, format_time, iterate_triplets
from ..raster import load_png
from .quality import MetricError, fsim, psnr, ssim

PAST = "t'>t"
FUTURE = "t'<t"
ALL = "all"

_REGISTRY = {"psnr": psnr, "ssim": ssim, "fsim": fsim}

DEFAULT_METRICS = ("psnr", "ssim", "fsim")


def register_metric(name: str, fn) -> None:
    """Register a plugin metric callable(a, b) -> float on unit-range arrays."""
    _REGISTRY[name] = fn


def available_metrics():
    return sorted(_REGISTRY)


def resolve_metrics(names):
    missing = [n for n in names if n not in _REGISTRY]
    if missing:
        raise MetricError(
            f"unknown metrics {missing}; available: {available_metrics()}. "
            "Perceptual metrics such as 'lpips' must be registered as plugins "
            "via register_metric()."
        )
    return {n: _REGISTRY[n] for n in names}


@dataclass
class MetricRow:
    location_id: str
    t: float
    t_ref: float
    values: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def direction(self) -> str:
        return PAST if self.t_ref > self.t else FUTURE


@dataclass
class MetricReport:
    metric_names: list
    rows: list = field(default_factory=list)

    def aggregates(self) -> dict:
        out = {}
        for key in (PAST, FUTURE, ALL):
            rows = [
                r for r in self.rows
                if r.error is None and (key == ALL or r.direction == key)
            ]
            entry = {"count": len(rows)}
            for name in self.metric_names:
                entry[name] = (
                    float(np.mean([r.values[name] for r in rows])) if rows else None
                )
            out[key] = entry
        return out

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.error is not None]

    def to_dict(self) -> dict:
        return {
            "metrics": list(self.metric_names),
            "rows": [
                {
                    "location_id": r.location_id,
                    "t": r.t,
                    "t_ref": r.t_ref,
                    "direction": r.direction,
                    **{k: _json_value(v) for k, v in r.values.items()},
                    "error": r.error,
                }
                for r in self.rows
            ],
            "aggregates": {
                key: {k: _json_value(v) for k, v in entry.items()}
                for key, entry in self.aggregates().items()
            },
            "failure_count": len(self.failures),
        }

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["location_id", "t", "t_ref", "direction", *self.metric_names, "error"]
            )
            for r in self.rows:
                writer.writerow(
                    [
                        r.location_id,
                        format_time(r.t),
                        format_time(r.t_ref),
                        r.direction,
                        *[_csv_value(r.values.get(n)) for n in self.metric_names],
                        r.error or "",
                    ]
                )


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)  # "inf" / "-inf" / "nan": strict-JSON friendly
    return v


def _csv_value(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) and math.isfinite(v) else str(v)


def generated_image_name(location_id: str, t: float, t_ref: float) -> str:
    return f"{location_id}_t{format_time(t)}_ref{format_time(t_ref)}"


def ground_truth_source(sample: TripletSample) -> np.ndarray:
    if sample.hr_gt is None:
        raise MetricError(f"{sample.location_id}: no ground-truth frame")
    return sample.hr_gt.values


def directory_image_source(directory):
    """Image source reading pre-generated outputs from a directory.

    Prefers the float32 ``.npy`` dump when present, else the 8-bit PNG.
    """
    directory = Path(directory)

    def source(sample: TripletSample) -> np.ndarray:
        stem = generated_image_name(sample.location_id, sample.t, sample.t_ref)
        npy = directory / f"{stem}.npy"
        if npy.exists():
            return np.load(npy)
        png = directory / f"{stem}.png"
        if not png.exists():
            raise MetricError(f"missing generated image {stem}(.npy|.png)")
        return load_png(png).values

    return source


def evaluate_dataset(
    manifest: DatasetManifest,
    image_source,
    metric_names=DEFAULT_METRICS,
    direction: str = "all",
    split: str | None = "test",
    extra_lr_frames: int = 0,
) -> MetricReport:
    """Metric rows for every evaluated pair plus per-direction aggregates.

    ``image_source`` maps a TripletSample to the generated unit-range image;
    per-row failures are recorded and excluded from aggregates.
    """
    metrics = resolve_metrics(metric_names)
    report = MetricReport(metric_names=list(metric_names))
    for sample in iterate_triplets(
        manifest, direction=direction, split=split, extra_lr_frames=extra_lr_frames
    ):
        row = MetricRow(sample.location_id, sample.t, sample.t_ref)
        try:
            if sample.hr_gt is None:
                raise MetricError("missing ground truth")
            generated = np.asarray(image_source(sample), dtype=np.float64)
            truth = sample.hr_gt.values.astype(np.float64)
            for name, fn in metrics.items():
                row.values[name] = float(fn(truth, generated))
        except MetricError as e:
            row.error = str(e)
        report.rows.append(row)
    return report
