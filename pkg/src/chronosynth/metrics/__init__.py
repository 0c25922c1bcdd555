from .quality import MetricError, fsim, gradient_magnitude, luminance, phase_congruency, psnr, ssim
from .report import (
    ALL,
    DEFAULT_METRICS,
    FUTURE,
    PAST,
    MetricReport,
    MetricRow,
    available_metrics,
    directory_image_source,
    evaluate_dataset,
    generated_image_name,
    ground_truth_source,
    register_metric,
    resolve_metrics,
)

__all__ = [
    "MetricError",
    "psnr",
    "ssim",
    "fsim",
    "luminance",
    "phase_congruency",
    "gradient_magnitude",
    "MetricReport",
    "MetricRow",
    "evaluate_dataset",
    "register_metric",
    "available_metrics",
    "resolve_metrics",
    "directory_image_source",
    "ground_truth_source",
    "generated_image_name",
    "DEFAULT_METRICS",
    "PAST",
    "FUTURE",
    "ALL",
]
