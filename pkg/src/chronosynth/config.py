"""Run configuration: one JSON document binding model, data, training, and
evaluation settings, plus the named ablation presets.

Precedence when assembling a run: built-in defaults, then the chosen preset,
then the config file, then the CHRONOSYNTH_SEED environment override. The
fully materialized document is written next to every run for provenance.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .generator import GeneratorConfig
from .training import DiscriminatorSettings, TrainConfig

SEED_ENV_VAR = "CHRONOSYNTH_SEED"


class ConfigError(Exception):
    pass


@dataclass
class ModelSection:
    variant: str = "ead"
    channels: int = 3
    c_fea: int = 256
    mapping_layers: int = 3
    synth_layers: int = 14
    z_dim: int = 512
    use_synthesizer: bool = True
    time_enabled: bool = True
    input_mode: str = "standard"
    extra_lr_frames: int = 0
    demodulate: bool = True
    d_base_channels: int = 64
    d_max_channels: int = 512
    d_include_time: bool = True


@dataclass
class DataSection:
    manifest: str | None = None
    u: float | None = None          # default: the manifest's time unit
    image_size: int | None = None   # default: the manifest's size
    patch_size: int | None = None


@dataclass
class EvalSection:
    direction: str = "all"
    split: str = "test"
    metrics: list = field(default_factory=lambda: ["psnr", "ssim", "fsim"])
    sliding_size: int | None = None
    lambda_s: float = 1.0
    z_policy: str = "per_pair"


@dataclass
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    data: DataSection = field(default_factory=DataSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalSection = field(default_factory=EvalSection)

    def to_dict(self) -> dict:
        return {
            "model": asdict(self.model),
            "data": asdict(self.data),
            "train": asdict(self.train),
            "eval": asdict(self.eval),
        }

    def validate(self) -> "RunConfig":
        problems = []
        try:
            self.generator_config(self.data.image_size or 64, self.data.u or 1.0)
        except ValueError as e:
            problems.append(str(e))
        try:
            self.train.validate()
        except ValueError as e:
            problems.append(str(e))
        if self.eval.direction not in ("past", "future", "all"):
            problems.append(f"eval.direction: unknown {self.eval.direction!r}")
        if self.eval.z_policy not in ("per_pair", "fixed"):
            problems.append(f"eval.z_policy: unknown {self.eval.z_policy!r}")
        if self.eval.lambda_s < 0:
            problems.append(f"eval.lambda_s: {self.eval.lambda_s} must be >= 0")
        if problems:
            raise ConfigError("invalid run config:\n" + "\n".join(problems))
        return self

    def generator_config(self, image_size: int, time_unit: float) -> GeneratorConfig:
        m = self.model
        return GeneratorConfig(
            variant=m.variant,
            image_size=image_size,
            channels=m.channels,
            c_fea=m.c_fea,
            mapping_layers=m.mapping_layers,
            synth_layers=m.synth_layers,
            z_dim=m.z_dim,
            time_unit=time_unit,
            time_enabled=m.time_enabled,
            use_synthesizer=m.use_synthesizer,
            input_mode=m.input_mode,
            extra_lr_frames=m.extra_lr_frames,
            demodulate=m.demodulate,
        ).validate()

    def discriminator_settings(self) -> DiscriminatorSettings:
        return DiscriminatorSettings(
            base_channels=self.model.d_base_channels,
            max_channels=self.model.d_max_channels,
            include_time=self.model.d_include_time,
        )


# Named ablation presets; each entry overlays section fields onto defaults.
PRESETS = {
    "ead": {"model": {"variant": "ead"}},
    "ea64": {"model": {"variant": "ea"}, "data": {"patch_size": 64},
             "eval": {"sliding_size": 64}},
    "ea32": {"model": {"variant": "ea"}, "data": {"patch_size": 32},
             "eval": {"sliding_size": 32}},
    "no-gp": {"model": {"variant": "ead", "use_synthesizer": False}},
    "linear-f": {"model": {"variant": "linear_f"}},
    "e-only": {"model": {"variant": "e_only"}},
    "ed-only": {"model": {"variant": "ed_only"}},
    "a-only": {"model": {"variant": "a_only"}},
    "no-time": {"model": {"variant": "ea", "time_enabled": False},
                "data": {"patch_size": 64}, "eval": {"sliding_size": 64}},
    "multi-lr": {"model": {"variant": "ead", "input_mode": "multi_lr",
                           "extra_lr_frames": 2}},
    "no-hr-ref": {"model": {"variant": "ead", "input_mode": "no_hr_ref"}},
}


def _apply_section(section, overrides: dict, path: str, problems: list):
    known = {f.name for f in fields(section)}
    for key, value in overrides.items():
        if key not in known:
            problems.append(f"{path}.{key}: unknown field")
            continue
        setattr(section, key, value)


def build_run_config(
    file_path=None, preset: str | None = None, overrides: dict | None = None
) -> RunConfig:
    """Assemble defaults + preset + config file + explicit overrides + env seed."""
    cfg = RunConfig()
    problems = []

    layers = []
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r}; available: {sorted(PRESETS)}"
            )
        layers.append(PRESETS[preset])
    if file_path is not None:
        path = Path(file_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path) as f:
                layers.append(json.load(f))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from e
    if overrides:
        layers.append(overrides)

    sections = {"model": cfg.model, "data": cfg.data, "train": cfg.train, "eval": cfg.eval}
    for layer in layers:
        for name, body in layer.items():
            if name not in sections:
                problems.append(f"{name}: unknown config section")
                continue
            if not isinstance(body, dict):
                problems.append(f"{name}: expected an object of fields")
                continue
            _apply_section(sections[name], body, name, problems)

    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg.train.seed = int(env_seed)
        except ValueError:
            problems.append(f"{SEED_ENV_VAR}: not an integer: {env_seed!r}")

    if problems:
        raise ConfigError("invalid run config:\n" + "\n".join(problems))
    return cfg.validate()


def write_materialized(cfg: RunConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
