"""Alternating GAN training with L1 reconstruction and lazy R1 regularization.

All randomness is drawn from generators derived from (seed, step, stream
name), so a run resumed from a checkpoint consumes exactly the same random
stream as an uninterrupted one, and runs that differ only in unused streams
(e.g. full-size "patches") are numerically identical.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .data import TripletSample, assemble_input, normalize_time, resample_nearest
from .discriminator import Discriminator, coordinate_grid
from .generator import Generator, GeneratorConfig
from .losses import discriminator_loss, generator_loss, r1_penalty
from .raster import unit_to_signed


@dataclass
class TrainConfig:
    lambda_l1: float = 100.0
    learning_rate: float = 2e-3
    beta0: float = 0.0
    beta1: float = 0.99
    adam_eps: float = 1e-8
    r1_weight: float = 10.0
    r1_every: int = 16
    patch_size: int | None = None
    batch_size: int = 4
    total_steps: int = 1000
    seed: int = 0
    log_every: int = 1
    checkpoint_every: int = 1000

    def validate(self):
        problems = []
        if self.lambda_l1 < 0:
            problems.append(f"lambda_l1: {self.lambda_l1} must be >= 0")
        if self.learning_rate <= 0:
            problems.append(f"learning_rate: {self.learning_rate} must be positive")
        if self.r1_every < 1:
            problems.append(f"r1_every: {self.r1_every} must be >= 1")
        if self.r1_weight < 0:
            problems.append(f"r1_weight: {self.r1_weight} must be >= 0")
        if self.batch_size < 1:
            problems.append(f"batch_size: {self.batch_size} must be >= 1")
        if self.total_steps < 0:
            problems.append(f"total_steps: {self.total_steps} must be >= 0")
        if self.patch_size is not None and self.patch_size % 4 != 0:
            problems.append(f"patch_size: {self.patch_size} must be divisible by 4")
        if problems:
            raise ValueError("invalid train config:\n  " + "\n  ".join(problems))
        return self


@dataclass
class DiscriminatorSettings:
    base_channels: int = 64
    max_channels: int = 512
    include_time: bool = True


def step_rng(seed: int, step: int, stream: str) -> torch.Generator:
    """Generator for one (step, stream); stable across runs and platforms."""
    digest = hashlib.blake2b(
        f"{seed}:{step}:{stream}".encode(), digest_size=8
    ).digest()
    g = torch.Generator()
    g.manual_seed(int.from_bytes(digest, "little") & 0x7FFF_FFFF_FFFF_FFFF)
    return g


@dataclass
class TrainState:
    generator: Generator
    discriminator: Discriminator
    g_opt: torch.optim.Adam
    d_opt: torch.optim.Adam
    train_config: TrainConfig
    step: int = 0

    @property
    def seed(self) -> int:
        return self.train_config.seed


def create_train_state(
    gen_config: GeneratorConfig,
    train_config: TrainConfig,
    disc: DiscriminatorSettings | None = None,
) -> TrainState:
    gen_config.validate()
    train_config.validate()
    disc = disc or DiscriminatorSettings()
    torch.manual_seed(train_config.seed)
    generator = Generator(gen_config)
    d_size = train_config.patch_size or gen_config.image_size
    discriminator = Discriminator(
        d_size,
        channels=gen_config.channels,
        base_channels=disc.base_channels,
        max_channels=disc.max_channels,
        include_time=disc.include_time,
    )
    betas = (train_config.beta0, train_config.beta1)
    g_opt = torch.optim.Adam(
        generator.parameters(), lr=train_config.learning_rate, betas=betas,
        eps=train_config.adam_eps,
    )
    d_opt = torch.optim.Adam(
        discriminator.parameters(), lr=train_config.learning_rate, betas=betas,
        eps=train_config.adam_eps,
    )
    return TrainState(generator, discriminator, g_opt, d_opt, train_config)


def sample_tensors(sample: TripletSample, gen_config: GeneratorConfig) -> dict:
    """Signed model-range tensors for one triplet, at full resolution."""
    size = gen_config.image_size
    lr_up = resample_nearest(sample.lr_t, size, size)
    extras = [
        resample_nearest(e, size, size)
        for e in sample.extra_lr[: gen_config.extra_lr_frames]
    ]
    i_cat = assemble_input(lr_up, sample.hr_ref, gen_config.input_mode, extras)
    ref = sample.hr_ref.values
    if gen_config.input_mode == "no_hr_ref":
        ref = np.zeros_like(ref)  # same zero-filled slots the generator sees
    out = {
        "i_cat": torch.from_numpy(unit_to_signed(i_cat.values)),
        "lr": torch.from_numpy(unit_to_signed(lr_up.values)),
        "ref": torch.from_numpy(unit_to_signed(ref)),
        "t": float(sample.t),
    }
    if sample.hr_gt is not None:
        out["real"] = torch.from_numpy(unit_to_signed(sample.hr_gt.values))
    return out


def prepare_batch(
    samples, gen_config: GeneratorConfig, train_config: TrainConfig, step: int
) -> dict:
    """Stack per-sample tensors, applying one shared-origin random crop each."""
    size = gen_config.image_size
    patch = train_config.patch_size
    rng_patch = step_rng(train_config.seed, step, "patch")
    parts = {"i_cat": [], "real": [], "lr": [], "ref": [], "grid": []}
    ts, origins = [], []
    for sample in samples:
        tensors = sample_tensors(sample, gen_config)
        if "real" not in tensors:
            raise ValueError(
                f"{sample.location_id}: training needs ground-truth HR frames"
            )
        if patch is not None:
            h0 = int(torch.randint(0, size - patch + 1, (1,), generator=rng_patch))
            w0 = int(torch.randint(0, size - patch + 1, (1,), generator=rng_patch))
        else:
            h0 = w0 = 0
        window = patch or size
        for key in ("i_cat", "real", "lr", "ref"):
            parts[key].append(tensors[key][:, h0 : h0 + window, w0 : w0 + window])
        t_norm = normalize_time(tensors["t"], gen_config.time_unit)
        parts["grid"].append(
            coordinate_grid(size, t_norm, size=window, origin=(h0, w0))
        )
        ts.append(tensors["t"])
        origins.append((h0, w0))
    return {
        **{k: torch.stack(v) for k, v in parts.items()},
        "t": ts,
        "origins": origins,
    }


def train_step(state: TrainState, samples) -> dict:
    """One discriminator update (with scheduled R1) then one generator update.

    The returned scalars carry the 0-based index of the executed step; the
    R1 term is nonzero exactly on indices divisible by r1_every.
    """
    cfg = state.train_config
    gen_cfg = state.generator.config
    step_index = state.step
    batch = prepare_batch(samples, gen_cfg, cfg, state.step)
    z = torch.randn(
        len(samples), gen_cfg.z_dim, generator=step_rng(cfg.seed, state.step, "z")
    )

    fake = state.generator(batch["i_cat"], batch["t"], z, batch["origins"])

    # score real and fake candidates in one discriminator pass
    n = len(samples)
    double = lambda t: torch.cat([t, t])
    scores = state.discriminator(
        torch.cat([batch["real"], fake.detach()]),
        double(batch["grid"]), double(batch["lr"]), double(batch["ref"]),
    )
    d_real, d_fake = scores[:n], scores[n:]
    d_loss = discriminator_loss(d_real, d_fake)
    r1_value = 0.0
    d_total = d_loss
    if state.step % cfg.r1_every == 0 and cfg.r1_weight > 0:
        penalty = r1_penalty(
            state.discriminator, batch["real"], batch["grid"], batch["lr"],
            batch["ref"], cfg.r1_weight,
        )
        # lazy regularization: applied every r1_every steps, scaled to keep
        # the average strength independent of the interval
        d_total = d_loss + penalty * cfg.r1_every
        r1_value = float(penalty.detach())
    state.d_opt.zero_grad()
    d_total.backward()
    state.d_opt.step()

    d_fake_for_g = state.discriminator(fake, batch["grid"], batch["lr"], batch["ref"])
    g_total, g_gan, l1 = generator_loss(d_fake_for_g, fake, batch["real"], cfg.lambda_l1)
    state.g_opt.zero_grad()
    g_total.backward()
    state.g_opt.step()

    state.step += 1
    return {
        "step": step_index,
        "g_loss": float(g_total.detach()),
        "d_loss": float(d_loss.detach()),
        "l1": float(l1.detach()),
        "r1": r1_value,
    }


def checkpoint_config(gen_config: GeneratorConfig, train_config: TrainConfig) -> dict:
    return {"generator": gen_config.to_dict(), "train": asdict(train_config)}


def save_train_checkpoint(state: TrainState, path) -> None:
    save_checkpoint(
        path,
        state.generator,
        state.discriminator,
        state.g_opt,
        state.d_opt,
        step=state.step,
        config=checkpoint_config(state.generator.config, state.train_config),
    )


def resume_train_state(state: TrainState, path) -> TrainState:
    index = load_checkpoint(
        path, state.generator, state.discriminator, state.g_opt, state.d_opt
    )
    stored = index.get("config", {}).get("generator")
    if stored is not None and stored != state.generator.config.to_dict():
        diff = {
            k: (stored.get(k), state.generator.config.to_dict().get(k))
            for k in set(stored) | set(state.generator.config.to_dict())
            if stored.get(k) != state.generator.config.to_dict().get(k)
        }
        raise CheckpointError(f"config mismatch between checkpoint and run: {diff}")
    state.step = int(index["step"])
    return state


def train(
    state: TrainState,
    dataset: list,
    steps: int | None = None,
    out_dir=None,
    log_callback=None,
) -> list:
    """Run the loop for ``steps`` (default: up to total_steps); returns scalars.

    Writes line-delimited JSON scalars and periodic checkpoints under
    ``out_dir`` when given.
    """
    if not dataset:
        raise ValueError("empty training dataset")
    cfg = state.train_config
    remaining = steps if steps is not None else cfg.total_steps - state.step
    out_dir = Path(out_dir) if out_dir is not None else None
    log_file = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_file = open(out_dir / "logs.jsonl", "a")
    t0 = time.time()
    history = []
    try:
        for _ in range(remaining):
            idx = torch.randint(
                0, len(dataset), (cfg.batch_size,),
                generator=step_rng(cfg.seed, state.step, "batch"),
            )
            scalars = train_step(state, [dataset[int(i)] for i in idx])
            scalars["wallclock"] = time.time() - t0
            history.append(scalars)
            if log_file is not None and state.step % cfg.log_every == 0:
                log_file.write(json.dumps(scalars) + "\n")
                log_file.flush()
            if out_dir is not None and cfg.checkpoint_every > 0 and (
                state.step % cfg.checkpoint_every == 0
            ):
                save_train_checkpoint(state, out_dir / "checkpoint")
            if log_callback is not None:
                log_callback(scalars)
        if out_dir is not None:
            save_train_checkpoint(state, out_dir / "checkpoint")
    finally:
        if log_file is not None:
            log_file.close()
    return history
