"""Full-grid generation and sliding-window patch generation.

The sliding window runs three passes with one shared noise vector:

  1. every non-overlapping S x S base tile is generated independently,
  2. for each pair of column-adjacent tiles an S x S window centered on
     their seam is regenerated and its central band of width 2*S_q
     (S_q = S/4) is blended into the canvas as (prev + lambda_s*new)/(1+lambda_s),
  3. the same for row-adjacent tiles.

Vertical seams are fully blended before horizontal ones; corner regions
therefore receive both blends in that order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import torch

from .data import DataError, TripletSample
from .encoding import grid_coordinates
from .raster import signed_to_unit


@dataclass
class SlidingWindowPlan:
    size: int                 # S
    quarter: int              # S_q = S / 4
    lambda_s: float
    height: int
    width: int
    base_tiles: list = field(default_factory=list)      # (row0, col0)
    vertical_seams: list = field(default_factory=list)  # (row0, col0) of S x S window
    horizontal_seams: list = field(default_factory=list)

    @classmethod
    def build(cls, height: int, width: int, size: int, lambda_s: float = 1.0):
        if size % 4 != 0:
            raise DataError(f"window size {size} not divisible by 4")
        if height % size or width % size:
            raise DataError(f"window size {size} does not divide {height}x{width}")
        if lambda_s < 0:
            raise DataError(f"blend weight must be nonnegative, got {lambda_s}")
        quarter = size // 4
        plan = cls(size, quarter, lambda_s, height, width)
        rows, cols = height // size, width // size
        for i in range(rows):
            for j in range(cols):
                plan.base_tiles.append((i * size, j * size))
        for i in range(rows):
            for j in range(cols - 1):
                # window spans columns [(j+1)S - 2S_q, (j+1)S + 2S_q), i.e. S wide
                plan.vertical_seams.append((i * size, (j + 1) * size - 2 * quarter))
        for i in range(rows - 1):
            for j in range(cols):
                plan.horizontal_seams.append(((i + 1) * size - 2 * quarter, j * size))
        return plan

    def blend_region(self, window_origin, vertical: bool):
        """Canvas slice of the central 2*S_q band of a seam window."""
        r0, c0 = window_origin
        if vertical:
            return (slice(r0, r0 + self.size),
                    slice(c0 + self.quarter, c0 + 3 * self.quarter))
        return (slice(r0 + self.quarter, r0 + 3 * self.quarter),
                slice(c0, c0 + self.size))


def sliding_window_generate(patch_fn, channels: int, plan: SlidingWindowPlan) -> torch.Tensor:
    """Assemble a (C, H, W) image from ``patch_fn(row0, col0, h, w)`` patches.

    ``patch_fn`` must generate the window as an independent patch using the
    one noise vector of this call; the plan's passes and blend arithmetic do
    the rest.
    """
    canvas = torch.zeros(channels, plan.height, plan.width)
    s = plan.size
    for r0, c0 in plan.base_tiles:
        canvas[:, r0 : r0 + s, c0 : c0 + s] = patch_fn(r0, c0, s, s)
    lam = plan.lambda_s
    for origin in plan.vertical_seams:
        window = patch_fn(origin[0], origin[1], s, s)
        rs, cs = plan.blend_region(origin, vertical=True)
        inner = window[:, :, plan.quarter : 3 * plan.quarter]
        canvas[:, rs, cs] = (canvas[:, rs, cs] + lam * inner) / (1.0 + lam)
    for origin in plan.horizontal_seams:
        window = patch_fn(origin[0], origin[1], s, s)
        rs, cs = plan.blend_region(origin, vertical=False)
        inner = window[:, plan.quarter : 3 * plan.quarter, :]
        canvas[:, rs, cs] = (canvas[:, rs, cs] + lam * inner) / (1.0 + lam)
    return canvas


def model_patch_fn(generator, i_cat: torch.Tensor, t_raw: float, z: torch.Tensor):
    """Patch generator backed by the model: the feature mapper sees only the
    cropped window; positional state is read at absolute coordinates; the
    style vector is computed once and shared by every patch."""
    w = generator.map_style(z.reshape(1, -1))

    def patch(row0, col0, height, width):
        window = i_cat[:, row0 : row0 + height, col0 : col0 + width]
        i_fea = generator.feature_map(window)
        xs, ys = grid_coordinates(height, width, device=i_cat.device, origin=(row0, col0))
        pixels = generator.synthesize_at(
            i_fea, xs, ys, t_raw, w=w, feature_origin=(row0, col0)
        )
        return pixels.t().reshape(generator.config.channels, height, width).clamp(-1.0, 1.0)

    return patch


def generate_full(generator, i_cat: torch.Tensor, t_raw: float, z: torch.Tensor) -> torch.Tensor:
    """Single-pass full-grid generation, clamped to the signed range."""
    return generator.generate(i_cat, t_raw, z).clamp(-1.0, 1.0)


def generate_sliding(
    generator,
    i_cat: torch.Tensor,
    t_raw: float,
    z: torch.Tensor,
    size: int,
    lambda_s: float = 1.0,
) -> torch.Tensor:
    _, height, width = i_cat.shape
    plan = SlidingWindowPlan.build(height, width, size, lambda_s)
    patch = model_patch_fn(generator, i_cat, t_raw, z)
    return sliding_window_generate(patch, generator.config.channels, plan)


def pair_noise(z_dim: int, seed: int, sample: TripletSample) -> torch.Tensor:
    """Noise vector derived from (seed, location, t, t'); iteration-order free."""
    key = f"{seed}:{sample.location_id}:{sample.t}:{sample.t_ref}"
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    g = torch.Generator()
    g.manual_seed(int.from_bytes(digest, "little") & 0x7FFF_FFFF_FFFF_FFFF)
    return torch.randn(z_dim, generator=g)


def generate_image(
    generator,
    sample: TripletSample,
    z: torch.Tensor,
    sliding_size: int | None = None,
    lambda_s: float = 1.0,
) -> np.ndarray:
    """Unit-range (C, H, W) array for one triplet."""
    from .training import sample_tensors  # shared input assembly

    tensors = sample_tensors(sample, generator.config)
    if sliding_size is not None:
        signed = generate_sliding(
            generator, tensors["i_cat"], tensors["t"], z, sliding_size, lambda_s
        )
    else:
        signed = generate_full(generator, tensors["i_cat"], tensors["t"], z)
    return signed_to_unit(signed.detach().numpy())


def generator_image_source(
    generator,
    z_policy: str = "per_pair",
    seed: int = 0,
    sliding_size: int | None = None,
    lambda_s: float = 1.0,
):
    """Image source for dataset evaluation backed by a trained generator."""
    if z_policy not in ("per_pair", "fixed"):
        raise ValueError(f"unknown z policy {z_policy!r}")
    fixed_z = None
    if z_policy == "fixed":
        g = torch.Generator().manual_seed(seed)
        fixed_z = torch.randn(generator.config.z_dim, generator=g)

    def source(sample: TripletSample) -> np.ndarray:
        z = fixed_z if fixed_z is not None else pair_noise(
            generator.config.z_dim, seed, sample
        )
        return generate_image(generator, sample, z, sliding_size, lambda_s)

    return source
