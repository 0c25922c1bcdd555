"""Conditional discriminator over (candidate, coordinate grid, LR, HR ref).

The four inputs are concatenated along channels in that order (3C + 3
channels for C-channel imagery), run through log2(H) - 2 residual
downsampling stages to a 4 x 4 map, and reduced to one unbounded score.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from .layers import EqualizedConv2d, EqualizedLinear


def coordinate_grid(
    full_size: int,
    t_norm: float,
    size: int | None = None,
    origin: tuple = (0, 0),
    include_time: bool = True,
    device=None,
    dtype=None,
) -> torch.Tensor:
    """(3, h, w) grid of (2x/(H-1)-1, 2y/(W-1)-1, t/u) at absolute coordinates."""
    size = size or full_size
    h0, w0 = origin
    xs = torch.arange(h0, h0 + size, device=device, dtype=dtype or torch.float32)
    ys = torch.arange(w0, w0 + size, device=device, dtype=dtype or torch.float32)
    nx = 2.0 * xs / (full_size - 1) - 1.0
    ny = 2.0 * ys / (full_size - 1) - 1.0
    gx = nx[:, None].expand(size, size)
    gy = ny[None, :].expand(size, size)
    gt = torch.full_like(gx, float(t_norm) if include_time else 0.0)
    return torch.stack([gx, gy, gt])


class DiscriminatorBlock(nn.Module):
    """Residual block halving the spatial size with average pooling."""

    def __init__(self, in_channels, out_channels):
        super().__init__()
        self.conv1 = EqualizedConv2d(in_channels, in_channels, 3, padding=1)
        self.conv2 = EqualizedConv2d(in_channels, out_channels, 3, padding=1)
        self.skip = EqualizedConv2d(in_channels, out_channels, 1, bias=False)

    def forward(self, x):
        y = F.leaky_relu(self.conv1(x), 0.2, inplace=True)
        y = F.avg_pool2d(y, 2)
        y = F.leaky_relu(self.conv2(y), 0.2, inplace=True)
        s = F.avg_pool2d(self.skip(x), 2)
        return (y + s) / math.sqrt(2.0)


class Discriminator(nn.Module):
    def __init__(
        self,
        image_size: int,
        channels: int = 3,
        base_channels: int = 64,
        max_channels: int = 512,
        include_time: bool = True,
    ):
        super().__init__()
        stages = int(math.log2(image_size)) - 2
        if 2 ** (stages + 2) != image_size or stages < 1:
            raise ValueError(f"image size {image_size} must be a power of two >= 8")
        self.image_size = image_size
        self.channels = channels
        self.include_time = include_time
        self.in_channels = 3 * channels + 3

        self.from_rgb = EqualizedConv2d(self.in_channels, base_channels, 1)
        widths = [min(base_channels * 2**i, max_channels) for i in range(stages + 1)]
        self.blocks = nn.ModuleList(
            DiscriminatorBlock(widths[i], widths[i + 1]) for i in range(stages)
        )
        final = widths[-1]
        self.final_conv = EqualizedConv2d(final, final, 3, padding=1)
        self.fc = EqualizedLinear(final * 4 * 4, final)
        self.out = EqualizedLinear(final, 1)

    @property
    def n_stages(self) -> int:
        return len(self.blocks)

    def forward(
        self,
        candidate: torch.Tensor,
        coord_grid: torch.Tensor,
        lr: torch.Tensor,
        hr_ref: torch.Tensor,
    ) -> torch.Tensor:
        """Scalar score per sample for (B, C, H, W) inputs and a (B, 3, H, W) grid."""
        for name, tensor, want_c in (
            ("candidate", candidate, self.channels),
            ("coord_grid", coord_grid, 3),
            ("lr", lr, self.channels),
            ("hr_ref", hr_ref, self.channels),
        ):
            if tensor.shape[1] != want_c or tensor.shape[2:] != candidate.shape[2:]:
                raise ValueError(
                    f"{name}: expected {want_c} x {candidate.shape[2]} x {candidate.shape[3]}, "
                    f"got {tuple(tensor.shape[1:])}"
                )
        if candidate.shape[2] != self.image_size:
            raise ValueError(
                f"spatial size {candidate.shape[2]} != discriminator size {self.image_size}"
            )
        if not self.include_time:
            coord_grid = torch.cat(
                [coord_grid[:, :2], torch.zeros_like(coord_grid[:, 2:])], dim=1
            )
        x = torch.cat([candidate, coord_grid, lr, hr_ref], dim=1)
        x = F.leaky_relu(self.from_rgb(x), 0.2, inplace=True)
        for block in self.blocks:
            x = block(x)
        x = F.leaky_relu(self.final_conv(x), 0.2, inplace=True)
        x = F.leaky_relu(self.fc(x.flatten(1)), 0.2, inplace=True)
        return self.out(x).squeeze(1)
