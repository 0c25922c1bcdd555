"""Spatio-temporal positional encoding.

The encoding of a coordinate (x, y, t) concatenates a learnable sinusoidal
Fourier feature of the normalized inputs (2x/(H-1)-1, 2y/(W-1)-1, t/u) with a
learnable per-pixel embedding looked up at (x, y). x indexes rows, y columns;
y is normalized by W-1 (H-1 and W-1 coincide for square grids). Lookups
always index the full-resolution embedding grid, so encodings computed inside
a patch window agree with full-grid encodings at the same absolute
coordinates.
"""

from __future__ import annotations

import torch
from torch import nn

from .layers import PIXEL_CHUNK, run_chunked


class PositionalEncoder(nn.Module):
    def __init__(self, c_fea: int, height: int, width: int, time_unit: float,
                 time_enabled: bool = True):
        super().__init__()
        if time_unit <= 0:
            raise ValueError(f"time unit must be positive, got {time_unit}")
        self.c_fea = c_fea
        self.height = height
        self.width = width
        self.time_unit = float(time_unit)
        self.time_enabled = time_enabled
        self.fourier_matrix = nn.Parameter(torch.randn(3, c_fea))
        self.coord_embedding = nn.Parameter(torch.randn(c_fea, height, width))

    @property
    def out_features(self) -> int:
        return 2 * self.c_fea

    def normalized_inputs(self, xs, ys, t_raw: float):
        """(P, 3) tensor of normalized Fourier inputs at absolute coordinates."""
        if xs.min() < 0 or xs.max() >= self.height or ys.min() < 0 or ys.max() >= self.width:
            raise ValueError(
                f"coordinates outside the {self.height}x{self.width} grid"
            )
        dtype = self.fourier_matrix.dtype
        nx = 2.0 * xs.to(dtype) / (self.height - 1) - 1.0
        ny = 2.0 * ys.to(dtype) / (self.width - 1) - 1.0
        t_norm = t_raw / self.time_unit if self.time_enabled else 0.0
        nt = torch.full_like(nx, float(t_norm))
        return torch.stack([nx, ny, nt], dim=1)

    def fourier(self, inputs: torch.Tensor) -> torch.Tensor:
        """sin(v B) for pre-normalized rows v; fixed-shape rows expected."""
        return torch.sin(inputs @ self.fourier_matrix)

    def embedding_rows(self, xs, ys) -> torch.Tensor:
        return self.coord_embedding[:, xs, ys].t()

    def forward(self, xs: torch.Tensor, ys: torch.Tensor, t_raw: float) -> torch.Tensor:
        """Encode absolute integer coordinates, returning (P, 2*c_fea)."""
        inputs = self.normalized_inputs(xs, ys, t_raw)
        fourier = run_chunked(self.fourier, [inputs], PIXEL_CHUNK)
        return torch.cat([fourier, self.embedding_rows(xs, ys)], dim=1)


def grid_coordinates(height, width, device=None, origin=(0, 0)):
    """Row-major absolute (xs, ys) covering an h x w window at ``origin``."""
    h0, w0 = origin
    xs = torch.arange(h0, h0 + height, device=device)
    ys = torch.arange(w0, w0 + width, device=device)
    gx, gy = torch.meshgrid(xs, ys, indexing="ij")
    return gx.reshape(-1), gy.reshape(-1)
