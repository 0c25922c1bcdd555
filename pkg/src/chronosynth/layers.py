"""Building-block layers shared by the generator and discriminator.

All learnable layers use runtime weight scaling (equalized learning rate),
matching the discriminator/synthesizer family this model follows. Pixel-wise
dense math runs in fixed-size row chunks: every matmul sees the same shape no
matter how many coordinates are queried, so querying a single pixel
reproduces the corresponding entry of a full-grid query bit-exactly.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

# Rows per pixel-pipeline chunk. Part of the numerical contract: outputs are
# reproducible for a fixed chunk size.
PIXEL_CHUNK = 4096


def pad_rows(t: torch.Tensor, rows: int) -> torch.Tensor:
    n = t.shape[0]
    if n == rows:
        return t
    pad = t.new_zeros((rows - n,) + t.shape[1:])
    return torch.cat([t, pad], dim=0)


def run_chunked(fn, tensors, chunk: int = PIXEL_CHUNK) -> torch.Tensor:
    """Apply ``fn`` over row blocks of fixed size, padding the tail block."""
    total = tensors[0].shape[0]
    outs = []
    for start in range(0, total, chunk):
        rows = [t[start : start + chunk] for t in tensors]
        n = rows[0].shape[0]
        out = fn(*[pad_rows(r, chunk) for r in rows])
        outs.append(out[:n])
    return torch.cat(outs, dim=0) if len(outs) > 1 else outs[0]


class EqualizedLinear(nn.Module):
    def __init__(self, in_features, out_features, bias=True, bias_init=0.0, lr_mul=1.0):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_features, in_features) / lr_mul)
        self.bias = nn.Parameter(torch.full((out_features,), float(bias_init))) if bias else None
        self.scale = lr_mul / math.sqrt(in_features)
        self.lr_mul = lr_mul

    def forward(self, x):
        bias = self.bias * self.lr_mul if self.bias is not None else None
        return F.linear(x, self.weight * self.scale, bias)


class EqualizedConv2d(nn.Module):
    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0, bias=True):
        super().__init__()
        self.weight = nn.Parameter(
            torch.randn(out_channels, in_channels, kernel_size, kernel_size)
        )
        self.bias = nn.Parameter(torch.zeros(out_channels)) if bias else None
        self.scale = 1.0 / math.sqrt(in_channels * kernel_size * kernel_size)
        self.stride = stride
        self.padding = padding

    def forward(self, x):
        return F.conv2d(
            x, self.weight * self.scale, self.bias, stride=self.stride, padding=self.padding
        )


class EqualizedConvTranspose2d(nn.Module):
    """Stride-2 transposed convolution doubling the spatial size exactly."""

    def __init__(self, in_channels, out_channels, kernel_size=3, bias=True):
        super().__init__()
        self.weight = nn.Parameter(
            torch.randn(in_channels, out_channels, kernel_size, kernel_size)
        )
        self.bias = nn.Parameter(torch.zeros(out_channels)) if bias else None
        self.scale = 1.0 / math.sqrt(in_channels * kernel_size * kernel_size)

    def forward(self, x):
        return F.conv_transpose2d(
            x, self.weight * self.scale, self.bias, stride=2, padding=1, output_padding=1
        )


class ModFC(nn.Module):
    """Style-modulated fully-connected layer with weight demodulation.

    The per-layer affine maps the style vector w to per-input scales s. The
    effective weight is w'_ij = s_j * W_ij; demodulation renormalizes each
    output row: w''_ij = w'_ij / sqrt(sum_j w'_ij^2 + eps).
    """

    def __init__(self, in_features, out_features, style_dim, demodulate=True, eps=1e-8):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_features, in_features))
        self.bias = nn.Parameter(torch.zeros(out_features))
        self.affine = EqualizedLinear(style_dim, in_features, bias_init=1.0)
        self.scale = 1.0 / math.sqrt(in_features)
        self.demodulate = demodulate
        self.eps = eps

    def modulated_weight(self, w: torch.Tensor) -> torch.Tensor:
        """Effective (out, in) weight for one style vector w of shape (style_dim,)."""
        s = self.affine(w.reshape(1, -1))
        wt = self.weight * self.scale * s
        if self.demodulate:
            wt = wt * torch.rsqrt(wt.pow(2).sum(dim=1, keepdim=True) + self.eps)
        return wt

    def forward(self, x, w):
        return F.linear(x, self.modulated_weight(w), self.bias)


class PixelNorm(nn.Module):
    def forward(self, x):
        return x * torch.rsqrt(x.pow(2).mean(dim=-1, keepdim=True) + 1e-8)
