"""Per-pixel synthesizer: style mapping, modulated FC stack, output heads.

Each pixel is synthesized independently from its positional encoding and its
feature vector. The encoding is projected by g_z and added to the feature
vector; the sum runs through n style-modulated FC layers with LeakyReLU, and
after every two layers a modulated output head (no activation, no
demodulation) maps the features to pixel channels. The head outputs are
summed into the final pixel value.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .layers import EqualizedLinear, ModFC, PixelNorm


class MappingNetwork(nn.Module):
    """m fully-connected layers from noise z to style w."""

    def __init__(self, z_dim: int, n_layers: int = 3, lr_mul: float = 0.01):
        super().__init__()
        self.z_dim = z_dim
        self.norm = PixelNorm()
        self.layers = nn.ModuleList(
            EqualizedLinear(z_dim, z_dim, lr_mul=lr_mul) for _ in range(n_layers)
        )

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        if z.shape[-1] != self.z_dim:
            raise ValueError(f"noise dimension {z.shape[-1]} != {self.z_dim}")
        w = self.norm(z)
        for layer in self.layers:
            w = F.leaky_relu(layer(w), 0.2)
        return w


class PixelSynthesizer(nn.Module):
    """Modulated per-pixel MLP with accumulated output heads."""

    def __init__(self, c_fea: int, out_channels: int, style_dim: int,
                 n_layers: int = 14, demodulate: bool = True):
        super().__init__()
        if n_layers < 2 or n_layers % 2 != 0:
            raise ValueError(f"layer count must be a positive even number, got {n_layers}")
        self.c_fea = c_fea
        self.out_channels = out_channels
        self.gz = EqualizedLinear(2 * c_fea, c_fea)
        self.layers = nn.ModuleList(
            ModFC(c_fea, c_fea, style_dim, demodulate=demodulate) for _ in range(n_layers)
        )
        self.heads = nn.ModuleList(
            ModFC(c_fea, out_channels, style_dim, demodulate=False)
            for _ in range(n_layers // 2)
        )

    def style_weights(self, w: torch.Tensor):
        """Modulated weights for one style vector, computed once per image."""
        return (
            [layer.modulated_weight(w) for layer in self.layers],
            [head.modulated_weight(w) for head in self.heads],
        )

    def forward_with(self, encodings, features, weights) -> torch.Tensor:
        layer_weights, head_weights = weights
        h = self.gz(encodings) + features
        out = None
        for i, wt in enumerate(layer_weights):
            h = F.leaky_relu(F.linear(h, wt, self.layers[i].bias), 0.2)
            if i % 2 == 1:
                head = self.heads[i // 2]
                o = F.linear(h, head_weights[i // 2], head.bias)
                out = o if out is None else out + o
        return out

    def forward(self, encodings: torch.Tensor, features: torch.Tensor,
                w: torch.Tensor) -> torch.Tensor:
        """Rows of encodings (P, 2*c_fea) and features (P, c_fea) to pixels (P, C)."""
        return self.forward_with(encodings, features, self.style_weights(w))


class DirectOutputHead(nn.Module):
    """Ablation stand-in for the synthesizer: a single feature-to-pixel linear."""

    def __init__(self, c_fea: int, out_channels: int):
        super().__init__()
        self.head = EqualizedLinear(c_fea, out_channels)

    def style_weights(self, w):
        return None

    def forward_with(self, encodings, features, weights):
        return self.head(features)

    def forward(self, encodings, features, w):
        return self.head(features)
