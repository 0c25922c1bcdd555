"""Image feature mapper: neighborhood encoder, global self-attention, decoder.

Variants:
  ead       two stride-2 3x3 convs, attention at H/4, two stride-2 transposed convs
  ea        per-pixel linear lift, three stride-1 3x3 convs, attention,
            identity decoder, skip connection from the lift to the attention output
  ed_only   ead without the attention stage
  a_only    per-pixel linear lift followed by attention only
  e_only    a single stride-1 3x3 conv
  linear_f  a single per-pixel linear layer

Every conv is followed by LeakyReLU(0.2); the per-pixel linear lifts are not.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .layers import EqualizedConv2d, EqualizedConvTranspose2d

VARIANTS = ("ead", "ea", "ed_only", "a_only", "e_only", "linear_f")


class SelfAttention2d(nn.Module):
    """Global attention with residual: gamma * v softmax(k^T q) + input.

    q and k project to channels/8, v to the full channel count. The softmax
    normalizes each output position's weights to sum to 1. gamma starts at 0
    so the block is the identity at initialization.
    """

    def __init__(self, channels: int):
        super().__init__()
        if channels % 8 != 0:
            raise ValueError(f"attention channels {channels} not divisible by 8")
        self.query = EqualizedConv2d(channels, channels // 8, 1)
        self.key = EqualizedConv2d(channels, channels // 8, 1)
        self.value = EqualizedConv2d(channels, channels, 1)
        self.gamma = nn.Parameter(torch.zeros(()))

    def forward(self, x):
        b, c, h, w = x.shape
        q = self.query(x).flatten(2)  # (B, C/8, N)
        k = self.key(x).flatten(2)
        v = self.value(x).flatten(2)  # (B, C, N)
        attn = torch.softmax(k.transpose(1, 2) @ q, dim=1)  # (B, N, N), columns sum to 1
        out = (v @ attn).view(b, c, h, w)
        return self.gamma * out + x


class FeatureMapper(nn.Module):
    """Maps the channel-stacked input image to a per-pixel feature grid."""

    def __init__(self, variant: str, in_channels: int, c_fea: int):
        super().__init__()
        if variant not in VARIANTS:
            raise ValueError(f"unknown feature mapper variant {variant!r}")
        self.variant = variant
        self.in_channels = in_channels
        self.c_fea = c_fea

        if variant in ("ead", "ed_only"):
            self.enc1 = EqualizedConv2d(in_channels, c_fea, 3, stride=2, padding=1)
            self.enc2 = EqualizedConv2d(c_fea, c_fea, 3, stride=2, padding=1)
            self.dec1 = EqualizedConvTranspose2d(c_fea, c_fea)
            self.dec2 = EqualizedConvTranspose2d(c_fea, c_fea)
            if variant == "ead":
                self.attention = SelfAttention2d(c_fea)
        elif variant in ("ea", "a_only"):
            self.lift = EqualizedConv2d(in_channels, c_fea, 1)
            if variant == "ea":
                self.convs = nn.ModuleList(
                    EqualizedConv2d(c_fea, c_fea, 3, stride=1, padding=1) for _ in range(3)
                )
            self.attention = SelfAttention2d(c_fea)
        elif variant == "e_only":
            self.conv = EqualizedConv2d(in_channels, c_fea, 3, stride=1, padding=1)
        elif variant == "linear_f":
            self.lift = EqualizedConv2d(in_channels, c_fea, 1)

    @property
    def downsample(self) -> int:
        """Spatial reduction of the inner (attention) grid relative to the input."""
        return 4 if self.variant in ("ead", "ed_only") else 1

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[1]}")
        if self.variant in ("ead", "ed_only"):
            if x.shape[2] % 4 or x.shape[3] % 4:
                raise ValueError(
                    f"{self.variant} needs spatial dims divisible by 4, got {tuple(x.shape[2:])}"
                )
            h = F.leaky_relu(self.enc1(x), 0.2, inplace=True)
            h = F.leaky_relu(self.enc2(h), 0.2, inplace=True)
            if self.variant == "ead":
                h = self.attention(h)
            h = F.leaky_relu(self.dec1(h), 0.2, inplace=True)
            h = F.leaky_relu(self.dec2(h), 0.2, inplace=True)
            return h
        if self.variant == "ea":
            lifted = self.lift(x)
            h = lifted
            for conv in self.convs:
                h = F.leaky_relu(conv(h), 0.2, inplace=True)
            return self.attention(h) + lifted
        if self.variant == "a_only":
            # the attention block's own residual provides the identity path
            return self.attention(self.lift(x))
        if self.variant == "e_only":
            return F.leaky_relu(self.conv(x), 0.2, inplace=True)
        return self.lift(x)  # linear_f
