"""Generator: feature mapper + positional encoder + pixel synthesizer.

The generated pixel at (x, y, t) is a function of the positional encoding
E(x, y, t), the feature vector of the stacked input image at (x, y), and one
noise vector z shared by all pixels of the image. Because pixels are
synthesized independently, any subset of coordinates can be generated in
isolation; the fixed-chunk pixel pipeline makes such queries agree with
full-grid generation bit-exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from .data import INPUT_MODES
from .encoding import PositionalEncoder, grid_coordinates
from .feature_mapper import VARIANTS, FeatureMapper
from .layers import run_chunked
from .synthesizer import DirectOutputHead, MappingNetwork, PixelSynthesizer


@dataclass
class GeneratorConfig:
    variant: str = "ead"
    image_size: int = 256
    channels: int = 3
    c_fea: int = 256
    mapping_layers: int = 3
    synth_layers: int = 14
    z_dim: int = 512
    time_unit: float = 2.0
    time_enabled: bool = True
    use_synthesizer: bool = True
    input_mode: str = "standard"
    extra_lr_frames: int = 0
    demodulate: bool = True

    @property
    def input_channels(self) -> int:
        extra = self.channels * self.extra_lr_frames if self.input_mode == "multi_lr" else 0
        return 2 * self.channels + extra

    def validate(self):
        problems = []
        if self.variant not in VARIANTS:
            problems.append(f"variant: unknown {self.variant!r}, expected one of {VARIANTS}")
        if self.input_mode not in INPUT_MODES:
            problems.append(f"input_mode: unknown {self.input_mode!r}")
        if self.input_mode == "multi_lr" and self.extra_lr_frames < 1:
            problems.append("extra_lr_frames: multi_lr mode needs at least 1 extra frame")
        if self.image_size < 4:
            problems.append(f"image_size: {self.image_size} too small")
        if self.variant in ("ead", "ed_only") and self.image_size % 4 != 0:
            problems.append(f"image_size: {self.image_size} not divisible by 4 for {self.variant}")
        if self.variant in ("ead", "ea", "a_only") and self.c_fea % 8 != 0:
            problems.append(f"c_fea: {self.c_fea} not divisible by 8 (attention projections)")
        if self.synth_layers < 2 or self.synth_layers % 2 != 0:
            problems.append(f"synth_layers: {self.synth_layers} must be even and >= 2")
        if self.mapping_layers < 1:
            problems.append(f"mapping_layers: {self.mapping_layers} must be >= 1")
        if self.z_dim < 1:
            problems.append(f"z_dim: {self.z_dim} must be >= 1")
        if self.time_unit <= 0:
            problems.append(f"time_unit: {self.time_unit} must be positive")
        if problems:
            raise ValueError("invalid generator config:\n  " + "\n  ".join(problems))
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(**d).validate()


class Generator(nn.Module):
    def __init__(self, config: GeneratorConfig):
        super().__init__()
        config.validate()
        self.config = config
        self.feature_mapper = FeatureMapper(config.variant, config.input_channels, config.c_fea)
        self.encoder = PositionalEncoder(
            config.c_fea,
            config.image_size,
            config.image_size,
            config.time_unit,
            config.time_enabled,
        )
        self.mapping = MappingNetwork(config.z_dim, config.mapping_layers)
        if config.use_synthesizer:
            self.synthesizer = PixelSynthesizer(
                config.c_fea,
                config.channels,
                style_dim=config.z_dim,
                n_layers=config.synth_layers,
                demodulate=config.demodulate,
            )
        else:
            self.synthesizer = DirectOutputHead(config.c_fea, config.channels)

    def map_style(self, z: torch.Tensor) -> torch.Tensor:
        return self.mapping(z)

    def feature_map(self, i_cat: torch.Tensor) -> torch.Tensor:
        """Feature grid for a (B, C_in, h, w) or (C_in, h, w) input."""
        single = i_cat.dim() == 3
        out = self.feature_mapper(i_cat.unsqueeze(0) if single else i_cat)
        return out.squeeze(0) if single else out

    def synthesize_at(
        self,
        i_fea: torch.Tensor,
        xs: torch.Tensor,
        ys: torch.Tensor,
        t_raw: float,
        z: torch.Tensor | None = None,
        w: torch.Tensor | None = None,
        feature_origin: tuple = (0, 0),
    ) -> torch.Tensor:
        """Pixel values (P, C) at absolute coordinates.

        ``i_fea`` is a (c_fea, h, w) grid; when it covers a patch,
        ``feature_origin`` is the patch's top-left absolute coordinate.
        """
        if w is None:
            if z is None:
                raise ValueError("need z or a precomputed style vector w")
            w = self.map_style(z.reshape(1, -1))
        h0, w0 = feature_origin
        fx = xs - h0
        fy = ys - w0
        if fx.min() < 0 or fx.max() >= i_fea.shape[1] or fy.min() < 0 or fy.max() >= i_fea.shape[2]:
            raise ValueError("queried coordinate has no feature vector in the given grid")
        inputs3 = self.encoder.normalized_inputs(xs, ys, t_raw)
        emb = self.encoder.embedding_rows(xs, ys)
        feats = i_fea[:, fx, fy].t()
        styles = self.synthesizer.style_weights(w)

        def block(v3, emb_rows, feat_rows):
            fourier = self.encoder.fourier(v3)
            enc = torch.cat([fourier, emb_rows], dim=1)
            return self.synthesizer.forward_with(enc, feat_rows, styles)

        return run_chunked(block, [inputs3, emb, feats])

    def generate(
        self,
        i_cat: torch.Tensor,
        t_raw: float,
        z: torch.Tensor,
        origin: tuple = (0, 0),
    ) -> torch.Tensor:
        """Generate the (C, h, w) image for one stacked input.

        ``i_cat`` may be a full image or a patch; ``origin`` is the patch's
        absolute top-left coordinate. The feature mapper sees only ``i_cat``;
        positional state is read at absolute coordinates.
        """
        _, h, w_dim = i_cat.shape
        i_fea = self.feature_map(i_cat)
        xs, ys = grid_coordinates(h, w_dim, device=i_cat.device, origin=origin)
        pixels = self.synthesize_at(i_fea, xs, ys, t_raw, z=z, feature_origin=origin)
        return pixels.t().reshape(self.config.channels, h, w_dim)

    def forward(self, i_cat: torch.Tensor, t_raw, z: torch.Tensor, origins=None):
        """Batched generation for training: (B, C_in, h, w) -> (B, C, h, w).

        The feature mapper runs once over the whole batch; the per-pixel
        stage runs per image (each has its own style vector and time).
        """
        batch, _, h, w_dim = i_cat.shape
        origins = origins if origins is not None else [(0, 0)] * batch
        if isinstance(t_raw, (int, float)):
            ts = [float(t_raw)] * batch
        else:
            ts = [float(t) for t in t_raw]
        i_fea = self.feature_map(i_cat)
        images = []
        for b in range(batch):
            origin = tuple(origins[b])
            xs, ys = grid_coordinates(h, w_dim, device=i_cat.device, origin=origin)
            pixels = self.synthesize_at(
                i_fea[b], xs, ys, ts[b], z=z[b], feature_origin=origin
            )
            images.append(pixels.t().reshape(self.config.channels, h, w_dim))
        return torch.stack(images)
