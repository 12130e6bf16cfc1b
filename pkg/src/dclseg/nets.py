"""Encoder backbones, projection heads and the two decoder architectures.

The tiny-cnn preset is the desk-scale default (4 conv stages, stride 8,
64 feature channels); resnet50-like keeps the stride-16 / 4-upscaling
geometry of the full-scale configuration as an opt-in. Decoders come in
two deliberately different flavors, transposed-conv and bilinear
upsampling, used as the two perturbed branches during fine-tuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from .types import SliceImage

NORM_EPS = 1e-8  # added to L2 norms before division


@dataclass(frozen=True)
class EncoderConfig:
    preset: str = "tiny-cnn"
    channels: tuple = (16, 32, 64, 64)
    strides: tuple = (1, 2, 2, 2)

    def __post_init__(self):
        if len(self.channels) != len(self.strides):
            raise ValueError("channels and strides must have equal length")
        if any(s not in (1, 2) for s in self.strides):
            raise ValueError("stage strides must be 1 or 2")

    @property
    def stride(self) -> int:
        out = 1
        for s in self.strides:
            out *= s
        return out

    @property
    def feature_channels(self) -> int:
        return self.channels[-1]

    @property
    def decoder_stages(self) -> int:
        return int(round(math.log2(self.stride)))


ENCODER_PRESETS = {
    "tiny-cnn": EncoderConfig("tiny-cnn", (16, 32, 64, 64), (1, 2, 2, 2)),
    "resnet50-like": EncoderConfig("resnet50-like", (32, 64, 128, 256), (2, 2, 2, 2)),
}

DECODER_CHANNEL_PRESETS = {
    "tiny-cnn": (48, 32, 24),
    "resnet50-like": (128, 64, 32, 16),
}


def encoder_config(preset: str) -> EncoderConfig:
    try:
        return ENCODER_PRESETS[preset]
    except KeyError:
        raise ValueError(
            f"unknown encoder preset {preset!r}; choose from {sorted(ENCODER_PRESETS)}"
        ) from None


@dataclass(frozen=True)
class DecoderConfig:
    upscale_mode: str = "transposed-conv"
    stages: int = 4
    channels: tuple = (128, 64, 32, 16)
    init_seed: int = 0

    def __post_init__(self):
        if self.upscale_mode not in ("transposed-conv", "bilinear"):
            raise ValueError(f"unknown upscale_mode {self.upscale_mode!r}")
        if len(self.channels) != self.stages:
            raise ValueError("need one channel width per stage")


@dataclass
class FeatureMap:
    """Spatial features (C_f, D_h, D_w) at a known stride."""

    values: torch.Tensor
    stride: int

    def __post_init__(self):
        if self.values.ndim != 3:
            raise ValueError(f"feature map must be 3D, got {tuple(self.values.shape)}")


@dataclass
class DenseProjection:
    """Unit-norm embedding per spatial position (C_p, D_h, D_w)."""

    vectors: torch.Tensor

    @property
    def grid(self):
        return tuple(self.vectors.shape[1:])

    def flat(self) -> torch.Tensor:
        """(D_h*D_w, C_p) row-major over positions."""
        c = self.vectors.shape[0]
        return self.vectors.reshape(c, -1).transpose(0, 1)


class Encoder(nn.Module):
    """Plain conv stages; stage i = conv3x3(stride) + ReLU (+ residual conv)."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.stride = cfg.stride
        self.out_channels = cfg.feature_channels
        layers = []
        in_ch = 1
        for ch, s in zip(cfg.channels, cfg.strides):
            layers.append(nn.Conv2d(in_ch, ch, 3, stride=s, padding=1))
            layers.append(nn.ReLU(inplace=True))
            if cfg.preset == "resnet50-like":
                layers.append(_ResidualBlock(ch))
            in_ch = ch
        self.stages = nn.Sequential(*layers)

    def forward(self, x):
        return self.stages(x)


class _ResidualBlock(nn.Module):
    def __init__(self, ch):
        super().__init__()
        self.conv1 = nn.Conv2d(ch, ch, 3, padding=1)
        self.conv2 = nn.Conv2d(ch, ch, 3, padding=1)

    def forward(self, x):
        h = F.relu(self.conv1(x))
        return F.relu(x + self.conv2(h))


def dense_project_tensor(features, weight, bias=None):
    """1x1-conv projection + per-position L2 normalization.

    features: (..., C_f, H, W); weight: (C_p, C_f); bias: (C_p,) or None.
    Channel dim is third-from-last so single maps and batches both work.
    """
    w = weight[:, :, None, None]
    if features.ndim == 3:
        out = F.conv2d(features[None], w, bias)[0]
        norm = torch.linalg.vector_norm(out, dim=0, keepdim=True)
    else:
        out = F.conv2d(features, w, bias)
        norm = torch.linalg.vector_norm(out, dim=1, keepdim=True)
    return out / (norm + NORM_EPS)


class DenseProjectionHead(nn.Module):
    """The 1x1 convolution projection producing dense unit embeddings."""

    def __init__(self, in_channels, embed_dim):
        super().__init__()
        self.weight = nn.Parameter(torch.empty(embed_dim, in_channels))
        self.bias = nn.Parameter(torch.zeros(embed_dim))
        self.embed_dim = embed_dim

    def forward(self, features):
        return dense_project_tensor(features, self.weight, self.bias)


def global_project_tensor(features, w1, b1, w2, b2):
    """GAP -> linear -> ReLU -> linear -> L2 normalize (reference head)."""
    if features.ndim == 3:
        pooled = features.mean(dim=(1, 2))
    else:
        pooled = features.mean(dim=(2, 3))
    h = F.relu(F.linear(pooled, w1, b1))
    out = F.linear(h, w2, b2)
    norm = torch.linalg.vector_norm(out, dim=-1, keepdim=True)
    return out / (norm + NORM_EPS)


class GlobalProjectionHead(nn.Module):
    """Pooled MLP head of the global-contrast baseline configuration."""

    def __init__(self, in_channels, embed_dim, hidden=None):
        super().__init__()
        hidden = hidden or in_channels
        self.fc1 = nn.Linear(in_channels, hidden)
        self.fc2 = nn.Linear(hidden, embed_dim)

    def forward(self, features):
        return global_project_tensor(
            features, self.fc1.weight, self.fc1.bias, self.fc2.weight, self.fc2.bias
        )


class Decoder(nn.Module):
    """Upscaling decoder from the bottleneck feature map to logits.

    transposed-conv mode learns its upsampling kernels; bilinear mode
    interpolates and refines with a 3x3 conv. Both restore the input
    resolution after cfg.stages doublings.
    """

    def __init__(self, in_channels, n_out, cfg: DecoderConfig):
        super().__init__()
        self.cfg = cfg
        blocks = []
        ch_in = in_channels
        for ch_out in cfg.channels:
            if cfg.upscale_mode == "transposed-conv":
                blocks.append(nn.ConvTranspose2d(ch_in, ch_out, 4, stride=2, padding=1))
                blocks.append(nn.ReLU(inplace=True))
            else:
                blocks.append(nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False))
                blocks.append(nn.Conv2d(ch_in, ch_out, 3, padding=1))
                blocks.append(nn.ReLU(inplace=True))
            blocks.append(nn.Conv2d(ch_out, ch_out, 3, padding=1))
            blocks.append(nn.ReLU(inplace=True))
            ch_in = ch_out
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Conv2d(ch_in, n_out, 1)

    def forward(self, features):
        return self.head(self.blocks(features))


def init_params(module: nn.Module, gen: torch.Generator):
    """Deterministic init: weights U(-1/sqrt(fan_in), +), biases zero.

    Walks parameters in registration order so a given generator state
    always yields the same weights.
    """
    for name, p in module.named_parameters():
        if p.ndim <= 1:
            with torch.no_grad():
                p.zero_()
        else:
            fan_in = p.shape[1]
            for d in p.shape[2:]:
                fan_in *= d
            bound = 1.0 / math.sqrt(fan_in)
            with torch.no_grad():
                p.uniform_(-bound, bound, generator=gen)


# ---- single-image ops over the module layer ----------------------------------


def encode(image: SliceImage, encoder: Encoder) -> FeatureMap:
    """Run the backbone on one slice."""
    h, w = image.shape
    s = encoder.stride
    if h % s or w % s:
        raise ValueError(f"image dims {(h, w)} not divisible by stride {s}")
    p = next(encoder.parameters())
    x = torch.as_tensor(image.pixels, dtype=p.dtype)[None, None]
    with torch.no_grad():
        out = encoder(x)[0]
    return FeatureMap(values=out, stride=s)


def project_dense(fm: FeatureMap, weight, bias=None) -> DenseProjection:
    """Project one feature map to unit vectors per position."""
    if weight.ndim != 2 or weight.shape[1] != fm.values.shape[0]:
        raise ValueError(
            f"weight must be (C_p, {fm.values.shape[0]}), got {tuple(weight.shape)}"
        )
    return DenseProjection(dense_project_tensor(fm.values, weight, bias))


def project_global(fm: FeatureMap, w1, b1, w2, b2) -> torch.Tensor:
    """Project one feature map to a single unit vector (baseline head)."""
    return global_project_tensor(fm.values, w1, b1, w2, b2)


def decode(fm: FeatureMap, cfg: DecoderConfig, decoder: Decoder) -> torch.Tensor:
    """Decode one feature map to (n_out, H, W) logits."""
    if fm.stride != 2 ** cfg.stages:
        raise ValueError(
            f"feature stride {fm.stride} does not match 2^{cfg.stages} decoder stages"
        )
    with torch.no_grad():
        return decoder(fm.values[None])[0]
