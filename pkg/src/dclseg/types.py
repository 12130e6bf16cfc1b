"""Core value types: volumes, 2D slices, label masks.

All types are immutable once constructed and safe to share across
workers. Model/optimizer state lives in :mod:`dclseg.state`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import check_2d, check_3d, check_label_mask


@dataclass(frozen=True)
class Volume:
    """A 3D scalar volume (depth, height, width) with physical spacing."""

    voxels: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        vox = check_3d(self.voxels, "voxels")
        object.__setattr__(self, "voxels", vox)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise ValueError(f"spacing must be 3 positive floats, got {self.spacing}")
        object.__setattr__(self, "spacing", spacing)

    @property
    def shape(self):
        return self.voxels.shape

    def slices(self):
        """Iterate (index, SliceImage) over the depth axis."""
        for d in range(self.voxels.shape[0]):
            yield d, SliceImage(self.voxels[d], source=(None, d))


@dataclass(frozen=True)
class SliceImage:
    """A single 2D slice, optionally tagged with (volume id, slice index)."""

    pixels: np.ndarray
    source: tuple = (None, None)

    def __post_init__(self):
        px = check_2d(self.pixels, "pixels")
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self):
        return self.pixels.shape


@dataclass(frozen=True)
class LabelMask:
    """Integer class labels, 0 = background, 1..n_classes = structures."""

    classes: np.ndarray
    n_classes: int

    def __post_init__(self):
        arr = check_label_mask(self.classes, self.n_classes, "classes")
        if arr.ndim not in (2, 3):
            raise ValueError(f"classes must be 2D or 3D, got shape {arr.shape}")
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        object.__setattr__(self, "classes", arr)

    @property
    def shape(self):
        return self.classes.shape

    def binary(self, cls):
        """Boolean mask of a single class."""
        return self.classes == cls


def normalize_slice(raw: SliceImage) -> SliceImage:
    """Z-score a slice: zero mean, unit variance (population std).

    A constant slice maps to all-zeros. Idempotent up to float error for
    non-constant inputs.
    """
    px = raw.pixels.astype(np.float64)
    mean = px.mean()
    std = px.std()  # population denominator N, for determinism
    if std == 0.0:
        out = np.zeros_like(px)
    else:
        out = (px - mean) / std
    return SliceImage(out.astype(np.float32), source=raw.source)
