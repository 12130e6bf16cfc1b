"""Augmented view pairs and exact feature-grid correspondence.

A view pair is two geometrically transformed + photometrically jittered
renderings of one slice. Because the geometric family is exact on pixel
centers (see :mod:`dclseg.transforms`), the matching between feature-grid
positions of the two views can be computed exactly: that matching defines
the positive pairs of the dense contrastive loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .transforms import (
    HALF,
    GeometricTransform,
    crop_resize,
    flip_h,
    flip_v,
    identity,
    translation,
)
from .types import SliceImage


@dataclass(frozen=True)
class AugConfig:
    """Knobs for view sampling (config keys under ``aug.*``).

    cell_px is the feature-cell size in pixels (the encoder stride);
    translations are sampled in whole cells and crop factors are kept
    divisors of the cell so correspondences stay exact.
    """

    flip_p: float = 0.5
    max_translate_cells: int = 1
    crop_scale_min: float = 0.5
    intensity_jitter: float = 0.1
    noise_std: float = 0.02
    cell_px: int = 8

    def __post_init__(self):
        if not 0.0 <= self.flip_p <= 1.0:
            raise ValueError("flip_p must be in [0, 1]")
        if self.max_translate_cells < 0:
            raise ValueError("max_translate_cells must be >= 0")
        if not 0.0 < self.crop_scale_min <= 1.0:
            raise ValueError("crop_scale_min must be in (0, 1]")
        if self.noise_std < 0 or self.intensity_jitter < 0:
            raise ValueError("photometric magnitudes must be >= 0")
        if self.cell_px < 1:
            raise ValueError("cell_px must be >= 1")


IDENTITY_AUG = AugConfig(
    flip_p=0.0, max_translate_cells=0, crop_scale_min=1.0,
    intensity_jitter=0.0, noise_std=0.0,
)


@dataclass(frozen=True)
class ViewPair:
    """Query/key views of one slice with their exact transforms."""

    view_q: SliceImage
    view_k: SliceImage
    t_q: GeometricTransform
    t_k: GeometricTransform
    photometric_seed: int

    def __post_init__(self):
        if self.view_q.shape != self.view_k.shape:
            raise ValueError("views must share spatial dims")


@dataclass(frozen=True)
class CorrespondenceMap:
    """Injective matching i -> j between query and key feature positions.

    Positions index the D_h x D_w grid row-major. Empty when the views
    share no source content.
    """

    pairs: tuple
    feature_dims: tuple

    def __post_init__(self):
        d_h, d_w = self.feature_dims
        n = d_h * d_w
        seen = set()
        for i, j in self.pairs:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"pair ({i},{j}) outside grid of {n} positions")
            if i in seen:
                raise ValueError(f"query position {i} matched twice")
            seen.add(i)

    def __len__(self):
        return len(self.pairs)


def _sample_geometric(rng, h, w, cfg: AugConfig) -> GeometricTransform:
    """Draw one transform as crop -> flips -> translation, composed."""
    t = identity(h, w)
    ks = [
        k for k in (1, 2, 4)
        if 1.0 / k >= cfg.crop_scale_min - 1e-12
        and h % k == 0 and w % k == 0 and cfg.cell_px % k == 0
    ]
    k = int(ks[rng.integers(len(ks))])
    if k > 1:
        r0 = int(rng.integers(0, h - h // k + 1))
        c0 = int(rng.integers(0, w - w // k + 1))
        t = t.then(crop_resize(h, w, r0, c0, k))
    if rng.random() < cfg.flip_p:
        t = t.then(flip_h(h, w))
    if rng.random() < cfg.flip_p:
        t = t.then(flip_v(h, w))
    if cfg.max_translate_cells > 0:
        m = cfg.max_translate_cells
        dy = int(rng.integers(-m, m + 1)) * cfg.cell_px
        dx = int(rng.integers(-m, m + 1)) * cfg.cell_px
        if dy or dx:
            t = t.then(translation(h, w, dy, dx))
    return t


def _photometric(pixels, rng, cfg: AugConfig):
    out = pixels.astype(np.float32, copy=True)
    if cfg.intensity_jitter > 0:
        scale = 1.0 + cfg.intensity_jitter * float(rng.uniform(-1.0, 1.0))
        shift = cfg.intensity_jitter * float(rng.uniform(-1.0, 1.0))
        out = out * scale + shift
    if cfg.noise_std > 0:
        out = out + rng.normal(0.0, cfg.noise_std, size=out.shape).astype(np.float32)
    return out


def sample_view_pair(slc: SliceImage, rng, cfg: AugConfig) -> ViewPair:
    """Draw a query/key view pair; deterministic given the rng state."""
    h, w = slc.shape
    t_q = _sample_geometric(rng, h, w, cfg)
    t_k = _sample_geometric(rng, h, w, cfg)
    photometric_seed = int(rng.integers(0, 2**31 - 1))
    prng = np.random.default_rng(photometric_seed)
    pix_q = _photometric(t_q.apply(slc.pixels), prng, cfg)
    pix_k = _photometric(t_k.apply(slc.pixels), prng, cfg)
    return ViewPair(
        view_q=SliceImage(pix_q, source=slc.source),
        view_k=SliceImage(pix_k, source=slc.source),
        t_q=t_q,
        t_k=t_k,
        photometric_seed=photometric_seed,
    )


def _cell_center(u, cell):
    return u * cell + Fraction(cell - 1, 2)


def _axis_candidates(x: Fraction, cell: int, n_cells: int):
    """Cells whose closed extent [u*cell - 1/2, (u+1)*cell - 1/2] holds x."""
    t = (x + HALF) / cell
    if t.denominator == 1:  # exactly on a cell boundary
        ti = int(t)
        return [u for u in (ti - 1, ti) if 0 <= u < n_cells]
    u = t.numerator // t.denominator
    return [u] if 0 <= u < n_cells else []


def correspondence_map(
    t_q: GeometricTransform,
    t_k: GeometricTransform,
    feature_dims,
    image_dims,
) -> CorrespondenceMap:
    """Match query feature positions to key positions across two views.

    Query cell i matches key cell j when the source point of i's cell
    center (through the query view's pull map) lands inside cell j of the
    key view; boundary ties go to the nearest cell center, then to the
    lowest row-major index. Positions whose center comes from padding, or
    lands outside the key view, are unmatched.
    """
    d_h, d_w = feature_dims
    h, w = image_dims
    if h % d_h or w % d_w:
        raise ValueError(f"feature dims {feature_dims} must divide image dims {image_dims}")
    for t in (t_q, t_k):
        if (t.height, t.width) != (h, w):
            raise ValueError("transform dims do not match image dims")
    sh, sw = h // d_h, w // d_w
    for t in (t_q, t_k):
        k = t.upscale_factor
        if sh % k or sw % k:
            raise ValueError(
                f"upscale factor {k} must divide the feature cell ({sh}x{sw}) "
                f"for exact correspondence"
            )

    pairs = []
    for u in range(d_h):
        for v in range(d_w):
            i = u * d_w + v
            x_q = (_cell_center(u, sh), _cell_center(v, sw))
            s = t_q.pull_point(x_q)
            if not t_q.in_source_box(s):
                continue
            x_k = t_k.push_point(s)
            if not t_k.in_view_box(x_k):
                continue
            rows = _axis_candidates(x_k[0], sh, d_h)
            cols = _axis_candidates(x_k[1], sw, d_w)
            if not rows or not cols:
                continue
            best = None
            best_d2 = None
            for uu in rows:
                for vv in cols:
                    d2 = (x_k[0] - _cell_center(uu, sh)) ** 2 + (
                        x_k[1] - _cell_center(vv, sw)
                    ) ** 2
                    idx = uu * d_w + vv
                    if best_d2 is None or d2 < best_d2 or (d2 == best_d2 and idx < best):
                        best, best_d2 = idx, d2
            pairs.append((i, best))
    return CorrespondenceMap(pairs=tuple(pairs), feature_dims=(d_h, d_w))
