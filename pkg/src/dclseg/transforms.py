"""Exactly invertible integer-grid geometric transforms.

Every transform maps a source image of fixed (height, width) to a view of
the same size. The family is restricted to flips, 90-degree rotations,
integer translations and aligned crop+integer-upscale so that the
view-to-source point map is an exact rational affine map:

    src[a] = scale * sign[a] * view[axes[a]] + offset[a]

with ``scale`` = 1/k for an upscale factor k. Pixel content is looked up
by rounding the point map at pixel centers, so geometry, rendered pixels
and the correspondence logic all share one definition. Coordinates are
pixel-centered: pixel p spans [p - 1/2, p + 1/2].
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

HALF = Fraction(1, 2)


def _round_half_up(x: Fraction) -> int:
    """Deterministic nearest-integer rounding (ties toward +inf)."""
    num = 2 * x.numerator + x.denominator
    den = 2 * x.denominator
    return num // den


@dataclass(frozen=True)
class GeometricTransform:
    """An invertible view->source affine map on an image grid.

    kind is a label for bookkeeping ('identity', 'translation', 'flip-h',
    'flip-v', 'rotation-90k', 'crop-resize', or 'composite'); the actual
    geometry is fully defined by (axes, sign, scale, offset).
    """

    kind: str
    height: int
    width: int
    axes: tuple = (0, 1)
    sign: tuple = (1, 1)
    scale: Fraction = Fraction(1)
    offset: tuple = (Fraction(0), Fraction(0))

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("image dims must be >= 1")
        if self.scale <= 0 or self.scale > 1:
            raise ValueError(f"pull scale must be in (0, 1], got {self.scale}")
        object.__setattr__(self, "scale", Fraction(self.scale))
        object.__setattr__(
            self, "offset", (Fraction(self.offset[0]), Fraction(self.offset[1]))
        )

    # ---- point maps (exact) -------------------------------------------------

    def pull_point(self, point):
        """Map a view-space point (row, col) to source space."""
        r = Fraction(point[0])
        c = Fraction(point[1])
        v = (r, c)
        return tuple(
            self.scale * self.sign[a] * v[self.axes[a]] + self.offset[a]
            for a in (0, 1)
        )

    def push_point(self, point):
        """Map a source-space point to view space (inverse of pull)."""
        s = (Fraction(point[0]), Fraction(point[1]))
        out = [None, None]
        for a in (0, 1):
            out[self.axes[a]] = self.sign[a] * (s[a] - self.offset[a]) / self.scale
        return tuple(out)

    def in_source_box(self, point) -> bool:
        return (
            -HALF <= point[0] <= self.height - HALF
            and -HALF <= point[1] <= self.width - HALF
        )

    def in_view_box(self, point) -> bool:
        # views share the source dims by construction
        return self.in_source_box(point)

    # ---- pixel maps ---------------------------------------------------------

    def pull_pixel(self, r: int, c: int):
        """Source pixel shown at view pixel (r, c), or None if padding."""
        sr, sc = self.pull_point((r, c))
        ir, ic = _round_half_up(sr), _round_half_up(sc)
        if 0 <= ir < self.height and 0 <= ic < self.width:
            return ir, ic
        return None

    def _axis_lut(self, a: int):
        n = (self.height, self.width)[self.axes[a]]
        return np.array(
            [
                _round_half_up(self.scale * self.sign[a] * v + self.offset[a])
                for v in range(n)
            ],
            dtype=np.int64,
        )

    def apply(self, pixels: np.ndarray) -> np.ndarray:
        """Render the view of a (H, W) source array; padding is 0."""
        if pixels.shape != (self.height, self.width):
            raise ValueError(
                f"transform built for {(self.height, self.width)}, "
                f"got array of shape {pixels.shape}"
            )
        lut_r = self._axis_lut(0)  # indexed by view coord along axis self.axes[0]
        lut_c = self._axis_lut(1)
        if self.axes == (0, 1):
            sr = lut_r[:, None]
            sc = lut_c[None, :]
        else:  # axes swapped: source row follows view col and vice versa
            sr = lut_r[None, :]
            sc = lut_c[:, None]
        sr, sc = np.broadcast_arrays(sr, sc)
        valid = (sr >= 0) & (sr < self.height) & (sc >= 0) & (sc < self.width)
        out = np.zeros_like(pixels)
        out[valid] = pixels[sr[valid], sc[valid]]
        return out

    def pixel_map(self):
        """(H, W, 2) int array of source pixels per view pixel; -1 = padding."""
        out = np.full((self.height, self.width, 2), -1, dtype=np.int64)
        for r in range(self.height):
            for c in range(self.width):
                src = self.pull_pixel(r, c)
                if src is not None:
                    out[r, c] = src
        return out

    # ---- algebra ------------------------------------------------------------

    def then(self, after: "GeometricTransform") -> "GeometricTransform":
        """Composition: apply self to the source, then ``after`` to the result."""
        if (after.height, after.width) != (self.height, self.width):
            raise ValueError("composed transforms must share image dims")
        t1, t2 = self, after
        axes = tuple(t2.axes[t1.axes[b]] for b in (0, 1))
        sign = tuple(t1.sign[b] * t2.sign[t1.axes[b]] for b in (0, 1))
        offset = tuple(
            t1.scale * t1.sign[b] * t2.offset[t1.axes[b]] + t1.offset[b]
            for b in (0, 1)
        )
        return GeometricTransform(
            kind="composite",
            height=self.height,
            width=self.width,
            axes=axes,
            sign=sign,
            scale=t1.scale * t2.scale,
            offset=offset,
        )

    @property
    def upscale_factor(self) -> int:
        """k such that the pull scale is 1/k."""
        assert self.scale.numerator == 1
        return self.scale.denominator


# ---- factories ---------------------------------------------------------------


def identity(height: int, width: int) -> GeometricTransform:
    return GeometricTransform("identity", height, width)


def translation(height: int, width: int, dy: int, dx: int) -> GeometricTransform:
    """Shift content down by dy and right by dx (zero padding elsewhere)."""
    return GeometricTransform(
        "translation",
        height,
        width,
        offset=(Fraction(-int(dy)), Fraction(-int(dx))),
    )


def flip_h(height: int, width: int) -> GeometricTransform:
    return GeometricTransform(
        "flip-h", height, width, sign=(1, -1), offset=(Fraction(0), Fraction(width - 1))
    )


def flip_v(height: int, width: int) -> GeometricTransform:
    return GeometricTransform(
        "flip-v", height, width, sign=(-1, 1), offset=(Fraction(height - 1), Fraction(0))
    )


def rotation90(height: int, width: int, k: int) -> GeometricTransform:
    """Counter-clockwise rotation by 90*k degrees (numpy rot90 convention)."""
    k = k % 4
    if k % 2 == 1 and height != width:
        raise ValueError("odd 90-degree rotations require a square image")
    t = identity(height, width)
    # rot90 once: view[i, j] = src[j, W-1-i]
    quarter = GeometricTransform(
        "rotation-90k",
        height,
        width,
        axes=(1, 0),
        sign=(1, -1),
        offset=(Fraction(0), Fraction(width - 1)),
    )
    for _ in range(k):
        t = t.then(quarter)
    return GeometricTransform(
        "rotation-90k", height, width, axes=t.axes, sign=t.sign,
        scale=t.scale, offset=t.offset,
    )


def crop_resize(height: int, width: int, r0: int, c0: int, k: int) -> GeometricTransform:
    """Crop a (H/k, W/k) window at (r0, c0) and upscale by integer k.

    The view pixel p shows source pixel r0 + p // k, i.e. nearest-neighbor
    integer upscaling, which keeps the map exact on pixel centers.
    """
    k = int(k)
    if k < 1:
        raise ValueError("upscale factor k must be >= 1")
    if height % k or width % k:
        raise ValueError(f"k={k} must divide image dims {(height, width)}")
    ch, cw = height // k, width // k
    if not (0 <= r0 and r0 + ch <= height and 0 <= c0 and c0 + cw <= width):
        raise ValueError(
            f"crop window ({r0},{c0})+({ch},{cw}) exceeds bounds {(height, width)}"
        )
    centering = Fraction(k - 1, 2 * k)
    return GeometricTransform(
        "crop-resize",
        height,
        width,
        scale=Fraction(1, k),
        offset=(Fraction(r0) - centering, Fraction(c0) - centering),
    )


TRANSFORM_KINDS = (
    "identity",
    "translation",
    "flip-h",
    "flip-v",
    "rotation-90k",
    "crop-resize",
)
