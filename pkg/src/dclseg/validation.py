"""Input validation helpers shared across the package.

Conventions follow scikit-learn's ``check_array`` spirit: validate early,
raise ``ValueError`` with a message naming the offending argument, and
return a canonical ``numpy`` array so downstream code can assume shape
and dtype.
"""

from __future__ import annotations

import numpy as np


def check_finite(arr, name="array"):
    """Return ``arr`` as a float ndarray, rejecting NaN/Inf entries."""
    arr = np.asarray(arr)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_2d(arr, name="array"):
    """Validate a finite 2D array (H, W) with positive dimensions."""
    arr = check_finite(arr, name)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} has an empty dimension: {arr.shape}")
    return arr


def check_3d(arr, name="array"):
    """Validate a finite 3D array (D, H, W) with positive dimensions."""
    arr = check_finite(arr, name)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be 3D, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: {arr.shape}")
    return arr


def check_binary_mask(mask, name="mask"):
    """Validate a boolean/0-1 mask of any dimensionality; returns bool array."""
    mask = np.asarray(mask)
    if mask.dtype != bool:
        uniq = np.unique(mask)
        if not np.all(np.isin(uniq, (0, 1))):
            raise ValueError(f"{name} must be binary, found values {uniq[:8]}")
        mask = mask.astype(bool)
    return mask


def check_label_mask(classes, n_classes=None, name="labels"):
    """Validate integer class labels in {0..C}; returns an int array.

    ``n_classes`` counts foreground structures, so valid values are
    0..n_classes inclusive (0 is background).
    """
    arr = np.asarray(classes)
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(np.asarray(arr, dtype=np.float64))
        if not np.array_equal(rounded, arr):
            raise ValueError(f"{name} must be integer-valued")
        arr = rounded.astype(np.int64)
    else:
        arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError(f"{name} contains negative class values")
    if n_classes is not None and arr.size and arr.max() > n_classes:
        raise ValueError(
            f"{name} contains class {arr.max()} but only {n_classes} "
            f"foreground classes are declared"
        )
    return arr


def check_same_shape(a, b, name_a="a", name_b="b"):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(
            f"shape mismatch: {name_a} has {a.shape}, {name_b} has {b.shape}"
        )
    return a, b


def check_in_range(value, lo, hi, name, inclusive=(True, True)):
    """Validate a scalar in [lo, hi] (bounds optionally exclusive)."""
    lo_ok = value >= lo if inclusive[0] else value > lo
    hi_ok = value <= hi if inclusive[1] else value < hi
    if not (lo_ok and hi_ok):
        lo_b = "[" if inclusive[0] else "("
        hi_b = "]" if inclusive[1] else ")"
        raise ValueError(f"{name}={value} outside {lo_b}{lo}, {hi}{hi_b}")
    return value
