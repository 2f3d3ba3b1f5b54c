"""Input validation helpers, in the spirit of sklearn's ``check_array``.

Images are plain numpy arrays of shape (H, W, 3) holding normalized
intensities in [0, 1].  Every public entry point funnels its image inputs
through :func:`check_image` so the rest of the code can assume a valid,
float64, C-contiguous tensor.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError


def check_image(image, name="image"):
    """Validate an (H, W, 3) image tensor in [0, 1] and return it as float64.

    Raises ValidationError naming the violated invariant.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(
            f"{name}: expected shape (H, W, 3), got {arr.shape}"
        )
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name}: height and width must be positive")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError(
            f"{name}: values outside [0, 1] (min={arr.min():.6g}, max={arr.max():.6g})"
        )
    return np.ascontiguousarray(arr)


def check_embedding(vec, name="embedding", require_nonzero=False):
    """Validate a finite 1-D embedding vector; optionally require nonzero norm."""
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name}: expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite values")
    if require_nonzero and not np.any(arr):
        raise ValidationError(f"{name}: zero vector where nonzero norm is required")
    return arr


def check_nonempty_text(text, name="text"):
    """Require a nonempty string."""
    if not isinstance(text, str):
        raise ValidationError(f"{name}: expected a string, got {type(text).__name__}")
    if not text.strip():
        raise ValidationError(f"{name} empty")
    return text


def check_same_shape(a, b, name_a="a", name_b="b"):
    """Require two arrays to share a shape."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValidationError(
            f"shape mismatch: {name_a} {a.shape} vs {name_b} {b.shape}"
        )
    return a, b


def check_positive(value, name):
    """Require a finite, strictly positive scalar."""
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")
    return float(value)
