"""Imperceptibility metrics between a clean and an adversarial image.

All error magnitudes are reported on the 0-255 intensity scale even
though inputs live in [0, 1]; table magnitudes in the literature assume
8-bit units.  SSIM is returned in [-1, 1] (callers scale by 100 for
reporting).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from ..exceptions import ValidationError
from ..validation import check_image, check_same_shape

PEAK = 255.0
PSNR_CAP_DB = 100.0
# Below this the images are identical for 8-bit purposes; return the cap.
_PSNR_MSE_FLOOR = PEAK * PEAK * 1e-10

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
_C1 = (0.01 * PEAK) ** 2
_C2 = (0.03 * PEAK) ** 2


def _pair(a, b):
    a = check_image(a, name="a")
    b = check_image(b, name="b")
    check_same_shape(a, b, name_a="a", name_b="b")
    return a * PEAK, b * PEAK


def mse(a, b):
    """Mean squared error on the 0-255 scale."""
    x, y = _pair(a, b)
    diff = x - y
    return float(np.mean(diff * diff))


def mae(a, b):
    """Mean absolute error on the 0-255 scale."""
    x, y = _pair(a, b)
    return float(np.mean(np.abs(x - y)))


def psnr(a, b):
    """Peak signal-to-noise ratio in dB against a 255 peak.

    Capped at 100 dB near the identical-image singularity.
    """
    error = mse(a, b)
    if error < _PSNR_MSE_FLOOR:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(PEAK * PEAK / error))


def psnr_from_mse(error):
    """Closed-form PSNR for a known MSE, same cap as psnr()."""
    if error < 0:
        raise ValidationError("mse must be nonnegative")
    if error < _PSNR_MSE_FLOOR:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(PEAK * PEAK / error))


def _gaussian_window(size, sigma):
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    window = np.outer(g, g)
    return window / window.sum()


def _windowed_mean(plane, window):
    # Valid windows only: no padding, so border pixels without a full
    # neighborhood do not contribute.
    return fftconvolve(plane, window, mode="valid")


def ssim(a, b):
    """Mean structural similarity with a Gaussian 11x11, sigma 1.5 window.

    Channels are scored independently and averaged; only windows fully
    inside the image count.  Result is in [-1, 1].
    """
    x, y = _pair(a, b)
    height, width = x.shape[:2]
    if min(height, width) < SSIM_WINDOW:
        raise ValidationError(
            f"image {height}x{width} smaller than the {SSIM_WINDOW}-pixel "
            "ssim window"
        )
    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    scores = []
    for channel in range(x.shape[2]):
        p, q = x[:, :, channel], y[:, :, channel]
        mu_p = _windowed_mean(p, window)
        mu_q = _windowed_mean(q, window)
        mu_pp = mu_p * mu_p
        mu_qq = mu_q * mu_q
        mu_pq = mu_p * mu_q
        var_p = _windowed_mean(p * p, window) - mu_pp
        var_q = _windowed_mean(q * q, window) - mu_qq
        cov = _windowed_mean(p * q, window) - mu_pq
        score_map = ((2.0 * mu_pq + _C1) * (2.0 * cov + _C2)) / (
            (mu_pp + mu_qq + _C1) * (var_p + var_q + _C2)
        )
        scores.append(float(np.mean(score_map)))
    return float(np.mean(scores))


def image_quality_report(a, b):
    """All four imperceptibility numbers; ssim scaled x100 for tables."""
    return {
        "mse": mse(a, b),
        "mae": mae(a, b),
        "psnr": psnr(a, b),
        "ssim": 100.0 * ssim(a, b),
    }
