"""Image quality metrics: peak signal-to-noise ratio and structural
similarity, both on [0,1]-normalized images.

SSIM uses the original constants: 11x11 Gaussian window with sigma 1.5,
K1=0.01, K2=0.03, dynamic range 1.0.  Window statistics are evaluated only
where the full window fits (valid positions), per channel, then averaged.
"""

import math
from dataclasses import dataclass

import numpy as np

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class QualityReport:
    psnr_db: float     # math.inf for identical images
    ssim: float


def _as_array(x):
    if isinstance(x, np.ndarray):
        data = x.astype(float, copy=False)
    elif isinstance(getattr(x, "data", None), np.ndarray):
        data = x.data
    else:
        data = np.asarray(x, float)
    if data.ndim != 3:
        raise ValueError(f"expected a CHW image, got shape {data.shape}")
    return data


def psnr(a, b) -> float:
    """10*log10(1/MSE) with unit peak; identical images give +inf."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_taps(n=SSIM_WINDOW, sigma=SSIM_SIGMA):
    t = np.arange(n) - (n - 1) / 2.0
    g = np.exp(-(t ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _window_mean(plane, taps):
    """Separable windowed mean at valid positions only (the symmetric taps
    make convolve and correlate coincide)."""
    rows = np.apply_along_axis(lambda v: np.convolve(v, taps, mode="valid"),
                               0, plane)
    return np.apply_along_axis(lambda v: np.convolve(v, taps, mode="valid"),
                               1, rows)


def ssim(a, b) -> float:
    """Mean structural similarity over valid window positions, averaged
    across channels."""
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    h, w = a.shape[1:]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ValueError(
            f"image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    taps = _gaussian_taps()
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    vals = []
    for c in range(a.shape[0]):
        x, y = a[c], b[c]
        mx = _window_mean(x, taps)
        my = _window_mean(y, taps)
        vxx = _window_mean(x * x, taps) - mx * mx
        vyy = _window_mean(y * y, taps) - my * my
        vxy = _window_mean(x * y, taps) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * vxy + c2)
        den = (mx * mx + my * my + c1) * (vxx + vyy + c2)
        vals.append(float(np.mean(num / den)))
    return float(np.mean(vals))


def evaluate_pair(a, b) -> QualityReport:
    return QualityReport(psnr_db=psnr(a, b), ssim=ssim(a, b))
