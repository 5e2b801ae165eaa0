"""Synthetic snow and veiling degradation generator.

A degradation is built in three stages, all driven by one seeded RNG so the
same parameters always reproduce the same output:

  1. snow layer: oriented streak segments with Gaussian falloff across
     their width, plus soft circular flakes, each with sampled position,
     size, and opacity, accumulated by maximum into an alpha map;
  2. the alpha map is Gaussian-blurred and a white layer is
     alpha-composited over the clean image;
  3. veiling: out = composited * t + A * (1 - t) with t = 1 - veil_strength
     pulling every pixel toward the atmospheric light A.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .autodiff import Tensor


def _check_range(name, rng_pair, lo=None, hi=None):
    a, b = rng_pair
    if not a <= b:
        raise ValueError(f"{name} range ({a}, {b}) is empty")
    if lo is not None and a < lo or hi is not None and b > hi:
        raise ValueError(f"{name} range ({a}, {b}) outside [{lo}, {hi}]")


@dataclass(frozen=True)
class SnowParams:
    streak_count: int = 12
    streak_length: tuple = (8.0, 20.0)     # px
    streak_angle: tuple = (-75.0, 75.0)    # degrees off vertical
    streak_width: tuple = (1.0, 2.5)       # px
    transparency: tuple = (0.4, 0.9)       # opacity of each particle
    blur_sigma: float = 0.8
    flake_count: int = 40
    flake_radius: tuple = (0.8, 2.5)       # px
    veil_strength: float = 0.2
    atmospheric_light: float = 0.9
    rng_seed: int = 0

    def __post_init__(self):
        if self.streak_count < 0 or self.flake_count < 0:
            raise ValueError("particle counts must be nonnegative")
        _check_range("streak_length", self.streak_length, lo=0.0)
        _check_range("streak_angle", self.streak_angle)
        _check_range("streak_width", self.streak_width, lo=0.0)
        _check_range("transparency", self.transparency, lo=0.0, hi=1.0)
        _check_range("flake_radius", self.flake_radius, lo=0.0)
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be nonnegative")
        if not 0.0 <= self.veil_strength <= 1.0:
            raise ValueError("veil_strength must be in [0,1]")
        if not 0.0 <= self.atmospheric_light <= 1.0:
            raise ValueError("atmospheric_light must be in [0,1]")


def _paint_gaussian_segment(alpha, p0, p1, sigma, opacity):
    """Max-composite a soft segment (p0 == p1 paints a round flake)."""
    h, w = alpha.shape
    margin = 3.0 * sigma + 1.0
    r0 = max(0, int(math.floor(min(p0[0], p1[0]) - margin)))
    r1 = min(h, int(math.ceil(max(p0[0], p1[0]) + margin)) + 1)
    c0 = max(0, int(math.floor(min(p0[1], p1[1]) - margin)))
    c1 = min(w, int(math.ceil(max(p0[1], p1[1]) + margin)) + 1)
    if r0 >= r1 or c0 >= c1:
        return
    rows, cols = np.meshgrid(np.arange(r0, r1, dtype=float),
                             np.arange(c0, c1, dtype=float), indexing="ij")
    dr, dc = p1[0] - p0[0], p1[1] - p0[1]
    seg2 = dr * dr + dc * dc
    if seg2 == 0.0:
        nr, nc = p0
    else:
        t = np.clip(((rows - p0[0]) * dr + (cols - p0[1]) * dc) / seg2, 0.0, 1.0)
        nr, nc = p0[0] + t * dr, p0[1] + t * dc
    d2 = (rows - nr) ** 2 + (cols - nc) ** 2
    contrib = opacity * np.exp(-d2 / (2.0 * sigma * sigma))
    np.maximum(alpha[r0:r1, c0:c1], contrib, out=alpha[r0:r1, c0:c1])


def synth_snow(clean, params: SnowParams = SnowParams()) -> Tensor:
    """Degrade a clean [0,1] image with snow particles and veiling."""
    data = clean.data if isinstance(clean, Tensor) else np.asarray(clean, float)
    if data.ndim != 3 or data.shape[0] != 3:
        raise ValueError(f"expected a 3xHxW image, got {data.shape}")
    h, w = data.shape[1:]
    rng = np.random.default_rng(params.rng_seed)
    alpha = np.zeros((h, w))

    for _ in range(params.streak_count):
        cr = rng.uniform(0, h)
        cc = rng.uniform(0, w)
        length = rng.uniform(*params.streak_length)
        theta = math.radians(rng.uniform(*params.streak_angle))
        width = rng.uniform(*params.streak_width)
        opacity = rng.uniform(*params.transparency)
        dr, dc = math.cos(theta), math.sin(theta)   # off vertical
        half = length / 2.0
        _paint_gaussian_segment(
            alpha,
            (cr - half * dr, cc - half * dc),
            (cr + half * dr, cc + half * dc),
            sigma=max(width / 2.0, 1e-6), opacity=opacity)

    for _ in range(params.flake_count):
        cr = rng.uniform(0, h)
        cc = rng.uniform(0, w)
        radius = rng.uniform(*params.flake_radius)
        opacity = rng.uniform(*params.transparency)
        _paint_gaussian_segment(alpha, (cr, cc), (cr, cc),
                                sigma=max(radius / 2.0, 1e-6), opacity=opacity)

    if params.blur_sigma > 0.0 and alpha.any():
        alpha = gaussian_filter(alpha, params.blur_sigma)
    alpha = np.clip(alpha, 0.0, 1.0)

    composited = data * (1.0 - alpha) + alpha          # white snow layer
    t = 1.0 - params.veil_strength
    out = composited * t + params.atmospheric_light * (1.0 - t)
    return Tensor(np.clip(out, 0.0, 1.0))
