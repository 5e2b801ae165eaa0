"""2-D dual-tree complex wavelet transform, its inverse, and a DWT baseline.

All filtering is periodic (circular) along the spatial axes, which makes the
critically sampled analysis/synthesis pairs reconstruct exactly.  Level 1
uses the biorthogonal 9/7 pair at full rate; the two trees are the even and
odd sampling phases of the same filtered image, so tree B is the input
delayed by one sample.  Levels >= 2 apply the quarter-shift orthonormal
pairs to a single shared lowpass chain: tree A's lowpass is the one carried
forward, which keeps the pyramid critically sampled (lowpass C x H/2^L x
W/2^L), and the inverse reconstructs through tree A's filters alone --
exact, because each tree is individually a perfect-reconstruction bank.

Each level yields six complex directional subbands (with the lowpass, seven
distinct frequency bands).  The quad-to-complex pairing that assigns tree
combinations to the six orientations is fixed by the tables below and
validated by the oriented-grating tests, not assumed.

Everything here runs through the autodiff tape, so the transforms are
differentiable building blocks for the network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .autodiff import Tensor, record
from . import filters as F

SQRT_HALF = np.sqrt(0.5)

# Orientation labels, degrees CCW from the horizontal axis of the wave
# vector that excites the band (see oriented_grating).
DIRECTIONS = (15.0, -15.0, 45.0, -45.0, 75.0, -75.0)

# (product, z-slot) -> direction, measured by the grating experiment.
# Products are keyed by which axes got the highpass: "lh" = highpass along
# width, "hl" = highpass along height, "hh" = both.  Slots are the two
# complex combinations from the quad pairing below.
LEVEL1_ORIENT = {("lh", 2): 15.0, ("lh", 1): -15.0,
                 ("hh", 2): 45.0, ("hh", 1): -45.0,
                 ("hl", 2): 75.0, ("hl", 1): -75.0}
QSHIFT_ORIENT = {("lh", 1): 15.0, ("lh", 2): -15.0,
                 ("hh", 2): 45.0, ("hh", 1): -45.0,
                 ("hl", 1): 75.0, ("hl", 2): -75.0}


@dataclass
class ComplexSubband:
    """One directional subband: separate real and imaginary planes."""
    direction: float
    real: Tensor
    imag: Tensor

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.real.data ** 2 + self.imag.data ** 2)

    def energy(self) -> float:
        return float((self.real.data ** 2 + self.imag.data ** 2).sum())


@dataclass
class Pyramid:
    """Multi-level decomposition: one real lowpass + six subbands per level."""
    levels: int
    lowpass: Tensor
    highpass: list  # per level: list of six ComplexSubband

    def band(self, level: int, direction: float) -> ComplexSubband:
        for sb in self.highpass[level]:
            if sb.direction == direction:
                return sb
        raise KeyError(f"no subband with direction {direction}")


# ---------------------------------------------------------------------------
# differentiable periodic-filtering primitives

def _corr(data: np.ndarray, taps: np.ndarray, center: int, axis: int) -> np.ndarray:
    """Circular correlation: y[i] = sum_m taps[m] * x[i + m - center]."""
    return correlate1d(data, taps, axis=axis, mode="wrap",
                       origin=center - (len(taps) // 2))


def pfilt(x: Tensor, taps: np.ndarray, center: int, axis: int,
          conv: bool = False) -> Tensor:
    """Periodic correlation along a spatial axis of a CHW tensor.

    conv=True runs the filter as a convolution instead (taps reversed,
    center mirrored), which is what synthesis banks want.  The backward pass
    is the adjoint, i.e. the same filter in the opposite sense.
    """
    if conv:
        taps, center = taps[::-1], len(taps) - 1 - center
    out = Tensor(_corr(x.data, taps, center, axis))
    rtaps, rcenter = taps[::-1], len(taps) - 1 - center

    def bwd(g):
        x.accumulate(_corr(g, rtaps, rcenter, axis))
    return record(out, bwd)


def down_axis(x: Tensor, axis: int, phase: int) -> Tensor:
    """Keep every second sample along one axis, starting at `phase`."""
    sl = [slice(None)] * x.data.ndim
    sl[axis] = slice(phase, None, 2)
    sl = tuple(sl)
    out = Tensor(x.data[sl].copy())

    def bwd(g):
        full = np.zeros_like(x.data)
        full[sl] = g
        x.accumulate(full)
    return record(out, bwd)


def up_axis(x: Tensor, axis: int, phase: int, n: int) -> Tensor:
    """Zero-stuff along one axis to extent n, writing at phase offsets."""
    shape = list(x.data.shape)
    shape[axis] = n
    data = np.zeros(shape)
    sl = [slice(None)] * x.data.ndim
    sl[axis] = slice(phase, None, 2)
    sl = tuple(sl)
    data[sl] = x.data
    out = Tensor(data)

    def bwd(g):
        x.accumulate(g[sl])
    return record(out, bwd)


def roll_axis(x: Tensor, axis: int, shift: int) -> Tensor:
    """Circular shift along one axis."""
    out = Tensor(np.roll(x.data, shift, axis=axis))

    def bwd(g):
        x.accumulate(np.roll(g, -shift, axis=axis))
    return record(out, bwd)


def _lin(*pairs) -> Tensor:
    """Differentiable linear combination sum(coef * tensor)."""
    out = Tensor(sum(c * t.data for c, t in pairs))

    def bwd(g):
        for c, t in pairs:
            t.accumulate(c * g)
    return record(out, bwd)


# ---------------------------------------------------------------------------
# quad <-> complex pairing

def _q2c(a: Tensor, b: Tensor, c: Tensor, d: Tensor):
    """Four tree-combination images -> the two complex subbands.

    With p = (a + jb)/sqrt2 and q = (d - jc)/sqrt2, the pair is
    z1 = p - q and z2 = p + q; returned as (re1, im1, re2, im2).
    """
    s = SQRT_HALF
    re1 = _lin((s, a), (-s, d))
    im1 = _lin((s, b), (s, c))
    re2 = _lin((s, a), (s, d))
    im2 = _lin((s, b), (-s, c))
    return re1, im1, re2, im2


def _c2q_a(re1: Tensor, im1: Tensor, re2: Tensor, im2: Tensor) -> Tensor:
    """Recover the tree-AA quad from a complex subband pair.

    Inverse of _q2c restricted to the a plane: a = (Re z1 + Re z2)/sqrt2.
    The imaginary planes carry the other trees and do not enter tree-A
    synthesis.
    """
    return _lin((SQRT_HALF, re1), (SQRT_HALF, re2))


# ---------------------------------------------------------------------------
# forward transform

def _check_divisible(shape, levels: int):
    c, h, w = shape
    div = 1 << levels
    if h % div or w % div:
        need_h = (div - h % div) % div
        need_w = (div - w % div) % div
        raise ValueError(
            f"spatial extents {h}x{w} not divisible by 2^{levels}; "
            f"pad by {need_h} rows and {need_w} columns")


def _level1_analysis(x: Tensor):
    """Full-rate biorthogonal filtering; returns lowpass + six subbands."""
    lo_r = pfilt(x, F.LEVEL1_ANA_LO, F.LEVEL1_ANA_LO_CENTER, axis=1)
    hi_r = pfilt(x, F.LEVEL1_ANA_HI, F.LEVEL1_ANA_HI_CENTER, axis=1)
    prods = {
        "ll": pfilt(lo_r, F.LEVEL1_ANA_LO, F.LEVEL1_ANA_LO_CENTER, axis=2),
        "lh": pfilt(lo_r, F.LEVEL1_ANA_HI, F.LEVEL1_ANA_HI_CENTER, axis=2),
        "hl": pfilt(hi_r, F.LEVEL1_ANA_LO, F.LEVEL1_ANA_LO_CENTER, axis=2),
        "hh": pfilt(hi_r, F.LEVEL1_ANA_HI, F.LEVEL1_ANA_HI_CENTER, axis=2),
    }
    lowpass = down_axis(down_axis(prods["ll"], 1, 0), 2, 0)
    bands = {}
    for key in ("lh", "hl", "hh"):
        y = prods[key]
        # tree A = even phase, tree B = odd phase, on both axes
        a = down_axis(down_axis(y, 1, 0), 2, 0)
        b = down_axis(down_axis(y, 1, 0), 2, 1)
        c = down_axis(down_axis(y, 1, 1), 2, 0)
        d = down_axis(down_axis(y, 1, 1), 2, 1)
        bands[key] = _q2c(a, b, c, d)
    return lowpass, bands


def _qshift_branch(x: Tensor, taps: np.ndarray, axis: int, offset: int) -> Tensor:
    """One quarter-shift filtering: optional tree-B input offset, then
    periodic correlation and phase-0 decimation."""
    if offset:
        x = roll_axis(x, axis, -offset)
    y = pfilt(x, taps, F.QSHIFT_CENTER, axis)
    return down_axis(y, axis, 0)


def _qshift_analysis(x: Tensor):
    """One quarter-shift level on the shared lowpass; tree A carries on."""
    fb = F
    row = {  # filtered along height (axis 1), keyed by (band, tree)
        ("lo", "a"): _qshift_branch(x, fb.QSHIFT_LO_A, 1, 0),
        ("lo", "b"): _qshift_branch(x, fb.QSHIFT_LO_B, 1, fb.QSHIFT_TREE_B_OFFSET_LO),
        ("hi", "a"): _qshift_branch(x, fb.QSHIFT_HI_A, 1, 0),
        ("hi", "b"): _qshift_branch(x, fb.QSHIFT_HI_B, 1, fb.QSHIFT_TREE_B_OFFSET_HI),
    }

    def col(src, band, tree):
        taps = {("lo", "a"): fb.QSHIFT_LO_A, ("lo", "b"): fb.QSHIFT_LO_B,
                ("hi", "a"): fb.QSHIFT_HI_A, ("hi", "b"): fb.QSHIFT_HI_B}[(band, tree)]
        off = 0
        if tree == "b":
            off = (fb.QSHIFT_TREE_B_OFFSET_LO if band == "lo"
                   else fb.QSHIFT_TREE_B_OFFSET_HI)
        return _qshift_branch(src, taps, 2, off)

    lowpass = col(row[("lo", "a")], "lo", "a")
    bands = {}
    for key, rband, cband in (("lh", "lo", "hi"), ("hl", "hi", "lo"),
                              ("hh", "hi", "hi")):
        a = col(row[(rband, "a")], cband, "a")
        b = col(row[(rband, "a")], cband, "b")
        c = col(row[(rband, "b")], cband, "a")
        d = col(row[(rband, "b")], cband, "b")
        bands[key] = _q2c(a, b, c, d)
    return lowpass, bands


def _bands_to_subbands(bands: dict, orient: dict) -> list:
    out = []
    for direction in DIRECTIONS:
        for (key, slot), d in orient.items():
            if d == direction:
                re1, im1, re2, im2 = bands[key]
                if slot == 1:
                    out.append(ComplexSubband(direction, re1, im1))
                else:
                    out.append(ComplexSubband(direction, re2, im2))
    return out


def dtcwt_forward(image: Tensor, levels: int) -> Pyramid:
    """Multi-level 2-D DTCWT of a CHW tensor.

    Level 1 is the biorthogonal pair; deeper levels use the quarter-shift
    pairs on the shared lowpass.  Applied independently per channel (the
    channel axis rides along).
    """
    if not isinstance(image, Tensor):
        image = Tensor(image)
    if image.data.ndim != 3:
        raise ValueError(f"dtcwt_forward expects CHW, got {image.data.shape}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    _check_divisible(image.data.shape, levels)

    highpass = []
    lowpass, bands = _level1_analysis(image)
    highpass.append(_bands_to_subbands(bands, LEVEL1_ORIENT))
    for _ in range(1, levels):
        lowpass, bands = _qshift_analysis(lowpass)
        highpass.append(_bands_to_subbands(bands, QSHIFT_ORIENT))
    return Pyramid(levels=levels, lowpass=lowpass, highpass=highpass)


# ---------------------------------------------------------------------------
# inverse transform

def _subbands_to_bands(subbands: list, orient: dict) -> dict:
    if len(subbands) != 6:
        raise ValueError(f"level must hold exactly 6 subbands, got {len(subbands)}")
    by_dir = {sb.direction: sb for sb in subbands}
    if set(by_dir) != set(DIRECTIONS):
        raise ValueError(f"subband directions {sorted(by_dir)} != {sorted(DIRECTIONS)}")
    shapes = {sb.real.data.shape for sb in subbands}
    shapes |= {sb.imag.data.shape for sb in subbands}
    if len(shapes) != 1:
        raise ValueError(f"subband shapes disagree: {sorted(shapes)}")
    bands = {}
    for key in ("lh", "hl", "hh"):
        s1 = by_dir[orient[(key, 1)]]
        s2 = by_dir[orient[(key, 2)]]
        bands[key] = (s1.real, s1.imag, s2.real, s2.imag)
    return bands


def _level1_synthesis(lowpass: Tensor, bands: dict) -> Tensor:
    a_lh = _c2q_a(*bands["lh"])
    a_hl = _c2q_a(*bands["hl"])
    a_hh = _c2q_a(*bands["hh"])
    h = lowpass.data.shape[1] * 2
    w = lowpass.data.shape[2] * 2

    def syn(band, taps, center, axis, n):
        return pfilt(up_axis(band, axis, 0, n), taps, center, axis, conv=True)

    lo_r = _lin((1.0, syn(lowpass, F.LEVEL1_SYN_LO, F.LEVEL1_SYN_LO_CENTER, 2, w)),
                (1.0, syn(a_lh, F.LEVEL1_SYN_HI, F.LEVEL1_SYN_HI_CENTER, 2, w)))
    hi_r = _lin((1.0, syn(a_hl, F.LEVEL1_SYN_LO, F.LEVEL1_SYN_LO_CENTER, 2, w)),
                (1.0, syn(a_hh, F.LEVEL1_SYN_HI, F.LEVEL1_SYN_HI_CENTER, 2, w)))
    return _lin((1.0, syn(lo_r, F.LEVEL1_SYN_LO, F.LEVEL1_SYN_LO_CENTER, 1, h)),
                (1.0, syn(hi_r, F.LEVEL1_SYN_HI, F.LEVEL1_SYN_HI_CENTER, 1, h)))


def _qshift_synthesis(lowpass: Tensor, bands: dict) -> Tensor:
    a_lh = _c2q_a(*bands["lh"])
    a_hl = _c2q_a(*bands["hl"])
    a_hh = _c2q_a(*bands["hh"])
    h = lowpass.data.shape[1] * 2
    w = lowpass.data.shape[2] * 2

    def syn(band, taps, axis, n):
        return pfilt(up_axis(band, axis, 0, n), taps, F.QSHIFT_CENTER, axis, conv=True)

    lo_r = _lin((1.0, syn(lowpass, F.QSHIFT_LO_A, 2, w)),
                (1.0, syn(a_lh, F.QSHIFT_HI_A, 2, w)))
    hi_r = _lin((1.0, syn(a_hl, F.QSHIFT_LO_A, 2, w)),
                (1.0, syn(a_hh, F.QSHIFT_HI_A, 2, w)))
    return _lin((1.0, syn(lo_r, F.QSHIFT_LO_A, 1, h)),
                (1.0, syn(hi_r, F.QSHIFT_HI_A, 1, h)))


def idtcwt(pyramid: Pyramid) -> Tensor:
    """Reconstruct the image; exact inverse of dtcwt_forward."""
    if pyramid.levels != len(pyramid.highpass):
        raise ValueError(
            f"pyramid says {pyramid.levels} levels but holds "
            f"{len(pyramid.highpass)}")
    x = pyramid.lowpass
    for level in range(pyramid.levels - 1, -1, -1):
        orient = LEVEL1_ORIENT if level == 0 else QSHIFT_ORIENT
        bands = _subbands_to_bands(pyramid.highpass[level], orient)
        got = bands["lh"][0].data.shape[1:]
        if got != tuple(x.data.shape[1:]):
            raise ValueError(
                f"level {level} subbands are {got}, expected "
                f"{tuple(x.data.shape[1:])} to mate with the lowpass")
        if level == 0:
            x = _level1_synthesis(x, bands)
        else:
            x = _qshift_synthesis(x, bands)
    return x


# ---------------------------------------------------------------------------
# separable real DWT baseline (Daubechies 4-tap, periodic)

def dwt2(image: Tensor, levels: int):
    """Separable orthonormal DWT: returns (LL, [per level {lh, hl, hh}]).

    The detail list is ordered coarsest level last, matching dtcwt_forward's
    level ordering (index 0 = finest).
    """
    if not isinstance(image, Tensor):
        image = Tensor(image)
    if image.data.ndim != 3:
        raise ValueError(f"dwt2 expects CHW, got {image.data.shape}")
    _check_divisible(image.data.shape, levels)

    def analyze(x):
        lo_r = down_axis(pfilt(x, F.DB2_LO, F.DB2_CENTER, 1), 1, 0)
        hi_r = down_axis(pfilt(x, F.DB2_HI, F.DB2_CENTER, 1), 1, 0)
        ll = down_axis(pfilt(lo_r, F.DB2_LO, F.DB2_CENTER, 2), 2, 0)
        lh = down_axis(pfilt(lo_r, F.DB2_HI, F.DB2_CENTER, 2), 2, 0)
        hl = down_axis(pfilt(hi_r, F.DB2_LO, F.DB2_CENTER, 2), 2, 0)
        hh = down_axis(pfilt(hi_r, F.DB2_HI, F.DB2_CENTER, 2), 2, 0)
        return ll, {"lh": lh, "hl": hl, "hh": hh}

    details = []
    ll = image
    for _ in range(levels):
        ll, det = analyze(ll)
        details.append(det)
    return ll, details


def idwt2(ll: Tensor, details: list) -> Tensor:
    """Inverse of dwt2 (orthonormal adjoint synthesis)."""
    def syn(band, taps, axis, n):
        return pfilt(up_axis(band, axis, 0, n), taps, F.DB2_CENTER, axis, conv=True)

    x = ll
    for det in reversed(details):
        h = x.data.shape[1] * 2
        w = x.data.shape[2] * 2
        lo_r = _lin((1.0, syn(x, F.DB2_LO, 2, w)),
                    (1.0, syn(det["lh"], F.DB2_HI, 2, w)))
        hi_r = _lin((1.0, syn(det["hl"], F.DB2_LO, 2, w)),
                    (1.0, syn(det["hh"], F.DB2_HI, 2, w)))
        x = _lin((1.0, syn(lo_r, F.DB2_LO, 1, h)),
                 (1.0, syn(hi_r, F.DB2_HI, 1, h)))
    return x


# ---------------------------------------------------------------------------
# analysis utilities

def oriented_grating(theta_deg: float, size: int, freq: float) -> np.ndarray:
    """Sinusoidal grating whose wave vector sits theta degrees CCW from the
    horizontal axis (image rows count downward, so the row frequency enters
    with a minus sign).  freq is in cycles per sample."""
    th = np.deg2rad(theta_deg)
    rows, cols = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    fx, fy = freq * np.cos(th), freq * np.sin(th)
    return np.cos(2.0 * np.pi * (fx * cols - fy * rows))


def subband_energies(pyramid: Pyramid) -> np.ndarray:
    """Squared-magnitude energy of every directional subband, level-major."""
    return np.array([sb.energy() for level in pyramid.highpass for sb in level])


def dwt_energies(details: list) -> np.ndarray:
    """Coefficient energy of every DWT detail band, level-major."""
    return np.array([float((det[k].data ** 2).sum())
                     for det in details for k in ("lh", "hl", "hh")])


def shift_invariance_score(transform: str, image, shift: tuple,
                           levels: int = 1) -> float:
    """Relative change of the per-subband energy vector under a circular
    shift: ||E(x) - E(shifted x)|| / ||E(x)||.  Lower is more invariant.

    `transform` selects "dtcwt" (complex magnitude energies) or "dwt"
    (real coefficient energies).  Only the directional subbands enter the
    vector; the lowpass is a residue band, not a directional subband.
    """
    data = image.data if isinstance(image, Tensor) else np.asarray(image, float)
    if data.ndim == 2:
        data = data[None]
    dy, dx = shift
    shifted = np.roll(data, (dy, dx), axis=(1, 2))
    if transform == "dtcwt":
        e0 = subband_energies(dtcwt_forward(Tensor(data), levels))
        e1 = subband_energies(dtcwt_forward(Tensor(shifted), levels))
    elif transform == "dwt":
        _, d0 = dwt2(Tensor(data), levels)
        _, d1 = dwt2(Tensor(shifted), levels)
        e0, e1 = dwt_energies(d0), dwt_energies(d1)
    else:
        raise ValueError(f"unknown transform {transform!r}")
    denom = np.linalg.norm(e0)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(e1 - e0) / denom)
