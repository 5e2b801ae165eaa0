"""Patch-extremum channel operators and the contradict-channel loss.

Three maps over a 3-channel image, each reducing a centered square window:

  dark       min over the window of the per-pixel channel minimum
  contradict max over the window of the per-pixel channel minimum
  bright     max over the window of the per-pixel channel maximum

Windows clip at image borders; no padding values are injected.  The sliding
extrema run as two separable monotone-deque passes (along rows, then along
columns), O(HW) per map, and track the source coordinate of every output
extremum so the loss can backpropagate through the min/max chain.  Ties
resolve to the first candidate in row-major order, which keeps gradients
deterministic.  A direct patch-scan reference implementation is exported
alongside for oracle testing.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, record, sub, tabs, tmean, mul

KINDS = ("dark", "contradict", "bright")


@dataclass(frozen=True)
class PatchSpec:
    """Centered square window; the edge length must be odd."""
    size: int = 15

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 1 or self.size % 2 == 0:
            raise ValueError(
                f"patch size must be an odd positive int, got {self.size!r}")

    @property
    def half(self) -> int:
        return self.size // 2


@dataclass
class ChannelMap:
    """Single-channel extremum map, same spatial extent as its source."""
    kind: str
    patch: PatchSpec
    values: Tensor  # 1HW


def _slide_line(vals, half, use_max):
    """Sliding clipped-window extremum along one line.

    Returns (extrema, source indices).  The deque holds candidate indices
    with monotone values; comparisons are strict so an equal later value
    never displaces an earlier one (first-occurrence tie rule).
    """
    n = len(vals)
    out_v = np.empty(n)
    out_i = np.empty(n, dtype=np.intp)
    dq = deque()
    for j in range(n + half):
        if j < n:
            v = vals[j]
            if use_max:
                while dq and vals[dq[-1]] < v:
                    dq.pop()
            else:
                while dq and vals[dq[-1]] > v:
                    dq.pop()
            dq.append(j)
        c = j - half
        if c >= 0:
            lo = c - half
            while dq[0] < lo:
                dq.popleft()
            out_v[c] = vals[dq[0]]
            out_i[c] = dq[0]
    return out_v, out_i


def _extreme_2d(field, half, use_max):
    """Two-pass separable window extremum with source tracking.

    Pass 1 slides along each row, pass 2 along each column of the row
    results.  Composing the two first-occurrence rules yields the row-major
    first occurrence over the full window: the column pass picks the first
    qualifying row, and within that row the row pass already picked the
    first qualifying column.
    """
    h, w = field.shape
    v1 = np.empty_like(field)
    c1 = np.empty((h, w), dtype=np.intp)
    for r in range(h):
        v1[r], c1[r] = _slide_line(field[r], half, use_max)
    v2 = np.empty_like(field)
    r2 = np.empty((h, w), dtype=np.intp)
    for c in range(w):
        v2[:, c], r2[:, c] = _slide_line(v1[:, c], half, use_max)
    src_r = r2
    src_c = c1[r2, np.arange(w)]
    return v2, src_r, src_c


def _channel_extreme(data, use_max):
    """Per-pixel extremum over the channel axis with its channel index."""
    idx = np.argmax(data, axis=0) if use_max else np.argmin(data, axis=0)
    field = np.take_along_axis(data, idx[None], axis=0)[0]
    return field, idx


def _validate_image(data, what="image"):
    if data.ndim != 3 or data.shape[0] != 3:
        raise ValueError(f"{what} must be 3xHxW, got shape {data.shape}")


def _prior_tensor(image: Tensor, kind: str, patch: PatchSpec) -> Tensor:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    data = image.data
    _validate_image(data)
    field, chan = _channel_extreme(data, use_max=(kind == "bright"))
    vals, src_r, src_c = _extreme_2d(field, patch.half, use_max=(kind != "dark"))
    out = Tensor(vals[None])

    def bwd(g):
        gimg = np.zeros_like(data)
        src_ch = chan[src_r, src_c]
        np.add.at(gimg, (src_ch, src_r, src_c), g[0])
        image.accumulate(gimg)
    return record(out, bwd)


def channel_prior_map(image, kind: str, patch: PatchSpec = PatchSpec()) -> ChannelMap:
    """Compute one extremum map; differentiable with respect to the image."""
    if not isinstance(image, Tensor):
        image = Tensor(image)
    return ChannelMap(kind=kind, patch=patch,
                      values=_prior_tensor(image, kind, patch))


def channel_prior_map_reference(image, kind: str,
                                patch: PatchSpec = PatchSpec()) -> ChannelMap:
    """Direct patch-scan oracle: reduce every clipped window explicitly.

    Quadratic in the window size; exists to pin down the deque path in
    tests (the two must agree bit for bit, both being pure selections).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    data = image.data if isinstance(image, Tensor) else np.asarray(image, float)
    _validate_image(data)
    field = data.max(axis=0) if kind == "bright" else data.min(axis=0)
    h, w = field.shape
    half = patch.half
    out = np.empty((h, w))
    for r in range(h):
        r0, r1 = max(0, r - half), min(h, r + half + 1)
        for c in range(w):
            c0, c1 = max(0, c - half), min(w, c + half + 1)
            win = field[r0:r1, c0:c1]
            out[r, c] = win.min() if kind == "dark" else win.max()
    return ChannelMap(kind=kind, patch=patch, values=Tensor(out[None]))


def ccl_loss(restored, clean, patch: PatchSpec = PatchSpec(),
             norm: str = "l1") -> Tensor:
    """Distance between the contradict maps of two images.

    Mean absolute difference by default; norm="l2" switches to mean squared
    difference.  Differentiable: each window extremum routes its gradient
    to the source pixel and channel that produced it.
    """
    if not isinstance(restored, Tensor):
        restored = Tensor(restored)
    if not isinstance(clean, Tensor):
        clean = Tensor(clean)
    if restored.data.shape != clean.data.shape:
        raise ValueError(
            f"shape mismatch: restored {restored.data.shape} "
            f"vs clean {clean.data.shape}")
    diff = sub(_prior_tensor(restored, "contradict", patch),
               _prior_tensor(clean, "contradict", patch))
    if norm == "l1":
        return tmean(tabs(diff))
    if norm == "l2":
        return tmean(mul(diff, diff))
    raise ValueError(f"norm must be 'l1' or 'l2', got {norm!r}")


@dataclass
class ChannelContrastReport:
    """Mean of each extremum map for a degraded/clean image pair."""
    snowy: dict
    clean: dict


def channel_contrast_report(snowy, clean,
                            patch: PatchSpec = PatchSpec()) -> ChannelContrastReport:
    """Summary statistics of all three maps for both images."""
    def stats(img):
        return {k: float(channel_prior_map(img, k, patch).values.data.mean())
                for k in KINDS}
    return ChannelContrastReport(snowy=stats(snowy), clean=stats(clean))
