"""PNG decode/encode helpers and the pad-to-multiple-of-4 convention.

Images travel as CHW float64 tensors in [0,1].  Decoding maps 8-bit values
through v/255; encoding clamps to [0,1], scales by 255 and rounds half to
even before casting back to 8-bit.  The wavelet stages need spatial extents
divisible by 4, so inputs are reflect-padded up front and outputs cropped
back to the original size.
"""

import numpy as np
from PIL import Image

from .autodiff import Tensor


def decode_png(path) -> Tensor:
    """Read an image file into a 3HW tensor in [0,1]."""
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except Exception as exc:
        raise ValueError(f"cannot decode image {path}: {exc}") from exc
    return Tensor(arr.transpose(2, 0, 1))


def encode_png(image, path):
    """Write a CHW tensor (any channel count collapses to RGB/gray rules)."""
    data = image.data if isinstance(image, Tensor) else np.asarray(image, float)
    if data.ndim != 3:
        raise ValueError(f"expected CHW, got shape {data.shape}")
    quant = np.rint(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
    if quant.shape[0] == 1:
        img = Image.fromarray(quant[0], mode="L")
    elif quant.shape[0] == 3:
        img = Image.fromarray(quant.transpose(1, 2, 0), mode="RGB")
    else:
        raise ValueError(f"cannot encode {quant.shape[0]}-channel image")
    img.save(path, format="PNG")


def pad_to_multiple(image, multiple: int = 4):
    """Reflect-pad the bottom/right edges so H and W divide `multiple`.

    Returns (padded tensor, original (H, W)) so the caller can crop back.
    """
    data = image.data if isinstance(image, Tensor) else np.asarray(image, float)
    h, w = data.shape[1:]
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph or pw:
        if h < 2 or w < 2:
            raise ValueError(f"image {h}x{w} too small to reflect-pad")
        data = np.pad(data, ((0, 0), (0, ph), (0, pw)), mode="reflect")
    return Tensor(data), (h, w)


def crop_to(image, size):
    """Undo pad_to_multiple: crop back to the recorded (H, W)."""
    h, w = size
    data = image.data if isinstance(image, Tensor) else np.asarray(image, float)
    return Tensor(data[:, :h, :w].copy())
