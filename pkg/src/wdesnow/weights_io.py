"""Binary container for named weight tensors.

Layout, all integers little-endian:

    magic   4 bytes  b"WDSN"
    version u32      currently 1
    count   u32      number of tensors
    then per tensor, in order:
    namelen u16      byte length of the UTF-8 name
    name    namelen bytes
    rank    u8
    extents rank * u32
    payload prod(extents) * float64 little-endian

The round trip is bitwise: saving and reloading reproduces every payload
byte and keeps tensor order.  Files with a different magic or version are
rejected outright rather than guessed at.
"""

import struct

import numpy as np

from .network import ModelWeights, NetConfig

MAGIC = b"WDSN"
VERSION = 1

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U8 = struct.Struct("<B")


def _named_arrays(weights):
    """Accept ModelWeights, a name->array mapping, or (name, array) pairs."""
    if isinstance(weights, ModelWeights):
        return [(name, p.data) for name, p in weights.params.items()]
    if hasattr(weights, "items"):
        return [(name, np.asarray(v, dtype=np.float64))
                for name, v in weights.items()]
    return [(name, np.asarray(v, dtype=np.float64)) for name, v in weights]


def save_weights(weights, path):
    """Serialize named tensors to `path` in the container format above."""
    items = _named_arrays(weights)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(VERSION))
        fh.write(_U32.pack(len(items)))
        for name, data in items:
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"tensor name too long: {name[:40]}...")
            if data.ndim > 0xFF:
                raise ValueError(f"tensor rank {data.ndim} does not fit u8")
            fh.write(_U16.pack(len(encoded)))
            fh.write(encoded)
            fh.write(_U8.pack(data.ndim))
            for extent in data.shape:
                fh.write(_U32.pack(extent))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def _take(buf, offset, n, path):
    if offset + n > len(buf):
        raise ValueError(f"{path}: truncated weights file")
    return buf[offset:offset + n], offset + n


def load_weights(path) -> dict:
    """Read a container back into an ordered name -> float64 array dict."""
    with open(path, "rb") as fh:
        buf = fh.read()
    chunk, off = _take(buf, 0, 4, path)
    if chunk != MAGIC:
        raise ValueError(f"{path}: bad magic {bytes(chunk)!r}, "
                         f"expected {MAGIC!r}")
    chunk, off = _take(buf, off, 4, path)
    version = _U32.unpack(chunk)[0]
    if version != VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    chunk, off = _take(buf, off, 4, path)
    count = _U32.unpack(chunk)[0]
    out = {}
    for _ in range(count):
        chunk, off = _take(buf, off, 2, path)
        namelen = _U16.unpack(chunk)[0]
        chunk, off = _take(buf, off, namelen, path)
        name = bytes(chunk).decode("utf-8")
        chunk, off = _take(buf, off, 1, path)
        rank = _U8.unpack(chunk)[0]
        shape = []
        for _ in range(rank):
            chunk, off = _take(buf, off, 4, path)
            shape.append(_U32.unpack(chunk)[0])
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        chunk, off = _take(buf, off, 8 * size, path)
        if name in out:
            raise ValueError(f"{path}: duplicate tensor name {name!r}")
        out[name] = np.frombuffer(bytes(chunk), dtype="<f8").reshape(shape).copy()
    if off != len(buf):
        raise ValueError(f"{path}: {len(buf) - off} trailing bytes")
    return out


def infer_net_config(arrays) -> NetConfig:
    """Recover the architecture a saved parameter set was built for.

    Channel width, kernel size, mixture size, and dense depth are all
    visible in the tensor shapes/names; the toy divisor is folded into
    base_channels since only the quotient matters to the layout.
    """
    try:
        entry = arrays["dca.entry.weight"]
        refine = arrays["dca.dyn1.wg.refine.weight"]
    except KeyError as exc:
        raise ValueError(f"weights missing expected tensor {exc}") from None
    channels = entry.shape[0]
    kernel = entry.shape[2]
    n_kernels = refine.shape[0]
    dense = 0
    while f"dtcwe1.low.dense{dense + 1}.weight" in arrays:
        dense += 1
    if dense == 0:
        raise ValueError("weights contain no dense layers under dtcwe1.low")
    return NetConfig(base_channels=channels, n_parallel_kernels=n_kernels,
                     conv_kernel=kernel, rdn_layers=dense + 1,
                     toy_scale_factor=1)


def weights_from_arrays(arrays, config: NetConfig = None) -> ModelWeights:
    """Rebuild ModelWeights from a loaded name -> array dict."""
    if config is None:
        config = infer_net_config(arrays)
    weights = ModelWeights(config)
    for name, data in arrays.items():
        weights.add(name, np.array(data, dtype=np.float64))
    return weights
