"""Three-stage restoration network: dynamic-convolution feature extraction,
two cascaded wavelet-domain enhancement stages, and a residual restorer.

Stage summary, for a working channel width C:

  dca     5x5 conv (3->C); three dynamic-conv layers (C->C), each mixing N
          parallel kernels with weights from its own generator; final relu.
  dtcwe   1-level complex wavelet split; each of the six directional
          subbands (real/imag stacked: 2C channels) runs through its own
          residual dense block, the lowpass through another (C channels);
          the second cascaded stage nests on the enhanced lowpass; inverse
          transform closes the sandwich.
  rlr     four dense blocks with relu (u1..u4), then two more: block 5 eats
          u4 + u2 (long skip from the second block), block 6 follows; the
          two outputs concat into a 5x5 fusion conv + relu, a 5x5
          fine-tune conv + relu (C->C), and a final 5x5 conv (C->3) whose
          output is added to the original image and clamped to [0,1].

Layer census for the defaults: dca 5 (entry + 3 dynamic + relu), dtcwe 8
per stage (7 dense blocks + the transform pair), rlr 9 named layers (6
blocks + fusion + fine-tune + output conv) plus the residual merge.

Every residual dense block: rdn_layers-1 dense 5x5 conv+relu layers (layer
k sees the block input concatenated with all previous outputs), a 1x1
fusion back to the block width, and the block-level residual add.
"""

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    Tensor, Parameter, add, clamp, concat, conv2d, global_avg_pool,
    narrow, relu, reshape, softmax, stack, weighted_sum,
)
from .wavelets import DIRECTIONS, ComplexSubband, Pyramid, dtcwt_forward, idtcwt

BAND_NAMES = {15.0: "p15", -15.0: "m15", 45.0: "p45",
              -45.0: "m45", 75.0: "p75", -75.0: "m75"}


@dataclass(frozen=True)
class NetConfig:
    base_channels: int = 64
    n_parallel_kernels: int = 4
    conv_kernel: int = 5
    rdn_layers: int = 4
    patch: int = 15            # window edge for the contradict-channel loss
    toy_scale_factor: int = 1  # divides base_channels for desk-scale runs

    def __post_init__(self):
        if self.toy_scale_factor < 1 or self.base_channels % self.toy_scale_factor:
            raise ValueError(
                f"base_channels {self.base_channels} not divisible by "
                f"toy_scale_factor {self.toy_scale_factor}")
        if self.n_parallel_kernels < 1:
            raise ValueError("n_parallel_kernels must be >= 1")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ValueError(f"conv_kernel must be odd, got {self.conv_kernel}")
        if self.rdn_layers < 2:
            raise ValueError("rdn_layers must be >= 2 (dense layers + fusion)")
        if self.patch < 1 or self.patch % 2 == 0:
            raise ValueError(f"patch must be odd, got {self.patch}")

    @property
    def channels(self) -> int:
        return self.base_channels // self.toy_scale_factor

    @property
    def dense_layers(self) -> int:
        return self.rdn_layers - 1


@dataclass
class ModelWeights:
    """Ordered, uniquely named parameter set for the whole network."""
    config: NetConfig
    params: dict = field(default_factory=dict)

    def add(self, name: str, data: np.ndarray) -> Parameter:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Parameter(data, name=name)
        self.params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self.params[name]

    def parameters(self) -> list:
        return list(self.params.values())

    def view(self, prefix: str) -> dict:
        """Sub-mapping with the `prefix.` stripped from the keys."""
        pre = prefix + "."
        out = {k[len(pre):]: v for k, v in self.params.items()
               if k.startswith(pre)}
        if not out:
            raise KeyError(f"no parameters under prefix {prefix!r}")
        return out

    def count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def zero_grads(self):
        for p in self.params.values():
            p.zero_grad()


# ---------------------------------------------------------------------------
# weight construction


def _conv_init(rng, out_ch, in_ch, k):
    bound = 1.0 / np.sqrt(in_ch * k * k)
    return rng.uniform(-bound, bound, size=(out_ch, in_ch, k, k))


def _add_conv(w, rng, name, out_ch, in_ch, k, zero=False):
    if zero:
        w.add(f"{name}.weight", np.zeros((out_ch, in_ch, k, k)))
    else:
        w.add(f"{name}.weight", _conv_init(rng, out_ch, in_ch, k))
    w.add(f"{name}.bias", np.zeros(out_ch))


def _add_rdn(w, rng, prefix, ch, cfg):
    k = cfg.conv_kernel
    for i in range(1, cfg.dense_layers + 1):
        _add_conv(w, rng, f"{prefix}.dense{i}", ch, i * ch, k)
    _add_conv(w, rng, f"{prefix}.fuse", ch, (cfg.dense_layers + 1) * ch, 1)


def init_weights(config: NetConfig, seed: int = 0) -> ModelWeights:
    """Build the full parameter set.

    Conv weights draw from uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)),
    biases start at zero, each generator's second conv starts at zero so
    kernel mixing begins uniform, and the final residual projection starts
    at zero so the untrained model is the identity map (training begins
    from the input rather than from random residual noise).
    """
    rng = np.random.default_rng(seed)
    w = ModelWeights(config=config)
    c, n, k = config.channels, config.n_parallel_kernels, config.conv_kernel

    _add_conv(w, rng, "dca.entry", c, 3, k)
    for i in (1, 2, 3):
        _add_conv(w, rng, f"dca.dyn{i}.wg.reduce", n, c, 1)
        _add_conv(w, rng, f"dca.dyn{i}.wg.refine", n, n, 1, zero=True)
        for j in range(n):
            _add_conv(w, rng, f"dca.dyn{i}.k{j}", c, c, k)

    for stage in ("dtcwe1", "dtcwe2"):
        for d in DIRECTIONS:
            _add_rdn(w, rng, f"{stage}.band_{BAND_NAMES[d]}", 2 * c, config)
        _add_rdn(w, rng, f"{stage}.low", c, config)

    for i in range(1, 7):
        _add_rdn(w, rng, f"rlr.block{i}", c, config)
    _add_conv(w, rng, "rlr.fusion", c, 2 * c, k)
    _add_conv(w, rng, "rlr.tune", c, c, k)
    _add_conv(w, rng, "rlr.out", 3, c, k, zero=True)
    return w


def parameter_count(config: NetConfig) -> int:
    """Closed-form size of the parameter set built by init_weights."""
    c, n, k = config.channels, config.n_parallel_kernels, config.conv_kernel
    d = config.dense_layers
    k2 = k * k

    def conv(out_ch, in_ch, kk):
        return out_ch * in_ch * kk * kk + out_ch

    def rdn(ch):
        dense = sum(conv(ch, i * ch, k) for i in range(1, d + 1))
        return dense + conv(ch, (d + 1) * ch, 1)

    dca = conv(c, 3, k) + 3 * (conv(n, c, 1) + conv(n, n, 1)
                               + n * conv(c, c, k))
    dtcwe = 6 * rdn(2 * c) + rdn(c)
    rlr = 6 * rdn(c) + conv(c, 2 * c, k) + conv(c, c, k) + conv(3, c, k)
    return dca + 2 * dtcwe + rlr


# ---------------------------------------------------------------------------
# forward passes


def wg_forward(features: Tensor, wg_params: dict) -> Tensor:
    """Pooled features -> probability vector over the parallel kernels."""
    rw = wg_params["reduce.weight"]
    c_expect = rw.data.shape[1]
    if features.data.shape[0] != c_expect:
        raise ValueError(
            f"weight generator expects {c_expect} channels, "
            f"got {features.data.shape[0]}")
    pooled = reshape(global_avg_pool(features), (c_expect, 1, 1))
    h = relu(conv2d(pooled, rw, wg_params["reduce.bias"]))
    o = conv2d(h, wg_params["refine.weight"], wg_params["refine.bias"])
    return softmax(reshape(o, (o.data.shape[0],)), axis=0)


def dynamic_conv_forward(inp: Tensor, kernels: list, pi: Tensor) -> Tensor:
    """Convolve once with the probability-weighted sum of N kernels."""
    if len(kernels) != pi.data.shape[0]:
        raise ValueError(
            f"{len(kernels)} kernels but {pi.data.shape[0]} mixing weights")
    shapes = {kw.data.shape for kw, _ in kernels}
    bshapes = {kb.data.shape for _, kb in kernels}
    if len(shapes) != 1 or len(bshapes) != 1:
        raise ValueError(f"kernel shapes disagree: {sorted(shapes)} {sorted(bshapes)}")
    w = weighted_sum(stack([kw for kw, _ in kernels]), pi)
    b = weighted_sum(stack([kb for _, kb in kernels]), pi)
    k = w.data.shape[-1]
    return conv2d(inp, w, b, padding=k // 2)


def dca_forward(image: Tensor, params: dict) -> Tensor:
    """Entry conv, three dynamically mixed convs, relu."""
    n = len({key.split(".")[1] for key in params if key.startswith("dyn1.k")})
    k = params["entry.weight"].data.shape[-1]
    f = conv2d(image, params["entry.weight"], params["entry.bias"],
               padding=k // 2)
    for i in (1, 2, 3):
        wg = {key[len(f"dyn{i}.wg."):]: v for key, v in params.items()
              if key.startswith(f"dyn{i}.wg.")}
        pi = wg_forward(f, wg)
        kernels = [(params[f"dyn{i}.k{j}.weight"], params[f"dyn{i}.k{j}.bias"])
                   for j in range(n)]
        f = dynamic_conv_forward(f, kernels, pi)
    return relu(f)


def rdn_forward(features: Tensor, params: dict) -> Tensor:
    """Residual dense block: growing concat of dense conv+relu layers,
    1x1 fusion, residual add."""
    outs = [features]
    i = 1
    while f"dense{i}.weight" in params:
        w = params[f"dense{i}.weight"]
        k = w.data.shape[-1]
        inp = outs[0] if len(outs) == 1 else concat(outs, axis=0)
        outs.append(relu(conv2d(inp, w, params[f"dense{i}.bias"],
                                padding=k // 2)))
        i += 1
    fused = conv2d(concat(outs, axis=0), params["fuse.weight"],
                   params["fuse.bias"])
    return add(fused, features)


def dtcwe_forward(features: Tensor, params: dict, inner=None) -> Tensor:
    """Wavelet-domain enhancement; `inner` (a callable) processes the
    enhanced lowpass when a second stage is nested."""
    c, h, w = features.data.shape
    if h % 2 or w % 2:
        raise ValueError(f"spatial extents {h}x{w} must be even")
    pyr = dtcwt_forward(features, 1)
    enhanced = []
    for sb in pyr.highpass[0]:
        view = {key[len(f"band_{BAND_NAMES[sb.direction]}."):]: v
                for key, v in params.items()
                if key.startswith(f"band_{BAND_NAMES[sb.direction]}.")}
        both = rdn_forward(concat([sb.real, sb.imag], axis=0), view)
        enhanced.append(ComplexSubband(sb.direction,
                                       narrow(both, 0, 0, c),
                                       narrow(both, 0, c, c)))
    low_view = {key[4:]: v for key, v in params.items() if key.startswith("low.")}
    low = rdn_forward(pyr.lowpass, low_view)
    if inner is not None:
        low = inner(low)
    return idtcwt(Pyramid(levels=1, lowpass=low, highpass=[enhanced]))


def rlr_forward(features: Tensor, original: Tensor, params: dict) -> Tensor:
    """Two-pass dense refinement ending in a clamped residual merge."""
    if features.data.shape[1:] != original.data.shape[1:]:
        raise ValueError(
            f"features {features.data.shape[1:]} and original "
            f"{original.data.shape[1:]} resolutions differ")

    def block(x, i):
        view = {key[len(f"block{i}."):]: v for key, v in params.items()
                if key.startswith(f"block{i}.")}
        return relu(rdn_forward(x, view))

    u = features
    unit1 = []
    for i in (1, 2, 3, 4):
        u = block(u, i)
        unit1.append(u)
    v1 = block(add(unit1[3], unit1[1]), 5)   # long skip from block 2
    v2 = block(v1, 6)
    k = params["fusion.weight"].data.shape[-1]
    fused = relu(conv2d(concat([v1, v2], axis=0), params["fusion.weight"],
                        params["fusion.bias"], padding=k // 2))
    tuned = relu(conv2d(fused, params["tune.weight"], params["tune.bias"],
                        padding=k // 2))
    residual = conv2d(tuned, params["out.weight"], params["out.bias"],
                      padding=k // 2)
    return clamp(add(original, residual), 0.0, 1.0)


def model_forward(image: Tensor, weights: ModelWeights) -> Tensor:
    """Full pipeline: features -> two nested enhancement stages -> restorer."""
    if not isinstance(image, Tensor):
        image = Tensor(image)
    if image.data.ndim != 3 or image.data.shape[0] != 3:
        raise ValueError(f"expected a 3xHxW image, got {image.data.shape}")
    h, w = image.data.shape[1:]
    if h % 4 or w % 4:
        raise ValueError(
            f"spatial extents {h}x{w} not divisible by 4; "
            f"pad by {(4 - h % 4) % 4} rows and {(4 - w % 4) % 4} columns")
    feats = dca_forward(image, weights.view("dca"))
    inner = lambda low: dtcwe_forward(low, weights.view("dtcwe2"))
    enhanced = dtcwe_forward(feats, weights.view("dtcwe1"), inner=inner)
    return rlr_forward(enhanced, image, weights.view("rlr"))
