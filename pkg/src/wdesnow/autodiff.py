"""Minimal dense-tensor arithmetic with reverse-mode automatic differentiation.

Everything is float64 numpy underneath.  Operations behave like plain numpy
functions until a Tape is active; with a tape open, each op appends a record
(output tensor, backward closure) and `backward` replays those records in
exact reverse execution order, accumulating gradients into `.grad` arrays.

Only what the restoration network needs is implemented: conv2d, relu,
softmax, pooling, elementwise arithmetic, concat/split, strided decimation
and zero-stuffed upsampling for the wavelet code, and an L1 loss.
"""

from __future__ import annotations

import numpy as np


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Tensor:
    """Dense rank-N array of 64-bit reals, the universal value type."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = _as_array(data)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    # convenience operators; all defer to the module-level ops
    def __add__(self, other):
        return add(self, other if isinstance(other, Tensor) else Tensor(other))

    def __sub__(self, other):
        return sub(self, other if isinstance(other, Tensor) else Tensor(other))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        return scale(self, float(other))

    def __neg__(self):
        return scale(self, -1.0)


class Parameter(Tensor):
    """Trainable tensor with a persistent gradient and a model-unique name."""

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(data)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.data.shape})"


class Tape:
    """Ordered record of executed differentiable operations.

    Use as a context manager; ops executed inside record themselves.  The
    record order is the execution order, so walking it backward is a valid
    reverse-topological traversal of the computation graph.
    """

    def __init__(self):
        self.records = []  # list of (output Tensor, backward fn)

    def __enter__(self):
        _tape_stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _tape_stack.pop()
        assert popped is self
        return False

    def backward(self, loss: Tensor):
        if loss.data.ndim != 0 and loss.data.size != 1:
            raise ValueError(
                f"backward requires a scalar loss, got shape {loss.data.shape}")
        loss.grad = np.ones_like(loss.data)
        for out, bwd in reversed(self.records):
            if out.grad is None:
                continue  # branch that never reached the loss
            bwd(out.grad)


_tape_stack: list[Tape] = []


def _current_tape() -> Tape | None:
    return _tape_stack[-1] if _tape_stack else None


def record(out: Tensor, bwd) -> Tensor:
    """Register a backward closure for `out` on the active tape, if any.

    Exposed so other modules (wavelets, priors) can define their own
    differentiable primitives against the same tape mechanism.
    """
    tape = _current_tape()
    if tape is not None:
        tape.records.append((out, bwd))
    return out


def backward(loss: Tensor):
    """Replay the active tape backward from a scalar loss."""
    tape = _current_tape()
    if tape is None:
        raise RuntimeError("backward called with no active Tape")
    tape.backward(loss)


# ---------------------------------------------------------------------------
# elementwise arithmetic

def _check_same_shape(a: Tensor, b: Tensor, opname: str):
    if a.data.shape != b.data.shape:
        raise ValueError(
            f"{opname}: shape mismatch {a.data.shape} vs {b.data.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    out = Tensor(a.data + b.data)

    def bwd(g):
        a.accumulate(g)
        b.accumulate(g)
    return record(out, bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")
    out = Tensor(a.data - b.data)

    def bwd(g):
        a.accumulate(g)
        b.accumulate(-g)
    return record(out, bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    out = Tensor(a.data * b.data)

    def bwd(g):
        a.accumulate(g * b.data)
        b.accumulate(g * a.data)
    return record(out, bwd)


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    out = Tensor(a.data * s)

    def bwd(g):
        a.accumulate(g * s)
    return record(out, bwd)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0  # subgradient at exactly 0 is 0
    out = Tensor(np.where(mask, a.data, 0.0))

    def bwd(g):
        a.accumulate(g * mask)
    return record(out, bwd)


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clip to [lo, hi]; gradient passes only through the interior."""
    inside = (a.data > lo) & (a.data < hi)
    out = Tensor(np.clip(a.data, lo, hi))

    def bwd(g):
        a.accumulate(g * inside)
    return record(out, bwd)


# ---------------------------------------------------------------------------
# reductions and shape ops

def tsum(a: Tensor) -> Tensor:
    out = Tensor(a.data.sum())

    def bwd(g):
        a.accumulate(np.full_like(a.data, float(g)))
    return record(out, bwd)


def tmean(a: Tensor) -> Tensor:
    n = a.data.size
    out = Tensor(a.data.mean())

    def bwd(g):
        a.accumulate(np.full_like(a.data, float(g) / n))
    return record(out, bwd)


def tabs(a: Tensor) -> Tensor:
    sign = np.sign(a.data)  # subgradient 0 at exactly 0
    out = Tensor(np.abs(a.data))

    def bwd(g):
        a.accumulate(g * sign)
    return record(out, bwd)


def softmax(a: Tensor, axis: int) -> Tensor:
    if not -a.data.ndim <= axis < a.data.ndim:
        raise ValueError(f"softmax: axis {axis} invalid for shape {a.data.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y)

    def bwd(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        a.accumulate(y * (g - dot))
    return record(out, bwd)


def global_avg_pool(a: Tensor) -> Tensor:
    """(C, H, W) -> (C,) per-channel spatial mean."""
    if a.data.ndim != 3:
        raise ValueError(f"global_avg_pool expects CHW, got shape {a.data.shape}")
    c, h, w = a.data.shape
    out = Tensor(a.data.mean(axis=(1, 2)))

    def bwd(g):
        a.accumulate(np.broadcast_to(g[:, None, None] / (h * w), a.data.shape).copy())
    return record(out, bwd)


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    if not tensors:
        raise ValueError("concat of empty list")
    ref = tensors[0].data.shape
    for t in tensors[1:]:
        sa = list(t.data.shape)
        sb = list(ref)
        sa[axis] = sb[axis] = -1
        if sa != sb:
            raise ValueError(
                f"concat: shape mismatch off axis {axis}: {t.data.shape} vs {ref}")
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            t.accumulate(g[tuple(sl)])
    return record(out, bwd)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice along one axis; backward scatters into place."""
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, start + length)
    sl = tuple(sl)
    out = Tensor(a.data[sl].copy())

    def bwd(g):
        full = np.zeros_like(a.data)
        full[sl] = g
        a.accumulate(full)
    return record(out, bwd)


def reshape(a: Tensor, shape) -> Tensor:
    """View the same elements under a different shape."""
    out = Tensor(a.data.reshape(shape))

    def bwd(g):
        a.accumulate(g.reshape(a.data.shape))
    return record(out, bwd)


def stack(tensors: list[Tensor]) -> Tensor:
    """Stack along a new leading axis."""
    ref = tensors[0].data.shape
    for t in tensors[1:]:
        if t.data.shape != ref:
            raise ValueError(f"stack: shape mismatch {t.data.shape} vs {ref}")
    out = Tensor(np.stack([t.data for t in tensors]))

    def bwd(g):
        for i, t in enumerate(tensors):
            t.accumulate(g[i])
    return record(out, bwd)


def weighted_sum(stacked: Tensor, pi: Tensor) -> Tensor:
    """Contract a length-N weight vector against the leading axis."""
    if pi.data.ndim != 1 or pi.data.shape[0] != stacked.data.shape[0]:
        raise ValueError(
            f"weighted_sum: weights {pi.data.shape} do not match leading "
            f"extent of {stacked.data.shape}")
    out = Tensor(np.tensordot(pi.data, stacked.data, axes=1))

    def bwd(g):
        pi.accumulate(np.tensordot(stacked.data, g, axes=g.ndim))
        stacked.accumulate(np.multiply.outer(pi.data, g))
    return record(out, bwd)


def decimate2(a: Tensor, phase_r: int, phase_c: int) -> Tensor:
    """Keep every second row/column of a CHW tensor, starting at the phases."""
    out = Tensor(a.data[:, phase_r::2, phase_c::2].copy())

    def bwd(g):
        full = np.zeros_like(a.data)
        full[:, phase_r::2, phase_c::2] = g
        a.accumulate(full)
    return record(out, bwd)


def roll2(a: Tensor, shift_r: int, shift_c: int) -> Tensor:
    """Circular shift of the spatial axes of a CHW tensor."""
    out = Tensor(np.roll(a.data, (shift_r, shift_c), axis=(1, 2)))

    def bwd(g):
        a.accumulate(np.roll(g, (-shift_r, -shift_c), axis=(1, 2)))
    return record(out, bwd)


# ---------------------------------------------------------------------------
# convolution

def conv2d(inp: Tensor, weight: Tensor, bias: Tensor,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of a CHW input with an OCKK kernel, zero padding.

    H' = floor((H + 2*padding - K)/stride) + 1, likewise W'.
    """
    if inp.data.ndim != 3 or weight.data.ndim != 4:
        raise ValueError(
            f"conv2d: need CHW input and OCKK weight, got {inp.data.shape} "
            f"and {weight.data.shape}")
    c, h, w = inp.data.shape
    o, wc, kh, kw = weight.data.shape
    if wc != c:
        raise ValueError(
            f"conv2d: weight expects {wc} input channels, input has {c} "
            f"(input {inp.data.shape}, weight {weight.data.shape})")
    if bias.data.shape != (o,):
        raise ValueError(
            f"conv2d: bias shape {bias.data.shape} does not match {o} outputs")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ValueError(
            f"conv2d: kernel {kh}x{kw} does not fit padded input "
            f"{h + 2 * padding}x{w + 2 * padding}")
    s = int(stride)
    if s < 1:
        raise ValueError("conv2d: stride must be positive")

    if padding:
        padded = np.pad(inp.data, ((0, 0), (padding, padding), (padding, padding)))
    else:
        padded = inp.data
    win = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw), axis=(1, 2))
    ho = (h + 2 * padding - kh) // s + 1
    wo = (w + 2 * padding - kw) // s + 1
    # materialize the patch matrix so both passes run as one BLAS matmul
    cols = np.ascontiguousarray(
        win[:, ::s, ::s].transpose(0, 3, 4, 1, 2)).reshape(c * kh * kw, ho * wo)
    wmat = weight.data.reshape(o, c * kh * kw)
    y = (wmat @ cols).reshape(o, ho, wo) + bias.data[:, None, None]
    out = Tensor(y)

    def bwd(g):
        gmat = g.reshape(o, ho * wo)
        weight.accumulate((gmat @ cols.T).reshape(weight.data.shape))
        bias.accumulate(g.sum(axis=(1, 2)))
        dcols = (wmat.T @ gmat).reshape(c, kh, kw, ho, wo)
        dpad = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                dpad[:, i:i + ho * s:s, j:j + wo * s:s] += dcols[:, i, j]
        if padding:
            inp.accumulate(dpad[:, padding:padding + h, padding:padding + w])
        else:
            inp.accumulate(dpad)
    return record(out, bwd)


# ---------------------------------------------------------------------------
# losses

def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    _check_same_shape(pred, target, "l1_loss")
    diff = pred.data - target.data
    sign = np.sign(diff)
    n = diff.size
    out = Tensor(np.abs(diff).mean())

    def bwd(g):
        pred.accumulate(float(g) * sign / n)
        target.accumulate(-float(g) * sign / n)
    return record(out, bwd)


# ---------------------------------------------------------------------------
# optimizer

def adam_step(params: list[Parameter], lr: float, state: dict,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> dict:
    """Standard Adam update with bias correction.

    `state` carries (m, v) per parameter name plus the step counter and
    persists across calls; pass {} for the first step.
    """
    t = state.get("t", 0) + 1
    state["t"] = t
    for p in params:
        if p.grad is None:
            raise ValueError(f"adam_step: parameter {p.name} has no gradient")
        m, v = state.get(p.name, (np.zeros_like(p.data), np.zeros_like(p.data)))
        m = beta1 * m + (1.0 - beta1) * p.grad
        v = beta2 * v + (1.0 - beta2) * (p.grad * p.grad)
        state[p.name] = (m, v)
        mhat = m / (1.0 - beta1 ** t)
        vhat = v / (1.0 - beta2 ** t)
        p.data -= lr * mhat / (np.sqrt(vhat) + eps)
    return state
