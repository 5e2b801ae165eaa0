"""Tests for the reverse-mode tape and its operator set.

Expected values come from three kinds of oracle: hand-computable closed
forms, independent brute-force reimplementations (the six-nested-loop
convolution), and central finite differences via tests/_fd.py.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wdesnow.autodiff import (
    Tensor, Parameter, Tape, backward, record,
    add, sub, mul, scale, relu, clamp, tsum, tmean, tabs,
    softmax, global_avg_pool, concat, narrow, stack, weighted_sum,
    decimate2, roll2, conv2d, l1_loss, adam_step,
)
from _fd import fd_check


def conv2d_reference(inp, weight, bias, stride, padding):
    """Independent six-nested-loop convolution oracle (cross-correlation)."""
    c, h, w = inp.shape
    o, c2, kh, kw = weight.shape
    assert c == c2
    p = np.zeros((c, h + 2 * padding, w + 2 * padding))
    p[:, padding:padding + h, padding:padding + w] = inp
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((o, oh, ow))
    for oc in range(o):
        for i in range(oh):
            for j in range(ow):
                acc = bias[oc]
                for ic in range(c):
                    for u in range(kh):
                        for v in range(kw):
                            acc += p[ic, i * stride + u, j * stride + v] * weight[oc, ic, u, v]
                out[oc, i, j] = acc
    return out


# ---------------------------------------------------------------------------
# forward values


def test_elementwise_forward():
    a = Tensor(np.array([1.0, -2.0, 3.0]))
    b = Tensor(np.array([4.0, 5.0, -6.0]))
    assert np.array_equal(add(a, b).data, [5.0, 3.0, -3.0])
    assert np.array_equal(sub(a, b).data, [-3.0, -7.0, 9.0])
    assert np.array_equal(mul(a, b).data, [4.0, -10.0, -18.0])
    assert np.array_equal(scale(a, -2.0).data, [-2.0, 4.0, -6.0])
    assert np.array_equal(relu(a).data, [1.0, 0.0, 3.0])
    assert np.array_equal(tabs(a).data, [1.0, 2.0, 3.0])
    assert np.array_equal(clamp(a, 0.0, 2.0).data, [1.0, 0.0, 2.0])
    assert tsum(a).data == pytest.approx(2.0)
    assert tmean(a).data == pytest.approx(2.0 / 3.0)


def test_operator_sugar():
    a = Tensor(np.array([1.0, 2.0]))
    b = Tensor(np.array([3.0, 5.0]))
    assert np.array_equal((a + b).data, [4.0, 7.0])
    assert np.array_equal((a - b).data, [-2.0, -3.0])
    assert np.array_equal((a * b).data, [3.0, 10.0])
    assert np.array_equal((2.0 * a).data, [2.0, 4.0])
    assert np.array_equal((-a).data, [-1.0, -2.0])


def test_shape_mismatch_rejected():
    a = Tensor(np.zeros(3))
    b = Tensor(np.zeros(4))
    with pytest.raises(ValueError):
        add(a, b)
    with pytest.raises(ValueError):
        mul(a, b)


def test_softmax_closed_form():
    # softmax([0, ln 3]) = [1, 3] / 4
    x = Tensor(np.array([0.0, np.log(3.0)]))
    y = softmax(x, axis=0)
    assert np.allclose(y.data, [0.25, 0.75], atol=1e-12)


def test_softmax_constant_input_uniform():
    x = Tensor(np.full(5, 7.3))
    assert np.allclose(softmax(x, axis=0).data, 0.2, atol=1e-15)


def test_softmax_large_magnitude_stable():
    x = Tensor(np.array([1e3, 0.0, -1e3]))
    y = softmax(x, axis=0).data
    assert np.all(np.isfinite(y))
    assert y[0] == pytest.approx(1.0)
    assert np.sum(y) == pytest.approx(1.0)


def test_global_avg_pool_value():
    x = Tensor(np.arange(8, dtype=float).reshape(2, 2, 2))
    y = global_avg_pool(x)
    assert y.data.shape == (2,)
    assert np.allclose(y.data, [1.5, 5.5])


def test_concat_narrow_roundtrip():
    a = Tensor(np.arange(6, dtype=float).reshape(2, 3))
    b = Tensor(np.arange(6, 14, dtype=float).reshape(2, 4))
    cat = concat([a, b], axis=1)
    assert cat.data.shape == (2, 7)
    assert np.array_equal(narrow(cat, 1, 0, 3).data, a.data)
    assert np.array_equal(narrow(cat, 1, 3, 4).data, b.data)


def test_concat_shape_check():
    a = Tensor(np.zeros((2, 3)))
    b = Tensor(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        concat([a, b], axis=1)


def test_stack_weighted_sum_matches_manual():
    rng = np.random.default_rng(3)
    mats = [Tensor(rng.normal(size=(2, 2))) for _ in range(3)]
    pi = Tensor(np.array([0.2, 0.5, 0.3]))
    out = weighted_sum(stack(mats), pi)
    manual = sum(w * m.data for w, m in zip(pi.data, mats))
    assert np.allclose(out.data, manual, atol=1e-15)


def test_decimate_roll_values():
    x = Tensor(np.arange(16, dtype=float).reshape(1, 4, 4))
    assert np.array_equal(decimate2(x, 0, 1).data, [[[1.0, 3.0], [9.0, 11.0]]])
    assert np.array_equal(roll2(x, 1, 0).data, np.roll(x.data, 1, axis=1))


def test_l1_loss_value():
    a = Tensor(np.array([1.0, 2.0, 3.0]))
    b = Tensor(np.array([2.0, 2.0, 1.0]))
    assert l1_loss(a, b).data == pytest.approx(1.0)  # (1 + 0 + 2) / 3


# ---------------------------------------------------------------------------
# conv2d against the brute-force oracle


@pytest.mark.parametrize("cin,cout,size,k,stride,padding", [
    (1, 1, 4, 1, 1, 0),
    (1, 1, 5, 3, 1, 1),
    (2, 3, 6, 3, 1, 0),
    (3, 2, 8, 5, 1, 2),
    (2, 2, 8, 3, 2, 1),
    (4, 1, 8, 5, 2, 2),
    (1, 4, 7, 2, 1, 0),
    (2, 2, 6, 4, 2, 0),
])
def test_conv2d_matches_bruteforce(cin, cout, size, k, stride, padding):
    rng = np.random.default_rng(hash((cin, cout, size, k, stride, padding)) % 2**32)
    inp = rng.normal(size=(cin, size, size))
    w = rng.normal(size=(cout, cin, k, k))
    b = rng.normal(size=cout)
    got = conv2d(Tensor(inp), Tensor(w), Tensor(b), stride=stride, padding=padding)
    want = conv2d_reference(inp, w, b, stride, padding)
    assert got.data.shape == want.shape
    assert np.max(np.abs(got.data - want)) <= 1e-12


def test_conv2d_identity_kernel():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 6, 6))
    w = np.zeros((3, 3, 3, 3))
    for c in range(3):
        w[c, c, 1, 1] = 1.0
    out = conv2d(Tensor(x), Tensor(w), Tensor(np.zeros(3)), padding=1)
    assert np.allclose(out.data, x, atol=1e-15)


def test_conv2d_shape_errors():
    x = Tensor(np.zeros((2, 4, 4)))
    w = Tensor(np.zeros((3, 5, 3, 3)))   # channel mismatch
    with pytest.raises(ValueError):
        conv2d(x, w, Tensor(np.zeros(3)))
    with pytest.raises(ValueError):
        conv2d(x, Tensor(np.zeros((3, 2, 3, 3))), Tensor(np.zeros(4)))  # bias length


# ---------------------------------------------------------------------------
# gradients by finite differences


def test_grad_elementwise_chain():
    rng = np.random.default_rng(11)
    a = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(rng.normal(size=(3, 4)))
    fd_check(lambda: tsum(mul(add(a, b), sub(a, b))), [a, b], probes=24, rng=rng)


def test_grad_scale_mean_abs():
    rng = np.random.default_rng(12)
    a = Tensor(rng.normal(size=(4, 4)) + 0.5)   # keep away from |.| kink
    fd_check(lambda: tmean(tabs(scale(a, 3.0))), [a], probes=20, rng=rng)


def test_grad_relu():
    rng = np.random.default_rng(13)
    a = Tensor(rng.normal(size=(5, 5)) + 0.3)
    # shift values away from 0 so FD never straddles the kink
    a.data[np.abs(a.data) < 1e-3] = 0.5
    fd_check(lambda: tsum(mul(relu(a), relu(a))), [a], probes=20, rng=rng)


def test_grad_clamp_interior_and_edges():
    a = Tensor(np.array([-2.0, 0.5, 3.0]))
    with Tape() as tape:
        y = clamp(a, 0.0, 1.0)
        tape.backward(tsum(y))
    # saturated coordinates get zero gradient, interior passes through
    assert np.array_equal(a.grad, [0.0, 1.0, 0.0])


def test_grad_softmax():
    rng = np.random.default_rng(14)
    a = Tensor(rng.normal(size=(6,)))
    w = Tensor(rng.normal(size=(6,)))
    fd_check(lambda: tsum(mul(softmax(a, axis=0), w)), [a, w], probes=24, rng=rng)


def test_grad_gap_concat_narrow():
    rng = np.random.default_rng(15)
    a = Tensor(rng.normal(size=(2, 3, 3)))
    b = Tensor(rng.normal(size=(2, 3, 3)))
    def loss():
        cat = concat([a, b], axis=0)
        return tsum(mul(global_avg_pool(cat), global_avg_pool(cat)))
    fd_check(loss, [a, b], probes=20, rng=rng)
    c = Tensor(rng.normal(size=(4, 5)))
    fd_check(lambda: tsum(tabs(narrow(c, 1, 1, 3))), [c], probes=15, rng=rng)


def test_grad_stack_weighted_sum():
    rng = np.random.default_rng(16)
    mats = [Tensor(rng.normal(size=(3, 3))) for _ in range(4)]
    pi = Tensor(rng.normal(size=(4,)))
    def loss():
        return tsum(mul(weighted_sum(stack(mats), pi),
                        weighted_sum(stack(mats), pi)))
    fd_check(loss, mats + [pi], probes=30, rng=rng)


def test_grad_decimate_roll():
    rng = np.random.default_rng(17)
    a = Tensor(rng.normal(size=(2, 4, 4)))
    def loss():
        y = roll2(decimate2(a, 1, 0), 1, 1)
        return tsum(mul(y, y))
    fd_check(loss, [a], probes=16, rng=rng)


@pytest.mark.parametrize("stride,padding", [(1, 0), (1, 2), (2, 1)])
def test_grad_conv2d(stride, padding):
    rng = np.random.default_rng(18 + stride * 10 + padding)
    x = Tensor(rng.normal(size=(2, 6, 6)))
    w = Tensor(rng.normal(size=(3, 2, 3, 3)))
    b = Tensor(rng.normal(size=(3,)))
    def loss():
        y = conv2d(x, w, b, stride=stride, padding=padding)
        return tsum(mul(y, y))
    fd_check(loss, [x, w, b], probes=30, rng=rng)


def test_grad_l1_loss():
    rng = np.random.default_rng(19)
    a = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(rng.normal(size=(3, 4)))
    # keep the difference away from the |.| kink
    b.data += np.sign(a.data - b.data + 1e-9) * 1e-2
    fd_check(lambda: l1_loss(a, b), [a, b], probes=20, rng=rng)


def test_backward_sum_of_squares():
    a = Tensor(np.array([3.0, -1.0, 2.0]))
    with Tape() as tape:
        tape.backward(tsum(mul(a, a)))
    assert np.allclose(a.grad, [6.0, -2.0, 4.0])


def test_grad_accumulates_across_uses():
    a = Tensor(np.array([2.0]))
    with Tape() as tape:
        y = add(a, a)          # dy/da = 2
        tape.backward(tsum(y))
    assert a.grad[0] == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# tape semantics


def test_backward_requires_scalar():
    a = Tensor(np.zeros((2, 2)))
    with Tape() as tape:
        y = add(a, a)
        with pytest.raises(ValueError):
            tape.backward(y)


def test_no_tape_records_nothing():
    a = Tensor(np.array([1.0]))
    y = mul(a, a)          # outside any tape
    assert y.grad is None
    with pytest.raises(RuntimeError):
        backward(y)        # no active tape to walk


def test_parameter_keeps_grad_buffer():
    p = Parameter(np.ones(3), name="p")
    assert p.grad is not None and np.all(p.grad == 0.0)
    with Tape() as tape:
        tape.backward(tsum(mul(p, p)))
    assert np.allclose(p.grad, 2.0)
    p.zero_grad()
    assert np.all(p.grad == 0.0)


def test_record_custom_primitive():
    # doubling op defined externally through record()
    a = Tensor(np.array([1.5, -2.0]))
    with Tape() as tape:
        out = Tensor(a.data * 2.0)
        def bwd(g, a=a):
            a.accumulate(2.0 * g)
        record(out, bwd)
        tape.backward(tsum(out))
    assert np.allclose(a.grad, 2.0)


# ---------------------------------------------------------------------------
# adam


def test_adam_first_step_size():
    # with bias correction the first update is exactly lr * sign(grad)
    p = Parameter(np.array([1.0, -1.0, 5.0]), name="w")
    p.grad[:] = [0.5, -2.0, 1e-3]
    state = {}
    adam_step([p], lr=0.01, state=state)
    assert np.allclose(np.abs(p.data - [1.0, -1.0, 5.0]),
                       0.01 * np.ones(3), atol=1e-9)
    assert state["t"] == 1


def test_adam_zero_grad_noop():
    p = Parameter(np.array([2.0]), name="w")
    state = {}
    adam_step([p], lr=0.1, state=state)
    assert p.data[0] == pytest.approx(2.0)


def test_adam_minimizes_quadratic():
    p = Parameter(np.array([3.0]), name="w")
    state = {}
    for _ in range(400):
        p.zero_grad()
        with Tape() as tape:
            tape.backward(tsum(mul(p, p)))
        adam_step([p], lr=0.05, state=state)
    assert abs(p.data[0]) < 0.05


def test_adam_missing_grad_rejected():
    p = Parameter(np.zeros(2), name="w")
    p.grad = None
    with pytest.raises(ValueError):
        adam_step([p], lr=0.1, state={})


def test_adam_deterministic():
    def run():
        p = Parameter(np.array([1.0, 2.0]), name="w")
        state = {}
        for _ in range(10):
            p.zero_grad()
            with Tape() as tape:
                tape.backward(tsum(mul(p, p)))
            adam_step([p], lr=0.01, state=state)
        return p.data.copy()
    assert np.array_equal(run(), run())


# ---------------------------------------------------------------------------
# property tests


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=-1e3, max_value=1e3,
                          allow_nan=False, allow_infinity=False),
                min_size=2, max_size=8))
def test_softmax_is_probability_vector(vals):
    y = softmax(Tensor(np.array(vals)), axis=0).data
    assert np.all(y >= 0.0)
    assert np.sum(y) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1),
       st.integers(min_value=1, max_value=2),
       st.integers(min_value=0, max_value=2))
def test_conv2d_linearity(seed, stride, padding):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=(2, 6, 6))
    x2 = rng.normal(size=(2, 6, 6))
    w = Tensor(rng.normal(size=(2, 2, 3, 3)))
    b = Tensor(np.zeros(2))
    y1 = conv2d(Tensor(x1), w, b, stride=stride, padding=padding).data
    y2 = conv2d(Tensor(x2), w, b, stride=stride, padding=padding).data
    y12 = conv2d(Tensor(x1 + 2.0 * x2), w, b, stride=stride, padding=padding).data
    assert np.max(np.abs(y12 - (y1 + 2.0 * y2))) <= 1e-10
