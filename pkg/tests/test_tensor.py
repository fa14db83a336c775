"""Tensor-core tests: every primitive against an independent oracle.

The conv oracles below are deliberately naive Python loops so they share
no code path with the vectorized implementations they check.
"""

import numpy as np
import pytest

from manner.nn import (
    BatchNormParams,
    batch_norm,
    conv1d,
    conv_out_length,
    conv_transpose1d,
    conv_transpose_out_length,
    linear,
)
from manner.tensor import (
    Tape,
    Tensor,
    add,
    apply_op,
    backward,
    concat,
    finite_diff_check,
    matmul,
    maximum,
    meter,
    narrow,
    pad_end,
    pool,
    relu,
    reshape,
    sigmoid,
    softmax,
    tanh,
    tmax,
    transpose,
    tsum,
)

# ---------------------------------------------------------------------
# oracles


def conv1d_loops(x, w, b=None, stride=1, padding=0, groups=1):
    bsz, cin, t = x.shape
    cout, cin_g, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding)))
    tout = (t + 2 * padding - kw) // stride + 1
    oc = cout // groups
    out = np.zeros((bsz, cout, tout), dtype=np.float64)
    for n in range(bsz):
        for o in range(cout):
            base = (o // oc) * cin_g
            for tau in range(tout):
                acc = 0.0 if b is None else float(b[o])
                for c in range(cin_g):
                    for k in range(kw):
                        acc += float(w[o, c, k]) * float(xp[n, base + c, tau * stride + k])
                out[n, o, tau] = acc
    return out


def conv_transpose1d_loops(x, w, b=None, stride=1, padding=0):
    bsz, cin, t = x.shape
    _, cout, kw = w.shape
    tfull = (t - 1) * stride + kw
    full = np.zeros((bsz, cout, tfull), dtype=np.float64)
    for n in range(bsz):
        for i in range(cin):
            for o in range(cout):
                for tau in range(t):
                    for k in range(kw):
                        full[n, o, tau * stride + k] += float(x[n, i, tau]) * float(w[i, o, k])
    out = full[:, :, padding : tfull - padding] if padding else full
    if b is not None:
        out = out + np.asarray(b, dtype=np.float64)[:, None]
    return out


def linear_map_matrix(apply, in_shape, out_size):
    """Explicit matrix of a linear map, column by column via basis vectors."""
    n = int(np.prod(in_shape))
    m = np.zeros((out_size, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        m[:, j] = apply(e.reshape(in_shape)).reshape(-1)
    return m


# ---------------------------------------------------------------------
# conv1d


def test_conv1d_hand_values():
    x = Tensor(np.array([[[1.0, 2.0, 3.0, 4.0]]]))
    w = Tensor(np.array([[[1.0, 1.0]]]))
    out = conv1d(x, w)
    np.testing.assert_allclose(out.data, [[[3.0, 5.0, 7.0]]])


def test_conv1d_identity_kernel():
    rng = np.random.default_rng(1)
    x = Tensor(rng.standard_normal((2, 5, 9)).astype(np.float32))
    w = Tensor(np.ones((5, 1, 1), dtype=np.float32))
    out = conv1d(x, w, groups=5)
    np.testing.assert_array_equal(out.data, x.data)


def test_conv1d_length_formula():
    assert conv_out_length(64000, 8, 4, 2) == 16000
    x = Tensor(np.zeros((1, 1, 64000), dtype=np.float32))
    w = Tensor(np.zeros((1, 1, 8), dtype=np.float32))
    assert conv1d(x, w, stride=4, padding=2).shape == (1, 1, 16000)


@pytest.mark.parametrize(
    "b,cin,cout,t,kw,stride,padding,groups,use_bias",
    [
        (1, 1, 1, 6, 3, 1, 0, 1, False),
        (2, 3, 4, 10, 3, 1, 1, 1, True),
        (1, 4, 6, 12, 5, 2, 2, 1, True),
        (2, 6, 6, 9, 3, 1, 1, 6, True),  # depthwise
        (1, 8, 8, 11, 3, 2, 1, 8, False),  # strided depthwise
        (2, 6, 4, 8, 2, 1, 0, 2, True),  # grouped, oc > 1
        (1, 9, 6, 14, 4, 3, 2, 3, True),
        (3, 2, 5, 7, 7, 1, 3, 1, True),  # kernel spans padded input
    ],
)
def test_conv1d_matches_loop_oracle(b, cin, cout, t, kw, stride, padding, groups, use_bias):
    rng = np.random.default_rng(b * 100 + t)
    x = rng.standard_normal((b, cin, t))
    w = rng.standard_normal((cout, cin // groups, kw))
    bias = rng.standard_normal(cout) if use_bias else None
    want = conv1d_loops(x, w, bias, stride, padding, groups)
    got = conv1d(
        Tensor(x, dtype=np.float64),
        Tensor(w, dtype=np.float64),
        None if bias is None else Tensor(bias, dtype=np.float64),
        stride=stride,
        padding=padding,
        groups=groups,
    )
    assert got.shape == want.shape
    np.testing.assert_allclose(got.data, want, rtol=1e-10, atol=1e-12)


def test_conv1d_rejects_bad_shapes():
    x = Tensor(np.zeros((1, 4, 8), dtype=np.float32))
    with pytest.raises(ValueError):
        conv1d(x, Tensor(np.zeros((2, 3, 3), dtype=np.float32)))  # cin mismatch
    with pytest.raises(ValueError):
        conv1d(x, Tensor(np.zeros((2, 4, 3), dtype=np.float32)), groups=3)
    with pytest.raises(ValueError):
        conv1d(x, Tensor(np.zeros((2, 4, 16), dtype=np.float32)))  # tout < 1
    with pytest.raises(ValueError):
        conv1d(Tensor(np.zeros((4, 8), dtype=np.float32)), Tensor(np.zeros((2, 4, 3), dtype=np.float32)))


# ---------------------------------------------------------------------
# conv_transpose1d


def test_conv_transpose_length_formula():
    assert conv_transpose_out_length(16000, 8, 4, 2) == 64000
    x = Tensor(np.zeros((1, 1, 16000), dtype=np.float32))
    w = Tensor(np.zeros((1, 1, 8), dtype=np.float32))
    assert conv_transpose1d(x, w, stride=4, padding=2).shape == (1, 1, 64000)


def test_conv_transpose_identity():
    rng = np.random.default_rng(2)
    x = Tensor(rng.standard_normal((1, 3, 7)).astype(np.float32))
    w = Tensor(np.eye(3, dtype=np.float32)[:, :, None])
    out = conv_transpose1d(x, w)
    np.testing.assert_allclose(out.data, x.data, rtol=1e-6)


@pytest.mark.parametrize(
    "b,cin,cout,t,kw,stride,padding,use_bias",
    [
        (1, 1, 1, 5, 3, 1, 0, False),
        (2, 3, 2, 6, 4, 2, 1, True),
        (1, 4, 5, 7, 8, 4, 2, True),
        (2, 2, 3, 9, 2, 3, 0, True),
        (1, 5, 4, 4, 6, 2, 2, False),
    ],
)
def test_conv_transpose_matches_loop_oracle(b, cin, cout, t, kw, stride, padding, use_bias):
    rng = np.random.default_rng(b * 37 + kw)
    x = rng.standard_normal((b, cin, t))
    w = rng.standard_normal((cin, cout, kw))
    bias = rng.standard_normal(cout) if use_bias else None
    want = conv_transpose1d_loops(x, w, bias, stride, padding)
    got = conv_transpose1d(
        Tensor(x, dtype=np.float64),
        Tensor(w, dtype=np.float64),
        None if bias is None else Tensor(bias, dtype=np.float64),
        stride=stride,
        padding=padding,
    )
    assert got.shape == want.shape
    np.testing.assert_allclose(got.data, want, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("stride,padding,kw,t", [(1, 0, 3, 17), (2, 1, 4, 16), (4, 2, 8, 16), (3, 0, 5, 17)])
def test_conv_adjoint_identity(stride, padding, kw, t):
    """<conv(x), y> == <x, conv_t(y)> makes the pair an exact adjoint.

    Holds whenever (T + 2P - K) is a multiple of the stride, the geometry
    every layer of the model runs at (input is pre-padded to guarantee it).
    """
    assert (t + 2 * padding - kw) % stride == 0
    rng = np.random.default_rng(kw * 11 + stride)
    cin, cout = 3, 4
    w = rng.standard_normal((cout, cin, kw)).astype(np.float32)
    x = rng.standard_normal((1, cin, t)).astype(np.float32)
    tout = conv_out_length(t, kw, stride, padding)
    y = rng.standard_normal((1, cout, tout)).astype(np.float32)

    fwd = conv1d(Tensor(x), Tensor(w), stride=stride, padding=padding).data
    # the same weight array serves both maps: conv reads it as
    # [Cout, Cin, K], its adjoint as [Cin', Cout', K]
    back = conv_transpose1d(Tensor(y), Tensor(w), stride=stride, padding=padding).data
    assert back.shape[-1] == t
    lhs = float(np.sum(fwd * y))
    rhs = float(np.sum(x * back))
    assert abs(lhs - rhs) <= 1e-4 * max(abs(lhs), abs(rhs), 1.0)

    # brute-force matrix form: the two maps are literal transposes
    m_fwd = linear_map_matrix(
        lambda v: conv1d(Tensor(v[None], dtype=np.float64), Tensor(w, dtype=np.float64),
                         stride=stride, padding=padding).data[0],
        (cin, t),
        cout * tout,
    )
    m_back = linear_map_matrix(
        lambda v: conv_transpose1d(Tensor(v[None], dtype=np.float64), Tensor(w, dtype=np.float64),
                                   stride=stride, padding=padding).data[0],
        (cout, tout),
        cin * t,
    )
    np.testing.assert_allclose(m_back, m_fwd.T, rtol=1e-10, atol=1e-12)


def test_conv_transpose_full_length_adjoint():
    # without trimming, output length (T-1)*S+K carries every contribution
    rng = np.random.default_rng(3)
    x = rng.standard_normal((1, 2, 5))
    w = rng.standard_normal((2, 3, 4))
    out = conv_transpose1d(Tensor(x, dtype=np.float64), Tensor(w, dtype=np.float64), stride=2)
    assert out.shape == (1, 3, 12)
    np.testing.assert_allclose(out.data, conv_transpose1d_loops(x, w, stride=2), rtol=1e-10)


# ---------------------------------------------------------------------
# linear and batch-norm


def test_linear_hand_value():
    x = Tensor(np.array([[1.0, 2.0]]))
    w = Tensor(np.array([[1.0, 0.0], [0.0, 2.0]]))
    b = Tensor(np.array([1.0, 1.0]))
    np.testing.assert_allclose(linear(x, w, b).data, [[2.0, 5.0]])


def test_linear_identity_weight():
    rng = np.random.default_rng(4)
    x = Tensor(rng.standard_normal((2, 3, 5)).astype(np.float32))
    w = Tensor(np.eye(5, dtype=np.float32))
    np.testing.assert_allclose(linear(x, w).data, x.data, rtol=1e-6)


def test_linear_weight_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    x = Tensor(rng.standard_normal((3, 4)).astype(np.float32), requires_grad=True)
    w = Tensor(rng.standard_normal((4, 2)).astype(np.float32), requires_grad=True)
    b = Tensor(rng.standard_normal(2).astype(np.float32), requires_grad=True)
    err = finite_diff_check(lambda *p: tsum(linear(*p)), [x, w, b])
    assert err < 1e-3


def test_batch_norm_normalizes_training_batch():
    rng = np.random.default_rng(6)
    x = Tensor((5.0 + 2.0 * rng.standard_normal((4, 3, 50))).astype(np.float32))
    p = BatchNormParams.create(3, np.float32)
    out = batch_norm(x, p.gamma, p.beta, p.running_mean, p.running_var, training=True)
    np.testing.assert_allclose(out.data.mean(axis=(0, 2)), 0.0, atol=1e-4)
    np.testing.assert_allclose(out.data.std(axis=(0, 2)), 1.0, atol=1e-3)
    # running stats moved toward the batch stats
    assert np.all(p.running_mean.data > 0.0)


def test_batch_norm_inverse_transform_recovers_input():
    rng = np.random.default_rng(7)
    xd = rng.standard_normal((2, 3, 40)).astype(np.float32) * 2.0 + 1.0
    x = Tensor(xd)
    p = BatchNormParams.create(3, np.float32)
    p.gamma.data[...] = xd.std(axis=(0, 2))
    p.beta.data[...] = xd.mean(axis=(0, 2))
    out = batch_norm(x, p.gamma, p.beta, p.running_mean, p.running_var, training=True)
    np.testing.assert_allclose(out.data, xd, atol=1e-3)


def test_batch_norm_eval_is_deterministic_and_frozen():
    rng = np.random.default_rng(8)
    x = Tensor(rng.standard_normal((1, 2, 16)).astype(np.float32))
    p = BatchNormParams.create(2, np.float32)
    p.running_mean.data[...] = (0.3, -0.1)
    p.running_var.data[...] = (1.5, 0.7)
    before = (p.running_mean.data.copy(), p.running_var.data.copy())
    a = batch_norm(x, p.gamma, p.beta, p.running_mean, p.running_var, training=False)
    b = batch_norm(x, p.gamma, p.beta, p.running_mean, p.running_var, training=False)
    np.testing.assert_array_equal(a.data, b.data)
    np.testing.assert_array_equal(p.running_mean.data, before[0])
    np.testing.assert_array_equal(p.running_var.data, before[1])


def test_batch_norm_matches_plain_numpy():
    rng = np.random.default_rng(9)
    xd = rng.standard_normal((2, 4, 30))
    gamma = rng.standard_normal(4)
    beta = rng.standard_normal(4)
    p = BatchNormParams.create(4, np.float64)
    p.gamma.data[...] = gamma
    p.beta.data[...] = beta
    out = batch_norm(Tensor(xd, dtype=np.float64), p.gamma, p.beta,
                     p.running_mean, p.running_var, training=True)
    mu = xd.mean(axis=(0, 2), keepdims=True)
    sd = np.sqrt(xd.var(axis=(0, 2), keepdims=True) + 1e-5)
    want = gamma[None, :, None] * (xd - mu) / sd + beta[None, :, None]
    np.testing.assert_allclose(out.data, want, rtol=1e-10)


# ---------------------------------------------------------------------
# activations, softmax, pooling


def test_activation_values():
    x = Tensor(np.array([-1.0, 0.0, 2.0]))
    np.testing.assert_array_equal(relu(x).data, [0.0, 0.0, 2.0])
    assert sigmoid(Tensor(np.array([0.0]))).data[0] == pytest.approx(0.5)
    assert tanh(Tensor(np.array([0.0]))).data[0] == 0.0


def test_sigmoid_saturates_without_overflow():
    out = sigmoid(Tensor(np.array([-1e4, 1e4], dtype=np.float32)))
    assert np.all(np.isfinite(out.data))
    np.testing.assert_allclose(out.data, [0.0, 1.0], atol=1e-20)


@pytest.mark.parametrize("axis", [-1, 0, 1])
def test_softmax_rows_sum_to_one(axis):
    rng = np.random.default_rng(10)
    x = Tensor(rng.standard_normal((4, 6)).astype(np.float32) * 3.0)
    out = softmax(x, axis=axis)
    np.testing.assert_allclose(out.data.sum(axis=axis), 1.0, atol=1e-6)
    assert np.all(out.data > 0.0)


def test_softmax_matches_direct_formula():
    x = np.array([[1.0, 2.0, 3.0]])
    want = np.exp(x) / np.exp(x).sum()
    np.testing.assert_allclose(softmax(Tensor(x)).data, want, rtol=1e-6)


def test_pool_values():
    x = Tensor(np.array([[1.0, 2.0, 3.0]]))
    assert pool("avg", x, axis=1).data[0] == pytest.approx(2.0)
    assert pool("max", x, axis=1).data[0] == pytest.approx(3.0)
    const = Tensor(np.full((2, 5), 1.7))
    np.testing.assert_allclose(pool("avg", const, axis=1).data, pool("max", const, axis=1).data)


def test_max_gradient_routes_to_first_argmax():
    x = Tensor(np.array([[1.0, 3.0, 3.0, 2.0]]), requires_grad=True)
    with Tape() as tape:
        loss = tsum(tmax(x, axis=1))
    backward(tape, loss)
    np.testing.assert_array_equal(x.grad, [[0.0, 1.0, 0.0, 0.0]])


def test_maximum_ties_prefer_first_argument():
    a = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    b = Tensor(np.array([1.0, 0.0]), requires_grad=True)
    with Tape() as tape:
        loss = tsum(maximum(a, b))
    backward(tape, loss)
    np.testing.assert_array_equal(a.grad, [1.0, 1.0])
    np.testing.assert_array_equal(b.grad, [0.0, 0.0])


# ---------------------------------------------------------------------
# tape mechanics


def test_backward_of_sum_is_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    with Tape() as tape:
        loss = tsum(x)
    backward(tape, loss)
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_of_square_sum_is_two_x():
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    with Tape() as tape:
        loss = tsum(x * x)
    backward(tape, loss)
    np.testing.assert_allclose(x.grad, 2.0 * x.data, rtol=1e-6)


def test_backward_requires_scalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = x * 2.0
    with pytest.raises(ValueError):
        backward(tape, y)


def test_unreached_leaf_gets_zero_gradient():
    x = Tensor(np.ones(3), requires_grad=True)
    y = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        _dead_branch = y * 2.0  # recorded, but never feeds the loss
        loss = tsum(x * 1.5)
    backward(tape, loss)
    np.testing.assert_array_equal(y.grad, np.zeros(3))


def test_gradients_accumulate_across_fan_out():
    x = Tensor(np.array([2.0]), requires_grad=True)
    with Tape() as tape:
        loss = tsum(x * 3.0) + tsum(x * x)
    backward(tape, loss)
    np.testing.assert_allclose(x.grad, [3.0 + 2.0 * 2.0])


def test_no_silent_broadcast_on_mismatched_shapes():
    a = Tensor(np.ones((2, 3)))
    with pytest.raises(ValueError):
        add(a, Tensor(np.ones(3)))  # trailing-dim broadcast is not allowed
    with pytest.raises(ValueError):
        add(a, Tensor(np.ones((2, 2))))
    # scalars and matching-ndim size-1 axes are the two sanctioned cases
    assert add(a, 2.0).shape == (2, 3)
    assert add(a, Tensor(np.ones((1, 3)))).shape == (2, 3)


def test_shape_ops_roundtrip_and_differentiate():
    rng = np.random.default_rng(11)
    x = Tensor(rng.standard_normal((2, 3, 4)).astype(np.float64), requires_grad=True)

    def f(t):
        y = transpose(t, (0, 2, 1))
        y = reshape(y, (2, 12))
        y = pad_end(y, 3)
        y = narrow(y, 1, 12)
        return tsum(y * y)

    assert finite_diff_check(f, [x]) < 1e-6


def test_concat_splits_gradient():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    b = Tensor(np.ones((2, 3)), requires_grad=True)
    with Tape() as tape:
        joined = concat([a, b], axis=1)
        loss = tsum(joined * joined)
    assert joined.shape == (2, 5)
    backward(tape, loss)
    np.testing.assert_allclose(a.grad, 2.0 * np.ones((2, 2)))
    np.testing.assert_allclose(b.grad, 2.0 * np.ones((2, 3)))


def test_matmul_batched_and_rejects_broadcast():
    rng = np.random.default_rng(12)
    a = Tensor(rng.standard_normal((2, 3, 4)).astype(np.float32))
    b = Tensor(rng.standard_normal((2, 4, 5)).astype(np.float32))
    assert matmul(a, b).shape == (2, 3, 5)
    with pytest.raises(ValueError):
        matmul(a, Tensor(rng.standard_normal((3, 4, 5)).astype(np.float32)))


def test_ops_are_deterministic():
    rng = np.random.default_rng(13)
    x = rng.standard_normal((1, 6, 32)).astype(np.float32)
    w = rng.standard_normal((4, 6, 5)).astype(np.float32)
    a = conv1d(Tensor(x), Tensor(w), stride=2, padding=2).data
    b = conv1d(Tensor(x), Tensor(w), stride=2, padding=2).data
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------
# finite-difference checker


def test_finite_diff_exact_for_linear_map():
    rng = np.random.default_rng(14)
    x = Tensor(rng.standard_normal(8), requires_grad=True, dtype=np.float64)
    w = Tensor(rng.standard_normal(8), requires_grad=False, dtype=np.float64)
    err = finite_diff_check(lambda t: tsum(t * Tensor(w.data)), [x])
    assert err < 1e-9


def test_finite_diff_composite_conv_bn_relu():
    rng = np.random.default_rng(15)

    def build(dtype):
        x = Tensor(rng.standard_normal((2, 3, 12)), requires_grad=True, dtype=dtype)
        w = Tensor(0.5 * rng.standard_normal((4, 3, 3)), requires_grad=True, dtype=dtype)
        b = Tensor(0.1 * rng.standard_normal(4), requires_grad=True, dtype=dtype)
        p = BatchNormParams.create(4, dtype)

        def f(xi, wi, bi, gi, bti):
            y = conv1d(xi, wi, bi, stride=1, padding=1)
            y = batch_norm(y, gi, bti, p.running_mean, p.running_var, training=True)
            return tsum(relu(y))

        return f, [x, w, b, p.gamma, p.beta]

    f32, inputs32 = build(np.float32)
    assert finite_diff_check(f32, inputs32) < 1e-3
    f64, inputs64 = build(np.float64)
    assert finite_diff_check(f64, inputs64) < 1e-6


def test_finite_diff_flags_corrupted_gradient():
    rng = np.random.default_rng(16)
    x = Tensor(rng.standard_normal(6) + 2.0, requires_grad=True, dtype=np.float64)

    def doubled_grad_square(t):
        out = apply_op(t.data * t.data, (t,), lambda g, needs: (g * 4.0 * t.data,))
        return tsum(out)

    err = finite_diff_check(doubled_grad_square, [x])
    assert 0.5 < err < 1.5


@pytest.mark.parametrize(
    "op,stride,padding,groups",
    [("conv", 1, 0, 1), ("conv", 2, 1, 1), ("conv", 1, 1, 4), ("convt", 1, 0, 1), ("convt", 2, 1, 1)],
)
def test_finite_diff_conv_ops(op, stride, padding, groups):
    rng = np.random.default_rng(17)
    if op == "conv":
        x = Tensor(rng.standard_normal((2, 4, 10)), requires_grad=True, dtype=np.float64)
        w = Tensor(rng.standard_normal((4, 4 // groups, 3)), requires_grad=True, dtype=np.float64)
        b = Tensor(rng.standard_normal(4), requires_grad=True, dtype=np.float64)
        f = lambda *p: tsum(conv1d(*p, stride=stride, padding=padding, groups=groups))
    else:
        x = Tensor(rng.standard_normal((2, 3, 6)), requires_grad=True, dtype=np.float64)
        w = Tensor(rng.standard_normal((3, 4, 3)), requires_grad=True, dtype=np.float64)
        b = Tensor(rng.standard_normal(4), requires_grad=True, dtype=np.float64)
        f = lambda *p: tsum(conv_transpose1d(*p, stride=stride, padding=padding))
    assert finite_diff_check(f, [x, w, b]) < 1e-6


def test_finite_diff_nonlinear_composite_uses_squares():
    rng = np.random.default_rng(18)
    x = Tensor(rng.standard_normal((2, 3, 6)), requires_grad=True, dtype=np.float64)

    def f(t):
        y = sigmoid(t) * tanh(t)
        return tsum(y * y)

    assert finite_diff_check(f, [x]) < 1e-6


# ---------------------------------------------------------------------
# allocation meter


def test_allocation_meter_tracks_live_and_peak():
    meter.reset_peak()
    start = meter.live
    t = Tensor(np.zeros(1024, dtype=np.float32))
    assert meter.live == start + 4096
    assert meter.peak >= start + 4096
    del t
    assert meter.live == start


def test_allocation_meter_ignores_views():
    base = Tensor(np.zeros(64, dtype=np.float32))
    live = meter.live
    view = Tensor(base.data[:32])
    assert meter.live == live
    del view, base
