import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ulcnet import nn
from ulcnet.config import weight_layout
from ulcnet.errors import DimensionError
from ulcnet.reorient import reorient


def sep_weights(c_in, c_out, rng=None, k=3):
    rng = rng or np.random.default_rng(0)
    return {
        "dw.kernel": rng.uniform(-1, 1, (c_in, k)),
        "dw.bias": rng.uniform(-1, 1, c_in),
        "pw.kernel": rng.uniform(-1, 1, (c_in, c_out)),
        "pw.bias": rng.uniform(-1, 1, c_out),
    }


def gru_weights(n_in, units, rng):
    return {
        "W": rng.uniform(-1, 1, (n_in, 3 * units)),
        "U": rng.uniform(-1, 1, (units, 3 * units)),
        "b_ih": rng.uniform(-1, 1, 3 * units),
        "b_hh": rng.uniform(-1, 1, 3 * units),
    }


# --- depthwise separable -------------------------------------------------


def test_identity_separable_conv(rng):
    x = rng.standard_normal((3, 10, 4))
    w = {
        "dw.kernel": np.tile([0.0, 1.0, 0.0], (4, 1)),
        "dw.bias": np.zeros(4),
        "pw.kernel": np.eye(4),
        "pw.bias": np.zeros(4),
    }
    np.testing.assert_array_equal(nn.depthwise_separable_conv(x, w, 4, "linear"), x)


def test_hand_convolution():
    x = np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 4, 1)
    y = nn.depthwise_conv(x, np.ones((1, 3)), np.zeros(1))
    np.testing.assert_array_equal(y[0, :, 0], [3, 6, 9, 7])


def test_separable_param_count():
    w = sep_weights(8, 32)
    assert sum(v.size for v in w.values()) == 8 * 3 + 8 + 8 * 32 + 32 == 320


def test_separable_channel_mismatch():
    with pytest.raises(DimensionError):
        nn.depthwise_separable_conv(np.zeros((1, 6, 5)), sep_weights(4, 8), 8)
    with pytest.raises(DimensionError):
        nn.depthwise_separable_conv(np.zeros((1, 6, 4)), sep_weights(4, 8), 16)


def test_separable_matches_oracle(rng):
    x = rng.standard_normal((2, 8, 8))
    w = sep_weights(8, 8, rng)
    dw = oracles.depthwise(x.tolist(), w["dw.kernel"].tolist(), w["dw.bias"].tolist())
    dw = [[[max(v, 0.0) for v in row] for row in frame] for frame in dw]
    ref = np.maximum(np.array(oracles.pointwise(dw, w["pw.kernel"].tolist(), w["pw.bias"].tolist())), 0)
    assert np.max(np.abs(nn.depthwise_separable_conv(x, w, 8, "relu") - ref)) <= 1e-5


def test_activation_after_depthwise_stage():
    # depthwise output is all negative; ReLU there must zero it before the pointwise mix
    x = -np.ones((1, 4, 2))
    w = {
        "dw.kernel": np.tile([0.0, 1.0, 0.0], (2, 1)),
        "dw.bias": np.zeros(2),
        "pw.kernel": -np.eye(2),
        "pw.bias": np.full(2, 0.25),
    }
    np.testing.assert_array_equal(nn.depthwise_separable_conv(x, w, 2, "relu"), np.full((1, 4, 2), 0.25))


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 1000))
def test_separable_linear_in_input(a, b, seed):
    rng = np.random.default_rng(seed)
    w = sep_weights(3, 5, rng)
    w["dw.bias"][:] = 0
    w["pw.bias"][:] = 0
    x, y = rng.standard_normal((2, 2, 7, 3))
    lhs = nn.depthwise_separable_conv(a * x + b * y, w, 5, "linear")
    rhs = a * nn.depthwise_separable_conv(x, w, 5, "linear") + b * nn.depthwise_separable_conv(y, w, 5, "linear")
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


# --- conv2d ---------------------------------------------------------------


def test_conv2d_identity_1x1(rng):
    x = rng.standard_normal((2, 5, 3))
    w = {"kernel": np.eye(3).reshape(1, 1, 3, 3), "bias": np.zeros(3)}
    np.testing.assert_array_equal(nn.conv2d(x, w, (1, 1), 3), x)


def test_conv2d_all_ones():
    v = 0.7
    x = np.full((1, 9, 2), v)
    w = {"kernel": np.ones((1, 3, 2, 4)), "bias": np.zeros(4)}
    y = nn.conv2d(x, w, (1, 3), 4)
    np.testing.assert_allclose(y[0, 1:-1], 6 * v)
    np.testing.assert_allclose(y[0, [0, -1]], 4 * v)  # edge: one padded tap


def test_conv2d_param_count():
    w = {"kernel": np.zeros((1, 3, 2, 32)), "bias": np.zeros(32)}
    assert sum(v.size for v in w.values()) == 224


def test_conv2d_rejects_time_kernel():
    with pytest.raises(DimensionError):
        nn.conv2d(np.zeros((1, 4, 1)), {"kernel": np.zeros((3, 3, 1, 1)), "bias": np.zeros(1)}, (3, 3), 1)


def test_conv2d_matches_oracle(rng):
    x = rng.standard_normal((3, 8, 4))
    w = {"kernel": rng.uniform(-1, 1, (1, 3, 4, 6)), "bias": rng.uniform(-1, 1, 6)}
    ref = np.array(oracles.conv2d(x.tolist(), w["kernel"].tolist(), w["bias"].tolist()))
    assert np.max(np.abs(nn.conv2d(x, w, (1, 3), 6) - ref)) <= 1e-5


# --- pooling --------------------------------------------------------------


def test_pool_pairs():
    x = np.array([1.0, 5.0, 2.0, 2.0]).reshape(1, 4, 1)
    np.testing.assert_array_equal(nn.max_pool_freq(x)[0, :, 0], [5, 2])


def test_pool_constant():
    np.testing.assert_array_equal(nn.max_pool_freq(np.full((2, 6, 3), 1.5)), np.full((2, 3, 3), 1.5))


def test_pool_odd_rejected():
    with pytest.raises(DimensionError):
        nn.max_pool_freq(np.zeros((1, 5, 1)))


def test_pool_chain():
    x = np.zeros((1, 48, 1))
    sizes = []
    for _ in range(3):
        x = nn.max_pool_freq(x)
        sizes.append(x.shape[1])
    assert sizes == [24, 12, 6]


# --- GRU ------------------------------------------------------------------


def test_gru_zero_weights():
    units = 4
    w = {"W": np.zeros((3, 3 * units)), "U": np.zeros((units, 3 * units)),
         "b_ih": np.zeros(3 * units), "b_hh": np.zeros(3 * units)}
    h = np.array([1.0, -2.0, 0.5, 4.0])
    np.testing.assert_allclose(nn.gru_cell(np.ones(3), h, w), 0.5 * h)


def test_gru_scalar_against_high_precision():
    h, z, r, cand = oracles.gru_scalar_mp(1, 0)
    assert float(z) == pytest.approx(0.7311, abs=1e-4)
    assert float(cand) == pytest.approx(0.7616, abs=1e-4)
    assert float(h) == pytest.approx(0.2048, abs=1e-4)
    w = {"W": np.ones((1, 3)), "U": np.ones((1, 3)), "b_ih": np.zeros(3), "b_hh": np.zeros(3)}
    out = nn.gru_cell(np.array([1.0]), np.array([0.0]), w)
    assert abs(out[0] - float(h)) <= 1e-15


def test_gru_fixed_point():
    # zero input weights/biases and U_h = 0 give candidate 0; h_prev = 0 is then a fixed point
    rng = np.random.default_rng(3)
    w = gru_weights(2, 3, rng)
    w["W"][:, 6:] = 0
    w["U"][:, 6:] = 0
    w["b_ih"][6:] = 0
    w["b_hh"][6:] = 0
    np.testing.assert_array_equal(nn.gru_cell(rng.standard_normal(2), np.zeros(3), w), np.zeros(3))


def test_gru_dimension_mismatch(rng):
    w = gru_weights(3, 4, rng)
    with pytest.raises(DimensionError):
        nn.gru_cell(np.zeros(2), np.zeros(4), w)
    with pytest.raises(DimensionError):
        nn.gru_cell(np.zeros(3), np.zeros(5), w)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_gru_convex_combination(seed):
    rng = np.random.default_rng(seed)
    w = gru_weights(4, 5, rng)
    x, h = rng.standard_normal(4), rng.uniform(-1, 1, 5)
    out = nn.gru_cell(x, h, w)
    gx = x @ w["W"] + w["b_ih"]
    gh = h @ w["U"] + w["b_hh"]
    r = nn.sigmoid(gx[5:10] + gh[5:10])
    cand = np.tanh(gx[10:] + r * gh[10:])
    assert np.all(out >= np.minimum(cand, h) - 1e-12)
    assert np.all(out <= np.maximum(cand, h) + 1e-12)


def test_gru_matches_oracle(rng):
    w = gru_weights(8, 8, rng)
    x, h = rng.standard_normal(8), rng.uniform(-1, 1, 8)
    ref = oracles.gru_step(x.tolist(), h.tolist(), *(w[k].tolist() for k in ("W", "U", "b_ih", "b_hh")))
    assert np.max(np.abs(nn.gru_cell(x, h, w) - ref)) <= 1e-5


def _fgru_weights(rng, n_in=5, units=3):
    fw, bw = gru_weights(n_in, units, rng), gru_weights(n_in, units, rng)
    return {**{f"fwd.{k}": v for k, v in fw.items()}, **{f"bwd.{k}": v for k, v in bw.items()}}


def test_fgru_per_frame_independence(rng):
    w = _fgru_weights(rng)
    x = rng.standard_normal((4, 6, 5))
    y = nn.bidirectional_gru_over_freq(x, w, 3)
    x2 = x.copy()
    x2[[0, 2, 3]] = rng.standard_normal((3, 6, 5))
    np.testing.assert_array_equal(nn.bidirectional_gru_over_freq(x2, w, 3)[1], y[1])
    assert y.shape == (4, 6, 6)


def test_fgru_reversal_symmetry(rng):
    w = _fgru_weights(rng)
    swapped = {("bwd" + k[3:] if k.startswith("fwd") else "fwd" + k[3:]): v for k, v in w.items()}
    x = rng.standard_normal((2, 6, 5))
    y = nn.bidirectional_gru_over_freq(x, w, 3)
    y_rev = nn.bidirectional_gru_over_freq(x[:, ::-1], swapped, 3)
    expected = np.concatenate([y[:, ::-1, 3:], y[:, ::-1, :3]], axis=-1)
    np.testing.assert_allclose(y_rev, expected, atol=1e-12)


def test_fgru_matches_oracle(rng):
    w = _fgru_weights(rng, 4, 3)
    x = rng.standard_normal((2, 5, 4))
    y = nn.bidirectional_gru_over_freq(x, w, 3)
    for t in range(2):
        h = [0.0] * 3
        for f in range(5):
            h = oracles.gru_step(x[t, f].tolist(), h, *(w[f"fwd.{k}"].tolist() for k in ("W", "U", "b_ih", "b_hh")))
            np.testing.assert_allclose(y[t, f, :3], h, atol=1e-5)
        h = [0.0] * 3
        for f in reversed(range(5)):
            h = oracles.gru_step(x[t, f].tolist(), h, *(w[f"bwd.{k}"].tolist() for k in ("W", "U", "b_ih", "b_hh")))
            np.testing.assert_allclose(y[t, f, 3:], h, atol=1e-5)


def test_fgru_param_count(cfg, weights):
    n = sum(v.size for k, v in weights.items() if k.startswith("stage1.fgru."))
    assert n == 2 * 3 * ((128 + 64) * 64 + 2 * 64) == 74_496


# --- fully connected ------------------------------------------------------


def test_fc_identity(rng):
    x = rng.standard_normal(6)
    np.testing.assert_array_equal(nn.fully_connected(x, {"weight": np.eye(6), "bias": np.zeros(6)}), x)


def test_fc_sigmoid_codomain(rng):
    w = {"weight": rng.uniform(-1, 1, (10, 7)), "bias": rng.uniform(-1, 1, 7)}
    y = nn.fully_connected(rng.uniform(-1, 1, (50, 10)), w, "sigmoid")
    assert np.all((y > 0) & (y < 1))
    # float64 saturates to exactly 0/1 for huge pre-activations; the closed bound still holds
    y = nn.fully_connected(rng.standard_normal((50, 10)) * 1e3, w, "sigmoid")
    assert np.all((y >= 0) & (y <= 1))


def test_fc_param_count(weights):
    assert weights["stage1.fc1.weight"].size + weights["stage1.fc1.bias"].size == 66_049


def test_fc_matches_oracle(rng):
    w = {"weight": rng.uniform(-1, 1, (8, 8)), "bias": rng.uniform(-1, 1, 8)}
    x = rng.standard_normal(8)
    ref = oracles.dense(x.tolist(), w["weight"].tolist(), w["bias"].tolist())
    assert np.max(np.abs(nn.fully_connected(x, w) - ref)) <= 1e-5


def test_fc_dimension_mismatch():
    with pytest.raises(DimensionError):
        nn.fully_connected(np.zeros(3), {"weight": np.zeros((4, 2)), "bias": np.zeros(2)})


# --- initialization -------------------------------------------------------


def test_init_deterministic(cfg):
    a, b = nn.init_weights(cfg, 42), nn.init_weights(cfg, 42)
    assert list(a) == list(b)
    for k in a:
        assert a[k].tobytes() == b[k].tobytes()
    c = nn.init_weights(cfg, 43)
    assert any(a[k].tobytes() != c[k].tobytes() for k in a)


def test_init_within_limits(cfg, weights):
    for spec in weight_layout(cfg):
        limit = np.float32(nn.init_limit(spec.fan_in, spec.fan_out))
        w = weights[spec.name]
        assert w.dtype == np.float32 and w.shape == spec.shape
        assert np.all(np.abs(w) <= limit), spec.name


def test_init_scalar_count(cfg, weights):
    from ulcnet.complexity import count_params

    assert sum(v.size for v in weights.values()) == count_params(cfg).total


# --- shape algebra ---------------------------------------------------------


def test_stage1_shape_trace(cfg, prepared):
    x = reorient(np.random.default_rng(0).random((5, 257, 1)))
    trace = [x.shape[1:]]
    for i, filters in enumerate(cfg.conv_filters, start=1):
        x = nn.depthwise_separable_conv(x, prepared[f"stage1.conv{i}"], filters)
        if i > 1:
            x = nn.max_pool_freq(x)
        trace.append(x.shape[1:])
    x = nn.bidirectional_gru_over_freq(x, prepared["stage1.fgru"], 64)
    trace.append(x.shape[1:])
    lw = prepared["stage1.bottleneck"]
    x = nn.pointwise_conv(x, lw["kernel"], lw["bias"])
    trace.append(x.shape[1:])
    assert trace == [(48, 8), (48, 32), (24, 64), (12, 96), (6, 128), (6, 128), (6, 64)]
    assert x.reshape(5, -1).shape[1] == 384


def test_mac_counter_scopes():
    w = {"weight": np.ones((256, 257)), "bias": np.zeros(257)}
    with nn.count_macs() as counter:
        with nn.layer_scope("fc"):
            nn.fully_connected(np.zeros(256), w)
    assert counter.counts == {"fc": 65_792}
    # no counter active: nothing recorded, nothing raised
    nn.fully_connected(np.zeros(256), w)
