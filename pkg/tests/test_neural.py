import math

import numpy as np
import pytest

from regime_forecast.neural import (
    AdadeltaState, DenseLayerParams, LstmLayerParams, NetworkGraph, adadelta_step, analytic_gradients,
    backward, forward, gradient_check, leaky_relu, load_network, lstm_cell_forward, lstm_layer_forward,
    make_network, mse_loss, save_network,
)


def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def scalar_cell(W, b, x, h, c):
    """Unit-by-unit evaluation of the gate equations with plain floats."""
    units = len(h)
    z = list(h) + list(x)
    new_c, new_h = [], []
    for k in range(units):
        pre = [sum(W[g][k][m] * z[m] for m in range(len(z))) + b[g][k] for g in range(4)]
        f, i, o = _sig(pre[0]), _sig(pre[1]), _sig(pre[2])
        cand = math.tanh(pre[3])
        ck = f * c[k] + i * cand
        new_c.append(ck)
        new_h.append(o * math.tanh(ck))
    return new_h, new_c


def randomize(net, rng, scale=0.5):
    for p in net.parameters().values():
        p += rng.uniform(-scale, scale, p.shape)
    return net


# --- cell --------------------------------------------------------------------


def test_zero_parameter_cell():
    params = LstmLayerParams(np.zeros((4, 3, 5)), np.zeros((4, 3)))
    c_prev = np.array([0.3, -1.2, 2.0])
    out = lstm_cell_forward(params, np.array([1.0, -2.0]), np.array([0.5, 0.1, -0.4]), c_prev)
    assert np.allclose(out["c"], 0.5 * c_prev, atol=0, rtol=1e-15)
    assert np.allclose(out["h"], 0.5 * np.tanh(0.5 * c_prev), atol=0, rtol=1e-15)


def test_bias_only_path(rng):
    params = LstmLayerParams.init(rng, 2, 3)
    params.b[...] = rng.normal(size=(4, 3))
    out = lstm_cell_forward(params, np.zeros(2), np.zeros(3), np.zeros(3))
    c = _sig_vec(params.b_i) * np.tanh(params.b_c)
    assert np.allclose(out["c"], c, rtol=1e-14, atol=0)
    assert np.allclose(out["h"], _sig_vec(params.b_o) * np.tanh(c), rtol=1e-14, atol=0)


def _sig_vec(v):
    return np.array([_sig(x) for x in v])


def test_cell_matches_scalar_oracle(rng):
    for _ in range(5):
        params = LstmLayerParams(rng.normal(size=(4, 2, 5)), rng.normal(size=(4, 2)))
        x, h, c = rng.normal(size=3), rng.normal(size=2), rng.normal(size=2)
        out = lstm_cell_forward(params, x, h, c)
        ref_h, ref_c = scalar_cell(params.W.tolist(), params.b.tolist(), x.tolist(), h.tolist(), c.tolist())
        assert np.max(np.abs(out["h"] - ref_h)) < 1e-12
        assert np.max(np.abs(out["c"] - ref_c)) < 1e-12


def test_cell_shape_mismatch(rng):
    params = LstmLayerParams.init(rng, 2, 3)
    with pytest.raises(ValueError):
        lstm_cell_forward(params, np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        LstmLayerParams(np.zeros((4, 3, 3)), np.zeros((4, 3)))


def test_layer_equals_repeated_cell(rng):
    params = LstmLayerParams(rng.normal(size=(4, 4, 6)), rng.normal(size=(4, 4)))
    X = rng.normal(size=(3, 7, 2))
    H, _ = lstm_layer_forward(params, X)
    h = np.zeros((3, 4))
    c = np.zeros((3, 4))
    for t in range(7):
        out = lstm_cell_forward(params, X[:, t], h, c)
        h, c = out["h"], out["c"]
        assert np.max(np.abs(H[:, t] - h)) < 1e-14


def test_leaky_relu():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 3.0])
    assert np.array_equal(leaky_relu(x), [-0.02, -0.005, 0.0, 0.5, 3.0])
    grid = np.linspace(-5, 5, 101)
    assert np.all(np.diff(leaky_relu(grid)) > 0)


# --- network forward ---------------------------------------------------------


def test_zero_network_predicts_zero(rng):
    net = make_network(rng, (1,), [[4, 3]], [3, 2, 1], 6)
    for p in net.parameters().values():
        p[...] = 0.0
    out = forward(net, rng.normal(size=(6, 1)))
    assert out["prediction"] == 0.0


def test_single_branch_matches_composed_cells(rng):
    l1 = LstmLayerParams(rng.normal(size=(4, 1, 2)), rng.normal(size=(4, 1)))
    l2 = LstmLayerParams(rng.normal(size=(4, 1, 2)), rng.normal(size=(4, 1)))
    dense = DenseLayerParams(np.array([[1.0]]), np.array([0.0]), "linear")
    net = NetworkGraph([[l1, l2]], [dense], (1,), 4)
    x = rng.normal(size=(4, 1))
    h1 = c1 = h2 = c2 = np.zeros(1)
    for t in range(4):
        o1 = lstm_cell_forward(l1, x[t], h1, c1)
        h1, c1 = o1["h"], o1["c"]
        o2 = lstm_cell_forward(l2, h1, h2, c2)
        h2, c2 = o2["h"], o2["c"]
    assert abs(forward(net, x)["prediction"] - h2[0]) < 1e-14


def test_duplicated_branch_features_identical(rng):
    net = make_network(rng, (2, 2), [[5, 3], [5, 3]], [4, 1], 5)
    for a, b in zip(net.branches[0], net.branches[1]):
        b.W[...] = a.W
        b.b[...] = a.b
    x = rng.normal(size=(5, 2))
    out = forward(net, [x, x.copy()])
    merged = out["cache"]["merged"][0]
    assert np.array_equal(merged[:3], merged[3:])


def test_features_are_penultimate_layer(rng):
    net = make_network(rng, (1,), [[4]], [5, 6, 2], 3, reduction=[0.5, 0.5])
    out = forward(net, rng.normal(size=(2, 3, 1)))
    assert out["features"].shape == (2, 6)
    assert net.feature_width == 6


def test_forward_input_validation(rng):
    net = make_network(rng, (1,), [[3]], [1], 4)
    with pytest.raises(ValueError):
        forward(net, np.zeros((5, 1)))
    bad = np.zeros((4, 1))
    bad[2, 0] = np.nan
    with pytest.raises(ValueError):
        forward(net, bad)
    with pytest.raises(ValueError):
        forward(net, [np.zeros((4, 1)), np.zeros((4, 1))])


def test_graph_rejects_inconsistent_widths(rng):
    lstm = LstmLayerParams.init(rng, 1, 3)
    with pytest.raises(ValueError):
        NetworkGraph([[lstm]], [DenseLayerParams.init(rng, 4, 1, "linear")], (1,), 3)
    with pytest.raises(ValueError):
        NetworkGraph([[lstm]], [DenseLayerParams.init(rng, 3, 2, "linear")], (1,), 3)


def test_bounded_parameters_stay_finite(rng):
    net = make_network(rng, (1, 2), [[6, 4], [5]], [6, 6, 1], 512)
    for p in net.parameters().values():
        p[...] = rng.uniform(-10, 10, p.shape)
    X = [rng.normal(scale=10, size=(2, 512, 1)), rng.normal(scale=10, size=(2, 512, 2))]
    out = forward(net, X)
    grads = backward(net, out["cache"], np.ones(2))
    assert np.all(np.isfinite(out["prediction"]))
    assert all(np.all(np.isfinite(g)) for g in grads.values())


# --- backward ----------------------------------------------------------------


def small_net(rng):
    net = randomize(make_network(rng, (1,), [[3, 3]], [1], 5), rng)
    return net, rng.normal(size=(5, 1)), rng.normal(size=1)


def test_backward_matches_finite_differences_in_float64(rng):
    for _ in range(3):
        net, x, y = small_net(rng)
        assert gradient_check(net, (x, y), 1e-5, numeric_dtype=np.float64) < 1e-4


def test_backward_zero_and_linearity(rng):
    net = randomize(make_network(rng, (1, 2), [[4], [3]], [3, 1], 6), rng)
    x = [rng.normal(size=(3, 6, 1)), rng.normal(size=(3, 6, 2))]
    out = forward(net, x)
    g0 = backward(net, out["cache"], np.zeros(3))
    assert all(np.all(v == 0) for v in g0.values())
    lg = rng.normal(size=3)
    g1 = backward(net, out["cache"], lg)
    g2 = backward(net, out["cache"], 2 * lg)
    for k in g1:
        assert np.allclose(g2[k], 2 * g1[k], rtol=1e-14, atol=0)


def test_backward_rejects_foreign_cache(rng):
    a = make_network(rng, (1,), [[3]], [1], 4)
    b = make_network(rng, (1,), [[3]], [1], 4)
    out = forward(a, np.zeros((4, 1)))
    with pytest.raises(ValueError):
        backward(b, out["cache"], 1.0)
    with pytest.raises(ValueError):
        backward(a, None, 1.0)


def test_gradient_check_architectures(rng):
    nets = [
        make_network(rng, (1,), [[5, 5, 3]], [3, 3, 2, 2], 6, reduction=[0.5, 0.5]),
        make_network(rng, (3,), [[5, 5, 3]], [3, 3, 2, 2], 6, reduction=[0.5, 0.5]),
        make_network(rng, (1, 3), [[5, 3], [5, 3]], [3, 2, 2, 1], 6),
    ]
    for net in nets:
        randomize(net, rng, 1.0)
        x = [rng.normal(size=(6, d)) for d in net.input_dims]
        assert gradient_check(net, (x, rng.normal(size=1))) < 1e-4


def test_gradient_check_detects_corruption(rng):
    net, x, y = small_net(rng)

    def corrupted(net, inputs, targets):
        grads = analytic_gradients(net, inputs, targets)
        grads["branch0.lstm1.W"] = grads["branch0.lstm1.W"].copy()
        grads["branch0.lstm1.W"][0, 0, 0] *= 2.0
        return grads

    assert gradient_check(net, (x, y), 1e-5, backward_fn=corrupted) > 1e-1


def test_gradient_check_linear_head(rng):
    net = make_network(rng, (4,), [[]], [1], 3)
    net.head[0].b[...] = 0.3
    x, y = rng.normal(size=(3, 4)), rng.normal(size=1)
    assert gradient_check(net, (x, y), 1e-5, numeric_dtype=np.float64) < 1e-8


def test_gradient_check_rejects_bad_eps(rng):
    net, x, y = small_net(rng)
    with pytest.raises(ValueError):
        gradient_check(net, (x, y), 0.0)


# --- loss and optimizer ------------------------------------------------------


def test_mse_examples():
    assert mse_loss([1.5, -2.0], [1.5, -2.0])["loss"] == 0.0
    out = mse_loss([2.0], [0.0])
    assert out["loss"] == 4.0 and np.array_equal(out["grad"], [4.0])
    assert mse_loss([1.0, 3.0], [0.0, 0.0])["loss"] == 5.0
    with pytest.raises(ValueError):
        mse_loss([], [])
    with pytest.raises(ValueError):
        mse_loss([1.0, 2.0], [1.0])


def test_adadelta_zero_gradient():
    params = {"w": np.array([1.0, -2.0])}
    state = AdadeltaState.for_params(params)
    state.sq_grad["w"][...] = [0.4, 0.2]
    state.sq_update["w"][...] = [0.1, 0.3]
    adadelta_step(state, params, {"w": np.zeros(2)})
    assert np.array_equal(params["w"], [1.0, -2.0])
    assert np.allclose(state.sq_grad["w"], [0.38, 0.19], rtol=1e-15)
    assert np.allclose(state.sq_update["w"], [0.095, 0.285], rtol=1e-15)


def test_adadelta_first_step():
    params = {"w": np.array([0.0])}
    state = AdadeltaState.for_params(params, learning_rate=1.0, rho=0.95, epsilon=1e-7)
    step = adadelta_step(state, params, {"w": np.array([1.0])})["w"][0]
    assert abs(step - (-1.41421e-3)) < 1e-8
    assert abs(step - (-math.sqrt(1e-7) / math.sqrt(0.05 + 1e-7))) < 1e-12


def test_adadelta_descends(rng):
    params = {"w": rng.normal(size=20)}
    state = AdadeltaState.for_params(params)
    g = rng.normal(size=20)
    before = params["w"].copy()
    adadelta_step(state, params, {"w": g})
    assert np.array_equal(np.sign(params["w"] - before), -np.sign(g))
    with pytest.raises(ValueError):
        adadelta_step(state, params, {"w": np.zeros(3)})


# --- checkpoints -------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path, rng):
    net = randomize(make_network(rng, (1, 3), [[4, 2], [3]], [4, 2, 2], 5, reduction=[0.5, 0.5],
                                 meta={"kind": "test"}), rng)
    params = net.parameters()
    state = AdadeltaState.for_params(params)
    adadelta_step(state, params, {k: rng.normal(size=v.shape) for k, v in params.items()})
    path = tmp_path / "net.json"
    save_network(net, path, state)
    back = load_network(path)
    for k, v in net.parameters().items():
        assert np.array_equal(back.parameters()[k], v)
    assert back.describe() == net.describe()
    save_network(back, tmp_path / "again.json", state)
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()
