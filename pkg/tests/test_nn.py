import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardpinn.autodiff import Jet2, NanError
from hardpinn.nn import (AdamState, ConfigurationError, InitScheme, Mlp, ParamPack, adam_step, init_mlp,
                         load_checkpoint, mlp_forward, net_from_record, net_record, save_checkpoint)


def test_zero_net_is_zero():
    net = Mlp([1, 5, 1])
    j = mlp_forward(net, np.zeros(net.n_params), Jet2(np.array([[0.3], [-1.0]]), 1.0, 0.0))
    assert np.all(j.value == 0) and np.all(j.d1 == 0) and np.all(j.d2 == 0)


def test_identity_layer():
    net = Mlp([1, 1])
    j = net.forward(np.array([1.0, 0.0]), Jet2(np.array([[0.4]]), 1.0, 0.0))
    assert [float(np.ravel(f)[0]) for f in (j.value, j.d1, j.d2)] == [0.4, 1.0, 0.0]


def test_weight_shapes_chain():
    net = Mlp([2, 7, 3, 1])
    layers = net.unflatten(np.arange(net.n_params, dtype=float))
    assert [w.shape for w, _ in layers] == [(7, 2), (3, 7), (1, 3)]
    assert net.n_params == 7 * 2 + 7 + 3 * 7 + 3 + 3 + 1


def test_dimension_mismatch():
    net = Mlp([2, 4, 1])
    with pytest.raises(ConfigurationError):
        net.forward(net.initial_params(), Jet2(np.zeros((3, 1))))
    with pytest.raises(ConfigurationError):
        Mlp([1, 0, 1])
    with pytest.raises(ConfigurationError):
        Mlp([1, 2, 1], activation="relu")


def test_output_layer_is_linear():
    net = Mlp([1, 3, 1])
    theta = net.initial_params(InitScheme(seed=3))
    x = np.array([[0.2]])
    layers = net.unflatten(theta)
    h = np.tanh(x @ layers[0][0].T + layers[0][1])
    assert net(theta, x)[0] == pytest.approx((h @ layers[1][0].T + layers[1][1])[0, 0], rel=1e-15)


def test_tanh_net_derivative_matches_fd():
    net = Mlp([1, 4, 1], init=InitScheme("glorot", seed=11))
    theta = net.initial_params()
    x0, h = 0.37, 1e-6
    j = net.forward(theta, Jet2(np.array([[x0]]), 1.0, 0.0))
    fd = (net(theta, [[x0 + h]])[0] - net(theta, [[x0 - h]])[0]) / (2 * h)
    assert float(j.d1[0]) == pytest.approx(fd, rel=1e-6)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["tanh", "sigmoid", "silu"]), st.integers(0, 1),
       st.floats(-1, 1))
def test_second_directional_derivative_matches_fd(seed, act, axis, x0):
    net = Mlp([2, 6, 6, 1], act, InitScheme("glorot", seed=seed))
    theta = net.initial_params()
    p = np.array([[x0, 0.3 * x0 - 0.2]])
    e = np.zeros((1, 2))
    e[0, axis] = 1.0
    j = net.forward(theta, Jet2(p, e, 0.0))
    h = 1e-4
    f = lambda q: net(theta, q)[0]
    fd2 = (f(p + h * e) - 2 * f(p) + f(p - h * e)) / h**2
    assert float(j.d2[0]) == pytest.approx(fd2, rel=1e-4, abs=1e-6)


def test_normal_sigma_zero_gives_zero_weights():
    net = Mlp([1, 12, 12, 1])
    assert np.all(net.initial_params(InitScheme("normal", seed=1, sigma=0.0)) == 0)


def test_glorot_deterministic():
    a = init_mlp([1, 12, 12, 1], scheme=InitScheme("glorot", seed=42))[1]
    b = init_mlp([1, 12, 12, 1], scheme=InitScheme("glorot", seed=42))[1]
    assert np.array_equal(a, b)
    c = init_mlp([1, 12, 12, 1], scheme=InitScheme("glorot", seed=43))[1]
    assert not np.array_equal(a, c)


def test_glorot_limits_and_zero_biases():
    net = Mlp([3, 50, 1])
    theta = net.initial_params(InitScheme("glorot", seed=0))
    (w1, b1), (w2, b2) = net.unflatten(theta)
    assert np.abs(w1).max() <= np.sqrt(6 / 53) and np.abs(w1).max() > 0.9 * np.sqrt(6 / 53)
    assert np.all(b1 == 0) and np.all(b2 == 0)
    scaled = net.unflatten(net.initial_params(InitScheme("glorot_scaled", seed=0, scale=0.5)))[0][0]
    np.testing.assert_allclose(scaled, 0.5 * w1, rtol=1e-15)


def test_normal_std():
    net = Mlp([100, 100, 1])
    w = net.unflatten(net.initial_params(InitScheme("normal", seed=5, sigma=0.1)))[0][0]
    assert w.size == 10_000
    assert abs(w.std() - 0.1) < 0.005


def test_bad_schemes():
    with pytest.raises(ConfigurationError):
        InitScheme("glorot_scaled", scale=0.0)
    with pytest.raises(ConfigurationError):
        InitScheme("normal", sigma=-1.0)
    with pytest.raises(ConfigurationError):
        InitScheme("he")


def test_adam_zero_gradient_leaves_theta():
    st_ = AdamState(3, learning_rate=0.1)
    theta = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(adam_step(st_, theta, np.zeros(3)), theta)
    assert st_.step == 1


def test_adam_first_step():
    st_ = AdamState(1, learning_rate=0.1)
    new = adam_step(st_, np.array([0.0]), np.array([1.0]))
    assert new[0] == pytest.approx(-0.1 / (1 + 1e-8), rel=1e-12)


def test_adam_decoupled():
    a = adam_step(AdamState(2, 0.1), np.array([0.0, 0.0]), np.array([1.0, -5.0]))
    b = adam_step(AdamState(1, 0.1), np.array([0.0]), np.array([-5.0]))
    assert a[1] == b[0]


def test_adam_rejects_nan():
    with pytest.raises(NanError):
        adam_step(AdamState(1), np.array([0.0]), np.array([np.nan]))


def test_adam_quadratic_convergence():
    st_ = AdamState(1, learning_rate=1e-2)
    theta = np.array([1.0])
    for _ in range(2000):
        theta = adam_step(st_, theta, 2 * theta)
        if abs(theta[0]) < 1e-3:
            break
    assert abs(theta[0]) < 1e-3


def test_param_pack():
    pack = ParamPack()
    a = pack.add("a", 3)
    b = pack.add("b", 2)
    assert (a, b, pack.size) == (slice(0, 3), slice(3, 5), 5)
    with pytest.raises(ConfigurationError):
        pack.add("a", 1)
    assert pack.get(np.arange(5), "b").tolist() == [3, 4]


def test_checkpoint_round_trip(tmp_path):
    net = Mlp([1, 4, 1], "silu", InitScheme("glorot_scaled", seed=9, scale=0.5))
    theta = net.initial_params()
    rec = net_record(net, theta)
    net2, th2 = net_from_record(json.loads(json.dumps(rec)))
    assert net2.widths == net.widths and net2.activation == "silu" and net2.init == net.init
    assert np.array_equal(th2, theta)
    path = tmp_path / "ck.json"
    save_checkpoint(path, {"u": net}, theta, {"seed": 9})
    doc = load_checkpoint(path)
    assert doc["seed"] == 9 and np.array_equal(doc["theta"], theta)
    assert doc["nets"]["u"]["init"]["seed"] == 9
