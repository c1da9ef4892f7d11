"""Flip-moment network: activations, analytic gradients, training behavior."""

import numpy as np
import pytest

from perchlab.actionnet import (ActionNet, DivergenceError, elu, elu_grad,
                                forward, loss_and_grads, predict_moment,
                                train_action_net)


def test_elu_values():
    x = np.array([0.0, 1.0, -1.0, -40.0, 3.5])
    y = elu(x)
    assert y[0] == 0.0
    assert y[1] == 1.0
    assert abs(y[2] - (np.exp(-1.0) - 1.0)) < 1e-15
    # exp(-40) sits below one ulp of 1.0, so elu(-40) rounds to exactly -1
    assert -1.0 <= y[3] < -0.99, "deep negative inputs must saturate near -1"
    assert elu(np.array([-20.0]))[0] > -1.0, "saturation is asymptotic"
    assert y[4] == 3.5
    # gradient is continuous at the kink: exp(0) = 1 on the left
    g = elu_grad(np.array([-1e-12, 0.0, 1e-12]))
    assert np.all(np.abs(g - 1.0) < 1e-9)


def test_zero_weights_pass_bias_through():
    sizes = (3, 10, 10, 1)
    net = ActionNet(
        weights=[np.zeros((fi, fo)) for fi, fo in zip(sizes[:-1], sizes[1:])],
        biases=[np.zeros(fo) for fo in sizes[1:]],
        target_mean=4.0, target_std=2.0)
    net.biases[-1][0] = 0.7
    x = np.array([[0.3, -1.2, 8.0], [0.0, 0.0, 0.0]])
    out = forward(net, x)
    assert np.allclose(out, 0.7, atol=1e-15)
    assert np.allclose(predict_moment(net, x), 0.7 * 2.0 + 4.0, atol=1e-14)


def test_analytic_gradients_match_central_differences():
    rng = np.random.default_rng(7)
    net = ActionNet()          # seed-0 He init from __post_init__
    x = rng.standard_normal((12, 3))
    y = rng.standard_normal(12)
    _, dws, dbs = loss_and_grads(net, x, y)

    h = 1e-5
    worst = 0.0
    for layer in range(len(net.weights)):
        w = net.weights[layer]
        idx = [(int(i), int(j)) for i, j in
               zip(rng.integers(0, w.shape[0], 10), rng.integers(0, w.shape[1], 10))]
        for i, j in idx:
            keep = w[i, j]
            w[i, j] = keep + h
            lp, _, _ = loss_and_grads(net, x, y)
            w[i, j] = keep - h
            lm, _, _ = loss_and_grads(net, x, y)
            w[i, j] = keep
            num = (lp - lm) / (2.0 * h)
            ana = dws[layer][i, j]
            rel = abs(num - ana) / max(abs(num), abs(ana), 1e-8)
            worst = max(worst, rel)
        b = net.biases[layer]
        for j in rng.integers(0, b.shape[0], 5):
            keep = b[j]
            b[j] = keep + h
            lp, _, _ = loss_and_grads(net, x, y)
            b[j] = keep - h
            lm, _, _ = loss_and_grads(net, x, y)
            b[j] = keep
            num = (lp - lm) / (2.0 * h)
            rel = abs(num - dbs[layer][j]) / max(abs(num), abs(dbs[layer][j]), 1e-8)
            worst = max(worst, rel)
    print(f"worst gradient relative error: {worst:.2e}")
    assert worst < 1e-4


def test_learns_smooth_moment_map():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1.5, 1.5, size=(80, 3))
    y = 5.0 + 3.0 * np.sin(x[:, 0]) + x[:, 1] * x[:, 2]
    net, report = train_action_net(x, y, seed=0, max_steps=20_000)
    resid = predict_moment(net, x) - y
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    print(f"smooth-map fit: rmse={rmse:.4f} N mm, std={np.std(y):.4f}, "
          f"steps={report['steps']}, stop={report['stop']}")
    assert rmse < 0.15 * np.std(y), f"rmse {rmse:.4f} vs bar {0.15 * np.std(y):.4f}"
    assert abs(report["rmse"] - rmse) < 1e-9, "report rmse must match residuals"


def test_training_is_deterministic_per_seed():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((30, 3))
    y = rng.standard_normal(30)
    net_a, rep_a = train_action_net(x, y, seed=4, max_steps=500)
    net_b, rep_b = train_action_net(x, y, seed=4, max_steps=500)
    net_c, _ = train_action_net(x, y, seed=5, max_steps=500)
    for wa, wb in zip(net_a.weights, net_b.weights):
        assert np.array_equal(wa, wb)
    assert rep_a == rep_b
    assert any(not np.array_equal(wa, wc)
               for wa, wc in zip(net_a.weights, net_c.weights))


def test_divergence_raises():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    with np.errstate(all="ignore"), pytest.raises(DivergenceError) as err:
        train_action_net(x, y, seed=0, lr=1e6)
    assert err.value.step >= 1
    assert np.isfinite(err.value.last_loss)


def test_constant_targets_learn_the_bias():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((25, 3))
    y = np.full(25, 6.25)
    net, report = train_action_net(x, y, seed=0)
    assert net.target_std == 1.0, "zero-variance targets must not divide by zero"
    pred = predict_moment(net, x)
    assert np.all(np.abs(pred - 6.25) < 0.05), f"max err {np.max(np.abs(pred - 6.25)):.4f}"
    assert report["stop"] in ("plateau", "max_steps")


def test_rejects_misaligned_data():
    with pytest.raises(ValueError):
        train_action_net(np.zeros((4, 3)), np.zeros(5))
    with pytest.raises(ValueError):
        train_action_net(np.zeros((0, 3)), np.zeros(0))
