"""Feed-forward flip-moment network: 3 -> 10 -> 10 -> 1, Elu hidden units.

Trained full-batch on mean-squared error with momentum gradient descent.
Inputs arrive already normalized; targets are standardized internally and
de-standardized at inference, so the stored parameters are well scaled
regardless of the moment magnitudes in the training set.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEARNING_RATE = 1e-2
MOMENTUM = 0.9
MAX_STEPS = 50_000
PLATEAU_WINDOW = 100      # steps
PLATEAU_REL = 1e-6        # relative loss improvement across the window


class DivergenceError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, step: int, last_loss: float):
        super().__init__(f"training diverged at step {step} "
                         f"(last finite loss {last_loss:.6g})")
        self.step = step
        self.last_loss = last_loss


def elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, x, np.expm1(x))


def elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, 1.0, np.exp(x))


@dataclass
class ActionNet:
    """Weights for the flip-moment map; output is standardized units."""

    sizes: tuple[int, ...] = (3, 10, 10, 1)
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    target_mean: float = 0.0
    target_std: float = 1.0

    def __post_init__(self):
        if not self.weights:
            rng = np.random.default_rng(0)
            for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
                scale = np.sqrt(2.0 / fan_in)
                self.weights.append(scale * rng.standard_normal((fan_in, fan_out)))
                self.biases.append(np.zeros(fan_out))


def forward(net: ActionNet, x: np.ndarray) -> np.ndarray:
    """Standardized network output, one row per input row."""
    h = np.atleast_2d(np.asarray(x, dtype=float))
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if i < last:
            h = elu(h)
    return h[:, 0]


def predict_moment(net: ActionNet, x: np.ndarray) -> np.ndarray:
    """De-standardized output in N mm (unclamped)."""
    return forward(net, x) * net.target_std + net.target_mean


def loss_and_grads(net: ActionNet, x: np.ndarray, y_std: np.ndarray
                   ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """MSE on standardized targets and its analytic parameter gradients."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    last = len(net.weights) - 1

    acts = [x]          # layer inputs
    pre = []            # pre-activations
    h = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        pre.append(z)
        h = elu(z) if i < last else z
        acts.append(h)

    err = acts[-1][:, 0] - y_std
    loss = float(np.mean(err * err))

    dws: list[np.ndarray] = [np.zeros_like(w) for w in net.weights]
    dbs: list[np.ndarray] = [np.zeros_like(b) for b in net.biases]
    delta = (2.0 / n) * err[:, None]
    for i in range(last, -1, -1):
        if i < last:
            delta = delta * elu_grad(pre[i])
        dws[i] = acts[i].T @ delta
        dbs[i] = np.sum(delta, axis=0)
        if i > 0:
            delta = delta @ net.weights[i].T
    return loss, dws, dbs


def train_action_net(inputs: np.ndarray, targets: np.ndarray, seed: int = 0,
                     lr: float = LEARNING_RATE, momentum: float = MOMENTUM,
                     max_steps: int = MAX_STEPS) -> tuple[ActionNet, dict]:
    """Fit the moment map on normalized inputs / N mm targets.

    Returns the trained net and a report dict with the final training
    RMSE (N mm), the step count, and the stop reason.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    t = np.asarray(targets, dtype=float)
    if x.shape[0] != t.shape[0] or x.shape[0] == 0:
        raise ValueError("inputs and targets must be non-empty and aligned")

    t_mean = float(np.mean(t))
    t_std = float(np.std(t))
    if t_std <= 0.0:
        t_std = 1.0          # constant targets: learn the bias alone
    y = (t - t_mean) / t_std

    rng = np.random.default_rng(seed)
    net = ActionNet(weights=[], biases=[])
    net = ActionNet(
        weights=[np.sqrt(2.0 / fi) * rng.standard_normal((fi, fo))
                 for fi, fo in zip(net.sizes[:-1], net.sizes[1:])],
        biases=[np.zeros(fo) for fo in net.sizes[1:]],
        target_mean=t_mean, target_std=t_std)

    vel_w = [np.zeros_like(w) for w in net.weights]
    vel_b = [np.zeros_like(b) for b in net.biases]
    history: list[float] = []
    last_finite = np.inf
    reason = "max_steps"
    step = 0
    for step in range(1, max_steps + 1):
        loss, dws, dbs = loss_and_grads(net, x, y)
        if not np.isfinite(loss):
            raise DivergenceError(step, last_finite)
        last_finite = loss
        history.append(loss)
        if len(history) > PLATEAU_WINDOW:
            old = history[-PLATEAU_WINDOW - 1]
            if old - loss < PLATEAU_REL * max(old, 1e-30):
                reason = "plateau"
                break
        for i in range(len(net.weights)):
            vel_w[i] = momentum * vel_w[i] - lr * dws[i]
            vel_b[i] = momentum * vel_b[i] - lr * dbs[i]
            net.weights[i] += vel_w[i]
            net.biases[i] += vel_b[i]

    final_loss, _, _ = loss_and_grads(net, x, y)
    rmse = float(np.sqrt(final_loss)) * t_std
    return net, {"rmse": rmse, "steps": step, "stop": reason,
                 "final_loss": final_loss}
