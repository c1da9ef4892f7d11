"""Two-stage landing policy: boundary trigger plus feed-forward moment map.

Stage one decides *when*: a one-class boundary over the normalized
sensory triple (tau, |theta_x|, d_ceil) fires as soon as the approach
enters the region where flips have historically succeeded.  Stage two
decides *how hard*: the action network maps the firing state to a pitch
moment.  Both stages share one input normalizer fit on the identical
training set.  theta_x enters as an absolute value — training data flies
one approach direction and the vehicle is mirror-symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actionnet import ActionNet, predict_moment, train_action_net
from .contact import LandingClass, LandingOutcome
from .control import ApproachCondition, ControllerGains, a_rot_max
from .dynamics import QuadParams
from .jsonio import canonical_json_bytes, dump_json, load_json, sha256_hex
from .legs import LegConfig
from .ocsvm import OcSvmModel, decision_function, train_ocsvm
from .rollout import RolloutConfig, RolloutResult, run_rollout
from .sensing import SensoryState


@dataclass(frozen=True)
class Normalizer:
    """Zero-mean unit-variance map over (tau, |theta_x|, d_ceil)."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(3)
        std = np.asarray(self.std, dtype=float).reshape(3)
        if np.any(std <= 0.0):
            raise ValueError(f"normalizer std must be positive, got {std}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std


def state_vector(s: SensoryState) -> np.ndarray:
    """Canonical input triple; theta_x folded to the vx >= 0 half-space."""
    return np.array([s.tau, abs(s.theta_x), s.d_ceil])


def fit_normalizer(states: list[SensoryState]) -> Normalizer:
    x = np.array([state_vector(s) for s in states])
    std = np.std(x, axis=0)
    std[std <= 0.0] = 1.0      # degenerate axis: pass through unscaled
    return Normalizer(np.mean(x, axis=0), std)


def train_trigger(points: list[SensoryState], gamma: float = 2.0,
                  nu: float = 0.05, norm: Normalizer | None = None
                  ) -> tuple[OcSvmModel, Normalizer]:
    """Fit the fire/hold boundary around successful trigger states."""
    if len(points) < 10:
        raise ValueError(f"need at least 10 trigger states, got {len(points)}")
    if norm is None:
        norm = fit_normalizer(points)
    x = norm.apply(np.array([state_vector(s) for s in points]))
    return train_ocsvm(x, gamma=gamma, nu=nu), norm


def trigger_decision(model: OcSvmModel, norm: Normalizer, s: SensoryState) -> bool:
    """True = fire.  Latching across ticks is the caller's rollout loop."""
    f = decision_function(model, norm.apply(state_vector(s)))
    return bool(f[0] > 0.0)


def train_action(pairs: list[tuple[SensoryState, float]],
                 norm: Normalizer | None = None, seed: int = 0
                 ) -> tuple[ActionNet, Normalizer, dict]:
    """Fit the moment map on (trigger state, a_rot N mm) pairs."""
    if not pairs:
        raise ValueError("need at least one training pair")
    states = [s for s, _ in pairs]
    if norm is None:
        norm = fit_normalizer(states)
    x = norm.apply(np.array([state_vector(s) for s in states]))
    t = np.array([a for _, a in pairs], dtype=float)
    net, report = train_action_net(x, t, seed=seed)
    return net, norm, report


def act(net: ActionNet, norm: Normalizer, s: SensoryState,
        a_max: float) -> float:
    """Flip moment for a firing state, clamped to the achievable range."""
    raw = float(predict_moment(net, norm.apply(state_vector(s)))[0])
    return min(max(raw, 0.0), a_max)


@dataclass(frozen=True)
class TrainedPolicy:
    normalizer: Normalizer
    trigger: OcSvmModel
    action: ActionNet
    success_threshold: float
    provenance: dict


def train_two_stage(pairs: list[tuple[SensoryState, float]],
                    success_threshold: float = 0.8, gamma: float = 2.0,
                    nu: float = 0.05, seed: int = 0,
                    dataset_sha256: str = "") -> tuple[TrainedPolicy, dict]:
    """Train both stages on one filtered dataset; returns policy + report."""
    states = [s for s, _ in pairs]
    norm = fit_normalizer(states)
    trigger, _ = train_trigger(states, gamma=gamma, nu=nu, norm=norm)
    net, _, report = train_action(pairs, norm=norm, seed=seed)
    x = norm.apply(np.array([state_vector(s) for s in states]))
    report["nu_violation_fraction"] = float(
        np.mean(decision_function(trigger, x) < 0.0))
    report["n_pairs"] = len(pairs)
    provenance = {
        "dataset_sha256": dataset_sha256,
        "hyperparams": {"gamma": gamma, "nu": nu, "seed": seed,
                        "success_threshold": success_threshold},
    }
    return TrainedPolicy(norm, trigger, net, success_threshold, provenance), report


def policy_to_dict(policy: TrainedPolicy) -> dict:
    return {
        "normalizer": {"mean": policy.normalizer.mean.tolist(),
                       "std": policy.normalizer.std.tolist()},
        "trigger": {"gamma": policy.trigger.gamma,
                    "nu": policy.trigger.nu,
                    "rho": policy.trigger.rho,
                    "support_vectors": policy.trigger.support_vectors.tolist(),
                    "alphas": policy.trigger.alphas.tolist()},
        "action": {"sizes": list(policy.action.sizes),
                   "weights": [w.tolist() for w in policy.action.weights],
                   "biases": [b.tolist() for b in policy.action.biases],
                   "target_mean": policy.action.target_mean,
                   "target_std": policy.action.target_std},
        "provenance": policy.provenance,
    }


def policy_from_dict(doc: dict) -> TrainedPolicy:
    norm = Normalizer(np.array(doc["normalizer"]["mean"]),
                      np.array(doc["normalizer"]["std"]))
    trg = doc["trigger"]
    trigger = OcSvmModel(np.array(trg["support_vectors"]),
                         np.array(trg["alphas"]), float(trg["rho"]),
                         float(trg["gamma"]), float(trg["nu"]))
    action_doc = doc["action"]
    net = ActionNet(sizes=tuple(action_doc["sizes"]),
                    weights=[np.array(w) for w in action_doc["weights"]],
                    biases=[np.array(b) for b in action_doc["biases"]],
                    target_mean=float(action_doc["target_mean"]),
                    target_std=float(action_doc["target_std"]))
    prov = doc.get("provenance", {})
    threshold = prov.get("hyperparams", {}).get("success_threshold", 0.8)
    return TrainedPolicy(norm, trigger, net, float(threshold), prov)


def save_policy(policy: TrainedPolicy, path) -> bytes:
    return dump_json(policy_to_dict(policy), path)


def load_policy(path) -> TrainedPolicy:
    return policy_from_dict(load_json(path))


def policy_sha256(policy: TrainedPolicy) -> str:
    return sha256_hex(canonical_json_bytes(policy_to_dict(policy)))


@dataclass
class LandingRecord:
    """One two-stage flight: outcome plus what the policy did."""

    outcome: LandingOutcome
    no_trigger: bool
    s_fire: SensoryState | None
    a_rot: float | None
    result: RolloutResult

    def success(self) -> bool:
        return self.outcome.landing_class is LandingClass.OPTIMAL_FOUR_LEG


def two_stage_policy_fn(policy: TrainedPolicy, params: QuadParams):
    """Rollout closure: fire-check each tick, emit the mapped moment."""
    a_max = a_rot_max(params)

    def fn(s: SensoryState) -> float | None:
        if trigger_decision(policy.trigger, policy.normalizer, s):
            return act(policy.action, policy.normalizer, s, a_max)
        return None

    return fn


def run_two_stage(cond: ApproachCondition, leg: LegConfig,
                  policy: TrainedPolicy, params: QuadParams = QuadParams(),
                  cfg: RolloutConfig = RolloutConfig(),
                  gains: ControllerGains = ControllerGains(),
                  rng: np.random.Generator | None = None) -> LandingRecord:
    res = run_rollout(cond, leg, params, two_stage_policy_fn(policy, params),
                      cfg, gains, rng)
    return LandingRecord(outcome=res.outcome, no_trigger=not res.triggered,
                         s_fire=res.s_trg, a_rot=res.a_rot, result=res)
