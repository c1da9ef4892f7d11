"""Episodic search over trigger/flip pairs with elite reweighting.

The policy for one approach condition is two numbers: the tau threshold
that fires the flip and the flip moment a_rot.  A diagonal Gaussian
search distribution over that pair is updated from the best K of N
rollouts per episode, each elite weighted by its reward:

    mu'    = sum_k r_k theta_k / sum_k r_k
    sigma' = sqrt( sum_k r_k (theta_k - mu')^2 / sum_k r_k )

floored elementwise so exploration never collapses, and stopped when
both sigmas shrink under the convergence epsilons or the episode budget
runs out.  Episode samples are drawn antithetically (the second half of
each batch mirrors the unit noise of the first half about mu), which
cancels most of the random walk the weighted elite mean would otherwise
perform along reward directions with little curvature.  Mass and pitch
inertia are re-drawn per rollout (truncated Gaussians) so the learned
pair is robust to build variation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .contact import LandingClass
from .control import ApproachCondition, ControllerGains, a_rot_max
from .dynamics import QuadParams
from .legs import LegConfig
from .reward import RewardConfig, compute_reward
from .rollout import RolloutConfig, RolloutResult, fixed_pair_policy, run_rollout
from .sensing import SensoryState


@dataclass(frozen=True)
class PolicyParams:
    """One trigger/flip pair."""

    tau_cr: float   # trigger threshold on sensed tau [s]
    a_rot: float    # flip moment [N mm]


@dataclass(frozen=True)
class SearchDistribution:
    mu_tau: float
    mu_arot: float
    sigma_tau: float
    sigma_arot: float

    def as_params(self) -> PolicyParams:
        return PolicyParams(self.mu_tau, self.mu_arot)


@dataclass(frozen=True)
class EpheConfig:
    n_rollouts: int = 8          # samples per episode
    n_elite: int = 3             # reward-weighted survivors
    max_episodes: int = 15
    # centered on the advocated trigger band and the midpoint of the
    # achievable moment range so +/-2 sigma spans both search axes
    init_mu: tuple[float, float] = (0.20, 5.0)        # (tau_cr [s], a_rot [N mm])
    init_sigma: tuple[float, float] = (0.05, 2.5)
    sigma_floor: tuple[float, float] = (0.002, 0.1)
    convergence_eps: tuple[float, float] = (0.005, 0.2)
    eval_rollouts: int = 10
    tau_cr_min: float = 0.01     # sampling clamp [s]

    def initial_distribution(self) -> SearchDistribution:
        return SearchDistribution(self.init_mu[0], self.init_mu[1],
                                  self.init_sigma[0], self.init_sigma[1])


@dataclass(frozen=True)
class DomainRandomization:
    """Per-rollout physical-parameter jitter (build variation)."""

    sigma_mass: float = 0.5e-3       # [kg]
    sigma_inertia: float = 1.5e-6    # [kg m^2]
    truncate: float = 3.0            # +/- sigmas
    floor_frac: float = 0.5          # never below this fraction of base


def _truncated_normal(base: float, sigma: float, trunc: float, floor: float,
                      rng: np.random.Generator) -> float:
    if sigma <= 0.0:
        return base
    for _ in range(64):
        v = base + sigma * rng.standard_normal()
        if abs(v - base) <= trunc * sigma:
            return max(v, floor)
    return base


def randomize_inertia(params: QuadParams, rand: DomainRandomization,
                      rng: np.random.Generator) -> QuadParams:
    """Fresh mass and pitch inertia, truncated and floored to stay physical."""
    mass = _truncated_normal(params.mass, rand.sigma_mass, rand.truncate,
                             rand.floor_frac * params.mass, rng)
    iyy = _truncated_normal(params.inertia_yy, rand.sigma_inertia, rand.truncate,
                            rand.floor_frac * params.inertia_yy, rng)
    return replace(params, mass=mass, inertia_yy=iyy)


def _clamp_pair(tau: float, arot: float, cfg: EpheConfig,
                params: QuadParams) -> PolicyParams:
    tau = min(max(tau, cfg.tau_cr_min), 5.0)
    arot = min(max(arot, 0.0), a_rot_max(params))
    return PolicyParams(tau, arot)


def sample_pair(dist: SearchDistribution, rng: np.random.Generator,
                cfg: EpheConfig, params: QuadParams) -> PolicyParams:
    """Draw one pair from the search distribution, clamped into range."""
    tau = dist.mu_tau + dist.sigma_tau * rng.standard_normal()
    arot = dist.mu_arot + dist.sigma_arot * rng.standard_normal()
    return _clamp_pair(tau, arot, cfg, params)


def sample_episode(dist: SearchDistribution, seed: int, episode: int,
                   cfg: EpheConfig, params: QuadParams) -> list[PolicyParams]:
    """Antithetic episode batch: rollout k >= N/2 mirrors the unit noise
    of rollout k - N/2 about mu (a leftover odd rollout draws fresh).
    Every sample is still marginally ~ N(mu, diag(sigma^2)), clamped."""
    n = cfg.n_rollouts
    half = n // 2
    noises = []
    for k in range(half):
        rng = np.random.default_rng([seed, episode, k])
        noises.append(rng.standard_normal(2))
    for k in range(half):
        noises.append(-noises[k])
    if n % 2:
        rng = np.random.default_rng([seed, episode, n - 1])
        noises.append(rng.standard_normal(2))
    return [_clamp_pair(dist.mu_tau + dist.sigma_tau * e[0],
                        dist.mu_arot + dist.sigma_arot * e[1], cfg, params)
            for e in noises]


def select_elites(pairs: list[PolicyParams], rewards: list[float],
                  n_elite: int) -> list[tuple[PolicyParams, float]]:
    """Top-k rollouts of an episode by reward, ties broken by sample order."""
    order = sorted(range(len(rewards)), key=lambda j: -rewards[j])
    return [(pairs[j], rewards[j]) for j in order[:n_elite]]


def ephe_update(dist: SearchDistribution, elites: list[tuple[PolicyParams, float]],
                cfg: EpheConfig = EpheConfig()) -> tuple[SearchDistribution, bool]:
    """One episode update from the elite (pair, reward) rollouts.

    Returns the new distribution and a stagnation flag: when every elite
    reward is zero there is nothing to weight by and the distribution is
    left unchanged.
    """
    if not elites:
        raise ValueError("elites must be non-empty")
    wsum = sum(r for _, r in elites)
    if wsum <= 0.0:
        return dist, True
    mu_t = sum(r * p.tau_cr for p, r in elites) / wsum
    mu_a = sum(r * p.a_rot for p, r in elites) / wsum
    var_t = sum(r * (p.tau_cr - mu_t) ** 2 for p, r in elites) / wsum
    var_a = sum(r * (p.a_rot - mu_a) ** 2 for p, r in elites) / wsum
    sig_t = max(math.sqrt(var_t), cfg.sigma_floor[0])
    sig_a = max(math.sqrt(var_a), cfg.sigma_floor[1])
    return SearchDistribution(mu_t, mu_a, sig_t, sig_a), False


@dataclass
class ConditionResult:
    """Everything learned about one approach condition."""

    condition: ApproachCondition
    leg_name: str
    seed: int
    mu: PolicyParams
    sigma: tuple[float, float]
    episodes: int
    converged: bool
    stagnant_episodes: int
    feasible: bool
    total_rollouts: int
    success_rate: float                 # OptimalFourLeg fraction over eval
    outcome_counts: dict[str, int]
    s_trg: SensoryState | None          # nominal trigger state at the mean pair
    trigger_tau: float | None           # sensed tau at the nominal trigger
    a_rot: float                        # converged flip moment [N mm]
    best_reward: float
    curve: list[dict]                   # per-episode learning-curve rows


def learn_condition(cond: ApproachCondition, leg: LegConfig, params: QuadParams,
                    seed: int, ephe: EpheConfig = EpheConfig(),
                    rand: DomainRandomization | None = DomainRandomization(),
                    gains: ControllerGains = ControllerGains(),
                    rollout_cfg: RolloutConfig = RolloutConfig(),
                    reward_cfg: RewardConfig = RewardConfig()) -> ConditionResult:
    """Optimize one trigger/flip pair for a single approach condition."""
    dist = ephe.initial_distribution()
    curve: list[dict] = []
    best_reward = 0.0
    total = 0
    stagnant = 0
    converged = False
    episodes = 0

    for ep in range(ephe.max_episodes):
        pairs = sample_episode(dist, seed, ep, ephe, params)
        rewards: list[float] = []
        for k, pair in enumerate(pairs):
            rng = np.random.default_rng([seed, ep, k, 1])
            p = randomize_inertia(params, rand, rng) if rand is not None else params
            res = run_rollout(cond, leg, p, fixed_pair_policy(pair.tau_cr, pair.a_rot),
                              rollout_cfg, gains)
            r = compute_reward(res.outcome, reward_cfg).total
            rewards.append(r)
            total += 1
        episodes = ep + 1
        dist, stag = ephe_update(dist, select_elites(pairs, rewards, ephe.n_elite), ephe)
        if stag:
            stagnant += 1
        ep_best = max(rewards)
        if ep_best > best_reward:
            best_reward = ep_best
        curve.append({
            "episode": episodes,
            "mu_tau": dist.mu_tau,
            "mu_arot": dist.mu_arot,
            "sigma_tau": dist.sigma_tau,
            "sigma_arot": dist.sigma_arot,
            "best_reward": ep_best,
        })
        if (dist.sigma_tau < ephe.convergence_eps[0]
                and dist.sigma_arot < ephe.convergence_eps[1]):
            converged = True
            break

    mu = dist.as_params()
    policy = fixed_pair_policy(mu.tau_cr, mu.a_rot)

    # nominal rollout at the mean pair: trigger state and feasibility
    nominal = run_rollout(cond, leg, params, policy, rollout_cfg, gains)
    total += 1

    counts: dict[str, int] = {c.value: 0 for c in LandingClass}
    succ = 0
    for j in range(ephe.eval_rollouts):
        rng = np.random.default_rng([seed, 10_000_019, j])
        p = randomize_inertia(params, rand, rng) if rand is not None else params
        res = run_rollout(cond, leg, p, policy, rollout_cfg, gains)
        counts[res.outcome.landing_class.value] += 1
        if res.outcome.landing_class is LandingClass.OPTIMAL_FOUR_LEG:
            succ += 1
        total += 1
    n_eval = max(ephe.eval_rollouts, 1)

    return ConditionResult(
        condition=cond,
        leg_name=leg.name,
        seed=seed,
        mu=mu,
        sigma=(dist.sigma_tau, dist.sigma_arot),
        episodes=episodes,
        converged=converged,
        stagnant_episodes=stagnant,
        feasible=nominal.velocity_converged,
        total_rollouts=total,
        success_rate=succ / n_eval,
        outcome_counts=counts,
        s_trg=nominal.s_trg,
        trigger_tau=nominal.outcome.trigger_tau,
        a_rot=mu.a_rot,
        best_reward=best_reward,
        curve=curve,
    )
