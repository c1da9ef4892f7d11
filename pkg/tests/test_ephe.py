"""Elite-weighted search distribution updates and the synthetic bandit."""

import numpy as np
import pytest

from perchlab.dynamics import QuadParams
from perchlab.ephe import (DomainRandomization, EpheConfig, PolicyParams,
                           SearchDistribution, ephe_update, randomize_inertia,
                           sample_episode, select_elites)

PARAMS = QuadParams()


def pp(tau, arot):
    return PolicyParams(tau_cr=tau, a_rot=arot)


def run_bandit(seed, cfg=EpheConfig()):
    """Physics-free quadratic-bowl reward with optimum (0.2 s, 5 N mm)."""
    dist = cfg.initial_distribution()
    episodes = 0
    for ep in range(cfg.max_episodes):
        pairs = sample_episode(dist, seed, ep, cfg, PARAMS)
        rewards = [max(0.0, 1.0 - (p.tau_cr - 0.2) ** 2 - (p.a_rot - 5.0) ** 2 / 25.0)
                   for p in pairs]
        dist, _ = ephe_update(dist, select_elites(pairs, rewards, cfg.n_elite), cfg)
        episodes = ep + 1
        if (dist.sigma_tau < cfg.convergence_eps[0]
                and dist.sigma_arot < cfg.convergence_eps[1]):
            break
    return dist, episodes


def test_update_weighted_mean_example():
    dist = SearchDistribution(1.0, 1.0, 1.0, 1.0)
    elites = [(pp(1.0, 1.0), 1.0), (pp(2.0, 2.0), 1.0), (pp(3.0, 3.0), 2.0)]
    new, stagnant = ephe_update(dist, elites, EpheConfig())
    assert abs(new.mu_tau - 2.25) < 1e-12, f"weighted mean {new.mu_tau} != 2.25"
    assert abs(new.mu_arot - 2.25) < 1e-12
    assert not stagnant


def test_update_degenerate_elites_hit_sigma_floor():
    cfg = EpheConfig()
    elites = [(pp(0.2, 5.0), 1.0)] * 3
    new, _ = ephe_update(SearchDistribution(0.5, 2.0, 0.3, 3.0), elites, cfg)
    assert abs(new.mu_tau - 0.2) < 1e-15 and abs(new.mu_arot - 5.0) < 1e-14
    assert new.sigma_tau == cfg.sigma_floor[0]
    assert new.sigma_arot == cfg.sigma_floor[1]


def test_update_uniform_rewards_give_plain_mean():
    elites = [(pp(0.1, 2.0), 0.7), (pp(0.2, 4.0), 0.7), (pp(0.6, 6.0), 0.7)]
    new, _ = ephe_update(SearchDistribution(0.0, 0.0, 1.0, 1.0), elites, EpheConfig())
    assert abs(new.mu_tau - 0.3) < 1e-12
    assert abs(new.mu_arot - 4.0) < 1e-12


def test_update_invariant_under_reward_rescaling():
    elites = [(pp(0.15, 3.0), 0.2), (pp(0.22, 5.5), 0.5), (pp(0.3, 8.0), 0.9)]
    scaled = [(p, 17.3 * r) for p, r in elites]
    a, _ = ephe_update(SearchDistribution(0.0, 0.0, 1.0, 1.0), elites, EpheConfig())
    b, _ = ephe_update(SearchDistribution(0.0, 0.0, 1.0, 1.0), scaled, EpheConfig())
    assert abs(a.mu_tau - b.mu_tau) < 1e-12
    assert abs(a.sigma_arot - b.sigma_arot) < 1e-12


def test_update_all_zero_rewards_flags_stagnation():
    dist = SearchDistribution(0.2, 5.0, 0.05, 1.0)
    new, stagnant = ephe_update(dist, [(pp(0.1, 1.0), 0.0)] * 3, EpheConfig())
    assert stagnant
    assert new == dist, "stagnant episode must leave the distribution unchanged"


def test_select_elites_takes_best_k():
    pairs = [pp(0.1 * i, float(i)) for i in range(6)]
    rewards = [0.3, 0.9, 0.1, 0.8, 0.85, 0.2]
    elites = select_elites(pairs, rewards, 3)
    assert sorted(r for _, r in elites) == [0.8, 0.85, 0.9]


def test_episode_samples_are_antithetic_and_clamped():
    cfg = EpheConfig()
    dist = SearchDistribution(0.2, 5.0, 0.05, 2.5)
    pairs = sample_episode(dist, seed=4, episode=2, cfg=cfg, params=PARAMS)
    assert len(pairs) == cfg.n_rollouts
    half = cfg.n_rollouts // 2
    for k in range(half):
        a, b = pairs[k], pairs[k + half]
        # mirrored unit noise about mu (holds while no clamp is active)
        if cfg.tau_cr_min < a.tau_cr < 5.0 and cfg.tau_cr_min < b.tau_cr < 5.0:
            assert abs((a.tau_cr - 0.2) + (b.tau_cr - 0.2)) < 1e-12
        if 0.0 < a.a_rot and 0.0 < b.a_rot:
            assert abs((a.a_rot - 5.0) + (b.a_rot - 5.0)) < 1e-9
    for p in pairs:
        assert cfg.tau_cr_min <= p.tau_cr <= 5.0
        assert 0.0 <= p.a_rot <= PARAMS.arm_x * PARAMS.max_thrust_per_motor * 1e3


def test_episode_sampling_marginals():
    cfg = EpheConfig()
    dist = SearchDistribution(0.2, 5.0, 0.05, 2.5)
    taus, arots = [], []
    for ep in range(500):
        for p in sample_episode(dist, 11, ep, cfg, PARAMS):
            taus.append(p.tau_cr)
            arots.append(p.a_rot)
    # clamping trims tails slightly; means stay near mu, spreads near sigma
    assert abs(np.mean(taus) - 0.2) < 0.005, f"tau mean {np.mean(taus):.4f}"
    assert abs(np.std(taus) - 0.05) < 0.01
    assert abs(np.mean(arots) - 5.0) < 0.25, f"a_rot mean {np.mean(arots):.3f}"
    assert abs(np.std(arots) - 2.5) < 0.4


def test_bandit_converges_for_most_seeds():
    hits = 0
    eps_used = []
    for seed in range(20):
        dist, episodes = run_bandit(seed)
        eps_used.append(episodes)
        ok = abs(dist.mu_tau - 0.2) < 0.02 and abs(dist.mu_arot - 5.0) < 0.5
        hits += ok
        if not ok:
            print(f"seed {seed}: mu=({dist.mu_tau:.3f}, {dist.mu_arot:.2f}) missed")
    print(f"bandit: {hits}/20 seeds within (0.02, 0.5), "
          f"mean episodes {np.mean(eps_used):.1f}")
    assert hits >= 18, f"only {hits}/20 bandit seeds converged"


def test_bandit_sigma_contracts():
    cfg = EpheConfig()
    first, last = [], []
    for seed in range(20):
        dist = cfg.initial_distribution()
        for ep in range(cfg.max_episodes):
            pairs = sample_episode(dist, seed, ep, cfg, PARAMS)
            rewards = [max(0.0, 1.0 - (p.tau_cr - 0.2) ** 2 - (p.a_rot - 5.0) ** 2 / 25.0)
                       for p in pairs]
            dist, _ = ephe_update(dist, select_elites(pairs, rewards, cfg.n_elite), cfg)
            if ep == 0:
                first.append(dist.sigma_tau)
        last.append(dist.sigma_tau)
    assert np.median(last) < np.median(first), (
        f"sigma_tau did not contract: {np.median(first):.4f} -> {np.median(last):.4f}")


def test_bandit_from_displaced_start():
    # start 1.4 sigma off-optimum on the a_rot axis: the mean must travel
    # there, not merely contract in place (the tau axis of this bandit is
    # nearly flat at these scales, so displacement is tested where the
    # reward actually ranks the elites)
    cfg = EpheConfig(init_mu=(0.2, 8.5), max_episodes=30)
    hits = 0
    for seed in range(10):
        dist, _ = run_bandit(seed, cfg)
        hits += abs(dist.mu_arot - 5.0) < 1.0
        assert abs(dist.mu_arot - 5.0) < 3.0, (
            f"seed {seed}: mean failed to move toward the optimum ({dist.mu_arot:.2f})")
    print(f"displaced start: {hits}/10 converged")
    assert hits >= 7, f"displaced-start bandit found the optimum only {hits}/10 times"


def test_randomize_inertia_zero_sigma_is_identity():
    rand = DomainRandomization(sigma_mass=0.0, sigma_inertia=0.0)
    out = randomize_inertia(PARAMS, rand, np.random.default_rng(0))
    assert out.mass == PARAMS.mass and out.inertia_yy == PARAMS.inertia_yy


def test_randomize_inertia_statistics_and_bounds():
    rand = DomainRandomization()
    rng = np.random.default_rng(5)
    masses, inertias = [], []
    for _ in range(10_000):
        q = randomize_inertia(PARAMS, rand, rng)
        masses.append(q.mass)
        inertias.append(q.inertia_yy)
        assert q.mass >= 0.5 * PARAMS.mass
        assert abs(q.mass - PARAMS.mass) <= 3.0 * rand.sigma_mass + 1e-15
        assert abs(q.inertia_yy - PARAMS.inertia_yy) <= 3.0 * rand.sigma_inertia + 1e-18
    assert abs(np.mean(masses) - PARAMS.mass) < 0.01 * PARAMS.mass
    assert abs(np.mean(inertias) - PARAMS.inertia_yy) < 0.01 * PARAMS.inertia_yy


def test_search_distribution_mean_pair():
    # the pair invariants (tau_cr > 0, a_rot >= 0) are enforced by the
    # sampling clamp, exercised above; the mean extraction is direct
    dist = SearchDistribution(0.21, 6.5, 0.01, 0.3)
    assert dist.as_params() == PolicyParams(0.21, 6.5)
