import math

import numpy as np
import pytest

from drbandit.dist import bernoulli_instance
from drbandit.errors import (
    ConfigurationError,
    EmptyGridError,
    HorizonTooSmallError,
    UndefinedRadiusError,
)
from drbandit.policy import etc as etc_module
from drbandit.policy import ucb as ucb_module
from drbandit.policy import (
    POLICIES,
    BanditEnv,
    BanditState,
    EtcConfig,
    UcbConfig,
    UcbVariant,
    ce_index,
    ce_values,
    etc_regret_bound,
    etc_run,
    m_epsilon,
    most_undersampled,
    n_epsilon,
    t_epsilon,
    track,
    ucb_optimistic,
    ucb_regret_bound,
    ucb_run,
    uniform_run,
)
from drbandit.policy.etc import exploration_budget, n_epsilon_value
from drbandit.policy.common import select_row
from drbandit.policy.ucb import optimistic_values
from drbandit.riskmetric import DistortionKind, DistortionSpec, dr_upper_bound
from drbandit.simplex import GridScheme, GridSpec, MixtureWeights, grid_matrix, min_gap, oracle_discrete

GINI = DistortionSpec(DistortionKind.GINI_DEVIATION)
MEAN = DistortionSpec(DistortionKind.RISK_NEUTRAL)
PAPER_ARMS = bernoulli_instance([0.4, 0.9])


def _observed_state(counts, horizon=100_000, scale=1.0):
    """State whose arm i saw counts[i] = (zeros, ones)."""
    state = BanditState(len(counts), horizon, confidence_scale=scale)
    for i, (zeros, ones) in enumerate(counts):
        for _ in range(zeros):
            state.observe(i, 0.0)
        for _ in range(ones):
            state.observe(i, 1.0)
    return state


def test_uniform_run_counts():
    traj = uniform_run(BanditEnv(bernoulli_instance([0.1, 0.2, 0.3, 0.4]), 100))
    assert list(traj.pull_counts()) == [25, 25, 25, 25]
    traj = uniform_run(BanditEnv(bernoulli_instance([0.1, 0.2, 0.3]), 10))
    assert list(traj.pull_counts()) == [4, 3, 3]
    assert traj.estimate_history[0][1].as_array() == pytest.approx([1 / 3] * 3)


def test_env_rejects_short_horizon():
    with pytest.raises(ConfigurationError):
        BanditEnv(bernoulli_instance([0.1, 0.2, 0.3]), 2)


@pytest.mark.parametrize("policy", ["etc", "ucb", "ce-ucb", "uniform"])
def test_pull_counts_are_conserved(policy):
    horizon = 600
    env = BanditEnv(PAPER_ARMS, horizon, seed=3)
    if policy == "uniform":
        traj = POLICIES[policy](env)
    elif policy == "etc":
        traj = POLICIES[policy](env, EtcConfig(0.1, 0.01, horizon, explore_per_arm=50), GINI)
    else:
        variant = UcbVariant.COMPUTATIONALLY_EFFICIENT if policy == "ce-ucb" else UcbVariant.EXACT
        cfg = UcbConfig(0.1, 0.1, horizon, variant, explore_per_arm=50, confidence_scale=1e-4)
        traj = POLICIES[policy](env, cfg, GINI)
    history = traj.pull_history()
    assert np.array_equal(history.sum(axis=1), np.arange(1, horizon + 1))
    assert traj.pull_counts().sum() == horizon
    assert traj.name == policy


def test_etc_tracking_accounting():
    """Committed fractions stay within 2N/T of the committed estimate."""
    rng = np.random.default_rng(12)
    horizon, per_arm = 2_000, 50
    for i in range(100):
        k = int(rng.integers(2, 4))
        arms = bernoulli_instance(rng.uniform(size=k))
        spec = GINI if i % 2 else MEAN
        cfg = EtcConfig(0.1, 0.01, horizon, explore_per_arm=per_arm)
        traj = etc_run(BanditEnv(arms, horizon, seed=i), cfg, spec)
        estimate = traj.estimate_history[0][1].as_array()
        total = k * per_arm
        err = np.abs(traj.pull_counts() / horizon - estimate)
        assert np.all(err <= 2 * total / horizon), f"instance {i}: {err}"


def test_etc_commits_to_vertex():
    arms = bernoulli_instance([0.2, 0.9])
    cfg = EtcConfig(0.1, 0.01, 2_000, explore_per_arm=100)
    traj = etc_run(BanditEnv(arms, 2_000, seed=1), cfg, MEAN)
    assert traj.estimate_history == [(200, MixtureWeights((0.0, 1.0)))]
    assert list(traj.pull_counts()) == [100, 1_900]
    assert np.array_equal(traj.actions[:200], np.arange(200) % 2)


def test_etc_formula_exploration():
    delta = min_gap(GINI, PAPER_ARMS, GridSpec(2, 0.5))
    cfg = EtcConfig(0.5, delta, 100_000, confidence_scale=1e-3)
    per_arm, total = exploration_budget(cfg, 2, GINI)
    assert total == n_epsilon(2, 1.0, 1.0, delta, 0.5, 100_000, 1e-3)
    assert per_arm == math.ceil(total / 2)
    traj = etc_run(BanditEnv(PAPER_ARMS, 100_000, seed=2), cfg, GINI)
    assert np.array_equal(traj.actions[: 2 * per_arm], np.arange(2 * per_arm) % 2)
    assert traj.estimate_history[0][0] == 2 * per_arm


def test_etc_single_arm():
    arms = bernoulli_instance([0.3])
    traj = etc_run(BanditEnv(arms, 100), EtcConfig(0.5, 0.01, 100, explore_per_arm=5), GINI)
    assert list(traj.pull_counts()) == [100]


def test_n_epsilon_regression_value():
    value = n_epsilon_value(2, 1.0, 1.0, 0.0125, 0.5, 1e6)
    assert value == pytest.approx(8.8339e10, rel=1e-3)
    with pytest.raises(HorizonTooSmallError):
        n_epsilon(2, 1.0, 1.0, 0.0125, 0.5, 1_000_000)


def test_n_epsilon_scales_with_gap():
    base = n_epsilon_value(2, 1.0, 1.0, 0.0125, 0.5, 1e6)
    assert n_epsilon_value(2, 1.0, 1.0, 0.025, 0.5, 1e6) == pytest.approx(base / 4, rel=1e-12)
    assert n_epsilon_value(2, 1.0, 1.0, 0.0125, 0.5, 1e6, scale=1e-2) == pytest.approx(
        base * 1e-4, rel=1e-12
    )


def test_m_epsilon_varies_slowly():
    low = m_epsilon(2, 1.0, 1.0, 0.0125, 0.5, 100_000)
    high = m_epsilon(2, 1.0, 1.0, 0.0125, 0.5, 1_000_000)
    assert 0.75 < low / high < 1.33


def test_etc_config_validation():
    with pytest.raises(ConfigurationError):
        EtcConfig(0.1, 0.0, 1_000)
    with pytest.raises(ConfigurationError):
        EtcConfig(1.5, 0.1, 1_000)
    with pytest.raises(HorizonTooSmallError):
        exploration_budget(EtcConfig(0.1, 0.1, 1_000, explore_per_arm=600), 2, GINI)


def test_etc_regret_bound():
    bound = etc_regret_bound(MEAN, 2, 0.5, 100.0, 10_000, 0.0)
    assert bound == pytest.approx(4 * (150 * math.log(10_000) / 10_000))
    assert etc_regret_bound(MEAN, 2, 0.5, 100.0, 10_000, 0.1) == pytest.approx(bound + 0.1)


def test_most_undersampled():
    assert most_undersampled(0, np.array([0.5, 0.5]), np.array([0, 0])) == 0
    assert most_undersampled(10, np.array([0.8, 0.2]), np.array([5, 5])) == 0
    assert most_undersampled(10, np.array([0.2, 0.8]), np.array([5, 5])) == 1


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_tracking_error_bound(k):
    rng = np.random.default_rng(k)
    target = rng.dirichlet(np.ones(k))
    steps = 5_000
    history = track(target, np.zeros(k, dtype=np.int64), steps)
    t = np.arange(1, steps + 1, dtype=float)
    err = np.abs(history / t[:, None] - target[None, :]).max(axis=1)
    past = t > np.max((k - 1) / target)
    assert np.all(err[past] < k / t[past])


def test_ucb_config():
    cfg = UcbConfig(0.1, 0.5, 10_000)
    assert cfg.forced_exploration(2) == 125
    assert UcbConfig(0.1, 0.5, 10_000, explore_per_arm=7).forced_exploration(3) == 7
    with pytest.raises(HorizonTooSmallError):
        UcbConfig(0.1, 0.5, 10_000, explore_per_arm=6_000).forced_exploration(2)
    with pytest.raises(ConfigurationError):
        UcbConfig(1.0, 0.5, 10_000)
    assert UcbConfig(0.1, 0.5, 100, variant="ce").variant == UcbVariant.COMPUTATIONALLY_EFFICIENT


def test_ucb_tracks_injected_oracle():
    """With the true CDFs injected the estimate is fixed and tracked."""
    horizon, per_arm = 5_000, 100
    cfg = UcbConfig(0.1, 0.1, horizon, explore_per_arm=per_arm)
    env = BanditEnv(PAPER_ARMS, horizon, seed=4)
    traj = ucb_run(env, cfg, GINI, inject_cdfs=[a.cdf for a in PAPER_ARMS])
    expected = oracle_discrete(GINI, PAPER_ARMS, GridSpec(2, 0.1, GridScheme.UCB_MIDPOINT))
    assert len(traj.estimate_history) == 1
    assert traj.estimate_history[0][0] == 2 * per_arm
    target = traj.estimate_history[0][1].as_array()
    assert target == pytest.approx(expected.weights.as_array())

    history = traj.pull_history()
    t = np.arange(1, horizon + 1, dtype=float)
    err = np.abs(history / t[:, None] - target[None, :]).max(axis=1)
    past = t > np.max((per_arm - 1) / target)
    assert np.all(err[past] < 2 / t[past])


def test_ucb_single_arm():
    env = BanditEnv(bernoulli_instance([0.3]), 200)
    traj = ucb_run(env, UcbConfig(0.1, 0.5, 200, explore_per_arm=10), GINI)
    assert list(traj.pull_counts()) == [200]


def test_ucb_recompute_stride():
    cfg = UcbConfig(0.1, 0.1, 3_000, explore_per_arm=100, confidence_scale=1e-3, recompute_every=10)
    traj = ucb_run(BanditEnv(PAPER_ARMS, 3_000, seed=5), cfg, GINI)
    assert all((t - 200) % 10 == 0 for t, _ in traj.estimate_history)


def test_ucb_optimistic_without_radius_is_the_discrete_oracle():
    grid = GridSpec(2, 0.1, GridScheme.UCB_MIDPOINT)
    state = BanditState.with_cdfs([a.cdf for a in PAPER_ARMS], [10, 10], 1_000)
    expected = oracle_discrete(GINI, PAPER_ARMS, grid).weights
    assert ucb_optimistic(state, grid, GINI).as_array() == pytest.approx(expected.as_array())


def test_ucb_optimistic_keeps_tied_previous():
    grid = GridSpec(2, 0.1, GridScheme.UCB_MIDPOINT)
    state = BanditState.with_cdfs([a.cdf for a in PAPER_ARMS], [10, 10], 1_000)
    # a = (0.75, 0.25) and (0.85, 0.15) reach the same mixture value
    first = ucb_optimistic(state, grid, GINI)
    assert first.as_array() == pytest.approx([0.75, 0.25])
    kept = ucb_optimistic(state, grid, GINI, previous=MixtureWeights((0.85, 0.15)))
    assert kept.as_array() == pytest.approx([0.85, 0.15])


def test_ucb_optimistic_wide_radius():
    state = _observed_state([(0, 1), (1, 0)])
    grid = GridSpec(2, 0.1, GridScheme.UCB_MIDPOINT)
    values = optimistic_values(state, grid_matrix(grid), GINI)
    assert values == pytest.approx(np.full(len(values), 0.25))
    assert ucb_optimistic(state, grid, GINI).as_array() == pytest.approx([0.05, 0.95])


def test_radius_needs_every_arm_pulled():
    state = _observed_state([(1, 1), (0, 0)])
    with pytest.raises(UndefinedRadiusError):
        state.radii()


def test_optimistic_values_general_support():
    state = BanditState(2, 10_000, confidence_scale=1e-3)
    for i, x in [(0, 0.5), (0, 0.0), (0, 1.0), (1, 1.0), (1, 0.2), (1, 0.2)]:
        state.observe(i, x)
    matrix = grid_matrix(GridSpec(2, 0.25))
    empirical = state.mixture_values(GINI, matrix)
    optimistic = optimistic_values(state, matrix, GINI)
    assert np.all(optimistic >= empirical - 1e-12)
    assert np.all(optimistic <= dr_upper_bound(GINI, state.estimates()) + 1e-12)

    flat = BanditState(2, 10_000, confidence_scale=0.0)
    for i, x in [(0, 0.5), (0, 0.0), (0, 1.0), (1, 1.0), (1, 0.2), (1, 0.2)]:
        flat.observe(i, x)
    assert optimistic_values(flat, matrix, GINI) == pytest.approx(flat.mixture_values(GINI, matrix))


def test_ce_index():
    state = _observed_state([(2, 2), (12, 4)])
    radii = state.radii()
    assert radii[0] == pytest.approx(2 * radii[1])
    vertex = MixtureWeights.vertex(2, 0)
    assert ce_index(state, vertex, GINI) == pytest.approx(0.25 + radii[0])
    half = MixtureWeights((0.5, 0.5))
    expected = state.mixture_values(GINI, half.as_array()[None, :])[0] + 0.5 * radii.sum()
    assert ce_index(state, half, GINI) == pytest.approx(expected)


def test_ce_values_dominate_empirical_values():
    state = _observed_state([(30, 20), (5, 45), (25, 25)], scale=1e-3)
    matrix = grid_matrix(GridSpec(3, 0.1, GridScheme.UCB_MIDPOINT))
    for spec in (GINI, MEAN, DistortionSpec(DistortionKind.PHT, 0.5)):
        assert np.all(ce_values(state, matrix, spec) >= state.mixture_values(spec, matrix))


def test_ce_index_without_radius_is_the_mixture_value():
    state = BanditState.with_cdfs([a.cdf for a in PAPER_ARMS], [1_000, 1_000], 10_000)
    assert ce_index(state, MixtureWeights((0.8, 0.2)), GINI) == pytest.approx(0.25)


def test_ce_ucb_run():
    cfg = UcbConfig(0.1, 0.1, 2_000, UcbVariant.COMPUTATIONALLY_EFFICIENT, 100, 1e-3)
    traj = ucb_run(BanditEnv(PAPER_ARMS, 2_000, seed=6), cfg, GINI)
    assert traj.name == "ce-ucb"
    assert traj.estimate_history


def test_t_epsilon():
    k, L, q, delta, eps, rho = 2, 1.0, 1.0, 0.0125, 0.5, 0.1
    t0, t_eps = t_epsilon(k, L, q, delta, eps, rho)
    threshold = (delta / (2 * k * L)) ** (1 / q) / 16

    def lhs(s):
        return (math.sqrt(2 * math.e * math.log(s)) + 32) / math.sqrt(rho * s * eps / 4)

    assert lhs(t0) <= threshold
    assert lhs(t0 - 1) > threshold
    assert t_eps == pytest.approx((2 / eps) * (t0 - 1))


def test_ucb_regret_bound_decreases():
    args = (GINI, 0.25, 0.5, 0.1, 0.1)
    assert ucb_regret_bound(*args, 10**5, 0.0) > ucb_regret_bound(*args, 10**7, 0.0)


@pytest.mark.slow
def test_etc_finds_the_oracle_with_large_exploration():
    horizon, hits = 50_000, 0
    cfg = EtcConfig(0.1, 0.01, horizon, explore_per_arm=20_000)
    for trial in range(100):
        traj = etc_run(BanditEnv(PAPER_ARMS, horizon, seed=1, trial=trial), cfg, GINI)
        if np.allclose(traj.estimate_history[0][1].as_array(), [0.8, 0.2], atol=1e-9):
            hits += 1
    assert hits >= 95


def test_select_row_rejects_empty_values():
    with pytest.raises(EmptyGridError):
        select_row(np.empty(0), None)


def test_ucb_on_empty_midpoint_grid():
    arms = bernoulli_instance([0.1, 0.2, 0.3, 0.4])
    cfg = UcbConfig(0.1, 0.8, 400, explore_per_arm=5)
    with pytest.raises(EmptyGridError):
        ucb_run(BanditEnv(arms, 400, seed=1), cfg, GINI)
    state = _observed_state([(1, 1)] * 4)
    with pytest.raises(EmptyGridError):
        ucb_optimistic(state, GridSpec(4, 0.8, GridScheme.UCB_MIDPOINT), GINI)


@pytest.mark.parametrize("spec", [GINI, DistortionSpec(DistortionKind.CVAR, 0.75)])
def test_branch_and_bound_tracking_matches_dense_grid(monkeypatch, spec):
    arms = bernoulli_instance([0.3, 0.6, 0.9])
    cfg = UcbConfig(0.1, 0.1, 3_000, explore_per_arm=20, confidence_scale=1e-3)
    dense = ucb_run(BanditEnv(arms, 3_000, seed=4), cfg, spec)
    monkeypatch.setattr(ucb_module, "MAX_GRID_ROWS", 0)
    searched = ucb_run(BanditEnv(arms, 3_000, seed=4), cfg, spec)
    final_dense = dense.estimate_history[-1][1].as_array()
    assert searched.estimate_history[-1][1].as_array() == pytest.approx(final_dense, abs=1e-9)
    assert np.abs(searched.pull_counts() - dense.pull_counts()).max() <= 2


def test_bonus_index_needs_a_dense_grid(monkeypatch):
    cfg = UcbConfig(0.1, 0.1, 1_000, UcbVariant.COMPUTATIONALLY_EFFICIENT, 20)
    monkeypatch.setattr(ucb_module, "MAX_GRID_ROWS", 0)
    with pytest.raises(ConfigurationError):
        ucb_run(BanditEnv(PAPER_ARMS, 1_000, seed=1), cfg, GINI)


def test_etc_commit_on_large_grid_matches_dense(monkeypatch):
    arms = bernoulli_instance([0.2, 0.55, 0.8])
    cfg = EtcConfig(0.05, None, 2_000, explore_per_arm=100)
    dense = etc_run(BanditEnv(arms, 2_000, seed=9), cfg, GINI)
    monkeypatch.setattr(etc_module, "MAX_GRID_ROWS", 0)
    searched = etc_run(BanditEnv(arms, 2_000, seed=9), cfg, GINI)
    committed = dense.estimate_history[0][1].as_array()
    assert searched.estimate_history[0][1].as_array() == pytest.approx(committed, abs=1e-9)


def test_etc_config_gap_only_for_the_formula():
    assert EtcConfig(0.1, None, 1_000, explore_per_arm=10).delta_min is None
    with pytest.raises(ConfigurationError):
        EtcConfig(0.1, None, 1_000)
