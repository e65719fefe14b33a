"""
Explore-then-commit mixture policy.

Explores every arm uniformly, identifies the best lattice mixture on the
empirical CDFs and commits the remaining budget to track it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from drbandit.config import MAX_GRID_ROWS
from drbandit.errors import ConfigurationError, HorizonTooSmallError
from drbandit.policy.common import (
    BanditEnv,
    BanditState,
    PolicyTrajectory,
    round_robin,
    select_row,
)
from drbandit.riskmetric import DistortionSpec
from drbandit.simplex import (
    GridScheme,
    GridSpec,
    MixtureWeights,
    best_bernoulli_row,
    grid_matrix,
    grid_size,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EtcConfig:
    """Inputs of the explore-then-commit policy.

    Attributes:
        eps: Lattice step of the discretized simplex.
        delta_min: Minimum sub-optimality gap of the lattice; only the N(eps)
            rule reads it.
        horizon: Horizon T.
        explore_per_arm: Explicit exploration pulls per arm; replaces the
            N(eps) rule when set.
        confidence_scale: Multiplier on the concentration constants (N scales
            with its square).
    """

    eps: float
    delta_min: Optional[float]
    horizon: int
    explore_per_arm: Optional[int] = None
    confidence_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.delta_min is None:
            if self.explore_per_arm is None:
                raise ConfigurationError("The N(eps) rule needs delta_min")
        elif self.delta_min <= 0:
            raise ConfigurationError(f"delta_min must be positive, got {self.delta_min}")
        if not 0 < self.eps <= 1:
            raise ConfigurationError(f"eps must lie in (0, 1], got {self.eps}")
        if self.horizon < 2:
            raise ConfigurationError(f"Horizon must be >= 2, got {self.horizon}")
        if self.explore_per_arm is not None and self.explore_per_arm < 1:
            raise ConfigurationError("explore_per_arm must be >= 1")


def n_epsilon_value(
    k: int, L: float, q: float, delta_min: float, eps: float, horizon: float,
    scale: float = 1.0,
) -> float:
    """Exploration length N(eps) before rounding."""
    if min(k, L, q, delta_min, eps) <= 0 or horizon < 2:
        raise ValueError("n_epsilon needs positive arguments and T >= 2")
    bracket = 32.0 / math.sqrt(math.e) + math.sqrt(
        math.log(2 * k * horizon**2 * (eps ** (-(k - 1)) + 1))
    )
    return (
        scale**2
        * 256.0
        * k
        * math.e
        * (2 * k * L / delta_min) ** (2.0 / q)
        * bracket**2
    )


def n_epsilon(
    k: int, L: float, q: float, delta_min: float, eps: float, horizon: int,
    scale: float = 1.0,
) -> int:
    """Ceiling of N(eps); raises when it does not fit in the horizon."""
    n = math.ceil(n_epsilon_value(k, L, q, delta_min, eps, horizon, scale))
    if n > horizon:
        raise HorizonTooSmallError(
            f"N(eps) = {n} exceeds the horizon T = {horizon}"
        )
    return n


def m_epsilon(
    k: int, L: float, q: float, delta_min: float, eps: float, horizon: int,
    scale: float = 1.0,
) -> float:
    """N(eps) / log T."""
    return n_epsilon_value(k, L, q, delta_min, eps, horizon, scale) / math.log(horizon)


def exploration_budget(cfg: EtcConfig, k: int, spec: DistortionSpec) -> Tuple[int, int]:
    """Return (pulls per arm, N) for the exploration phase."""
    if cfg.explore_per_arm is not None:
        per_arm = cfg.explore_per_arm
        total = k * per_arm
    else:
        assert cfg.delta_min is not None
        total = n_epsilon(
            k,
            spec.holder_L,
            spec.holder_q,
            cfg.delta_min,
            cfg.eps,
            cfg.horizon,
            cfg.confidence_scale,
        )
        per_arm = math.ceil(total / k)
    if k * per_arm > cfg.horizon:
        raise HorizonTooSmallError(
            f"Exploring {per_arm} pulls on {k} arms exceeds T = {cfg.horizon}"
        )
    return per_arm, total


def etc_regret_bound(
    spec: DistortionSpec, k: int, w_ratio: float, m_eps: float, horizon: int,
    discretization: float,
) -> float:
    """Regret bound (L K + W^-q)(3 W M log T / T)^q + discretization error."""
    q = spec.holder_q
    return (spec.holder_L * k + w_ratio ** (-q)) * (
        3 * w_ratio * m_eps * math.log(horizon) / horizon
    ) ** q + discretization


def _commit_estimate(
    state: BanditState, grid: GridSpec, spec: DistortionSpec
) -> MixtureWeights:
    """Best lattice point on the exploration estimates."""
    means = state.bernoulli_means()
    if grid_size(grid) > MAX_GRID_ROWS and means is not None:
        return MixtureWeights.from_array(best_bernoulli_row(spec, grid, means, means))
    matrix = grid_matrix(grid)
    row = select_row(state.mixture_values(spec, matrix), None)
    return MixtureWeights.from_array(matrix[row])


def etc_run(env: BanditEnv, cfg: EtcConfig, spec: DistortionSpec) -> PolicyTrajectory:
    """
    Run explore-then-commit for one trial.

    :param env: simulated environment
    :param cfg: policy configuration
    :param spec: distortion riskmetric
    :return: trajectory with one estimate, recorded at the end of exploration
    """
    k, horizon = env.K, cfg.horizon
    per_arm, _total = exploration_budget(cfg, k, spec)
    state = BanditState(k, horizon)
    actions = np.empty(horizon, dtype=np.int64)
    t = round_robin(env, state, actions, per_arm)

    grid = GridSpec(k, cfg.eps, GridScheme.ETC_LATTICE)
    estimate = _commit_estimate(state, grid, spec)
    logger.debug(f"ETC committed to {estimate.w} after {t} exploration pulls")

    for i in range(k - 1):
        goal = math.floor(horizon * estimate[i])
        if goal <= per_arm:
            continue
        goal = min(goal, state.pulls[i] + horizon - t)
        while state.pulls[i] < goal:
            state.observe(i, env.pull(i))
            actions[t] = i
            t += 1
    while t < horizon:
        state.observe(k - 1, env.pull(k - 1))
        actions[t] = k - 1
        t += 1

    return PolicyTrajectory(
        name="etc",
        K=k,
        actions=actions,
        estimate_history=[(k * per_arm, estimate)],
        final_cdfs=state.final_cdfs(),
    )
