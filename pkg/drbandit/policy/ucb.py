"""
Optimistic mixture-tracking policy.

After round-robin forced exploration, every step picks the grid mixture with
the largest optimistic riskmetric over the Wasserstein confidence balls and
pulls the most under-sampled arm with respect to it.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from drbandit.config import MASS_SHIFT_RESOLUTION, MAX_GRID_ROWS, VALUE_TOL
from drbandit.dist import FiniteCdf
from drbandit.errors import (
    ConfigurationError,
    EmptyGridError,
    HorizonTooSmallError,
    UnsupportedSupportError,
)
from drbandit.policy.common import (
    BanditEnv,
    BanditState,
    PolicyTrajectory,
    most_undersampled,
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


class UcbVariant(str, Enum):
    EXACT = "exact"
    COMPUTATIONALLY_EFFICIENT = "ce"


@dataclass(frozen=True)
class UcbConfig:
    """Inputs of the optimistic tracking policies.

    Attributes:
        rho: Exploration rate in (0, 1).
        eps: Step of the midpoint grid.
        horizon: Horizon T.
        variant: Exact optimistic search or the bonus-based index.
        explore_per_arm: Explicit forced-exploration pulls per arm; replaces
            ceil(rho T eps / 4) when set.
        confidence_scale: Multiplier on the confidence radius.
        recompute_every: Steps between estimate recomputations.
    """

    rho: float
    eps: float
    horizon: int
    variant: UcbVariant = UcbVariant.EXACT
    explore_per_arm: Optional[int] = None
    confidence_scale: float = 1.0
    recompute_every: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", UcbVariant(self.variant))
        if not 0 < self.rho < 1:
            raise ConfigurationError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0 < self.eps <= 1:
            raise ConfigurationError(f"eps must lie in (0, 1], got {self.eps}")
        if self.horizon < 2:
            raise ConfigurationError(f"Horizon must be >= 2, got {self.horizon}")
        if self.confidence_scale < 0:
            raise ConfigurationError("confidence_scale must be nonnegative")
        if self.recompute_every < 1:
            raise ConfigurationError("recompute_every must be >= 1")
        if self.explore_per_arm is not None and self.explore_per_arm < 1:
            raise ConfigurationError("explore_per_arm must be >= 1")

    def forced_exploration(self, k: int) -> int:
        """Pulls per arm in the forced-exploration phase."""
        if self.explore_per_arm is not None:
            per_arm = self.explore_per_arm
        else:
            per_arm = math.ceil(self.rho * self.horizon * self.eps / 4)
        if k * per_arm > self.horizon:
            raise HorizonTooSmallError(
                f"Forced exploration of {k} x {per_arm} pulls exceeds T = {self.horizon}"
            )
        return per_arm


def _mass_shift_table(
    cdf: FiniteCdf, radius: float, atoms: np.ndarray, resolution: float
) -> Tuple[np.ndarray, int]:
    """
    CDFs reachable by moving mass between the lowest and highest atoms of
    ``cdf`` within Wasserstein ``radius``, evaluated at ``atoms``.

    Returns the (candidates, len(atoms)) table and the row of the unshifted CDF.
    """
    base = cdf.cdf_at(atoms)
    lo, hi = cdf.values[0], cdf.values[-1]
    if hi <= lo or radius <= 0:
        return base[None, :], 0
    span = hi - lo
    up = min(cdf.probs[0], radius / span)
    down = min(cdf.probs[-1], radius / span)
    steps = max(int(math.ceil(1.0 / resolution)), 1)
    deltas = np.unique(np.concatenate([np.linspace(-down, up, steps + 1), [0.0]]))
    # moving delta from lo to hi lowers F on [lo, hi) by delta
    inside = (atoms >= lo) & (atoms < hi)
    table = base[None, :] - deltas[:, None] * inside[None, :]
    return np.clip(table, 0.0, 1.0), int(np.flatnonzero(deltas == 0.0)[0])


def _optimistic_general(
    spec: DistortionSpec,
    matrix: np.ndarray,
    cdfs: Sequence[FiniteCdf],
    radii: np.ndarray,
    resolution: float,
) -> np.ndarray:
    atoms = np.unique(np.concatenate([np.asarray(c.values) for c in cdfs]))
    tables: List[np.ndarray] = []
    starts: List[int] = []
    for cdf, radius in zip(cdfs, radii):
        table, start = _mass_shift_table(cdf, float(radius), atoms, resolution)
        tables.append(table)
        starts.append(start)
    widths = np.diff(atoms)
    lead = atoms[0] * float(spec.h(1.0))

    def evaluate(cdf_rows: np.ndarray) -> np.ndarray:
        if len(atoms) == 1:
            return np.full(cdf_rows.shape[0], lead)
        survival = np.clip(1.0 - cdf_rows[:, :-1], 0.0, 1.0)
        return lead + spec.h(survival) @ widths

    values = np.empty(len(matrix))
    for g, a in enumerate(matrix):
        chosen = list(starts)
        best = -np.inf
        for _ in range(2):
            for i in range(len(cdfs)):
                others = sum(
                    a[j] * tables[j][chosen[j]] for j in range(len(cdfs)) if j != i
                )
                candidates = evaluate(a[i] * tables[i] + others)
                chosen[i] = int(np.argmax(candidates))
                best = max(best, float(candidates[chosen[i]]))
        values[g] = best
    return values


def optimistic_values(
    state: BanditState,
    matrix: np.ndarray,
    spec: DistortionSpec,
    resolution: float = MASS_SHIFT_RESOLUTION,
) -> np.ndarray:
    """
    Largest riskmetric of each grid mixture over the confidence balls.

    Bernoulli arms: the mixture mean ranges over an interval and the maximum
    of h is taken at its peak clipped to that interval. Other arms: mass
    shifts between extreme observed atoms, coordinate by coordinate.
    """
    radii = state.radii()
    means = state.bernoulli_means()
    if means is not None:
        lo = matrix @ np.clip(means - radii, 0.0, 1.0)
        hi = matrix @ np.clip(means + radii, 0.0, 1.0)
        return spec.h(np.clip(np.clip(spec.peak, lo, hi), 0.0, 1.0))
    return _optimistic_general(spec, matrix, state.estimates(), radii, resolution)


def _row_of(matrix: np.ndarray, weights: Optional[MixtureWeights]) -> Optional[int]:
    if weights is None:
        return None
    hits = np.flatnonzero(np.all(np.abs(matrix - weights.as_array()) <= VALUE_TOL, axis=1))
    return int(hits[0]) if len(hits) else None


def _optimistic_bounds(state: BanditState) -> Tuple[np.ndarray, np.ndarray]:
    means = state.bernoulli_means()
    if means is None:
        raise UnsupportedSupportError(
            f"Grids beyond {MAX_GRID_ROWS} points need Bernoulli estimates"
        )
    radii = state.radii()
    return np.clip(means - radii, 0.0, 1.0), np.clip(means + radii, 0.0, 1.0)


def ucb_optimistic(
    state: BanditState,
    grid: GridSpec,
    spec: DistortionSpec,
    previous: Optional[MixtureWeights] = None,
) -> MixtureWeights:
    """Optimistic grid estimate; ``previous`` is kept while it still attains the max."""
    size = grid_size(grid)
    if size == 0:
        raise EmptyGridError(f"Grid {grid} has no points")
    if size > MAX_GRID_ROWS:
        lower, upper = _optimistic_bounds(state)
        prev = previous.as_array() if previous is not None else None
        row = best_bernoulli_row(spec, grid, lower, upper, prev)
        return MixtureWeights.from_array(row)
    matrix = grid_matrix(grid)
    values = optimistic_values(state, matrix, spec)
    return MixtureWeights.from_array(matrix[select_row(values, _row_of(matrix, previous))])


Scorer = Callable[[BanditState, np.ndarray, DistortionSpec], np.ndarray]


class MatrixSearch:
    """Scores every row of the materialized grid and remembers the chosen row."""

    def __init__(self, grid: GridSpec, scorer: Scorer) -> None:
        self.matrix = grid_matrix(grid)
        self.scorer = scorer
        self.row: Optional[int] = None

    def __call__(self, state: BanditState, spec: DistortionSpec) -> np.ndarray:
        self.row = select_row(self.scorer(state, self.matrix, spec), self.row)
        return self.matrix[self.row]


class BernoulliSearch:
    """Optimistic branch-and-bound search over a grid too large to materialize."""

    def __init__(self, grid: GridSpec) -> None:
        self.grid = grid
        self.target: Optional[np.ndarray] = None

    def __call__(self, state: BanditState, spec: DistortionSpec) -> np.ndarray:
        lower, upper = _optimistic_bounds(state)
        self.target = best_bernoulli_row(spec, self.grid, lower, upper, self.target)
        return self.target


def grid_search(grid: GridSpec, scorer: Scorer) -> "MatrixSearch | BernoulliSearch":
    """Row search for ``grid``; past MAX_GRID_ROWS only the exact optimistic index works."""
    size = grid_size(grid)
    if size == 0:
        raise EmptyGridError(f"Grid {grid} has no points; lower eps")
    if size <= MAX_GRID_ROWS:
        return MatrixSearch(grid, scorer)
    if scorer is not optimistic_values:
        raise ConfigurationError(
            f"Grid {grid} has {size} points, the bonus index allows {MAX_GRID_ROWS}"
        )
    logger.info(f"Grid {grid} has {size} points, searching it by branch and bound")
    return BernoulliSearch(grid)


def tracking_run(
    env: BanditEnv,
    cfg: UcbConfig,
    spec: DistortionSpec,
    scorer: Scorer,
    name: str,
    inject_cdfs: Optional[Sequence[FiniteCdf]] = None,
) -> PolicyTrajectory:
    """Forced exploration, then estimate-and-track with ``scorer`` on the midpoint grid."""
    k, horizon = env.K, cfg.horizon
    search = grid_search(GridSpec(k, cfg.eps, GridScheme.UCB_MIDPOINT), scorer)
    per_arm = cfg.forced_exploration(k)
    state = BanditState(k, horizon, cfg.confidence_scale)
    actions = np.empty(horizon, dtype=np.int64)
    t = round_robin(env, state, actions, per_arm)
    scoring_state = state
    if inject_cdfs is not None:
        scoring_state = BanditState.with_cdfs(inject_cdfs, state.pulls, horizon)

    history: List[Tuple[int, MixtureWeights]] = []
    target = np.zeros(k)
    start = t
    while t < horizon:
        if (t - start) % cfg.recompute_every == 0:
            chosen = search(scoring_state, spec)
            if not history or not np.array_equal(chosen, target):
                target = chosen
                history.append((t, MixtureWeights.from_array(target)))
                logger.debug(f"{name}: estimate {target} at t={t}")
        arm = most_undersampled(t, target, state.pulls)
        state.observe(arm, env.pull(arm))
        if scoring_state is not state:
            scoring_state.pulls[arm] += 1
        actions[t] = arm
        t += 1

    return PolicyTrajectory(
        name=name,
        K=k,
        actions=actions,
        estimate_history=history,
        final_cdfs=state.final_cdfs(),
    )


def ucb_run(
    env: BanditEnv,
    cfg: UcbConfig,
    spec: DistortionSpec,
    inject_cdfs: Optional[Sequence[FiniteCdf]] = None,
) -> PolicyTrajectory:
    """
    Run the optimistic tracking policy for one trial.

    :param env: simulated environment
    :param cfg: policy configuration; ``cfg.variant`` picks the exact
        optimistic search or the bonus index
    :param spec: distortion riskmetric
    :param inject_cdfs: fixed CDFs to score with instead of the empirical ones
    :return: trajectory with the estimate recorded at every change point
    """
    if cfg.variant == UcbVariant.COMPUTATIONALLY_EFFICIENT:
        from drbandit.policy.ce_ucb import ce_values

        return tracking_run(env, cfg, spec, ce_values, "ce-ucb", inject_cdfs)
    return tracking_run(env, cfg, spec, optimistic_values, "ucb", inject_cdfs)


def t_epsilon(
    k: int, L: float, q: float, delta_min: float, eps: float, rho: float
) -> Tuple[int, float]:
    """
    Time after which the confidence radii after forced exploration fall below
    the gap-driven threshold.

    :return: (T0, T(eps)) with T(eps) = (2 / eps) (T0 - 1)
    """
    threshold = (delta_min / (2 * k * L)) ** (1.0 / q) / 16.0

    def ok(s: int) -> bool:
        return (math.sqrt(2 * math.e * math.log(s)) + 32.0) / math.sqrt(
            rho * s * eps / 4
        ) <= threshold

    # the left side decreases for s >= 3
    lo, hi = 3, 4
    while not ok(hi):
        lo, hi = hi, hi * 2
    if ok(lo):
        return lo, (2.0 / eps) * (lo - 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi, (2.0 / eps) * (hi - 1)


def ucb_regret_bound(
    spec: DistortionSpec,
    upper_bound: float,
    w_ratio: float,
    eps: float,
    rho: float,
    horizon: int,
    discretization: float,
) -> float:
    """[B + L (W^q + 1)] [64 / sqrt(eps rho T) (sqrt(2e log T) + 32)]^q + discretization error."""
    q = spec.holder_q
    radius_term = (
        64.0
        / math.sqrt(eps * rho * horizon)
        * (math.sqrt(2 * math.e * math.log(horizon)) + 32.0)
    )
    return (upper_bound + spec.holder_L * (w_ratio**q + 1)) * radius_term**q + discretization
