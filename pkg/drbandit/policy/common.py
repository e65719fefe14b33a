"""
Shared bandit plumbing: the simulated environment, the running estimate
state, trajectories and the under-sampling rule.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from drbandit.config import VALUE_TOL
from drbandit.dist import (
    ArmModel,
    EmpiricalCdf,
    FiniteCdf,
    RngStream,
    as_cdf,
    empirical_to_cdf,
    sample,
)
from drbandit.errors import ConfigurationError, EmptyGridError, UndefinedRadiusError
from drbandit.riskmetric import DistortionSpec, mixture_values
from drbandit.simplex import MixtureWeights

logger = logging.getLogger(__name__)


@dataclass
class BanditEnv:
    """K-armed stochastic environment with one random stream per arm."""

    arms: Sequence[ArmModel]
    horizon: int
    seed: int = 0
    trial: int = 0
    streams: List[RngStream] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.arms:
            raise ConfigurationError("Environment needs at least one arm")
        if self.horizon < len(self.arms):
            raise ConfigurationError(
                f"Horizon {self.horizon} is shorter than the number of arms"
            )
        self.streams = [
            RngStream(self.seed, self.trial, i) for i in range(len(self.arms))
        ]

    @property
    def K(self) -> int:
        return len(self.arms)

    def pull(self, i: int) -> float:
        return sample(self.arms[i], self.streams[i])


@dataclass
class PolicyTrajectory:
    """Actions, estimate changes and final empirical CDFs of one run."""

    name: str
    K: int
    actions: np.ndarray
    estimate_history: List[Tuple[int, MixtureWeights]] = field(default_factory=list)
    final_cdfs: List[FiniteCdf] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def pull_counts(self) -> np.ndarray:
        return np.bincount(self.actions, minlength=self.K)

    def pull_history(self) -> np.ndarray:
        """Row t-1 holds the per-arm counts after t pulls."""
        onehot = np.zeros((len(self.actions), self.K), dtype=np.int64)
        onehot[np.arange(len(self.actions)), self.actions] = 1
        return np.cumsum(onehot, axis=0)

    def fractions(self) -> MixtureWeights:
        counts = self.pull_counts()
        w = counts / counts.sum()
        w[-1] = max(1.0 - w[:-1].sum(), 0.0)
        return MixtureWeights.from_array(w)


class BanditState:
    """
    Running estimates for every arm.

    Holds the empirical CDFs and pull counts; confidence radii follow the
    concentration constants scaled by ``confidence_scale``. A frozen state
    reports fixed CDFs with zero radius while still recording observations.
    """

    def __init__(
        self,
        k: int,
        horizon: int,
        confidence_scale: float = 1.0,
        frozen: Optional[Sequence[FiniteCdf]] = None,
    ) -> None:
        self.k = k
        self.horizon = horizon
        self.confidence_scale = confidence_scale
        self.empirical = [EmpiricalCdf() for _ in range(k)]
        self.pulls = np.zeros(k, dtype=np.int64)
        self.successes = np.zeros(k, dtype=np.int64)
        self.all_binary = True
        self.frozen = [as_cdf(c) for c in frozen] if frozen is not None else None
        self._radius_constant = (
            confidence_scale
            * 16.0
            * (math.sqrt(2 * math.e * math.log(max(horizon, 2))) + 32.0)
        )

    @classmethod
    def with_cdfs(
        cls, cdfs: Sequence[FiniteCdf], pulls: Sequence[int], horizon: int
    ) -> "BanditState":
        """State pinned to ``cdfs`` with the given pull counts."""
        state = cls(len(cdfs), horizon, frozen=cdfs)
        state.pulls = np.asarray(pulls, dtype=np.int64).copy()
        return state

    def observe(self, i: int, x: float) -> None:
        self.empirical[i].add(x)
        self.pulls[i] += 1
        if x == 1.0:
            self.successes[i] += 1
        elif x != 0.0:
            self.all_binary = False

    def require_pulled(self) -> None:
        if self.frozen is None and np.any(self.pulls < 1):
            missing = [int(i) for i in np.flatnonzero(self.pulls < 1)]
            raise UndefinedRadiusError(f"Arms {missing} have not been pulled")

    def estimates(self) -> List[FiniteCdf]:
        if self.frozen is not None:
            return list(self.frozen)
        self.require_pulled()
        return [empirical_to_cdf(e) for e in self.empirical]

    def bernoulli_means(self) -> Optional[np.ndarray]:
        """Per-arm means when every current estimate lives on {0, 1}."""
        if self.frozen is not None:
            means = [c.bernoulli_mean() for c in self.frozen]
            if any(m is None for m in means):
                return None
            return np.asarray(means, dtype=float)
        self.require_pulled()
        if not self.all_binary:
            return None
        return self.successes / self.pulls

    def radii(self) -> np.ndarray:
        if self.frozen is not None:
            return np.zeros(self.k)
        self.require_pulled()
        return self._radius_constant / np.sqrt(self.pulls)

    def mixture_values(self, spec: DistortionSpec, matrix: np.ndarray) -> np.ndarray:
        """V(a, F_t) on the current estimates for every grid row."""
        means = self.bernoulli_means()
        if means is not None:
            return spec.h(np.clip(matrix @ means, 0.0, 1.0))
        return mixture_values(spec, matrix, self.estimates())

    def final_cdfs(self) -> List[FiniteCdf]:
        return [empirical_to_cdf(e) for e in self.empirical if e.n > 0]


def most_undersampled(t: int, target: np.ndarray, pulls: np.ndarray) -> int:
    """Arm maximizing t * a(i) - tau(i); ties go to the lowest index."""
    return int(np.argmax(t * target - pulls))


def track(target: Sequence[float], pulls: Sequence[int], steps: int) -> np.ndarray:
    """
    Follow a fixed target with the under-sampling rule.

    :param target: simplex point to track
    :param pulls: initial pull counts
    :param steps: number of pulls to make
    :return: array of shape (steps, K); row j holds the counts after the
        (j+1)-th tracked pull
    """
    a = np.asarray(target, dtype=float)
    counts = np.asarray(pulls, dtype=np.int64).copy()
    history = np.empty((steps, len(a)), dtype=np.int64)
    t = int(counts.sum())
    for j in range(steps):
        counts[most_undersampled(t, a, counts)] += 1
        t += 1
        history[j] = counts
    return history


def select_row(values: np.ndarray, previous: Optional[int]) -> int:
    """Index of the best row, keeping ``previous`` when it still ties the best."""
    if len(values) == 0:
        raise EmptyGridError("No grid rows to select from")
    best = float(values.max())
    if previous is not None and values[previous] >= best - VALUE_TOL:
        return previous
    return int(np.flatnonzero(values >= best - VALUE_TOL)[0])


def round_robin(env: BanditEnv, state: BanditState, actions: np.ndarray, per_arm: int) -> int:
    """Pull every arm ``per_arm`` times in turn; returns the number of pulls."""
    t = 0
    for _ in range(per_arm):
        for i in range(env.K):
            state.observe(i, env.pull(i))
            actions[t] = i
            t += 1
    return t
