"""
Arm models and distribution utilities for drbandit.

Covers finite-support CDFs, empirical CDFs, counter-based sampling streams,
mixtures, the 1-Wasserstein distance and its concentration radius.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from drbandit.config import ATOM_TOL, RNG_BLOCK_SIZE
from drbandit.errors import (
    ConfigurationError,
    DimensionMismatchError,
    EmptySampleError,
    UndefinedRadiusError,
)

logger = logging.getLogger(__name__)

# Upper bound on the Wasserstein/L1 mixture ratio for 1-sub-Gaussian arms
W_BOUND: float = math.sqrt(2 * math.pi)


def _merge_atoms(pairs: Iterable[Tuple[float, float]]) -> Tuple[list, list]:
    """Sort atoms, merge values equal within ATOM_TOL and drop empty masses."""
    values: List[float] = []
    probs: List[float] = []
    for value, prob in sorted(pairs):
        if prob <= 0:
            continue
        if values and abs(value - values[-1]) <= ATOM_TOL:
            probs[-1] += prob
        else:
            values.append(float(value))
            probs.append(float(prob))
    return values, probs


@dataclass(frozen=True)
class FiniteCdf:
    """Right-continuous step CDF with finitely many atoms.

    Stored as atom values and point masses; ``cum`` is derived.
    """

    values: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if not self.values or len(self.values) != len(self.probs):
            raise ValueError("FiniteCdf needs matching, nonempty values and probs")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("FiniteCdf values must be strictly increasing")
        if any(p <= 0 for p in self.probs):
            raise ValueError("FiniteCdf masses must be positive")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError(f"FiniteCdf masses sum to {sum(self.probs)}, not 1")

    @classmethod
    def from_atoms(cls, pairs: Iterable[Tuple[float, float]]) -> "FiniteCdf":
        values, probs = _merge_atoms(pairs)
        return cls(tuple(values), tuple(probs))

    @classmethod
    def bernoulli(cls, p: float) -> "FiniteCdf":
        return cls.from_atoms([(0.0, 1.0 - p), (1.0, p)])

    @classmethod
    def point_mass(cls, x: float) -> "FiniteCdf":
        return cls((float(x),), (1.0,))

    @property
    def cum(self) -> Tuple[float, ...]:
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        return tuple(float(c) for c in cum)

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self.values, self.cum))

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @property
    def support_scale(self) -> float:
        """Largest atom, the c of a [0, c] support."""
        return self.values[-1]

    def bernoulli_mean(self) -> Optional[float]:
        """Return p when the support lies in {0, 1}, else ``None``."""
        if all(v in (0.0, 1.0) for v in self.values):
            return self.probs[-1] if self.values[-1] == 1.0 else 0.0
        return None

    def cdf_at(self, x: "np.ndarray | float") -> np.ndarray:
        """F(x) = P(X <= x), vectorized."""
        idx = np.searchsorted(np.asarray(self.values) - ATOM_TOL, x, side="right")
        cum = np.concatenate([[0.0], np.asarray(self.cum)])
        return cum[idx]


@dataclass(frozen=True)
class ArmModel:
    """A reward distribution: Bernoulli(p) or a finite nonnegative support."""

    values: Tuple[float, ...]
    probs: Tuple[float, ...]
    p: Optional[float] = None

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.values):
            raise ConfigurationError("Arm atoms must be nonnegative")
        if abs(sum(self.probs) - 1.0) > ATOM_TOL:
            raise ConfigurationError(
                f"Arm probabilities sum to {sum(self.probs)}, not 1"
            )

    @classmethod
    def bernoulli(cls, p: float) -> "ArmModel":
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"Bernoulli parameter must be in [0,1], got {p}")
        return cls((0.0, 1.0), (1.0 - p, p), p=float(p))

    @classmethod
    def finite(cls, atoms: Sequence[Tuple[float, float]]) -> "ArmModel":
        if not atoms:
            raise ConfigurationError("Finite-support arm needs at least one atom")
        values = [float(v) for v, _ in atoms]
        probs = [float(q) for _, q in atoms]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigurationError("Arm atom values must be strictly increasing")
        if any(q <= 0 for q in probs):
            raise ConfigurationError("Arm atom probabilities must be positive")
        return cls(tuple(values), tuple(probs))

    @property
    def is_bernoulli(self) -> bool:
        return self.p is not None

    @cached_property
    def cdf(self) -> FiniteCdf:
        return FiniteCdf.from_atoms(zip(self.values, self.probs))

    @cached_property
    def _cum(self) -> np.ndarray:
        return np.asarray(self.cdf.cum)

    @property
    def mean(self) -> float:
        return self.cdf.mean

    @property
    def support_scale(self) -> float:
        return self.cdf.support_scale

    @property
    def token(self) -> str:
        if self.p is not None:
            return f"bern:{self.p:g}"
        return "atoms:" + ";".join(f"{v:g}@{q:g}" for v, q in zip(self.values, self.probs))

    def quantile(self, u: "np.ndarray | float") -> np.ndarray:
        """Inverse CDF applied to uniforms in [0, 1)."""
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, len(self._cum) - 1)
        return np.asarray(self.cdf.values)[idx]


def as_cdf(arm: "FiniteCdf | ArmModel") -> FiniteCdf:
    return arm.cdf if isinstance(arm, ArmModel) else arm


class RngStream:
    """Counter-based random stream for one (trial, arm) pair.

    Uniforms are drawn in blocks from a Philox generator keyed by the seed
    and the stream id, so the n-th draw is the same whatever the block size
    or the number of workers.
    """

    def __init__(
        self, seed: int, trial: int = 0, arm: int = 0, block: int = RNG_BLOCK_SIZE
    ) -> None:
        self.seed = int(seed)
        self.stream_id = (int(trial), int(arm))
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        self._gen = np.random.Generator(np.random.Philox(seq))
        self._block = block
        self._buffer = np.empty(0)
        self._pos = 0

    def uniforms(self, n: int) -> np.ndarray:
        remaining = len(self._buffer) - self._pos
        if remaining < n:
            fresh = self._gen.random(max(self._block, n - remaining))
            self._buffer = np.concatenate([self._buffer[self._pos :], fresh])
            self._pos = 0
        out = self._buffer[self._pos : self._pos + n]
        self._pos += n
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])


def sample(arm: ArmModel, rng: RngStream) -> float:
    """Draw one reward from ``arm`` using ``rng``."""
    return float(arm.quantile(rng.uniform()))


def sample_many(arm: ArmModel, rng: RngStream, n: int) -> np.ndarray:
    """Draw ``n`` rewards; equal to ``n`` successive :func:`sample` calls."""
    return arm.quantile(rng.uniforms(n))


@dataclass
class EmpiricalCdf:
    """Tallies of observed rewards."""

    counts: Dict[float, int] = field(default_factory=dict)
    n: int = 0

    def add(self, x: float) -> None:
        self.counts[x] = self.counts.get(x, 0) + 1
        self.n += 1

    def extend(self, xs: Iterable[float]) -> None:
        for x in xs:
            self.add(float(x))

    def bernoulli_mean(self) -> Optional[float]:
        """Fraction of ones when every observation is 0 or 1."""
        if self.n == 0 or any(k not in (0.0, 1.0) for k in self.counts):
            return None
        return self.counts.get(1.0, 0) / self.n


def empirical_to_cdf(e: EmpiricalCdf) -> FiniteCdf:
    """Step CDF with a jump of tally/n at each observed value."""
    if e.n == 0:
        raise EmptySampleError("Cannot build an empirical CDF from zero samples")
    return FiniteCdf.from_atoms((v, c / e.n) for v, c in e.counts.items())


def mix(
    weights: "Iterable[float]", cdfs: "Sequence[FiniteCdf | ArmModel]"
) -> FiniteCdf:
    """Mixture CDF with cum(x) = sum_i w_i F_i(x)."""
    w = [float(x) for x in (getattr(weights, "w", None) or weights)]
    if len(w) != len(cdfs):
        raise DimensionMismatchError(f"{len(w)} weights for {len(cdfs)} distributions")
    pairs = [
        (v, wi * q)
        for wi, c in zip(w, cdfs)
        if wi > 0
        for v, q in zip(as_cdf(c).values, as_cdf(c).probs)
    ]
    return FiniteCdf.from_atoms(pairs)


def wasserstein1(f: "FiniteCdf | ArmModel", g: "FiniteCdf | ArmModel") -> float:
    """Exact 1-Wasserstein distance between two finite-support CDFs."""
    f, g = as_cdf(f), as_cdf(g)
    return float(stats.wasserstein_distance(f.values, g.values, f.probs, g.probs))


def confidence_radius(pulls: int, horizon: float, scale: float = 1.0) -> float:
    """
    Radius of the Wasserstein confidence ball after ``pulls`` observations.

    :param pulls: number of observations of the arm (>= 1)
    :param horizon: horizon T (>= 2)
    :param scale: multiplier on the concentration constants; 1 keeps them as is
    :return: scale * 16 * (sqrt(2e ln T) + 32) / sqrt(pulls)
    """
    if pulls < 1:
        raise UndefinedRadiusError("Confidence radius is undefined for 0 pulls")
    if horizon < 2:
        raise ValueError(f"Horizon must be >= 2, got {horizon}")
    return scale * 16.0 * (math.sqrt(2 * math.e * math.log(horizon)) + 32.0) / math.sqrt(
        pulls
    )


def concentration_bound(pulls: int, y: float) -> float:
    """Tail bound on P(W1(empirical, truth) > y) after ``pulls`` samples."""
    offset = 512.0 / math.sqrt(pulls)
    if y <= offset:
        return 1.0
    return min(1.0, 2.0 * math.exp(-(pulls / (256 * math.e)) * (y - offset) ** 2))


def wasserstein_ratio(
    arms: "Sequence[FiniteCdf | ArmModel]", samples: int, seed: int = 0
) -> float:
    """
    Monte-Carlo lower estimate of W, the worst Wasserstein/L1 ratio over
    pairs of mixtures of ``arms``, with the support rescaled to [0, 1].
    """
    if len(arms) < 2:
        raise ValueError("wasserstein_ratio needs at least two arms")
    cdfs = [as_cdf(a) for a in arms]
    scale = max(c.support_scale for c in cdfs)
    if scale <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    k = len(cdfs)
    best = 0.0
    for _ in range(samples):
        alpha, beta = rng.dirichlet(np.ones(k), size=2)
        l1 = float(np.abs(alpha - beta).sum())
        if l1 <= 0:
            continue
        ratio = wasserstein1(mix(alpha, cdfs), mix(beta, cdfs)) / (scale * l1)
        best = max(best, ratio)
    return best


def parse_arms(token: str) -> List[ArmModel]:
    """Parse ``bern:0.4,bern:0.9`` or ``atoms:0@0.6;1@0.4`` into arms."""
    arms: List[ArmModel] = []
    for part in token.split(","):
        part = part.strip()
        if not part:
            continue
        kind, _, body = part.partition(":")
        try:
            if kind == "bern":
                arms.append(ArmModel.bernoulli(float(body)))
            elif kind == "atoms":
                atoms = []
                for item in body.split(";"):
                    value, _, prob = item.partition("@")
                    atoms.append((float(value), float(prob)))
                arms.append(ArmModel.finite(atoms))
            else:
                raise ConfigurationError(f"Unknown arm kind in {part!r}")
        except ValueError as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"Invalid arm token {part!r}: {e}") from e
    if not arms:
        raise ConfigurationError(f"No arms found in {token!r}")
    return arms


def bernoulli_instance(means: Iterable[float]) -> List[ArmModel]:
    return [ArmModel.bernoulli(float(p)) for p in means]


def uniform_gap_means(k: int, low: float = 0.4, high: float = 0.9) -> List[float]:
    """Arm means evenly spaced in [low, high]."""
    if k == 1:
        return [low]
    return [float(round(x, 12)) for x in np.linspace(low, high, k)]
