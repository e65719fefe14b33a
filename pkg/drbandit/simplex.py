"""
Simplex grids and oracle mixture search for drbandit.

Enumerates the discretized simplex, finds the oracle mixture on the continuous
and discrete simplex, and measures the minimum sub-optimality gap.
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from drbandit.config import ATOM_TOL, MAX_GRID_ROWS, ORACLE_GRID_STEPS, VALUE_TOL
from drbandit.dist import ArmModel, FiniteCdf, as_cdf
from drbandit.errors import EmptyGridError, GapUndefinedError
from drbandit.riskmetric import (
    DistortionSpec,
    choquet,
    effective_r,
    mixture_value,
    mixture_values,
)

logger = logging.getLogger(__name__)

ArmLike = Union[FiniteCdf, ArmModel]


@dataclass(frozen=True)
class MixtureWeights:
    """A point of the probability simplex."""

    w: Tuple[float, ...]

    def __post_init__(self) -> None:
        w = tuple(float(x) for x in self.w)
        object.__setattr__(self, "w", w)
        if not w:
            raise ValueError("MixtureWeights needs at least one coordinate")
        if any(x < 0 for x in w):
            raise ValueError(f"Negative mixture weight in {w}")
        if abs(sum(w) - 1.0) > 1e-12 * max(1, len(w)):
            raise ValueError(f"Mixture weights sum to {sum(w)}, not 1")

    @classmethod
    def from_array(cls, a: "np.ndarray | Sequence[float]") -> "MixtureWeights":
        return cls(tuple(float(x) for x in a))

    @classmethod
    def vertex(cls, k: int, i: int) -> "MixtureWeights":
        return cls(tuple(1.0 if j == i else 0.0 for j in range(k)))

    @property
    def K(self) -> int:
        return len(self.w)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)

    def __len__(self) -> int:
        return len(self.w)

    def __iter__(self) -> Iterator[float]:
        return iter(self.w)

    def __getitem__(self, i: int) -> float:
        return self.w[i]


class GridScheme(str, Enum):
    ETC_LATTICE = "etc"
    UCB_MIDPOINT = "ucb"


@dataclass(frozen=True)
class GridSpec:
    K: int
    eps: float
    scheme: GridScheme = GridScheme.ETC_LATTICE

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"Grid needs K >= 1, got {self.K}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"Grid step must lie in (0, 1], got {self.eps}")
        object.__setattr__(self, "scheme", GridScheme(self.scheme))


class OracleMethod(str, Enum):
    CLOSED_FORM_BERNOULLI = "closed-form-bernoulli"
    GRID_SEARCH = "grid-search"


@dataclass(frozen=True)
class OracleResult:
    weights: MixtureWeights
    value: float
    method: OracleMethod
    instance: str = ""


def instance_key(spec: DistortionSpec, arms: Sequence[ArmLike]) -> str:
    """Digest identifying a (riskmetric, arms) instance."""
    parts = [spec.token]
    for arm in arms:
        cdf = as_cdf(arm)
        parts.append(",".join(f"{v!r}@{p!r}" for v, p in zip(cdf.values, cdf.probs)))
    return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()[:16]


def _grid_offset(g: GridSpec) -> float:
    return g.eps / 2 if g.scheme == GridScheme.UCB_MIDPOINT else 0.0


def _grid_rows(k: int, eps: float, offset: float) -> Iterator[List[float]]:
    """First K-1 coordinates in lexicographic order, last absorbs the residual."""
    n_max = int(math.floor((1.0 - offset) / eps + 1e-9))
    prefix: List[int] = []

    def walk(depth: int, used: float) -> Iterator[List[float]]:
        if depth == k - 1:
            last = 1.0 - used
            if last < 0:
                if last < -1e-9:
                    return
                last = 0.0
            yield [offset + n * eps for n in prefix] + [last]
            return
        for n in range(n_max + 1):
            coord = offset + n * eps
            if used + coord > 1.0 + 1e-9:
                break
            prefix.append(n)
            yield from walk(depth + 1, used + coord)
            prefix.pop()

    yield from walk(0, 0.0)


def grid_size(g: GridSpec) -> int:
    """Number of points of ``g``, counted without enumerating them."""
    if g.K == 1:
        return 1
    budget = 1.0 + 1e-9 - (g.K - 1) * _grid_offset(g)
    if budget < 0:
        return 0
    return math.comb(int(math.floor(budget / g.eps)) + g.K - 1, g.K - 1)


@lru_cache(maxsize=32)
def grid_matrix(g: GridSpec) -> np.ndarray:
    """Grid points as rows of a read-only array, in enumeration order."""
    if g.K == 1:
        rows = [[1.0]]
    else:
        rows = list(_grid_rows(g.K, g.eps, _grid_offset(g)))
    matrix = np.asarray(rows, dtype=float).reshape(-1, g.K)
    # exact row sums: recompute the residual from the leading coordinates
    if g.K > 1 and len(matrix):
        matrix[:, -1] = np.maximum(1.0 - matrix[:, :-1].sum(axis=1), 0.0)
    matrix.setflags(write=False)
    logger.debug(f"Enumerated {len(matrix)} points for {g}")
    return matrix


def enumerate_grid(g: GridSpec) -> List[MixtureWeights]:
    """All grid points of ``g`` in lexicographic order."""
    return [MixtureWeights.from_array(row) for row in grid_matrix(g)]


def general_resolution(k: int) -> float:
    """Finest step 1/n, n <= ORACLE_GRID_STEPS, whose lattice fits MAX_GRID_ROWS."""
    for n in range(ORACLE_GRID_STEPS, 1, -1):
        if grid_size(GridSpec(k, 1.0 / n)) <= MAX_GRID_ROWS:
            return 1.0 / n
    return 1.0


def best_bernoulli_row(
    spec: DistortionSpec,
    g: GridSpec,
    lower: "np.ndarray | Sequence[float]",
    upper: "np.ndarray | Sequence[float]",
    previous: "np.ndarray | Sequence[float] | None" = None,
) -> np.ndarray:
    """
    Best row of ``g`` for Bernoulli arms whose means lie in [lower, upper],
    found by branch and bound instead of enumerating the grid.

    A row ``a`` scores h at its peak clipped to [<a, lower>, <a, upper>];
    with lower == upper this is the plain mixture value. ``previous`` is
    returned while it scores within VALUE_TOL of the best, otherwise the
    lexicographically first such row. A subtree is bounded by h over every
    mean its remaining mass can reach; subtrees that cannot beat the best
    row found so far by more than VALUE_TOL are skipped.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    k = g.K
    if len(lower) != k or len(upper) != k:
        raise ValueError(f"Bounds of length {len(lower)}, {len(upper)} for K={k}")
    if grid_size(g) == 0:
        raise EmptyGridError(f"Grid {g} has no points")
    if k == 1:
        return np.ones(1)
    offset = _grid_offset(g)
    n_max = int(math.floor((1.0 - offset) / g.eps + 1e-9))
    coords = offset + g.eps * np.arange(n_max + 1)
    # lowest and highest mean reachable by the arms from index i on
    rest_lo = np.minimum.accumulate(lower[::-1])[::-1]
    rest_hi = np.maximum.accumulate(upper[::-1])[::-1]

    def score(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return spec.h(np.clip(np.clip(spec.peak, lo, hi), 0.0, 1.0))

    def leaves(prefix: List[float], c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        rows = np.empty((len(c), k))
        rows[:, : len(prefix)] = prefix
        rows[:, k - 2] = c
        rows[:, -1] = np.maximum(1.0 - rows[:, :-1].sum(axis=1), 0.0)
        return rows, score(rows @ lower, rows @ upper)

    def branch(
        depth: int, used: float, lo: float, hi: float
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        c = coords[used + coords <= 1.0 + 1e-9]
        used_c = used + c
        lo_c = lo + c * lower[depth]
        hi_c = hi + c * upper[depth]
        rest = np.maximum(1.0 - used_c, 0.0)
        bounds = score(
            lo_c + rest * rest_lo[depth + 1], hi_c + rest * rest_hi[depth + 1]
        )
        return c, used_c, lo_c, hi_c, bounds

    best = -np.inf
    prev: Optional[np.ndarray] = None
    prev_value = -np.inf
    if previous is not None:
        prev = np.asarray(previous, dtype=float)
        prev_value = float(score(prev @ lower, prev @ upper))
        best = prev_value

    def climb(
        depth: int, prefix: List[float], used: float, lo: float, hi: float
    ) -> None:
        nonlocal best
        if depth == k - 2:
            c = coords[used + coords <= 1.0 + 1e-9]
            if len(c):
                best = max(best, float(leaves(prefix, c)[1].max()))
            return
        c, used_c, lo_c, hi_c, bounds = branch(depth, used, lo, hi)
        for j in np.argsort(-bounds, kind="stable"):
            if bounds[j] <= best + VALUE_TOL:
                break
            climb(
                depth + 1,
                prefix + [float(c[j])],
                float(used_c[j]),
                float(lo_c[j]),
                float(hi_c[j]),
            )

    climb(0, [], 0.0, 0.0, 0.0)
    threshold = best - VALUE_TOL
    if prev is not None and prev_value >= threshold:
        return prev.copy()

    def first(
        depth: int, prefix: List[float], used: float, lo: float, hi: float
    ) -> Optional[np.ndarray]:
        if depth == k - 2:
            c = coords[used + coords <= 1.0 + 1e-9]
            if not len(c):
                return None
            rows, values = leaves(prefix, c)
            hits = np.flatnonzero(values >= threshold)
            return rows[hits[0]] if len(hits) else None
        c, used_c, lo_c, hi_c, bounds = branch(depth, used, lo, hi)
        for j in np.flatnonzero(bounds >= threshold - ATOM_TOL):
            found = first(
                depth + 1,
                prefix + [float(c[j])],
                float(used_c[j]),
                float(lo_c[j]),
                float(hi_c[j]),
            )
            if found is not None:
                return found
        return None

    row = first(0, [], 0.0, 0.0, 0.0)
    if row is None:
        raise EmptyGridError(f"Grid {g} has no point scoring {best}")
    return row


def _first_max(values: np.ndarray) -> int:
    best = float(values.max())
    return int(np.flatnonzero(values >= best - VALUE_TOL)[0])


def oracle_discrete(
    spec: DistortionSpec, arms: Sequence[ArmLike], grid: GridSpec
) -> OracleResult:
    """Best grid point of ``grid`` for the instance, lexicographic ties.

    Bernoulli instances on grids beyond MAX_GRID_ROWS points go through
    :func:`best_bernoulli_row`.
    """
    cdfs = [as_cdf(a) for a in arms]
    size = grid_size(grid)
    if size == 0:
        raise EmptyGridError(f"Grid {grid} has no points")
    means = [c.bernoulli_mean() for c in cdfs]
    if size > MAX_GRID_ROWS and all(m is not None for m in means):
        p = np.asarray(means, dtype=float)
        weights = MixtureWeights.from_array(best_bernoulli_row(spec, grid, p, p))
    else:
        matrix = grid_matrix(grid)
        values = mixture_values(spec, matrix, cdfs)
        weights = MixtureWeights.from_array(matrix[_first_max(values)])
    return OracleResult(
        weights=weights,
        value=mixture_value(spec, weights, cdfs),
        method=OracleMethod.GRID_SEARCH,
        instance=instance_key(spec, arms),
    )


def _lex_smallest_weights(p: np.ndarray, m: float) -> np.ndarray:
    """Lexicographically smallest simplex point with mean <w, p> = m.

    Each coordinate takes the least value that leaves the remaining arms able
    to reach the target.
    """
    k = len(p)
    w = np.zeros(k)
    mass, target = 1.0, m
    for i in range(k - 1):
        rest = p[i + 1 :]
        lo_p, hi_p = float(rest.min()), float(rest.max())
        lower, upper = 0.0, mass
        # w * coef <= bound, from the reachable range of the remaining arms
        for coef, bound in (
            (hi_p - p[i], mass * hi_p - target),
            (p[i] - lo_p, target - mass * lo_p),
        ):
            if coef > 0:
                upper = min(upper, bound / coef)
            elif coef < 0:
                lower = max(lower, bound / coef)
        wi = min(max(lower, 0.0), max(upper, 0.0), mass)
        w[i] = wi
        mass -= wi
        target -= wi * p[i]
    w[-1] = max(1.0 - w[:-1].sum(), 0.0)
    return w


def oracle_continuous(
    spec: DistortionSpec,
    arms: Sequence[ArmLike],
    resolution: Optional[float] = None,
) -> OracleResult:
    """
    Optimal mixture on the continuous simplex.

    All-Bernoulli instances reduce to maximizing h(m) over the reachable means
    [min p, max p]. The maximizers form the interval between the peak and the
    plateau end of h, both clipped to the reachable range; the reported
    weights are the lexicographically smallest over that interval, found
    among its endpoints and the arm means inside it. Other instances fall
    back to a lattice search with step ``resolution``, by default the finest
    one :func:`general_resolution` allows for K.
    """
    cdfs = [as_cdf(a) for a in arms]
    means = [c.bernoulli_mean() for c in cdfs]
    if any(m is None for m in means):
        step = resolution if resolution is not None else general_resolution(len(cdfs))
        result = oracle_discrete(spec, arms, GridSpec(len(cdfs), step))
        logger.debug(f"Grid oracle for {spec.token} at step {step}: {result.weights.w}")
        return result
    p = np.asarray(means, dtype=float)
    lo, hi = float(p.min()), float(p.max())
    m_lo = min(max(spec.peak, lo), hi)
    m_hi = min(max(spec.plateau_end, lo), hi)
    candidates = [m_lo, m_hi] + [float(x) for x in p if m_lo <= x <= m_hi]
    best = min(tuple(_lex_smallest_weights(p, m)) for m in candidates)
    weights = MixtureWeights(best)
    return OracleResult(
        weights=weights,
        value=mixture_value(spec, weights, cdfs),
        method=OracleMethod.CLOSED_FORM_BERNOULLI,
        instance=instance_key(spec, arms),
    )


def min_gap(spec: DistortionSpec, arms: Sequence[ArmLike], grid: GridSpec) -> float:
    """Value gap between the best grid point and the best non-optimal one.

    Points within VALUE_TOL of the optimum count as co-optimal.
    """
    matrix = grid_matrix(grid)
    if len(matrix) < 2:
        raise GapUndefinedError(f"Grid {grid} has fewer than two points")
    values = mixture_values(spec, matrix, [as_cdf(a) for a in arms])
    best = float(values[_first_max(values)])
    others = values[values < best - VALUE_TOL]
    if len(others) == 0:
        raise GapUndefinedError(
            f"All {len(matrix)} grid points are co-optimal at eps={grid.eps}; refine eps"
        )
    return best - float(others.max())


def beta_estimate(
    spec: DistortionSpec, arms: Sequence[ArmLike], eps_sequence: Sequence[float]
) -> float:
    """Least-squares slope of log min_gap(eps) against log eps."""
    eps = [float(e) for e in eps_sequence]
    if len(eps) < 3:
        raise ValueError("beta_estimate needs at least three eps values")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_sequence must be strictly decreasing")
    gaps = [min_gap(spec, arms, GridSpec(len(arms), e)) for e in eps]
    fit = stats.linregress(np.log(eps), np.log(gaps))
    logger.debug(f"beta fit for {spec.token}: gaps={gaps}, slope={fit.slope}")
    return float(fit.slope)


def discretization_bound(
    spec: DistortionSpec,
    k: int,
    w_ratio: float,
    eps: float,
    r: Optional[float] = None,
) -> float:
    """Upper bound L (K W)^r (eps/2)^r on the discretization error."""
    r = spec.holder_r if r is None else r
    return spec.holder_L * (k * w_ratio) ** r * (eps / 2) ** r


def instance_discretization_bound(
    spec: DistortionSpec, arms: Sequence[ArmLike], w_ratio: float, eps: float
) -> float:
    return discretization_bound(spec, len(arms), w_ratio, eps, effective_r(spec, arms))


def vertex_values(spec: DistortionSpec, arms: Sequence[ArmLike]) -> List[float]:
    """Riskmetric of each solitary arm."""
    return [choquet(spec, a) for a in arms]
