"""
Distortion riskmetrics for drbandit.

Defines the supported distortion functions with their Hölder metadata and
evaluates the riskmetric exactly on finite-support distributions through the
signed Choquet integral restricted to nonnegative support.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from drbandit.config import ATOM_TOL
from drbandit.dist import ArmModel, FiniteCdf, as_cdf, mix
from drbandit.errors import (
    ConfigurationError,
    DimensionMismatchError,
    UnsupportedSupportError,
)

logger = logging.getLogger(__name__)


class DistortionKind(str, Enum):
    RISK_NEUTRAL = "mean"
    DUAL_POWER = "dualpower"
    QUADRATIC = "quadratic"
    CVAR = "cvar"
    PHT = "pht"
    MEAN_MEDIAN_DEVIATION = "mmd"
    INTER_ES_RANGE = "ier"
    WANG_RIGHT_TAIL = "wang"
    GINI_DEVIATION = "gini"


# kind -> default parameter (None when the kind takes no parameter)
DEFAULT_PARAMS = {
    DistortionKind.RISK_NEUTRAL: None,
    DistortionKind.DUAL_POWER: 2.0,
    DistortionKind.QUADRATIC: 0.5,
    DistortionKind.CVAR: 0.75,
    DistortionKind.PHT: 0.5,
    DistortionKind.MEAN_MEDIAN_DEVIATION: None,
    DistortionKind.INTER_ES_RANGE: 0.5,
    DistortionKind.WANG_RIGHT_TAIL: None,
    DistortionKind.GINI_DEVIATION: None,
}

MONOTONE_KINDS = {
    DistortionKind.RISK_NEUTRAL,
    DistortionKind.DUAL_POWER,
    DistortionKind.QUADRATIC,
    DistortionKind.CVAR,
    DistortionKind.PHT,
}


@dataclass(frozen=True)
class DistortionSpec:
    """A distortion function h together with its Hölder metadata.

    Attributes:
        kind: Which distortion family.
        param: The family parameter (s for dual power, quadratic and PHT,
            alpha for CVaR and the inter-ES range); ``None`` for the
            parameter-free kinds.
    """

    kind: DistortionKind
    param: Optional[float] = None

    def __post_init__(self) -> None:
        kind = DistortionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        param = self.param if self.param is not None else DEFAULT_PARAMS[kind]
        if param is not None:
            param = float(param)
        match kind:
            case DistortionKind.DUAL_POWER:
                if param < 2:
                    raise ConfigurationError(f"dual power needs s >= 2, got {param}")
            case DistortionKind.QUADRATIC:
                if not 0 <= param <= 1:
                    raise ConfigurationError(f"quadratic needs s in [0,1], got {param}")
            case DistortionKind.CVAR:
                if not 0 < param < 1:
                    raise ConfigurationError(f"CVaR needs alpha in (0,1), got {param}")
            case DistortionKind.PHT:
                if not 0 < param < 1:
                    raise ConfigurationError(f"PHT needs s in (0,1), got {param}")
            case DistortionKind.INTER_ES_RANGE:
                if param != 0.5:
                    raise ConfigurationError(
                        f"inter-ES range is defined for alpha = 0.5 only, got {param}"
                    )
            case _:
                if param is not None:
                    raise ConfigurationError(f"{kind.value} takes no parameter")
        object.__setattr__(self, "param", param)

    @property
    def token(self) -> str:
        if self.param is None or self.kind == DistortionKind.INTER_ES_RANGE:
            return self.kind.value
        return f"{self.kind.value}:{self.param:g}"

    @property
    def monotone(self) -> bool:
        return self.kind in MONOTONE_KINDS

    @property
    def holder_q(self) -> float:
        match self.kind:
            case DistortionKind.PHT:
                return float(self.param)  # type: ignore[arg-type]
            case DistortionKind.WANG_RIGHT_TAIL:
                return 0.5
            case _:
                return 1.0

    @property
    def holder_r(self) -> float:
        """Worst-case mixture Hölder exponent; see :func:`effective_r`."""
        match self.kind:
            case DistortionKind.PHT:
                return float(self.param)  # type: ignore[arg-type]
            case DistortionKind.GINI_DEVIATION:
                return 2.0
            case _:
                return 1.0

    @property
    def holder_L(self) -> float:
        match self.kind:
            case DistortionKind.DUAL_POWER:
                return float(self.param)  # type: ignore[arg-type]
            case DistortionKind.QUADRATIC:
                return 1.0 + float(self.param)  # type: ignore[arg-type]
            case DistortionKind.CVAR:
                return 1.0 / (1.0 - float(self.param))  # type: ignore[arg-type]
            case DistortionKind.INTER_ES_RANGE:
                return 2.0
            case _:
                return 1.0

    @property
    def beta(self) -> Optional[float]:
        """Gap constant of the kind; CVaR has one only per instance, see :func:`effective_beta`."""
        if self.kind == DistortionKind.CVAR:
            return None
        return 1.0 if self.monotone else None

    @property
    def peak(self) -> float:
        """Smallest maximizer of h on [0, 1]."""
        match self.kind:
            case DistortionKind.CVAR:
                return 1.0 - float(self.param)  # type: ignore[arg-type]
            case (
                DistortionKind.GINI_DEVIATION
                | DistortionKind.MEAN_MEDIAN_DEVIATION
                | DistortionKind.INTER_ES_RANGE
            ):
                return 0.5
            case DistortionKind.WANG_RIGHT_TAIL:
                return 0.25
            case _:
                return 1.0

    @property
    def plateau_end(self) -> float:
        """Largest maximizer of h on [0, 1]; only CVaR is flat past its peak."""
        if self.kind == DistortionKind.CVAR:
            return 1.0
        return self.peak

    @property
    def max_h(self) -> float:
        return float(self.h(self.peak))

    def h(self, u: "np.ndarray | float") -> np.ndarray:
        """Vectorized distortion function on [0, 1]."""
        u = np.asarray(u, dtype=float)
        s = self.param
        match self.kind:
            case DistortionKind.RISK_NEUTRAL:
                return u.copy()
            case DistortionKind.DUAL_POWER:
                return 1.0 - (1.0 - u) ** s
            case DistortionKind.QUADRATIC:
                return (1.0 + s) * u - s * u * u
            case DistortionKind.CVAR:
                return np.minimum(u / (1.0 - s), 1.0)
            case DistortionKind.PHT:
                return u**s
            case DistortionKind.MEAN_MEDIAN_DEVIATION:
                return np.minimum(u, 1.0 - u)
            case DistortionKind.INTER_ES_RANGE:
                return np.minimum(u / (1.0 - s), 1.0) + np.minimum(
                    (s - u) / (1.0 - s), 0.0
                )
            case DistortionKind.WANG_RIGHT_TAIL:
                return np.sqrt(u) - u
            case DistortionKind.GINI_DEVIATION:
                return u * (1.0 - u)
        raise ConfigurationError(f"Unknown distortion kind: {self.kind}")


ALL_KINDS = tuple(DistortionKind)


def parse_distortion(token: str) -> DistortionSpec:
    """Parse a CLI token such as ``gini``, ``cvar:0.75`` or ``pht:0.5``."""
    name, _, raw = token.strip().lower().partition(":")
    try:
        kind = DistortionKind(name)
    except ValueError as e:
        raise ConfigurationError(f"Unknown riskmetric: {token!r}") from e
    param: Optional[float] = None
    if raw:
        try:
            param = float(raw)
        except ValueError as e:
            raise ConfigurationError(f"Invalid riskmetric parameter: {token!r}") from e
    return DistortionSpec(kind, param)


def eval_h(spec: DistortionSpec, u: float) -> float:
    """Evaluate h(u) for u in [0, 1]."""
    if not -ATOM_TOL <= u <= 1 + ATOM_TOL:
        raise ValueError(f"h is defined on [0, 1], got {u}")
    return float(spec.h(min(max(u, 0.0), 1.0)))


def choquet(spec: DistortionSpec, cdf: "FiniteCdf | ArmModel") -> float:
    """
    Exact riskmetric of a finite-support CDF on the nonnegative reals.

    :param spec: distortion specification
    :param cdf: finite-support distribution
    :return: sum over segments of (x_{j+1} - x_j) * h(1 - F(x_j)), with the
        leading segment [0, x_min) contributing x_min * h(1)
    """
    cdf = as_cdf(cdf)
    values = np.asarray(cdf.values)
    if values[0] < 0:
        raise UnsupportedSupportError(
            f"Negative atom {values[0]} is outside the supported domain"
        )
    result = values[0] * float(spec.h(1.0))
    if len(values) > 1:
        # survival above each atom, from the masses to its right
        tail = np.cumsum(np.asarray(cdf.probs)[::-1])[::-1][1:]
        result += float(np.sum(np.diff(values) * spec.h(np.clip(tail, 0.0, 1.0))))
    return float(result)


def _bernoulli_means(cdfs: Sequence[FiniteCdf]) -> Optional[np.ndarray]:
    means = [c.bernoulli_mean() for c in cdfs]
    if any(m is None for m in means):
        return None
    return np.asarray(means, dtype=float)


def mixture_value(
    spec: DistortionSpec,
    weights: "Iterable[float]",
    arms: "Sequence[FiniteCdf | ArmModel]",
) -> float:
    """V(alpha, F): the riskmetric of the weighted mixture of the arms."""
    w = np.asarray(list(weights), dtype=float)
    if len(w) != len(arms) or len(arms) == 0:
        raise DimensionMismatchError(
            f"{len(w)} weights for {len(arms)} arms"
        )
    cdfs = [as_cdf(a) for a in arms]
    means = _bernoulli_means(cdfs)
    if means is not None:
        m = float(np.dot(w, means))
        return float(spec.h(min(max(m, 0.0), 1.0)))
    return choquet(spec, mix(w, cdfs))


def mixture_values(
    spec: DistortionSpec, grid: np.ndarray, cdfs: Sequence[FiniteCdf]
) -> np.ndarray:
    """V(a, F) for every row ``a`` of ``grid`` at once."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] != len(cdfs):
        raise DimensionMismatchError(
            f"grid has {grid.shape[1]} columns for {len(cdfs)} arms"
        )
    means = _bernoulli_means(cdfs)
    if means is not None:
        return spec.h(np.clip(grid @ means, 0.0, 1.0))
    atoms = np.unique(np.concatenate([np.asarray(c.values) for c in cdfs]))
    if atoms[0] < 0:
        raise UnsupportedSupportError(
            f"Negative atom {atoms[0]} is outside the supported domain"
        )
    cdf_table = np.vstack([c.cdf_at(atoms) for c in cdfs])
    survival = np.clip(1.0 - grid @ cdf_table, 0.0, 1.0)
    values = atoms[0] * float(spec.h(1.0)) * np.ones(grid.shape[0])
    if len(atoms) > 1:
        values = values + spec.h(survival[:, :-1]) @ np.diff(atoms)
    return values


def effective_r(spec: DistortionSpec, arms: "Sequence[FiniteCdf | ArmModel]") -> float:
    """Instance-specific mixture Hölder exponent for Bernoulli arms.

    Gini reaches r = 2 only when the means straddle 1/2, Wang's right-tail
    measure reaches r = 1 only when they straddle 1/4. Non-Bernoulli instances
    keep the table value.
    """
    means = _bernoulli_means([as_cdf(a) for a in arms])
    if means is None:
        return spec.holder_r
    if spec.kind == DistortionKind.GINI_DEVIATION:
        straddled = means.min() <= 0.5 <= means.max()
        return 2.0 if straddled else 1.0
    if spec.kind == DistortionKind.WANG_RIGHT_TAIL:
        straddled = means.min() < 0.25 < means.max()
        return 1.0 if straddled else 0.5
    return spec.holder_r


def effective_beta(
    spec: DistortionSpec, arms: "Sequence[FiniteCdf | ArmModel]"
) -> Optional[float]:
    """Gap constant for the instance, or ``None`` where it is not characterized."""
    if spec.kind == DistortionKind.CVAR:
        means = [as_cdf(a).mean for a in arms]
        alpha = float(spec.param)  # type: ignore[arg-type]
        return 1.0 if max(means) < 1.0 - alpha else None
    return spec.beta


def dr_upper_bound(spec: DistortionSpec, arms: "Sequence[FiniteCdf | ArmModel]") -> float:
    """Per-instance cap B: largest atom times the peak of h."""
    top = max(as_cdf(a).values[-1] for a in arms)
    return float(top) * spec.max_h
