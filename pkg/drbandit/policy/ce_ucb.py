"""Bonus-based index for the optimistic tracking policy."""

import numpy as np

from drbandit.policy.common import BanditState
from drbandit.riskmetric import DistortionSpec
from drbandit.simplex import MixtureWeights


def ce_index(state: BanditState, a: MixtureWeights, spec: DistortionSpec) -> float:
    """V(a, F_t) + L * sum_i (a_i r_i)^q for a single mixture."""
    return float(ce_values(state, a.as_array()[None, :], spec)[0])


def ce_values(state: BanditState, matrix: np.ndarray, spec: DistortionSpec) -> np.ndarray:
    """Index of every grid row; empirical value plus a Hölder bonus."""
    bonus = (matrix * state.radii()[None, :]) ** spec.holder_q
    return state.mixture_values(spec, matrix) + spec.holder_L * bonus.sum(axis=1)
