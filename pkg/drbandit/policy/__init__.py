"""Bandit policies keyed by their CLI token."""

from typing import Callable, Dict

from drbandit.policy.ce_ucb import ce_index, ce_values
from drbandit.policy.common import (
    BanditEnv,
    BanditState,
    PolicyTrajectory,
    most_undersampled,
    track,
)
from drbandit.policy.etc import (
    EtcConfig,
    etc_regret_bound,
    etc_run,
    m_epsilon,
    n_epsilon,
)
from drbandit.policy.ucb import (
    UcbConfig,
    UcbVariant,
    t_epsilon,
    ucb_optimistic,
    ucb_regret_bound,
    ucb_run,
)
from drbandit.policy.uniform import uniform_run

POLICIES: Dict[str, Callable[..., PolicyTrajectory]] = {
    "etc": etc_run,
    "ucb": ucb_run,
    "ce-ucb": ucb_run,
    "uniform": uniform_run,
}

__all__ = [
    "POLICIES",
    "BanditEnv",
    "BanditState",
    "EtcConfig",
    "PolicyTrajectory",
    "UcbConfig",
    "UcbVariant",
    "ce_index",
    "ce_values",
    "etc_regret_bound",
    "etc_run",
    "m_epsilon",
    "most_undersampled",
    "n_epsilon",
    "t_epsilon",
    "track",
    "ucb_optimistic",
    "ucb_regret_bound",
    "ucb_run",
    "uniform_run",
]
