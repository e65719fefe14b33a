"""Round-robin baseline."""

import numpy as np

from drbandit.policy.common import BanditEnv, BanditState, PolicyTrajectory
from drbandit.simplex import MixtureWeights


def uniform_run(env: BanditEnv) -> PolicyTrajectory:
    """Pull arm t mod K at every step; the estimate is the simplex centroid."""
    k, horizon = env.K, env.horizon
    state = BanditState(k, horizon)
    actions = np.arange(horizon, dtype=np.int64) % k
    for arm in actions:
        state.observe(int(arm), env.pull(int(arm)))
    return PolicyTrajectory(
        name="uniform",
        K=k,
        actions=actions,
        estimate_history=[(0, MixtureWeights.from_array(np.full(k, 1.0 / k)))],
        final_cdfs=state.final_cdfs(),
    )
