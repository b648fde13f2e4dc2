"""Two-armed constrained bandit used to sanity-check the Lagrangian update.

Arm 0 pays reward 1 at cost 1, arm 1 pays 0.5 at no cost. A scalar Gaussian
action picks arm 0 when negative and arm 1 otherwise. Under a cost limit
``d`` the optimal mixed policy plays arm 0 with probability ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from safenav.cmdp import LagrangeState, Learner, PpoConfig, RolloutBuffer, compute_gae, ppo_update, update_multiplier

ARM_REWARD = (1.0, 0.5)
ARM_COST = (1.0, 0.0)


@dataclass
class BanditHistory:
    mean_cost: list[float]
    mean_reward: list[float]
    lam: list[float]

    def tail_cost(self, k: int = 50) -> float:
        return float(np.mean(self.mean_cost[-k:]))


def run_bandit(algo: str, iterations: int = 500, seed: int = 0, batch: int = 256,
               cost_limit: float = 0.2, lam_lr: float = 0.5, config: PpoConfig | None = None
               ) -> BanditHistory:
    config = config or PpoConfig(hidden=(), lr=0.01, critic_lr=0.05, epochs=4, minibatch_size=64,
                                 entropy_coef=0.0, max_grad_norm=10.0)
    rng = np.random.default_rng([seed, 0])
    learner = Learner.create(1, 1, config, np.random.default_rng([seed, 1]),
                             np.random.default_rng([seed, 2]),
                             np.random.default_rng([seed, 3]) if algo == "lppo" else None)
    lag = LagrangeState(0.0, lam_lr, cost_limit)
    obs = np.ones((batch, 1))
    ones = np.ones(batch, dtype=bool)
    zeros = np.zeros(batch)
    hist = BanditHistory([], [], [])
    for _ in range(iterations):
        act, logp = learner.policy.sample(obs, rng)
        arm = (act[:, 0] >= 0.0).astype(int)
        r = np.take(ARM_REWARD, arm)
        c = np.take(ARM_COST, arm)
        v_r = learner.critic_r.forward(obs)[:, 0]
        v_c = learner.critic_c.forward(obs)[:, 0] if learner.critic_c is not None else zeros
        buf = RolloutBuffer(obs, act, logp, r, c, v_r, v_c, ones, ones)
        buf.adv_r, buf.ret_r = compute_gae(r, v_r, zeros, ones, 1.0, 1.0)
        if learner.critic_c is not None:
            buf.adv_c, buf.ret_c = compute_gae(c, v_c, zeros, ones, 1.0, 1.0)
        ppo_update(learner, buf, config, lag.lam if algo == "lppo" else 0.0, rng)
        if algo == "lppo":
            lag = update_multiplier(lag, float(c.mean()))
        hist.mean_cost.append(float(c.mean()))
        hist.mean_reward.append(float(r.mean()))
        hist.lam.append(lag.lam)
    return hist
