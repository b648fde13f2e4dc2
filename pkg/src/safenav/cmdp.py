"""PPO and its Lagrangian (cost-constrained) variant.

Everything here acts on flat numpy batches. The policy is a
:class:`~safenav.netopt.GaussianPolicy`; critics are plain
:class:`~safenav.netopt.Mlp` value nets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from safenav.netopt import AdamState, GaussianPolicy, Mlp, adam_step, clip_grad_norm, logprob_grads


@dataclass(frozen=True)
class GaeConfig:
    discount: float = 0.99
    gae_lambda: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must lie in [0, 1]")


@dataclass(frozen=True)
class PpoConfig:
    clip: float = 0.2
    epochs: int = 10
    minibatch_size: int = 64
    value_coef: float = 0.5
    entropy_coef: float = 0.005
    lr: float = 3e-4
    critic_lr: float = 1e-3
    max_grad_norm: float = 0.5
    hidden: tuple = (64, 64)

    def __post_init__(self):
        if not 0.0 < self.clip < 1.0:
            raise ValueError("clip must lie in (0, 1)")
        if self.epochs < 1 or self.minibatch_size < 1:
            raise ValueError("epochs and minibatch_size must be >= 1")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


@dataclass(frozen=True)
class LagrangeState:
    lam: float = 0.0
    lr: float = 0.05
    cost_limit: float = 2.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("multiplier must be nonnegative")
        if self.lr < 0:
            raise ValueError("multiplier step size must be nonnegative")


@dataclass
class RolloutBuffer:
    """Flat transitions; ``dones`` marks the last step of an episode or
    truncation, ``terminals`` the subset that ended in an absorbing state."""

    obs: np.ndarray
    actions: np.ndarray
    logprobs: np.ndarray
    rewards: np.ndarray
    costs: np.ndarray
    values_r: np.ndarray
    values_c: np.ndarray
    dones: np.ndarray
    terminals: np.ndarray
    adv_r: np.ndarray = field(default=None)
    adv_c: np.ndarray = field(default=None)
    ret_r: np.ndarray = field(default=None)
    ret_c: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.rewards)
        for name in ("obs", "actions", "logprobs", "costs", "values_r", "values_c", "dones",
                     "terminals"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"buffer field {name} has length {len(getattr(self, name))}, expected {n}")

    def __len__(self):
        return len(self.rewards)


def discounted_sum(values, gamma: float) -> float:
    """Sum of ``gamma**t * values[t]``, accumulated back to front."""
    total = 0.0
    for v in reversed(list(values)):
        total = float(v) + gamma * total
    return total


def compute_gae(rewards, values, next_values, dones, gamma, gae_lambda, terminals=None):
    """Generalised advantage estimates and value targets.

    Args:
        rewards, values: per-step reward and V(s_t).
        next_values: V(s_{t+1}); for the last step of a truncated segment
            this is the bootstrap value.
        dones: step t ends an episode or truncation; stops the recursion.
        terminals: step t ended in an absorbing state, so s_{t+1} is not
            bootstrapped. Defaults to ``dones``.

    Returns:
        ``(advantages, returns)`` with ``returns = advantages + values``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    next_values = np.asarray(next_values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    terminals = dones if terminals is None else np.asarray(terminals, dtype=bool)
    n = len(rewards)
    if not (len(values) == len(next_values) == len(dones) == len(terminals) == n):
        raise ValueError("compute_gae inputs must share one length")
    adv = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        nv = 0.0 if terminals[t] else next_values[t]
        delta = rewards[t] + gamma * nv - values[t]
        last = delta + (0.0 if dones[t] else gamma * gae_lambda * last)
        adv[t] = last
    return adv, adv + values


def normalize(adv):
    adv = np.asarray(adv, dtype=np.float64)
    if adv.size < 2:
        return adv - adv.mean()
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def combine_advantages(adv_r, adv_c, lam: float):
    """Penalised advantage ``(A_r - lam * A_c) / (1 + lam)``."""
    if lam == 0.0 or adv_c is None:
        return np.asarray(adv_r, dtype=np.float64)
    return (np.asarray(adv_r) - lam * np.asarray(adv_c)) / (1.0 + lam)


def clipped_surrogate(ratio, adv, clip):
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv)


def ppo_policy_loss(policy: GaussianPolicy, obs, actions, logp_old, adv, clip: float,
                    entropy_coef: float = 0.0):
    """Negative clipped surrogate minus the entropy bonus.

    ``adv`` should already be the (possibly penalised) normalised advantage.
    Returns ``(loss, grads, info)`` with gradients ordered as
    ``policy.params``.
    """
    adv = np.asarray(adv, dtype=np.float64)
    logp = policy.logprob(obs, actions)
    ratio = np.exp(logp - logp_old)
    unclipped = ratio * adv
    surr = clipped_surrogate(ratio, adv, clip)
    entropy = policy.entropy()
    loss = -float(np.mean(surr)) - entropy_coef * entropy
    n = len(adv)
    # gradient flows only where the unclipped branch attains the min
    active = unclipped <= np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv
    dlogp = np.where(active, -unclipped / n, 0.0)
    grads = logprob_grads(policy, obs, actions, dlogp)
    grads[-1] = grads[-1] - entropy_coef
    info = {"approx_kl": float(np.mean(logp_old - logp)),
            "clip_frac": float(np.mean(np.abs(ratio - 1.0) > clip))}
    return loss, grads, info


def value_loss(critic: Mlp, obs, returns):
    """Mean squared error of the critic against ``returns`` and its gradients."""
    pred, acts = critic.forward(obs, keep=True)
    pred = pred[:, 0]
    err = pred - np.asarray(returns, dtype=np.float64)
    loss = float(np.mean(err * err))
    g = (2.0 / len(err)) * err[:, None]
    grads, _ = critic.backward(acts, g)
    return loss, grads


def update_multiplier(state: LagrangeState, mean_episode_cost: float) -> LagrangeState:
    """Projected ascent on the constraint violation."""
    lam = max(0.0, state.lam + state.lr * (mean_episode_cost - state.cost_limit))
    return replace(state, lam=lam)


@dataclass
class Learner:
    """Parameters and optimiser state for one PPO / Lagrangian-PPO agent."""

    policy: GaussianPolicy
    critic_r: Mlp
    critic_c: Mlp | None
    opt_pi: AdamState
    opt_r: AdamState
    opt_c: AdamState | None

    @classmethod
    def create(cls, obs_dim, act_dim, config: PpoConfig, rng_pi, rng_r, rng_c=None):
        hidden = list(config.hidden)
        policy = GaussianPolicy.init(obs_dim, act_dim, hidden, rng_pi)
        critic_r = Mlp.init([obs_dim, *hidden, 1], rng_r)
        critic_c = Mlp.init([obs_dim, *hidden, 1], rng_c) if rng_c is not None else None
        return cls(
            policy, critic_r, critic_c,
            AdamState.for_params(policy.params, lr=config.lr),
            AdamState.for_params(critic_r.params, lr=config.critic_lr),
            AdamState.for_params(critic_c.params, lr=config.critic_lr) if critic_c else None,
        )


def _critic_step(critic, opt, obs, ret, config):
    loss, grads = value_loss(critic, obs, ret)
    grads = [config.value_coef * g for g in grads]
    clip_grad_norm(grads, config.max_grad_norm)
    adam_step(critic.params, grads, opt)
    return loss


def ppo_update(learner: Learner, buf: RolloutBuffer, config: PpoConfig, lam: float,
               rng: np.random.Generator) -> dict:
    """Run the PPO epochs over ``buf``; the policy uses the penalised advantage
    whenever a cost critic is present."""
    adv = combine_advantages(buf.adv_r, buf.adv_c if learner.critic_c is not None else None, lam)
    adv = normalize(adv)
    n = len(buf)
    mb = min(config.minibatch_size, n)
    stats = {"policy_loss": 0.0, "value_loss_r": 0.0, "value_loss_c": 0.0, "approx_kl": 0.0}
    count = 0
    pol = learner.policy
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, mb):
            idx = order[start:start + mb]
            loss, grads, info = ppo_policy_loss(pol, buf.obs[idx], buf.actions[idx],
                                                buf.logprobs[idx], adv[idx], config.clip,
                                                config.entropy_coef)
            clip_grad_norm(grads, config.max_grad_norm)
            adam_step(pol.params, grads, learner.opt_pi)
            pol.clamp()
            stats["policy_loss"] += loss
            stats["approx_kl"] += info["approx_kl"]
            stats["value_loss_r"] += _critic_step(learner.critic_r, learner.opt_r, buf.obs[idx],
                                                  buf.ret_r[idx], config)
            if learner.critic_c is not None:
                stats["value_loss_c"] += _critic_step(learner.critic_c, learner.opt_c,
                                                      buf.obs[idx], buf.ret_c[idx], config)
            count += 1
    return {k: v / max(count, 1) for k, v in stats.items()}
