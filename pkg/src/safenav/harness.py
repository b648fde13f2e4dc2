"""Rollout collection and the PPO / Lagrangian-PPO training loop."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from safenav.cmdp import (GaeConfig, LagrangeState, Learner, PpoConfig, RolloutBuffer, compute_gae,
                          ppo_update, update_multiplier)
from safenav.env import EnvConfig, NavEnv, Outcome
from safenav.netopt import _logprob, save_checkpoint
from safenav.tasks import Task, load_dataset

log = logging.getLogger(__name__)

LOG_HEADER = ("iter", "env_steps", "mean_return", "mean_disc_cost", "success_rate",
              "collision_rate", "timeout_rate", "lambda", "cum_violations", "wall_s")

# stream tags for np.random.default_rng([seed, tag])
_RNG_POLICY, _RNG_CRITIC_R, _RNG_CRITIC_C, _RNG_TASKS, _RNG_MINIBATCH = range(5)
_RNG_ENV_BASE = 1000


@dataclass(frozen=True)
class TrainConfig:
    algo: str = "ppo"
    total_iterations: int = 300
    steps_per_iteration: int = 4096
    num_envs: int = 8
    seed: int = 0
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    gae: GaeConfig = field(default_factory=GaeConfig)
    lagrange: LagrangeState = field(default_factory=LagrangeState)
    dataset: str | None = None
    out_dir: str = "runs/default"
    checkpoint_interval: int = 10
    # wall time is kept out of the log by default so reruns are byte-identical
    log_wall_time: bool = False

    def __post_init__(self):
        if self.algo not in ("ppo", "lppo"):
            raise ValueError(f"algo must be 'ppo' or 'lppo', got {self.algo!r}")
        if self.total_iterations < 0:
            raise ValueError("total_iterations must be >= 0")
        if self.num_envs < 1 or self.steps_per_iteration < 1:
            raise ValueError("num_envs and steps_per_iteration must be >= 1")
        if self.steps_per_iteration % self.num_envs:
            raise ValueError("steps_per_iteration must be divisible by num_envs")
        if self.checkpoint_interval < 1:
            raise ValueError("checkpoint_interval must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        obj = dict(obj)
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown train config field(s): {', '.join(sorted(unknown))}")
        if "env" in obj and not isinstance(obj["env"], EnvConfig):
            obj["env"] = EnvConfig.from_json(obj["env"])
        for name, sub in (("ppo", PpoConfig), ("gae", GaeConfig), ("lagrange", LagrangeState)):
            if name in obj and not isinstance(obj[name], sub):
                extra = set(obj[name]) - {f.name for f in fields(sub)}
                if extra:
                    raise ValueError(f"unknown {name} field(s): {', '.join(sorted(extra))}")
                obj[name] = sub(**obj[name])
        return cls(**obj)


@dataclass
class EpisodeStats:
    task_id: str
    ret: float
    disc_cost: float
    outcome: Outcome
    length: int


@dataclass
class IterationRecord:
    iter: int
    env_steps: int
    mean_return: float
    mean_disc_cost: float
    success_rate: float
    collision_rate: float
    timeout_rate: float
    lam: float
    cum_violations: int
    wall_s: float

    def row(self) -> list[str]:
        return [str(self.iter), str(self.env_steps), repr(self.mean_return),
                repr(self.mean_disc_cost), repr(self.success_rate), repr(self.collision_rate),
                repr(self.timeout_rate), repr(self.lam), str(self.cum_violations),
                repr(self.wall_s)]


class TaskSampler:
    """Hands out tasks round-robin over a seeded shuffle, reshuffling each pass."""

    def __init__(self, tasks: Sequence[Task], rng: np.random.Generator):
        if not tasks:
            raise ValueError("empty task list")
        self.tasks = list(tasks)
        self.rng = rng
        self._order: list[int] = []

    def next(self) -> Task:
        if not self._order:
            self._order = list(self.rng.permutation(len(self.tasks)))[::-1]
        return self.tasks[int(self._order.pop())]


class RolloutWorker:
    """A pool of environments stepped in lockstep by a shared policy snapshot.

    Each env owns its RNG stream and its episode bookkeeping, so episodes run
    on across iterations.
    """

    def __init__(self, tasks, env_config: EnvConfig, num_envs: int, seed: int, discount: float):
        self.envs = [NavEnv(env_config) for _ in range(num_envs)]
        self.rngs = [np.random.default_rng([seed, _RNG_ENV_BASE + i]) for i in range(num_envs)]
        self.sampler = TaskSampler(tasks, np.random.default_rng([seed, _RNG_TASKS]))
        self.discount = discount
        self.obs = np.stack([env.reset(self.sampler.next()) for env in self.envs])
        self._ret = np.zeros(num_envs)
        self._cost = np.zeros(num_envs)
        self._len = np.zeros(num_envs, dtype=int)

    def collect(self, learner: Learner, steps: int):
        e = len(self.envs)
        t_len = steps // e
        dim = self.obs.shape[1]
        pol = learner.policy
        std = np.exp(pol.log_std)
        act_dim = len(std)
        obs = np.zeros((t_len, e, dim))
        acts = np.zeros((t_len, e, act_dim))
        logp = np.zeros((t_len, e))
        rew = np.zeros((t_len, e))
        cost = np.zeros((t_len, e))
        v_r = np.zeros((t_len, e))
        v_c = np.zeros((t_len, e))
        nv_r = np.zeros((t_len, e))
        nv_c = np.zeros((t_len, e))
        dones = np.zeros((t_len, e), dtype=bool)
        terms = np.zeros((t_len, e), dtype=bool)
        truncated: list[tuple[int, int, np.ndarray]] = []
        episodes: list[EpisodeStats] = []
        for t in range(t_len):
            cur = self.obs
            mu = pol.mean(cur)
            noise = np.stack([rng.standard_normal(act_dim) for rng in self.rngs])
            a = mu + std * noise
            obs[t] = cur
            acts[t] = a
            logp[t] = _logprob(mu, pol.log_std, a)
            v_r[t] = learner.critic_r.forward(cur)[:, 0]
            if learner.critic_c is not None:
                v_c[t] = learner.critic_c.forward(cur)[:, 0]
            nxt = np.empty_like(cur)
            for i, env in enumerate(self.envs):
                out = env.step(a[i])
                rew[t, i] = out.reward
                cost[t, i] = out.cost
                self._cost[i] += self.discount ** self._len[i] * out.cost
                self._ret[i] += out.reward
                self._len[i] += 1
                if out.terminated:
                    dones[t, i] = True
                    if out.outcome is Outcome.TIMEOUT:
                        truncated.append((t, i, out.obs))
                    else:
                        terms[t, i] = True
                    episodes.append(EpisodeStats(env.task.id, float(self._ret[i]),
                                                 float(self._cost[i]), out.outcome,
                                                 int(self._len[i])))
                    self._ret[i] = self._cost[i] = 0.0
                    self._len[i] = 0
                    nxt[i] = env.reset(self.sampler.next())
                else:
                    nxt[i] = out.obs
            self.obs = nxt
        # next-state values: the following row, then bootstrap the final row
        nv_r[:-1] = v_r[1:]
        nv_c[:-1] = v_c[1:]
        nv_r[-1] = learner.critic_r.forward(self.obs)[:, 0]
        if learner.critic_c is not None:
            nv_c[-1] = learner.critic_c.forward(self.obs)[:, 0]
        if truncated:
            tobs = np.stack([o for _, _, o in truncated])
            tv_r = learner.critic_r.forward(tobs)[:, 0]
            tv_c = learner.critic_c.forward(tobs)[:, 0] if learner.critic_c is not None else None
            for k, (t, i, _) in enumerate(truncated):
                nv_r[t, i] = tv_r[k]
                if tv_c is not None:
                    nv_c[t, i] = tv_c[k]
        # the collection boundary truncates every still-running episode
        seg_end = dones.copy()
        seg_end[-1] = True

        def flat(x):
            return np.ascontiguousarray(np.swapaxes(x, 0, 1)).reshape(t_len * e, *x.shape[2:])

        buf = RolloutBuffer(flat(obs), flat(acts), flat(logp), flat(rew), flat(cost), flat(v_r),
                            flat(v_c), flat(seg_end), flat(terms))
        return buf, flat(nv_r), flat(nv_c), episodes


def collect_rollouts(learner: Learner, worker: RolloutWorker, steps: int, gae: GaeConfig):
    """Collect ``steps`` transitions and fill in advantages and returns."""
    buf, nv_r, nv_c, episodes = worker.collect(learner, steps)
    buf.adv_r, buf.ret_r = compute_gae(buf.rewards, buf.values_r, nv_r, buf.dones, gae.discount,
                                       gae.gae_lambda, buf.terminals)
    if learner.critic_c is not None:
        buf.adv_c, buf.ret_c = compute_gae(buf.costs, buf.values_c, nv_c, buf.dones, gae.discount,
                                           gae.gae_lambda, buf.terminals)
    return buf, episodes


def make_learner(config: TrainConfig, obs_dim: int, act_dim: int = 2) -> Learner:
    seed = config.seed
    return Learner.create(
        obs_dim, act_dim, config.ppo,
        np.random.default_rng([seed, _RNG_POLICY]),
        np.random.default_rng([seed, _RNG_CRITIC_R]),
        np.random.default_rng([seed, _RNG_CRITIC_C]) if config.algo == "lppo" else None,
    )


def _summ(episodes: list[EpisodeStats], limit: float):
    n = len(episodes)
    if n == 0:
        return math.nan, math.nan, math.nan, math.nan, math.nan, 0
    ret = float(np.mean([e.ret for e in episodes]))
    dc = float(np.mean([e.disc_cost for e in episodes]))
    sr = sum(e.outcome is Outcome.GOAL_REACHED for e in episodes) / n
    cr = sum(e.outcome is Outcome.COLLISION for e in episodes) / n
    tr = sum(e.outcome is Outcome.TIMEOUT for e in episodes) / n
    viol = sum(e.disc_cost > limit for e in episodes)
    return ret, dc, sr, cr, tr, viol


@dataclass
class TrainResult:
    learner: Learner
    records: list[IterationRecord]
    lagrange: LagrangeState
    out_dir: Path


def train(config: TrainConfig, tasks: Sequence[Task] | None = None,
          callback: Callable[[IterationRecord, Learner], bool] | None = None) -> TrainResult:
    """Train a policy and write ``log.csv`` plus JSON checkpoints to ``config.out_dir``.

    ``tasks`` overrides ``config.dataset`` when given. ``callback`` runs after
    every iteration; returning True stops training early (the final
    checkpoint is still written).
    """
    if tasks is None:
        if config.dataset is None:
            raise ValueError("no dataset configured")
        tasks = load_dataset(config.dataset, config.env.vehicle)
    tasks = list(tasks)
    if not tasks:
        raise ValueError("training dataset is empty")
    for task in tasks:
        task.validate(config.env.vehicle)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_json(), indent=1, sort_keys=True) + "\n")

    learner = make_learner(config, config.env.obs_dim)
    worker = RolloutWorker(tasks, config.env, config.num_envs, config.seed, config.gae.discount)
    mb_rng = np.random.default_rng([config.seed, _RNG_MINIBATCH])
    lag = config.lagrange
    lppo = config.algo == "lppo"

    def meta(it):
        return {"algo": config.algo, "iter": it, "lambda": lag.lam if lppo else 0.0}

    log_path = out / "log.csv"
    fh = log_path.open("w", newline="")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    timing = (out / "timing.csv").open("w")
    timing.write("iter,wall_s\n")
    records: list[IterationRecord] = []
    cum_viol = 0
    best_sr = -1.0
    t0 = time.perf_counter()
    try:
        for it in range(1, config.total_iterations + 1):
            buf, episodes = collect_rollouts(learner, worker, config.steps_per_iteration, config.gae)
            ppo_update(learner, buf, config.ppo, lag.lam if lppo else 0.0, mb_rng)
            ret, dc, sr, cr, tr, viol = _summ(episodes, lag.cost_limit)
            if lppo and episodes:
                lag = update_multiplier(lag, dc)
            cum_viol += viol
            wall = time.perf_counter() - t0
            rec = IterationRecord(it, it * config.steps_per_iteration, ret, dc, sr, cr, tr,
                                  lag.lam if lppo else 0.0, cum_viol,
                                  wall if config.log_wall_time else 0.0)
            records.append(rec)
            writer.writerow(rec.row())
            fh.flush()
            timing.write(f"{it},{wall!r}\n")
            log.info("iter %d ret %.2f cost %.2f sr %.2f cr %.2f lam %.3f", it, ret, dc, sr, cr,
                     rec.lam)
            if it % config.checkpoint_interval == 0:
                save_checkpoint(learner.policy, out / f"ckpt_{it}.json", meta(it))
            if episodes and sr > best_sr:
                best_sr = sr
                save_checkpoint(learner.policy, out / "ckpt_best.json", meta(it))
            if callback is not None and callback(rec, learner):
                break
    finally:
        fh.close()
        timing.close()
    save_checkpoint(learner.policy, out / "ckpt_final.json", meta(len(records)))
    return TrainResult(learner, records, lag, out)


def read_log(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
