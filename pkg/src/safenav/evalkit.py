"""Validation metrics: success, collision and timeout rates plus mean minimum clearance."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from safenav import dynamics
from safenav.dynamics import VehicleSpec, VehicleState
from safenav.env import EnvConfig, NavEnv, Outcome, write_trajectory_csv
from safenav.geometry import nearest_clearance, obstacle_array
from safenav.netopt import GaussianPolicy
from safenav.tasks import Task


class ObservationMismatch(ValueError):
    pass


@dataclass
class TaskRecord:
    id: str
    outcome: Outcome
    steps: int
    min_clearance: float
    episode_cost: float
    obstacle_free: bool = False

    def to_json(self) -> dict:
        return {"id": self.id, "outcome": self.outcome.value, "steps": self.steps,
                "min_clearance": self.min_clearance, "episode_cost": self.episode_cost,
                "obstacle_free": self.obstacle_free}


@dataclass
class EvalReport:
    success_rate: float
    collision_rate: float
    timeout_rate: float
    mmc: float | None
    tasks: list[TaskRecord] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"sr": self.success_rate, "cr": self.collision_rate, "timeout": self.timeout_rate,
                "mmc": self.mmc, "tasks": [t.to_json() for t in self.tasks]}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


@dataclass
class Episode:
    task: Task
    outcome: Outcome
    states: list[VehicleState]
    rows: list[tuple]
    cost: float


def min_clearance(states: Sequence[VehicleState], obstacles, spec: VehicleSpec,
                  cap: float) -> float:
    """Smallest body-to-obstacle distance along a trajectory.

    Obstacle-free tasks return ``cap``.
    """
    if len(states) == 0:
        raise ValueError("empty trajectory")
    arr = obstacles if isinstance(obstacles, np.ndarray) else obstacle_array(obstacles)
    if arr.shape[0] == 0:
        return cap
    return min(nearest_clearance(dynamics.footprint(s, spec), arr) for s in states)


def summarize(records: Sequence[TaskRecord]) -> EvalReport:
    n = len(records)
    if n == 0:
        raise ValueError("no task records")
    goal = sum(r.outcome is Outcome.GOAL_REACHED for r in records)
    coll = sum(r.outcome is Outcome.COLLISION for r in records)
    tout = n - goal - coll
    clear = [r.min_clearance for r in records
             if r.outcome is Outcome.GOAL_REACHED and not r.obstacle_free]
    mmc = float(np.mean(clear)) if clear else None
    return EvalReport(goal / n, coll / n, tout / n, mmc, list(records))


def check_policy(policy: GaussianPolicy, env_config: EnvConfig) -> None:
    want = env_config.obs_dim
    got = policy.mean_net.layer_sizes[0]
    if got != want:
        raise ObservationMismatch(
            f"checkpoint expects {got}-dim observations but the env produces {want} "
            f"(8 + {env_config.lidar_beams} lidar beams)")


def run_episode(policy: GaussianPolicy, task: Task, env_config: EnvConfig, mode: str = "mean_action",
                rng: np.random.Generator | None = None, record: bool = False) -> Episode:
    if mode not in ("mean_action", "sample"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sample" and rng is None:
        raise ValueError("sample mode needs an rng")
    env = NavEnv(env_config, record=record)
    obs = env.reset(task)
    states = [env.state]
    total = 0.0
    while True:
        if mode == "mean_action":
            action = policy.mean(obs)
        else:
            action, _ = policy.sample(obs, rng)
        out = env.step(action)
        states.append(env.state)
        total += out.cost
        obs = out.obs
        if out.terminated:
            break
    return Episode(task, out.outcome, states, env.trajectory, total)


def evaluate(policy: GaussianPolicy, dataset: Sequence[Task], env_config: EnvConfig | None = None,
             mode: str = "mean_action", seed: int = 0) -> EvalReport:
    """One episode per task, in dataset order."""
    env_config = env_config or EnvConfig()
    if len(dataset) == 0:
        raise ValueError("evaluation dataset is empty")
    check_policy(policy, env_config)
    records = []
    for k, task in enumerate(dataset):
        rng = np.random.default_rng([seed, k]) if mode == "sample" else None
        ep = run_episode(policy, task, env_config, mode, rng)
        cap = env_config.lidar_max_range
        free = len(task.obstacles) == 0
        mc = min_clearance(ep.states, task.obstacle_array, env_config.vehicle, cap)
        records.append(TaskRecord(task.id, ep.outcome, len(ep.states) - 1, mc, ep.cost, free))
    return summarize(records)


def export_trajectory(episode: Episode, path) -> None:
    """Write a recorded episode (initial state plus one row per step) as CSV."""
    if not episode.rows:
        raise ValueError("episode was not recorded; run it with record=True")
    write_trajectory_csv(episode.rows, path)
