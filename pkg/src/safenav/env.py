"""Constrained navigation environment with reward and safety-cost signals."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from safenav import dynamics, kernels
from safenav.dynamics import Control, VehicleSpec, VehicleState
from safenav.geometry import Scan, beam_angles, wrap_angle
from safenav.tasks import DatasetError, Task

TRAJECTORY_HEADER = ("step", "x", "y", "theta", "v", "gamma", "a", "omega", "reward", "cost",
                     "min_lidar", "clearance")

_LIDAR_FLOOR = 1e-3


class Outcome(str, enum.Enum):
    IN_PROGRESS = "InProgress"
    GOAL_REACHED = "GoalReached"
    COLLISION = "Collision"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class RewardWeights:
    progress: float = 1.0
    step: float = 0.05
    goal: float = 100.0
    collision: float = 100.0


@dataclass(frozen=True)
class EnvConfig:
    dt: float = 0.1
    max_steps: int = 250
    r_safety: float = 0.5
    goal_xy_tol: float = 0.5
    goal_theta_tol: float = 0.3
    goal_v_tol: float = 0.3
    lidar_beams: int = 36
    lidar_fov: float = 2 * math.pi
    lidar_max_range: float = 20.0
    # "body": ranges measured from the body outline, "center": from the body center
    lidar_origin: str = "body"
    # how the scan is reduced for the cost indicator: "min" beam or "l2" norm
    cost_reduction: str = "min"
    weights: RewardWeights = field(default_factory=RewardWeights)
    cost_limit: float = 2.0
    vehicle: VehicleSpec = field(default_factory=VehicleSpec)

    def __post_init__(self):
        if self.r_safety <= 0:
            raise ValueError("r_safety must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if min(self.goal_xy_tol, self.goal_theta_tol, self.goal_v_tol) <= 0:
            raise ValueError("goal tolerances must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.lidar_beams < 1 or self.lidar_max_range <= 0:
            raise ValueError("lidar needs >= 1 beam and a positive range")
        if self.lidar_origin not in ("body", "center"):
            raise ValueError(f"unknown lidar_origin {self.lidar_origin!r}")
        if self.cost_reduction not in ("min", "l2"):
            raise ValueError(f"unknown cost_reduction {self.cost_reduction!r}")

    @property
    def obs_dim(self) -> int:
        return 8 + self.lidar_beams

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "EnvConfig":
        obj = dict(obj)
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown env config field(s): {', '.join(sorted(unknown))}")
        if "weights" in obj:
            obj["weights"] = _build(RewardWeights, obj["weights"], "env.weights")
        if "vehicle" in obj:
            obj["vehicle"] = _build(VehicleSpec, obj["vehicle"], "env.vehicle")
        return cls(**obj)


def _build(cls, obj, where):
    if isinstance(obj, cls):
        return obj
    known = {f.name for f in fields(cls)}
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"unknown {where} field(s): {', '.join(sorted(unknown))}")
    return cls(**obj)


@dataclass
class StepOutcome:
    obs: np.ndarray
    reward: float
    cost: float
    terminated: bool
    outcome: Outcome
    min_lidar: float


def immediate_cost(v: float, scan: Scan, r_safety: float, reduction: str = "min") -> float:
    """Speed magnitude when the scan comes within ``r_safety``, else 0."""
    if reduction == "min":
        near = np.min(scan.distances) <= r_safety
    else:
        near = float(np.linalg.norm(scan.distances)) <= r_safety
    return abs(v) if near else 0.0


def planar_distance(a: VehicleState, b: VehicleState) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def reward(prev: VehicleState, cur: VehicleState, outcome: Outcome, goal: VehicleState,
           weights: RewardWeights) -> float:
    r = weights.progress * (planar_distance(prev, goal) - planar_distance(cur, goal)) - weights.step
    if outcome is Outcome.GOAL_REACHED:
        r += weights.goal
    elif outcome is Outcome.COLLISION:
        r -= weights.collision
    return r


def goal_reached(state: VehicleState, goal: VehicleState, config: EnvConfig) -> bool:
    return (planar_distance(state, goal) <= config.goal_xy_tol
            and abs(wrap_angle(state.theta - goal.theta)) <= config.goal_theta_tol
            and abs(state.v - goal.v) <= config.goal_v_tol)


def observation(state: VehicleState, goal: VehicleState, lidar: np.ndarray,
                max_range: float) -> np.ndarray:
    head = [goal.x - state.x, goal.y - state.y, wrap_angle(goal.theta - state.theta),
            goal.v - state.v, goal.gamma - state.gamma, state.theta, state.v, state.gamma]
    return np.concatenate([np.asarray(head, dtype=np.float64), lidar / max_range])


class EpisodeError(RuntimeError):
    """Stepping an environment that was never reset or already terminated."""


class NavEnv:
    """One navigation episode at a time.

    Not thread-safe; run separate instances for parallel collection.
    """

    def __init__(self, config: EnvConfig | None = None, record: bool = False):
        self.config = config or EnvConfig()
        self.record = record
        self.task: Task | None = None
        self.state: VehicleState | None = None
        self.steps = 0
        self.done = True
        self.outcome = Outcome.IN_PROGRESS
        self.trajectory: list[tuple] = []
        cfg = self.config
        self._rel_angles = beam_angles(0.0, cfg.lidar_beams, cfg.lidar_fov)
        if cfg.lidar_origin == "body":
            spec = cfg.vehicle
            hx, hy = spec.body_length / 2.0, spec.body_width / 2.0
            body = (0.0, 0.0, hx, hy, 0.0)
            self._body_offset = np.array([kernels.ray_box(0.0, 0.0, math.cos(a), math.sin(a), body)
                                          for a in self._rel_angles])
        else:
            self._body_offset = np.zeros(cfg.lidar_beams)

    def lidar(self, state: VehicleState) -> Scan:
        """Ranges for the given state from the configured lidar origin."""
        cfg = self.config
        box = dynamics.footprint(state, cfg.vehicle)
        raw = kernels.scan(box.cx, box.cy, state.theta, self.task.obstacle_array,
                           cfg.lidar_beams, cfg.lidar_fov, cfg.lidar_max_range + self._body_offset.max())
        ranges = np.clip(np.asarray(raw) - self._body_offset, _LIDAR_FLOOR, cfg.lidar_max_range)
        return Scan(ranges, cfg.lidar_max_range)

    def clearance(self, state: VehicleState) -> float:
        box = dynamics.footprint(state, self.config.vehicle)
        return kernels.nearest_clearance(box.as_tuple(), self.task.obstacle_array)

    def reset(self, task: Task) -> np.ndarray:
        try:
            task.validate(self.config.vehicle)
        except DatasetError as exc:
            raise ValueError(str(exc)) from None
        self.task = task
        self.state = task.start
        self.steps = 0
        self.done = False
        self.outcome = Outcome.IN_PROGRESS
        scan = self.lidar(self.state)
        self._last_scan = scan
        self.trajectory = []
        if self.record:
            cost = immediate_cost(self.state.v, scan, self.config.r_safety, self.config.cost_reduction)
            self._record(0.0, 0.0, 0.0, cost, scan)
        return observation(self.state, task.goal, scan.distances, self.config.lidar_max_range)

    def _record(self, a, omega, r, c, scan):
        s = self.state
        self.trajectory.append((self.steps, s.x, s.y, s.theta, s.v, s.gamma, a, omega, r, c,
                                scan.min_distance, self.clearance(s)))

    def step(self, action) -> StepOutcome:
        if self.task is None:
            raise EpisodeError("reset() must be called before step()")
        if self.done:
            raise EpisodeError("episode already terminated; call reset()")
        cfg = self.config
        spec = cfg.vehicle
        if not isinstance(action, Control):
            action = Control(float(action[0]), float(action[1]))
        u = dynamics.clip_control(action, spec)
        prev = self.state
        cur = dynamics.step(prev, u, cfg.dt, spec)
        self.state = cur
        self.steps += 1
        box = dynamics.footprint(cur, spec)
        goal = self.task.goal
        if kernels.any_overlap(box.as_tuple(), self.task.obstacle_array):
            outcome = Outcome.COLLISION
        elif goal_reached(cur, goal, cfg):
            outcome = Outcome.GOAL_REACHED
        elif self.steps >= cfg.max_steps:
            outcome = Outcome.TIMEOUT
        else:
            outcome = Outcome.IN_PROGRESS
        scan = self.lidar(cur)
        self._last_scan = scan
        r = reward(prev, cur, outcome, goal, cfg.weights)
        c = immediate_cost(cur.v, scan, cfg.r_safety, cfg.cost_reduction)
        self.outcome = outcome
        self.done = outcome is not Outcome.IN_PROGRESS
        if self.record:
            self._record(u.a, u.omega, r, c, scan)
        obs = observation(cur, goal, scan.distances, cfg.lidar_max_range)
        return StepOutcome(obs, r, c, self.done, outcome, scan.min_distance)


def write_trajectory_csv(rows, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def read_trajectory_csv(path) -> list[tuple]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRAJECTORY_HEADER:
            raise ValueError(f"{path}: unexpected trajectory header {header}")
        return [(int(r[0]), *(float(v) for v in r[1:])) for r in reader]
