"""Navigation tasks: JSON dataset I/O and seeded scenario generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from safenav.dynamics import VehicleSpec, VehicleState, footprint
from safenav.geometry import OrientedBox, boxes_overlap, collides, obstacle_array

SCENARIOS = ("corridor", "parking", "random_boxes")


class DatasetError(ValueError):
    """Malformed dataset file or a task violating its invariants."""


@dataclass
class Task:
    id: str
    start: VehicleState
    goal: VehicleState
    obstacles: list[OrientedBox] = field(default_factory=list)

    def __post_init__(self):
        self._packed = obstacle_array(self.obstacles)

    @property
    def obstacle_array(self) -> np.ndarray:
        return self._packed

    def validate(self, spec: VehicleSpec) -> None:
        for name, state in (("start", self.start), ("goal", self.goal)):
            if collides(footprint(state, spec), self._packed):
                raise DatasetError(f"task {self.id!r}: {name} footprint collides with an obstacle")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "start": self.start.as_list(),
            "goal": self.goal.as_list(),
            "obstacles": [list(b.as_tuple()) for b in self.obstacles],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Task":
        try:
            tid = obj["id"]
            if not isinstance(tid, str):
                raise DatasetError(f"task id must be a string, got {tid!r}")
            start = VehicleState.from_seq(_vec(obj["start"], 5, f"{tid}.start"))
            goal = VehicleState.from_seq(_vec(obj["goal"], 5, f"{tid}.goal"))
            obstacles = [OrientedBox.from_seq(_vec(o, 5, f"{tid}.obstacles[{i}]"))
                         for i, o in enumerate(obj.get("obstacles", []))]
        except KeyError as exc:
            raise DatasetError(f"task missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DatasetError):
                raise
            raise DatasetError(f"task {obj.get('id')!r}: {exc}") from None
        return cls(tid, start, goal, obstacles)


def _vec(value, n, where):
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise DatasetError(f"{where}: expected a list of {n} numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise DatasetError(f"{where}: non-numeric entry {v!r}")
        out.append(float(v))
    return out


def load_dataset(path, spec: VehicleSpec | None = None) -> list[Task]:
    spec = spec or VehicleSpec()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or not isinstance(data.get("tasks"), list):
        raise DatasetError(f"{path}: expected an object with a 'tasks' list")
    tasks = []
    seen = set()
    for obj in data["tasks"]:
        if not isinstance(obj, dict):
            raise DatasetError(f"{path}: task entries must be objects")
        task = Task.from_json(obj)
        if task.id in seen:
            raise DatasetError(f"duplicate task id {task.id!r}")
        seen.add(task.id)
        task.validate(spec)
        tasks.append(task)
    return tasks


def save_dataset(tasks: Sequence[Task], path) -> None:
    payload = {"tasks": [t.to_json() for t in tasks]}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def _corridor(rng, idx, spec, width=3.0, length=8.0, wall=0.5, margin=(0.1, 0.4)):
    half = width / 2.0
    yc = 0.0
    x0 = 5.0
    boxes = []
    n_seg = max(1, int(round(length / 2.0)))
    seg = length / n_seg
    for side in (-1.0, 1.0):
        cy = yc + side * (half + wall)
        for j in range(n_seg):
            boxes.append(OrientedBox(x0 + (j + 0.5) * seg, cy, seg / 2.0, wall, 0.0))
    # straight start-goal line passes within `margin` of one wall
    c = rng.uniform(*margin)
    off = max(0.0, half - spec.body_width / 2.0 - c)
    off *= 1.0 if rng.random() < 0.5 else -1.0
    start = VehicleState(0.0, yc + off, 0.0, 0.0, 0.0)
    goal = VehicleState(x0 + length + 3.0, yc + off, 0.0, 0.0, 0.0)
    return Task(f"corridor-{idx:04d}", start, goal, boxes)


def _parking(rng, idx, spec, slot=9.0, car=(2.0, 1.0)):
    lane_y = 0.0
    row_y = -3.2
    gx = rng.uniform(11.0, 15.0)
    boxes = []
    x = gx - slot / 2.0 - car[0]
    for _ in range(2):
        boxes.append(OrientedBox(x + rng.uniform(-0.2, 0.2), row_y, car[0], car[1], 0.0))
        x -= 2 * car[0] + 1.0
    x = gx + slot / 2.0 + car[0]
    for _ in range(2):
        boxes.append(OrientedBox(x + rng.uniform(-0.2, 0.2), row_y, car[0], car[1], 0.0))
        x += 2 * car[0] + 1.0
    # slot center holds the body center, so back off the rear axle
    goal = VehicleState(gx - spec.rear_axle_offset, row_y, 0.0, 0.0, 0.0)
    start = VehicleState(0.0, lane_y + rng.uniform(-0.5, 0.5), rng.uniform(-0.15, 0.15), 0.0, 0.0)
    return Task(f"parking-{idx:04d}", start, goal, boxes)


def _point_segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def _random_boxes(rng, idx, spec, n_boxes=(0, 3), dist=(8.0, 14.0), lateral=2.0,
                  path_clearance=3.0):
    d = rng.uniform(*dist)
    y0 = rng.uniform(-lateral / 2, lateral / 2)
    y1 = y0 + rng.uniform(-lateral, lateral)
    bearing = math.atan2(y1 - y0, d)
    start = VehicleState(0.0, y0, bearing + rng.uniform(-0.15, 0.15), 0.0, 0.0)
    goal = VehicleState(d, y1, bearing, 0.0, 0.0)
    a = np.array([start.x, start.y])
    b = np.array([goal.x, goal.y])
    boxes: list[OrientedBox] = []
    want = int(rng.integers(n_boxes[0], n_boxes[1] + 1))
    keep_out = [footprint(start, spec), footprint(goal, spec)]
    tries = 0
    while len(boxes) < want and tries < 200:
        tries += 1
        cand = OrientedBox(rng.uniform(-4.0, d + 6.0), rng.uniform(-8.0, 8.0),
                           rng.uniform(0.4, 1.5), rng.uniform(0.4, 1.5), rng.uniform(-math.pi, math.pi))
        if _point_segment_distance(np.array(cand.center), a, b) < path_clearance + max(cand.half_x, cand.half_y):
            continue
        grown = OrientedBox(cand.cx, cand.cy, cand.half_x + 1.0, cand.half_y + 1.0, cand.heading)
        if any(boxes_overlap(grown, k) for k in keep_out):
            continue
        boxes.append(cand)
    return Task(f"random-{idx:04d}", start, goal, boxes)


_GENERATORS = {"corridor": _corridor, "parking": _parking, "random_boxes": _random_boxes}


def generate_dataset(seed: int, count: int, scenario: str, spec: VehicleSpec | None = None,
                     max_retries: int = 100, **params) -> list[Task]:
    """Generate ``count`` valid tasks, deterministic in ``seed``.

    Extra keyword arguments go to the scenario generator, e.g. ``width`` for
    the corridor passage or ``n_boxes`` for random_boxes.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if scenario not in _GENERATORS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    spec = spec or VehicleSpec()
    rng = np.random.default_rng(seed)
    gen = _GENERATORS[scenario]
    tasks = []
    for i in range(count):
        for _ in range(max_retries):
            task = gen(rng, i, spec, **params)
            try:
                task.validate(spec)
            except DatasetError:
                continue
            tasks.append(task)
            break
        else:
            raise RuntimeError(f"{scenario}: could not place a valid task after {max_retries} tries")
    return tasks
