"""Oriented-rectangle geometry: ray casting, overlap and clearance.

All queries are pure functions. The heavy loops run in
:mod:`safenav.kernels`, which dispatches to the compiled extension when it
is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from safenav import kernels


def wrap_angle(theta: float) -> float:
    """Wrap an angle to ``[-pi, pi)``; in-range values pass through unchanged."""
    if -math.pi <= theta < math.pi:
        return theta
    w = (theta + math.pi) % (2.0 * math.pi) - math.pi
    # float modulo can land exactly on +pi for inputs just below -pi
    if w >= math.pi:
        w -= 2.0 * math.pi
    return w


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle with center, half extents and heading (radians)."""

    cx: float
    cy: float
    half_x: float
    half_y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (self.half_x > 0 and self.half_y > 0):
            raise ValueError(f"half extents must be positive, got ({self.half_x}, {self.half_y})")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.cx, self.cy, self.half_x, self.half_y, self.heading)

    @classmethod
    def from_seq(cls, row: Sequence[float]) -> "OrientedBox":
        cx, cy, hx, hy, h = (float(v) for v in row)
        return cls(cx, cy, hx, hy, h)

    def corners(self) -> np.ndarray:
        """Corner points as a ``(4, 2)`` array, counter-clockwise."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        ax, ay = c * self.half_x, s * self.half_x
        bx, by = -s * self.half_y, c * self.half_y
        return np.array(
            [
                [self.cx + ax + bx, self.cy + ay + by],
                [self.cx - ax + bx, self.cy - ay + by],
                [self.cx - ax - bx, self.cy - ay - by],
                [self.cx + ax - bx, self.cy + ay - by],
            ]
        )


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float]
    direction: tuple[float, float]

    def __post_init__(self):
        n = math.hypot(*self.direction)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"ray direction must be unit length, got norm {n}")

    @classmethod
    def from_angle(cls, origin, angle: float) -> "Ray":
        return cls(tuple(origin), (math.cos(angle), math.sin(angle)))


@dataclass(frozen=True)
class Scan:
    """Lidar ranges in meters, one per beam."""

    distances: np.ndarray
    max_range: float

    @property
    def min_distance(self) -> float:
        return float(np.min(self.distances))

    def __len__(self):
        return len(self.distances)


def obstacle_array(obstacles: Sequence[OrientedBox]) -> np.ndarray:
    """Pack boxes into the ``(M, 5)`` layout the kernels consume."""
    if len(obstacles) == 0:
        return np.zeros((0, 5))
    return np.ascontiguousarray([b.as_tuple() for b in obstacles], dtype=np.float64)


def ray_box_intersect(ray: Ray, box: OrientedBox) -> Optional[float]:
    """Distance from the ray origin to the box boundary along the ray.

    Returns None when the ray misses. An origin inside the box yields the
    exit distance; an origin on the boundary yields 0.
    """
    d = kernels.ray_box(ray.origin[0], ray.origin[1], ray.direction[0], ray.direction[1],
                        box.as_tuple())
    return None if math.isinf(d) else d


def beam_angles(heading: float, beams: int, fov: float) -> np.ndarray:
    if beams == 1:
        return np.array([heading])
    k = np.arange(beams, dtype=np.float64)
    return heading + fov * (k / (beams - 1) - 0.5)


def cast_scan(pose, obstacles, beams: int, fov: float, max_range: float) -> Scan:
    """Cast ``beams`` rays spread evenly over ``fov`` around the pose heading.

    Args:
        pose: ``(x, y, heading)``.
        obstacles: sequence of OrientedBox or a packed ``(M, 5)`` array.
        beams: number of rays, at least 1.
        fov: angular span, endpoints included.
        max_range: readings are capped here.
    """
    if beams < 1:
        raise ValueError("beams must be >= 1")
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    arr = obstacles if isinstance(obstacles, np.ndarray) else obstacle_array(obstacles)
    x, y, heading = pose
    dist = kernels.scan(float(x), float(y), float(heading), arr, int(beams), float(fov),
                        float(max_range))
    return Scan(np.asarray(dist), float(max_range))


def boxes_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """True iff the closed rectangles intersect (touching counts)."""
    return kernels.overlap(a.as_tuple(), b.as_tuple())


def box_clearance(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum Euclidean distance between two rectangles, 0 when they overlap."""
    return kernels.clearance(a.as_tuple(), b.as_tuple())


def collides(box: OrientedBox, obstacles) -> bool:
    arr = obstacles if isinstance(obstacles, np.ndarray) else obstacle_array(obstacles)
    return kernels.any_overlap(box.as_tuple(), arr)


def nearest_clearance(box: OrientedBox, obstacles) -> float:
    """Clearance to the closest obstacle; ``inf`` for an empty set."""
    arr = obstacles if isinstance(obstacles, np.ndarray) else obstacle_array(obstacles)
    return kernels.nearest_clearance(box.as_tuple(), arr)
