"""Kinematic bicycle model referenced at the rear axle."""

from __future__ import annotations

import math
from dataclasses import dataclass

from safenav.geometry import OrientedBox, wrap_angle


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    theta: float
    v: float = 0.0
    gamma: float = 0.0

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.theta, self.v, self.gamma]

    @classmethod
    def from_seq(cls, row) -> "VehicleState":
        x, y, theta, v, gamma = (float(c) for c in row)
        return cls(x, y, theta, v, gamma)


@dataclass(frozen=True)
class Control:
    a: float
    omega: float


@dataclass(frozen=True)
class VehicleSpec:
    wheelbase: float = 2.5
    body_length: float = 4.0
    body_width: float = 2.0
    rear_axle_offset: float = 1.25
    v_min: float = 0.0
    v_max: float = 2.0
    gamma_max: float = 0.6
    a_max: float = 1.0
    omega_max: float = 1.0
    substeps: int = 5

    def __post_init__(self):
        if self.wheelbase <= 0:
            raise ValueError("wheelbase must be positive")
        if self.body_length <= 0 or self.body_width <= 0:
            raise ValueError("body dimensions must be positive")
        if not 0 < self.gamma_max < math.pi / 2:
            raise ValueError("gamma_max must lie in (0, pi/2)")
        if self.v_min > self.v_max:
            raise ValueError("v_min exceeds v_max")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


def clip_control(u: Control, spec: VehicleSpec) -> Control:
    return Control(_clamp(u.a, -spec.a_max, spec.a_max),
                   _clamp(u.omega, -spec.omega_max, spec.omega_max))


def step(state: VehicleState, u: Control, dt: float, spec: VehicleSpec,
         substeps: int | None = None) -> VehicleState:
    """Advance the vehicle by ``dt`` seconds.

    Speed and steering follow their linear control laws (clamped to the
    limits) exactly inside each of the ``substeps`` slices; the pose is
    integrated with the slice-average speed and steering and the midpoint
    heading.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    k = spec.substeps if substeps is None else substeps
    h = dt / k
    x, y, th, v, g = state.x, state.y, state.theta, state.v, state.gamma
    inv_l = 1.0 / spec.wheelbase
    for _ in range(k):
        v1 = _clamp(v + u.a * h, spec.v_min, spec.v_max)
        g1 = _clamp(g + u.omega * h, -spec.gamma_max, spec.gamma_max)
        vm = 0.5 * (v + v1)
        dth = vm * inv_l * math.tan(0.5 * (g + g1)) * h
        thm = th + 0.5 * dth
        x += vm * math.cos(thm) * h
        y += vm * math.sin(thm) * h
        th += dth
        v, g = v1, g1
    return VehicleState(x, y, wrap_angle(th), v, g)


def footprint(state: VehicleState, spec: VehicleSpec) -> OrientedBox:
    """Body rectangle; the pose is the rear axle so the center sits ahead of it."""
    c, s = math.cos(state.theta), math.sin(state.theta)
    off = spec.rear_axle_offset
    return OrientedBox(state.x + off * c, state.y + off * s,
                       spec.body_length / 2.0, spec.body_width / 2.0, state.theta)
