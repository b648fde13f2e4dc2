import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safenav import geometry
from safenav.geometry import OrientedBox, Ray, box_clearance, boxes_overlap, cast_scan, ray_box_intersect
from tests import oracles

UNIT = (0.0, 0.0, 0.5, 0.5, 0.0)


def random_box(rng, spread=3.0):
    return (rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(0.1, 1.5),
            rng.uniform(0.1, 1.5), rng.uniform(-math.pi, math.pi))


# -- ray casting -----------------------------------------------------------

def test_ray_axis_aligned_hit(backend):
    assert backend.ray_box(-2.0, 0.0, 1.0, 0.0, UNIT) == pytest.approx(1.5, abs=1e-12)


def test_ray_passes_above(backend):
    assert math.isinf(backend.ray_box(-2.0, 2.0, 1.0, 0.0, UNIT))


def test_ray_rotated_box(backend):
    box = (0.0, 0.0, 1.0, 1.0, math.pi / 4)
    # the diamond's left corner sits at x = -sqrt(2)
    assert backend.ray_box(-3.0, 0.0, 1.0, 0.0, box) == pytest.approx(3 - math.sqrt(2), abs=1e-12)


def test_ray_from_inside_returns_exit(backend):
    assert backend.ray_box(0.2, 0.0, 1.0, 0.0, UNIT) == pytest.approx(0.3, abs=1e-12)


def test_ray_on_boundary_is_zero(backend):
    assert backend.ray_box(0.5, 0.0, 1.0, 0.0, UNIT) == 0.0
    assert backend.ray_box(-0.5, 0.0, 1.0, 0.0, UNIT) == 0.0


def test_ray_pointing_away_misses(backend):
    assert math.isinf(backend.ray_box(-2.0, 0.0, -1.0, 0.0, UNIT))


def test_public_ray_intersect_wraps_miss_as_none():
    box = OrientedBox(0, 0, 0.5, 0.5, 0)
    assert ray_box_intersect(Ray((-2, 0), (1, 0)), box) == pytest.approx(1.5)
    assert ray_box_intersect(Ray((-2, 2), (1, 0)), box) is None


def test_ray_rejects_non_unit_direction():
    with pytest.raises(ValueError):
        Ray((0, 0), (1, 1))


def test_box_rejects_bad_extents():
    with pytest.raises(ValueError):
        OrientedBox(0, 0, 0.0, 1.0)


def test_hit_point_lies_on_boundary(backend, rng):
    for _ in range(500):
        box = random_box(rng)
        ang = rng.uniform(-math.pi, math.pi)
        ox, oy = rng.uniform(-6, 6, size=2)
        dx, dy = math.cos(ang), math.sin(ang)
        d = backend.ray_box(ox, oy, dx, dy, box)
        if math.isinf(d):
            continue
        assert d >= 0
        p = np.array([[ox + d * dx, oy + d * dy]])
        assert oracles.inside(box, p, margin=1e-9).all()
        assert not oracles.inside(box, p, margin=-1e-9).all()


@settings(max_examples=200, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-5, 5), st.floats(-5, 5),
       st.floats(-math.pi, math.pi), st.floats(-4, 4), st.floats(-4, 4))
def test_ray_rigid_motion_invariance(rot, tx, ty, ang, ox, oy):
    box = (0.7, -0.3, 1.1, 0.4, 0.3)
    d0 = geometry.kernels.ray_box(ox, oy, math.cos(ang), math.sin(ang), box)
    c, s = math.cos(rot), math.sin(rot)

    def move(x, y):
        return c * x - s * y + tx, s * x + c * y + ty

    mx, my = move(ox, oy)
    bx, by = move(box[0], box[1])
    d1 = geometry.kernels.ray_box(mx, my, math.cos(ang + rot), math.sin(ang + rot),
                                  (bx, by, box[2], box[3], box[4] + rot))
    if math.isinf(d0) or math.isinf(d1):
        # grazing rays may flip between hit and miss under rounding
        return
    assert d1 == pytest.approx(d0, abs=1e-9)


# -- scans -----------------------------------------------------------------

def test_scan_empty_world(backend):
    out = backend.scan(1.0, 2.0, 0.3, np.zeros((0, 5)), 8, 2 * math.pi, 20.0)
    assert np.all(out == 20.0)


def test_scan_single_beam():
    box = OrientedBox(2.5, 0.0, 0.5, 0.5, 0.0)
    scan = cast_scan((0.0, 0.0, 0.0), [box], 1, 0.0, 20.0)
    assert scan.distances.tolist() == [pytest.approx(2.0)]


def test_scan_three_beams_north():
    # wide wall north of the sensor, near face at y = 3
    box = OrientedBox(0.0, 4.0, 10.0, 1.0, 0.0)
    scan = cast_scan((0.0, 0.0, math.pi / 2), [box], 3, math.pi, 20.0)
    assert scan.distances[1] == pytest.approx(3.0)
    # side beams point along +-x and run parallel to the wall
    assert scan.distances[0] == 20.0 and scan.distances[2] == 20.0
    scan = cast_scan((0.0, 0.0, math.pi / 2), [box], 3, math.pi / 2, 20.0)
    assert scan.distances[0] == pytest.approx(3.0 * math.sqrt(2))
    assert scan.distances[2] == pytest.approx(3.0 * math.sqrt(2))


def test_scan_matches_per_beam_oracle(backend, rng):
    obs = np.array([random_box(rng, 8.0) for _ in range(6)])
    for _ in range(20):
        x, y, h = rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-math.pi, math.pi)
        out = backend.scan(x, y, h, obs, 13, 1.5 * math.pi, 15.0)
        for k in range(13):
            a = h + 1.5 * math.pi * (k / 12 - 0.5)
            best = min([backend.ray_box(x, y, math.cos(a), math.sin(a), b) for b in obs]
                       + [15.0])
            assert out[k] == pytest.approx(best, abs=1e-12)


def test_backends_agree_on_scans(rng):
    backs = geometry.kernels.backends()
    if len(backs) < 2:
        pytest.skip("compiled backend not built")
    obs = np.array([random_box(rng, 8.0) for _ in range(10)])
    for _ in range(50):
        pose = rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-math.pi, math.pi)
        a = backs["python"].scan(*pose, obs, 36, 2 * math.pi, 20.0)
        b = backs["compiled"].scan(*pose, obs, 36, 2 * math.pi, 20.0)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_scan_adding_obstacle_never_increases(backend, rng):
    for _ in range(50):
        obs = np.array([random_box(rng, 8.0) for _ in range(4)])
        extra = np.array([random_box(rng, 8.0)])
        pose = (rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-math.pi, math.pi))
        before = backend.scan(*pose, obs, 24, 2 * math.pi, 20.0)
        after = backend.scan(*pose, np.vstack([obs, extra]), 24, 2 * math.pi, 20.0)
        assert np.all(after <= before)


def test_scan_validates_arguments():
    with pytest.raises(ValueError):
        cast_scan((0, 0, 0), [], 0, 1.0, 5.0)
    with pytest.raises(ValueError):
        cast_scan((0, 0, 0), [], 4, 1.0, 0.0)


# -- overlap and clearance --------------------------------------------------

def test_identical_boxes_overlap(backend):
    assert backend.overlap(UNIT, UNIT)


def test_far_squares_disjoint(backend):
    b = (3.0, 0.0, 0.5, 0.5, 0.0)
    assert not backend.overlap(UNIT, b)
    assert backend.clearance(UNIT, b) == pytest.approx(2.0, abs=1e-12)


def test_rotated_corner_reaches(backend):
    b = (1.05, 0.0, 0.5, 0.5, math.pi / 4)
    assert backend.overlap(UNIT, b)
    assert oracles.sampled_overlap(UNIT, b)


def test_touching_counts_as_overlap(backend):
    b = (1.0, 0.0, 0.5, 0.5, 0.0)
    assert backend.overlap(UNIT, b)
    assert backend.clearance(UNIT, b) == 0.0


def test_corner_to_corner_clearance(backend):
    b = (2.0, 2.0, 0.5, 0.5, math.pi / 4)
    # nearest points: corner (0.5, 0.5) of the square and the diamond's
    # lower-left face, whose distance from its center is 0.5
    expected = math.hypot(1.5, 1.5) - 0.5
    assert backend.clearance(UNIT, b) == pytest.approx(expected, abs=1e-12)
    assert oracles.sampled_clearance(UNIT, b) == pytest.approx(expected, abs=1e-3)


def test_clearance_symmetric_and_consistent(backend, rng):
    for _ in range(300):
        a, b = random_box(rng), random_box(rng)
        ab, ba = backend.clearance(a, b), backend.clearance(b, a)
        assert ab == ba
        assert backend.overlap(a, b) == backend.overlap(b, a)
        assert backend.overlap(a, b) == (ab == 0.0)


def test_nearest_clearance_and_any_overlap(backend, rng):
    obs = np.array([random_box(rng, 6.0) for _ in range(5)])
    for _ in range(50):
        box = random_box(rng, 6.0)
        dists = [backend.clearance(box, o) for o in obs]
        assert backend.nearest_clearance(box, obs) == min(dists)
        assert backend.any_overlap(box, obs) == any(d == 0.0 for d in dists)
    assert math.isinf(backend.nearest_clearance(UNIT, np.zeros((0, 5))))
    assert not backend.any_overlap(UNIT, np.zeros((0, 5)))


def test_public_wrappers():
    a = OrientedBox(0, 0, 0.5, 0.5)
    b = OrientedBox(3, 0, 0.5, 0.5)
    assert not boxes_overlap(a, b)
    assert box_clearance(a, b) == pytest.approx(2.0)
    assert geometry.nearest_clearance(a, [b]) == pytest.approx(2.0)
    assert not geometry.collides(a, [b])


def test_wrap_angle_range():
    for t in np.linspace(-20, 20, 1001):
        w = geometry.wrap_angle(float(t))
        assert -math.pi <= w < math.pi
        assert math.isclose(math.cos(w), math.cos(t), abs_tol=1e-9)
    assert geometry.wrap_angle(math.pi) == -math.pi
