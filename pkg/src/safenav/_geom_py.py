"""Pure-Python geometry kernels.

Boxes are passed as flat ``(cx, cy, half_x, half_y, heading)`` sequences and
obstacle sets as ``(M, 5)`` float64 arrays. The compiled module ``_geom_c``
exposes the same functions with the same semantics.
"""

import math

import numpy as np

_PARALLEL_EPS = 1e-300


def ray_box(ox, oy, dx, dy, box):
    """Distance along a unit ray to an oriented box, ``inf`` on a miss."""
    cx, cy, hx, hy, h = box[0], box[1], box[2], box[3], box[4]
    c = math.cos(h)
    s = math.sin(h)
    rx = ox - cx
    ry = oy - cy
    px = c * rx + s * ry
    py = -s * rx + c * ry
    qx = c * dx + s * dy
    qy = -s * dx + c * dy
    tmin = -math.inf
    tmax = math.inf
    for p, q, half in ((px, qx, hx), (py, qy, hy)):
        if abs(q) < _PARALLEL_EPS:
            if p < -half or p > half:
                return math.inf
            continue
        t1 = (-half - p) / q
        t2 = (half - p) / q
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if tmax < tmin or tmax < 0.0:
        return math.inf
    if tmin >= 0.0:
        return tmin
    return tmax


def scan(x, y, heading, obstacles, n_beams, fov, max_range):
    n_beams = int(n_beams)
    if n_beams == 1:
        angles = np.array([heading], dtype=np.float64)
    else:
        k = np.arange(n_beams, dtype=np.float64)
        angles = heading + fov * (k / (n_beams - 1) - 0.5)
    out = np.full(n_beams, float(max_range))
    obstacles = np.asarray(obstacles, dtype=np.float64).reshape(-1, 5)
    if obstacles.shape[0] == 0:
        return out
    dx = np.cos(angles)[:, None]
    dy = np.sin(angles)[:, None]
    c = np.cos(obstacles[:, 4])[None, :]
    s = np.sin(obstacles[:, 4])[None, :]
    rx = x - obstacles[:, 0][None, :]
    ry = y - obstacles[:, 1][None, :]
    px = c * rx + s * ry
    py = -s * rx + c * ry
    qx = c * dx + s * dy
    qy = -s * dx + c * dy
    tmin = np.full(qx.shape, -np.inf)
    tmax = np.full(qx.shape, np.inf)
    miss = np.zeros(qx.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p, q, half in ((px, qx, obstacles[:, 2]), (py, qy, obstacles[:, 3])):
            half = np.broadcast_to(half[None, :], q.shape)
            p = np.broadcast_to(p, q.shape)
            par = np.abs(q) < _PARALLEL_EPS
            miss |= par & ((p < -half) | (p > half))
            t1 = (-half - p) / q
            t2 = (half - p) / q
            lo = np.where(par, -np.inf, np.minimum(t1, t2))
            hi = np.where(par, np.inf, np.maximum(t1, t2))
            tmin = np.maximum(tmin, lo)
            tmax = np.minimum(tmax, hi)
    miss |= (tmax < tmin) | (tmax < 0.0)
    hit = np.where(tmin >= 0.0, tmin, tmax)
    hit = np.where(miss, np.inf, hit)
    return np.minimum(out, hit.min(axis=1))


def _axes(box):
    c = math.cos(box[4])
    s = math.sin(box[4])
    return c, s


def overlap(a, b):
    """Separating-axis test; touching rectangles count as overlapping."""
    ca, sa = _axes(a)
    cb, sb = _axes(b)
    tx = b[0] - a[0]
    ty = b[1] - a[1]
    for ux, uy in ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb)):
        ra = a[2] * abs(ux * ca + uy * sa) + a[3] * abs(-ux * sa + uy * ca)
        rb = b[2] * abs(ux * cb + uy * sb) + b[3] * abs(-ux * sb + uy * cb)
        if abs(ux * tx + uy * ty) > ra + rb:
            return False
    return True


def corners(box):
    c, s = _axes(box)
    cx, cy, hx, hy = box[0], box[1], box[2], box[3]
    ax, ay = c * hx, s * hx
    bx, by = -s * hy, c * hy
    return (
        (cx + ax + bx, cy + ay + by),
        (cx - ax + bx, cy - ay + by),
        (cx - ax - bx, cy - ay - by),
        (cx + ax - bx, cy + ay - by),
    )


def _point_segment(px, py, x0, y0, x1, y1):
    ex = x1 - x0
    ey = y1 - y0
    wx = px - x0
    wy = py - y0
    den = ex * ex + ey * ey
    t = (wx * ex + wy * ey) / den
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    dx = wx - t * ex
    dy = wy - t * ey
    return math.sqrt(dx * dx + dy * dy)


def _vertex_edge_min(pa, pb):
    best = math.inf
    for px, py in pa:
        for i in range(4):
            x0, y0 = pb[i]
            x1, y1 = pb[(i + 1) % 4]
            d = _point_segment(px, py, x0, y0, x1, y1)
            if d < best:
                best = d
    return best


def clearance(a, b):
    if overlap(a, b):
        return 0.0
    pa = corners(a)
    pb = corners(b)
    d1 = _vertex_edge_min(pa, pb)
    d2 = _vertex_edge_min(pb, pa)
    return d1 if d1 < d2 else d2


def any_overlap(box, obstacles):
    for row in np.asarray(obstacles, dtype=np.float64).reshape(-1, 5).tolist():
        if overlap(box, row):
            return True
    return False


def nearest_clearance(box, obstacles):
    best = math.inf
    for row in np.asarray(obstacles, dtype=np.float64).reshape(-1, 5).tolist():
        d = clearance(box, row)
        if d < best:
            best = d
    return best
