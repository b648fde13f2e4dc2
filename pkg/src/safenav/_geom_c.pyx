# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels; same contract as ``safenav._geom_py``."""

import numpy as np

from libc.math cimport cos, sin, sqrt, fabs, INFINITY

cdef double _PARALLEL_EPS = 1e-300


cdef inline double _ray_box(double ox, double oy, double dx, double dy,
                            double cx, double cy, double hx, double hy,
                            double c, double s) nogil:
    cdef double rx = ox - cx
    cdef double ry = oy - cy
    cdef double px = c * rx + s * ry
    cdef double py = -s * rx + c * ry
    cdef double qx = c * dx + s * dy
    cdef double qy = -s * dx + c * dy
    cdef double tmin = -INFINITY
    cdef double tmax = INFINITY
    cdef double t1, t2, tmp
    if fabs(qx) < _PARALLEL_EPS:
        if px < -hx or px > hx:
            return INFINITY
    else:
        t1 = (-hx - px) / qx
        t2 = (hx - px) / qx
        if t1 > t2:
            tmp = t1; t1 = t2; t2 = tmp
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if fabs(qy) < _PARALLEL_EPS:
        if py < -hy or py > hy:
            return INFINITY
    else:
        t1 = (-hy - py) / qy
        t2 = (hy - py) / qy
        if t1 > t2:
            tmp = t1; t1 = t2; t2 = tmp
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if tmax < tmin or tmax < 0.0:
        return INFINITY
    if tmin >= 0.0:
        return tmin
    return tmax


def ray_box(double ox, double oy, double dx, double dy, box):
    cdef double h = box[4]
    return _ray_box(ox, oy, dx, dy, box[0], box[1], box[2], box[3], cos(h), sin(h))


def scan(double x, double y, double heading, obstacles, int n_beams,
         double fov, double max_range):
    cdef double[:, ::1] obs = np.ascontiguousarray(obstacles, dtype=np.float64).reshape(-1, 5)
    out_arr = np.empty(n_beams, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t m = obs.shape[0]
    cdef Py_ssize_t i, k
    cdef double ang, dx, dy, best, d
    cdef double[::1] cs = np.empty(m, dtype=np.float64)
    cdef double[::1] sn = np.empty(m, dtype=np.float64)
    with nogil:
        for i in range(m):
            cs[i] = cos(obs[i, 4])
            sn[i] = sin(obs[i, 4])
        for k in range(n_beams):
            if n_beams == 1:
                ang = heading
            else:
                ang = heading + fov * (<double>k / (n_beams - 1) - 0.5)
            dx = cos(ang)
            dy = sin(ang)
            best = max_range
            for i in range(m):
                d = _ray_box(x, y, dx, dy, obs[i, 0], obs[i, 1], obs[i, 2], obs[i, 3],
                             cs[i], sn[i])
                if d < best:
                    best = d
            out[k] = best
    return out_arr


cdef inline bint _overlap(double ax, double ay, double ahx, double ahy, double ca, double sa,
                          double bx, double by, double bhx, double bhy, double cb, double sb) nogil:
    cdef double tx = bx - ax
    cdef double ty = by - ay
    cdef double axes[8]
    cdef int j
    cdef double ux, uy, ra, rb
    axes[0] = ca; axes[1] = sa
    axes[2] = -sa; axes[3] = ca
    axes[4] = cb; axes[5] = sb
    axes[6] = -sb; axes[7] = cb
    for j in range(4):
        ux = axes[2 * j]
        uy = axes[2 * j + 1]
        ra = ahx * fabs(ux * ca + uy * sa) + ahy * fabs(-ux * sa + uy * ca)
        rb = bhx * fabs(ux * cb + uy * sb) + bhy * fabs(-ux * sb + uy * cb)
        if fabs(ux * tx + uy * ty) > ra + rb:
            return False
    return True


cdef inline void _corners(double cx, double cy, double hx, double hy, double c, double s,
                          double* out) nogil:
    cdef double ax = c * hx
    cdef double ay = s * hx
    cdef double bx = -s * hy
    cdef double by = c * hy
    out[0] = cx + ax + bx; out[1] = cy + ay + by
    out[2] = cx - ax + bx; out[3] = cy - ay + by
    out[4] = cx - ax - bx; out[5] = cy - ay - by
    out[6] = cx + ax - bx; out[7] = cy + ay - by


cdef inline double _point_segment(double px, double py, double x0, double y0,
                                  double x1, double y1) nogil:
    cdef double ex = x1 - x0
    cdef double ey = y1 - y0
    cdef double wx = px - x0
    cdef double wy = py - y0
    cdef double den = ex * ex + ey * ey
    cdef double t = (wx * ex + wy * ey) / den
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    cdef double dx = wx - t * ex
    cdef double dy = wy - t * ey
    return sqrt(dx * dx + dy * dy)


cdef inline double _vertex_edge_min(double* pa, double* pb) nogil:
    cdef double best = INFINITY
    cdef double d
    cdef int i, j, n
    for i in range(4):
        for j in range(4):
            n = (j + 1) % 4
            d = _point_segment(pa[2 * i], pa[2 * i + 1], pb[2 * j], pb[2 * j + 1],
                               pb[2 * n], pb[2 * n + 1])
            if d < best:
                best = d
    return best


cdef inline double _clearance(double ax, double ay, double ahx, double ahy, double ca, double sa,
                              double bx, double by, double bhx, double bhy, double cb, double sb) nogil:
    cdef double pa[8]
    cdef double pb[8]
    cdef double d1, d2
    if _overlap(ax, ay, ahx, ahy, ca, sa, bx, by, bhx, bhy, cb, sb):
        return 0.0
    _corners(ax, ay, ahx, ahy, ca, sa, pa)
    _corners(bx, by, bhx, bhy, cb, sb, pb)
    d1 = _vertex_edge_min(pa, pb)
    d2 = _vertex_edge_min(pb, pa)
    return d1 if d1 < d2 else d2


def overlap(a, b):
    cdef double ha = a[4]
    cdef double hb = b[4]
    return bool(_overlap(a[0], a[1], a[2], a[3], cos(ha), sin(ha),
                         b[0], b[1], b[2], b[3], cos(hb), sin(hb)))


def clearance(a, b):
    cdef double ha = a[4]
    cdef double hb = b[4]
    return _clearance(a[0], a[1], a[2], a[3], cos(ha), sin(ha),
                      b[0], b[1], b[2], b[3], cos(hb), sin(hb))


def any_overlap(box, obstacles):
    cdef double[:, ::1] obs = np.ascontiguousarray(obstacles, dtype=np.float64).reshape(-1, 5)
    cdef double ha = box[4]
    cdef double ax = box[0], ay = box[1], ahx = box[2], ahy = box[3]
    cdef double ca = cos(ha), sa = sin(ha)
    cdef Py_ssize_t i
    cdef bint hit = False
    with nogil:
        for i in range(obs.shape[0]):
            if _overlap(ax, ay, ahx, ahy, ca, sa, obs[i, 0], obs[i, 1], obs[i, 2], obs[i, 3],
                        cos(obs[i, 4]), sin(obs[i, 4])):
                hit = True
                break
    return bool(hit)


def nearest_clearance(box, obstacles):
    cdef double[:, ::1] obs = np.ascontiguousarray(obstacles, dtype=np.float64).reshape(-1, 5)
    cdef double ha = box[4]
    cdef double ax = box[0], ay = box[1], ahx = box[2], ahy = box[3]
    cdef double ca = cos(ha), sa = sin(ha)
    cdef double best = INFINITY
    cdef double d
    cdef Py_ssize_t i
    with nogil:
        for i in range(obs.shape[0]):
            d = _clearance(ax, ay, ahx, ahy, ca, sa, obs[i, 0], obs[i, 1], obs[i, 2], obs[i, 3],
                           cos(obs[i, 4]), sin(obs[i, 4]))
            if d < best:
                best = d
    return best
