# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels. Mirrors ``_kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cos, sin, sqrt, NAN, M_PI

cnp.import_array()

BACKEND = "cython"

cdef double _RAD2DEG = 180.0 / M_PI


cdef inline double _ccw_deg(double dx, double dy) nogil:
    cdef double deg = atan2(dy, dx) * _RAD2DEG
    if deg < 0.0:
        deg += 360.0
    if deg >= 360.0:
        deg -= 360.0
    return deg


cdef inline bint _segment_rect(double ax, double ay, double bx, double by,
                               double minx, double miny, double maxx, double maxy) nogil:
    cdef double t0 = 0.0, t1 = 1.0, d, lo, hi, tmp
    d = bx - ax
    if d == 0.0:
        if ax < minx or ax > maxx:
            return False
    else:
        lo = (minx - ax) / d
        hi = (maxx - ax) / d
        if lo > hi:
            tmp = lo
            lo = hi
            hi = tmp
        if lo > t0:
            t0 = lo
        if hi < t1:
            t1 = hi
        if t0 > t1:
            return False
    d = by - ay
    if d == 0.0:
        if ay < miny or ay > maxy:
            return False
    else:
        lo = (miny - ay) / d
        hi = (maxy - ay) / d
        if lo > hi:
            tmp = lo
            lo = hi
            hi = tmp
        if lo > t0:
            t0 = lo
        if hi < t1:
            t1 = hi
        if t0 > t1:
            return False
    return True


def ccw_deg(double dx, double dy):
    return _ccw_deg(dx, dy)


def segment_rect(double ax, double ay, double bx, double by,
                 double minx, double miny, double maxx, double maxy):
    return bool(_segment_rect(ax, ay, bx, by, minx, miny, maxx, maxy))


def segment_hits_aabb(double ax, double ay, double bx, double by, rects):
    cdef const double[:, ::1] r = np.ascontiguousarray(rects, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0], i
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _segment_rect(ax, ay, bx, by, r[i, 0], r[i, 1], r[i, 2], r[i, 3])
    return out


def segment_hits_obb(double ax, double ay, double bx, double by, boxes):
    cdef const double[:, ::1] b = np.ascontiguousarray(boxes, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0], i
    cdef double c, s, dx, dy, lax, lay, lbx, lby, hx, hy
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    with nogil:
        for i in range(n):
            c = cos(b[i, 4])
            s = sin(b[i, 4])
            hx = b[i, 2]
            hy = b[i, 3]
            dx = ax - b[i, 0]
            dy = ay - b[i, 1]
            lax = c * dx + s * dy
            lay = c * dy - s * dx
            dx = bx - b[i, 0]
            dy = by - b[i, 1]
            lbx = c * dx + s * dy
            lby = c * dy - s * dx
            o[i] = _segment_rect(lax, lay, lbx, lby, -hx, -hy, hx, hy)
    return out


def rotation_angles(double sx, double sy, double fx, double fy, points):
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i
    cdef double facing, dx, dy, r
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        facing = _ccw_deg(fx - sx, fy - sy)
        for i in range(n):
            dx = p[i, 0] - sx
            dy = p[i, 1] - sy
            if dx == 0.0 and dy == 0.0:
                o[i] = NAN
                continue
            r = facing - _ccw_deg(dx, dy)
            if r < 0.0:
                r += 360.0
            if r >= 360.0:
                r -= 360.0
            o[i] = r
    return out


def pairwise_features(centers):
    cdef const double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t k = c.shape[0], i, j
    cdef double dx, dy, dz, hd, d, th, tv
    out = np.zeros((k, k, 5), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    with nogil:
        for i in range(k):
            for j in range(k):
                dx = c[j, 0] - c[i, 0]
                dy = c[j, 1] - c[i, 1]
                dz = c[j, 2] - c[i, 2]
                hd = sqrt(dx * dx + dy * dy)
                d = sqrt(dx * dx + dy * dy + dz * dz)
                if hd == 0.0:
                    th = 0.0
                else:
                    th = atan2(dy, dx)
                if d == 0.0:
                    tv = 0.0
                else:
                    tv = atan2(dz, hd)
                o[i, j, 0] = d
                o[i, j, 1] = sin(th)
                o[i, j, 2] = cos(th)
                o[i, j, 3] = sin(tv)
                o[i, j, 4] = cos(tv)
    return out
