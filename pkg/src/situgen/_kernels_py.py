"""Pure-Python geometry kernels.

Reference twin of ``_kernels.pyx``. Both modules perform the same floating
point operations in the same order so their outputs are bit-identical.
"""

import math

import numpy as np

BACKEND = "python"

_RAD2DEG = 180.0 / math.pi


def ccw_deg(dx, dy):
    deg = math.atan2(dy, dx) * _RAD2DEG
    if deg < 0.0:
        deg += 360.0
    if deg >= 360.0:
        deg -= 360.0
    return deg


def segment_rect(ax, ay, bx, by, minx, miny, maxx, maxy):
    """Liang-Barsky clip of the closed segment ab against a closed rectangle."""
    t0 = 0.0
    t1 = 1.0
    d = bx - ax
    if d == 0.0:
        if ax < minx or ax > maxx:
            return False
    else:
        lo = (minx - ax) / d
        hi = (maxx - ax) / d
        if lo > hi:
            lo, hi = hi, lo
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
            lo, hi = hi, lo
        if lo > t0:
            t0 = lo
        if hi < t1:
            t1 = hi
        if t0 > t1:
            return False
    return True


def segment_hits_aabb(ax, ay, bx, by, rects):
    """rects: (N, 4) [minx, miny, maxx, maxy] -> uint8 mask."""
    rects = np.ascontiguousarray(rects, dtype=np.float64)
    out = np.zeros(rects.shape[0], dtype=np.uint8)
    for i, (x0, y0, x1, y1) in enumerate(rects.tolist()):
        out[i] = segment_rect(ax, ay, bx, by, x0, y0, x1, y1)
    return out


def segment_hits_obb(ax, ay, bx, by, boxes):
    """boxes: (N, 5) [cx, cy, hx, hy, yaw_rad] -> uint8 mask.

    The segment is moved into each box frame and clipped against the local
    axis-aligned rectangle.
    """
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    out = np.zeros(boxes.shape[0], dtype=np.uint8)
    for i, (cx, cy, hx, hy, yaw) in enumerate(boxes.tolist()):
        c = math.cos(yaw)
        s = math.sin(yaw)
        dx = ax - cx
        dy = ay - cy
        lax = c * dx + s * dy
        lay = c * dy - s * dx
        dx = bx - cx
        dy = by - cy
        lbx = c * dx + s * dy
        lby = c * dy - s * dx
        out[i] = segment_rect(lax, lay, lbx, lby, -hx, -hy, hx, hy)
    return out


def rotation_angles(sx, sy, fx, fy, points):
    """Rightward-positive turn angles from the facing ray to each point.

    Points coincident with the stand yield NaN.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    out = np.empty(points.shape[0], dtype=np.float64)
    facing = ccw_deg(fx - sx, fy - sy)
    for i, (px, py) in enumerate(points.tolist()):
        dx = px - sx
        dy = py - sy
        if dx == 0.0 and dy == 0.0:
            out[i] = math.nan
            continue
        r = facing - ccw_deg(dx, dy)
        if r < 0.0:
            r += 360.0
        if r >= 360.0:
            r -= 360.0
        out[i] = r
    return out


def pairwise_features(centers):
    """(K, 3) centers -> (K, K, 5) [d, sin_h, cos_h, sin_v, cos_v]."""
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    k = centers.shape[0]
    pts = centers.tolist()
    out = np.zeros((k, k, 5), dtype=np.float64)
    for i in range(k):
        xi, yi, zi = pts[i]
        for j in range(k):
            xj, yj, zj = pts[j]
            dx = xj - xi
            dy = yj - yi
            dz = zj - zi
            hd = math.sqrt(dx * dx + dy * dy)
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if hd == 0.0:
                th = 0.0
            else:
                th = math.atan2(dy, dx)
            if d == 0.0:
                tv = 0.0
            else:
                tv = math.atan2(dz, hd)
            out[i, j, 0] = d
            out[i, j, 1] = math.sin(th)
            out[i, j, 2] = math.cos(th)
            out[i, j, 3] = math.sin(tv)
            out[i, j, 4] = math.cos(tv)
    return out
