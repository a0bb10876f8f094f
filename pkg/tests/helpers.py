"""Shared test utilities."""

import math
import random

from situgen.scene import Obb3D, Object3D, Rect2D, Scene


def rotate_point(p, theta, t=(0.0, 0.0)):
    c, s = math.cos(theta), math.sin(theta)
    return (c * p[0] - s * p[1] + t[0], s * p[0] + c * p[1] + t[1])


def transform_scene(scene: Scene, theta: float, t) -> Scene:
    """Rotate every object about the vertical axis by ``theta`` radians, then translate."""
    out = []
    for o in scene.objects:
        x, y = rotate_point(o.obb.center[:2], theta, t)
        obb = Obb3D((x, y, o.obb.center[2]), o.obb.extents, o.obb.yaw + math.degrees(theta))
        out.append(Object3D(o.id, o.label, obb, o.attributes, o.affordances, o.relations))
    return Scene(scene.id, tuple(out))


def circ_diff(a, b):
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


# -- dense-sampling oracle for segment/rectangle intersection -------------------------

ORACLE_SAMPLES = 4096
BAND = 1e-6


def sampled_hits(a, b, rect, tol):
    for i in range(ORACLE_SAMPLES):
        t = i / (ORACLE_SAMPLES - 1)
        p = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        if rect.contains(p, tol):
            return True
    return False


def oracle_verdict(a, b, rect):
    """True/False when strict and loose containment agree, None inside the boundary band."""
    strict = sampled_hits(a, b, rect, -BAND)
    loose = sampled_hits(a, b, rect, BAND)
    if strict == loose:
        return strict
    return None


def random_case(rng):
    a = (rng.uniform(-5, 5), rng.uniform(-5, 5))
    b = (rng.uniform(-5, 5), rng.uniform(-5, 5))
    cx, cy = rng.uniform(-4, 4), rng.uniform(-4, 4)
    hx, hy = rng.uniform(0.05, 2), rng.uniform(0.05, 2)
    return a, b, Rect2D((cx - hx, cy - hy), (cx + hx, cy + hy))


def determinate_cases(n, seed):
    """``n`` random cases whose oracle verdict is unambiguous (a miss also needs a
    clearance larger than the sampling step, which the loose test checks)."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        a, b, rect = random_case(rng)
        verdict = oracle_verdict(a, b, rect)
        if verdict is not None:
            out.append((a, b, rect, verdict))
    return out
