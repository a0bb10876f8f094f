"""Scalar geometry on the bird-eye-view plane.

Angle convention: ``ccw_angle`` is the usual counterclockwise angle from +x.
A *rotation angle* is ``(facing - object) mod 360`` so that turning right
gives larger values; the faced point is always 0 (Front).

The batch kernels come from the compiled ``_kernels`` extension when it is
importable and from ``_kernels_py`` otherwise. Set ``SITUGEN_PURE_PYTHON=1``
to force the fallback.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateError, RangeError, UnknownId
from .scene import Object3D, Rect2D, Scene, footprint2d

if os.environ.get("SITUGEN_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

KERNEL_BACKEND = kernels.BACKEND

DEFAULT_NON_OBSTACLE_LABELS = frozenset({"floor", "ceiling", "wall"})


class DirectionBin(enum.Enum):
    FRONT = "Front"
    RIGHT = "Right"
    BACK = "Back"
    LEFT = "Left"

    def clockwise_next(self) -> "DirectionBin":
        order = _CLOCKWISE
        return order[(order.index(self) + 1) % 4]

    @property
    def word(self) -> str:
        """Direction word used in the situation template."""
        return _TEMPLATE_WORDS[self]


_CLOCKWISE = (DirectionBin.FRONT, DirectionBin.RIGHT, DirectionBin.BACK, DirectionBin.LEFT)
_TEMPLATE_WORDS = {
    DirectionBin.FRONT: "front",
    DirectionBin.RIGHT: "right",
    DirectionBin.BACK: "backward",
    DirectionBin.LEFT: "left",
}


@dataclass(frozen=True)
class SpatialFeature:
    d: float
    sin_h: float
    cos_h: float
    sin_v: float
    cos_v: float

    def as_list(self) -> list[float]:
        return [self.d, self.sin_h, self.cos_h, self.sin_v, self.cos_v]


@dataclass(frozen=True)
class Quaternion:
    qx: float
    qy: float
    qz: float
    w: float

    def __post_init__(self):
        n = math.sqrt(self.qx ** 2 + self.qy ** 2 + self.qz ** 2 + self.w ** 2)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"quaternion is not unit norm ({n})")

    def as_list(self) -> list[float]:
        return [self.qx, self.qy, self.qz, self.w]


def ccw_angle(origin: Sequence[float], to: Sequence[float]) -> float:
    """Counterclockwise angle of ``to - origin`` from +x, in ``[0, 360)``."""
    dx = float(to[0]) - float(origin[0])
    dy = float(to[1]) - float(origin[1])
    if dx == 0.0 and dy == 0.0:
        raise DegenerateError(f"angle undefined between coincident points {tuple(origin)[:2]}")
    return kernels.ccw_deg(dx, dy)


def rotation_angle(stand, facing_point, object_center) -> float:
    """Degrees the agent turns right from its facing ray to face the object."""
    r = ccw_angle(stand, facing_point) - ccw_angle(stand, object_center)
    if r < 0.0:
        r += 360.0
    if r >= 360.0:
        r -= 360.0
    return r


def rotation_angles(stand, facing_point, points) -> np.ndarray:
    """Batch ``rotation_angle``; NaN where a point coincides with the stand."""
    if float(facing_point[0]) == float(stand[0]) and float(facing_point[1]) == float(stand[1]):
        raise DegenerateError("facing point coincides with the standing point")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return kernels.rotation_angles(float(stand[0]), float(stand[1]),
                                   float(facing_point[0]), float(facing_point[1]), pts)


def classify_direction(angle: float) -> DirectionBin:
    """Half-open 90 degree sectors; a boundary belongs to the clockwise-next bin."""
    if not 0.0 <= angle < 360.0:
        raise RangeError(f"rotation angle {angle} outside [0, 360)")
    if angle < 45.0 or angle >= 315.0:
        return DirectionBin.FRONT
    if angle < 135.0:
        return DirectionBin.RIGHT
    if angle < 225.0:
        return DirectionBin.BACK
    return DirectionBin.LEFT


def euclid_dist(p: Sequence[float], q: Sequence[float]) -> float:
    return math.sqrt(math.fsum((float(a) - float(b)) ** 2 for a, b in zip(p, q, strict=True)))


def segment_intersects_rect(a, b, rect: Rect2D) -> bool:
    return bool(kernels.segment_rect(float(a[0]), float(a[1]), float(b[0]), float(b[1]),
                                     rect.min[0], rect.min[1], rect.max[0], rect.max[1]))


def obb_table(objects: Iterable[Object3D]) -> np.ndarray:
    """(N, 5) [cx, cy, half_x, half_y, yaw_rad] rows for ``segment_hits_obb``."""
    rows = [(o.obb.center[0], o.obb.center[1], o.obb.extents[0], o.obb.extents[1],
             math.radians(o.obb.yaw)) for o in objects]
    return np.asarray(rows, dtype=np.float64).reshape(-1, 5)


def aabb_table(objects: Iterable[Object3D]) -> np.ndarray:
    rows = []
    for o in objects:
        r = footprint2d(o)
        rows.append((r.min[0], r.min[1], r.max[0], r.max[1]))
    return np.asarray(rows, dtype=np.float64).reshape(-1, 4)


class PassbyIndex:
    """Obstacle table for repeated passby queries against one scene."""

    def __init__(self, scene: Scene, non_obstacle_labels=DEFAULT_NON_OBSTACLE_LABELS,
                 oriented: bool = True):
        self.scene = scene
        self.oriented = oriented
        self.obstacles = [o for o in scene.objects if o.label not in non_obstacle_labels]
        self._ids = [o.id for o in self.obstacles]
        self._centers = [o.center2d for o in self.obstacles]
        if oriented:
            self._table = obb_table(self.obstacles)
        else:
            self._table = aabb_table(self.obstacles)

    def query(self, stand, target_id: str, excluded: Iterable[str] = ()) -> list[str]:
        target = self.scene[target_id]
        tx, ty = footprint2d(target).center
        sx, sy = float(stand[0]), float(stand[1])
        if self.oriented:
            hits = kernels.segment_hits_obb(sx, sy, tx, ty, self._table)
        else:
            hits = kernels.segment_hits_aabb(sx, sy, tx, ty, self._table)
        skip = set(excluded)
        skip.add(target_id)
        found = []
        for i in np.flatnonzero(hits):
            oid = self._ids[i]
            if oid in skip:
                continue
            cx, cy = self._centers[i]
            found.append((math.hypot(cx - sx, cy - sy), oid))
        found.sort()
        return [oid for _, oid in found]


def passby_objects(scene: Scene, stand, target_id: str, excluded: Iterable[str] = (),
                   non_obstacle_labels=DEFAULT_NON_OBSTACLE_LABELS,
                   oriented: bool = True) -> list[str]:
    """Objects crossed by the straight path from ``stand`` to the target's footprint center.

    Obstacles are tested with their oriented footprint by default; pass
    ``oriented=False`` to use the axis-aligned hull instead. Results are
    ordered nearest-first by footprint-center distance from the stand.
    """
    if target_id not in scene.by_id:
        raise UnknownId(f"unknown object id {target_id!r} in scene {scene.id!r}")
    return PassbyIndex(scene, non_obstacle_labels, oriented).query(stand, target_id, excluded)


def pairwise_features(centers) -> np.ndarray:
    """K x K x 5 tensor of ``[d, sin(theta_h), cos(theta_h), sin(theta_v), cos(theta_v)]``.

    Coincident pairs (and the diagonal) get ``[0, 0, 1, 0, 1]``. A pair with
    zero horizontal offset but a height difference has theta_h = 0 and
    theta_v = +/-90 degrees.
    """
    arr = np.asarray(centers, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
        raise ValueError(f"expected (K, 3) centers with K >= 1, got shape {arr.shape}")
    return kernels.pairwise_features(arr)


def feature_at(features: np.ndarray, i: int, j: int) -> SpatialFeature:
    return SpatialFeature(*(float(v) for v in features[i, j]))


def yaw_to_quaternion(yaw: float) -> Quaternion:
    """Rotation about +z; yaw is counterclockwise from world +y to the facing direction."""
    if not math.isfinite(yaw):
        raise ValueError("yaw must be finite")
    half = math.radians(yaw) / 2.0
    return Quaternion(0.0, 0.0, math.sin(half), math.cos(half))


def facing_yaw(stand, target) -> float:
    """Yaw in (-180, 180] of the direction from ``stand`` to ``target``."""
    dx = float(target[0]) - float(stand[0])
    dy = float(target[1]) - float(stand[1])
    if dx == 0.0 and dy == 0.0:
        raise DegenerateError("facing direction undefined for coincident points")
    yaw = math.degrees(math.atan2(-dx, dy))
    return 180.0 if yaw == -180.0 else yaw  # atan2(-0.0, -y) gives -180
