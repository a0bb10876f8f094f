"""Annotated 3D scenes: loading, validation, normalization and 2D footprints.

Input schema (UTF-8 JSON)::

    {"id": str,
     "objects": [{"id": "<label>_<int>", "label": str,
                  "obb": {"center": [x, y, z], "extents": [ex, ey, ez], "yaw": deg},
                  "attributes": {str: str}, "affordances": [str], "relations": [str]}]}

``extents`` are half-lengths in meters. ``yaw`` is the box rotation about the
vertical axis, counterclockwise from +x, normalized to ``[0, 360)`` on load.
Spaces in a label become underscores in the id (``kitchen cabinet`` ->
``kitchen_cabinet_4``).
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable

from .errors import EmptyResult, ParseError, SchemaError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_EXCLUDED_LABELS = frozenset({"floor", "ceiling", "wall"})

_ID_RE = re.compile(r"^(?P<stem>\S+)_(?P<num>\d+)$")
_ID_REF_RE = re.compile(r"\b[A-Za-z][\w-]*_\d+\b")


def _norm_yaw(yaw: float) -> float:
    yaw = math.fmod(float(yaw), 360.0)
    if yaw < 0.0:
        yaw += 360.0
    if yaw >= 360.0:
        yaw = 0.0
    return yaw


@dataclass(frozen=True)
class Obb3D:
    center: tuple[float, float, float]
    extents: tuple[float, float, float]
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "extents", tuple(float(v) for v in self.extents))
        object.__setattr__(self, "yaw", _norm_yaw(self.yaw))
        if len(self.center) != 3 or len(self.extents) != 3:
            raise ValidationError("center and extents must be 3-vectors")
        if not all(math.isfinite(v) for v in self.center + self.extents + (self.yaw,)):
            raise ValidationError("non-finite box value")
        if not all(e > 0.0 for e in self.extents):
            raise ValidationError(f"extents must be strictly positive, got {self.extents}")


@dataclass(frozen=True)
class Rect2D:
    min: tuple[float, float]
    max: tuple[float, float]

    def __post_init__(self):
        if self.min[0] > self.max[0] or self.min[1] > self.max[1]:
            raise ValidationError(f"invalid rectangle {self.min} {self.max}")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.min[0] + self.max[0]) / 2.0, (self.min[1] + self.max[1]) / 2.0)

    def contains(self, p, tol: float = 0.0) -> bool:
        return (self.min[0] - tol <= p[0] <= self.max[0] + tol
                and self.min[1] - tol <= p[1] <= self.max[1] + tol)

    def side_midpoints(self) -> list[tuple[str, tuple[float, float]]]:
        cx, cy = self.center
        return [
            ("bottom", (cx, self.min[1])),
            ("top", (cx, self.max[1])),
            ("left", (self.min[0], cy)),
            ("right", (self.max[0], cy)),
        ]


@dataclass(frozen=True)
class Object3D:
    id: str
    label: str
    obb: Obb3D
    attributes: dict[str, str] = field(default_factory=dict)
    affordances: tuple[str, ...] = ()
    relations: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", dict(self.attributes))
        object.__setattr__(self, "affordances", tuple(self.affordances))
        object.__setattr__(self, "relations", tuple(self.relations))
        m = _ID_RE.match(self.id)
        if m is None or m.group("stem") != id_stem(self.label):
            raise ValidationError(
                f"object id {self.id!r} does not follow the '<label>_<integer>' pattern "
                f"for label {self.label!r}")

    @property
    def center2d(self) -> tuple[float, float]:
        return self.obb.center[0], self.obb.center[1]


def id_stem(label: str) -> str:
    return "_".join(label.split())


@dataclass(frozen=True)
class Scene:
    id: str
    objects: tuple[Object3D, ...]

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if not self.objects:
            raise ValidationError(f"scene {self.id!r} has no objects")
        seen = set()
        for obj in self.objects:
            if obj.id in seen:
                raise ValidationError(f"duplicate object id {obj.id!r} in scene {self.id!r}")
            seen.add(obj.id)

    @cached_property
    def by_id(self) -> dict[str, Object3D]:
        return {o.id: o for o in self.objects}

    def __getitem__(self, object_id: str) -> Object3D:
        from .errors import UnknownId

        try:
            return self.by_id[object_id]
        except KeyError:
            raise UnknownId(f"unknown object id {object_id!r} in scene {self.id!r}") from None


def relation_issues(scene: Scene) -> list[str]:
    """Relation strings that reference ids missing from the scene."""
    issues = []
    for obj in scene.objects:
        for rel in obj.relations:
            for ref in _ID_REF_RE.findall(rel):
                if ref not in scene.by_id:
                    issues.append(f"{obj.id}: relation {rel!r} references unknown id {ref!r}")
    return issues


# -- loading ---------------------------------------------------------------

def _req(doc: dict, key: str, path: str, kinds) -> Any:
    if not isinstance(doc, dict):
        raise SchemaError(path, "expected an object")
    if key not in doc:
        raise SchemaError(f"{path}.{key}" if path else key, "missing field")
    value = doc[key]
    if not isinstance(value, kinds) or isinstance(value, bool) and bool not in _as_tuple(kinds):
        raise SchemaError(f"{path}.{key}" if path else key,
                          f"expected {_kind_name(kinds)}, got {type(value).__name__}")
    return value


def _as_tuple(kinds):
    return kinds if isinstance(kinds, tuple) else (kinds,)


def _kind_name(kinds) -> str:
    return " or ".join(k.__name__ for k in _as_tuple(kinds))


def _vec3(value, path: str) -> tuple[float, float, float]:
    if (not isinstance(value, list) or len(value) != 3
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise SchemaError(path, "expected a list of 3 numbers")
    return tuple(float(v) for v in value)


def _str_list(doc: dict, key: str, path: str) -> tuple[str, ...]:
    value = doc.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{path}.{key}", "expected a list of strings")
    return tuple(value)


def _object_from_doc(doc: Any, path: str) -> Object3D:
    oid = _req(doc, "id", path, str)
    label = _req(doc, "label", path, str)
    obb = _req(doc, "obb", path, dict)
    center = _vec3(_req(obb, "center", f"{path}.obb", list), f"{path}.obb.center")
    extents = _vec3(_req(obb, "extents", f"{path}.obb", list), f"{path}.obb.extents")
    yaw = _req(obb, "yaw", f"{path}.obb", (int, float))
    attributes = doc.get("attributes", {})
    if not isinstance(attributes, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in attributes.items()):
        raise SchemaError(f"{path}.attributes", "expected a string -> string map")
    if not all(e > 0.0 for e in extents):
        raise ValidationError(f"object {oid!r}: extents must be strictly positive, got {list(extents)}")
    try:
        box = Obb3D(center, extents, yaw)
        return Object3D(oid, label, box, attributes,
                        _str_list(doc, "affordances", path), _str_list(doc, "relations", path))
    except ValidationError as exc:
        raise ValidationError(f"object {oid!r}: {exc}") from None


def scene_from_dict(doc: Any) -> Scene:
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected a JSON object")
    sid = _req(doc, "id", "", str)
    objs = _req(doc, "objects", "", list)
    objects = [_object_from_doc(o, f"objects[{i}]") for i, o in enumerate(objs)]
    if len(objects) < 2:
        raise ValidationError(f"scene {sid!r} needs at least 2 objects, got {len(objects)}")
    scene = Scene(sid, tuple(objects))
    for issue in relation_issues(scene):
        logger.warning("scene %s: %s", sid, issue)
    return scene


def load_scene(source) -> Scene:
    """Parse and validate a scene from bytes, str, a path-like or a binary stream."""
    if hasattr(source, "read"):
        source = source.read()
    elif not isinstance(source, (bytes, bytearray, str)):
        with open(source, "rb") as fh:
            source = fh.read()
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"scene is not UTF-8: {exc}") from None
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed scene JSON: {exc}") from None
    return scene_from_dict(doc)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "id": scene.id,
        "objects": [
            {
                "id": o.id,
                "label": o.label,
                "obb": {"center": list(o.obb.center), "extents": list(o.obb.extents),
                        "yaw": o.obb.yaw},
                "attributes": dict(o.attributes),
                "affordances": list(o.affordances),
                "relations": list(o.relations),
            }
            for o in scene.objects
        ],
    }


def serialize_scene(scene: Scene) -> bytes:
    """Canonical JSON; ``load_scene(serialize_scene(s)) == s``."""
    return (json.dumps(scene_to_dict(scene), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# -- 2D projections ----------------------------------------------------------

def footprint2d(obj: Object3D) -> Rect2D:
    """Axis-aligned hull of the four rotated corners of the box's xy projection."""
    cx, cy, _ = obj.obb.center
    ex, ey, _ = obj.obb.extents
    rad = math.radians(obj.obb.yaw)
    c, s = abs(math.cos(rad)), abs(math.sin(rad))
    hx = c * ex + s * ey
    hy = s * ex + c * ey
    return Rect2D((cx - hx, cy - hy), (cx + hx, cy + hy))


def obb_corners2d(obj: Object3D) -> list[tuple[float, float]]:
    """Corners of the oriented footprint, counterclockwise."""
    cx, cy, _ = obj.obb.center
    ex, ey, _ = obj.obb.extents
    rad = math.radians(obj.obb.yaw)
    c, s = math.cos(rad), math.sin(rad)
    out = []
    for lx, ly in ((-ex, -ey), (ex, -ey), (ex, ey), (-ex, ey)):
        out.append((cx + c * lx - s * ly, cy + s * lx + c * ly))
    return out


def scene_center(scene) -> tuple[float, float]:
    """Mean of the footprint centers; accepts a Scene or any sequence of objects."""
    objects = scene.objects if isinstance(scene, Scene) else tuple(scene)
    centers = [footprint2d(o).center for o in objects]
    n = len(centers)
    return (math.fsum(c[0] for c in centers) / n, math.fsum(c[1] for c in centers) / n)


def eligible_pivots(scene: Scene,
                    excluded_labels: Iterable[str] = DEFAULT_EXCLUDED_LABELS) -> frozenset[str]:
    """Objects whose box center sits strictly below the scene-average center height."""
    excluded = frozenset(excluded_labels)
    avg_z = math.fsum(o.obb.center[2] for o in scene.objects) / len(scene.objects)
    ids = frozenset(o.id for o in scene.objects
                    if o.obb.center[2] < avg_z and o.label not in excluded)
    if not ids:
        raise EmptyResult(f"no eligible pivot in scene {scene.id!r}")
    return ids
