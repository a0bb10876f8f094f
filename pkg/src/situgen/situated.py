"""Situations, situated scene graphs and per-object situated descriptions."""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry, EmptyResult, NoEligiblePivot, UnknownId
from .geometry import (
    DirectionBin,
    PassbyIndex,
    Quaternion,
    classify_direction,
    DEFAULT_NON_OBSTACLE_LABELS,
    facing_yaw,
    rotation_angle,
    rotation_angles,
    yaw_to_quaternion,
)
from .scene import DEFAULT_EXCLUDED_LABELS, Object3D, Scene, eligible_pivots, footprint2d, scene_center

SITUATION_TEMPLATE = "You are standing beside {pivot}, and there is {referent} on the {direction}."
_TEMPLATE_RE = re.compile(
    r"^You are standing beside (?P<pivot>.+), and there is (?P<referent>.+) "
    r"on the (?P<direction>front|right|backward|left)\.$")
_WORD_TO_BIN = {b.word: b for b in DirectionBin}

# Order of the direction keys and of the per-object fields in graph JSON.
GRAPH_DIRECTION_KEYS = (
    (DirectionBin.LEFT, "Left"),
    (DirectionBin.RIGHT, "Right"),
    (DirectionBin.FRONT, "Front"),
    (DirectionBin.BACK, "Backwards"),
)
GRAPH_RECORD_FIELDS = ("distance", "passby", "affordances", "attributes", "angle", "relations")

ATTRIBUTE_ORDER = ("size", "shape", "state", "color")
MAX_DESCRIBED_PER_DIRECTION = 5


@dataclass(frozen=True)
class SituationConfig:
    excluded_labels: frozenset = DEFAULT_EXCLUDED_LABELS
    stand_offset: float = 0.0
    max_attempts: int = 8


@dataclass(frozen=True)
class GraphConfig:
    full_3d_distance: bool = False
    non_obstacle_labels: frozenset = DEFAULT_NON_OBSTACLE_LABELS
    oriented_passby: bool = True


@dataclass(frozen=True)
class Situation:
    pivot_id: str
    referent_id: str
    stand: tuple[float, float, float]
    yaw: float
    orientation: Quaternion
    referent_direction: DirectionBin
    description: str

    @property
    def digest(self) -> str:
        payload = json.dumps(
            [self.pivot_id, self.referent_id, [repr(v) for v in self.stand],
             self.orientation.as_list(), self.description],
            separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "stand": list(self.stand),
            "quaternion": self.orientation.as_list(),
            "pivot_id": self.pivot_id,
            "referent_id": self.referent_id,
            "yaw": self.yaw,
            "referent_direction": self.referent_direction.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Situation":
        q = Quaternion(*doc["quaternion"])
        if "yaw" in doc:
            yaw = float(doc["yaw"])
        else:
            yaw = math.degrees(2.0 * math.atan2(q.qz, q.w))
        if "referent_direction" in doc:
            direction = DirectionBin(doc["referent_direction"])
        else:
            direction = direction_from_description(doc["description"])
        return cls(doc["pivot_id"], doc["referent_id"], tuple(float(v) for v in doc["stand"]),
                   yaw, q, direction, doc["description"])


def direction_from_description(text: str) -> DirectionBin:
    m = _TEMPLATE_RE.match(text)
    if m is None:
        raise ValueError(f"not a situation description: {text!r}")
    return _WORD_TO_BIN[m.group("direction")]


def render_situation_text(pivot: Object3D, referent: Object3D, direction: DirectionBin) -> str:
    return SITUATION_TEMPLATE.format(pivot=pivot.label, referent=referent.label,
                                     direction=direction.word)


def situation_rng(master_seed: int, scene_id: str, index, *salt) -> random.Random:
    """Independent random stream for one situation; parallel order never matters."""
    key = "\x1f".join([str(master_seed), scene_id, str(index), *map(str, salt)])
    seed = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")
    return random.Random(seed)


def candidate_stands(scene: Scene, pivot: Object3D, offset: float = 0.0):
    """The two side midpoints of the pivot footprint nearest the scene center."""
    rect = footprint2d(pivot)
    cx, cy = scene_center(scene)
    sides = rect.side_midpoints()
    ranked = sorted(sides, key=lambda s: math.hypot(s[1][0] - cx, s[1][1] - cy))[:2]
    out = []
    for side, (x, y) in ranked:
        if offset:
            dx, dy = {"bottom": (0, -1), "top": (0, 1), "left": (-1, 0), "right": (1, 0)}[side]
            x, y = x + dx * offset, y + dy * offset
        out.append((x, y))
    return out


def situation_at(scene: Scene, pivot_id: str, stand, referent_id: str) -> Situation:
    """Build a situation for an explicit standing point (facing the pivot center)."""
    pivot = scene[pivot_id]
    referent = scene[referent_id]
    if pivot_id == referent_id:
        raise DegenerateGeometry("pivot and referent must differ")
    pc = footprint2d(pivot).center
    sx, sy = float(stand[0]), float(stand[1])
    if (sx, sy) == pc:
        raise DegenerateGeometry(f"standing point coincides with the center of {pivot_id}")
    rc = footprint2d(referent).center
    if (sx, sy) == rc:
        raise DegenerateGeometry(f"standing point coincides with the center of {referent_id}")
    yaw = facing_yaw((sx, sy), pc)
    direction = classify_direction(rotation_angle((sx, sy), pc, rc))
    return Situation(pivot_id, referent_id, (sx, sy, 0.0), yaw, yaw_to_quaternion(yaw),
                     direction, render_situation_text(pivot, referent, direction))


def sample_situation(scene: Scene, rng: random.Random,
                     config: SituationConfig = SituationConfig()) -> Situation:
    if len(scene.objects) < 2:
        raise NoEligiblePivot(f"scene {scene.id!r} has fewer than 2 objects")
    try:
        pivots = sorted(eligible_pivots(scene, config.excluded_labels))
    except EmptyResult as exc:
        raise NoEligiblePivot(str(exc)) from None
    order = [o.id for o in scene.objects]
    for _ in range(config.max_attempts):
        pivot_id = rng.choice(pivots)
        stand = rng.choice(candidate_stands(scene, scene[pivot_id], config.stand_offset))
        referent_id = rng.choice([oid for oid in order if oid != pivot_id])
        try:
            return situation_at(scene, pivot_id, stand, referent_id)
        except DegenerateGeometry:
            continue
    raise DegenerateGeometry(
        f"no non-degenerate situation in scene {scene.id!r} after {config.max_attempts} attempts")


# -- situated scene graph -------------------------------------------------------

@dataclass(frozen=True)
class SituatedObjectRecord:
    object_id: str
    label: str
    distance: float
    angle: float
    direction: DirectionBin
    passby: tuple[str, ...]
    attributes: dict = field(default_factory=dict)
    affordances: tuple[str, ...] = ()
    relations: tuple[str, ...] = ()
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SituatedSceneGraph:
    scene_id: str
    situation: Situation
    buckets: dict  # DirectionBin -> tuple[SituatedObjectRecord, ...], distance ascending
    pivot_label: str = ""
    pivot_center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    pivot_attributes: dict = field(default_factory=dict)

    def records(self):
        for b in DirectionBin:
            yield from self.buckets[b]

    def record(self, object_id: str) -> SituatedObjectRecord:
        for r in self.records():
            if r.object_id == object_id:
                return r
        raise UnknownId(f"{object_id!r} is not in the situated graph")

    def labels(self) -> set[str]:
        return {r.label for r in self.records()}


def build_situated_graph(scene: Scene, situation: Situation,
                         config: GraphConfig = GraphConfig()) -> SituatedSceneGraph:
    pivot = scene[situation.pivot_id]
    scene[situation.referent_id]
    stand = situation.stand[:2]
    pc = footprint2d(pivot).center
    others = [o for o in scene.objects if o.id != pivot.id]
    centers = np.array([footprint2d(o).center for o in others], dtype=np.float64).reshape(-1, 2)
    angles = rotation_angles(stand, pc, centers)
    index = PassbyIndex(scene, config.non_obstacle_labels, config.oriented_passby)
    buckets = {b: [] for b in DirectionBin}
    for obj, (cx, cy), angle in zip(others, centers.tolist(), angles.tolist()):
        if math.isnan(angle):
            # object centered exactly on the standing point; treat as straight ahead
            angle = 0.0
        if config.full_3d_distance:
            dz = obj.obb.center[2] - situation.stand[2]
            distance = math.sqrt((cx - stand[0]) ** 2 + (cy - stand[1]) ** 2 + dz * dz)
        else:
            distance = math.sqrt((cx - stand[0]) ** 2 + (cy - stand[1]) ** 2)
        direction = classify_direction(angle)
        rec = SituatedObjectRecord(
            obj.id, obj.label, distance, angle, direction,
            tuple(index.query(stand, obj.id, excluded=(pivot.id,))),
            dict(obj.attributes), obj.affordances, obj.relations, obj.obb.center)
        buckets[direction].append(rec)
    frozen = {b: tuple(sorted(v, key=lambda r: (r.distance, r.object_id))) for b, v in buckets.items()}
    return SituatedSceneGraph(scene.id, situation, frozen, pivot.label, pivot.obb.center,
                              dict(pivot.attributes))


def graph_to_dict(graph: SituatedSceneGraph) -> dict:
    out = {}
    for b, key in GRAPH_DIRECTION_KEYS:
        inner = {}
        for r in graph.buckets[b]:
            values = {
                "distance": round(r.distance, 2),
                "passby": list(r.passby),
                "affordances": list(r.affordances),
                "attributes": dict(sorted(r.attributes.items())),
                "angle": round(r.angle, 2),
                "relations": list(r.relations),
            }
            inner[r.object_id] = {k: values[k] for k in GRAPH_RECORD_FIELDS}
        out[key] = inner
    return out


def graph_to_json(graph: SituatedSceneGraph) -> bytes:
    """Deterministic JSON: direction keys Left, Right, Front, Backwards; fixed field order."""
    return json.dumps(graph_to_dict(graph), ensure_ascii=False).encode("utf-8")


# -- situated textual descriptions ------------------------------------------------

@dataclass(frozen=True)
class ObjectDescription:
    object_id: str
    text: str


def object_phrase(label: str, attributes: dict) -> str:
    """``{"color": "white"}, "chair"`` -> ``"white chair"``."""
    keys = [k for k in ATTRIBUTE_ORDER if k in attributes]
    keys += sorted(k for k in attributes if k not in ATTRIBUTE_ORDER)
    words = [attributes[k] for k in keys if attributes[k]]
    return " ".join(words + [label])


def _list_section(records) -> str:
    if not records:
        return "there are no objects"
    return "there are " + ", ".join(object_phrase(r.label, r.attributes) for r in records)


def virtual_situation(scene: Scene, object_id: str) -> Situation:
    """Stand at the side midpoint nearest the scene center, facing the object's center."""
    obj = scene[object_id]
    stand = candidate_stands(scene, obj)[0]
    pc = footprint2d(obj).center
    yaw = facing_yaw(stand, pc)
    text = f"Stand besides {obj.label}"
    return Situation(obj.id, obj.id, (stand[0], stand[1], 0.0), yaw, yaw_to_quaternion(yaw),
                     DirectionBin.FRONT, text)


def situated_description(scene: Scene, object_id: str, config: GraphConfig = GraphConfig(),
                         max_per_direction: int = MAX_DESCRIBED_PER_DIRECTION) -> ObjectDescription:
    obj = scene[object_id]
    graph = build_situated_graph(scene, virtual_situation(scene, object_id), config)
    name = object_phrase(obj.label, obj.attributes)
    parts = {b: _list_section(graph.buckets[b][:max_per_direction]) for b in DirectionBin}
    text = (f"Stand besides {name} and facing the center of the {name}, "
            f"in front, {parts[DirectionBin.FRONT]}; "
            f"on the right, {parts[DirectionBin.RIGHT]}; "
            f"behind, {parts[DirectionBin.BACK]}; "
            f"and on the left, {parts[DirectionBin.LEFT]}.")
    return ObjectDescription(object_id, text)
