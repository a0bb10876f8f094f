"""Random indoor scenes for tests, benchmarks and smoke runs."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .scene import Object3D, Obb3D, Scene, Rect2D, footprint2d, id_stem


@dataclass(frozen=True)
class Kind:
    label: str
    extents: tuple[float, float, float]  # nominal half-lengths
    elevation: float = 0.0  # bottom of the box above the floor
    affordances: tuple[str, ...] = ()
    colors: tuple[str, ...] = ("white", "black", "brown", "gray")
    shapes: tuple[str, ...] = ()


CATALOG = (
    Kind("chair", (0.25, 0.25, 0.45), 0.0, ("sitting",), ("white", "black", "brown", "red")),
    Kind("table", (0.6, 0.4, 0.37), 0.0, ("placing items on", "eating"), ("brown", "white"),
         ("rectangular", "round")),
    Kind("sofa", (1.0, 0.45, 0.4), 0.0, ("sitting", "lying"), ("gray", "blue", "beige")),
    Kind("bed", (1.0, 0.8, 0.3), 0.0, ("sleeping", "lying"), ("white", "beige")),
    Kind("lamp", (0.15, 0.15, 0.8), 0.0, ("lighting",), ("white", "black")),
    Kind("tv", (0.6, 0.08, 0.35), 0.6, ("watching",), ("black",)),
    Kind("kitchen cabinet", (0.8, 0.3, 0.5), 0.0, ("storing",), ("white", "brown")),
    Kind("shelf", (0.5, 0.2, 0.9), 0.0, ("placing items on", "storing"), ("brown", "white")),
    Kind("plant", (0.2, 0.2, 0.4), 0.0, ("watering",), ("green",)),
    Kind("desk", (0.7, 0.35, 0.38), 0.0, ("working", "placing items on"), ("brown", "white")),
    Kind("picture", (0.4, 0.03, 0.3), 1.2, ("looking at",), ("colorful",)),
    Kind("window", (0.6, 0.05, 0.6), 0.9, ("opening", "looking out"), ("white",)),
    Kind("trash can", (0.15, 0.15, 0.3), 0.0, ("throwing away",), ("gray", "black")),
    Kind("armchair", (0.45, 0.45, 0.45), 0.0, ("sitting",), ("red", "green", "gray")),
    Kind("pillow", (0.25, 0.2, 0.1), 0.6, ("resting",), ("white", "blue", "yellow")),
)
SIZES = ("small", "medium", "big")


def _overlaps(r: Rect2D, placed: list[Rect2D], gap: float) -> bool:
    for p in placed:
        if (r.min[0] < p.max[0] + gap and p.min[0] < r.max[0] + gap
                and r.min[1] < p.max[1] + gap and p.min[1] < r.max[1] + gap):
            return True
    return False


def random_scene(rng: random.Random, scene_id: str, n_objects: int = 12,
                 room: tuple[float, float] = (8.0, 6.0), gap: float = 0.05,
                 catalog=CATALOG) -> Scene:
    """Non-overlapping random objects; label counts vary so duplicates occur."""
    objects: list[Object3D] = []
    placed: list[Rect2D] = []
    counter = 0
    tries = 0
    while len(objects) < n_objects and tries < n_objects * 200:
        tries += 1
        kind = rng.choice(catalog)
        s = rng.uniform(0.8, 1.2)
        ex, ey, ez = (round(v * s, 3) for v in kind.extents)
        yaw = round(rng.uniform(0.0, 360.0), 2)
        cx = round(rng.uniform(-room[0] / 2, room[0] / 2), 3)
        cy = round(rng.uniform(-room[1] / 2, room[1] / 2), 3)
        cz = round(kind.elevation + ez, 3)
        obb = Obb3D((cx, cy, cz), (ex, ey, ez), yaw)
        counter += 1
        probe = Object3D(f"{id_stem(kind.label)}_{counter}", kind.label, obb)
        rect = footprint2d(probe)
        if _overlaps(rect, placed, gap):
            counter -= 1
            continue
        attrs = {"color": rng.choice(kind.colors)}
        if rng.random() < 0.5:
            attrs["size"] = rng.choice(SIZES)
        if kind.shapes and rng.random() < 0.5:
            attrs["shape"] = rng.choice(kind.shapes)
        placed.append(rect)
        objects.append(Object3D(probe.id, kind.label, obb, attrs, kind.affordances))
    # one relation per object: its nearest neighbour
    final = []
    for o in objects:
        others = [p for p in objects if p.id != o.id]
        rel = ()
        if others:
            near = min(others, key=lambda p: (math.dist(o.center2d, p.center2d), p.id))
            rel = (f"close by {near.id}",)
        final.append(Object3D(o.id, o.label, o.obb, o.attributes, o.affordances, rel))
    return Scene(scene_id, tuple(final))


def random_scenes(seed: int, count: int, n_objects: int = 12, prefix: str = "scene") -> list[Scene]:
    rng = random.Random(seed)
    return [random_scene(rng, f"{prefix}{i:04d}", n_objects + rng.randint(-3, 3))
            for i in range(count)]
