"""Bird's-eye-view SVG of a scene and, optionally, one situation.

Output is built with ElementTree and contains no timestamps or random ids,
so identical inputs give identical bytes. World +y points up on the page.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .geometry import DirectionBin
from .scene import Scene, footprint2d, obb_corners2d, scene_center
from .situated import Situation

SVG_NS = "http://www.w3.org/2000/svg"
WEDGE_COLORS = {
    DirectionBin.FRONT: "#cfe8ff",
    DirectionBin.RIGHT: "#d8f5d0",
    DirectionBin.BACK: "#f7d9d9",
    DirectionBin.LEFT: "#fff2c2",
}
# Bin start relative to facing, measured clockwise (rotation angles grow to the right).
_WEDGE_START = {DirectionBin.FRONT: -45.0, DirectionBin.RIGHT: 45.0,
                DirectionBin.BACK: 135.0, DirectionBin.LEFT: 225.0}


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Canvas:
    def __init__(self, bounds, scale: float, pad: float):
        self.minx, self.miny, self.maxx, self.maxy = bounds
        self.scale = scale
        self.pad = pad

    @property
    def size(self):
        return ((self.maxx - self.minx) * self.scale + 2 * self.pad,
                (self.maxy - self.miny) * self.scale + 2 * self.pad)

    def xy(self, x, y):
        return ((x - self.minx) * self.scale + self.pad, (self.maxy - y) * self.scale + self.pad)

    def pt(self, x, y) -> str:
        sx, sy = self.xy(x, y)
        return f"{_fmt(sx)},{_fmt(sy)}"


def _bounds(scene: Scene, extra=()):
    xs, ys = [], []
    for o in scene.objects:
        r = footprint2d(o)
        xs += [r.min[0], r.max[0]]
        ys += [r.min[1], r.max[1]]
    for x, y in extra:
        xs.append(x)
        ys.append(y)
    return min(xs), min(ys), max(xs), max(ys)


def _heading(yaw_deg: float, clockwise_offset: float = 0.0):
    # yaw is counterclockwise from +y; a clockwise offset subtracts
    a = math.radians(yaw_deg - clockwise_offset)
    return -math.sin(a), math.cos(a)


def render_svg(scene: Scene, situation: Situation | None = None, scale: float = 60.0,
               pad: float = 20.0, wedge_radius: float = 1.5) -> bytes:
    extra = []
    if situation is not None:
        sx, sy = situation.stand[0], situation.stand[1]
        extra = [(sx - wedge_radius, sy - wedge_radius), (sx + wedge_radius, sy + wedge_radius)]
    canvas = _Canvas(_bounds(scene, extra), scale, pad)
    w, h = canvas.size
    root = ET.Element("svg", {"xmlns": SVG_NS, "width": _fmt(w), "height": _fmt(h),
                              "viewBox": f"0 0 {_fmt(w)} {_fmt(h)}"})
    ET.SubElement(root, "title").text = f"scene {scene.id}"

    if situation is not None:
        sx, sy = situation.stand[0], situation.stand[1]
        for b in (DirectionBin.FRONT, DirectionBin.RIGHT, DirectionBin.BACK, DirectionBin.LEFT):
            start = _WEDGE_START[b]
            ax, ay = _heading(situation.yaw, start)
            bx, by = _heading(situation.yaw, start + 90.0)
            r_px = wedge_radius * scale
            d = (f"M {canvas.pt(sx, sy)} L {canvas.pt(sx + wedge_radius * ax, sy + wedge_radius * ay)} "
                 f"A {_fmt(r_px)} {_fmt(r_px)} 0 0 1 "
                 f"{canvas.pt(sx + wedge_radius * bx, sy + wedge_radius * by)} Z")
            ET.SubElement(root, "path", {"class": "wedge", "data-direction": b.value, "d": d,
                                         "fill": WEDGE_COLORS[b], "fill-opacity": "0.6",
                                         "stroke": "none"})

    for o in scene.objects:
        pts = " ".join(canvas.pt(x, y) for x, y in obb_corners2d(o))
        ET.SubElement(root, "polygon", {"class": "object", "data-id": o.id, "points": pts,
                                        "fill": "#e0e0e0", "stroke": "#333333",
                                        "stroke-width": "1"})
        cx, cy = canvas.xy(*o.center2d)
        text = ET.SubElement(root, "text", {"x": _fmt(cx), "y": _fmt(cy), "font-size": "10",
                                            "text-anchor": "middle",
                                            "font-family": "sans-serif"})
        text.text = o.label

    mx, my = canvas.xy(*scene_center(scene))
    ET.SubElement(root, "circle", {"class": "scene-center", "cx": _fmt(mx), "cy": _fmt(my),
                                   "r": "4", "fill": "#000000"})

    if situation is not None:
        sx, sy = situation.stand[0], situation.stand[1]
        px, py = canvas.xy(sx, sy)
        ET.SubElement(root, "circle", {"class": "stand", "cx": _fmt(px), "cy": _fmt(py),
                                       "r": "5", "fill": "#d62728"})
        fx, fy = _heading(situation.yaw)
        length = 0.8 * wedge_radius
        tip = (sx + length * fx, sy + length * fy)
        head = 0.15 * wedge_radius
        lx, ly = _heading(situation.yaw, 150.0)
        rx, ry = _heading(situation.yaw, -150.0)
        d = (f"M {canvas.pt(sx, sy)} L {canvas.pt(*tip)} "
             f"M {canvas.pt(tip[0] + head * lx, tip[1] + head * ly)} L {canvas.pt(*tip)} "
             f"L {canvas.pt(tip[0] + head * rx, tip[1] + head * ry)}")
        ET.SubElement(root, "path", {"class": "orientation-arrow", "d": d, "fill": "none",
                                     "stroke": "#d62728", "stroke-width": "2"})

    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"
