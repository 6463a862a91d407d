"""Top-view SVG drawings of scenes and relation templates."""

from __future__ import annotations

import colorsys
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .corpus import ObjectInstance, Scene
from .geometry import TWO_PI, corners_array
from .priors import Template

MARGIN = 20.0


@dataclass(frozen=True)
class RenderOptions:
    scale: float = 60.0  # pixels per meter
    draw_labels: bool = True
    hsv_orientation: bool = True

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    """Maps layout (x, z) to SVG pixels; z points up on screen."""

    def __init__(self, lo, hi, opts: RenderOptions):
        self.lo, self.hi, self.s = np.asarray(lo, float), np.asarray(hi, float), opts.scale
        w = (self.hi[0] - self.lo[0]) * self.s + 2 * MARGIN
        h = (self.hi[1] - self.lo[1]) * self.s + 2 * MARGIN
        self.root = ET.Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            width=_fmt(w),
            height=_fmt(h),
            viewBox=f"0 0 {_fmt(w)} {_fmt(h)}",
        )

    def px(self, x: float, z: float) -> tuple[float, float]:
        return (MARGIN + (x - self.lo[0]) * self.s, MARGIN + (self.hi[1] - z) * self.s)

    def points(self, pts) -> str:
        return " ".join("{},{}".format(*map(_fmt, self.px(x, z))) for x, z in pts)

    def tostring(self) -> str:
        ET.indent(self.root)
        return ET.tostring(self.root, encoding="unicode") + "\n"


def _object(canvas: _Canvas, parent, obj: ObjectInstance, cls: str, labels: bool) -> None:
    g = ET.SubElement(parent, "g", {"class": cls, "data-category": obj.category})
    cx, cy = canvas.px(obj.x, obj.z)
    w, h = 2 * obj.hx * canvas.s, 2 * obj.hz * canvas.s
    # screen y is flipped, so a counter-clockwise layout angle turns clockwise on screen
    ET.SubElement(
        g,
        "rect",
        x=_fmt(cx - w / 2),
        y=_fmt(cy - h / 2),
        width=_fmt(w),
        height=_fmt(h),
        transform=f"rotate({_fmt(-math.degrees(obj.theta))} {_fmt(cx)} {_fmt(cy)})",
        fill="#dde4ee" if cls == "object" else "#bbbbbb",
        stroke="#334",
    )
    tip = canvas.px(obj.x + obj.hx * math.cos(obj.theta), obj.z + obj.hx * math.sin(obj.theta))
    ET.SubElement(g, "line", x1=_fmt(cx), y1=_fmt(cy), x2=_fmt(tip[0]), y2=_fmt(tip[1]), stroke="#c22")
    if labels:
        t = ET.SubElement(g, "text", {"x": _fmt(cx), "y": _fmt(cy), "font-size": "10", "text-anchor": "middle"})
        t.text = obj.category


def render_scene(scene: Scene, opts: RenderOptions = RenderOptions()) -> str:
    pts = [scene.room.vertices]
    for o in (*scene.objects, *scene.fixtures):
        pts.append(corners_array((o.x, o.z), (o.hx, o.hz), o.theta))
    allp = np.vstack(pts)
    canvas = _Canvas(allp.min(axis=0), allp.max(axis=0), opts)
    ET.SubElement(canvas.root, "polygon", {"class": "room", "points": canvas.points(scene.room.vertices), "fill": "none", "stroke": "#000"})
    for f in scene.fixtures:
        _object(canvas, canvas.root, f, "fixture", opts.draw_labels)
    for o in scene.objects:
        _object(canvas, canvas.root, o, "object", opts.draw_labels)
    return canvas.tostring()


def template_color(p_theta: float, weight: float, max_weight: float, hsv: bool = True) -> str:
    """Hue from orientation, saturation from relative weight, full value."""
    if not hsv:
        return "#000000"
    s = weight / max_weight if max_weight > 0 else 0.0
    r, g, b = colorsys.hsv_to_rgb((p_theta % TWO_PI) / TWO_PI, s, 1.0)
    return "#{:02x}{:02x}{:02x}".format(*(round(255 * c) for c in (r, g, b)))


def render_template(template: Template, opts: RenderOptions = RenderOptions(), title: str = "") -> str:
    """Scatter of (p_x, p_z) around the anchor at the origin."""
    xz = template.points[:, [0, 2]]
    lo = np.minimum(xz.min(axis=0), 0.0) - 0.2
    hi = np.maximum(xz.max(axis=0), 0.0) + 0.2
    canvas = _Canvas(lo, hi, opts)
    if title:
        t = ET.SubElement(canvas.root, "title")
        t.text = title
    ox, oy = canvas.px(0.0, 0.0)
    ET.SubElement(canvas.root, "circle", {"class": "anchor", "cx": _fmt(ox), "cy": _fmt(oy), "r": "4", "fill": "none", "stroke": "#000"})
    wmax = float(template.weights.max())
    g = ET.SubElement(canvas.root, "g", {"class": "samples"})
    centers = set(template.centers)
    for k, (p, w) in enumerate(zip(template.points, template.weights)):
        x, y = canvas.px(p[0], p[2])
        ET.SubElement(
            g,
            "circle",
            {
                "class": "center" if k in centers else "sample",
                "cx": _fmt(x),
                "cy": _fmt(y),
                "r": "3" if k in centers else "1.5",
                "fill": template_color(p[3], w, wmax, opts.hsv_orientation),
            },
        )
    return canvas.tostring()
