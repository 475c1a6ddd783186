"""Render a labeling as an SVG map: one square cell per area, one color per region."""

from __future__ import annotations

import colorsys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .dqm import Seeds
from .instance import Assignment, Instance

__all__ = ["region_color", "render_svg", "export_svg"]

_PALETTE = (
    "#4e79a7",
    "#f28e2b",
    "#e15759",
    "#76b7b2",
    "#59a14f",
    "#edc948",
    "#b07aa1",
    "#ff9da7",
    "#9c755f",
    "#bab0ac",
)
CELL = 40.0


def region_color(k: int) -> str:
    """Fixed color of region ``k`` (1-based); golden-angle hues past the palette."""
    if k <= len(_PALETTE):
        return _PALETTE[k - 1]
    hue = ((k - len(_PALETTE)) * 0.618033988749895) % 1.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.55, 0.6)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _layout(coords: np.ndarray) -> tuple[np.ndarray, float]:
    """Shift coordinates to the origin and scale so the closest pair is one cell apart."""
    pts = coords - coords.min(axis=0)
    if len(pts) > 1:
        diff = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        diff[diff == 0] = np.inf
        step = float(diff.min())
        if np.isfinite(step):
            pts = pts / step
    return pts * CELL, CELL


def render_svg(instance: Instance, assignment: Assignment, seeds: Seeds | None = None) -> str:
    if instance.coordinates is None:
        raise ValueError("instance has no coordinates to draw")
    if len(assignment) != instance.n:
        raise ValueError("assignment does not cover the instance")
    pts, side = _layout(np.asarray(instance.coordinates, dtype=float))
    margin = side / 2
    width = float(pts[:, 0].max()) + side + 2 * margin
    height = float(pts[:, 1].max()) + side + 2 * margin
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=f"{width:g}",
        height=f"{height:g}",
        viewBox=f"0 0 {width:g} {height:g}",
    )
    roots = set() if seeds is None else set(seeds.roots.values())
    for i, name in enumerate(instance.names):
        x, y = (float(v) + margin for v in pts[i])
        cell = ET.SubElement(
            svg,
            "rect",
            x=f"{x:g}",
            y=f"{y:g}",
            width=f"{side:g}",
            height=f"{side:g}",
            fill=region_color(assignment[i]),
            stroke="#000000" if i in roots else "#ffffff",
        )
        cell.set("stroke-width", "3" if i in roots else "1")
        cell.set("data-area", name)
        cell.set("data-region", str(assignment[i]))
        label = ET.SubElement(svg, "text", x=f"{x + side / 2:g}", y=f"{y + side / 2 + 4:g}")
        label.set("text-anchor", "middle")
        label.set("font-size", "12")
        label.text = name
    return ET.tostring(svg, encoding="unicode") + "\n"


def export_svg(instance: Instance, assignment: Assignment, path, seeds: Seeds | None = None) -> Path:
    path = Path(path)
    path.write_text(render_svg(instance, assignment, seeds), encoding="utf-8")
    return path
