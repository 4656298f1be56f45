"""Deterministic SVG rendering of one height level of a map.

Coordinates are emitted in meters in the local frame. SVG's y axis
grows downward while the map's grows north, so every y is written as
(miny + maxy) - y, a flip inside the fitted viewBox; x passes through
unchanged. Numbers are formatted with three decimals, which makes the
output byte-stable for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import fsum

from .errors import EmptySelectionError
from .model import AreaType, MapModel


@dataclass(frozen=True)
class RenderStyle:
    wall_stroke_m: float = 0.15
    wall_color: str = "#30363d"
    fill_colors: dict = field(default_factory=lambda: {
        "inner": "#dbe9f6", "structure": "#efefef"})
    passage_color: str = "#c0392b"
    passage_stroke_m: float = 0.1
    route_color: str = "#1a7f37"
    route_stroke_m: float = 0.12
    #: height band [lo, hi] in meters selecting the level to draw
    level_band: tuple[float, float] = (-0.5, 0.5)
    labels: bool = False
    label_size_m: float = 0.5
    background: str = "#ffffff"

    def __post_init__(self):
        if self.wall_stroke_m <= 0 or self.passage_stroke_m <= 0 or self.route_stroke_m <= 0:
            raise ValueError("stroke widths must be positive")
        if self.level_band[0] > self.level_band[1]:
            raise ValueError("level band is empty")


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def render_svg(model: MapModel, style: RenderStyle | None = None,
               route=None) -> bytes:
    """Render the areas and passages of one height band, plus a route.

    Areas are drawn parents-first so children paint on top; passages as
    contrasting segments (dashed when vertical); route legs inside the
    band as a polyline overlay with start/end dots. Raises
    EmptySelectionError when the band selects no areas.
    """
    if style is None:
        style = RenderStyle()
    lo, hi = style.level_band

    selected = [model.areas[aid] for aid in sorted(model.areas)
                if lo <= model.areas[aid].height <= hi
                and model.areas[aid].polygon is not None]
    if not selected:
        raise EmptySelectionError(f"no areas with height in [{lo:g}, {hi:g}]")
    selected.sort(key=lambda a: (model.area_depth(a.osmag_id), a.osmag_id))

    minx = min(a.polygon.bbox[0] for a in selected) - 1.0
    miny = min(a.polygon.bbox[1] for a in selected) - 1.0
    maxx = max(a.polygon.bbox[2] for a in selected) + 1.0
    maxy = max(a.polygon.bbox[3] for a in selected) + 1.0
    flip = miny + maxy

    def pt(x: float, y: float) -> str:
        return f"{_fmt(x)},{_fmt(flip - y)}"

    lines: list[str] = []
    lines.append('<?xml version="1.0" encoding="UTF-8"?>')
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(minx)} {_fmt(miny)} {_fmt(maxx - minx)} {_fmt(maxy - miny)}">')
    lines.append(f'<rect x="{_fmt(minx)}" y="{_fmt(miny)}" '
                 f'width="{_fmt(maxx - minx)}" height="{_fmt(maxy - miny)}" '
                 f'fill="{style.background}"/>')

    label_items: list[str] = []
    for area in selected:
        kind = "structure" if area.area_type is AreaType.STRUCTURE else "inner"
        fill = style.fill_colors.get(kind, "#dddddd")
        points = " ".join(pt(v.x, v.y) for v in area.polygon.vertices)
        lines.append(
            f'<polygon points="{points}" fill="{fill}" '
            f'stroke="{style.wall_color}" stroke-width="{_fmt(style.wall_stroke_m)}" '
            f'stroke-linejoin="round" data-area="{_esc(area.osmag_id)}"/>')
        if style.labels:
            cx = fsum(v.x for v in area.polygon.vertices) / len(area.polygon.vertices)
            cy = fsum(v.y for v in area.polygon.vertices) / len(area.polygon.vertices)
            label_items.append(
                f'<text x="{_fmt(cx)}" y="{_fmt(flip - cy)}" '
                f'font-size="{_fmt(style.label_size_m)}" text-anchor="middle" '
                f'fill="#222222">{_esc(area.osmag_id)}</text>')

    shown = {a.osmag_id for a in selected}
    for pid in sorted(model.passages):
        p = model.passages[pid]
        if p.from_area not in shown and p.to_area not in shown:
            continue
        points = " ".join(pt(q.x, q.y) for q in p.points)
        dash = ' stroke-dasharray="0.3 0.2"' if p.is_vertical else ""
        lines.append(
            f'<polyline points="{points}" fill="none" '
            f'stroke="{style.passage_color}" '
            f'stroke-width="{_fmt(style.passage_stroke_m)}"'
            f'{dash} data-passage="{_esc(pid)}"/>')

    if route is not None:
        for leg in route.legs:
            area = model.areas.get(leg.area_id)
            if area is None or not (lo <= area.height <= hi) or len(leg.polyline) < 2:
                continue
            points = " ".join(pt(q.x, q.y) for q in leg.polyline)
            lines.append(
                f'<polyline points="{points}" fill="none" '
                f'stroke="{style.route_color}" '
                f'stroke-width="{_fmt(style.route_stroke_m)}" '
                f'stroke-linecap="round" data-leg="{_esc(leg.area_id)}"/>')
        for leg, marker in ((route.legs[0], "route-start"), (route.legs[-1], "route-end")):
            area = model.areas.get(leg.area_id)
            if area is None or not (lo <= area.height <= hi) or not leg.polyline:
                continue
            q = leg.polyline[0] if marker == "route-start" else leg.polyline[-1]
            lines.append(
                f'<circle cx="{_fmt(q.x)}" cy="{_fmt(flip - q.y)}" '
                f'r="{_fmt(2 * style.route_stroke_m)}" '
                f'fill="{style.route_color}" data-marker="{marker}"/>')

    lines.extend(label_items)
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode("utf-8")
