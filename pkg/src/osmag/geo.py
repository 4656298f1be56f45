"""Planar geometry for area/passage maps.

All metric computation happens in a local tangent frame anchored at the
map's root node: x meters east, y meters north. The projection is an
equirectangular tangent plane; at campus scale (a few km) its distortion
is below a few centimeters, which is well inside every tolerance used by
the rest of the package. Positions beyond ``COORD_LIMIT_M`` from the
anchor are rejected because the flat-plane assumption no longer holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegeneratePolygonError

WGS84_RADIUS_M = 6_378_137.0
COORD_LIMIT_M = 50_000.0

_DEG = math.pi / 180.0
_EPS = 1e-9


@dataclass(frozen=True)
class LocalPoint:
    """Point in the local frame: meters east (x) and north (y) of the anchor."""

    x: float
    y: float


def to_local(lat: float, lon: float, lat0: float, lon0: float) -> LocalPoint:
    """Project WGS84 degrees onto the tangent plane anchored at (lat0, lon0)."""
    x = (lon - lon0) * _DEG * WGS84_RADIUS_M * math.cos(lat0 * _DEG)
    y = (lat - lat0) * _DEG * WGS84_RADIUS_M
    if abs(x) >= COORD_LIMIT_M or abs(y) >= COORD_LIMIT_M:
        raise ValueError(f"position {x:.0f},{y:.0f} m exceeds the local frame limit")
    return LocalPoint(x, y)


def from_local(x: float, y: float, lat0: float, lon0: float) -> tuple[float, float]:
    """Inverse of :func:`to_local`; returns (lat, lon) in degrees."""
    if abs(x) >= COORD_LIMIT_M or abs(y) >= COORD_LIMIT_M:
        raise ValueError(f"position {x:.0f},{y:.0f} m exceeds the local frame limit")
    lat = lat0 + y / (_DEG * WGS84_RADIUS_M)
    lon = lon0 + x / (_DEG * WGS84_RADIUS_M * math.cos(lat0 * _DEG))
    return lat, lon


def _signed_area(pts) -> float:
    total = 0.0
    n = len(pts)
    for i in range(n):
        a = pts[i]
        b = pts[(i + 1) % n]
        total += a.x * b.y - b.x * a.y
    return total / 2.0


def _orient(a: LocalPoint, b: LocalPoint, c: LocalPoint) -> float:
    """Twice the signed area of triangle abc; > 0 when c lies left of ab."""
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


class Polygon2D:
    """Simple polygon in the local frame.

    Normalized on construction: the repeated closing vertex and runs of
    consecutive duplicates are dropped, and the vertex ring is reversed
    if needed so the signed area is positive (counter-clockwise).
    """

    __slots__ = ("vertices", "_bbox")

    def __init__(self, points):
        pts = [p if isinstance(p, LocalPoint) else LocalPoint(float(p[0]), float(p[1]))
               for p in points]
        if len(pts) >= 2 and _close(pts[0], pts[-1]):
            pts.pop()
        deduped: list[LocalPoint] = []
        for p in pts:
            if not deduped or not _close(deduped[-1], p):
                deduped.append(p)
        if len(deduped) < 3:
            raise DegeneratePolygonError(f"polygon needs 3 distinct vertices, got {len(deduped)}")
        area = _signed_area(deduped)
        if abs(area) < 1e-12:
            raise DegeneratePolygonError("polygon has zero area")
        if area < 0:
            deduped.reverse()
        self.vertices: tuple[LocalPoint, ...] = tuple(deduped)
        self._bbox: tuple[float, float, float, float] | None = None

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        """(min x, min y, max x, max y)."""
        if self._bbox is None:
            xs = [p.x for p in self.vertices]
            ys = [p.y for p in self.vertices]
            self._bbox = (min(xs), min(ys), max(xs), max(ys))
        return self._bbox

    def edges(self):
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            yield verts[i], verts[(i + 1) % n]

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon2D({len(self.vertices)} vertices, area={polygon_area(self):.2f})"


def _close(a: LocalPoint, b: LocalPoint, eps: float = _EPS) -> bool:
    return abs(a.x - b.x) <= eps and abs(a.y - b.y) <= eps


def polygon_area(poly: Polygon2D) -> float:
    """Enclosed area in square meters (positive; vertices are CCW)."""
    return _signed_area(poly.vertices)


def point_segment_distance(p: LocalPoint, a: LocalPoint, b: LocalPoint) -> float:
    dx, dy = b.x - a.x, b.y - a.y
    seg2 = dx * dx + dy * dy
    if seg2 <= 0.0:
        return math.hypot(p.x - a.x, p.y - a.y)
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / seg2
    t = max(0.0, min(1.0, t))
    return math.hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy))


def distance_to_boundary(poly: Polygon2D, p: LocalPoint) -> float:
    return min(point_segment_distance(p, a, b) for a, b in poly.edges())


def contains_point(poly: Polygon2D, p: LocalPoint) -> bool:
    """Point-in-polygon by ray casting; points on the boundary count as inside."""
    x, y = p.x, p.y
    minx, miny, maxx, maxy = poly.bbox
    if x < minx - _EPS or x > maxx + _EPS or y < miny - _EPS or y > maxy + _EPS:
        return False
    inside = False
    for a, b in poly.edges():
        if point_segment_distance(p, a, b) <= _EPS:
            return True
        if (a.y > y) != (b.y > y):
            xint = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
            if x < xint:
                inside = not inside
    return inside


def _properly_intersect(p1, p2, q1, q2) -> bool:
    """True when the open interiors of segments p1p2 and q1q2 cross.

    Collinear overlap and endpoint touching are not proper crossings;
    shared walls between neighboring rooms must not trip this test.
    """
    lp = math.hypot(p2.x - p1.x, p2.y - p1.y)
    lq = math.hypot(q2.x - q1.x, q2.y - q1.y)
    if lp <= 0.0 or lq <= 0.0:
        return False
    ep = _EPS * lq
    eq = _EPS * lp
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    return (((d1 > ep and d2 < -ep) or (d1 < -ep and d2 > ep))
            and ((d3 > eq and d4 < -eq) or (d3 < -eq and d4 > eq)))


def polygon_self_intersects(poly: Polygon2D) -> bool:
    """True when any two non-adjacent edges properly cross."""
    segs = list(poly.edges())
    n = len(segs)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # first and last edges are adjacent
            if _properly_intersect(*segs[i], *segs[j]):
                return True
    return False


def polygon_contains_polygon(outer: Polygon2D, inner: Polygon2D, slack: float = 0.0) -> bool:
    """Containment with tolerance: inner may poke out up to ``slack`` meters.

    Every inner vertex must be inside the outer ring or within ``slack``
    of its boundary, and no inner edge may properly cross an outer edge.
    """
    for v in inner.vertices:
        if contains_point(outer, v):
            continue
        if slack > 0.0 and distance_to_boundary(outer, v) <= slack:
            continue
        return False
    for ie in inner.edges():
        for oe in outer.edges():
            if _properly_intersect(*ie, *oe):
                return False
    return True


def _point_in_triangle_strict(p, a, b, c, eps) -> bool:
    return (_orient(a, b, p) > eps and _orient(b, c, p) > eps and _orient(c, a, p) > eps)


def triangulate(poly: Polygon2D) -> list[tuple[LocalPoint, LocalPoint, LocalPoint]]:
    """Ear-clipping triangulation of a simple polygon.

    Zero-area ears (collinear vertices are common after coordinate
    rounding) are clipped without emitting a triangle. Raises
    DegeneratePolygonError when no ear can be found, which happens for
    self-intersecting input.
    """
    pts = list(poly.vertices)
    idx = list(range(len(pts)))
    minx, miny, maxx, maxy = poly.bbox
    scale = max(maxx - minx, maxy - miny, 1.0)
    eps = 1e-12 * scale * scale
    tris: list[tuple[LocalPoint, LocalPoint, LocalPoint]] = []
    while len(idx) > 3:
        n = len(idx)
        clipped = False
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = pts[i0], pts[i1], pts[i2]
            cross = _orient(a, b, c)
            if cross < -eps:
                continue  # reflex corner, not an ear
            if any(j not in (i0, i1, i2) and _point_in_triangle_strict(pts[j], a, b, c, eps)
                   for j in idx):
                continue
            if cross > eps:
                tris.append((a, b, c))
            idx.pop(k)
            clipped = True
            break
        if not clipped:
            raise DegeneratePolygonError("cannot triangulate polygon")
    a, b, c = (pts[i] for i in idx)
    if abs(_orient(a, b, c)) > eps:
        tris.append((a, b, c))
    return tris


def _clip_convex(subject: list[LocalPoint], clip: tuple[LocalPoint, ...]) -> list[LocalPoint]:
    """Sutherland-Hodgman: clip any simple polygon by a convex CCW polygon."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        a = clip[i]
        b = clip[(i + 1) % n]
        if not output:
            return []
        src = output
        output = []
        prev = src[-1]
        prev_in = _orient(a, b, prev) >= -_EPS
        for cur in src:
            cur_in = _orient(a, b, cur) >= -_EPS
            if cur_in != prev_in:
                # edge crosses the clip line
                d1 = _orient(a, b, prev)
                d2 = _orient(a, b, cur)
                t = d1 / (d1 - d2)
                output.append(LocalPoint(prev.x + t * (cur.x - prev.x),
                                         prev.y + t * (cur.y - prev.y)))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    return output


def polygons_overlap_area(a: Polygon2D, b: Polygon2D) -> float:
    """Area of the intersection of two simple polygons, in square meters.

    Triangulates ``a`` and sums the area of ``b`` clipped against each
    triangle; exact in real arithmetic for simple polygons.
    """
    aminx, aminy, amaxx, amaxy = a.bbox
    bminx, bminy, bmaxx, bmaxy = b.bbox
    if aminx >= bmaxx or bminx >= amaxx or aminy >= bmaxy or bminy >= amaxy:
        return 0.0
    total = 0.0
    subject = list(b.vertices)
    for tri in triangulate(a):
        piece = _clip_convex(subject, tri)
        if len(piece) >= 3:
            total += abs(_signed_area(piece))
    return total


def polyline_length(points) -> float:
    pts = list(points)
    return sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(pts, pts[1:]))


def polyline_midpoint(points) -> LocalPoint:
    """Point at half the arc length of a polyline (the polyline itself for 1 point)."""
    pts = list(points)
    if not pts:
        raise ValueError("empty polyline")
    if len(pts) == 1:
        return pts[0]
    half = polyline_length(pts) / 2.0
    if half <= 0.0:
        return pts[0]
    walked = 0.0
    for a, b in zip(pts, pts[1:]):
        seg = math.hypot(b.x - a.x, b.y - a.y)
        if walked + seg >= half and seg > 0.0:
            t = (half - walked) / seg
            return LocalPoint(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
        walked += seg
    return pts[-1]
