"""Projection and polygon primitives."""

import math

import pytest
from hypothesis import given, strategies as st

from oracles import shapely_overlap_area
from osmag.errors import DegeneratePolygonError
from osmag.geo import (
    COORD_LIMIT_M, LocalPoint, Polygon2D, contains_point,
    distance_to_boundary, from_local, point_segment_distance, polygon_area,
    polygon_contains_polygon, polygon_self_intersects, polygons_overlap_area,
    polyline_length, polyline_midpoint, to_local, triangulate,
)


def square(size=1.0, x0=0.0, y0=0.0):
    return Polygon2D([LocalPoint(x0, y0), LocalPoint(x0 + size, y0),
                      LocalPoint(x0 + size, y0 + size),
                      LocalPoint(x0, y0 + size)])


# --- projection --------------------------------------------------------------

def test_projection_anchor_is_origin():
    p = to_local(31.18, 121.59, 31.18, 121.59)
    assert p.x == 0.0 and p.y == 0.0


def test_projection_north_is_positive_y():
    p = to_local(31.181, 121.59, 31.18, 121.59)
    assert p.y > 0 and abs(p.x) < 1e-9
    assert p.y == pytest.approx(111.0, rel=0.01)  # ~111 m per mdeg of latitude


@given(lat0=st.floats(-60, 60), lon0=st.floats(-179, 179),
       x=st.floats(-20_000, 20_000), y=st.floats(-20_000, 20_000))
def test_projection_round_trip(lat0, lon0, x, y):
    lat, lon = from_local(x, y, lat0, lon0)
    p = to_local(lat, lon, lat0, lon0)
    assert math.isclose(p.x, x, abs_tol=1e-6)
    assert math.isclose(p.y, y, abs_tol=1e-6)


def test_projection_rejects_far_positions():
    with pytest.raises(ValueError):
        from_local(COORD_LIMIT_M + 1, 0.0, 31.18, 121.59)
    with pytest.raises(ValueError):
        to_local(32.0, 130.0, 31.18, 121.59)


# --- Polygon2D ---------------------------------------------------------------

def test_polygon_normalizes_to_ccw():
    cw = Polygon2D([LocalPoint(0, 0), LocalPoint(0, 1), LocalPoint(1, 1),
                    LocalPoint(1, 0)])
    assert polygon_area(cw) > 0
    assert {(v.x, v.y) for v in cw.vertices} == {(0, 0), (0, 1), (1, 1), (1, 0)}


def test_polygon_drops_duplicate_points():
    p = Polygon2D([LocalPoint(0, 0), LocalPoint(0, 0), LocalPoint(1, 0),
                   LocalPoint(1, 1), LocalPoint(0, 1), LocalPoint(0, 1)])
    assert len(p) == 4


def test_polygon_rejects_degenerate_input():
    with pytest.raises(DegeneratePolygonError):
        Polygon2D([LocalPoint(0, 0), LocalPoint(1, 1)])
    with pytest.raises(DegeneratePolygonError):
        Polygon2D([LocalPoint(0, 0), LocalPoint(0, 0), LocalPoint(0, 0)])


def test_polygon_reconstruction_is_stable():
    p = square(3.0)
    q = Polygon2D(p.vertices)
    assert [(v.x, v.y) for v in q.vertices] == [(v.x, v.y) for v in p.vertices]


def test_polygon_bbox():
    p = square(2.0, x0=-1.0, y0=4.0)
    assert p.bbox == (-1.0, 4.0, 1.0, 6.0)


def test_polygon_area_rectangle():
    rect = Polygon2D([LocalPoint(0, 0), LocalPoint(10, 0), LocalPoint(10, 5),
                      LocalPoint(0, 5)])
    assert polygon_area(rect) == 50.0


def test_contains_point_unit_square():
    p = square()
    assert contains_point(p, LocalPoint(0.5, 0.5))
    assert not contains_point(p, LocalPoint(1.5, 0.5))
    assert not contains_point(p, LocalPoint(-0.1, 0.5))


def test_distance_to_boundary_center_of_square():
    assert distance_to_boundary(square(), LocalPoint(0.5, 0.5)) == pytest.approx(0.5)


def test_point_segment_distance():
    a, b = LocalPoint(0, 0), LocalPoint(10, 0)
    assert point_segment_distance(LocalPoint(5, 3), a, b) == 3.0
    assert point_segment_distance(LocalPoint(-4, 3), a, b) == 5.0
    assert point_segment_distance(LocalPoint(7, 0), a, b) == 0.0


def test_self_intersection_detection():
    bow = Polygon2D([LocalPoint(0, 0), LocalPoint(2, 2), LocalPoint(2, 0),
                     LocalPoint(0, 2.5)])
    assert polygon_self_intersects(bow)
    assert not polygon_self_intersects(square())


def test_polygon_containment_with_slack():
    outer = square(10.0)
    inner = square(2.0, x0=1.0, y0=1.0)
    assert polygon_contains_polygon(outer, inner)
    assert not polygon_contains_polygon(inner, outer)
    flush = square(2.0, x0=8.0, y0=1.0)    # shares the x=10 wall
    assert polygon_contains_polygon(outer, flush)
    poking = square(2.0, x0=8.5, y0=1.0)   # cuts across the wall
    assert not polygon_contains_polygon(outer, poking)
    assert not polygon_contains_polygon(outer, poking, slack=0.6)
    # a ring running a few millimeters outside a wall (rounding noise)
    # is accepted under slack but rejected without it
    grazing = Polygon2D([LocalPoint(1, 10.001), LocalPoint(9, 10.001),
                         LocalPoint(9, 10.004), LocalPoint(1, 10.004)])
    assert not polygon_contains_polygon(outer, grazing)
    assert polygon_contains_polygon(outer, grazing, slack=0.01)


def test_triangulation_covers_concave_polygon():
    hall = Polygon2D([LocalPoint(0, 0), LocalPoint(8, 0), LocalPoint(8, 5),
                      LocalPoint(6, 5), LocalPoint(6, 2), LocalPoint(0, 2)])
    tris = triangulate(hall)
    assert len(tris) == len(hall) - 2
    total = math.fsum(abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) / 2
                      for a, b, c in tris)
    assert total == pytest.approx(polygon_area(hall), abs=1e-9)


def test_overlap_area_matches_reference_on_rectangles():
    a = Polygon2D([LocalPoint(0, 0), LocalPoint(4, 0), LocalPoint(4, 3),
                   LocalPoint(0, 3)])
    b = Polygon2D([LocalPoint(2, 1), LocalPoint(6, 1), LocalPoint(6, 5),
                   LocalPoint(2, 5)])
    got = polygons_overlap_area(a, b)
    assert got == pytest.approx(4.0, abs=1e-9)
    ref = shapely_overlap_area([(v.x, v.y) for v in a.vertices],
                               [(v.x, v.y) for v in b.vertices])
    assert got == pytest.approx(ref, abs=1e-9)


@given(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.5, 6),
                 st.floats(0.5, 6)),
       st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.5, 6),
                 st.floats(0.5, 6)))
def test_overlap_area_matches_reference_on_random_boxes(ra, rb):
    def box(x, y, w, h):
        return [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
    pa = Polygon2D([LocalPoint(*p) for p in box(*ra)])
    pb = Polygon2D([LocalPoint(*p) for p in box(*rb)])
    got = polygons_overlap_area(pa, pb)
    ref = shapely_overlap_area(box(*ra), box(*rb))
    assert got == pytest.approx(ref, abs=1e-7)


def test_polyline_helpers():
    pts = [LocalPoint(0, 0), LocalPoint(3, 0), LocalPoint(3, 4)]
    assert polyline_length(pts) == 7.0
    mid = polyline_midpoint(pts)
    assert (mid.x, mid.y) == (3.0, 0.5)
