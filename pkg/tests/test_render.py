"""SVG rendering of one height level."""

import xml.etree.ElementTree as ET

import pytest

from conftest import llh, load_graph, load_model
from osmag.errors import EmptySelectionError
from osmag.planner import plan
from osmag.render import RenderStyle, render_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def parsed(svg: bytes) -> ET.Element:
    return ET.fromstring(svg.decode("utf-8"))


def test_ground_floor_render():
    m = load_model("two_rooms")
    svg = render_svg(m)
    assert svg.startswith(b'<?xml version="1.0"')
    root = parsed(svg)
    polys = root.findall(f"{SVG_NS}polygon")
    assert [p.get("data-area") for p in polys] == ["house", "r1", "r2"]
    assert polys[0].get("fill") == "#efefef"       # structure shell
    assert polys[1].get("fill") == "#dbe9f6"       # inner rooms
    doors = root.findall(f"{SVG_NS}polyline")
    assert [d.get("data-passage") for d in doors] == ["d12"]
    assert doors[0].get("stroke-dasharray") is None
    # the door runs north along x=3.2; svg y must run the opposite way
    pts = [tuple(map(float, p.split(","))) for p in doors[0].get("points").split()]
    assert pts[0][0] == pts[1][0] == 3.2
    assert pts[0][1] > pts[1][1]
    assert render_svg(m) == svg                    # byte-stable


def test_level_band_selects_one_floor():
    m = load_model("two_floor_house")
    ground = parsed(render_svg(m))
    ids = {p.get("data-area") for p in ground.findall(f"{SVG_NS}polygon")}
    assert ids == {"house", "f0", "c0", "ev0", "ra0", "rb0"}

    upper = parsed(render_svg(m, RenderStyle(level_band=(3.5, 4.5))))
    ids = {p.get("data-area") for p in upper.findall(f"{SVG_NS}polygon")}
    assert ids == {"f1", "c1", "ev1", "ra1", "rb1"}


def test_vertical_passages_are_dashed():
    m = load_model("two_floor_house")
    root = parsed(render_svg(m))
    dashes = {p.get("data-passage"): p.get("stroke-dasharray")
              for p in root.findall(f"{SVG_NS}polyline")}
    # onward connections to the hidden floor still show, marked dashed
    assert dashes["pst"] is not None
    assert dashes["pev"] is not None
    assert dashes["da0"] is None
    assert "da1" not in dashes                     # fully out of band


def test_route_overlay_and_markers():
    m = load_model("two_rooms")
    route = plan(m, load_graph("two_rooms"), llh(m, 0.5, 2.1), llh(m, 5.9, 2.1))
    root = parsed(render_svg(m, route=route))
    legs = [p.get("data-leg") for p in root.findall(f"{SVG_NS}polyline")
            if p.get("data-leg")]
    assert legs == ["r1", "r2"]
    markers = {c.get("data-marker") for c in root.findall(f"{SVG_NS}circle")}
    assert markers == {"route-start", "route-end"}


def test_cross_floor_route_clips_to_band():
    m = load_model("two_floor_house")
    graph = load_graph("two_floor_house")
    route = plan(m, graph, llh(m, 2.0, 4.0, 0.0), llh(m, 2.0, 4.0, 4.0))
    assert {a for a in route.area_sequence} & {"ra1", "c1", "ev1"}
    root = parsed(render_svg(m, route=route))
    legs = {p.get("data-leg") for p in root.findall(f"{SVG_NS}polyline")
            if p.get("data-leg")}
    assert "ra0" in legs
    assert not legs & {"ra1", "c1", "ev1"}         # upper floor legs clipped
    markers = {c.get("data-marker") for c in root.findall(f"{SVG_NS}circle")}
    assert markers == {"route-start"}              # goal lies off this level


def test_labels():
    m = load_model("two_rooms")
    root = parsed(render_svg(m, RenderStyle(labels=True)))
    texts = sorted(t.text for t in root.findall(f"{SVG_NS}text"))
    assert texts == ["house", "r1", "r2"]


def test_empty_band_raises():
    m = load_model("two_rooms")
    with pytest.raises(EmptySelectionError):
        render_svg(m, RenderStyle(level_band=(100.0, 101.0)))


def test_style_validation():
    with pytest.raises(ValueError):
        RenderStyle(wall_stroke_m=0.0)
    with pytest.raises(ValueError):
        RenderStyle(level_band=(1.0, -1.0))
