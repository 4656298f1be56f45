"""Shared fixtures and helpers for the osmag test suite.

Parsed models, passage graphs, and hierarchy indexes are cached per
fixture name because nothing in the package mutates them after
construction; tests that need a private copy load one explicitly.
"""

from __future__ import annotations

import subprocess
import sys
from functools import lru_cache
from pathlib import Path

from hypothesis import settings
from shapely.geometry import Point, Polygon

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES_DIR = TESTS_DIR / "fixtures"
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

settings.register_profile("suite", deadline=None, max_examples=25,
                          derandomize=True)
settings.load_profile("suite")

from osmag.geo import LocalPoint               # noqa: E402
from osmag.io import parse_osm                 # noqa: E402
from osmag.model import build_model            # noqa: E402
from osmag.planner import (                    # noqa: E402
    build_passage_graph, precompute_hierarchy,
)


def fixture_path(name: str) -> str:
    return str(FIXTURES_DIR / f"{name}.osm")


def fixture_bytes(name: str) -> bytes:
    return (FIXTURES_DIR / f"{name}.osm").read_bytes()


@lru_cache(maxsize=None)
def load_model(name: str):
    return build_model(parse_osm(fixture_bytes(name)))


@lru_cache(maxsize=None)
def load_graph(name: str, resolution: float = 0.1):
    return build_passage_graph(load_model(name), resolution=resolution)


@lru_cache(maxsize=None)
def load_index(name: str):
    return precompute_hierarchy(load_model(name), load_graph(name))


def llh(model, x: float, y: float, h: float = 0.0):
    """(lat, lon, height) query tuple for a local-frame point."""
    lat, lon = model.from_local(LocalPoint(x, y))
    return (lat, lon, h)


@lru_cache(maxsize=None)
def _leaf_interior(name: str, leaf_id: str, margin: float):
    verts = [(p.x, p.y) for p in load_model(name).areas[leaf_id].polygon.vertices]
    poly = Polygon(verts)
    shrunk = poly.buffer(-margin)
    if shrunk.is_empty:
        shrunk = poly.buffer(-0.05)
    if shrunk.is_empty:
        shrunk = poly
    return shrunk


def sample_point(name: str, leaf_id: str, rng, margin: float = 0.15):
    """Random interior (x, y, height) of a leaf, away from its walls."""
    model = load_model(name)
    region = _leaf_interior(name, leaf_id, margin)
    minx, miny, maxx, maxy = region.bounds
    for _ in range(2000):
        x = rng.uniform(minx, maxx)
        y = rng.uniform(miny, maxy)
        if region.contains(Point(x, y)):
            return x, y, model.areas[leaf_id].height
    c = region.representative_point()
    return c.x, c.y, model.areas[leaf_id].height


def sample_query(name: str, rng, margin: float = 0.15):
    """Random (start, goal) lat/lon/height pair over two random leaves."""
    model = load_model(name)
    leaves = sorted(model.leaf_areas())
    a = rng.choice(leaves)
    b = rng.choice(leaves)
    xa, ya, ha = sample_point(name, a, rng, margin)
    xb, yb, hb = sample_point(name, b, rng, margin)
    return llh(model, xa, ya, ha), llh(model, xb, yb, hb)


CLI_SHIM = "import sys; from osmag.cli import main; sys.exit(main(sys.argv[1:]))"


def run_cli_subprocess(args: list[str], **kwargs):
    """Drive the CLI exactly as the console script would, in a subprocess."""
    return subprocess.run([sys.executable, "-c", CLI_SHIM, *args],
                          capture_output=True, text=True, **kwargs)
