"""Toolkit for hierarchical area maps stored as OSM-compatible XML.

Areas (closed polygons) nest into a tree via parent tags; passages
(shared boundary segments) connect sibling leaf areas; a single root
node anchors the WGS84 frame locally. On top of that structure the
package offers parsing and canonical serialization, validation,
occupancy-grid rasterization, capability-aware hierarchical route
planning across floors, map merging, and SVG rendering.
"""

from . import errors
from .errors import OsmagError
from .geo import LocalPoint, Polygon2D, from_local, to_local
from .io import OsmDocument, parse_osm, serialize
from .merge import MergeReport, merge_maps
from .model import (
    Area,
    AreaType,
    Diagnostic,
    MapModel,
    Passage,
    build_model,
    document_from_model,
)
from .planner import (
    BLOCKED,
    BUILTIN_PROFILES,
    CapabilityProfile,
    GraphEdge,
    HierarchicalCostIndex,
    PassageGraph,
    Route,
    RouteLeg,
    Rule,
    apply_profile,
    build_passage_graph,
    load_profile,
    plan,
    precompute_hierarchy,
)
from .raster import (
    DEFAULT_RESOLUTION_M,
    GridPath,
    OccupancyRaster,
    grid_astar,
    rasterize_area,
)
from .render import RenderStyle, render_svg

__version__ = "0.1.0"

__all__ = [
    "Area",
    "AreaType",
    "BLOCKED",
    "BUILTIN_PROFILES",
    "CapabilityProfile",
    "DEFAULT_RESOLUTION_M",
    "Diagnostic",
    "GraphEdge",
    "GridPath",
    "HierarchicalCostIndex",
    "LocalPoint",
    "MapModel",
    "MergeReport",
    "OccupancyRaster",
    "OsmDocument",
    "OsmagError",
    "Passage",
    "PassageGraph",
    "Polygon2D",
    "Route",
    "RouteLeg",
    "Rule",
    "RenderStyle",
    "apply_profile",
    "build_model",
    "build_passage_graph",
    "document_from_model",
    "errors",
    "from_local",
    "grid_astar",
    "load_profile",
    "merge_maps",
    "parse_osm",
    "plan",
    "precompute_hierarchy",
    "rasterize_area",
    "render_svg",
    "serialize",
    "to_local",
    "__version__",
]
