"""Resolved map model: areas, passages, hierarchy, validation, point location.

A map document stores areas (closed polygons) and passages (short ways
on a shared wall) as OSM ways carrying ``osmAG:*`` tags, plus exactly
one node tagged ``osmAG:type=root`` that anchors the local metric frame.
Areas form a forest through ``osmAG:parent`` links; ``structure`` areas
are outer contours that are never traversed, ``inner`` leaf areas are
the granularity at which planning happens.

Validation diagnostic codes (closed set):

==================  ========  =====================================================
code                severity  meaning
==================  ========  =====================================================
OPEN_RING           error     ring not closed or fewer than 4 node references
DEGENERATE_RING     error     fewer than 3 distinct vertices
SELF_INTERSECT      error     two non-adjacent ring edges properly cross
CONTAINMENT         error     child polygon not inside parent (beyond slack)
OVERLAP             error     same-height non-ancestor areas overlap
PASSAGE_SHARE       error     passage does not share enough geometry with its areas
BAD_PARENT          error     parent id unknown, self, or part of a cycle
ISOLATED            warning   area with neither parent nor children
NONLEAF_PASSAGE     warning   passage endpoint is not a leaf area
==================  ========  =====================================================

Structural failures that prevent building a model at all (missing root
anchor, dangling references, duplicate ids, unknown ``osmAG:type``) are
raised as exceptions from :func:`build_model`; see :mod:`osmag.errors`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import geo
from .errors import (
    DanglingAreaReferenceError,
    DanglingNodeReferenceError,
    DegeneratePolygonError,
    DuplicateNodeIdError,
    DuplicateOsmagIdError,
    InvalidTagValueError,
    MissingOsmagIdError,
    MissingRootAnchorError,
    MultipleRootAnchorsError,
    NotInAnyAreaError,
    UnknownAreaError,
    UnknownOsmagTypeError,
)
from .geo import LocalPoint, Polygon2D
from .io import OsmDocument, RawElement, RawWay

#: vertical slack when matching a query height to an area height, meters
HEIGHT_TOLERANCE_M = 0.5
#: how far a child vertex may poke out of its parent before CONTAINMENT fires, meters
CONTAINMENT_SLACK_M = 0.05
#: interior intersection area above which two same-height areas OVERLAP, square meters
OVERLAP_AREA_LIMIT_M2 = 0.05
#: distance under which two nodes count as coincident (merge, vertical passages), meters
NODE_MERGE_TOLERANCE_M = 0.05

#: tag keys resolved into structured fields rather than kept in ``tags``
STRUCTURAL_KEYS = frozenset({
    "osmAG:id", "osmAG:type", "osmAG:areatype", "osmAG:from", "osmAG:to", "osmAG:parent",
})

#: tag key/value pairs that mark a passage as vertical (height-changing)
VERTICAL_MARKERS = (("highway", "elevator"), ("highway", "steps"), ("osmAG:vertical", "yes"))


class AreaType(enum.Enum):
    INNER = "inner"
    STRUCTURE = "structure"


@dataclass(frozen=True)
class GeoNode:
    id: int
    lat: float
    lon: float
    tags: dict[str, str] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class RootAnchor:
    """The node that anchors the local metric frame."""

    node_id: int
    lat: float
    lon: float


@dataclass
class Area:
    osmag_id: str
    way_id: int
    ring: tuple[int, ...]
    area_type: AreaType
    parent: str | None
    height: float
    tags: dict[str, str]
    way_attrs: dict[str, str]
    polygon: Polygon2D | None

    @property
    def is_structure(self) -> bool:
        return self.area_type is AreaType.STRUCTURE


@dataclass
class Passage:
    osmag_id: str
    way_id: int
    polyline: tuple[int, ...]
    from_area: str
    to_area: str
    tags: dict[str, str]
    way_attrs: dict[str, str]
    points: tuple[LocalPoint, ...]

    @property
    def is_vertical(self) -> bool:
        return any(self.tags.get(k) == v for k, v in VERTICAL_MARKERS)

    def other_area(self, area_id: str) -> str:
        return self.to_area if area_id == self.from_area else self.from_area


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.upper()} {self.code} {self.subject}: {self.message}"


def _parse_height(way: RawWay) -> float | None:
    raw = way.tags.get("height")
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        raise InvalidTagValueError(
            f"way {way.id}: height={raw!r} is not a number") from None


class MapModel:
    """Immutable resolved map. Build with :func:`build_model`.

    Everything metric lives in the local frame of :attr:`root`; use
    :meth:`to_local` / :meth:`from_local` to convert. Pass-through
    payload (plain OSM ways, relations) is retained and round-trips
    through :func:`osmag.io.serialize` untouched.
    """

    def __init__(self, nodes, areas, passages, root, passthrough_ways,
                 unknown_elements, osm_attrs):
        self.nodes: dict[int, GeoNode] = nodes
        self.areas: dict[str, Area] = areas
        self.passages: dict[str, Passage] = passages
        self.root: RootAnchor = root
        self.passthrough_ways: list[RawWay] = passthrough_ways
        self.unknown_elements: list[RawElement] = unknown_elements
        self.osm_attrs: dict[str, str] = osm_attrs
        self.children_index: dict[str, list[str]] = {aid: [] for aid in areas}
        for aid in sorted(areas):
            parent = areas[aid].parent
            if parent is not None and parent in areas:
                self.children_index[parent].append(aid)
        self.area_passages_index: dict[str, list[str]] = {aid: [] for aid in areas}
        for pid in sorted(passages):
            p = passages[pid]
            for side in (p.from_area, p.to_area):
                if side in self.area_passages_index and pid not in self.area_passages_index[side]:
                    self.area_passages_index[side].append(pid)

    # --- frame conversions --------------------------------------------------

    def to_local(self, lat: float, lon: float) -> LocalPoint:
        return geo.to_local(lat, lon, self.root.lat, self.root.lon)

    def from_local(self, point: LocalPoint) -> tuple[float, float]:
        return geo.from_local(point.x, point.y, self.root.lat, self.root.lon)

    def node_point(self, node_id: int) -> LocalPoint:
        node = self.nodes[node_id]
        return self.to_local(node.lat, node.lon)

    # --- hierarchy ----------------------------------------------------------

    def _area(self, area_id: str) -> Area:
        try:
            return self.areas[area_id]
        except KeyError:
            raise UnknownAreaError(f"no area with id {area_id!r}") from None

    def parent_of(self, area_id: str) -> str | None:
        parent = self._area(area_id).parent
        return parent if parent in self.areas else None

    def children_of(self, area_id: str) -> list[str]:
        self._area(area_id)
        return list(self.children_index[area_id])

    def ancestors_of(self, area_id: str) -> list[str]:
        """Parent chain ordered child to root. Stops if a cycle is met."""
        chain: list[str] = []
        seen = {area_id}
        current = self.parent_of(area_id)
        while current is not None and current not in seen:
            chain.append(current)
            seen.add(current)
            current = self.parent_of(current)
        return chain

    def is_leaf(self, area_id: str) -> bool:
        self._area(area_id)
        return not self.children_index[area_id]

    def leaf_areas(self) -> list[str]:
        """Inner areas without children, sorted by id: the planning granularity."""
        return [aid for aid in sorted(self.areas)
                if not self.children_index[aid]
                and self.areas[aid].area_type is AreaType.INNER]

    def tree_roots(self) -> list[str]:
        """Areas without a (resolvable) parent, sorted by id."""
        return [aid for aid in sorted(self.areas) if self.parent_of(aid) is None]

    def subtree_of(self, area_id: str) -> list[str]:
        """The area and all its descendants, depth first, deterministic order."""
        out: list[str] = []
        stack = [area_id]
        seen: set[str] = set()
        while stack:
            aid = stack.pop()
            if aid in seen:
                continue
            seen.add(aid)
            out.append(aid)
            stack.extend(reversed(self.children_index.get(aid, [])))
        return out

    def area_depth(self, area_id: str) -> int:
        return len(self.ancestors_of(area_id))

    # --- point location -----------------------------------------------------

    def locate(self, point: LocalPoint, height: float = 0.0,
               height_tolerance: float = HEIGHT_TOLERANCE_M) -> str:
        """Find the leaf inner area containing a local point at a height.

        Descends the hierarchy, testing a parent polygon before its
        children. The height filter applies only to the leaf candidates,
        since an ancestor (a building contour, say) legitimately sits at
        a different height than the floors inside it. If several leaves
        match on a shared boundary, the deepest one wins, then the
        smallest id. Raises NotInAnyAreaError when nothing matches.
        """
        candidates: list[tuple[int, str]] = []

        def descend(aid: str, depth: int) -> None:
            area = self.areas[aid]
            poly = area.polygon
            if poly is not None:
                minx, miny, maxx, maxy = poly.bbox
                if not (minx - 1e-9 <= point.x <= maxx + 1e-9
                        and miny - 1e-9 <= point.y <= maxy + 1e-9):
                    return
                if not geo.contains_point(poly, point):
                    return
            children = self.children_index[aid]
            if not children:
                if (area.area_type is AreaType.INNER
                        and abs(area.height - height) <= height_tolerance):
                    candidates.append((depth, aid))
                return
            for child in children:
                descend(child, depth + 1)

        for root_id in self.tree_roots():
            descend(root_id, 0)
        if not candidates:
            raise NotInAnyAreaError(
                f"no leaf area contains ({point.x:.2f}, {point.y:.2f}) at height {height:g}")
        candidates.sort(key=lambda item: (-item[0], item[1]))
        return candidates[0][1]

    # --- validation ---------------------------------------------------------

    def validate(self) -> list[Diagnostic]:
        """Run all structural checks; returns diagnostics sorted by subject.

        Never raises for content problems: every rule violation becomes
        a Diagnostic so one run reports everything at once.
        """
        diags: list[Diagnostic] = []
        ring_ok: dict[str, bool] = {}

        for aid in sorted(self.areas):
            area = self.areas[aid]
            ok = True
            if len(area.ring) < 4 or area.ring[0] != area.ring[-1]:
                diags.append(Diagnostic("error", "OPEN_RING", aid,
                                        f"ring of {len(area.ring)} refs is not closed"))
                ok = False
            if area.polygon is None:
                diags.append(Diagnostic("error", "DEGENERATE_RING", aid,
                                        "fewer than 3 distinct vertices"))
                ok = False
            elif geo.polygon_self_intersects(area.polygon):
                diags.append(Diagnostic("error", "SELF_INTERSECT", aid,
                                        "ring edges cross each other"))
                ok = False
            ring_ok[aid] = ok

        # parent links: unknown targets, self references, cycles
        bad_parent: set[str] = set()
        for aid in sorted(self.areas):
            parent = self.areas[aid].parent
            if parent is None:
                continue
            if parent == aid or parent not in self.areas:
                diags.append(Diagnostic("error", "BAD_PARENT", aid,
                                        f"parent {parent!r} is not a valid area"))
                bad_parent.add(aid)
        for aid in sorted(self.areas):
            if aid in bad_parent:
                continue
            seen = {aid}
            current = self.areas[aid].parent
            while current is not None and current in self.areas:
                if current in seen:
                    diags.append(Diagnostic("error", "BAD_PARENT", aid,
                                            "parent chain forms a cycle"))
                    bad_parent.add(aid)
                    break
                seen.add(current)
                current = self.areas[current].parent

        # children contained in parents, with slack for digitization noise
        for aid in sorted(self.areas):
            if aid in bad_parent or not ring_ok.get(aid):
                continue
            parent = self.areas[aid].parent
            if parent is None or not ring_ok.get(parent):
                continue
            outer = self.areas[parent].polygon
            inner = self.areas[aid].polygon
            if outer is None or inner is None:
                continue
            if not geo.polygon_contains_polygon(outer, inner, CONTAINMENT_SLACK_M):
                diags.append(Diagnostic("error", "CONTAINMENT", aid,
                                        f"not contained in parent {parent}"))

        diags.extend(self._validate_overlaps(ring_ok))
        diags.extend(self._validate_passages())

        for aid in sorted(self.areas):
            if self.areas[aid].parent is None and not self.children_index[aid]:
                diags.append(Diagnostic("warning", "ISOLATED", aid,
                                        "area has neither parent nor children"))

        diags.sort(key=lambda d: (d.severity != "error", d.code, d.subject))
        return diags

    def _validate_overlaps(self, ring_ok: dict[str, bool]) -> list[Diagnostic]:
        """Same-height areas must not overlap unless nested in each other."""
        diags: list[Diagnostic] = []
        ids = [aid for aid in sorted(self.areas)
               if ring_ok.get(aid) and self.areas[aid].polygon is not None]
        ancestors = {aid: set(self.ancestors_of(aid)) for aid in ids}
        for i, a in enumerate(ids):
            pa = self.areas[a].polygon
            abox = pa.bbox
            for b in ids[i + 1:]:
                pb = self.areas[b].polygon
                if abs(self.areas[a].height - self.areas[b].height) > HEIGHT_TOLERANCE_M:
                    continue
                if b in ancestors[a] or a in ancestors[b]:
                    continue
                bbox = pb.bbox
                if (abox[2] <= bbox[0] + 1e-9 or bbox[2] <= abox[0] + 1e-9
                        or abox[3] <= bbox[1] + 1e-9 or bbox[3] <= abox[1] + 1e-9):
                    continue
                try:
                    overlap = geo.polygons_overlap_area(pa, pb)
                except DegeneratePolygonError:
                    continue  # already reported as SELF_INTERSECT or DEGENERATE_RING
                if overlap > OVERLAP_AREA_LIMIT_M2:
                    diags.append(Diagnostic(
                        "error", "OVERLAP", a,
                        f"overlaps {b} by {overlap:.2f} m2 at the same height"))
        return diags

    def _validate_passages(self) -> list[Diagnostic]:
        diags: list[Diagnostic] = []
        for pid in sorted(self.passages):
            p = self.passages[pid]
            for side in (p.from_area, p.to_area):
                if side in self.areas and self.children_index[side]:
                    diags.append(Diagnostic("warning", "NONLEAF_PASSAGE", pid,
                                            f"endpoint {side} is not a leaf area"))
            if p.is_vertical:
                # Walls of stacked areas are digitized separately, so a
                # vertical passage cannot share node ids; instead every
                # polyline node must coincide in the plane with a ring
                # node of each endpoint area.
                for side in (p.from_area, p.to_area):
                    if side not in self.areas:
                        continue
                    ring_pts = [self.node_point(r) for r in self.areas[side].ring
                                if r in self.nodes]
                    for ref in p.polyline:
                        if ref not in self.nodes:
                            continue
                        pt = self.node_point(ref)
                        if not any(abs(pt.x - rp.x) <= NODE_MERGE_TOLERANCE_M
                                   and abs(pt.y - rp.y) <= NODE_MERGE_TOLERANCE_M
                                   for rp in ring_pts):
                            diags.append(Diagnostic(
                                "error", "PASSAGE_SHARE", pid,
                                f"vertical passage node {ref} does not coincide "
                                f"with any ring node of {side}"))
                            break
            else:
                for side in (p.from_area, p.to_area):
                    if side not in self.areas:
                        continue
                    shared = set(p.polyline) & set(self.areas[side].ring)
                    if len(shared) < 2:
                        diags.append(Diagnostic(
                            "error", "PASSAGE_SHARE", pid,
                            f"shares {len(shared)} node(s) with {side}, needs 2"))
        return diags

    # --- document reconstruction -------------------------------------------

    def total_inner_leaf_area(self) -> float:
        return sum(geo.polygon_area(self.areas[aid].polygon)
                   for aid in self.leaf_areas()
                   if self.areas[aid].polygon is not None)

    def height_levels(self) -> list[float]:
        return sorted({self.areas[aid].height for aid in self.areas})


def build_model(doc: OsmDocument) -> MapModel:
    """Resolve a parsed document into a MapModel.

    Raises BuildError subclasses for structural problems that make the
    document unusable: no or multiple root anchors, duplicate node or
    map ids, references to nodes or areas that do not exist, and ways
    with an unknown ``osmAG:type``. Geometric or hierarchical rule
    violations do not raise; they surface later via ``validate()``.
    """
    nodes: dict[int, GeoNode] = {}
    for raw in doc.nodes:
        if raw.id in nodes:
            raise DuplicateNodeIdError(f"node id {raw.id} appears twice")
        nodes[raw.id] = GeoNode(raw.id, raw.lat, raw.lon, dict(raw.tags), dict(raw.attrs))

    anchors = [n for n in doc.nodes if n.tags.get("osmAG:type") == "root"]
    if not anchors:
        raise MissingRootAnchorError("no node tagged osmAG:type=root")
    if len(anchors) > 1:
        raise MultipleRootAnchorsError(
            f"{len(anchors)} root anchor nodes, expected exactly one")
    root = RootAnchor(anchors[0].id, anchors[0].lat, anchors[0].lon)

    area_specs: list[tuple[RawWay, str]] = []
    passage_specs: list[tuple[RawWay, str]] = []
    passthrough: list[RawWay] = []
    seen_ids: set[str] = set()
    for way in doc.ways:
        kind = way.tags.get("osmAG:type")
        if kind is None:
            passthrough.append(way)
            continue
        if kind not in ("area", "passage"):
            raise UnknownOsmagTypeError(f"way {way.id}: osmAG:type={kind!r}")
        osmag_id = way.tags.get("osmAG:id")
        if osmag_id is None:
            raise MissingOsmagIdError(f"way {way.id} has no osmAG:id")
        if osmag_id in seen_ids:
            raise DuplicateOsmagIdError(f"osmAG:id {osmag_id!r} appears twice")
        seen_ids.add(osmag_id)
        for ref in way.refs:
            if ref not in nodes:
                raise DanglingNodeReferenceError(
                    f"way {way.id} references missing node {ref}",
                    way=way.id, node=ref)
        (area_specs if kind == "area" else passage_specs).append((way, osmag_id))

    areas: dict[str, Area] = {}
    raw_heights: dict[str, float | None] = {}
    for way, osmag_id in area_specs:
        areatype_raw = way.tags.get("osmAG:areatype", "inner")
        try:
            area_type = AreaType(areatype_raw)
        except ValueError:
            raise UnknownOsmagTypeError(
                f"way {way.id}: osmAG:areatype={areatype_raw!r}") from None
        ring = way.refs
        ring_for_polygon = ring[:-1] if len(ring) >= 2 and ring[0] == ring[-1] else ring
        polygon: Polygon2D | None
        try:
            polygon = Polygon2D([
                geo.to_local(nodes[r].lat, nodes[r].lon, root.lat, root.lon)
                for r in ring_for_polygon])
        except (DegeneratePolygonError, ValueError):
            polygon = None
        tags = {k: v for k, v in way.tags.items() if k not in STRUCTURAL_KEYS}
        areas[osmag_id] = Area(
            osmag_id=osmag_id, way_id=way.id, ring=ring, area_type=area_type,
            parent=way.tags.get("osmAG:parent"), height=0.0, tags=tags,
            way_attrs=dict(way.attrs), polygon=polygon)
        raw_heights[osmag_id] = _parse_height(way)

    _resolve_heights(areas, raw_heights)

    passages: dict[str, Passage] = {}
    for way, osmag_id in passage_specs:
        from_area = way.tags.get("osmAG:from")
        to_area = way.tags.get("osmAG:to")
        if from_area is None or to_area is None:
            raise DanglingAreaReferenceError(
                f"passage {osmag_id} lacks osmAG:from/osmAG:to")
        for side in (from_area, to_area):
            if side not in areas:
                raise DanglingAreaReferenceError(
                    f"passage {osmag_id} references missing area {side!r}")
        if from_area == to_area:
            raise InvalidTagValueError(
                f"passage {osmag_id} connects {from_area!r} to itself")
        points = tuple(geo.to_local(nodes[r].lat, nodes[r].lon, root.lat, root.lon)
                       for r in way.refs)
        tags = {k: v for k, v in way.tags.items() if k not in STRUCTURAL_KEYS}
        passages[osmag_id] = Passage(
            osmag_id=osmag_id, way_id=way.id, polyline=way.refs,
            from_area=from_area, to_area=to_area, tags=tags,
            way_attrs=dict(way.attrs), points=points)

    return MapModel(nodes, areas, passages, root, passthrough,
                    list(doc.unknown_elements), dict(doc.osm_attrs))


def _resolve_heights(areas: dict[str, Area], raw: dict[str, float | None]) -> None:
    """Height defaults to the parent's height, ultimately to 0 (ground)."""
    resolved: dict[str, float] = {}

    def resolve(aid: str, trail: set[str]) -> float:
        if aid in resolved:
            return resolved[aid]
        own = raw.get(aid)
        if own is not None:
            resolved[aid] = own
            return own
        parent = areas[aid].parent
        if parent is None or parent not in areas or parent in trail:
            resolved[aid] = 0.0
            return 0.0
        value = resolve(parent, trail | {aid})
        resolved[aid] = value
        return value

    for aid in areas:
        areas[aid].height = resolve(aid, {aid})


def document_from_model(model: MapModel) -> OsmDocument:
    """Reconstruct a document (for serialization) from a resolved model."""
    from .io import RawNode

    doc = OsmDocument(osm_attrs=dict(model.osm_attrs))
    for node in model.nodes.values():
        doc.nodes.append(RawNode(node.id, node.lat, node.lon,
                                 dict(node.tags), dict(node.attrs)))
    for area in model.areas.values():
        tags = {"osmAG:id": area.osmag_id, "osmAG:type": "area",
                "osmAG:areatype": area.area_type.value}
        if area.parent is not None:
            tags["osmAG:parent"] = area.parent
        tags.update(area.tags)
        doc.ways.append(RawWay(area.way_id, area.ring, tags, dict(area.way_attrs)))
    for p in model.passages.values():
        tags = {"osmAG:id": p.osmag_id, "osmAG:type": "passage",
                "osmAG:from": p.from_area, "osmAG:to": p.to_area}
        tags.update(p.tags)
        doc.ways.append(RawWay(p.way_id, p.polyline, tags, dict(p.way_attrs)))
    for way in model.passthrough_ways:
        doc.ways.append(RawWay(way.id, way.refs, dict(way.tags), dict(way.attrs)))
    doc.unknown_elements = list(model.unknown_elements)
    return doc
