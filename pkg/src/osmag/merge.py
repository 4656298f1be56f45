"""Fusing two maps of the same site into one document.

Both inputs carry absolute WGS84 coordinates, so geometry needs no
repositioning; all distances are measured in the first map's local
frame. The second map contributes its nodes and ways under fresh
numeric ids, except that nodes lying within the merge threshold of a
structurally used node of the first map (and on a compatible height
level) are consolidated onto that node. Nodes of the first map never
move. The merged document is rebuilt and revalidated before it is
returned.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .errors import IncompatibleRootsError, ValidationFailedError
from .io import OsmDocument, RawNode, RawWay
from .model import (
    HEIGHT_TOLERANCE_M,
    NODE_MERGE_TOLERANCE_M,
    Diagnostic,
    MapModel,
    build_model,
    document_from_model,
)

#: root anchors farther apart than this are treated as different sites
ROOT_DISTANCE_LIMIT_M = 10_000.0


@dataclass
class MergeReport:
    consolidated_node_pairs: int = 0
    renamed_ids: dict[str, str] = field(default_factory=dict)
    conflicts: list[Diagnostic] = field(default_factory=list)
    #: b node id -> a node id, for every consolidated node
    consolidated_nodes: dict[int, int] = field(default_factory=dict)
    #: b node id -> fresh id in the merged document
    node_id_map: dict[int, int] = field(default_factory=dict)


def _structural_node_heights(model: MapModel) -> dict[int, set[float]]:
    """Height levels of every node referenced by an area or passage."""
    heights: dict[int, set[float]] = defaultdict(set)
    for area in model.areas.values():
        for nid in area.ring:
            heights[nid].add(area.height)
    for p in model.passages.values():
        ha = model.areas[p.from_area].height
        hb = model.areas[p.to_area].height
        for nid in p.polyline:
            heights[nid].add(ha)
            heights[nid].add(hb)
    return heights


def _heights_compatible(a: set[float], b: set[float]) -> bool:
    return any(abs(x - y) <= HEIGHT_TOLERANCE_M for x in a for y in b)


def merge_maps(a: MapModel, b: MapModel,
               node_merge_threshold: float = NODE_MERGE_TOLERANCE_M
               ) -> tuple[MapModel, MergeReport]:
    """Merge map b into map a and return the revalidated result.

    Raises IncompatibleRootsError when the root anchors are too far
    apart to be the same site, and ValidationFailedError (carrying the
    diagnostics and the report) when the merged map has errors.
    """
    try:
        b_origin = a.to_local(b.root.lat, b.root.lon)
    except ValueError as exc:
        raise IncompatibleRootsError(
            f"root anchors too far apart to share a frame: {exc}") from exc
    if math.hypot(b_origin.x, b_origin.y) > ROOT_DISTANCE_LIMIT_M:
        raise IncompatibleRootsError(
            f"root anchors {math.hypot(b_origin.x, b_origin.y):.0f} m apart "
            f"(limit {ROOT_DISTANCE_LIMIT_M:.0f} m)")

    report = MergeReport()
    doc_a = document_from_model(a)
    doc_b = document_from_model(b)

    # spatial buckets over a's structurally used nodes, cell = threshold;
    # a non-positive threshold disables consolidation entirely
    a_heights = _structural_node_heights(a)
    a_points = {nid: a.to_local(a.nodes[nid].lat, a.nodes[nid].lon)
                for nid in a_heights}
    buckets: dict[tuple[int, int], list[int]] = defaultdict(list)
    th = node_merge_threshold
    if th > 0.0:
        for nid in sorted(a_points):
            p = a_points[nid]
            buckets[(int(math.floor(p.x / th)), int(math.floor(p.y / th)))].append(nid)

    b_heights = _structural_node_heights(b)
    for b_nid in sorted(b_heights) if th > 0.0 else ():
        node = b.nodes[b_nid]
        p = a.to_local(node.lat, node.lon)
        hb = b_heights[b_nid]
        cx, cy = int(math.floor(p.x / th)), int(math.floor(p.y / th))
        best: tuple[float, int] | None = None
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for a_nid in buckets.get((cx + dx, cy + dy), ()):
                    q = a_points[a_nid]
                    d2 = (p.x - q.x) ** 2 + (p.y - q.y) ** 2
                    if d2 <= th * th and _heights_compatible(a_heights[a_nid], hb):
                        key = (d2, a_nid)
                        if best is None or key < best:
                            best = key
        if best is not None:
            report.consolidated_nodes[b_nid] = best[1]
    report.consolidated_node_pairs = len(report.consolidated_nodes)

    merged = OsmDocument(osm_attrs=dict(doc_a.osm_attrs))
    merged.nodes = [RawNode(n.id, n.lat, n.lon, dict(n.tags), dict(n.attrs))
                    for n in doc_a.nodes]
    merged.ways = [RawWay(w.id, w.refs, dict(w.tags), dict(w.attrs))
                   for w in doc_a.ways]
    merged.unknown_elements = list(doc_a.unknown_elements) + list(doc_b.unknown_elements)

    b_referenced: set[int] = set()
    for way in doc_b.ways:
        b_referenced.update(way.refs)

    next_node_id = max((n.id for n in doc_a.nodes), default=0) + 1
    for node in sorted(doc_b.nodes, key=lambda n: n.id):
        if node.id in report.consolidated_nodes:
            continue
        is_root = node.id == b.root.node_id
        if is_root and node.id not in b_referenced:
            continue  # exactly one root anchor survives: a's
        tags = dict(node.tags)
        if is_root and tags.get("osmAG:type") == "root":
            del tags["osmAG:type"]
        report.node_id_map[node.id] = next_node_id
        merged.nodes.append(RawNode(next_node_id, node.lat, node.lon,
                                    tags, dict(node.attrs)))
        next_node_id += 1

    # osmAG id collisions: suffix b's id with _m2, _m3, ... first-free
    a_ids = set(a.areas) | set(a.passages)
    b_ids = set(b.areas) | set(b.passages)
    taken = a_ids | b_ids
    for oid in sorted(b_ids & a_ids):
        k = 2
        while f"{oid}_m{k}" in taken:
            k += 1
        report.renamed_ids[oid] = f"{oid}_m{k}"
        taken.add(f"{oid}_m{k}")

    def remap_ref(ref: int) -> int:
        got = report.consolidated_nodes.get(ref)
        if got is not None:
            return got
        return report.node_id_map.get(ref, ref)

    rename = report.renamed_ids
    next_way_id = max((w.id for w in doc_a.ways), default=0) + 1
    for way in sorted(doc_b.ways, key=lambda w: w.id):
        tags = dict(way.tags)
        for key in ("osmAG:id", "osmAG:parent", "osmAG:from", "osmAG:to"):
            if key in tags and tags[key] in rename:
                tags[key] = rename[tags[key]]
        merged.ways.append(RawWay(next_way_id,
                                  tuple(remap_ref(r) for r in way.refs),
                                  tags, dict(way.attrs)))
        next_way_id += 1

    model = build_model(merged)
    diagnostics = model.validate()
    report.conflicts = [d for d in diagnostics if d.severity == "error"]
    if report.conflicts:
        raise ValidationFailedError(
            f"merged map has {len(report.conflicts)} validation errors",
            diagnostics=diagnostics, report=report)
    return model, report
