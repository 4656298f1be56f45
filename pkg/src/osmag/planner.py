"""Global route planning over the passage graph.

The search graph puts passages at the vertices: within each inner leaf
area, every pair of its passages is joined by an edge whose base cost is
the true grid shortest path between the passage anchor cells. Crossing
a passage costs the short in-plane hop between its two side anchors
(typically one grid cell, so routes remain real walkable paths rather
than teleporting through walls), plus the height difference between the
endpoint areas times the profile's vertical_cost_per_meter for vertical
passages such as stairs or elevators.

Because crossing costs depend on which side a passage is approached
from, the query-time search runs over (passage id, side area id) states;
the two states of a passage are joined by its crossing edge. Virtual
START and GOAL states are wired into the start and goal leaves by grid
floods at query time.

Hierarchical speedup: every non-leaf area carries a precomputed table of
interior shortest-path costs between its boundary passages (the passages
with exactly one endpoint inside its subtree). When the search enters a
subtree that contains neither endpoint of the query and that the active
capability profile leaves untouched, the table edges replace the
leaf-level edges, so dead-end buildings cost one lookup instead of an
interior exploration. Table jumps on the final route are expanded back
to leaf-level legs, and the reported total cost is always the correctly
rounded sum of leaf-level leg and crossing costs, so planning with and
without the index yields bit-identical totals.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import time
from dataclasses import dataclass, field

from .errors import (
    GoalNotLocatedError,
    NoPathError,
    NotInAnyAreaError,
    RasterError,
    StartNotLocatedError,
)
from .geo import LocalPoint
from .model import AreaType, MapModel
from .raster import (
    ANCHOR_SEARCH_RADIUS_CELLS,
    DEFAULT_RESOLUTION_M,
    OccupancyRaster,
    SparseLeafGraph,
    batched_grid_costs,
    grid_astar,
    passage_anchor,
    rasterize_area,
)

START = "<start>"
GOAL = "<goal>"

_RULE_OPS = ("equals", "present", "gt", "ge", "lt", "le")
_RULE_EFFECTS = ("blocked", "multiplier", "add")


class _Blocked:
    """Singleton returned by apply_profile for impassable elements."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BLOCKED"

    def __bool__(self) -> bool:
        return False


BLOCKED = _Blocked()


@dataclass(frozen=True)
class Rule:
    """One capability rule: a tag selector plus a cost effect.

    key may be "*" to match any tag key. Numeric ops compare the tag
    value as a float and never match non-numeric or absent values.
    """

    key: str
    op: str
    effect: str
    value: str | float | None = None
    amount: float | None = None

    def __post_init__(self):
        if self.op not in _RULE_OPS:
            raise ValueError(f"unknown rule op {self.op!r}")
        if self.effect not in _RULE_EFFECTS:
            raise ValueError(f"unknown rule effect {self.effect!r}")
        if self.op != "present" and self.value is None:
            raise ValueError(f"rule op {self.op!r} needs a value")
        if self.effect in ("multiplier", "add"):
            if self.amount is None or float(self.amount) < 0.0:
                raise ValueError(f"effect {self.effect!r} needs a non-negative amount")

    def matches(self, tags: dict[str, str]) -> bool:
        if self.key == "*":
            values = list(tags.values())
        elif self.key in tags:
            values = [tags[self.key]]
        else:
            return False
        for v in values:
            if self.op == "present":
                return True
            if self.op == "equals":
                if v == str(self.value):
                    return True
                continue
            try:
                got = float(v)
                want = float(self.value)  # type: ignore[arg-type]
            except (TypeError, ValueError):
                continue
            if ((self.op == "gt" and got > want) or (self.op == "ge" and got >= want)
                    or (self.op == "lt" and got < want) or (self.op == "le" and got <= want)):
                return True
        return False


@dataclass(frozen=True)
class CapabilityProfile:
    """Ordered first-match-wins rule set modeling one robot's locomotion."""

    name: str = "default"
    rules: tuple[Rule, ...] = ()
    vertical_cost_per_meter: float = 1.0

    def first_match(self, tags: dict[str, str]) -> Rule | None:
        for rule in self.rules:
            if rule.matches(tags):
                return rule
        return None

    def heuristic_scale(self) -> float:
        """Largest factor that keeps a distance heuristic admissible."""
        scale = 1.0
        for rule in self.rules:
            if rule.effect == "multiplier":
                scale = min(scale, float(rule.amount))
        return scale


def apply_profile(profile: CapabilityProfile | None, tags: dict[str, str],
                  base_cost: float):
    """Adjusted cost of traversing an element, or BLOCKED."""
    if profile is None:
        return base_cost
    rule = profile.first_match(tags)
    if rule is None:
        return base_cost
    if rule.effect == "blocked":
        return BLOCKED
    if rule.effect == "multiplier":
        return base_cost * float(rule.amount)
    return base_cost + float(rule.amount)


DEFAULT_PROFILE = CapabilityProfile()

BUILTIN_PROFILES: dict[str, CapabilityProfile] = {
    "default": DEFAULT_PROFILE,
    "wheeled": CapabilityProfile("wheeled", (
        Rule("highway", "equals", "blocked", "steps"),
        Rule("kerb:height", "gt", "blocked", 0.04),
    )),
    "legged": CapabilityProfile("legged", (
        Rule("highway", "equals", "multiplier", "steps", 1.5),
    )),
}


def profile_from_dict(data: dict) -> CapabilityProfile:
    rules = tuple(
        Rule(key=r["key"], op=r["op"], effect=r["effect"],
             value=r.get("value"), amount=r.get("amount"))
        for r in data.get("rules", ()))
    return CapabilityProfile(
        name=str(data.get("name", "custom")),
        rules=rules,
        vertical_cost_per_meter=float(data.get("vertical_cost_per_meter", 1.0)))


def load_profile(name_or_path: str) -> CapabilityProfile:
    """A built-in profile by name, or a JSON profile file by path."""
    if name_or_path in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[name_or_path]
    with open(name_or_path, encoding="utf-8") as fh:
        return profile_from_dict(json.load(fh))


@dataclass(frozen=True)
class GraphEdge:
    u: str                    # passage id
    v: str                    # passage id (== u for crossing edges)
    via_area: str | None      # inner leaf for intra edges, None for crossings
    base_cost: float
    kind: str                 # "intra" | "crossing"


@dataclass
class PassageGraph:
    """Passage-vertex search graph plus the per-leaf grid data behind it."""

    resolution: float
    vertices: tuple[str, ...]                      # sorted passage ids
    edges: tuple[GraphEdge, ...]
    leaf_ids: tuple[str, ...]                      # sorted rasterized leaves
    rasters: dict[str, OccupancyRaster]
    leaf_graphs: dict[str, SparseLeafGraph]
    anchors: dict[tuple[str, str], tuple[int, int]]   # (leaf, passage) -> cell
    pair_costs: dict[str, dict[tuple[str, str], float]]
    crossing_hop: dict[str, float]                 # in-plane anchor-to-anchor m
    crossing_dh: dict[str, float]                  # |height difference| m

    def pair_cost(self, leaf: str, p: str, q: str) -> float | None:
        if p > q:
            p, q = q, p
        return self.pair_costs.get(leaf, {}).get((p, q))

    def anchor_point(self, leaf: str, pid: str) -> LocalPoint:
        return self.rasters[leaf].cell_center(self.anchors[(leaf, pid)])

    def crossing_base(self, pid: str, vertical_cost_per_meter: float = 1.0) -> float:
        return (self.crossing_hop.get(pid, 0.0)
                + self.crossing_dh.get(pid, 0.0) * vertical_cost_per_meter)


def build_passage_graph(model: MapModel,
                        resolution: float = DEFAULT_RESOLUTION_M) -> PassageGraph:
    """Rasterize every inner leaf and price every passage pair through it.

    Passages are wired only on sides that are inner leaves; a crossing
    edge exists when both sides are. Vertical passages add a crossing
    cost equal to the height difference of their endpoint areas; every
    crossing also pays the in-plane hop between its two side anchors.
    """
    leaf_ids = tuple(model.leaf_areas())
    rasters: dict[str, OccupancyRaster] = {}
    leaf_graphs: dict[str, SparseLeafGraph] = {}
    anchors: dict[tuple[str, str], tuple[int, int]] = {}
    pair_costs: dict[str, dict[tuple[str, str], float]] = {}
    edges: list[GraphEdge] = []

    for lid in leaf_ids:
        area = model.areas[lid]
        pids = sorted(model.area_passages_index.get(lid, []))
        try:
            raster = rasterize_area(area, model, resolution)
            rasters[lid] = raster
            sparse = SparseLeafGraph(raster)
            leaf_graphs[lid] = sparse
            for pid in pids:
                anchors[(lid, pid)] = passage_anchor(model.passages[pid], raster)
            costs = area_pair_table(model, lid, raster,
                                    {pid: anchors[(lid, pid)] for pid in pids},
                                    sparse)
        except RasterError as exc:
            exc.area_id = lid
            raise
        pair_costs[lid] = costs
        for (p, q), cost in sorted(costs.items()):
            edges.append(GraphEdge(p, q, lid, cost, "intra"))

    crossing_hop: dict[str, float] = {}
    crossing_dh: dict[str, float] = {}
    for pid in sorted(model.passages):
        passage = model.passages[pid]
        dh = 0.0
        if passage.is_vertical:
            dh = abs(model.areas[passage.from_area].height
                     - model.areas[passage.to_area].height)
        hop = 0.0
        ka = (passage.from_area, pid)
        kb = (passage.to_area, pid)
        if ka in anchors and kb in anchors:
            pa = rasters[passage.from_area].cell_center(anchors[ka])
            pb = rasters[passage.to_area].cell_center(anchors[kb])
            hop = math.hypot(pa.x - pb.x, pa.y - pb.y)
            edges.append(GraphEdge(pid, pid, None, hop + dh, "crossing"))
        crossing_hop[pid] = hop
        crossing_dh[pid] = dh

    return PassageGraph(
        resolution=resolution,
        vertices=tuple(sorted(model.passages)),
        edges=tuple(edges),
        leaf_ids=leaf_ids,
        rasters=rasters,
        leaf_graphs=leaf_graphs,
        anchors=anchors,
        pair_costs=pair_costs,
        crossing_hop=crossing_hop,
        crossing_dh=crossing_dh)


def area_pair_table(model: MapModel, leaf_id: str, raster: OccupancyRaster,
                    anchors: dict[str, tuple[int, int]],
                    sparse: SparseLeafGraph | None = None
                    ) -> dict[tuple[str, str], float]:
    """Grid costs between all passage anchors of one leaf, batched."""
    pids = sorted(anchors)
    if len(pids) < 2:
        return {}
    cells = [anchors[pid] for pid in pids]
    got = batched_grid_costs(raster, cells, cells, graph=sparse)
    out: dict[tuple[str, str], float] = {}
    for i in range(len(pids)):
        for j in range(i + 1, len(pids)):
            cost = got.get((i, j))
            if cost is not None:
                out[(pids[i], pids[j])] = cost
    return out


@dataclass
class AreaCostTable:
    """Interior boundary-to-boundary costs of one non-leaf area.

    costs holds each unordered pair once under its sorted key; the
    diagonal is implicitly zero. inside_leaf maps each boundary passage
    to its endpoint leaf inside the subtree, i.e. the side the table
    connects. Crossing the boundary passages themselves is not included.
    """

    area_id: str
    boundary: tuple[str, ...]
    costs: dict[tuple[str, str], float]
    inside_leaf: dict[str, str]

    def cost(self, p: str, q: str) -> float | None:
        if p == q:
            return 0.0
        if p > q:
            p, q = q, p
        return self.costs.get((p, q))


@dataclass
class HierarchicalCostIndex:
    """Per non-leaf area: boundary cost table plus subtree composition.

    subtree_leaves / interior_passages / has_interior_vertical let the
    planner decide per query whether a table is still exact under the
    active capability profile.
    """

    tables: dict[str, AreaCostTable]
    subtree_leaves: dict[str, frozenset[str]]
    interior_passages: dict[str, frozenset[str]]
    has_interior_vertical: dict[str, bool]


def _subtree_leaf_sets(model: MapModel) -> dict[str, frozenset[str]]:
    out: dict[str, frozenset[str]] = {}

    def walk(aid: str) -> frozenset[str]:
        kids = model.children_of(aid)
        if not kids:
            inner = model.areas[aid].area_type is AreaType.INNER
            leaves = frozenset([aid]) if inner else frozenset()
        else:
            acc: set[str] = set()
            for k in kids:
                acc |= walk(k)
            leaves = frozenset(acc)
        out[aid] = leaves
        return leaves

    for root in model.tree_roots():
        walk(root)
    for aid in model.areas:
        if aid not in out:
            walk(aid)
    return out


def precompute_hierarchy(model: MapModel, graph: PassageGraph) -> HierarchicalCostIndex:
    """Bottom-up boundary cost tables for every non-leaf area.

    Each area's table search runs over a compact level graph: leaf
    children contribute their passage pair costs, non-leaf children
    contribute their already computed tables, and passages interior to
    the area contribute crossing edges at base cost. The result is
    exactly the leaf-level interior shortest path, assembled without
    revisiting grids.
    """
    leaf_sets = _subtree_leaf_sets(model)
    tables: dict[str, AreaCostTable] = {}
    interior: dict[str, frozenset[str]] = {}
    has_vertical: dict[str, bool] = {}

    def boundary_of(aid: str) -> tuple[dict[str, str], frozenset[str]]:
        leaves = leaf_sets[aid]
        inside: dict[str, str] = {}
        interior_pids: set[str] = set()
        for pid, passage in model.passages.items():
            a_in = passage.from_area in leaves
            b_in = passage.to_area in leaves
            if a_in and b_in:
                interior_pids.add(pid)
            elif a_in:
                inside[pid] = passage.from_area
            elif b_in:
                inside[pid] = passage.to_area
        return inside, frozenset(interior_pids)

    nonleaf = [aid for aid in model.areas if not model.is_leaf(aid)]
    # children first: deeper areas have strictly smaller leaf sets
    nonleaf.sort(key=lambda aid: (len(leaf_sets[aid]), aid))

    for aid in nonleaf:
        inside, interior_pids = boundary_of(aid)
        interior[aid] = interior_pids
        has_vertical[aid] = any(model.passages[p].is_vertical for p in interior_pids)
        boundary = tuple(sorted(inside))

        adjacency: dict[tuple[str, str], list[tuple[tuple[str, str], float]]] = {}

        def join(a: tuple[str, str], b: tuple[str, str], cost: float) -> None:
            adjacency.setdefault(a, []).append((b, cost))
            adjacency.setdefault(b, []).append((a, cost))

        for child in model.children_of(aid):
            if model.is_leaf(child):
                for (p, q), cost in graph.pair_costs.get(child, {}).items():
                    join((p, child), (q, child), cost)
            elif child in tables:
                t = tables[child]
                for (p, q), cost in t.costs.items():
                    join((p, t.inside_leaf[p]), (q, t.inside_leaf[q]), cost)
        for pid in sorted(interior_pids):
            passage = model.passages[pid]
            # only crossings the leaf-level search could also take
            if ((passage.from_area, pid) in graph.anchors
                    and (passage.to_area, pid) in graph.anchors):
                join((pid, passage.from_area), (pid, passage.to_area),
                     graph.crossing_base(pid))

        costs: dict[tuple[str, str], float] = {}
        for i, p in enumerate(boundary):
            source = (p, inside[p])
            targets = {(q, inside[q]): q for q in boundary[i + 1:]}
            if not targets:
                continue
            dist = _dijkstra_over(adjacency, source, set(targets))
            for state, q in targets.items():
                if state in dist:
                    costs[(p, q)] = dist[state]
        tables[aid] = AreaCostTable(aid, boundary, costs, dict(inside))

    return HierarchicalCostIndex(tables, leaf_sets, interior, has_vertical)


def _dijkstra_over(adjacency, source, targets):
    """Plain Dijkstra over an explicit adjacency dict; stops when all
    reachable targets are settled. Ties break on the state key."""
    dist = {source: 0.0}
    seen: set = set()
    remaining = set(targets)
    heap = [(0.0, source)]
    while heap:
        d, s = heapq.heappop(heap)
        if s in seen:
            continue
        seen.add(s)
        remaining.discard(s)
        if not remaining:
            break
        for t, w in adjacency.get(s, ()):  # noqa: B023
            nd = d + w
            if nd < dist.get(t, math.inf):
                dist[t] = nd
                heapq.heappush(heap, (nd, t))
    return {s: d for s, d in dist.items() if s in seen}


@dataclass
class RouteLeg:
    area_id: str
    entry: str                 # passage id or START
    exit: str                  # passage id or GOAL
    polyline: list[LocalPoint]
    cost: float


@dataclass
class Route:
    total_cost: float
    legs: list[RouteLeg]
    passages_crossed: list[str]
    crossing_costs: list[float]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def area_sequence(self) -> list[str]:
        return [leg.area_id for leg in self.legs]


def _locate_leaf(model: MapModel, where: str, point: LocalPoint, height: float,
                 exc_type) -> str:
    try:
        return model.locate(point, height)
    except NotInAnyAreaError as e:
        raise exc_type(f"{where} point is not inside any area: {e}") from e


def _snap_free_cell(raster: OccupancyRaster, point: LocalPoint,
                    exc_type, what: str) -> tuple[int, int]:
    cell = raster.point_cell(point)
    if raster.is_free(cell):
        return cell
    best = None
    radius = ANCHOR_SEARCH_RADIUS_CELLS
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            cand = (cell[0] + dr, cell[1] + dc)
            if not raster.is_free(cand):
                continue
            cc = raster.cell_center(cand)
            key = ((cc.x - point.x) ** 2 + (cc.y - point.y) ** 2, cand[0], cand[1])
            if best is None or key < best:
                best = key
    if best is None:
        raise exc_type(f"{what} point has no free grid cell nearby")
    return (best[1], best[2])


def plan(model: MapModel, graph: PassageGraph,
         start: tuple[float, float, float], goal: tuple[float, float, float],
         profile: CapabilityProfile | None = None,
         index: HierarchicalCostIndex | None = None,
         heuristic: bool = True, geometry: bool = True) -> Route:
    """Capability-aware shortest route between two (lat, lon, height) points.

    With an index, unaffected subtrees are traversed through their
    precomputed tables; the returned Route is always expanded to leaf
    level and its total_cost is the correctly rounded sum of the leg and
    crossing costs, identical with and without the index. With
    ``geometry=False`` leg polylines degrade to their endpoints, which
    skips the per-leg grid path extraction; costs are unaffected.
    """
    t0 = time.perf_counter()
    if profile is None:
        profile = DEFAULT_PROFILE
    vcpm = profile.vertical_cost_per_meter

    start_pt = model.to_local(start[0], start[1])
    goal_pt = model.to_local(goal[0], goal[1])
    sid = _locate_leaf(model, "start", start_pt, start[2], StartNotLocatedError)
    gid = _locate_leaf(model, "goal", goal_pt, goal[2], GoalNotLocatedError)
    t_locate = time.perf_counter()

    if sid == gid:
        return _plan_same_leaf(model, graph, sid, start_pt, goal_pt,
                               profile, t0, t_locate)

    for lid, exc_type, what in ((sid, StartNotLocatedError, "start"),
                                (gid, GoalNotLocatedError, "goal")):
        if lid not in graph.rasters:
            raise exc_type(f"{what} leaf {lid} is not covered by the passage graph")

    area_cost_cache: dict[str, object] = {}

    def area_adjust(leaf_id: str, base: float):
        effect = area_cost_cache.get(leaf_id)
        if effect is None:
            rule = profile.first_match(model.areas[leaf_id].tags)
            effect = ("none",) if rule is None else (rule.effect, rule.amount)
            area_cost_cache[leaf_id] = effect
        if effect[0] == "none":
            return base
        if effect[0] == "blocked":
            return BLOCKED
        if effect[0] == "multiplier":
            return base * float(effect[1])
        return base + float(effect[1])

    # START/GOAL wiring: uniform-cost floods inside the two endpoint leaves
    s_raster = graph.rasters[sid]
    g_raster = graph.rasters[gid]
    s_cell = _snap_free_cell(s_raster, start_pt, StartNotLocatedError, "start")
    g_cell = _snap_free_cell(g_raster, goal_pt, GoalNotLocatedError, "goal")
    s_anchors = {pid: graph.anchors[(sid, pid)]
                 for pid in model.area_passages_index.get(sid, [])
                 if (sid, pid) in graph.anchors}
    g_anchors = {pid: graph.anchors[(gid, pid)]
                 for pid in model.area_passages_index.get(gid, [])
                 if (gid, pid) in graph.anchors}
    s_field = graph.leaf_graphs[sid].flood(s_cell)
    g_field = graph.leaf_graphs[gid].flood(g_cell)
    s_wire = {pid: s_field.cost_to(cell) for pid, cell in s_anchors.items()}
    g_wire = {pid: g_field.cost_to(cell) for pid, cell in g_anchors.items()}
    t_wire = time.perf_counter()

    # profile dirtiness, for deciding where table substitution stays exact
    dirty_leaves: set[str] = set()
    dirty_passages: set[str] = set()
    if profile.rules:
        for lid in graph.leaf_ids:
            if profile.first_match(model.areas[lid].tags) is not None:
                dirty_leaves.add(lid)
        for pid, passage in model.passages.items():
            if profile.first_match(passage.tags) is not None:
                dirty_passages.add(pid)

    clean_cache: dict[str, bool] = {}

    def table_clean(aid: str) -> bool:
        got = clean_cache.get(aid)
        if got is None:
            got = (index is not None and aid in index.tables
                   and not (index.subtree_leaves[aid] & dirty_leaves)
                   and not (index.interior_passages[aid] & dirty_passages)
                   and (vcpm == 1.0 or not index.has_interior_vertical[aid]))
            clean_cache[aid] = got
        return got

    ancestor_cache: dict[str, str | None] = {}

    def shortcut_area(leaf_id: str) -> str | None:
        """Highest ancestor whose subtree excludes both endpoints and is
        untouched by the profile; None means expand at leaf level."""
        if leaf_id in ancestor_cache:
            return ancestor_cache[leaf_id]
        found = None
        if index is not None:
            for aid in reversed(model.ancestors_of(leaf_id)):
                if aid not in index.tables:
                    continue
                leaves = index.subtree_leaves[aid]
                if sid in leaves or gid in leaves:
                    continue
                if table_clean(aid):
                    found = aid
                    break
        ancestor_cache[leaf_id] = found
        return found

    def crossing_cost(pid: str):
        passage = model.passages[pid]
        base = graph.crossing_base(pid, vcpm)
        return apply_profile(profile, passage.tags, base)

    # heuristic: straight-line in-plane distance plus vertical cost to
    # go, scaled to stay admissible under multiplier rules below 1.
    # Every edge pays at least its endpoints' in-plane displacement
    # (crossings pay the anchor hop), so this is consistent.
    start_cc = s_raster.cell_center(s_cell)
    goal_cc = g_raster.cell_center(g_cell)
    goal_h = model.areas[gid].height
    h_scale = profile.heuristic_scale()

    def h_of(state: tuple[str, str]) -> float:
        if not heuristic:
            return 0.0
        pid, lid = state
        if pid == GOAL:
            return 0.0
        if pid == START:
            p, hgt = start_cc, model.areas[sid].height
        else:
            p = graph.anchor_point(lid, pid)
            hgt = model.areas[lid].height
        d = math.hypot(p.x - goal_cc.x, p.y - goal_cc.y)
        return h_scale * (d + abs(hgt - goal_h) * vcpm)

    start_state = (START, sid)
    goal_state = (GOAL, gid)

    def neighbors(state: tuple[str, str]):
        pid, lid = state
        if pid == START:
            for qid in sorted(s_wire):
                cost = s_wire[qid]
                if cost is None:
                    continue
                adj = area_adjust(sid, cost)
                if adj is not BLOCKED:
                    yield (qid, sid), adj, ("wire_start", qid)
            return
        if pid == GOAL:
            return
        passage = model.passages[pid]
        # crossing to the other side
        other = passage.other_area(lid)
        if other in graph.rasters and (other, pid) in graph.anchors:
            cc = crossing_cost(pid)
            if cc is not BLOCKED:
                yield (pid, other), cc, ("cross", pid)
        # goal wiring from the goal leaf
        if lid == gid:
            cost = g_wire.get(pid)
            if cost is not None:
                adj = area_adjust(gid, cost)
                if adj is not BLOCKED:
                    yield goal_state, adj, ("wire_goal", pid)
        # travel within the subtree: table jump or leaf-level edges
        hid = shortcut_area(lid)
        if hid is not None:
            table = index.tables[hid]
            if pid in table.inside_leaf:
                for qid in table.boundary:
                    if qid == pid:
                        continue
                    cost = table.cost(pid, qid)
                    if cost is not None:
                        yield (qid, table.inside_leaf[qid]), cost, ("jump", hid, pid, qid)
                return
        for qid in model.area_passages_index.get(lid, []):
            if qid == pid:
                continue
            cost = graph.pair_cost(lid, pid, qid)
            if cost is None:
                continue
            adj = area_adjust(lid, cost)
            if adj is not BLOCKED:
                yield (qid, lid), adj, ("intra", lid, pid, qid)

    g_score: dict[tuple[str, str], float] = {start_state: 0.0}
    came: dict[tuple[str, str], tuple[tuple[str, str], tuple]] = {}
    heap = [(h_of(start_state), 0.0, start_state)]
    settled: set[tuple[str, str]] = set()
    while heap:
        f, d, state = heapq.heappop(heap)
        if state in settled:
            continue
        settled.add(state)
        if state == goal_state:
            break
        for nxt, w, info in neighbors(state):
            if nxt in settled:
                continue
            nd = d + w
            if nd < g_score.get(nxt, math.inf):
                g_score[nxt] = nd
                came[nxt] = (state, info)
                heapq.heappush(heap, (nd + h_of(nxt), nd, nxt))
    if goal_state not in settled:
        raise NoPathError(
            f"no route from {sid} to {gid} under profile {profile.name!r}")
    t_search = time.perf_counter()

    # walk predecessors back, then expand to leaf-level legs
    steps: list[tuple] = []
    cursor = goal_state
    while cursor != start_state:
        prev, info = came[cursor]
        steps.append(info)
        cursor = prev
    steps.reverse()

    legs: list[RouteLeg] = []
    crossed: list[str] = []
    cross_costs: list[float] = []

    def leaf_leg(lid: str, p: str, q: str) -> RouteLeg:
        r = graph.rasters[lid]
        a_p = graph.anchors[(lid, p)]
        a_q = graph.anchors[(lid, q)]
        cost = area_adjust(lid, graph.pair_cost(lid, p, q))
        if geometry:
            cells = graph.leaf_graphs[lid].flood(a_p).path_to(a_q)
        else:
            cells = [a_p, a_q]
        return RouteLeg(lid, p, q, [r.cell_center(c) for c in cells], cost)

    for info in steps:
        kind = info[0]
        if kind == "wire_start":
            qid = info[1]
            cells = (s_field.path_to(s_anchors[qid]) if geometry
                     else [s_cell, s_anchors[qid]])
            poly = [start_pt] + [s_raster.cell_center(c) for c in cells]
            legs.append(RouteLeg(sid, START, qid,
                                 poly, area_adjust(sid, s_wire[qid])))
        elif kind == "wire_goal":
            pid = info[1]
            cells = (g_field.path_to(g_anchors[pid]) if geometry
                     else [g_cell, g_anchors[pid]])
            poly = [g_raster.cell_center(c) for c in reversed(cells)] + [goal_pt]
            legs.append(RouteLeg(gid, pid, GOAL,
                                 poly, area_adjust(gid, g_wire[pid])))
        elif kind == "cross":
            pid = info[1]
            crossed.append(pid)
            cross_costs.append(crossing_cost(pid))
        elif kind == "intra":
            _, lid, p, q = info
            legs.append(leaf_leg(lid, p, q))
        elif kind == "jump":
            _, hid, p, q = info
            for item in _expand_jump(model, graph, index, hid, p, q, vcpm):
                if item[0] == "leg":
                    legs.append(leaf_leg(item[1], item[2], item[3]))
                else:
                    crossed.append(item[1])
                    cross_costs.append(crossing_cost(item[1]))
    t_end = time.perf_counter()

    total = math.fsum([leg.cost for leg in legs] + cross_costs)
    return Route(total, legs, crossed, cross_costs, timings={
        "locate": t_locate - t0,
        "wire": t_wire - t_locate,
        "search": t_search - t_wire,
        "reconstruct": t_end - t_search,
        "total": t_end - t0,
    })


def _plan_same_leaf(model, graph, lid, start_pt, goal_pt, profile,
                    t0, t_locate) -> Route:
    """Both endpoints in one leaf: a single grid search on its raster."""
    raster = graph.rasters.get(lid)
    if raster is None:
        raster = rasterize_area(model.areas[lid], model, graph.resolution)
    s_cell = _snap_free_cell(raster, start_pt, StartNotLocatedError, "start")
    g_cell = _snap_free_cell(raster, goal_pt, GoalNotLocatedError, "goal")
    t_wire = time.perf_counter()
    try:
        gp = grid_astar(raster, s_cell, g_cell)
    except Exception as exc:
        raise NoPathError(f"no grid path inside {lid}: {exc}") from exc
    cost = apply_profile(profile, model.areas[lid].tags, gp.cost)
    if cost is BLOCKED:
        raise NoPathError(f"area {lid} is blocked under profile {profile.name!r}")
    t_search = time.perf_counter()
    poly = [start_pt] + [raster.cell_center(c) for c in gp.cells] + [goal_pt]
    leg = RouteLeg(lid, START, GOAL, poly, cost)
    return Route(math.fsum([cost]), [leg], [], [], timings={
        "locate": t_locate - t0,
        "wire": t_wire - t_locate,
        "search": t_search - t_wire,
        "reconstruct": 0.0,
        "total": time.perf_counter() - t0,
    })


def _expand_jump(model: MapModel, graph: PassageGraph,
                 index: HierarchicalCostIndex, hid: str, p: str, q: str,
                 vcpm: float):
    """Re-derive the leaf-level steps behind one table edge.

    Runs the same restricted interior search the table was built from,
    but at leaf level, and yields ("leg", leaf, p, q) / ("cross", pid)
    items. Only called for subtrees the profile leaves untouched, so no
    rule effects apply inside.
    """
    leaves = index.subtree_leaves[hid]
    interior = index.interior_passages[hid]
    table = index.tables[hid]
    source = (p, table.inside_leaf[p])
    target = (q, table.inside_leaf[q])

    dist = {source: 0.0}
    came: dict[tuple[str, str], tuple[tuple[str, str], tuple]] = {}
    heap = [(0.0, source)]
    settled: set[tuple[str, str]] = set()
    while heap:
        d, state = heapq.heappop(heap)
        if state in settled:
            continue
        settled.add(state)
        if state == target:
            break
        pid, lid = state
        if pid in interior:
            other = model.passages[pid].other_area(lid)
            if (other in leaves and (other, pid) in graph.anchors
                    and (lid, pid) in graph.anchors):
                base = graph.crossing_base(pid, vcpm)
                nxt = (pid, other)
                nd = d + base
                if nxt not in settled and nd < dist.get(nxt, math.inf):
                    dist[nxt] = nd
                    came[nxt] = (state, ("cross", pid))
                    heapq.heappush(heap, (nd, nxt))
        for qid in model.area_passages_index.get(lid, []):
            if qid == pid:
                continue
            cost = graph.pair_cost(lid, pid, qid)
            if cost is None:
                continue
            nxt = (qid, lid)
            nd = d + cost
            if nxt not in settled and nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                came[nxt] = (state, ("leg", lid, pid, qid))
                heapq.heappush(heap, (nd, nxt))
    if target not in settled:
        raise NoPathError(
            f"table edge {p}->{q} of {hid} cannot be expanded at leaf level")

    items: list[tuple] = []
    cursor = target
    while cursor != source:
        prev, info = came[cursor]
        items.append(info)
        cursor = prev
    items.reverse()
    yield from items


# ---------------------------------------------------------------------------
# precompute cache sidecar

CACHE_FORMAT_VERSION = 1


def map_content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def save_cache(path: str, map_hash: str, graph: PassageGraph,
               index: HierarchicalCostIndex) -> None:
    """Persist the precomputed costs keyed by map hash and resolution.

    Rasters are deterministic to rebuild and are not stored; everything
    float goes through JSON repr, which round-trips exactly.
    """
    payload = {
        "format": CACHE_FORMAT_VERSION,
        "map_sha256": map_hash,
        "resolution": graph.resolution,
        "vertices": list(graph.vertices),
        "leaf_ids": list(graph.leaf_ids),
        "anchors": [[lid, pid, r, c] for (lid, pid), (r, c) in sorted(graph.anchors.items())],
        "pair_costs": {lid: [[p, q, cost] for (p, q), cost in sorted(costs.items())]
                       for lid, costs in sorted(graph.pair_costs.items())},
        "crossing_hop": dict(sorted(graph.crossing_hop.items())),
        "crossing_dh": dict(sorted(graph.crossing_dh.items())),
        "tables": {aid: {
            "boundary": list(t.boundary),
            "costs": [[p, q, cost] for (p, q), cost in sorted(t.costs.items())],
            "inside_leaf": dict(sorted(t.inside_leaf.items())),
        } for aid, t in sorted(index.tables.items())},
        "subtree_leaves": {aid: sorted(s) for aid, s in sorted(index.subtree_leaves.items())},
        "interior_passages": {aid: sorted(s) for aid, s in sorted(index.interior_passages.items())},
        "has_interior_vertical": dict(sorted(index.has_interior_vertical.items())),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_cache(path: str, map_hash: str, resolution: float,
               model: MapModel) -> tuple[PassageGraph, HierarchicalCostIndex] | None:
    """Load a cache sidecar; None when missing, stale, or mismatched."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, ValueError):
        return None
    if (payload.get("format") != CACHE_FORMAT_VERSION
            or payload.get("map_sha256") != map_hash
            or payload.get("resolution") != resolution):
        return None

    anchors = {(lid, pid): (r, c) for lid, pid, r, c in payload["anchors"]}
    pair_costs = {lid: {(p, q): cost for p, q, cost in triples}
                  for lid, triples in payload["pair_costs"].items()}
    rasters: dict[str, OccupancyRaster] = {}
    leaf_graphs: dict[str, SparseLeafGraph] = {}
    for lid in payload["leaf_ids"]:
        rasters[lid] = rasterize_area(model.areas[lid], model, resolution)
        leaf_graphs[lid] = SparseLeafGraph(rasters[lid])

    crossing_hop = dict(payload["crossing_hop"])
    crossing_dh = dict(payload["crossing_dh"])
    edges: list[GraphEdge] = []
    for lid in payload["leaf_ids"]:
        for (p, q), cost in sorted(pair_costs.get(lid, {}).items()):
            edges.append(GraphEdge(p, q, lid, cost, "intra"))
    for pid in sorted(crossing_hop):
        p = model.passages.get(pid)
        if (p is not None and (p.from_area, pid) in anchors
                and (p.to_area, pid) in anchors):
            edges.append(GraphEdge(pid, pid, None,
                                   crossing_hop[pid] + crossing_dh.get(pid, 0.0),
                                   "crossing"))

    graph = PassageGraph(
        resolution=resolution,
        vertices=tuple(payload["vertices"]),
        edges=tuple(edges),
        leaf_ids=tuple(payload["leaf_ids"]),
        rasters=rasters,
        leaf_graphs=leaf_graphs,
        anchors=anchors,
        pair_costs=pair_costs,
        crossing_hop=crossing_hop,
        crossing_dh=crossing_dh)
    tables = {aid: AreaCostTable(
        aid, tuple(t["boundary"]),
        {(p, q): cost for p, q, cost in t["costs"]},
        dict(t["inside_leaf"]))
        for aid, t in payload["tables"].items()}
    index = HierarchicalCostIndex(
        tables,
        {aid: frozenset(s) for aid, s in payload["subtree_leaves"].items()},
        {aid: frozenset(s) for aid, s in payload["interior_passages"].items()},
        dict(payload["has_interior_vertical"]))
    return graph, index
