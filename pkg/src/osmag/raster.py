"""Occupancy rasters for single leaf areas and grid shortest paths.

Grid metric: 8-connected moves, one cell per axis step and sqrt(2)
cells per diagonal step, scaled by the resolution. A diagonal move is
allowed only when both adjacent axis cells are also free, so paths never
clip a wall corner. Path costs are always reported through
:func:`step_cost`, i.e. ``(axis + diagonal * sqrt(2)) * resolution``
evaluated in one expression. Because sqrt(2) is irrational, an optimal
path's step counts are unique, so independent engines that agree on the
optimum produce bit-identical cost floats.

Grids cover the polygon bounding box padded by one cell on every side;
a cell is free when its center lies inside the polygon (boundary points
resolve by ray-casting parity). Cell (0, 0) sits at the grid origin
corner, rows grow north, columns grow east.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CellCapExceededError,
    DegeneratePolygonError,
    NoFreeCellNearPassageError,
    ResolutionTooCoarseError,
    UnreachableError,
)
from .geo import LocalPoint, polyline_midpoint

DEFAULT_RESOLUTION_M = 0.1
RASTER_CELL_CAP = 4_000_000
ANCHOR_SEARCH_RADIUS_CELLS = 10
SQRT2 = math.sqrt(2.0)

#: fixed expansion order: axis moves first, then diagonals
NEIGHBOR_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1))


def step_cost(axis_steps: int, diagonal_steps: int, resolution: float) -> float:
    """Canonical cost of a grid path from its step counts."""
    return (axis_steps + diagonal_steps * SQRT2) * resolution


def octile_distance(a: tuple[int, int], b: tuple[int, int], resolution: float) -> float:
    """Admissible and consistent heuristic for the 8-connected grid metric."""
    dr = abs(a[0] - b[0])
    dc = abs(a[1] - b[1])
    return step_cost(abs(dr - dc), min(dr, dc), resolution)


@dataclass
class OccupancyRaster:
    origin: LocalPoint        # corner of cell (0, 0)
    resolution: float
    free: np.ndarray          # bool array [rows, cols], True = traversable

    @property
    def rows(self) -> int:
        return self.free.shape[0]

    @property
    def cols(self) -> int:
        return self.free.shape[1]

    def cell_center(self, cell: tuple[int, int]) -> LocalPoint:
        r, c = cell
        return LocalPoint(self.origin.x + (c + 0.5) * self.resolution,
                          self.origin.y + (r + 0.5) * self.resolution)

    def point_cell(self, p: LocalPoint) -> tuple[int, int]:
        return (int(math.floor((p.y - self.origin.y) / self.resolution)),
                int(math.floor((p.x - self.origin.x) / self.resolution)))

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.rows and 0 <= c < self.cols

    def is_free(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and bool(self.free[cell])

    def to_pgm(self) -> bytes:
        """Binary PGM (P5) dump for desk debugging: 0 occupied, 255 free.

        Rows are written north-up, i.e. the last grid row first.
        """
        img = np.where(self.free[::-1], 255, 0).astype(np.uint8)
        header = f"P5\n{self.cols} {self.rows}\n255\n".encode("ascii")
        return header + img.tobytes()


def rasterize_area(area, model, resolution: float = DEFAULT_RESOLUTION_M) -> OccupancyRaster:
    """Occupancy grid of one area's polygon at the given resolution.

    Raises CellCapExceededError when the padded bounding box needs more
    than RASTER_CELL_CAP cells and ResolutionTooCoarseError when not a
    single cell center lands inside the polygon.
    """
    poly = area.polygon
    if poly is None:
        raise DegeneratePolygonError(f"area {area.osmag_id} has no usable polygon")
    minx, miny, maxx, maxy = poly.bbox
    origin = LocalPoint(minx - resolution, miny - resolution)
    cols = int(math.ceil((maxx - origin.x) / resolution)) + 1
    rows = int(math.ceil((maxy - origin.y) / resolution)) + 1
    if rows * cols > RASTER_CELL_CAP:
        raise CellCapExceededError(
            f"area {area.osmag_id}: {rows}x{cols} cells exceed the cap of {RASTER_CELL_CAP}")

    xs = origin.x + (np.arange(cols) + 0.5) * resolution
    ys = origin.y + (np.arange(rows) + 0.5) * resolution
    X = xs[np.newaxis, :]
    Y = ys[:, np.newaxis]
    inside = np.zeros((rows, cols), dtype=bool)
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        if a.y == b.y:
            continue
        crosses = (a.y > Y) != (b.y > Y)
        with np.errstate(invalid="ignore", divide="ignore"):
            xint = a.x + (Y - a.y) * (b.x - a.x) / (b.y - a.y)
        inside ^= crosses & (X < xint)

    if not inside.any():
        raise ResolutionTooCoarseError(
            f"area {area.osmag_id}: no cell center falls inside at {resolution} m")
    return OccupancyRaster(origin, resolution, inside)


@dataclass
class GridPath:
    cells: list[tuple[int, int]]
    cost: float
    axis_steps: int
    diagonal_steps: int


def _neighbor_ok(free: np.ndarray, r: int, c: int, dr: int, dc: int) -> bool:
    nr, nc = r + dr, c + dc
    if not (0 <= nr < free.shape[0] and 0 <= nc < free.shape[1]):
        return False
    if not free[nr, nc]:
        return False
    if dr != 0 and dc != 0 and not (free[r + dr, c] and free[r, c + dc]):
        return False  # no corner cutting
    return True


def grid_astar(raster: OccupancyRaster, start: tuple[int, int],
               goal: tuple[int, int]) -> GridPath:
    """Minimal-cost 8-connected path between two free cells.

    Octile-distance heuristic, deterministic tie-breaking by (f, g, row,
    column). Raises UnreachableError when no path exists and ValueError
    when an endpoint is not a free cell.
    """
    for name, cell in (("start", start), ("goal", goal)):
        if not raster.is_free(cell):
            raise ValueError(f"{name} cell {cell} is not free")
    if start == goal:
        return GridPath([start], 0.0, 0, 0)

    free = raster.free
    res = raster.resolution
    g: dict[tuple[int, int], float] = {start: 0.0}
    steps: dict[tuple[int, int], tuple[int, int]] = {start: (0, 0)}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    h0 = octile_distance(start, goal, res)
    heap: list[tuple[float, float, int, int]] = [(h0, 0.0, start[0], start[1])]
    closed: set[tuple[int, int]] = set()

    while heap:
        f, gc, r, c = heapq.heappop(heap)
        cell = (r, c)
        if cell in closed:
            continue
        if cell == goal:
            break
        closed.add(cell)
        a_steps, d_steps = steps[cell]
        for dr, dc in NEIGHBOR_OFFSETS:
            if not _neighbor_ok(free, r, c, dr, dc):
                continue
            nxt = (r + dr, c + dc)
            if nxt in closed:
                continue
            diagonal = dr != 0 and dc != 0
            ng = gc + (res * SQRT2 if diagonal else res)
            if ng < g.get(nxt, math.inf):
                g[nxt] = ng
                steps[nxt] = (a_steps + (0 if diagonal else 1),
                              d_steps + (1 if diagonal else 0))
                came[nxt] = cell
                heapq.heappush(heap, (ng + octile_distance(nxt, goal, res), ng, *nxt))
    else:
        raise UnreachableError(f"no grid path from {start} to {goal}")

    if goal not in steps:
        raise UnreachableError(f"no grid path from {start} to {goal}")
    path = [goal]
    while path[-1] != start:
        path.append(came[path[-1]])
    path.reverse()
    a_steps, d_steps = steps[goal]
    return GridPath(path, step_cost(a_steps, d_steps, res), a_steps, d_steps)


def grid_dijkstra_flood(raster: OccupancyRaster, start: tuple[int, int],
                        targets=None):
    """Uniform-cost flood from one free cell.

    Returns (costs, step_counts, parents): dicts keyed by cell, where
    costs carries canonical floats and parents allows path extraction
    via :func:`extract_flood_path`. When ``targets`` is given, the
    search stops as soon as all reachable targets are settled.
    """
    if not raster.is_free(start):
        raise ValueError(f"start cell {start} is not free")
    free = raster.free
    res = raster.resolution
    remaining = set(targets) if targets is not None else None
    g: dict[tuple[int, int], float] = {start: 0.0}
    steps: dict[tuple[int, int], tuple[int, int]] = {start: (0, 0)}
    parents: dict[tuple[int, int], tuple[int, int]] = {}
    heap: list[tuple[float, int, int]] = [(0.0, start[0], start[1])]
    closed: set[tuple[int, int]] = set()

    while heap:
        gc, r, c = heapq.heappop(heap)
        cell = (r, c)
        if cell in closed:
            continue
        closed.add(cell)
        if remaining is not None:
            remaining.discard(cell)
            if not remaining:
                break
        a_steps, d_steps = steps[cell]
        for dr, dc in NEIGHBOR_OFFSETS:
            if not _neighbor_ok(free, r, c, dr, dc):
                continue
            nxt = (r + dr, c + dc)
            if nxt in closed:
                continue
            diagonal = dr != 0 and dc != 0
            ng = gc + (res * SQRT2 if diagonal else res)
            if ng < g.get(nxt, math.inf):
                g[nxt] = ng
                steps[nxt] = (a_steps + (0 if diagonal else 1),
                              d_steps + (1 if diagonal else 0))
                parents[nxt] = cell
                heapq.heappush(heap, (ng, *nxt))

    costs = {cell: step_cost(a, d, res) for cell, (a, d) in steps.items()
             if cell in closed}
    counts = {cell: steps[cell] for cell in costs}
    return costs, counts, parents


def extract_flood_path(parents, start, target) -> list[tuple[int, int]]:
    path = [target]
    while path[-1] != start:
        path.append(parents[path[-1]])
    path.reverse()
    return path


def passage_anchor(passage, raster: OccupancyRaster) -> tuple[int, int]:
    """Free cell that stands in for a passage inside one area's grid.

    The nearest free cell (Euclidean distance between cell centers and
    the passage polyline midpoint, ties broken row-major) within
    ANCHOR_SEARCH_RADIUS_CELLS. Raises NoFreeCellNearPassageError when
    the search radius holds no free cell.
    """
    mid = polyline_midpoint(passage.points)
    center = raster.point_cell(mid)
    best: tuple[float, int, int] | None = None
    radius = ANCHOR_SEARCH_RADIUS_CELLS
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            cell = (center[0] + dr, center[1] + dc)
            if not raster.is_free(cell):
                continue
            cc = raster.cell_center(cell)
            d2 = (cc.x - mid.x) ** 2 + (cc.y - mid.y) ** 2
            key = (d2, cell[0], cell[1])
            if best is None or key < best:
                best = key
    if best is None:
        raise NoFreeCellNearPassageError(
            f"passage {passage.osmag_id}: no free cell within {radius} cells of its midpoint")
    return (best[1], best[2])


class SparseLeafGraph:
    """Reusable sparse form of one raster's grid graph.

    Building the CSR matrix once per leaf lets scipy answer many flood
    and pair queries on the same room without re-deriving adjacency.
    Distances come back in cell units; canonical costs are recovered by
    walking predecessors and counting axis versus diagonal steps, which
    keeps them bit-identical to :func:`grid_astar`.
    """

    def __init__(self, raster: OccupancyRaster):
        self.raster = raster
        self.matrix, self.ids, self.cell_rows, self.cell_cols = \
            _sparse_grid_graph(raster.free)

    @property
    def n(self) -> int:
        return self.cell_rows.size

    def cell_id(self, cell: tuple[int, int]) -> int:
        if not self.raster.is_free(cell):
            raise ValueError(f"cell {cell} is not free")
        return int(self.ids[cell])

    def flood(self, cell: tuple[int, int]) -> "FloodField":
        from scipy.sparse.csgraph import dijkstra

        src = self.cell_id(cell)
        dist, pred = dijkstra(self.matrix, directed=False, indices=src,
                              return_predecessors=True)
        return FloodField(self, cell, src, dist, pred)


@dataclass
class FloodField:
    """One-to-all grid distances from a source cell, path-recoverable."""

    graph: SparseLeafGraph
    source: tuple[int, int]
    source_id: int
    dist: np.ndarray
    pred: np.ndarray

    def reaches(self, cell: tuple[int, int]) -> bool:
        return (self.graph.raster.is_free(cell)
                and bool(np.isfinite(self.dist[self.graph.cell_id(cell)])))

    def steps_to(self, cell: tuple[int, int]) -> tuple[int, int] | None:
        """(axis, diagonal) step counts of the optimal path, or None."""
        tid = self.graph.cell_id(cell)
        if not np.isfinite(self.dist[tid]):
            return None
        axis = diag = 0
        rr, cc, pred = self.graph.cell_rows, self.graph.cell_cols, self.pred
        node = tid
        while node != self.source_id:
            prev = int(pred[node])
            if prev < 0:
                return None
            if rr[node] != rr[prev] and cc[node] != cc[prev]:
                diag += 1
            else:
                axis += 1
            node = prev
        return axis, diag

    def cost_to(self, cell: tuple[int, int]) -> float | None:
        got = self.steps_to(cell)
        if got is None:
            return None
        return step_cost(got[0], got[1], self.graph.raster.resolution)

    def path_to(self, cell: tuple[int, int]) -> list[tuple[int, int]]:
        tid = self.graph.cell_id(cell)
        if not np.isfinite(self.dist[tid]):
            raise UnreachableError(f"no grid path from {self.source} to {cell}")
        rr, cc, pred = self.graph.cell_rows, self.graph.cell_cols, self.pred
        chain = [tid]
        while chain[-1] != self.source_id:
            chain.append(int(pred[chain[-1]]))
        chain.reverse()
        return [(int(rr[i]), int(cc[i])) for i in chain]


def _sparse_grid_graph(free: np.ndarray):
    """CSR adjacency of the free cells, edge weights in cell units."""
    from scipy.sparse import csr_matrix

    rows, cols = free.shape
    ids = np.full((rows, cols), -1, dtype=np.int64)
    rr, cc = np.nonzero(free)
    n = rr.size
    ids[rr, cc] = np.arange(n)

    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    ws: list[np.ndarray] = []

    def add(mask: np.ndarray, dr: int, dc: int, weight: float) -> None:
        r, c = np.nonzero(mask)
        if r.size:
            us.append(ids[r, c])
            vs.append(ids[r + dr, c + dc])
            ws.append(np.full(r.size, weight))

    add(free[:, :-1] & free[:, 1:], 0, 1, 1.0)                      # east
    add(free[:-1, :] & free[1:, :], 1, 0, 1.0)                      # south (row + 1)
    # diagonals respect the corner rule: both axis cells must be free
    se = free[:-1, :-1] & free[1:, 1:] & free[:-1, 1:] & free[1:, :-1]
    add(np.pad(se, ((0, 1), (0, 1)), constant_values=False), 1, 1, SQRT2)
    sw = free[:-1, 1:] & free[1:, :-1] & free[:-1, :-1] & free[1:, 1:]
    add(np.pad(sw, ((0, 1), (1, 0)), constant_values=False), 1, -1, SQRT2)

    if us:
        u = np.concatenate(us)
        v = np.concatenate(vs)
        w = np.concatenate(ws)
    else:
        u = v = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    graph = csr_matrix((w, (u, v)), shape=(n, n))
    return graph, ids, rr, cc


def batched_grid_costs(raster: OccupancyRaster, sources: list[tuple[int, int]],
                       targets: list[tuple[int, int]],
                       graph: SparseLeafGraph | None = None):
    """All source-to-target canonical costs in one sparse Dijkstra sweep.

    Used for precomputing passage pair tables, where one small grid
    serves many queries; costs are recovered from predecessor walks so
    they match :func:`grid_astar` bit for bit. Returns a dict keyed by
    (source index, target index); unreachable pairs are absent.
    """
    from scipy.sparse.csgraph import dijkstra

    for cell in sources + targets:
        if not raster.is_free(cell):
            raise ValueError(f"cell {cell} is not free")
    if graph is None:
        graph = SparseLeafGraph(raster)
    ids, rr, cc = graph.ids, graph.cell_rows, graph.cell_cols
    src_ids = [int(ids[s]) for s in sources]
    tgt_ids = [int(ids[t]) for t in targets]
    dist, pred = dijkstra(graph.matrix, directed=False, indices=src_ids,
                          return_predecessors=True)

    out: dict[tuple[int, int], float] = {}
    for i in range(len(sources)):
        for j, tid in enumerate(tgt_ids):
            if not np.isfinite(dist[i, tid]):
                continue
            axis = diag = 0
            node = tid
            while node != src_ids[i]:
                prev = int(pred[i, node])
                if prev < 0:
                    break
                if rr[node] != rr[prev] and cc[node] != cc[prev]:
                    diag += 1
                else:
                    axis += 1
                node = prev
            else:
                out[(i, j)] = step_cost(axis, diag, raster.resolution)
                continue
            if tid == src_ids[i]:
                out[(i, j)] = 0.0
    return out


def area_pair_costs(area, model, resolution: float = DEFAULT_RESOLUTION_M,
                    raster: OccupancyRaster | None = None,
                    anchors: dict[str, tuple[int, int]] | None = None,
                    graph: SparseLeafGraph | None = None
                    ) -> dict[tuple[str, str], float]:
    """True traversal cost between every passage pair of one leaf area.

    Keys are (smaller id, larger id); values come from grid shortest
    paths between the passage anchor cells, so threading a non-convex
    room is priced by actual geometry rather than straight lines.
    Unreachable pairs are omitted.
    """
    pids = sorted(model.area_passages_index.get(area.osmag_id, []))
    if len(pids) < 2:
        return {}
    if raster is None:
        raster = rasterize_area(area, model, resolution)
    if anchors is None:
        anchors = {pid: passage_anchor(model.passages[pid], raster) for pid in pids}
    cells = [anchors[pid] for pid in pids]
    costs = batched_grid_costs(raster, cells, cells, graph=graph)
    out: dict[tuple[str, str], float] = {}
    for i in range(len(pids)):
        for j in range(i + 1, len(pids)):
            got = costs.get((i, j))
            if got is not None:
                out[(pids[i], pids[j])] = got
    return out
