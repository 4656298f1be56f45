"""Command line front end.

Exit codes: 0 success, 1 the map (or merge result) has validation
errors, 2 usage error, 3 runtime failure such as missing files, broken
XML, or an unreachable goal. Every data-producing subcommand accepts
--json for line-delimited machine-readable output (one JSON object per
line).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .errors import BuildError, EmptySelectionError, OsmagError, PlanError, \
    RasterError, ValidationFailedError, XmlSyntaxError
from .io import parse_osm, serialize
from .merge import merge_maps
from .model import HEIGHT_TOLERANCE_M, NODE_MERGE_TOLERANCE_M, build_model
from .planner import (
    DEFAULT_RESOLUTION_M,
    build_passage_graph,
    load_cache,
    load_profile,
    map_content_hash,
    plan,
    precompute_hierarchy,
    save_cache,
)
from .render import RenderStyle, render_svg


def _emit(args, obj: dict, human: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(obj, sort_keys=True))
    else:
        print(human)


def _read_file(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _load_model(path: str):
    data = _read_file(path)
    return build_model(parse_osm(data)), data


def _parse_point(text: str, flag: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(
            f"{flag} expects lat,lon[,height], got {text!r}")
    try:
        lat, lon = float(parts[0]), float(parts[1])
        height = float(parts[2]) if len(parts) == 3 else 0.0
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"{flag} expects numeric lat,lon[,height], got {text!r}") from None
    return (lat, lon, height)


def cmd_validate(args) -> int:
    try:
        model, _ = _load_model(args.file)
    except BuildError as exc:
        _emit(args, {"severity": "error", "code": exc.code, "subject": "-",
                     "message": str(exc)},
              f"ERROR {exc.code} -: {exc}")
        return 1
    diagnostics = model.validate()
    for d in diagnostics:
        _emit(args, {"severity": d.severity, "code": d.code,
                     "subject": d.subject, "message": d.message}, str(d))
    return 1 if any(d.severity == "error" for d in diagnostics) else 0


def cmd_info(args) -> int:
    model, _ = _load_model(args.file)
    depth = max((model.area_depth(aid) + 1 for aid in model.areas), default=0)
    stats = {
        "nodes": len(model.nodes),
        "areas": len(model.areas),
        "passages": len(model.passages),
        "trees": len(model.tree_roots()),
        "depth": depth,
        "inner_leaf_area_m2": round(model.total_inner_leaf_area(), 3),
        "height_levels": model.height_levels(),
    }
    if args.json:
        print(json.dumps(stats, sort_keys=True))
    else:
        for key in ("nodes", "areas", "passages", "trees", "depth"):
            print(f"{key} {stats[key]}")
        print(f"inner_leaf_area_m2 {stats['inner_leaf_area_m2']}")
        print("height_levels " + " ".join(f"{h:g}" for h in stats["height_levels"]))
    return 0


def _prepare_planning(args, model, data):
    resolution = args.resolution
    graph = index = None
    if getattr(args, "cache", None):
        got = load_cache(args.cache, map_content_hash(data), resolution, model)
        if got is not None:
            graph, index = got
    if graph is None:
        graph = build_passage_graph(model, resolution)
        index = precompute_hierarchy(model, graph)
        if getattr(args, "cache", None):
            save_cache(args.cache, map_content_hash(data), graph, index)
    return graph, index


def cmd_plan(args) -> int:
    model, data = _load_model(args.file)
    diagnostics = model.validate()
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        for d in errors:
            _emit(args, {"severity": d.severity, "code": d.code,
                         "subject": d.subject, "message": d.message}, str(d))
        return 1
    profile = load_profile(args.profile)
    graph, index = _prepare_planning(args, model, data)
    if args.no_hierarchy:
        index = None
    route = plan(model, graph, args.from_, args.to, profile=profile, index=index)

    for leg in route.legs:
        _emit(args, {"type": "leg", "area": leg.area_id, "entry": leg.entry,
                     "exit": leg.exit, "cost": leg.cost},
              f"leg {leg.area_id} {leg.entry} -> {leg.exit} {leg.cost:.3f} m")
    for pid, cost in zip(route.passages_crossed, route.crossing_costs):
        _emit(args, {"type": "cross", "passage": pid, "cost": cost},
              f"cross {pid} {cost:.3f} m")
    _emit(args, {"type": "total", "cost": route.total_cost,
                 "timings": route.timings},
          f"total {route.total_cost:.3f} m")

    if args.svg:
        band = (args.from_[2] - HEIGHT_TOLERANCE_M, args.from_[2] + HEIGHT_TOLERANCE_M)
        svg = render_svg(model, RenderStyle(level_band=band), route)
        with open(args.svg, "wb") as fh:
            fh.write(svg)
    return 0


def cmd_render(args) -> int:
    model, data = _load_model(args.file)
    band = (args.level - HEIGHT_TOLERANCE_M, args.level + HEIGHT_TOLERANCE_M)
    style_kwargs = {"level_band": band, "labels": args.labels}
    if args.style:
        with open(args.style, encoding="utf-8") as fh:
            loaded = json.load(fh)
        loaded.pop("level_band", None)
        style_kwargs.update(loaded)
        style_kwargs["level_band"] = band
        if "fill_colors" in style_kwargs:
            style_kwargs["fill_colors"] = dict(style_kwargs["fill_colors"])
    style = RenderStyle(**style_kwargs)

    route = None
    if args.route:
        halves = args.route.split("/")
        if len(halves) != 2:
            print("--route expects from/to as lat,lon,h/lat,lon,h", file=sys.stderr)
            return 2
        src = _parse_point(halves[0], "--route")
        dst = _parse_point(halves[1], "--route")
        graph = build_passage_graph(model, args.resolution)
        route = plan(model, graph, src, dst)

    svg = render_svg(model, style, route)
    with open(args.out, "wb") as fh:
        fh.write(svg)
    if not args.json:
        print(f"wrote {args.out}")
    else:
        print(json.dumps({"type": "written", "path": args.out}))
    return 0


def cmd_merge(args) -> int:
    model_a, _ = _load_model(args.a)
    model_b, _ = _load_model(args.b)
    try:
        merged, report = merge_maps(model_a, model_b, args.threshold)
    except ValidationFailedError as exc:
        for d in exc.diagnostics:
            if d.severity == "error":
                _emit(args, {"severity": d.severity, "code": d.code,
                             "subject": d.subject, "message": d.message}, str(d))
        _emit(args, {"type": "failed", "message": str(exc)}, f"merge failed: {exc}")
        return 1
    with open(args.out, "wb") as fh:
        fh.write(serialize(merged))
    _emit(args, {"type": "consolidated", "count": report.consolidated_node_pairs},
          f"consolidated {report.consolidated_node_pairs} node pairs")
    for old, new in sorted(report.renamed_ids.items()):
        _emit(args, {"type": "renamed", "old": old, "new": new},
              f"renamed {old} -> {new}")
    _emit(args, {"type": "written", "path": args.out}, f"wrote {args.out}")
    return 0


def cmd_precompute(args) -> int:
    model, data = _load_model(args.file)
    map_hash = map_content_hash(data)
    cache_path = args.out or (args.file + ".cache.json")
    if load_cache(cache_path, map_hash, args.resolution, model) is not None:
        _emit(args, {"type": "cache", "status": "valid", "path": cache_path},
              f"cache valid: {cache_path}")
        return 0
    t0 = time.perf_counter()
    graph = build_passage_graph(model, args.resolution)
    index = precompute_hierarchy(model, graph)
    elapsed = time.perf_counter() - t0
    save_cache(cache_path, map_hash, graph, index)
    _emit(args, {"type": "precompute", "seconds": elapsed,
                 "leaves": len(graph.leaf_ids), "tables": len(index.tables),
                 "path": cache_path},
          f"precomputed {len(graph.leaf_ids)} leaves, {len(index.tables)} tables "
          f"in {elapsed:.3f} s -> {cache_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osmag",
        description="Parse, validate, render, merge, and plan routes on "
                    "hierarchical area maps in OSM XML form.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a map and print diagnostics")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("info", help="print map statistics")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("plan", help="plan a route between two points")
    p.add_argument("file")
    p.add_argument("--from", dest="from_", required=True,
                   type=lambda s: _parse_point(s, "--from"),
                   help="start as lat,lon[,height]")
    p.add_argument("--to", dest="to", required=True,
                   type=lambda s: _parse_point(s, "--to"),
                   help="goal as lat,lon[,height]")
    p.add_argument("--profile", default="default",
                   help="built-in profile name or JSON profile file")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION_M)
    p.add_argument("--no-hierarchy", action="store_true",
                   help="plan without the precomputed cost tables")
    p.add_argument("--cache", help="cache sidecar to reuse or fill")
    p.add_argument("--svg", help="also write the route as an SVG overlay")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("render", help="render one height level to SVG")
    p.add_argument("file")
    p.add_argument("--level", type=float, default=0.0,
                   help="height in meters of the level to draw")
    p.add_argument("--out", required=True)
    p.add_argument("--route", help="overlay a route, lat,lon,h/lat,lon,h")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION_M)
    p.add_argument("--labels", action="store_true")
    p.add_argument("--style", help="JSON file with RenderStyle fields")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("merge", help="merge map b into map a")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--threshold", type=float, default=NODE_MERGE_TOLERANCE_M)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("precompute", help="build and cache the planning data")
    p.add_argument("file")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION_M)
    p.add_argument("-o", "--out", help="cache path (default FILE.cache.json)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_precompute)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, XmlSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (PlanError, RasterError, EmptySelectionError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except BuildError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OsmagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
