"""End-to-end checks of the command line entry points."""

import json
import shutil

import pytest

from conftest import fixture_path, llh, load_model, run_cli_subprocess
from osmag import cli


def pt(m, x, y, h=0.0):
    lat, lon, hh = llh(m, x, y, h)
    return f"{lat!r},{lon!r},{hh!r}"


def jlines(out: str) -> list[dict]:
    return [json.loads(line) for line in out.splitlines() if line.strip()]


# --- validate ----------------------------------------------------------------

def test_validate_clean_map(capsys):
    assert cli.main(["validate", fixture_path("two_rooms")]) == 0
    assert capsys.readouterr().out.strip() == ""


def test_validate_reports_geometry_errors(capsys):
    assert cli.main(["validate", fixture_path("bad_overlap")]) == 1
    assert "OVERLAP" in capsys.readouterr().out
    assert cli.main(["validate", "--json", fixture_path("bad_overlap")]) == 1
    recs = jlines(capsys.readouterr().out)
    assert recs and all(set(r) == {"severity", "code", "subject", "message"}
                        for r in recs)
    assert recs[0]["code"] == "OVERLAP" and recs[0]["severity"] == "error"


def test_validate_reports_build_errors(capsys):
    assert cli.main(["validate", fixture_path("bad_duplicate_id")]) == 1
    assert "DUPLICATE_ID" in capsys.readouterr().out


def test_validate_missing_file(capsys):
    assert cli.main(["validate", "/nonexistent/nowhere.osm"]) == 3
    assert "error" in capsys.readouterr().err


# --- info --------------------------------------------------------------------

def test_info_counts(capsys):
    assert cli.main(["info", "--json", fixture_path("campus")]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["nodes"] == 4908
    assert stats["areas"] == 500
    assert stats["passages"] == 347
    assert stats["trees"] == 1

    assert cli.main(["info", "--json", fixture_path("two_trees")]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["trees"] == 2
    assert stats["height_levels"] == [0.0]

    assert cli.main(["info", "--json", fixture_path("empty_root_only")]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["areas"] == 0 and stats["passages"] == 0
    assert stats["inner_leaf_area_m2"] == 0.0


def test_info_human_output(capsys):
    assert cli.main(["info", fixture_path("two_floor_house")]) == 0
    out = capsys.readouterr().out
    assert "height_levels 0 4" in out
    assert any(line.startswith("areas ") for line in out.splitlines())


# --- plan --------------------------------------------------------------------

def test_plan_prints_route(capsys):
    m = load_model("floor_small")
    path = fixture_path("floor_small")
    args = ["plan", path, "--from", pt(m, 2.0, 8.0), "--to", pt(m, 19.5, 8.6)]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].startswith("leg k1 <start> -> d_k1 ")
    assert any(line.startswith("cross d_k1 ") for line in lines)
    assert lines[-1].startswith("total ")

    assert cli.main(args + ["--json"]) == 0
    recs = jlines(capsys.readouterr().out)
    assert recs[0]["type"] == "leg" and recs[0]["area"] == "k1"
    total = [r for r in recs if r["type"] == "total"]
    assert len(total) == 1 and total[0]["cost"] > 15.0
    assert set(total[0]["timings"]) >= {"locate", "wire", "search", "total"}

    assert cli.main(args + ["--json", "--no-hierarchy"]) == 0
    flat = jlines(capsys.readouterr().out)
    assert flat[-1]["cost"] == total[0]["cost"]


def test_plan_profile_changes_route(capsys):
    m = load_model("two_floor_house")
    path = fixture_path("two_floor_house")
    base = ["plan", path, "--from", pt(m, 2.0, 4.0, 0.0),
            "--to", pt(m, 2.0, 4.0, 4.0)]
    assert cli.main(base) == 0
    default_out = capsys.readouterr().out
    assert cli.main(base + ["--profile", "wheeled"]) == 0
    wheeled_out = capsys.readouterr().out
    # stairs are the short way up; wheels must detour through the lift
    assert any(line.startswith("cross pst ") for line in default_out.splitlines())
    assert not any(line.startswith("cross pst ")
                   for line in wheeled_out.splitlines())
    assert any(line.startswith("cross pev ") for line in wheeled_out.splitlines())


def test_plan_between_disconnected_trees(capsys):
    m = load_model("two_trees")
    rc = cli.main(["plan", fixture_path("two_trees"),
                   "--from", pt(m, 2.0, 2.5), "--to", pt(m, 16.5, 2.5)])
    assert rc == 3
    assert "NoPathError" in capsys.readouterr().err


def test_plan_refuses_invalid_map(capsys):
    m = load_model("two_rooms")   # same frame as the defect fixture
    rc = cli.main(["plan", fixture_path("bad_overlap"),
                   "--from", pt(m, 0.5, 0.5), "--to", pt(m, 5.9, 2.1)])
    assert rc == 1
    assert "OVERLAP" in capsys.readouterr().out


def test_plan_svg_sidecar(tmp_path, capsys):
    m = load_model("two_rooms")
    svg = tmp_path / "route.svg"
    rc = cli.main(["plan", fixture_path("two_rooms"),
                   "--from", pt(m, 0.5, 2.1), "--to", pt(m, 5.9, 2.1),
                   "--svg", str(svg)])
    assert rc == 0
    capsys.readouterr()
    body = svg.read_bytes()
    assert body.startswith(b"<?xml") and b'data-leg="r1"' in body


# --- render ------------------------------------------------------------------

def test_render_writes_svg(tmp_path, capsys):
    out = tmp_path / "map.svg"
    rc = cli.main(["render", fixture_path("two_floor_house"),
                   "--out", str(out), "--labels"])
    assert rc == 0
    assert f"wrote {out}" in capsys.readouterr().out
    body = out.read_bytes()
    assert b'data-area="ra0"' in body and b'data-area="ra1"' not in body
    assert b"<text" in body


def test_render_level_and_route(tmp_path, capsys):
    m = load_model("two_floor_house")
    out = tmp_path / "upper.svg"
    rc = cli.main(["render", fixture_path("two_floor_house"),
                   "--level", "4", "--out", str(out),
                   "--route", f"{pt(m, 2.0, 4.0, 4.0)}/{pt(m, 8.0, 4.0, 4.0)}"])
    assert rc == 0
    capsys.readouterr()
    body = out.read_bytes()
    assert b'data-area="ra1"' in body and b'data-area="ra0"' not in body
    assert b'data-leg="ra1"' in body


def test_render_empty_band(tmp_path, capsys):
    rc = cli.main(["render", fixture_path("two_rooms"),
                   "--level", "100", "--out", str(tmp_path / "x.svg")])
    assert rc == 3
    assert "EmptySelectionError" in capsys.readouterr().err


# --- merge -------------------------------------------------------------------

def test_merge_cli(tmp_path, capsys):
    out = tmp_path / "merged.osm"
    rc = cli.main(["merge", fixture_path("merge_a"), fixture_path("merge_b"),
                   "-o", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "consolidated 2 node pairs" in text
    assert "renamed wb -> wb_m2" in text
    assert f"wrote {out}" in text
    assert cli.main(["validate", str(out)]) == 0


def test_merge_cli_rejects_bad_result(tmp_path, capsys):
    rc = cli.main(["merge", fixture_path("merge_a"), fixture_path("merge_a"),
                   "-o", str(tmp_path / "nope.osm")])
    assert rc == 1
    text = capsys.readouterr().out
    assert "OVERLAP" in text and "merge failed" in text


# --- precompute and cache reuse ----------------------------------------------

def test_precompute_then_reuse(tmp_path, capsys):
    src = tmp_path / "floor_small.osm"
    shutil.copy(fixture_path("floor_small"), src)

    assert cli.main(["precompute", str(src)]) == 0
    first = capsys.readouterr().out
    cache = tmp_path / "floor_small.osm.cache.json"
    assert cache.exists()
    assert "precomputed" in first and str(cache) in first

    assert cli.main(["precompute", str(src)]) == 0
    assert f"cache valid: {cache}" in capsys.readouterr().out

    m = load_model("floor_small")
    args = ["plan", str(src), "--from", pt(m, 2.0, 8.0),
            "--to", pt(m, 19.5, 8.6), "--json"]
    assert cli.main(args + ["--cache", str(cache)]) == 0
    cached_total = jlines(capsys.readouterr().out)[-1]["cost"]
    assert cli.main(args) == 0
    assert jlines(capsys.readouterr().out)[-1]["cost"] == cached_total


def test_precompute_invalidates_on_content_change(tmp_path, capsys):
    src = tmp_path / "map.osm"
    shutil.copy(fixture_path("two_rooms"), src)
    cache = tmp_path / "c.json"
    assert cli.main(["precompute", str(src), "-o", str(cache)]) == 0
    capsys.readouterr()
    src.write_bytes(src.read_bytes().replace(b"tiny house", b"tiny houze"))
    assert cli.main(["precompute", str(src), "-o", str(cache)]) == 0
    assert "precomputed" in capsys.readouterr().out


# --- process-level behavior --------------------------------------------------

def test_version_subprocess():
    proc = run_cli_subprocess(["--version"])
    assert proc.returncode == 0
    assert "osmag" in proc.stdout


def test_bad_point_usage_subprocess():
    proc = run_cli_subprocess(["plan", fixture_path("two_rooms"),
                               "--from", "garbage", "--to", "1,2"])
    assert proc.returncode == 2
    assert "lat,lon" in proc.stderr
