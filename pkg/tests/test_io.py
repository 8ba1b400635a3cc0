import math
import re
from types import SimpleNamespace

import numpy as np
import pytest

from conediff.config import parse_config
from conediff.diagnostics import hausdorff_to_arc
from conediff.flow import run
from conediff.geometry import ArcSpec, Cone, make_arc
from conediff.io import (
    SERIES_COLUMNS,
    read_series,
    read_snapshot,
    render_svg,
    view_box,
    write_series,
    write_snapshot,
)

RIGHT = Cone(math.pi / 2, 0.0)


@pytest.fixture(scope="module")
def short_run():
    cfg = parse_config(
        f"cone.theta1 = {math.pi / 2!r}\ncone.theta2 = 0\ninit.type = perturbed\ninit.radius = 1\n"
        "init.modes = 1:0.05\nflow.N = 40\nflow.t_end = 0.002\n"
    )
    return run(cfg)


def test_empty_series_is_header_only(tmp_path):
    p = tmp_path / "s.csv"
    write_series(p, [])
    assert p.read_bytes() == (",".join(SERIES_COLUMNS) + "\n").encode()
    data = read_series(p)
    assert all(len(v) == 0 for v in data.values())


def test_series_round_trip_is_exact(tmp_path, short_run):
    p = tmp_path / "s.csv"
    write_series(p, short_run.records, short_run.residuals)
    raw = p.read_bytes()
    assert b"\r" not in raw
    data = read_series(p)
    assert len(data["t"]) == len(short_run.records)
    assert np.array_equal(data["L"], [r.L for r in short_run.records])
    assert np.array_equal(data["Kosc"], [r.Kosc for r in short_run.records])
    assert math.isnan(data["r_L"][0]) and np.all(np.isfinite(data["r_L"][1:]))
    # writing what was read gives the same bytes
    q = tmp_path / "t.csv"
    write_series(q, short_run.records, short_run.residuals)
    assert q.read_bytes() == raw


def test_series_of_stationary_arc_has_constant_area(tmp_path):
    cfg = parse_config(
        f"cone.theta1 = {math.pi / 2!r}\ncone.theta2 = 0\ninit.type = arc\ninit.radius = 1\n"
        "flow.N = 40\nflow.t_end = 0.01\nflow.tol_c = 1e-300\n"
    )
    res = run(cfg)
    p = tmp_path / "s.csv"
    write_series(p, res.records, res.residuals)
    A = read_series(p)["A"]
    assert len(A) > 1 and np.abs(A - A[0]).max() <= 1e-12 * A[0]


def test_bad_series_header(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_series(p)


def test_snapshot_layout_and_round_trip(tmp_path):
    curve = make_arc(ArcSpec(RIGHT, radius=1.0), 8)
    state = SimpleNamespace(curve=curve, t=0.5, dt=1e-3, m=2)
    p = tmp_path / "snap.json"
    write_snapshot(p, state)
    snap = read_snapshot(p)
    assert snap.nodes.shape == (9, 2) and len(snap.s) == 9 and len(snap.k) == 9
    assert snap.s[0] == 0.0
    assert np.array_equal(snap.nodes, curve.nodes)
    assert (snap.t, snap.m, snap.dt) == (0.5, 2, 1e-3)
    assert snap.cone == RIGHT


def test_snapshot_schema_checked(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"schema": "other", "x": [], "y": []}')
    with pytest.raises(ValueError):
        read_snapshot(p)


def test_svg_structure_and_determinism(tmp_path):
    curve = make_arc(ArcSpec(RIGHT, radius=1.0), 50)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_svg(a, curve)
    render_svg(b, curve)
    text = a.read_text()
    assert len(re.findall(r"<path ", text)) == 3
    assert text.count("<circle") == 1
    assert a.read_bytes() == b.read_bytes()


def test_converged_frame_matches_arc_overlay(tmp_path):
    cfg = parse_config(
        f"cone.theta1 = {math.pi / 2!r}\ncone.theta2 = 0\ninit.type = perturbed\ninit.radius = 1\n"
        "init.modes = 1:0.05\nflow.N = 60\n"
    )
    res = run(cfg)
    box = view_box(res.snapshots[0].curve)
    size = 480
    px = size / max(box[2] - box[0], box[3] - box[1])
    radius = math.sqrt(2 * res.records[0].A / RIGHT.opening)
    assert hausdorff_to_arc(res.final.curve, radius) * px < 1.0
    render_svg(tmp_path / "f.svg", res.final.curve, view=box, size=size)
    assert (tmp_path / "f.svg").stat().st_size > 0
