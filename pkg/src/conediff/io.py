"""Time-series CSV, JSON snapshots and SVG rendering."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Cone, DiscreteCurve

__all__ = [
    "SERIES_COLUMNS",
    "SNAPSHOT_SCHEMA",
    "Snapshot",
    "read_series",
    "read_snapshot",
    "render_svg",
    "series_row",
    "snapshot_document",
    "view_box",
    "write_series",
    "write_snapshot",
]

SERIES_COLUMNS = (
    "t", "L", "A", "kbar", "omega", "Kosc", "k_l2sq", "ks_l2sq", "kss_l2sq",
    "rho_minus", "rho_plus", "dt", "r_L", "r_A", "r_kbar", "r_k2", "r_Kosc",
)
SNAPSHOT_SCHEMA = "conediff.snapshot/1"


def series_row(record, residual=None) -> list[float]:
    res = residual.as_tuple() if residual is not None else (math.nan,) * 5
    return [
        record.t, record.L, record.A, record.kbar, record.omega, record.Kosc,
        record.norms[0], record.norms[1], record.norms[2],
        record.rho_minus, record.rho_plus, record.dt, *res,
    ]


def write_series(path, records, residuals=None):
    """Write one CSV row per record; floats use ``repr`` so they round-trip exactly."""
    residuals = residuals if residuals is not None else [None] * len(records)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        for rec, res in zip(records, residuals):
            w.writerow([repr(float(v)) for v in series_row(rec, res)])


def read_series(path) -> dict[str, np.ndarray]:
    """Columns of a series CSV as float arrays keyed by header name."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SERIES_COLUMNS:
        raise ValueError(f"{path}: unexpected series header")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(SERIES_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(SERIES_COLUMNS)}


@dataclass(frozen=True)
class Snapshot:
    t: float
    m: int
    theta1: float
    theta2: float
    dt: float
    nodes: np.ndarray
    s: np.ndarray
    k: np.ndarray

    @property
    def cone(self) -> Cone:
        return Cone(self.theta1, self.theta2)


def snapshot_document(state) -> dict:
    """Snapshot of a :class:`~conediff.flow.FlowState` (or anything with ``curve``, ``t``, ``dt``, ``m``) as a JSON-ready dict."""
    curve = state.curve
    cone = curve.cone
    return {
        "schema": SNAPSHOT_SCHEMA,
        "t": float(state.t),
        "m": int(state.m),
        "theta1": cone.theta1,
        "theta2": cone.theta2,
        "dt": float(state.dt),
        "x": curve.nodes[:, 0].tolist(),
        "y": curve.nodes[:, 1].tolist(),
        "s": curve.s.tolist(),
        "k": curve.k.tolist(),
    }


def write_snapshot(path, state):
    """Write :func:`snapshot_document` of ``state`` as JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(snapshot_document(state), fh)


def read_snapshot(path) -> Snapshot:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != SNAPSHOT_SCHEMA:
        raise ValueError(f"{path}: not a {SNAPSHOT_SCHEMA} document")
    x = np.asarray(doc["x"], dtype=float)
    y = np.asarray(doc["y"], dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"{path}: x and y must be equal-length lists")
    n = len(x)
    s = np.asarray(doc.get("s", [math.nan] * n), dtype=float)
    k = np.asarray(doc.get("k", [math.nan] * n), dtype=float)
    return Snapshot(
        t=float(doc.get("t", 0.0)),
        m=int(doc.get("m", 1)),
        theta1=float(doc["theta1"]),
        theta2=float(doc["theta2"]),
        dt=float(doc.get("dt", math.nan)),
        nodes=np.column_stack([x, y]),
        s=s,
        k=k,
    )


def view_box(curve: DiscreteCurve, scale: float = 1.2) -> tuple[float, float, float, float]:
    """Bounding box of ``curve`` and the tip, grown about its centre by ``scale``.

    Computed once from the initial curve so that every frame of a run shares
    the same coordinates.
    """
    pts = np.vstack([curve.nodes, [[0.0, 0.0]]])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    mid, half = 0.5 * (lo + hi), 0.5 * scale * (hi - lo)
    half = np.maximum(half, 1e-3 * float(half.max()) or 1.0)
    return (float(mid[0] - half[0]), float(mid[1] - half[1]), float(mid[0] + half[0]), float(mid[1] + half[1]))


def render_svg(path, curve: DiscreteCurve, cone: Cone | None = None, view=None, size: int = 480):
    """Draw the two rays, a tip marker and the curve.

    The rays and the curve are ``<path>`` elements, the tip is a ``<circle>``.

    Parameters
    ----------
    view : (xmin, ymin, xmax, ymax), optional
        World window; defaults to :func:`view_box` of ``curve``.  Pass the
        window of the initial curve to keep frames comparable.
    size : int
        Width in pixels of the longer side.
    """
    cone = curve.cone if cone is None else cone
    x0, y0, x1, y1 = view_box(curve) if view is None else view
    scale = size / max(x1 - x0, y1 - y0)
    width, height = (x1 - x0) * scale, (y1 - y0) * scale
    reach = float(np.hypot(max(abs(x0), abs(x1)), max(abs(y0), abs(y1))))

    def to_d(P):
        u = (P[:, 0] - x0) * scale
        v = (y1 - P[:, 1]) * scale  # SVG y axis points down
        return "M " + " L ".join(f"{a:.4f},{b:.4f}" for a, b in zip(u, v))

    rays = [np.array([[0.0, 0.0], reach * cone.direction(r)]) for r in (1, 2)]
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" height="{height:.1f}" '
        f'viewBox="0 0 {width:.4f} {height:.4f}">',
        f'<path id="ray1" d="{to_d(rays[0])}" stroke="#555" fill="none" stroke-width="1"/>',
        f'<path id="ray2" d="{to_d(rays[1])}" stroke="#555" fill="none" stroke-width="1"/>',
        f'<circle id="tip" cx="{-x0 * scale:.4f}" cy="{y1 * scale:.4f}" r="3" fill="#555"/>',
        f'<path id="curve" d="{to_d(curve.nodes)}" stroke="#c03" fill="none" stroke-width="1.5"/>',
        "</svg>",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(body) + "\n")
