"""Command-line interface: ``conediff run|verify|arc|threshold|sweep``.

Exit codes: 0 success, 1 a check failed, 2 configuration or input error,
3 the step size fell below its floor.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .diagnostics import (
    InsufficientData,
    blowup_exponent,
    check_bounds,
    decay_margin_without_omega2,
    kosc_decay_rate,
    kosc_margin,
    smallness_threshold,
)
from .flow import RunResult, TerminationKind, run
from .geometry import ArcSpec, BoundaryViolation, Cone, DegenerateCurve, make_arc
from .io import render_svg, snapshot_document, view_box, write_series, write_snapshot

__all__ = ["AuditLine", "audit", "main", "sweep_one"]

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_FLOOR = 0, 1, 2, 3


@dataclass(frozen=True)
class AuditLine:
    name: str
    status: str  # PASS, FAIL or INFO
    detail: str

    def line(self) -> str:
        return f"{self.name:<28s} {self.status:<5s} {self.detail}"


def audit(result: RunResult, config: RunConfig) -> list[AuditLine]:
    """Conservation, monotonicity and bound checks for a finished run.

    ``K_osc`` monotonicity and the decay bounds are asserted only when the
    initial curve is below the smallness threshold; otherwise they are
    reported as INFO.  The bounds are also INFO for ``m != 1``, for which
    they were not derived.
    """
    ck = config.checks
    recs = result.records
    r0 = recs[0]
    A = np.array([r.A for r in recs])
    L = np.array([r.L for r in recs])
    W = np.array([r.omega for r in recs])
    K = np.array([r.Kosc for r in recs])
    below = kosc_margin(r0) > 0.0
    out = []

    def add(name, ok, detail, info=False):
        out.append(AuditLine(name, "INFO" if info else ("PASS" if ok else "FAIL"), detail))

    dA = float(np.max(np.abs(A - A[0])) / A[0])
    add("area_conservation", dA <= ck.tol_A, f"max|A-A0|/A0={dA:.3e} tol={ck.tol_A:.1e}")
    dL = float(np.max(np.diff(L), initial=0.0)) / L[0]
    add("length_nonincreasing", dL <= ck.tol_L, f"max step increase/L0={dL:.3e} tol={ck.tol_L:.1e}")
    dW = float(np.max(np.abs(W - W[0])))
    add("rotation_number", dW <= ck.tol_omega, f"max|w-w0|={dW:.3e} tol={ck.tol_omega:.1e}")
    # absolute floor so that an exact arc (K0 ~ 0) is judged at round-off level
    allow = ck.tol_mono * max(K[0], 1e-12)
    dK = float(np.max(np.diff(K), initial=0.0))
    add("kosc_nonincreasing", dK <= allow, f"max step increase={dK:.3e} allowance={allow:.1e}", info=not below)
    if result.status.kind == TerminationKind.CURVATURE_BLOWUP:
        try:
            p = blowup_exponent(recs)
            add("blowup_exponent", True, f"int k^2 ~ (T-t)^(-{p:.3f}) with T = t_final (reported only)", info=True)
        except InsufficientData as exc:
            add("blowup_exponent", True, f"not fitted: {exc}", info=True)
    if ck.enable_bounds:
        delta = kosc_margin(r0)
        alt = decay_margin_without_omega2(r0.Kosc, r0.omega)
        add("decay_margin", True, f"delta={delta:+.6f} (without -8w^2 term: {alt:+.6f})", info=True)
        rep = check_bounds(recs, tol=ck.tol_bounds)
        for c in rep.checks:
            info = c.informational or config.flow.m != 1
            add(c.name, c.passed, f"worst_margin={c.worst_margin:+.3e} at t={c.t_worst:.6e}", info=info)
    return out


# --------------------------------------------------------------------------
# subcommands


def _overrides(pairs):
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _frame_name(kind, n, ext):
    return f"{kind}_{n:07d}.{ext}"


def execute(config: RunConfig, out_dir: str | None, quiet: bool = False) -> RunResult:
    """Run ``config`` and persist series, snapshots and SVG frames under ``out_dir``."""
    out = config.output
    view = {}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        if out.snapshot_every:
            os.makedirs(os.path.join(out_dir, "snapshots"), exist_ok=True)
        if out.svg_every:
            os.makedirs(os.path.join(out_dir, "frames"), exist_ok=True)

    def on_state(state, n):
        if out_dir is None:
            return
        if n == 0:
            view["box"] = view_box(state.curve)
        if out.snapshot_every and n % out.snapshot_every == 0:
            write_snapshot(os.path.join(out_dir, "snapshots", _frame_name("snap", n, "json")), state)
        if out.svg_every and n % out.svg_every == 0:
            render_svg(os.path.join(out_dir, "frames", _frame_name("frame", n, "svg")), state.curve, view=view["box"])

    result = run(config, on_state=on_state)
    if out_dir is not None:
        write_series(os.path.join(out_dir, "series.csv"), result.records, result.residuals)
        write_snapshot(os.path.join(out_dir, "final.json"), result.final)
        if out.svg_every:
            render_svg(os.path.join(out_dir, "final.svg"), result.final.curve, view=view["box"])
    if not quiet:
        print(f"status: {result.status}")
        print(f"steps: {result.n_steps} accepted, {result.n_rejected} rejected, {result.n_remesh} remeshes")
    return result


def _cmd_run(args):
    cfg = load_config(args.config, _overrides(args.set))
    out_dir = args.out or cfg.output.dir
    result = execute(cfg, out_dir)
    print(f"output: {out_dir}")
    return EXIT_FLOOR if result.status.kind == TerminationKind.STEP_FLOOR else EXIT_OK


def _cmd_verify(args):
    cfg = load_config(args.config, _overrides(args.set))
    result = execute(cfg, args.out)
    lines = audit(result, cfg)
    for a in lines:
        print(a.line())
    if result.status.kind == TerminationKind.STEP_FLOOR:
        return EXIT_FLOOR
    return EXIT_CHECK if any(a.status == "FAIL" for a in lines) else EXIT_OK


def _cmd_arc(args):
    cone = Cone(args.theta1, args.theta2)
    curve = make_arc(ArcSpec(cone, radius=args.radius, area=args.area), args.n)
    state = SimpleNamespace(curve=curve, t=0.0, dt=0.0, m=args.m)
    if args.out:
        write_snapshot(args.out, state)
    else:
        print(json.dumps(snapshot_document(state)))
    return EXIT_OK


def format_threshold(value: float) -> str:
    """Six decimals; six significant digits in exponent form below 1e-3."""
    return f"{value:.6f}" if value >= 1e-3 else f"{value:.6e}"


def _cmd_threshold(args):
    print(format_threshold(smallness_threshold(args.omega)))
    return EXIT_OK


def sweep_one(config: RunConfig, key: str, value: str, out_dir: str | None) -> dict:
    """One sweep member; module level so that it can be sent to worker processes."""
    result = execute(config, out_dir, quiet=True)
    try:
        rate = kosc_decay_rate(result.records)
    except InsufficientData:
        rate = math.nan
    r0 = result.records[0]
    return {
        "value": value,
        "kind": result.status.kind.value,
        "t_final": result.final.t,
        "Kosc0": r0.Kosc,
        "Kosc_final": result.records[-1].Kosc,
        "rate": rate,
        "bounds": "certified" if kosc_margin(r0) > 0.0 else "informational",
    }


def _sweep_configs(path, base_overrides, key, values):
    cfgs = []
    for v in values:
        ov = dict(base_overrides)
        ov[key] = v.replace(";", ",")
        cfgs.append(load_config(path, ov))
    return cfgs


def _workers(n_jobs, requested):
    cap = os.environ.get("CONEDIFF_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"CONEDIFF_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(n, n_jobs))


SUMMARY_HEADER = ("value", "kind", "t_final", "Kosc0", "Kosc_final", "rate", "bounds")


def format_summary(rows) -> list[str]:
    lines = ["{:>12s} {:>16s} {:>14s} {:>12s} {:>12s} {:>12s} {:>13s}".format(*SUMMARY_HEADER)]
    for r in rows:
        lines.append(
            f"{r['value']:>12s} {r['kind']:>16s} {r['t_final']:>14.6e} {r['Kosc0']:>12.4e} "
            f"{r['Kosc_final']:>12.4e} {r['rate']:>12.4e} {r['bounds']:>13s}"
        )
    return lines


def _cmd_sweep(args):
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values must list at least one value")
    cfgs = _sweep_configs(args.config, _overrides(args.set), args.param, values)
    root = args.out or cfgs[0].output.dir
    os.makedirs(root, exist_ok=True)
    dirs = [os.path.join(root, f"{args.param}={v}") for v in values]
    n = _workers(len(cfgs), args.workers)
    if n == 1:
        rows = [sweep_one(c, args.param, v, d) for c, v, d in zip(cfgs, values, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=n) as ex:
            # map preserves input order, so the summary does not depend on n
            rows = list(ex.map(sweep_one, cfgs, [args.param] * len(cfgs), values, dirs))
    lines = format_summary(rows)
    with open(os.path.join(root, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"# sweep over {args.param}\n" + "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_FLOOR if any(r["kind"] == TerminationKind.STEP_FLOOR.value for r in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conediff", description="Polyharmonic curve diffusion of open curves in a cone.")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("config", help="configuration file (flat 'section.key = value' lines)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration key")
        sp.add_argument("--out", help="output directory (default: output.dir)")

    sp = sub.add_parser("run", help="evolve and write series.csv, snapshots and SVG frames")
    with_config(sp)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("verify", help="evolve and audit conservation, monotonicity and bounds")
    with_config(sp)
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("arc", help="print the stationary arc as a snapshot document")
    sp.add_argument("--theta1", type=float, required=True)
    sp.add_argument("--theta2", type=float, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--radius", type=float)
    g.add_argument("--area", type=float)
    sp.add_argument("-n", type=int, default=200, help="number of segments")
    sp.add_argument("-m", type=int, default=1, help="flow order recorded in the snapshot")
    sp.add_argument("--out", help="write to this file instead of stdout")
    sp.set_defaults(func=_cmd_arc)

    sp = sub.add_parser("threshold", help="print the smallness threshold for a rotation number")
    sp.add_argument("--omega", type=float, required=True)
    sp.set_defaults(func=_cmd_threshold)

    sp = sub.add_parser("sweep", help="independent runs over one parameter, in parallel")
    with_config(sp)
    sp.add_argument("--param", required=True, help="dotted configuration key")
    sp.add_argument("--values", required=True, help="comma-separated values; use ';' inside init.modes")
    sp.add_argument("--workers", type=int, help="worker processes (capped by CONEDIFF_THREADS)")
    sp.set_defaults(func=_cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BoundaryViolation, DegenerateCurve, ValueError, OSError) as exc:
        print(f"conediff: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
