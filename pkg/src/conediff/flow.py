"""Time integration of the polyharmonic curvature flow in a cone.

Each trial step is linearly implicit: the normal speed is taken implicit in
the positions while the metric, normals and ray reflections are frozen at the
start of the step.  A full step is compared with two half steps; the
difference is the local error estimate and the Richardson combination of the
two is kept when the step is accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import kernels
from .config import RunConfig
from .diagnostics import QuantityRecord, ResidualRecord, check_identities, normal_speed, quantity_record
from .geometry import (
    ArcSpec,
    BoundaryViolation,
    Cone,
    DegenerateCurve,
    DiscreteCurve,
    area,
    build_tables,
    equal_chord_nodes,
    length,
    make_arc,
)

__all__ = [
    "FlowState",
    "RunResult",
    "StepControl",
    "StepFloor",
    "TerminationKind",
    "TerminationStatus",
    "TipReach",
    "adapt_dt",
    "apply_boundary",
    "initial_curve",
    "normal_velocity",
    "remesh",
    "run",
    "step",
]


class TerminationKind(str, Enum):
    CONVERGED = "Converged"
    TIP_REACH = "TipReach"
    CURVATURE_BLOWUP = "CurvatureBlowup"
    TIME_LIMIT = "TimeLimit"
    STEP_FLOOR = "StepFloor"


@dataclass(frozen=True)
class TerminationStatus:
    kind: TerminationKind
    t_final: float
    detail: str = ""

    def __str__(self):
        text = f"{self.kind.value} at t={self.t_final:.6e}"
        return f"{text} ({self.detail})" if self.detail else text


class TipReach(Exception):
    """An endpoint came within ``rho_min`` of the cone tip."""

    def __init__(self, ray: int, rho: float):
        self.ray, self.rho = ray, rho
        super().__init__(f"endpoint on ray {ray} at distance {rho:.3e} from the tip")


class StepFloor(Exception):
    """The step-size controller asked for a step below ``dt_min``."""


@dataclass(frozen=True)
class StepControl:
    tol_step: float = 1e-7
    dt_min: float = 1e-14
    dt_max: float = 1e-3
    stiff_c: float | None = None
    growth: float = 1.25
    shrink: float = 0.1
    safety: float = 0.9


@dataclass(frozen=True, eq=False)
class FlowState:
    curve: DiscreteCurve
    t: float
    dt: float
    m: int = 1
    record: QuantityRecord | None = field(default=None, repr=False)

    def quantities(self) -> QuantityRecord:
        if self.record is None:
            object.__setattr__(self, "record", quantity_record(self.curve, self.t, self.dt, self.m))
        return self.record


# --------------------------------------------------------------------------
# building blocks


def normal_velocity(curve: DiscreteCurve, m: int = 1, curvature=None) -> np.ndarray:
    """Node velocities ``F sigma nu`` with ``F = (-1)^(m+1) k_{s^(2m)}``.

    ``sigma = dual / g`` equals one on a uniform polyline; it is the weight
    that makes the semi-discrete area rate vanish exactly.
    """
    F = normal_speed(curve, m, curvature)
    sigma = curve.dual / curve.g
    return (F * sigma)[:, None] * curve.nu


def apply_boundary(curve, cone: Cone, rho_min: float = 0.0) -> DiscreteCurve:
    """Project the end nodes onto their rays and rebuild the tables.

    Accepts a :class:`DiscreteCurve` or a raw node array.

    Raises
    ------
    TipReach
        If an endpoint's ray parameter drops below ``rho_min``.
    """
    X = np.array(curve.nodes if isinstance(curve, DiscreteCurve) else curve, dtype=float)
    for idx, ray in ((0, 1), (-1, 2)):
        d = cone.direction(ray)
        rho = float(np.dot(X[idx], d))
        if rho < rho_min or rho <= 0.0:
            raise TipReach(ray, rho)
        X[idx] = rho * d
    return build_tables(X, cone)


def remesh(curve: DiscreteCurve, n: int | None = None) -> DiscreteCurve:
    """Redistribute nodes to equal chords along a monotone cubic interpolant."""
    return build_tables(equal_chord_nodes(curve.nodes, n), curve.cone)


def adapt_dt(state: FlowState, error_estimate: float, control: StepControl) -> float:
    """Next step size from the local error estimate.

    ``dt * min(growth, max(shrink, safety * (tol / err)^(1/2)))``, clamped
    to ``[dt_min, dt_max]`` and, if ``control.stiff_c`` is set, to
    ``stiff_c * ds^(2m+2)`` with ``ds`` the mean chord.
    """
    if error_estimate <= 0.0:
        factor = control.growth
    else:
        factor = min(control.growth, max(control.shrink, control.safety * math.sqrt(control.tol_step / error_estimate)))
    dt = state.dt * factor
    hi = control.dt_max
    if control.stiff_c is not None:
        ds = length(state.curve) / state.curve.N
        hi = min(hi, control.stiff_c * ds ** (2 * state.m + 2))
    return min(max(dt, control.dt_min), max(hi, control.dt_min))


def _implicit(curve: DiscreteCurve, m: int, dt: float) -> DiscreteCurve:
    cone = curve.cone
    Y = kernels.implicit_solve(
        curve.nodes, curve.h_ext, curve.g, curve.nu, curve.k, cone.reflection(1), cone.reflection(2), m, dt
    )
    return apply_boundary(Y, cone)


def step(state: FlowState, control: StepControl, dt_cap: float = math.inf):
    """Advance by one accepted step.

    Returns
    -------
    new_state : FlowState
        With ``dt`` set to the proposed size of the next step.
    rejected : int
        Number of rejected trials.

    Raises
    ------
    StepFloor
        A trial at ``dt_min`` was rejected.
    TipReach
        Every trial down to ``dt_min`` pushed an endpoint through the tip.
    """
    curve = state.curve
    L = length(curve)
    dt = min(state.dt, dt_cap)
    rejected = 0
    while True:
        at_floor = dt <= control.dt_min * (1.0 + 1e-12)
        try:
            full = _implicit(curve, state.m, dt)
            half = _implicit(_implicit(curve, state.m, 0.5 * dt), state.m, 0.5 * dt)
            err = float(np.abs(full.nodes - half.nodes).max()) / L
            new = apply_boundary(2.0 * half.nodes - full.nodes, curve.cone)
        except TipReach:
            if at_floor:
                raise
            err = math.inf
        except (np.linalg.LinAlgError, DegenerateCurve, ValueError):
            err = math.inf
        if err <= control.tol_step:
            nxt = adapt_dt(replace(state, dt=dt), err, control)
            return FlowState(new, state.t + dt, nxt, state.m), rejected
        if at_floor:
            raise StepFloor(f"step rejected at dt={dt:.3e} (error estimate {err:.3e})")
        rejected += 1
        if math.isfinite(err):
            dt = adapt_dt(replace(state, dt=dt), err, control)
        else:
            dt = max(0.25 * dt, control.dt_min)


# --------------------------------------------------------------------------
# driver


def initial_curve(config: RunConfig) -> DiscreteCurve:
    """Initial curve described by ``config.init`` with ``config.flow.N`` segments."""
    from .initgen import PerturbationSpec, perturbed_arc

    cone = Cone(config.cone.theta1, config.cone.theta2)
    init = config.init
    n = config.flow.N
    if init.type == "arc":
        return make_arc(ArcSpec(cone, radius=init.radius, area=init.area), n)
    if init.type == "perturbed":
        return perturbed_arc(PerturbationSpec(cone, init.modes, radius=init.radius, area=init.area), n)
    from .io import read_snapshot

    snap = read_snapshot(init.path)
    curve = build_tables(snap.nodes, cone)
    if curve.N != n:
        curve = remesh(curve, n)
    return curve


@dataclass
class RunResult:
    records: list
    residuals: list  # aligned with records; first entry is None
    snapshots: list
    status: TerminationStatus
    final: FlowState
    n_steps: int = 0
    n_rejected: int = 0
    n_remesh: int = 0
    settings: dict = field(default_factory=dict)


def _settings(config: RunConfig, rec0: QuantityRecord, curve0: DiscreteCurve) -> dict:
    fl = config.flow
    L0 = rec0.L
    T = L0 ** (2 * fl.m + 2)
    L_low = math.sqrt(2.0 * rec0.A * curve0.cone.opening)
    k2_cap = fl.k2_cap
    if k2_cap is None:
        k2_cap = 1e4 * (rec0.Kosc + 4.0 * math.pi**2 * rec0.omega**2) / L_low
    return {
        "t_end": fl.t_end if fl.t_end is not None else 10.0 * T,
        "dt0": fl.dt0 if fl.dt0 is not None else 1e-6 * T,
        "dt_min": fl.dt_min if fl.dt_min is not None else 1e-14 * T,
        "dt_max": fl.dt_max if fl.dt_max is not None else 1e-3 * T,
        "rho_min": fl.rho_min if fl.rho_min is not None else 1e-3 * L0,
        "k2_cap": k2_cap,
        "L_low": L_low,
    }


def run(
    config: RunConfig,
    *,
    curve: DiscreteCurve | None = None,
    on_record=None,
    on_state=None,
    fixed_dt: float | None = None,
) -> RunResult:
    """Evolve the initial curve until a termination condition is met.

    Parameters
    ----------
    config : RunConfig
    curve : DiscreteCurve, optional
        Overrides the initial curve described by ``config.init``.
    on_record : callable, optional
        Called as ``on_record(record, residual)`` for every stored record.
    on_state : callable, optional
        Called as ``on_state(state, n_steps)`` for the initial state
        (``n_steps = 0``) and after every accepted step.
    fixed_dt : float, optional
        Take plain implicit steps of this size with no error control (used
        for refinement studies).

    Raises
    ------
    BoundaryViolation
        If the initial curve does not start on the rays.
    """
    from .initgen import compatibility_check

    fl, out = config.flow, config.output
    curve = initial_curve(config) if curve is None else curve
    report = compatibility_check(curve)
    if not report.on_rays:
        raise BoundaryViolation(
            f"initial endpoints are off the rays (relative offsets {report.offset_minus:.2e}, {report.offset_plus:.2e})"
        )
    if curve.segment_ratio() > fl.remesh_ratio:
        curve = remesh(curve)
    m = fl.m
    rec0 = quantity_record(curve, 0.0, 0.0, m)
    st = _settings(config, rec0, curve)
    control = StepControl(
        tol_step=fl.tol_step, dt_min=st["dt_min"], dt_max=st["dt_max"], stiff_c=fl.dt_stiff_c
    )
    state = FlowState(curve, 0.0, fixed_dt if fixed_dt is not None else st["dt0"], m, rec0)
    records, residuals, snapshots = [rec0], [None], [state]
    if on_record is not None:
        on_record(rec0, None)
    if on_state is not None:
        on_state(state, 0)
    n_steps = n_rej = n_remesh = 0
    last = state
    remeshed_since = False
    status = None
    t_end = st["t_end"]
    L0 = rec0.L

    while status is None:
        if state.t >= t_end * (1.0 - 1e-14):
            status = TerminationStatus(TerminationKind.TIME_LIMIT, state.t)
            break
        if n_steps >= fl.max_steps:
            status = TerminationStatus(TerminationKind.TIME_LIMIT, state.t, f"max_steps={fl.max_steps} reached")
            break
        cap = t_end - state.t
        t_before = state.t
        prev_nodes = state.curve.nodes
        try:
            if fixed_dt is not None:
                dt = min(fixed_dt, cap)
                new_curve = _implicit(state.curve, m, dt)
                state, rej = FlowState(new_curve, state.t + dt, fixed_dt, m), 0
            else:
                state, rej = step(state, control, cap)
        except TipReach as exc:
            status = TerminationStatus(TerminationKind.TIP_REACH, state.t, str(exc))
            break
        except StepFloor as exc:
            status = TerminationStatus(TerminationKind.STEP_FLOOR, state.t, str(exc))
            break
        n_steps += 1
        n_rej += rej
        # realised node speed over the step; the implicit solve damps the
        # round-off content that dominates the nodal (2m+2)-th difference
        velocity = float(np.abs(state.curve.nodes - prev_nodes).max()) / (state.t - t_before)
        if state.curve.segment_ratio() > fl.remesh_ratio:
            state = replace(state, curve=remesh(state.curve))
            n_remesh += 1
            remeshed_since = True

        rec = replace(state.quantities(), dt=state.t - t_before)
        kind = None
        if min(rec.rho_minus, rec.rho_plus) < st["rho_min"]:
            kind = TerminationKind.TIP_REACH
            detail = f"endpoint within rho_min={st['rho_min']:.3e} of the tip"
        elif not math.isfinite(rec.norms[0]) or rec.norms[0] > st["k2_cap"]:
            kind = TerminationKind.CURVATURE_BLOWUP
            detail = f"int k^2 = {rec.norms[0]:.3e} exceeds cap {st['k2_cap']:.3e}"
        elif rec.k_dev * rec.L < fl.tol_c and velocity * rec.L ** (2 * m + 1) < fl.tol_v:
            kind = TerminationKind.CONVERGED
            detail = f"max|k - kbar| L = {rec.k_dev * rec.L:.3e}, max node speed L^{2 * m + 1} = {velocity * rec.L ** (2 * m + 1):.3e}"
        if n_steps % out.record_every == 0 or kind is not None:
            mid = None
            if not remeshed_since:
                mid_nodes = 0.5 * (last.curve.nodes + state.curve.nodes)
                try:
                    mid = quantity_record(build_tables(mid_nodes, state.curve.cone), 0.5 * (last.t + state.t), 0.0, m)
                except DegenerateCurve:
                    mid = None
            res = check_identities(last.quantities(), rec, mid)
            records.append(rec)
            residuals.append(res)
            if on_record is not None:
                on_record(rec, res)
            last = state
            remeshed_since = False
        if out.snapshot_every and n_steps % out.snapshot_every == 0:
            snapshots.append(state)
        if on_state is not None:
            on_state(state, n_steps)
        if kind is not None:
            status = TerminationStatus(kind, state.t, detail)

    if snapshots[-1] is not state:
        snapshots.append(state)
    return RunResult(
        records=records,
        residuals=residuals,
        snapshots=snapshots,
        status=status,
        final=state,
        n_steps=n_steps,
        n_rejected=n_rej,
        n_remesh=n_remesh,
        settings=dict(st, L0=L0),
    )
