import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conediff.config import parse_config
from conediff.diagnostics import check_bounds
from conediff.flow import (
    FlowState,
    StepControl,
    TerminationKind,
    TipReach,
    adapt_dt,
    apply_boundary,
    normal_velocity,
    remesh,
    run,
    step,
)
from conediff.geometry import ArcSpec, BoundaryViolation, Cone, area, build_tables, length, make_arc
from conediff.initgen import PerturbationSpec, compatibility_check, perturbed_arc

RIGHT = Cone(math.pi / 2, 0.0)


def _perturbed(n=200, eps=0.05, j=1):
    return perturbed_arc(PerturbationSpec(RIGHT, ((j, eps),), radius=1.0), n)


def _config(extra="", init="perturbed", N=60, m=1):
    text = f"cone.theta1 = {math.pi / 2!r}\ncone.theta2 = 0\ninit.type = {init}\ninit.radius = 1\nflow.N = {N}\nflow.m = {m}\n"
    if init == "perturbed":
        text += "init.modes = 1:0.05\n"
    return parse_config(text + extra)


# --------------------------------------------------------------------------
# step-size control


def _state(dt, m=1, n=100):
    return FlowState(make_arc(ArcSpec(RIGHT, radius=1.0), n), 0.0, dt, m)


def test_adapt_dt_growth_and_safety():
    ctl = StepControl(tol_step=1e-7, dt_min=1e-14, dt_max=1.0)
    assert adapt_dt(_state(1e-4), 0.0, ctl) == pytest.approx(1.25e-4)
    assert adapt_dt(_state(1e-4), 1e-7, ctl) == pytest.approx(0.9e-4)
    assert adapt_dt(_state(1e-4), 1.0, ctl) == pytest.approx(1e-5)  # shrink floor 0.1


def test_adapt_dt_clamps():
    ctl = StepControl(tol_step=1e-7, dt_min=1e-6, dt_max=2e-4)
    assert adapt_dt(_state(1.9e-4), 0.0, ctl) == 2e-4
    assert adapt_dt(_state(2e-6), 1.0, ctl) == 1e-6


@pytest.mark.parametrize("m,ratio", [(1, 16.0), (2, 64.0)])
def test_stiffness_cap_scales_with_mesh(m, ratio):
    ctl = StepControl(tol_step=1e-7, dt_min=1e-30, dt_max=1.0, stiff_c=0.5)
    coarse = adapt_dt(_state(1.0, m, 50), 0.0, ctl)
    fine = adapt_dt(_state(1.0, m, 100), 0.0, ctl)
    # ds halves, so the cap c ds^(2m+2) drops by 2^(2m+2)
    assert coarse / fine == pytest.approx(ratio, rel=1e-3)


# --------------------------------------------------------------------------
# boundary projection


def test_apply_boundary_projects_endpoints():
    curve = _perturbed(100)
    X = curve.nodes.copy()
    X[0] += 1e-3 * RIGHT.inward_normal(1)
    X[-1] -= 1e-3 * RIGHT.inward_normal(2)
    before = compatibility_check(build_tables(X, RIGHT))
    after = compatibility_check(apply_boundary(X, RIGHT))
    assert not before.on_rays
    assert max(after.offset_minus, after.offset_plus) <= 1e-12
    assert after.tangency_minus < before.tangency_minus
    assert after.tangency_plus < before.tangency_plus


def test_apply_boundary_detects_tip():
    X = make_arc(ArcSpec(RIGHT, radius=1.0), 40).nodes.copy()
    with pytest.raises(TipReach):
        apply_boundary(X, RIGHT, rho_min=2.0)
    X[0] = -0.1 * RIGHT.direction(1)
    with pytest.raises(TipReach):
        apply_boundary(X, RIGHT)


# --------------------------------------------------------------------------
# semi-discrete structure


@pytest.mark.parametrize("m", [1, 2])
@given(st.floats(-0.2, 0.2), st.integers(1, 4))
def test_velocity_preserves_area_to_first_order(m, eps, j):
    curve = perturbed_arc(PerturbationSpec(RIGHT, ((j, eps),), radius=1.0), 80)
    V = normal_velocity(curve, m)
    h = 1e-6 / max(float(np.abs(V).max()), 1e-30)

    def A(e):
        return area(build_tables(curve.nodes + e * V, RIGHT), check=False)

    rate = (A(h) - A(-h)) / (2 * h)
    scale = float(np.abs(V).max()) * length(curve)
    assert abs(rate) <= 1e-7 * scale


@pytest.mark.parametrize("m", [1, 2])
def test_velocity_vanishes_on_arc(m):
    n, r = 120, 0.7
    curve = make_arc(ArcSpec(Cone(2.5, 0.5), radius=r), n)
    beta = 2.0 / n
    h = r * beta
    # round-off in k is about eps k / beta^2; each Laplacian multiplies it by up to 4 / h^2
    floor = 10 * np.finfo(float).eps / (r * beta**2) * (4 / h**2) ** m
    assert float(np.abs(normal_velocity(curve, m)).max()) <= floor


# --------------------------------------------------------------------------
# single steps


@pytest.mark.parametrize("m", [1, 2])
def test_step_keeps_exact_arc(m):
    r = 1.3
    curve = make_arc(ArcSpec(RIGHT, radius=r), 200)
    st_, _ = step(FlowState(curve, 0.0, 1e-3, m), StepControl())
    assert float(np.abs(st_.curve.nodes - curve.nodes).max()) <= 1e-10 * r


def test_step_conserves_area_and_shortens():
    curve = _perturbed(200)
    ctl = StepControl(dt_min=1e-5, dt_max=1e-5, tol_step=1.0)
    new, _ = step(FlowState(curve, 0.0, 1e-5, 1), ctl)
    assert new.t == pytest.approx(1e-5)
    A0 = area(curve)
    assert abs(area(new.curve) - A0) <= 1e-8 * A0
    assert length(new.curve) <= length(curve)


def test_remesh_uniform_is_identity_and_idempotent():
    curve = _perturbed(100)
    once = remesh(curve)
    np.testing.assert_allclose(once.nodes, curve.nodes, atol=1e-12)
    np.testing.assert_allclose(remesh(once).nodes, once.nodes, atol=1e-13)


# --------------------------------------------------------------------------
# driver


def test_t_end_zero_stops_immediately():
    res = run(_config("flow.t_end = 0\n"))
    assert res.status.kind == TerminationKind.TIME_LIMIT
    assert res.final.t == 0.0
    assert len(res.records) == 1


def test_converges_to_equal_area_arc():
    res = run(_config())
    assert res.status.kind == TerminationKind.CONVERGED
    r0, rN = res.records[0], res.records[-1]
    radius = math.sqrt(2 * r0.A / RIGHT.opening)
    rho = np.hypot(*res.final.curve.nodes.T)
    assert np.abs(rho - radius).max() <= 1e-3 * radius
    assert abs(rN.A - r0.A) <= 1e-6 * r0.A


def test_runs_are_deterministic():
    a = run(_config("flow.t_end = 0.005\n"))
    b = run(_config("flow.t_end = 0.005\n"))
    assert [r.t for r in a.records] == [r.t for r in b.records]
    assert np.array_equal(a.final.curve.nodes, b.final.curve.nodes)


def test_tip_reach_on_rho_min():
    res = run(_config("flow.rho_min = 1.01\n"))
    assert res.status.kind == TerminationKind.TIP_REACH


def test_curvature_cap():
    res = run(_config("flow.k2_cap = 1e-3\n"))
    assert res.status.kind == TerminationKind.CURVATURE_BLOWUP
    assert res.n_steps == 1


def test_step_floor():
    res = run(_config("flow.tol_step = 1e-30\nflow.dt_min = 1e-6\nflow.dt0 = 1e-6\n"))
    assert res.status.kind == TerminationKind.STEP_FLOOR
    assert res.n_steps == 0


def test_initial_curve_off_the_rays_is_rejected():
    X = _perturbed(60).nodes
    rot = math.radians(1.0)
    R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
    with pytest.raises(BoundaryViolation):
        run(_config(), curve=build_tables(X @ R.T, RIGHT))


def test_time_reversed_trajectory_violates_decay_bound():
    # running the records backwards is the trajectory of the negated velocity
    res = run(_config("flow.t_end = 0.05\n"))
    recs = res.records
    T = recs[-1].t
    backwards = [r.__class__(**{**r.__dict__, "t": T - r.t}) for r in reversed(recs)]
    rep = check_bounds(backwards)
    names = {c.name: c for c in rep.checks}
    assert rep.certified
    assert not names["Kosc_over_L_decay"].passed
    assert not rep.passed


def test_hooks_see_every_step():
    seen, recs = [], []
    res = run(_config("flow.t_end = 0.002\n"), on_state=lambda s, n: seen.append(n), on_record=lambda r, q: recs.append(r))
    assert seen == list(range(res.n_steps + 1))
    assert len(recs) == len(res.records)
