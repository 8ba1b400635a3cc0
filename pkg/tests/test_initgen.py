import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conediff.diagnostics import smallness_threshold
from conediff.geometry import ArcSpec, Cone, area, length, make_arc, oscillation_of_curvature
from conediff.initgen import PerturbationSpec, compatibility_check, film_curve, perturbed_arc

RIGHT = Cone(math.pi / 2, 0.0)


def test_zero_modes_reproduce_arc():
    a = perturbed_arc(PerturbationSpec(RIGHT, (), radius=1.3), 100)
    b = make_arc(ArcSpec(RIGHT, radius=1.3), 100)
    np.testing.assert_allclose(a.nodes, b.nodes, atol=1e-13)


def test_spec_validation():
    with pytest.raises(ValueError):
        PerturbationSpec(RIGHT, ((0, 0.1),), radius=1.0)
    with pytest.raises(ValueError):
        PerturbationSpec(RIGHT, ((1, 0.6), (2, -0.4)), radius=1.0)
    with pytest.raises(ValueError):
        PerturbationSpec(RIGHT, ((1, 0.1),))


def test_endpoint_distances_follow_profile():
    spec = PerturbationSpec(RIGHT, ((1, 0.1), (2, 0.05)), radius=2.0)
    curve = perturbed_arc(spec, 120)
    rep = compatibility_check(curve)
    assert rep.on_rays
    assert np.hypot(*curve.nodes[0]) == pytest.approx(2.0 * (1 + 0.1 + 0.05), rel=1e-14)
    assert np.hypot(*curve.nodes[-1]) == pytest.approx(2.0 * (1 - 0.1 + 0.05), rel=1e-14)


@given(
    st.floats(0.3, 3.0),
    st.lists(st.tuples(st.integers(1, 5), st.floats(-0.15, 0.15)), min_size=1, max_size=3),
)
def test_perturbed_arcs_are_compatible(phi, modes):
    cone = Cone(phi + 0.05, 0.05)
    spec = PerturbationSpec(cone, tuple(modes), radius=1.0)
    curve = perturbed_arc(spec, 200)
    # asymptotic rates only once the bends are resolved
    assume(float(np.abs(curve.k).max() * curve.h.max()) < 0.1)
    coarse, fine = compatibility_check(curve), compatibility_check(perturbed_arc(spec, 400))
    assert coarse.on_rays and fine.on_rays
    # the one-sided tangency estimate converges to zero under refinement
    for a, b in ((coarse.tangency_minus, fine.tangency_minus), (coarse.tangency_plus, fine.tangency_plus)):
        assert b <= a / 3 or b <= 1e-9
    chords = curve.h
    assert chords.max() / chords.min() <= 1 + 1e-12


def test_tangency_residual_is_second_order():
    spec = PerturbationSpec(RIGHT, ((1, 0.1), (3, 0.05)), radius=1.0)
    t = [compatibility_check(perturbed_arc(spec, n)).tangency_minus for n in (100, 200)]
    assert t[0] / t[1] > 3.0


def test_rotated_arc_is_not_on_the_rays():
    X = make_arc(ArcSpec(RIGHT, radius=1.0), 60).nodes
    rot = math.radians(1.0)
    R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
    from conediff.geometry import build_tables

    assert not compatibility_check(build_tables(X @ R.T, RIGHT)).on_rays


def test_kosc_grows_quadratically_and_crosses_threshold():
    eps = np.array([0.01, 0.02, 0.05, 0.1, 0.2])
    K = np.array([oscillation_of_curvature(perturbed_arc(PerturbationSpec(RIGHT, ((1, e),), radius=1.0), 200)) for e in eps])
    assert np.all(np.diff(K) > 0)
    slope = np.polyfit(np.log(eps[:3]), np.log(K[:3]), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)
    thr = smallness_threshold(0.25)
    assert K[0] < thr < K[-1]


def test_film_curve_shape():
    cone = Cone(math.pi - 0.15, 0.0)
    reps = []
    for n in (200, 800):
        curve = film_curve(cone, height=0.4, reach=3.0, rho_tip=0.15, n=n, smoothing=0.3, n_modes=40)
        reps.append(compatibility_check(curve))
        assert np.hypot(*curve.nodes[0]) == pytest.approx(0.15, rel=0.05)
        assert np.hypot(*curve.nodes[-1]) > 1.5
        assert area(curve) > 0
    assert all(r.on_rays for r in reps)
    # the bend next to the tip is sharp, so the tangency estimate converges slowly there
    assert reps[1].tangency_minus < reps[0].tangency_minus / 3
    assert reps[1].tangency_plus < reps[0].tangency_plus / 3


@pytest.mark.parametrize("kw", [dict(height=0.1, reach=3.0, rho_tip=0.15), dict(height=0.4, reach=0.3, rho_tip=0.15), dict(height=0.4, reach=3.0, rho_tip=0.0)])
def test_film_curve_rejects_bad_sizes(kw):
    with pytest.raises(ValueError):
        film_curve(Cone(math.pi - 0.15, 0.0), n=100, **kw)
