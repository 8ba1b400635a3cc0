"""Initial curves in a cone and boundary-compatibility measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import endpoint_derivative, fornberg_weights
from .geometry import (
    ArcSpec,
    Cone,
    DiscreteCurve,
    MIN_NODES,
    DegenerateCurve,
    build_tables,
    length,
)

__all__ = [
    "CompatibilityReport",
    "PerturbationSpec",
    "compatibility_check",
    "film_curve",
    "log_cosine_profile",
    "perturbed_arc",
    "radial_graph",
]


@dataclass(frozen=True)
class PerturbationSpec:
    """Tip-centred arc of radius ``radius`` times ``1 + sum eps_j cos(j pi (theta1 - theta) / phi)``.

    The cosine modes have vanishing odd derivatives at both rays, so the
    curve meets the rays perpendicularly and its curvature has vanishing odd
    arclength derivatives there.

    Parameters
    ----------
    cone : Cone
    modes : sequence of (j, eps)
        Mode numbers ``j >= 1`` and amplitudes with ``sum |eps| < 1``.
    radius, area : float
        Exactly one; ``area`` fixes the radius of the unperturbed arc.
    """

    cone: Cone
    modes: tuple
    radius: float | None = None
    area: float | None = None

    def __post_init__(self):
        modes = tuple((int(j), float(e)) for j, e in self.modes)
        if any(j < 1 for j, _ in modes):
            raise ValueError("mode numbers must be >= 1")
        if sum(abs(e) for _, e in modes) >= 1.0:
            raise ValueError("sum of |eps| must be < 1 to keep the curve a graph over the angle")
        object.__setattr__(self, "modes", modes)
        base = ArcSpec(self.cone, radius=self.radius, area=self.area)
        object.__setattr__(self, "radius", base.radius)
        object.__setattr__(self, "area", base.area)

    def profile(self, theta):
        """Radius as a function of polar angle."""
        theta = np.asarray(theta, dtype=float)
        u = (self.cone.theta1 - theta) / self.cone.opening
        r = np.ones_like(theta)
        for j, eps in self.modes:
            r = r + eps * np.cos(j * math.pi * u)
        return self.radius * r


def radial_graph(cone: Cone, profile, n: int, *, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """Nodes with ``n`` equal chords lying exactly on ``theta -> profile(theta) (cos theta, sin theta)``.

    The node angles are corrected iteratively (chord length is a monotone
    function of the angle) until all chords agree to ``tol`` relative.
    """
    if n + 1 < MIN_NODES:
        raise DegenerateCurve(f"need at least {MIN_NODES} nodes, got {n + 1}")

    def points(theta):
        r = np.asarray(profile(theta), dtype=float)
        if np.any(r <= 0.0):
            raise ValueError("profile must be positive")
        P = r[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        P[0] = r[0] * cone.direction(1)
        P[-1] = r[-1] * cone.direction(2)
        return P

    theta = np.linspace(cone.theta1, cone.theta2, n + 1)
    for _ in range(max_iter):
        P = points(theta)
        c = np.hypot(*np.diff(P, axis=0).T)
        S = np.concatenate([[0.0], np.cumsum(c)])
        mean = S[-1] / n
        if np.max(np.abs(c - mean)) <= tol * mean:
            break
        theta = np.interp(np.linspace(0.0, S[-1], n + 1), S, theta)
        theta[0], theta[-1] = cone.theta1, cone.theta2
    return P


def perturbed_arc(spec: PerturbationSpec, n: int) -> DiscreteCurve:
    """Perturbed arc with ``n`` equal chords."""
    return build_tables(radial_graph(spec.cone, spec.profile, n), spec.cone)


def log_cosine_profile(cone: Cone, coeffs):
    """Radius ``exp(sum c_j cos(j pi (theta1 - theta) / phi))`` as a callable of the angle.

    Like the multiplicative modes of :class:`PerturbationSpec` every term has
    vanishing odd angular derivatives at both rays, but any positive profile
    can be approximated, including ones far from an arc.
    """
    c = np.asarray(coeffs, dtype=float)
    j = np.arange(len(c))

    def profile(theta):
        u = (cone.theta1 - np.asarray(theta, dtype=float)) / cone.opening
        return np.exp(np.cos(np.multiply.outer(u, j) * math.pi) @ c)

    return profile


def film_curve(cone: Cone, height: float, reach: float, rho_tip: float, n: int, *,
               n_modes: int = 60, smoothing: float = 0.15) -> DiscreteCurve:
    """Long flat curve at ``height`` above the ray-2 line, ending at ``rho_tip`` on ray 1.

    Meant for cones with opening close to pi: the curve leaves ray 1 close to
    the tip, runs roughly parallel to ray 2 and comes down onto ray 2 at
    distance about ``reach``.  The log-radius target (a ramp up from
    ``rho_tip``, then the flat line, smoothly capped at ``reach``) is fitted
    by ``n_modes`` cosine terms in the least-squares sense.
    """
    if not 0.0 < rho_tip < height < reach:
        raise ValueError("need 0 < rho_tip < height < reach")
    u = np.linspace(0.0, 1.0, 4001)
    theta = cone.theta1 - u * cone.opening

    def smin(a, b):
        return -smoothing * np.logaddexp(-a / smoothing, -b / smoothing)

    flat = np.log(height / np.sin(np.clip(theta - cone.theta2, 1e-9, None)))
    # zero-slope ramp from rho_tip up to the flat line, met directly above the tip
    u_up = (cone.opening - math.pi / 2) / cone.opening
    ramp = 0.5 * (1.0 - np.cos(math.pi * np.minimum(u / u_up, 1.0)))
    rise = math.log(rho_tip) + math.log(height / rho_tip) * ramp
    target = smin(np.where(u < u_up, rise, flat), math.log(reach))
    basis = np.cos(np.outer(u, np.arange(n_modes + 1)) * math.pi)
    coeffs = np.linalg.lstsq(basis, target, rcond=None)[0]
    return build_tables(radial_graph(cone, log_cosine_profile(cone, coeffs), n), cone)


@dataclass(frozen=True)
class CompatibilityReport:
    """One-sided boundary measurements at node 0 (``minus``) and node N (``plus``).

    ``offset`` is the distance from the ray line relative to the length,
    ``tangency`` is ``|<nu, e>|`` with ``e`` the inward normal of the ray and
    ``nu`` from a one-sided tangent, ``ks`` is a one-sided ``|k_s|``.
    """

    offset_minus: float
    offset_plus: float
    tangency_minus: float
    tangency_plus: float
    ks_minus: float
    ks_plus: float
    tol_offset: float
    tol_tangency: float

    @property
    def on_rays(self) -> bool:
        return max(self.offset_minus, self.offset_plus) <= self.tol_offset

    @property
    def ok(self) -> bool:
        return self.on_rays and max(self.tangency_minus, self.tangency_plus) <= self.tol_tangency


def _one_sided_normal(nodes, s, end):
    idx = np.arange(3) if end == 0 else np.arange(len(nodes) - 3, len(nodes))[::-1]
    w = fornberg_weights(s[idx[0]], s[idx], 1)
    tau = w @ nodes[idx]
    tau = tau / np.hypot(*tau)
    return np.array([-tau[1], tau[0]])


def compatibility_check(curve: DiscreteCurve, tol_offset: float = 1e-10, tol_tangency: float = 1e-3) -> CompatibilityReport:
    """Measure how well ``curve`` satisfies the boundary conditions of its cone.

    Uses only interior data (no ghost nodes), so it detects violations that
    the ghost construction would otherwise hide.
    """
    cone = curve.cone
    if cone is None:
        raise ValueError("curve has no cone attached")
    X = curve.nodes
    L = length(curve)
    s = curve.s
    nu0 = _one_sided_normal(X, s, 0)
    nuN = _one_sided_normal(X, s, -1)
    # one-sided curvature from one-sided second derivatives of position
    k_one = curve.k.copy()
    for end in (0, -1):
        idx = np.arange(4) if end == 0 else np.arange(len(X) - 4, len(X))[::-1]
        w1 = fornberg_weights(s[idx[0]], s[idx], 1)
        w2 = fornberg_weights(s[idx[0]], s[idx], 2)
        d1, d2 = w1 @ X[idx], w2 @ X[idx]
        k_one[end] = (d1[1] * d2[0] - d1[0] * d2[1]) / np.hypot(*d1) ** 3
    return CompatibilityReport(
        offset_minus=abs(cone.ray_offset(X[0], 1)) / L,
        offset_plus=abs(cone.ray_offset(X[-1], 2)) / L,
        tangency_minus=abs(float(np.dot(nu0, cone.inward_normal(1)))),
        tangency_plus=abs(float(np.dot(nuN, cone.inward_normal(2)))),
        ks_minus=abs(endpoint_derivative(k_one, s, 1, 0)),
        ks_plus=abs(endpoint_derivative(k_one, s, 1, -1)),
        tol_offset=tol_offset,
        tol_tangency=tol_tangency,
    )
