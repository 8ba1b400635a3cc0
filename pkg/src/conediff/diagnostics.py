"""Integral quantities, evolution-identity residuals, inequality and bound audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    DiscreteCurve,
    arclength_laplacian,
    area,
    length,
)

__all__ = [
    "BoundCheck",
    "BoundsReport",
    "InsufficientData",
    "PSWPreconditionError",
    "PSW_VARIANTS",
    "QuantityRecord",
    "ResidualRecord",
    "blowup_exponent",
    "check_bounds",
    "check_identities",
    "check_psw",
    "curvature_derivatives",
    "decay_fit",
    "endpoint_derivative",
    "fornberg_weights",
    "hausdorff_to_arc",
    "kosc_decay_rate",
    "kosc_margin",
    "quantity_record",
    "smallness_threshold",
]


# --------------------------------------------------------------------------
# smallness threshold


def smallness_threshold(omega: float) -> float:
    """Largest initial oscillation of curvature covered by the convergence result.

    ``(pi/12)^2 [-24 w + sqrt((24 w)^2 + (48/pi)(1 - 4 w^2))]^2``, evaluated in
    the cancellation-free form ``b / (a + sqrt(a^2 + b))``.

    Raises
    ------
    ValueError
        If ``omega`` is not in the open interval (0, 1/2).
    """
    omega = float(omega)
    if not (0.0 < omega < 0.5):
        raise ValueError(f"rotation number must lie in (0, 1/2), got {omega!r}")
    a = 24.0 * omega
    b = (48.0 / math.pi) * (1.0 - 2.0 * omega) * (1.0 + 2.0 * omega)
    root = b / (a + math.sqrt(a * a + b))
    return (math.pi / 12.0) ** 2 * root * root


def kosc_margin(kosc: float, omega: float | None = None) -> float:
    """Bracket ``2 - (6/pi) K - 24 w sqrt(K) - 8 w^2`` of the monotonicity inequality.

    Accepts either numbers or a :class:`QuantityRecord` as first argument.
    """
    if isinstance(kosc, QuantityRecord):
        kosc, omega = kosc.Kosc, kosc.omega
    kosc = max(float(kosc), 0.0)
    return 2.0 - (6.0 / math.pi) * kosc - 24.0 * omega * math.sqrt(kosc) - 8.0 * omega**2


def decay_margin_without_omega2(kosc: float, omega: float) -> float:
    """The bracket without the ``-8 w^2`` term (reported alongside, never asserted)."""
    return kosc_margin(kosc, omega) + 8.0 * omega**2


# --------------------------------------------------------------------------
# one-sided finite differences


def fornberg_weights(x0: float, x, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0``.

    Fornberg's recursion on arbitrary (distinct) nodes ``x``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5 = 1.0, c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for kk in range(mn, 0, -1):
                    c[i, kk] = c1 * (kk * c[i - 1, kk - 1] - c5 * c[i - 1, kk]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for kk in range(mn, 0, -1):
                c[j, kk] = (c4 * c[j, kk] - kk * c[j, kk - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def endpoint_derivative(values, s, order: int, end: int, npts: int | None = None, degree: int | None = None) -> float:
    """One-sided ``order``-th arclength derivative at an endpoint.

    With ``degree`` unset this is the interpolating (Fornberg) stencil on
    ``npts`` nodes, ``order + 2`` by default.  With ``degree`` set it is the
    derivative of the least-squares polynomial of that degree through
    ``npts`` nodes, which amplifies round-off in ``values`` far less.
    ``end`` is 0 for the first node and -1 for the last.
    """
    v = np.asarray(values, dtype=float)
    s = np.asarray(s, dtype=float)
    npts = order + 2 if npts is None else npts
    if end == 0:
        idx = np.arange(npts)
    else:
        idx = np.arange(len(v) - npts, len(v))[::-1]
    if degree is None:
        w = fornberg_weights(s[idx[0]], s[idx], order)
        return float(np.dot(w, v[idx]))
    x = np.abs(s[idx] - s[idx[0]])
    scale = x[-1]
    coef = np.polynomial.polynomial.polyfit(x / scale, v[idx], degree)
    sign = 1.0 if end == 0 or order % 2 == 0 else -1.0
    return sign * float(coef[order]) * math.factorial(order) / scale**order


# one-sided stencil for the odd-derivative boundary monitor: (nodes, degree)
BC_STENCIL = (12, 6)


# --------------------------------------------------------------------------
# quantity records


def curvature_derivatives(curve: DiscreteCurve, order: int, curvature=None) -> list[np.ndarray]:
    """Tables of ``k_{s^i}`` for ``i = 0..order``.

    Even orders live on nodes (iterated :func:`arclength_laplacian`); odd orders
    live on segment midpoints (first differences of the preceding even table).
    """
    k = curve.k if curvature is None else np.asarray(curvature, dtype=float)
    out = [k]
    even = k
    for i in range(1, order + 1):
        if i % 2 == 1:
            out.append(np.diff(even) / curve.h)
        else:
            even = arclength_laplacian(even, curve)
            out.append(even)
    return out


def _l2sq(curve: DiscreteCurve, table: np.ndarray, odd: bool) -> float:
    if odd:
        return float(np.dot(curve.h, table**2))
    return curve.integrate(table**2)


def normal_speed(curve: DiscreteCurve, m: int, curvature=None) -> np.ndarray:
    """Scalar normal speed ``(-1)^(m+1) k_{s^{2m}}`` on the nodes."""
    if m < 1:
        raise ValueError("flow order m must be >= 1")
    v = curve.k if curvature is None else np.asarray(curvature, dtype=float)
    for _ in range(m):
        v = arclength_laplacian(v, curve)
    return v if m % 2 == 1 else -v


@dataclass(frozen=True)
class QuantityRecord:
    """Scalars describing one accepted state.

    ``norms[i]`` is ``int k_{s^i}^2 ds``.  The ``rhs_*`` fields hold the
    right-hand sides of the integral evolution identities evaluated on this
    state; ``bc`` holds one-sided odd curvature derivatives at the two ends.
    """

    t: float
    L: float
    A: float
    kbar: float
    omega: float
    Kosc: float
    norms: tuple
    rho_minus: float
    rho_plus: float
    dt: float
    m: int = 1
    k_dev: float = 0.0  # max |k - kbar|
    speed: float = 0.0  # max |normal speed|
    rhs_L: float = 0.0
    rhs_kbar: float = 0.0
    rhs_k2: float = 0.0
    rhs_Kosc: float = 0.0
    k_total: float = 0.0  # int k ds
    bc: dict = field(default_factory=dict, compare=False)

    @property
    def k_l2sq(self) -> float:
        return self.norms[0]

    @property
    def ks_l2sq(self) -> float:
        return self.norms[1]

    @property
    def kss_l2sq(self) -> float:
        return self.norms[2]


def quantity_record(curve: DiscreteCurve, t: float = 0.0, dt: float = 0.0, m: int = 1) -> QuantityRecord:
    """Evaluate every tracked quantity on ``curve``."""
    L = length(curve)
    A = area(curve, check=False)
    ktot = curve.integrate(curve.k)
    kbar = ktot / L
    omega = ktot / (2.0 * math.pi)
    dev = curve.k - kbar
    Kosc = L * curve.integrate(dev**2)
    order = max(2 * m, 2) + 1
    ders = curvature_derivatives(curve, order)
    norms = tuple(_l2sq(curve, d, i % 2 == 1) for i, d in enumerate(ders[: max(2 * m, 2) + 1]))
    F = ders[2 * m] if m % 2 == 1 else -ders[2 * m]

    ks = ders[1]
    k_mid2 = 0.5 * (curve.k[:-1] ** 2 + curve.k[1:] ** 2)
    dev_mid = 0.5 * (dev[:-1] + dev[1:])
    dev_mid2 = 0.5 * (dev[:-1] ** 2 + dev[1:] ** 2)
    h = curve.h

    if m == 1:
        rhs_L = -norms[1]
        rhs_k2 = -2.0 * norms[2] + 3.0 * float(np.dot(h, k_mid2 * ks**2))
        rhs_Kosc = (
            -Kosc * norms[1] / L
            - 2.0 * L * norms[2]
            + 3.0 * L * float(np.dot(h, dev_mid2 * ks**2))
            + 6.0 * kbar * L * float(np.dot(h, dev_mid * ks**2))
            + 2.0 * kbar**2 * L * norms[1]
        )
    else:
        rhs_L = -norms[m]
        rhs_k2 = -2.0 * _l2sq(curve, ders[m + 1], (m + 1) % 2 == 1) - curve.integrate(curve.k**3 * F)
        rhs_Kosc = rhs_L * norms[0] + L * rhs_k2
    rhs_kbar = -(2.0 * math.pi * omega / L**2) * rhs_L

    bc = {}
    cone = curve.cone
    rho_m = rho_p = float("nan")
    if cone is not None:
        rho_m = cone.ray_parameter(curve.nodes[0], 1)
        rho_p = cone.ray_parameter(curve.nodes[-1], 2)
    npts, deg = BC_STENCIL
    for order_ in range(1, 2 * m, 2):
        bc[order_] = (
            abs(endpoint_derivative(curve.k, curve.s, order_, 0, npts, deg)),
            abs(endpoint_derivative(curve.k, curve.s, order_, -1, npts, deg)),
        )
    return QuantityRecord(
        t=float(t),
        L=L,
        A=A,
        kbar=kbar,
        omega=omega,
        Kosc=Kosc,
        norms=norms,
        rho_minus=rho_m,
        rho_plus=rho_p,
        dt=float(dt),
        m=m,
        k_dev=float(np.abs(dev).max()),
        speed=float(np.abs(F).max()),
        rhs_L=rhs_L,
        rhs_kbar=rhs_kbar,
        rhs_k2=rhs_k2,
        rhs_Kosc=rhs_Kosc,
        k_total=ktot,
        bc=bc,
    )


# --------------------------------------------------------------------------
# evolution identities


@dataclass(frozen=True)
class ResidualRecord:
    r_L: float
    r_A: float
    r_kbar: float
    r_k2: float
    r_Kosc: float

    def as_tuple(self):
        return (self.r_L, self.r_A, self.r_kbar, self.r_k2, self.r_Kosc)


RESIDUAL_NAMES = ("r_L", "r_A", "r_kbar", "r_k2", "r_Kosc")


def check_identities(prev: QuantityRecord, next: QuantityRecord, mid: QuantityRecord | None = None) -> ResidualRecord:
    """Residuals of the integral evolution identities between two records.

    Time derivatives are centred differences over ``[prev.t, next.t]``; the
    right-hand sides come from ``mid`` (the state at the midpoint) when given,
    otherwise from the average of the two endpoint records.
    """
    dt = next.t - prev.t
    if not dt > 0:
        raise ValueError("records must be strictly increasing in time")

    def rhs(name):
        if mid is not None:
            return getattr(mid, name)
        return 0.5 * (getattr(prev, name) + getattr(next, name))

    k2_prev, k2_next = prev.norms[0], next.norms[0]
    return ResidualRecord(
        r_L=abs((next.L - prev.L) / dt - rhs("rhs_L")),
        r_A=abs((next.A - prev.A) / dt),
        r_kbar=abs((next.kbar - prev.kbar) / dt - rhs("rhs_kbar")),
        r_k2=abs((k2_next - k2_prev) / dt - rhs("rhs_k2")),
        r_Kosc=abs((next.Kosc - prev.Kosc) / dt - rhs("rhs_Kosc")),
    )


# --------------------------------------------------------------------------
# Poincare-Sobolev-Wirtinger inequalities

PSW_VARIANTS = ("mean-zero", "endpoints-zero", "sup-mean-zero", "sup-endpoints-zero")


class PSWPreconditionError(ValueError):
    """Sampled function does not satisfy the inequality's hypothesis."""


def check_psw(values, variant: str, x=None, length: float | None = None, tol: float = 1e-9) -> float:
    """Ratio of left- to right-hand side of a PSW inequality for sampled ``g``.

    Parameters
    ----------
    values : array_like
        Samples of ``g`` on ``[0, L]`` (endpoints included).
    variant : {"mean-zero", "endpoints-zero", "sup-mean-zero", "sup-endpoints-zero"}
    x : array_like, optional
        Sample positions; uniform on ``[0, length]`` when omitted.
    tol : float
        Relative tolerance for the hypothesis check.
    """
    if variant not in PSW_VARIANTS:
        raise ValueError(f"unknown PSW variant {variant!r}")
    g = np.asarray(values, dtype=float)
    if x is None:
        if length is None:
            raise ValueError("give sample positions x or the interval length")
        x = np.linspace(0.0, float(length), len(g))
    x = np.asarray(x, dtype=float)
    L = float(x[-1] - x[0])
    dx = np.diff(x)
    scale = float(np.abs(g).max())
    if scale == 0.0:
        raise PSWPreconditionError("g vanishes identically")
    if variant.endswith("mean-zero"):
        mean = float(np.dot(dx, 0.5 * (g[:-1] + g[1:]))) / L
        if abs(mean) > tol * scale:
            raise PSWPreconditionError(f"mean of g is {mean:.3e}, not zero")
    else:
        if max(abs(g[0]), abs(g[-1])) > tol * scale:
            raise PSWPreconditionError("g does not vanish at both endpoints")
    energy = float(np.dot(np.diff(g) ** 2, 1.0 / dx))
    if energy == 0.0:
        raise PSWPreconditionError("g has zero derivative energy")
    if variant in ("mean-zero", "endpoints-zero"):
        lhs = float(np.dot(dx, 0.5 * (g[:-1] ** 2 + g[1:] ** 2)))
        return lhs / (L**2 / math.pi**2 * energy)
    const = L / math.pi if variant == "sup-endpoints-zero" else 2.0 * L / math.pi
    return scale**2 / (const * energy)


# --------------------------------------------------------------------------
# bounds along a trajectory


@dataclass(frozen=True)
class BoundCheck:
    name: str
    passed: bool
    worst_margin: float  # min over time of (bound - value) / |bound|
    t_worst: float
    informational: bool = False

    def line(self) -> str:
        status = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return f"{self.name:<28s} {status:<5s} worst_margin={self.worst_margin:+.6e} at t={self.t_worst:.6e}"


@dataclass(frozen=True)
class BoundsReport:
    checks: tuple
    delta: float
    certified: bool

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def lines(self):
        return [c.line() for c in self.checks]


def _bound_check(name, times, values, bounds, tol, informational, atol=0.0):
    values = np.asarray(values, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    denom = np.maximum(np.abs(bounds), max(atol, np.finfo(float).tiny))
    margin = (bounds + atol - values) / denom
    i = int(np.argmin(margin))
    passed = bool(np.all(values <= bounds + tol * np.abs(bounds) + atol))
    return BoundCheck(name, passed, float(margin[i]), float(times[i]), informational)


def check_bounds(
    trajectory, initial: QuantityRecord | None = None, tol: float = 1e-2, roundoff: float = 1e-12
) -> BoundsReport:
    """Audit the curvature, decay and length bounds along ``trajectory``.

    (a) ``int k^2 <= (K(0) + 4 pi^2 w^2) / L(t)``
    (b) ``K(t)/L(t) <= K(0)/L0 * exp(-delta pi^4 t / L0^4)``
    (c) ``L^3(t) <= L0^3 [1 + 3 K(0)/(delta pi^2) (exp(-delta pi^4 t / L0^4) - 1)]``

    with ``delta = kosc_margin`` at ``t = 0``.  Each is checked with relative
    slack ``tol``; (b) also gets an absolute allowance of ``roundoff`` times
    ``(K(0) + 4 pi^2 w^2) / L0``, the size of ``int k^2``, since its bound
    vanishes for an exact arc.  If the initial state is above the smallness
    threshold the checks are still evaluated but marked informational.
    """
    recs = list(trajectory)
    if not recs:
        raise ValueError("empty trajectory")
    init = recs[0] if initial is None else initial
    delta = kosc_margin(init.Kosc, init.omega)
    certified = delta > 0.0
    info = not certified
    t = np.array([r.t for r in recs]) - init.t
    L = np.array([r.L for r in recs])
    K = np.array([r.Kosc for r in recs])
    k2 = np.array([r.norms[0] for r in recs])
    omega = init.omega
    L0, K0 = init.L, init.Kosc
    rate = max(delta, 0.0) * math.pi**4 / L0**4
    decay = np.exp(-rate * t)

    a = _bound_check("k2_bound", t, k2, (K0 + 4.0 * math.pi**2 * omega**2) / L, tol, info)
    k2_scale = (K0 + 4.0 * math.pi**2 * omega**2) / L0
    b = _bound_check("Kosc_over_L_decay", t, K / L, (K0 / L0) * decay, tol, info, atol=roundoff * k2_scale)
    if certified:
        c_bound = L0**3 * (1.0 + 3.0 * K0 / (delta * math.pi**2) * (decay - 1.0))
    else:
        c_bound = np.full_like(t, L0**3)
    c = _bound_check("length_cubed_bound", t, L**3, c_bound, tol, info)
    return BoundsReport(checks=(a, b, c), delta=delta, certified=certified)


# --------------------------------------------------------------------------
# decay rate


class InsufficientData(ValueError):
    pass


def decay_fit(times, values, min_points: int = 10) -> float:
    """Exponential decay rate: minus the least-squares slope of ``log(values)``.

    Nonpositive values are dropped before fitting.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v) & (v > 0.0)
    if ok.sum() < min_points:
        raise InsufficientData(f"need {min_points} positive samples, got {int(ok.sum())}")
    slope = np.polyfit(t[ok], np.log(v[ok]), 1)[0]
    return float(-slope)


def kosc_decay_rate(records, window=(1e-1, 1e-9), min_points: int = 10) -> float:
    """Fitted exponential decay rate of ``K_osc / L`` along a trajectory.

    Only samples whose value relative to the first lies inside ``window``
    (upper, lower) enter the fit; this skips the fast decay of high modes at
    the start and the round-off floor near convergence.
    """
    recs = list(records)
    if not recs:
        raise InsufficientData("empty trajectory")
    t = np.array([r.t for r in recs])
    v = np.array([r.Kosc / r.L for r in recs])
    hi, lo = window
    rel = v / v[0] if v[0] > 0.0 else np.zeros_like(v)
    keep = (rel <= hi) & (rel >= lo)
    return decay_fit(t[keep], v[keep], min_points=min_points)


def blowup_exponent(records, t_blowup: float | None = None, min_points: int = 10) -> float:
    """Exponent ``p`` in ``int k^2 ~ (T - t)^(-p)`` near a curvature blow-up.

    ``T`` defaults to the time of the last record, which is only an
    approximation of the blow-up time; the value is for reporting.
    """
    recs = list(records)
    if not recs:
        raise InsufficientData("empty trajectory")
    T = recs[-1].t if t_blowup is None else float(t_blowup)
    t = np.array([r.t for r in recs])
    k2 = np.array([r.norms[0] for r in recs])
    ok = (t < T) & (k2 > 0.0)
    if ok.sum() < min_points:
        raise InsufficientData(f"need {min_points} samples before the blow-up time, got {int(ok.sum())}")
    # the later half of the samples carries the asymptotics
    n = max(min_points, int(ok.sum()) // 2)
    gap, val = (T - t[ok])[-n:], k2[ok][-n:]
    slope = np.polyfit(np.log(gap), np.log(val), 1)[0]
    return float(-slope)


# --------------------------------------------------------------------------
# distance to the limiting arc


def hausdorff_to_arc(curve: DiscreteCurve, radius: float, samples: int = 4000) -> float:
    """Hausdorff distance between the polyline and the tip-centred arc of ``radius``."""
    cone = curve.cone
    X = curve.nodes
    theta = np.linspace(cone.theta1, cone.theta2, samples)
    P = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    # curve -> arc: points inside the angular range are |r - R| away
    ang = np.arctan2(X[:, 1], X[:, 0])
    r = np.hypot(X[:, 0], X[:, 1])
    inside = (ang <= cone.theta1 + 1e-15) & (ang >= cone.theta2 - 1e-15)
    d1 = np.where(inside, np.abs(r - radius), np.inf)
    ends = np.min(np.hypot(*(X[:, None, :] - P[[0, -1]][None, :, :]).transpose(2, 0, 1)), axis=1)
    d_curve = float(np.max(np.minimum(d1, ends)))
    # arc -> polyline: distance to the nearest segment
    A = X[:-1]
    B = X[1:]
    AB = B - A
    denom = np.einsum("ij,ij->i", AB, AB)
    d_arc = 0.0
    for chunk in np.array_split(P, max(1, samples // 500)):
        AP = chunk[:, None, :] - A[None, :, :]
        u = np.clip(np.einsum("pij,ij->pi", AP, AB) / denom, 0.0, 1.0)
        proj = A[None, :, :] + u[..., None] * AB[None, :, :]
        dist = np.hypot(*(chunk[:, None, :] - proj).transpose(2, 0, 1)).min(axis=1)
        d_arc = max(d_arc, float(dist.max()))
    return max(d_curve, d_arc)
