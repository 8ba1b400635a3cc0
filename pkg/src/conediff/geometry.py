"""Cone geometry and discrete open curves with their integral quantities.

A curve is an ordered array of ``N + 1`` nodes running from the ray at angle
``theta1`` (node 0) to the ray at angle ``theta2`` (node N).  With this
orientation the normal ``nu = J tau`` (``J`` = rotation by +pi/2) points away
from the tip on arcs centred at the tip, so those arcs have ``k = 1/r > 0``
and positive enclosed area.

Discrete conventions used throughout the package
------------------------------------------------
* ``h[j]``   chord length of segment ``(j, j+1)``; arclength ``s`` is the
  cumulative chord sum.
* ``G_j = J (X_{j+1} - X_{j-1}) / 2``; the node normal is ``G_j / |G_j|`` and
  ``g_j = |G_j|`` is the dual length used by the curvature stencil.
* ``k_j = <nu_j, t_{j-1/2} - t_{j+1/2}> / g_j``, i.e. ``k = -<X_ss, nu>``
  with a second difference of position.
* Nodal integrals use trapezoid weights on the chord lengths, so
  ``sum(weights) == length`` exactly.

When a cone is attached, one ghost node is placed at each end by reflecting
the first interior node across the ray.  This realises perpendicular contact
and the even extension of curvature at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "ArcSpec",
    "BoundaryViolation",
    "Cone",
    "DegenerateCurve",
    "DiscreteCurve",
    "arclength_laplacian",
    "area",
    "average_curvature",
    "build_tables",
    "equal_chord_nodes",
    "length",
    "make_arc",
    "oscillation_of_curvature",
    "rotation_number",
]

MIN_NODES = 9


class DegenerateCurve(ValueError):
    """Raised for curves with too few nodes or zero-length segments."""


class BoundaryViolation(ValueError):
    """Raised when curve endpoints are not on their rays."""


def _reflection(theta: float) -> np.ndarray:
    c, s = math.cos(2.0 * theta), math.sin(2.0 * theta)
    return np.array([[c, s], [s, -c]])


@dataclass(frozen=True)
class Cone:
    """Region between two rays from the origin, ``0 <= theta2 < theta1 < pi``."""

    theta1: float
    theta2: float

    def __post_init__(self):
        t1, t2 = float(self.theta1), float(self.theta2)
        if not (math.isfinite(t1) and math.isfinite(t2)):
            raise ValueError("cone angles must be finite")
        if not (0.0 <= t2 < t1 < math.pi):
            raise ValueError(
                f"cone angles must satisfy 0 <= theta2 < theta1 < pi, got "
                f"theta1={t1!r}, theta2={t2!r}"
            )
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)

    @property
    def opening(self) -> float:
        return self.theta1 - self.theta2

    @property
    def omega(self) -> float:
        """Rotation number of every compatible curve in this cone."""
        return self.opening / (2.0 * math.pi)

    def direction(self, ray: int) -> np.ndarray:
        th = self.theta1 if ray == 1 else self.theta2
        return np.array([math.cos(th), math.sin(th)])

    def inward_normal(self, ray: int) -> np.ndarray:
        """Unit vector perpendicular to the ray, pointing into the cone (e-/e+)."""
        if ray == 1:
            return np.array([math.sin(self.theta1), -math.cos(self.theta1)])
        return np.array([-math.sin(self.theta2), math.cos(self.theta2)])

    def reflection(self, ray: int) -> np.ndarray:
        return _reflection(self.theta1 if ray == 1 else self.theta2)

    def ray_parameter(self, point, ray: int) -> float:
        return float(np.dot(point, self.direction(ray)))

    def ray_offset(self, point, ray: int) -> float:
        """Signed distance of ``point`` from the line through ray ``ray``."""
        return float(np.dot(point, self.inward_normal(ray)))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Immutable node array plus the derived geometric tables.

    Use :func:`build_tables` to construct one.
    """

    nodes: np.ndarray
    cone: Cone | None
    h_ext: np.ndarray  # N + 2 chord lengths including the two ghost segments
    g: np.ndarray
    nu: np.ndarray
    k: np.ndarray
    s: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def h(self) -> np.ndarray:
        return self.h_ext[1:-1]

    @property
    def tau(self) -> np.ndarray:
        # nu = J tau  =>  tau = -J nu
        return np.column_stack([self.nu[:, 1], -self.nu[:, 0]])

    @property
    def dual(self) -> np.ndarray:
        """Arclength dual cell of each node (ghost segments at the ends)."""
        return 0.5 * (self.h_ext[:-1] + self.h_ext[1:])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def scaled(self, factor: float) -> "DiscreteCurve":
        return build_tables(self.nodes * factor, self.cone)

    def segment_ratio(self) -> float:
        h = self.h
        return float(h.max() / h.min())


def ghost_nodes(nodes: np.ndarray, cone: Cone | None) -> tuple[np.ndarray, np.ndarray]:
    """Ghost positions beyond node 0 and node N."""
    if cone is not None:
        return cone.reflection(1) @ nodes[1], cone.reflection(2) @ nodes[-2]
    # quadratic extrapolation gives one-sided second-order stencils
    first = 3.0 * nodes[0] - 3.0 * nodes[1] + nodes[2]
    last = 3.0 * nodes[-1] - 3.0 * nodes[-2] + nodes[-3]
    return first, last


def extended_nodes(nodes: np.ndarray, cone: Cone | None) -> np.ndarray:
    first, last = ghost_nodes(nodes, cone)
    return np.vstack([first, nodes, last])


def build_tables(nodes, cone: Cone | None = None) -> DiscreteCurve:
    """Derive arclength, normal and curvature tables for ``nodes``.

    Parameters
    ----------
    nodes : array_like, shape (N + 1, 2)
        Node positions, node 0 on ray ``theta1`` and node N on ray ``theta2``.
    cone : Cone, optional
        If given, end stencils use ghost nodes reflected across the rays;
        otherwise one-sided (quadratically extrapolated) stencils are used.

    Raises
    ------
    DegenerateCurve
        Fewer than 9 nodes, non-finite entries, or coincident consecutive nodes.
    """
    X = np.array(nodes, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise DegenerateCurve("nodes must have shape (N+1, 2)")
    if len(X) < MIN_NODES:
        raise DegenerateCurve(f"need at least {MIN_NODES} nodes, got {len(X)}")
    if not np.all(np.isfinite(X)):
        raise DegenerateCurve("nodes contain non-finite values")
    seg = np.hypot(*np.diff(X, axis=0).T)
    scale = max(float(np.abs(X).max()), 1e-300)
    if np.any(seg <= 1e-14 * scale):
        j = int(np.argmin(seg))
        raise DegenerateCurve(f"degenerate segment between nodes {j} and {j + 1}")

    ext = extended_nodes(X, cone)
    h_ext, g, nu, k = kernels.curve_tables(ext)
    if np.any(g <= 0.0) or not np.all(np.isfinite(k)):
        raise DegenerateCurve("curve folds back on itself at a node")

    s = np.concatenate([[0.0], np.cumsum(h_ext[1:-1])])
    w = 0.5 * (h_ext[:-1] + h_ext[1:])
    w[0] = 0.5 * h_ext[1]
    w[-1] = 0.5 * h_ext[-2]
    return DiscreteCurve(
        nodes=_freeze(X),
        cone=cone,
        h_ext=_freeze(h_ext),
        g=_freeze(g),
        nu=_freeze(nu),
        k=_freeze(k),
        s=_freeze(s),
        weights=_freeze(w),
    )


def equal_chord_nodes(nodes, n: int | None = None, *, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """Resample a polyline to ``n`` equal chords along a monotone cubic interpolant.

    The interpolant (PCHIP in cumulative chord length, per coordinate) passes
    through the given nodes; end nodes are kept exactly.  Parameter positions
    are corrected iteratively until all chords agree to ``tol`` relative, so a
    polyline that already has equal chords is returned unchanged up to
    round-off.
    """
    from scipy.interpolate import PchipInterpolator

    X = np.asarray(nodes, dtype=float)
    n = len(X) - 1 if n is None else int(n)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(X, axis=0).T))])
    curve = PchipInterpolator(s, X, axis=0)
    sigma = np.linspace(0.0, s[-1], n + 1)
    for _ in range(max_iter):
        Y = curve(sigma)
        Y[0], Y[-1] = X[0], X[-1]
        c = np.hypot(*np.diff(Y, axis=0).T)
        S = np.concatenate([[0.0], np.cumsum(c)])
        mean = S[-1] / n
        if np.max(np.abs(c - mean)) <= tol * mean:
            break
        sigma = np.interp(np.linspace(0.0, S[-1], n + 1), S, sigma)
    return Y


def arclength_laplacian(values, curve: DiscreteCurve) -> np.ndarray:
    """Second arclength difference of a nodal table, evenly extended at both ends.

    The stencil is in flux form, so ``curve.integrate`` of the result is zero to
    round-off (no flux through the endpoints).
    """
    v = np.asarray(values, dtype=float)
    flux = np.diff(v) / curve.h
    out = np.empty_like(v)
    out[1:-1] = flux[1:] - flux[:-1]
    out[0] = flux[0] + (v[1] - v[0]) / curve.h_ext[0]
    out[-1] = (v[-2] - v[-1]) / curve.h_ext[-1] - flux[-1]
    return out / curve.dual


def length(curve: DiscreteCurve) -> float:
    """Total chord length."""
    return float(curve.s[-1])


def _check_on_rays(curve: DiscreteCurve, tol: float | None = None):
    cone = curve.cone
    if cone is None:
        return
    L = length(curve)
    tol = 1e-10 * L if tol is None else tol
    for idx, ray in ((0, 1), (-1, 2)):
        p = curve.nodes[idx]
        off = abs(cone.ray_offset(p, ray))
        if off > tol or cone.ray_parameter(p, ray) < 0.0:
            raise BoundaryViolation(
                f"endpoint {0 if idx == 0 else curve.N} is off ray {ray} "
                f"(offset {off:.3e}, tolerance {tol:.3e})"
            )


def area(curve: DiscreteCurve, *, check: bool = True) -> float:
    """Area between the curve and the two rays.

    Midpoint rule for ``1/2 int <X, nu> ds`` on each chord, which is the
    polygon (shoelace) area with the tip as extra vertex.
    """
    if check:
        _check_on_rays(curve)
    X = curve.nodes
    cross = X[:-1, 0] * X[1:, 1] - X[:-1, 1] * X[1:, 0]
    return float(-0.5 * cross.sum())


def total_curvature(curve: DiscreteCurve) -> float:
    return curve.integrate(curve.k)


def average_curvature(curve: DiscreteCurve) -> float:
    return total_curvature(curve) / length(curve)


def oscillation_of_curvature(curve: DiscreteCurve) -> float:
    """Scale-invariant ``L * int (k - kbar)^2 ds``."""
    kbar = average_curvature(curve)
    return length(curve) * curve.integrate((curve.k - kbar) ** 2)


def rotation_number(curve: DiscreteCurve) -> float:
    return total_curvature(curve) / (2.0 * math.pi)


@dataclass(frozen=True)
class ArcSpec:
    """Circular arc centred at the cone tip, given by radius or enclosed area."""

    cone: Cone
    radius: float | None = None
    area: float | None = None

    def __post_init__(self):
        if (self.radius is None) == (self.area is None):
            raise ValueError("give exactly one of radius or area")
        if self.radius is None:
            if not self.area > 0:
                raise ValueError("arc area must be positive")
            object.__setattr__(self, "radius", math.sqrt(2.0 * self.area / self.cone.opening))
        else:
            if not self.radius > 0:
                raise ValueError("arc radius must be positive")
            object.__setattr__(self, "area", 0.5 * self.radius**2 * self.cone.opening)


def arc_nodes(cone: Cone, radius: float, n: int) -> np.ndarray:
    theta = np.linspace(cone.theta1, cone.theta2, n + 1)
    nodes = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    # exact ray placement at the ends
    nodes[0] = radius * cone.direction(1)
    nodes[-1] = radius * cone.direction(2)
    return nodes


def make_arc(spec: ArcSpec, n: int) -> DiscreteCurve:
    """Stationary solution: tip-centred arc sampled at uniform angles."""
    if n + 1 < MIN_NODES:
        raise DegenerateCurve(f"need at least {MIN_NODES} nodes, got {n + 1}")
    return build_tables(arc_nodes(spec.cone, spec.radius, n), spec.cone)
