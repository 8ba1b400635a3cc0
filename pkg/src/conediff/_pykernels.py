"""NumPy/SciPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled kernels are tested against.
"""

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded

BACKEND = "python"


def curve_tables(ext):
    """Chord lengths, dual lengths, normals and curvature.

    Parameters
    ----------
    ext : ndarray, shape (N + 3, 2)
        Nodes with one ghost node prepended and appended.

    Returns
    -------
    h_ext : (N + 2,) chord lengths of all segments of ``ext``
    g : (N + 1,) half centred chords ``|X_{j+1} - X_{j-1}| / 2``
    nu : (N + 1, 2) unit normals ``J (X_{j+1} - X_{j-1}) / |.|``
    k : (N + 1,) curvature ``<nu, t_{j-1/2} - t_{j+1/2}> / g``
    """
    ext = np.asarray(ext, dtype=float)
    d = ext[1:] - ext[:-1]
    h = np.hypot(d[:, 0], d[:, 1])
    t = d / h[:, None]
    c = 0.5 * (ext[2:] - ext[:-2])
    G = np.column_stack([-c[:, 1], c[:, 0]])
    g = np.hypot(G[:, 0], G[:, 1])
    nu = G / g[:, None]
    k = np.einsum("ij,ij->i", nu, t[:-1] - t[1:]) / g
    return h, g, nu, k


def _normal_curvature_operator(h_ext, g, nu, R1, R2):
    """Tridiagonal (n, n) map from normal displacements ``a`` to the change of ``K Y``.

    ``K`` is the curvature stencil linearised at frozen metric and normals;
    displacing node ``l`` by ``a_l nu_l`` changes it by ``sum_l K[j, l] . nu_l a_l``.
    """
    n = len(g)
    hm, hp = h_ext[:-1], h_ext[1:]
    am = -nu / (g * hm)[:, None]
    ap = -nu / (g * hp)[:, None]
    a0 = nu * ((1.0 / hm + 1.0 / hp) / g)[:, None]
    # ghost Y_{-1} = R1 Y_1 and Y_{N+1} = R2 Y_{N-1}
    ap = ap.copy()
    am = am.copy()
    ap[0] = ap[0] + am[0] @ R1
    am[-1] = am[-1] + ap[-1] @ R2
    lower = np.einsum("ij,ij->i", am[1:], nu[:-1])
    diag = np.einsum("ij,ij->i", a0, nu)
    upper = np.einsum("ij,ij->i", ap[:-1], nu[1:])
    return sparse.diags([lower, diag, upper], [-1, 0, 1], shape=(n, n), format="csr")


def _laplacian_operator(h_ext):
    n = len(h_ext) - 1
    hm, hp = h_ext[:-1], h_ext[1:]
    w = 0.5 * (hm + hp)
    lo = 1.0 / (hm * w)
    up = 1.0 / (hp * w)
    diag = -(lo + up)
    upper = up[:-1].copy()
    lower = lo[1:].copy()
    # even extension folds the ghost value onto the first interior node
    upper[0] += lo[0]
    lower[-1] += up[-1]
    return sparse.diags([lower, diag, upper], [-1, 0, 1], shape=(n, n), format="csr")


def implicit_solve(X, h_ext, g, nu, k, R1, R2, m, dt):
    """One linearly implicit step of the order-(2m+2) normal flow.

    Finds ``Y = X + a nu`` with ``a = dt * sigma * F(Y)`` and
    ``F = (-1)^(m+1) Lap^m K Y``; the metric (``h_ext``, ``g``), the normals
    and the ghost reflections are frozen at ``X``.  ``sigma = dual / g`` makes
    the discrete area rate vanish identically.  ``k`` is the nodal curvature
    of ``X`` (equal to ``K X`` up to round-off).

    The unknown is the scalar normal displacement ``a``: the banded system
    ``(I - dt sigma Lap^m K diag(nu)) a = dt sigma Lap^m k`` (signs per ``m``)
    has half-bandwidth ``m + 1``.  Solving for positions instead couples two
    nearly proportional rows per node and loses accuracy ~ eps * dt * |A|.

    Raises
    ------
    numpy.linalg.LinAlgError
        Singular banded system.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    P = _laplacian_operator(h_ext)
    Q = _normal_curvature_operator(h_ext, g, nu, R1, R2)
    F = np.asarray(k, dtype=float)
    for _ in range(m):
        Q = P @ Q
        F = P @ F
    sign = 1.0 if m % 2 == 1 else -1.0
    dual = 0.5 * (h_ext[:-1] + h_ext[1:])
    coef = sign * dual / g
    A = (sparse.identity(n, format="csr") - dt * sparse.diags(coef) @ Q).tocoo()
    bw = m + 1
    ab = np.zeros((2 * bw + 1, n))
    ab[bw + A.row - A.col, A.col] = A.data
    a = solve_banded((bw, bw), ab, dt * coef * F, check_finite=True)
    return X + a[:, None] * nu
