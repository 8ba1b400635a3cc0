# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: curve tables and the banded implicit step.

Same contracts as ``conediff._pykernels``; the band matrix is assembled in
LAPACK storage directly and factored with ``dgbsv``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_lapack cimport dgbsv

cnp.import_array()

BACKEND = "cython"


def curve_tables(ext):
    """Chord lengths, dual lengths, normals and curvature (see ``_pykernels``)."""
    cdef const double[:, ::1] X = np.ascontiguousarray(ext, dtype=np.float64)
    cdef Py_ssize_t ne = X.shape[0]
    cdef Py_ssize_t n = ne - 2
    h_arr = np.empty(ne - 1)
    g_arr = np.empty(n)
    nu_arr = np.empty((n, 2))
    k_arr = np.empty(n)
    cdef double[::1] h = h_arr
    cdef double[::1] g = g_arr
    cdef double[:, ::1] nu = nu_arr
    cdef double[::1] k = k_arr
    cdef double[:, ::1] t = np.empty((ne - 1, 2))
    cdef Py_ssize_t j
    cdef double dx, dy, cx, cy, gx, gy
    for j in range(ne - 1):
        dx = X[j + 1, 0] - X[j, 0]
        dy = X[j + 1, 1] - X[j, 1]
        h[j] = sqrt(dx * dx + dy * dy)
        t[j, 0] = dx / h[j]
        t[j, 1] = dy / h[j]
    for j in range(n):
        cx = 0.5 * (X[j + 2, 0] - X[j, 0])
        cy = 0.5 * (X[j + 2, 1] - X[j, 1])
        gx = -cy
        gy = cx
        g[j] = sqrt(gx * gx + gy * gy)
        nu[j, 0] = gx / g[j]
        nu[j, 1] = gy / g[j]
        k[j] = (nu[j, 0] * (t[j, 0] - t[j + 1, 0]) + nu[j, 1] * (t[j, 1] - t[j + 1, 1])) / g[j]
    return h_arr, g_arr, nu_arr, k_arr


cdef void _laplacian_rows(const double[::1] h_ext, double[:, ::1] P) noexcept nogil:
    """Tridiagonal arclength Laplacian with even end folding; P[j] = (lower, diag, upper)."""
    cdef Py_ssize_t n = h_ext.shape[0] - 1
    cdef Py_ssize_t j
    cdef double hm, hp, w
    for j in range(n):
        hm = h_ext[j]
        hp = h_ext[j + 1]
        w = 0.5 * (hm + hp)
        P[j, 0] = 1.0 / (hm * w)
        P[j, 2] = 1.0 / (hp * w)
        P[j, 1] = -(P[j, 0] + P[j, 2])
    P[0, 2] += P[0, 0]
    P[0, 0] = 0.0
    P[n - 1, 0] += P[n - 1, 2]
    P[n - 1, 2] = 0.0


def implicit_solve(X, h_ext, g, nu, k, R1, R2, int m, double dt):
    """One linearly implicit step (see ``_pykernels.implicit_solve``)."""
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] hv = np.ascontiguousarray(h_ext, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[:, ::1] nv = np.ascontiguousarray(nu, dtype=np.float64)
    cdef const double[::1] kv = np.ascontiguousarray(k, dtype=np.float64)
    cdef const double[:, ::1] r1 = np.ascontiguousarray(R1, dtype=np.float64)
    cdef const double[:, ::1] r2 = np.ascontiguousarray(R2, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t j, l, d, e
    cdef int hw = m + 1  # half-width of Lap^m K diag(nu)
    cdef int width = 2 * hw + 1
    cdef double hm, hp, a, cm0, cm1, cp0, cp1

    # Kn[j, o]: change of (K Y)_j per unit normal displacement of node j + o - 1
    cdef double[:, ::1] Kn = np.zeros((n, 3))
    for j in range(n):
        hm = hv[j]
        hp = hv[j + 1]
        cm0 = -nv[j, 0] / (gv[j] * hm)
        cm1 = -nv[j, 1] / (gv[j] * hm)
        cp0 = -nv[j, 0] / (gv[j] * hp)
        cp1 = -nv[j, 1] / (gv[j] * hp)
        if j == 0:  # ghost Y_{-1} = R1 Y_1
            cp0, cp1 = cp0 + cm0 * r1[0, 0] + cm1 * r1[1, 0], cp1 + cm0 * r1[0, 1] + cm1 * r1[1, 1]
        if j == n - 1:  # ghost Y_{N+1} = R2 Y_{N-1}
            cm0, cm1 = cm0 + cp0 * r2[0, 0] + cp1 * r2[1, 0], cm1 + cp0 * r2[0, 1] + cp1 * r2[1, 1]
        Kn[j, 1] = (1.0 / hm + 1.0 / hp) / gv[j]  # nu_j . nu_j = 1
        if j > 0:
            Kn[j, 0] = cm0 * nv[j - 1, 0] + cm1 * nv[j - 1, 1]
        if j < n - 1:
            Kn[j, 2] = cp0 * nv[j + 1, 0] + cp1 * nv[j + 1, 1]

    cdef double[:, ::1] P = np.zeros((n, 3))
    _laplacian_rows(hv, P)

    # rows of P^m Kn stored by offset: cur[j, o] for node j + o - hw
    cdef double[:, ::1] cur = np.zeros((n, width))
    cdef double[:, ::1] nxt = np.zeros((n, width))
    for j in range(n):
        for e in range(3):
            cur[j, hw + e - 1] = Kn[j, e]
    cdef int it
    for it in range(m):
        nxt[:, :] = 0.0
        for j in range(n):
            for d in range(-1, 2):
                if j + d < 0 or j + d >= n:
                    continue
                a = P[j, d + 1]
                if a == 0.0:
                    continue
                for e in range(width):
                    l = d + e - hw
                    if l < -hw or l > hw:
                        continue
                    nxt[j, l + hw] += a * cur[j + d, e]
        cur, nxt = nxt, cur

    # right-hand side dt * sigma * (sign P^m k)
    cdef double[::1] F = np.array(kv, dtype=np.float64)
    cdef double[::1] Ft = np.empty(n)
    for it in range(m):
        for j in range(n):
            a = P[j, 1] * F[j]
            if j > 0:
                a += P[j, 0] * F[j - 1]
            if j < n - 1:
                a += P[j, 2] * F[j + 1]
            Ft[j] = a
        F[:] = Ft

    # LAPACK band storage: A[i, c] at ab[kl + ku + i - c, c], Fortran order
    cdef int nn = <int> n
    cdef int kl = hw, ku = hw, nrhs = 1, info = 0
    cdef int ldab = 2 * kl + ku + 1
    ab_arr = np.zeros((ldab, nn), order="F")
    cdef double[::1, :] ab = ab_arr
    rhs_arr = np.empty(nn)
    cdef double[::1] rhs = rhs_arr
    cdef double sign = 1.0 if m % 2 == 1 else -1.0
    cdef double coef
    for j in range(n):
        coef = sign * 0.5 * (hv[j] + hv[j + 1]) / gv[j]
        for e in range(width):
            l = j + e - hw
            if l < 0 or l >= n:
                continue
            ab[kl + ku + j - l, l] -= dt * coef * cur[j, e]
        ab[kl + ku, j] += 1.0
        rhs[j] = dt * coef * F[j]

    piv_arr = np.empty(nn, dtype=np.intc)
    cdef int[::1] piv = piv_arr
    with nogil:
        dgbsv(&nn, &kl, &ku, &nrhs, &ab[0, 0], &ldab, &piv[0], &rhs[0], &nn, &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"banded solve failed (info={info})")
    out = np.array(Xv, dtype=np.float64)
    out += rhs_arr[:, None] * np.asarray(nv)
    return out
