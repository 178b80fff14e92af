# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Levenberg-Marquardt on squared-distance residuals with a banded normal matrix.

Base coordinates and residuals are kept in ``long double``; the Jacobian and
the banded solve use ``double``.  At singular realizations (where the
Jacobian drops rank) the attainable accuracy is about the square root of the
residual floor, so the extra precision is what makes such points accurate
to ~1e-9 rather than ~1e-7.

Edge ``e`` measures the vector ``d_e = sum_p coef[p] * y[idx[p]]`` over
``p`` in ``eptr[e]:eptr[e+1]``; its residual is ``|d_e|^2 - len2[e]``.
"""
import numpy as np

from libc.math cimport fabs
from scipy.linalg.cython_lapack cimport dpbtrf, dpbtrs

# damping never falls below this fraction of the largest Hessian diagonal
cdef double DAMP_FLOOR = 1e-2


cdef long double _residuals(long double[:, ::1] y, int[::1] eptr, int[::1] idx, double[::1] coef,
                            double[::1] len2, double[::1] r, double[:, ::1] d, double* maxr) noexcept nogil:
    cdef Py_ssize_t e, p
    cdef long double dx, dy, cost = 0.0, x
    cdef double m = 0.0
    for e in range(len2.shape[0]):
        dx = 0.0
        dy = 0.0
        for p in range(eptr[e], eptr[e + 1]):
            dx += coef[p] * y[idx[p], 0]
            dy += coef[p] * y[idx[p], 1]
        d[e, 0] = dx
        d[e, 1] = dy
        x = dx * dx + dy * dy - <long double>len2[e]
        r[e] = <double>x
        cost += x * x
        if fabs(r[e]) > m:
            m = fabs(r[e])
    maxr[0] = m
    return cost


cdef void _assemble(int[::1] slot, int[::1] eptr, int[::1] idx, double[::1] coef, double[::1] r,
                    double[:, ::1] d, double[:, ::1] H, double[::1] g) noexcept nogil:
    cdef Py_ssize_t e, p, q, a, b
    cdef int i, j, sp, sq
    cdef double jp[2]
    cdef double jq[2]
    H[:, :] = 0.0
    g[:] = 0.0
    for e in range(r.shape[0]):
        for p in range(eptr[e], eptr[e + 1]):
            sp = slot[idx[p]]
            if sp < 0:
                continue
            jp[0] = 2.0 * d[e, 0] * coef[p]
            jp[1] = 2.0 * d[e, 1] * coef[p]
            g[2 * sp] += jp[0] * r[e]
            g[2 * sp + 1] += jp[1] * r[e]
            for q in range(eptr[e], eptr[e + 1]):
                sq = slot[idx[q]]
                if sq < 0:
                    continue
                jq[0] = 2.0 * d[e, 0] * coef[q]
                jq[1] = 2.0 * d[e, 1] * coef[q]
                for a in range(2):
                    i = 2 * sp + a
                    for b in range(2):
                        j = 2 * sq + b
                        if j <= i:
                            H[j, i - j] += jp[a] * jq[b]


def lm_solve(long double[:, ::1] y, int[::1] slot, int[::1] eptr, int[::1] idx, double[::1] coef,
             double[::1] len2, int nvar, int kd, int max_iter, double lam0, double tol, double soft_tol):
    """Minimize the sum of squared residuals over the free rows of ``y`` in place.

    ``slot[k]`` is the rank of base point ``k`` among the free ones, or -1.
    Returns ``(status, iterations, max_abs_residual)`` with status 0 when the
    tolerance was reached, 1 when stalled and 2 at the iteration cap.
    """
    cdef Py_ssize_t n_e = len2.shape[0], B = y.shape[0], v, k
    cdef double[::1] r = np.empty(n_e)
    cdef double[::1] rt = np.empty(n_e)
    cdef double[:, ::1] d = np.empty((n_e, 2))
    cdef double[:, ::1] dt = np.empty((n_e, 2))
    cdef long double[:, ::1] trial = np.array(y, copy=True)
    cdef double[:, ::1] H = np.zeros((max(nvar, 1), kd + 1))
    cdef double[:, ::1] W = np.zeros((max(nvar, 1), kd + 1))
    cdef double[::1] g = np.zeros(max(nvar, 1))
    cdef double[::1] delta = np.zeros(max(nvar, 1))
    cdef double lam = lam0, maxr, maxr_t = 0.0, dmax, hjj
    cdef long double cost, newcost = 0.0
    cdef int it = 0, status = 2, info = 0, nrhs = 1, n = nvar, kdd = kd, ldab = kd + 1
    cdef char uplo = b'L'
    cdef bint accepted
    with nogil:
        cost = _residuals(y, eptr, idx, coef, len2, r, d, &maxr)
        if nvar == 0:
            status = 0 if maxr < tol else 1
        while nvar > 0 and it < max_iter:
            if maxr < tol:
                status = 0
                break
            _assemble(slot, eptr, idx, coef, r, d, H, g)
            dmax = 1.0
            for k in range(nvar):
                if H[k, 0] > dmax:
                    dmax = H[k, 0]
            accepted = False
            while True:
                W[:, :] = H
                for k in range(nvar):
                    hjj = H[k, 0]
                    W[k, 0] = hjj + lam * (hjj if hjj > DAMP_FLOOR * dmax else DAMP_FLOOR * dmax)
                dpbtrf(&uplo, &n, &kdd, &W[0, 0], &ldab, &info)
                if info == 0:
                    for k in range(nvar):
                        delta[k] = -g[k]
                    dpbtrs(&uplo, &n, &kdd, &nrhs, &W[0, 0], &ldab, &delta[0], &n, &info)
                if info == 0:
                    for v in range(B):
                        k = slot[v]
                        if k >= 0:
                            trial[v, 0] = y[v, 0] + delta[2 * k]
                            trial[v, 1] = y[v, 1] + delta[2 * k + 1]
                    newcost = _residuals(trial, eptr, idx, coef, len2, rt, dt, &maxr_t)
                    if newcost < cost:
                        accepted = True
                        break
                lam *= 10.0
                if lam > 1e16:
                    break
            if not accepted:
                status = 0 if maxr < soft_tol else 1
                break
            for v in range(B):
                if slot[v] >= 0:
                    y[v, 0] = trial[v, 0]
                    y[v, 1] = trial[v, 1]
            r[:] = rt
            d[:, :] = dt
            cost = newcost
            maxr = maxr_t
            lam = lam / 10.0 if lam > 1e-14 else 1e-15
            it += 1
        if it >= max_iter and maxr < tol:
            status = 0
    return status, it, maxr
