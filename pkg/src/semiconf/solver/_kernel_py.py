"""Pure numpy twin of the compiled kernel (same algorithm, same stopping rules)."""
from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

DAMP_FLOOR = 1e-2


class _Structure:
    def __init__(self, slot, eptr, idx, coef, nvar, kd):
        n_e = len(eptr) - 1
        counts = np.diff(eptr)
        self.entry_edge = np.repeat(np.arange(n_e), counts)
        self.n_e = n_e
        s = slot[idx]
        # all ordered entry pairs (p, q) within an edge, both free
        ps, qs = [], []
        for e in range(n_e):
            ent = np.arange(eptr[e], eptr[e + 1])
            ent = ent[s[ent] >= 0]
            if len(ent):
                P, Q = np.meshgrid(ent, ent, indexing="ij")
                ps.append(P.ravel())
                qs.append(Q.ravel())
        p = np.concatenate(ps) if ps else np.zeros(0, dtype=np.intp)
        q = np.concatenate(qs) if qs else np.zeros(0, dtype=np.intp)
        self.pair_p, self.pair_q = p, q
        self.pair_edge = self.entry_edge[p]
        self.flat = []
        for a in range(2):
            for b in range(2):
                i = 2 * s[p] + a
                j = 2 * s[q] + b
                f = np.where(j <= i, (i - j) * nvar + j, -1)
                self.flat.append(f)
        self.free_entry = np.flatnonzero(s >= 0)
        self.gvar = 2 * s[self.free_entry]


def _residuals(y, st, idx, coef, len2):
    # long double like the compiled kernel (np.bincount would round to double)
    c = coef.astype(np.longdouble)
    dx = np.zeros(st.n_e, dtype=np.longdouble)
    dy = np.zeros(st.n_e, dtype=np.longdouble)
    np.add.at(dx, st.entry_edge, c * y[idx, 0])
    np.add.at(dy, st.entry_edge, c * y[idx, 1])
    rl = dx * dx + dy * dy - len2.astype(np.longdouble)
    r = rl.astype(float)
    d = np.stack([dx, dy], axis=1).astype(float)
    return r, d, (rl @ rl), float(np.abs(r).max()) if len(r) else 0.0


def lm_solve(y, slot, eptr, idx, coef, len2, nvar, kd, max_iter, lam0, tol, soft_tol):
    slot = np.asarray(slot, dtype=np.intp)
    idx = np.asarray(idx, dtype=np.intp)
    eptr = np.asarray(eptr, dtype=np.intp)
    st = _Structure(slot, eptr, idx, coef, nvar, kd)
    free = np.flatnonzero(slot >= 0)
    fslot = slot[free]
    r, d, cost, maxr = _residuals(y, st, idx, coef, len2)
    if nvar == 0:
        return (0 if maxr < tol else 1), 0, maxr
    size = (kd + 1) * nvar
    fe = st.free_entry
    ee = st.entry_edge[fe]
    lam = lam0
    status = 2
    it = 0
    while it < max_iter:
        if maxr < tol:
            status = 0
            break
        jx = 2.0 * d[:, 0][st.entry_edge] * coef
        jy = 2.0 * d[:, 1][st.entry_edge] * coef
        g = np.zeros(nvar)
        np.add.at(g, st.gvar, jx[fe] * r[ee])
        np.add.at(g, st.gvar + 1, jy[fe] * r[ee])
        jac = (jx, jy)
        H = np.zeros(size)
        k = 0
        for a in range(2):
            for b in range(2):
                f = st.flat[k]
                m = f >= 0
                H += np.bincount(f[m], (jac[a][st.pair_p] * jac[b][st.pair_q])[m], minlength=size)
                k += 1
        H = H.reshape(kd + 1, nvar)
        diag = H[0].copy()
        floor = DAMP_FLOOR * max(diag.max(), 1.0)
        accepted = False
        while True:
            W = H.copy()
            W[0] = diag + lam * np.maximum(diag, floor)
            try:
                c = cholesky_banded(W, lower=True, check_finite=False)
                delta = -cho_solve_banded((c, True), g, check_finite=False)
            except (LinAlgError, ValueError):
                delta = None
            if delta is not None:
                trial = y.copy()  # long double
                trial[free, 0] += delta[2 * fslot]
                trial[free, 1] += delta[2 * fslot + 1]
                rt, dt, newcost, maxr_t = _residuals(trial, st, idx, coef, len2)
                if newcost < cost:
                    accepted = True
                    break
            lam *= 10.0
            if lam > 1e16:
                break
        if not accepted:
            status = 0 if maxr < soft_tol else 1
            break
        y[...] = trial
        r, d, cost, maxr = rt, dt, newcost, maxr_t
        lam = lam / 10.0 if lam > 1e-14 else 1e-15
        it += 1
    if it >= max_iter and maxr < tol:
        status = 0
    return status, it, maxr
