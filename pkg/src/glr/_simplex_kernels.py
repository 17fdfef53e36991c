"""Bounded-variable primal simplex iterations with Bland's rule.

Both kernels operate in place on a dense tableau for

    maximize cost @ y   s.t.  rows of T describe B^-1 A,   0 <= y <= ub

with ``d`` the reduced-cost row, ``xB`` the basic values and ``at_upper``
marking nonbasic columns resting at their (finite) upper bound.  The two
implementations apply the same entering/leaving rules and must agree.
"""

from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

TIE_TOL = 1e-12
# a tied leaving row must carry at least this share of the largest tied pivot
PIVOT_SHARE = 1e-2


def iterate_numpy(T, d, xB, basis, is_basic, at_upper, ub, allowed, max_iter, dtol, ptol):
    m = T.shape[0]
    it = 0
    while True:
        # reduced-cost roundoff grows with the column, so the test does too
        scale = np.maximum(1.0, np.abs(T).max(axis=0)) if m else np.ones(T.shape[1])
        improving = np.where(at_upper, d < -dtol * scale, d > dtol * scale)
        cand = np.flatnonzero(improving & allowed & ~is_basic)
        if cand.size == 0:
            return OPTIMAL, -1, 0.0, it
        if it >= max_iter:
            return ITERATION_LIMIT, -1, 0.0, it
        j = cand[0]
        delta = -1.0 if at_upper[j] else 1.0
        col = delta * T[:, j]
        # pivot tolerance scales with the column so roundoff never qualifies
        ptol_j = ptol * max(1.0, np.abs(col).max() if m else 0.0)

        theta = np.full(m, np.inf)
        dec = col > ptol_j
        theta[dec] = np.maximum(xB[dec], 0.0) / col[dec]
        ubB = ub[basis]
        inc = (col < -ptol_j) & np.isfinite(ubB)
        theta[inc] = np.maximum(ubB[inc] - xB[inc], 0.0) / -col[inc]
        tmin = min(theta.min() if m else np.inf, ub[j])
        if not np.isfinite(tmin):
            return UNBOUNDED, j, delta, it

        cut = tmin + TIE_TOL * max(1.0, tmin)
        tied = np.flatnonzero(theta <= cut)
        r = -1
        best = j if ub[j] <= cut else T.shape[1]
        if tied.size:
            # Bland among tied rows, skipping pivots far smaller than the best one
            mag = np.abs(col[tied])
            tied = tied[mag >= PIVOT_SHARE * mag.max()]
            k = tied[np.argmin(basis[tied])]
            if basis[k] < best:
                r = k
        it += 1

        xB -= tmin * col
        if r < 0:
            at_upper[j] = not at_upper[j]
            continue
        leaving = basis[r]
        at_upper[leaving] = col[r] < 0
        entering_value = tmin if delta > 0 else ub[j] - tmin
        prow = T[r] / T[r, j]
        T -= np.outer(T[:, j], prow)
        T[r] = prow
        d -= d[j] * prow
        basis[r] = j
        is_basic[leaving] = False
        is_basic[j] = True
        at_upper[j] = False
        xB[r] = entering_value


@njit
def iterate_numba(T, d, xB, basis, is_basic, at_upper, ub, allowed, max_iter, dtol, ptol):
    m, N = T.shape
    it = 0
    while True:
        j = -1
        for c in range(N):
            if is_basic[c] or not allowed[c]:
                continue
            if (at_upper[c] and d[c] < -dtol) or (not at_upper[c] and d[c] > dtol):
                cm = 1.0
                for i in range(m):
                    cm = max(cm, abs(T[i, c]))
                if abs(d[c]) > dtol * cm:
                    j = c
                    break
        if j < 0:
            return OPTIMAL, -1, 0.0, it
        if it >= max_iter:
            return ITERATION_LIMIT, -1, 0.0, it
        delta = -1.0 if at_upper[j] else 1.0
        cmax = 1.0
        for i in range(m):
            cmax = max(cmax, abs(T[i, j]))
        ptol_j = ptol * cmax

        tmin = ub[j]
        for i in range(m):
            a = delta * T[i, j]
            if a > ptol_j:
                t = max(xB[i], 0.0) / a
            elif a < -ptol_j and np.isfinite(ub[basis[i]]):
                t = max(ub[basis[i]] - xB[i], 0.0) / -a
            else:
                continue
            if t < tmin:
                tmin = t
        if not np.isfinite(tmin):
            return UNBOUNDED, j, delta, it

        cut = tmin + TIE_TOL * max(1.0, tmin)
        r = -1
        best = j if ub[j] <= cut else N
        amax = 0.0
        for i in range(m):
            a = delta * T[i, j]
            if a > ptol_j:
                t = max(xB[i], 0.0) / a
            elif a < -ptol_j and np.isfinite(ub[basis[i]]):
                t = max(ub[basis[i]] - xB[i], 0.0) / -a
            else:
                continue
            if t <= cut:
                amax = max(amax, abs(a))
        for i in range(m):
            a = delta * T[i, j]
            if a > ptol_j:
                t = max(xB[i], 0.0) / a
            elif a < -ptol_j and np.isfinite(ub[basis[i]]):
                t = max(ub[basis[i]] - xB[i], 0.0) / -a
            else:
                continue
            if t <= cut and abs(a) >= PIVOT_SHARE * amax and basis[i] < best:
                best = basis[i]
                r = i
        it += 1

        for i in range(m):
            xB[i] -= tmin * delta * T[i, j]
        if r < 0:
            at_upper[j] = not at_upper[j]
            continue
        leaving = basis[r]
        at_upper[leaving] = delta * T[r, j] < 0
        entering_value = tmin if delta > 0 else ub[j] - tmin
        piv = T[r, j]
        for c in range(N):
            T[r, c] /= piv
        for i in range(m):
            if i == r:
                continue
            f = T[i, j]
            if f != 0.0:
                for c in range(N):
                    T[i, c] -= f * T[r, c]
        f = d[j]
        if f != 0.0:
            for c in range(N):
                d[c] -= f * T[r, c]
        basis[r] = j
        is_basic[leaving] = False
        is_basic[j] = True
        at_upper[j] = False
        xB[r] = entering_value


iterate = iterate_numba if USE_NUMBA else iterate_numpy
