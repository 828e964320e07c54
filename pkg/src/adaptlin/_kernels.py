"""Compiled sweep kernels for the constraint-system projections.

Sequential (Gauss-Seidel order) Dykstra passes propagate corrections
along a difference chain in one sweep, which a batched numpy pass cannot
do (it moves information one offset per cycle and diffuses).  Families
whose bounds exceed the current value range cannot be violated and are
skipped unless they carry nonzero corrections.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def dykstra_pass(x, duals, active, offsets, starts, stops, ups, los, bases, forward, value_range):
    """One cyclic Dykstra pass over all pair families, in place.

    Constraint i of family fi bounds x[i+offset] - x[i] in [-lo, up];
    duals[bases[fi] + (i - start)] carries its correction and active[fi]
    records whether any correction in the family is nonzero.  Returns the
    largest pre-projection violation seen.
    """
    worst = 0.0
    for fi in range(offsets.shape[0]):
        up = ups[fi]
        lo = los[fi]
        if active[fi] == 0 and up >= value_range and lo >= value_range:
            continue
        d = offsets[fi]
        s = starts[fi]
        e = stops[fi]
        b = bases[fi]
        if forward:
            i0, i1, step = s, e, 1
        else:
            i0, i1, step = e - 1, s - 1, -1
        any_dual = False
        for i in range(i0, i1, step):
            p = duals[b + i - s]
            t = x[i + d] - x[i] + 2.0 * p
            c = t
            if c > up:
                c = up
                if t - up > worst:
                    worst = t - up
            elif c < -lo:
                c = -lo
                if -lo - t > worst:
                    worst = -lo - t
            elif p == 0.0:
                continue
            shift = p + 0.5 * (c - t)
            x[i + d] += shift
            x[i] -= shift
            newp = 0.5 * (t - c)
            duals[b + i - s] = newp
            if newp != 0.0:
                any_dual = True
        active[fi] = 1 if any_dual else 0
    return worst


@njit(cache=True)
def pocs_pass(x, offsets, starts, stops, ups, los, forward, value_range):
    """Plain cyclic-projection pass (no memory); returns worst violation."""
    worst = 0.0
    for fi in range(offsets.shape[0]):
        up = ups[fi]
        lo = los[fi]
        if up >= value_range and lo >= value_range:
            continue
        d = offsets[fi]
        s = starts[fi]
        e = stops[fi]
        if forward:
            i0, i1, step = s, e, 1
        else:
            i0, i1, step = e - 1, s - 1, -1
        for i in range(i0, i1, step):
            t = x[i + d] - x[i]
            if t > up:
                viol = t - up
                if viol > worst:
                    worst = viol
                shift = 0.5 * (up - t)
            elif t < -lo:
                viol = -lo - t
                if viol > worst:
                    worst = viol
                shift = 0.5 * (-lo - t)
            else:
                continue
            x[i + d] += shift
            x[i] -= shift
    return worst


@njit(cache=True)
def project_nonincreasing(y):
    """Exact projection onto {v[i+1] <= v[i]} (pool adjacent violators)."""
    n = y.shape[0]
    vals = np.empty(n)
    cnts = np.empty(n, dtype=np.int64)
    k = -1
    for i in range(n):
        k += 1
        vals[k] = y[i]
        cnts[k] = 1
        while k > 0 and vals[k - 1] < vals[k]:
            tot = vals[k - 1] * cnts[k - 1] + vals[k] * cnts[k]
            cnts[k - 1] += cnts[k]
            vals[k - 1] = tot / cnts[k - 1]
            k -= 1
    out = np.empty(n)
    pos = 0
    for j in range(k + 1):
        for _ in range(cnts[j]):
            out[pos] = vals[j]
            pos += 1
    return out


@njit(cache=True)
def max_violation_pairs(x, offsets, starts, stops, ups, los, value_range):
    worst = 0.0
    for fi in range(offsets.shape[0]):
        up = ups[fi]
        lo = los[fi]
        if up >= value_range and lo >= value_range:
            continue
        d = offsets[fi]
        for i in range(starts[fi], stops[fi]):
            t = x[i + d] - x[i]
            if t - up > worst:
                worst = t - up
            if -lo - t > worst:
                worst = -lo - t
    return worst
