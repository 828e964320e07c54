"""Independent reference computations that pin solver answers.

These are deliberately written against the class *definitions* (Hölder /
monotone rates), not against the solver's constraint systems, so they
stay an independent check of the convex-program path.

Key fact used throughout: for point evaluation at bin i0, any feasible
pair (f in F, g in H) with D = g[i0] - f[i0] satisfies, at distance d
bins to the left of i0,

    g[i] - f[i] >= D - (rise_F_left(d) + drop_H_left(d)),

where rise/drop are the classes' maximal one-sided moves (Hölder bounds,
0 for monotone moves against the cone, inf if unconstrained), and the
mirrored bound holds to the right.  Squaring and summing gives a lower
bound on the squared distance; the capped construction below attains it
exactly on the grid, so bisecting the cost in D yields the exact grid
modulus.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from adaptlin.classes import ClassSpec
from adaptlin.funcspace import Grid


def _holder_min(atoms, dist):
    """Pointwise min of C * dist**a over the given (a, C) atoms; inf if none."""
    if not atoms:
        return np.full_like(dist, np.inf)
    vals = [c * dist**a for a, c in atoms]
    return np.minimum.reduce(vals)


def side_rates(spec: ClassSpec):
    """Return rate callables (rise_left, drop_left, rise_right, drop_right).

    Each maps an array of distances (in t units) to the class's maximal
    move of that kind over that distance.
    """
    two_sided, left_only, right_only = [], [], []
    monotone = False
    for atom in spec.atoms():
        if atom.kind == "lipschitz":
            two_sided.append((atom.alpha, atom.bound))
        elif atom.kind == "left_lipschitz":
            left_only.append((atom.alpha, atom.bound))
        elif atom.kind == "right_lipschitz":
            right_only.append((atom.alpha, atom.bound))
        elif atom.kind == "decreasing":
            monotone = True
        else:
            raise ValueError(f"oracle does not model atom {atom.kind!r}")
    left_atoms = two_sided + left_only
    right_atoms = two_sided + right_only

    def rise_left(d):
        return _holder_min(left_atoms, d)

    def drop_left(d):
        return np.zeros_like(d) if monotone else _holder_min(left_atoms, d)

    def rise_right(d):
        return np.zeros_like(d) if monotone else _holder_min(right_atoms, d)

    def drop_right(d):
        return _holder_min(right_atoms, d)

    return rise_left, drop_left, rise_right, drop_right


class EnvelopeOracle:
    """Exact grid value of the ordered modulus between two grammar classes."""

    def __init__(self, spec_f: ClassSpec, spec_g: ClassSpec, grid: Grid, i0: int):
        self.grid = grid
        self.i0 = i0
        rf = side_rates(spec_f)
        rg = side_rates(spec_g)
        d_left = np.arange(1, i0 + 1) * grid.delta
        d_right = np.arange(1, grid.m - i0) * grid.delta
        # gap decay rates: f's rise and g's drop on each side
        self.rate_left = rf[0](d_left) + rg[1](d_left)
        self.rate_right = rf[2](d_right) + rg[3](d_right)
        self._rf, self._rg = rf, rg
        self._d_left, self._d_right = d_left, d_right

    def cost(self, value: float) -> float:
        env_l = np.maximum(0.0, value - self.rate_left)
        env_r = np.maximum(0.0, value - self.rate_right)
        total = value**2 + np.dot(env_l, env_l) + np.dot(env_r, env_r)
        return self.grid.delta * total

    def value(self, eps: float, rtol: float = 1e-13) -> float:
        """Largest D with cost(D) <= eps**2 (the exact grid modulus)."""
        target = eps * eps
        hi = max(eps, 1.0)
        while self.cost(hi) < target:
            hi *= 2.0
            if hi > 1e12:
                raise RuntimeError("unbounded modulus in envelope oracle")
        lo = 0.0
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if self.cost(mid) <= target:
                lo = mid
            else:
                hi = mid
        return lo

    def support_radius(self, value: float) -> int:
        """Number of bins (max over sides) where the gap envelope is positive."""
        left = int(np.sum(self.rate_left < value))
        right = int(np.sum(self.rate_right < value))
        return max(left, right)

    def pair(self, value: float):
        """An extremal pair attaining the envelope at the given value."""
        m, i0 = self.grid.m, self.i0
        f = np.zeros(m)
        g = np.zeros(m)
        g[i0] = value
        rf, rg = self._rf, self._rg

        def fill(d_arr, rise_fn, drop_fn, idx):
            if len(idx) == 0:
                return
            rise = rise_fn(d_arr)
            drop = drop_fn(d_arr)
            closed = np.nonzero(rise + drop >= value)[0]
            if len(closed):
                # split the gap at closure: f takes theta, g comes down to it
                k = closed[0]
                theta = float(np.clip(value - drop[k], 0.0, min(rise[k], value)))
                f[idx] = np.minimum(rise, theta)
                g[idx] = np.maximum(value - drop, theta)
            else:
                # boundary-truncated tent: gap stays open to the edge
                f[idx] = rise
                g[idx] = value - drop

        left_idx = i0 - np.arange(1, i0 + 1)
        right_idx = i0 + np.arange(1, m - i0)
        fill(self._d_left, rf[0], rg[1], left_idx)
        fill(self._d_right, rf[2], rg[3], right_idx)
        return f, g


def tent_scan_value(M: float, grid: Grid, i0: int, eps: float, n_tau: int = 4000) -> float:
    """Dense scan over the symmetric tent family for the plain Lipschitz
    class: g - f = h * (1 - |t - t_c| / tau)_+ with f = -g.
    """
    t = grid.points
    tc = t[i0]
    best = 0.0
    for tau in np.linspace(grid.delta / 4, 0.75, n_tau):
        shape = np.maximum(0.0, 1.0 - np.abs(t - tc) / tau)
        nrm = math.sqrt(grid.delta * float(np.dot(shape, shape)))
        h = min(2 * M * tau, eps / nrm if nrm > 0 else np.inf)
        best = max(best, h)
    return best


def enumerate_modulus_grids(omega: list[float]) -> list[tuple[float, ...]]:
    """All increasing subsequences of omega satisfying the grid conditions:
    endpoints are min/max, xi[i+1] >= 2 xi[i] for 2 <= i <= k-1 (1-based),
    and every omega is covered by some (xi/2, xi] interval.
    """
    vals = sorted(set(omega))
    lo, hi = vals[0], vals[-1]
    middle = vals[1:-1]
    valid = []
    for r in range(len(middle) + 1):
        for combo in itertools.combinations(middle, r):
            xi = (lo,) + combo + (hi,)
            k = len(xi)
            if any(xi[i + 1] < 2 * xi[i] for i in range(1, k - 1)):
                continue
            if all(any(x / 2 < w <= x for x in xi) for w in vals):
                valid.append(xi)
    return valid


def greedy_modulus_grid_reference(omega: list[float]) -> tuple[float, ...]:
    """Largest-below-half greedy from the top; independent restatement."""
    vals = sorted(set(omega))
    lo, hi = vals[0], vals[-1]
    seq = [hi]
    while True:
        cands = [w for w in vals if w <= seq[-1] / 2 and w > lo]
        if not cands:
            break
        seq.append(max(cands))
    if seq[-1] != lo:
        seq.append(lo)
    return tuple(reversed(seq))
