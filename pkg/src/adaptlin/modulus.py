"""Numerical ordered / between-class moduli of continuity.

The program  maximize  Tg - Tf  over  f in F1, g in F2, ||g - f|| <= eps
is solved through its curvature form: for a multiplier kappa > 0,

    maximize  Tg - Tf - (kappa * delta / 2) * sum((g - f)**2)

is concave with separable constraints, so alternating the two exact
block maximizers

    g <- P_F2(f + e_i0 / (kappa * delta)),
    f <- P_F1(g - e_i0 / (kappa * delta))

climbs to the joint optimum; the achieved distance is decreasing in
kappa, and a one-dimensional root find matches it to the requested eps.
The block projections run Dykstra sweeps over the constraint families
(cyclic per-constraint projections, vectorized in conflict-free
batches).  The multiplier doubles as the tangent slope used by the
estimator construction: at the solution, kappa * distance is a
supergradient of the concave eps -> omega(eps) curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as kernels
from .classes import ConstraintSystem
from .funcspace import FunctionOnGrid, Functional

EPS_BRACKET_LO_FACTOR = 1e-3  # times delta: moduli below grid resolution are meaningless
EPS_BRACKET_HI = 10.0  # beyond the domain diameter the modulus saturates


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-7  # relative objective stagnation tolerance
    eps_rtol: float = 1e-4  # relative accuracy of the distance match
    feas_tol: float = 1e-9  # absolute per-constraint feasibility target
    inner_rtol: float = 1e-8  # relative feasibility needed to accept a stall
    max_rounds: int = 120  # block-ascent rounds per root-find step
    refine_rounds: int = 60  # rounds per correction pass at the accepted multiplier
    refine_steps: int = 3  # multiplier correction passes
    stall_rounds: int = 6
    proj_cycles: int = 2  # Dykstra cycles per block projection, escalated on stalls
    refine_cycles: int = 24
    max_proj_cycles: int = 128
    root_cycle_budget: int = 260  # cycle cap per root-find solve
    refine_cycle_budget: int = 2400  # cycle cap per correction pass
    polish_cycles: int = 4000
    max_root_steps: int = 60

    def tightened(self) -> "SolverOptions":
        return replace(
            self,
            eps_rtol=1e-6,
            feas_tol=1e-12,
            tol=1e-11,
            inner_rtol=1e-12,
            max_rounds=200,
            refine_rounds=150,
            refine_steps=6,
            refine_cycles=512,
            max_proj_cycles=1024,
            root_cycle_budget=2000,
            refine_cycle_budget=200_000,
            polish_cycles=30000,
            max_root_steps=40,
        )


@dataclass(frozen=True)
class ModulusResult:
    epsilon: float
    value: float
    f_star: FunctionOnGrid
    g_star: FunctionOnGrid
    achieved_distance: float
    solver_status: str  # converged | max-iters
    kappa: float
    sweeps: int


@dataclass(frozen=True)
class ExponentFit:
    q_hat: float  # fitted exponent of omega**2 against eps
    c_hat: float  # fitted multiplicative constant of omega**2
    r_squared: float
    epsilons: tuple[float, ...]

    @property
    def omega_exponent(self) -> float:
        """Exponent of omega itself (half the omega**2 slope)."""
        return self.q_hat / 2


# ---------------------------------------------------------------------------
# Dykstra projection machinery


class _Duals:
    """Per-constraint Dykstra corrections for one projection session."""

    def __init__(self, n_pair: int, n_fam: int, m: int, has_box: bool, has_mono: bool):
        self.pairs = np.zeros(n_pair)
        self.active = np.zeros(n_fam, dtype=np.uint8)
        self.box = np.zeros(m) if has_box else None
        self.mono = np.zeros(m) if has_mono else None

    def reset(self):
        self.pairs.fill(0.0)
        self.active.fill(0)
        if self.box is not None:
            self.box.fill(0.0)
        if self.mono is not None:
            self.mono.fill(0.0)


class _Projector:
    """Euclidean projection onto a constraint system.

    Pair families are swept sequentially (Gauss-Seidel order, alternating
    direction) so corrections propagate along difference chains in one
    pass; Dykstra corrections make the fixed point the exact projection.
    """

    def __init__(self, system: ConstraintSystem, pin_index: int | None = None):
        self.system = system
        self.pin_index = pin_index
        m = system.grid.m
        # the full-range monotone family is handled by an exact pool-adjacent
        # projection (its tie chains make per-constraint sweeps crawl)
        self.monotone = any(
            f.upper == 0.0 and not np.isfinite(f.lower) and f.offset == 1 and f.start == 0 and f.stop == m - 1
            for f in system.pair_families
        )
        fams = sorted(
            (
                f
                for f in system.pair_families
                if not (
                    self.monotone
                    and f.upper == 0.0
                    and not np.isfinite(f.lower)
                    and f.offset == 1
                    and f.start == 0
                    and f.stop == m - 1
                )
            ),
            key=lambda f: f.offset,
        )
        self.offsets = np.array([f.offset for f in fams], dtype=np.int64)
        self.starts = np.array([f.start for f in fams], dtype=np.int64)
        self.stops = np.array([f.stop for f in fams], dtype=np.int64)
        self.ups = np.array([f.upper for f in fams], dtype=np.float64)
        self.los = np.array([f.lower for f in fams], dtype=np.float64)
        sizes = self.stops - self.starts
        if len(fams):
            self.bases = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
            self.n_pair = int(sizes.sum())
        else:
            self.bases = np.zeros(0, dtype=np.int64)
            self.n_pair = 0
        self.value_bounds = [fam.bound for fam in system.value_families]
        self._pass_flip = False

    def new_duals(self) -> _Duals:
        return _Duals(
            self.n_pair, len(self.offsets), self.system.grid.m, bool(self.value_bounds), self.monotone
        )

    def project(self, y: np.ndarray, cycles: int, duals: _Duals | None = None) -> np.ndarray:
        x = y.copy()
        mem = duals if duals is not None else self.new_duals()
        for _ in range(cycles):
            self._cycle(x, mem)
        return x

    @staticmethod
    def _range(x: np.ndarray) -> float:
        return float(np.max(x) - np.min(x))

    def _cycle(self, x: np.ndarray, mem: _Duals) -> float:
        self._pass_flip = not self._pass_flip
        worst = 0.0
        if self.monotone:
            t = x + mem.mono
            proj = kernels.project_nonincreasing(t)
            worst = max(worst, float(np.max(np.diff(t), initial=-np.inf)))
            mem.mono[:] = t - proj
            x[:] = proj
        if len(self.offsets):
            worst = max(
                worst,
                kernels.dykstra_pass(
                    x,
                    mem.pairs,
                    mem.active,
                    self.offsets,
                    self.starts,
                    self.stops,
                    self.ups,
                    self.los,
                    self.bases,
                    self._pass_flip,
                    self._range(x),
                ),
            )
        for bound in self.value_bounds:
            t = x + mem.box
            c = np.clip(t, -bound, bound)
            worst = max(worst, float(np.max(np.abs(t)) - bound))
            mem.box[:] = t - c
            x[:] = c
        if self.pin_index is not None:
            x[self.pin_index] = 0.0
        return float(worst)

    def max_violation(self, x: np.ndarray) -> float:
        worst = 0.0
        if self.monotone:
            worst = max(worst, float(np.max(np.diff(x), initial=0.0)))
        if len(self.offsets):
            worst = max(
                worst,
                float(
                    kernels.max_violation_pairs(
                        x, self.offsets, self.starts, self.stops, self.ups, self.los, self._range(x)
                    )
                ),
            )
        for bound in self.value_bounds:
            worst = max(worst, float(np.max(np.abs(x)) - bound))
        return worst

    def polish(self, x: np.ndarray, max_cycles: int, feas_tol: float) -> tuple[np.ndarray, float]:
        """Plain cyclic projections until feasible within feas_tol."""
        x = x.copy()
        forward = True
        for cycle in range(max_cycles):
            worst = 0.0
            if self.monotone:
                worst = max(worst, float(np.max(np.diff(x), initial=0.0)))
                x = kernels.project_nonincreasing(x)
            if len(self.offsets):
                worst = max(
                    worst,
                    kernels.pocs_pass(
                        x, self.offsets, self.starts, self.stops, self.ups, self.los, forward, self._range(x)
                    ),
                )
            forward = not forward
            for bound in self.value_bounds:
                worst = max(worst, float(np.max(np.abs(x)) - bound))
                np.clip(x, -bound, bound, out=x)
            if self.pin_index is not None:
                x[self.pin_index] = 0.0
            if worst <= feas_tol:
                break
        return x, self.max_violation(x)


def _projector(system: ConstraintSystem) -> _Projector:
    proj = system._cache.get("projector")
    if proj is None:
        proj = _Projector(system)
        system._cache["projector"] = proj
    return proj


# ---------------------------------------------------------------------------
# Curvature-form solver


class _PairState:
    """Warm-startable iterate for one ordered pair of classes."""

    def __init__(self, F1: ConstraintSystem, F2: ConstraintSystem, functional: Functional):
        if F1.grid != F2.grid:
            raise ValueError("class systems live on different grids")
        self.F1, self.F2 = F1, F2
        self.grid = F1.grid
        self.i0 = functional.index
        self.f = np.zeros(self.grid.m)
        self.g = np.zeros(self.grid.m)
        self.sweeps = 0

    def solve_at_kappa(
        self,
        kappa: float,
        opts: SolverOptions,
        rounds: int | None = None,
        start_cycles: int | None = None,
        cycle_budget: int | None = None,
    ) -> tuple[float, float]:
        """Block ascent at fixed curvature; returns (value, distance)."""
        delta = self.grid.delta
        i0 = self.i0
        projF, projG = _projector(self.F1), _projector(self.F2)
        shift = 1.0 / (kappa * delta)
        if not hasattr(self, "_dualsF"):
            self._dualsF = projF.new_duals()
            self._dualsG = projG.new_duals()
        dualsF, dualsG = self._dualsF, self._dualsG
        dualsF.reset()
        dualsG.reset()
        best_obj = -np.inf
        stall = 0
        spent = 0
        budget = cycle_budget if cycle_budget is not None else opts.root_cycle_budget
        cycles = start_cycles if start_cycles is not None else opts.proj_cycles
        for _ in range(rounds if rounds is not None else opts.max_rounds):
            tgt = self.f.copy()
            tgt[i0] += shift
            self.g = projG.project(tgt, cycles, dualsG)
            tgt = self.g.copy()
            tgt[i0] -= shift
            self.f = projF.project(tgt, cycles, dualsF)
            self.sweeps += 2 * cycles
            spent += 2 * cycles
            center = 0.5 * (self.f[i0] + self.g[i0])
            self.f -= center
            self.g -= center
            h = self.g - self.f
            sq = float(np.dot(h, h)) * delta
            obj = (self.g[i0] - self.f[i0]) - 0.5 * kappa * sq
            if obj <= best_obj + opts.tol * max(abs(best_obj), 1e-12):
                stall += 1
            else:
                stall = 0
            best_obj = max(best_obj, obj)
            if spent >= budget:
                break
            if stall >= opts.stall_rounds:
                # accept only once the iterates are feasible at scale
                scale = max(abs(obj), math.sqrt(sq), 1e-9)
                viol = max(projF.max_violation(self.f), projG.max_violation(self.g))
                if viol <= opts.inner_rtol * scale or cycles >= opts.max_proj_cycles:
                    break
                cycles = min(2 * cycles, opts.max_proj_cycles)
                stall = 0
        value = float(self.g[i0] - self.f[i0])
        dist = math.sqrt(max(float(np.dot(self.g - self.f, self.g - self.f)) * delta, 0.0))
        return value, dist


def _root_in_kappa(state: _PairState, target_fn, target: float, kappa0: float, opts: SolverOptions):
    """Find kappa with target_fn(kappa) ~= target (monotone in kappa).

    target_fn returns (measure, value, dist); measure must be decreasing
    in kappa (the achieved distance) or the caller flips signs.
    """
    kappa = kappa0
    lo = hi = None  # bracketing (kappa, measure) pairs
    history = []
    for step in range(opts.max_root_steps):
        value, dist = state.solve_at_kappa(kappa, opts)
        measure = target_fn(kappa, value, dist)
        history.append((kappa, measure, value, dist))
        if abs(measure / target - 1.0) <= opts.eps_rtol:
            return kappa, value, dist, "converged"
        if measure > target:
            lo = (kappa, measure)  # need larger kappa
        else:
            hi = (kappa, measure)
        if lo is None:
            kappa /= 8.0
        elif hi is None:
            kappa *= 8.0
        else:
            # secant in log-log; fall back to bisection in log space
            (k1, m1), (k2, m2) = lo, hi
            if m1 > 0 and m2 > 0 and m1 != m2:
                t = (math.log(target) - math.log(m1)) / (math.log(m2) - math.log(m1))
                t = min(max(t, 0.12), 0.88)
                kappa = math.exp(math.log(k1) + t * (math.log(k2) - math.log(k1)))
            else:
                kappa = math.sqrt(k1 * k2)
        if not 1e-14 < kappa < 1e18:
            break
    k, m, v, d = min(history, key=lambda r: abs(r[1] - target))
    return k, v, d, "max-iters"


# grids larger than this start from a coarse-grid solution: the block
# targets carry an O(1/(kappa*delta)) point term, and solving cold at
# large m makes the projections melt it down from scratch
MG_THRESHOLD = 400
MG_MIN = 129


def _mg_seed(F1, F2, functional, opts, eps=None, slope=None):
    """Solve on a coarser grid and prolong the pair; None when unavailable."""
    m = F1.grid.m
    if m <= MG_THRESHOLD or F1.coarsen is None or F2.coarsen is None:
        return None
    mc = max(MG_MIN, (m // 4) | 1)
    from .funcspace import point_functional

    F1c, F2c = F1.coarsen(mc), F2.coarsen(mc)
    Tc = point_functional(F1c.grid, functional.t0)
    if eps is not None:
        res = ordered_modulus(F1c, F2c, Tc, eps, opts)
    else:
        _, _, res = solve_tangent(F1c, F2c, Tc, slope, opts)
    fine_pts = F1.grid.points
    coarse_pts = F1c.grid.points
    f = np.interp(fine_pts, coarse_pts, res.f_star.values)
    g = np.interp(fine_pts, coarse_pts, res.g_star.values)
    return f, g, res.kappa


def _match_radius(state: _PairState, eps: float, kappa: float, opts: SolverOptions):
    """Fixed-point correction of the multiplier against the converged
    distance; a contraction whenever the modulus curve is power-like."""
    status = "max-iters"
    for _ in range(opts.refine_steps):
        state.solve_at_kappa(
            kappa,
            opts,
            rounds=opts.refine_rounds,
            start_cycles=opts.refine_cycles,
            cycle_budget=opts.refine_cycle_budget,
        )
        ratio = _distance(state) / eps
        if abs(ratio - 1.0) <= max(opts.eps_rtol, 1e-9):
            status = "converged"
            break
        kappa *= ratio**1.5
    return kappa, status


def ordered_modulus(
    F1: ConstraintSystem,
    F2: ConstraintSystem,
    functional: Functional,
    eps: float,
    opts: SolverOptions | None = None,
    warm: "_PairState | None" = None,
    kappa0: float | None = None,
) -> ModulusResult:
    """Solve sup{Tg - Tf : f in F1, g in F2, ||g - f||_2 <= eps}."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    opts = opts or SolverOptions()
    state = warm
    if state is None:
        state = _PairState(F1, F2, functional)
        seed = _mg_seed(F1, F2, functional, opts, eps=eps)
        if seed is not None:
            state.f, state.g, k_seed = seed
            if kappa0 is None:
                kappa0 = k_seed
    kappa = kappa0 if kappa0 is not None else 1.0 / eps

    if kappa0 is None:
        # no guidance: cheap bracketing sweep before the deep correction

        def measure(_kappa, _value, dist):
            return max(dist, 1e-300)

        kappa, _, _, _ = _root_in_kappa(state, measure, eps, kappa, opts)

    kappa, status = _match_radius(state, eps, kappa, opts)
    if status != "converged" and kappa0 is not None:
        # the guidance was off; fall back to bracketing plus one more pass

        def measure(_kappa, _value, dist):
            return max(dist, 1e-300)

        kappa, _, _, _ = _root_in_kappa(state, measure, eps, kappa, opts)
        kappa, status = _match_radius(state, eps, kappa, opts)

    # feasibility polish and a stretch of the pair to the exact radius
    f, g = _polish_pair(state, eps, opts)
    state.f, state.g = f, g
    value = float(g[state.i0] - f[state.i0])
    dist = _distance(state)
    return ModulusResult(
        epsilon=float(eps),
        value=value,
        f_star=FunctionOnGrid(state.grid, f),
        g_star=FunctionOnGrid(state.grid, g),
        achieved_distance=dist,
        solver_status=status,
        kappa=float(kappa),
        sweeps=state.sweeps,
    )


def _distance(state: _PairState) -> float:
    h = state.g - state.f
    return math.sqrt(float(np.dot(h, h)) * state.grid.delta)


def _polish_pair(state: _PairState, eps: float, opts: SolverOptions) -> tuple[np.ndarray, np.ndarray]:
    projF, projG = _projector(state.F1), _projector(state.F2)
    f, g = state.f, state.g
    bestf, bestg = None, None
    best_value = -np.inf
    for _ in range(4):
        f, vf = projF.polish(f, opts.polish_cycles, opts.feas_tol)
        g, vg = projG.polish(g, opts.polish_cycles, opts.feas_tol)
        h = g - f
        dist = math.sqrt(float(np.dot(h, h)) * state.grid.delta)
        if vf <= opts.feas_tol and vg <= opts.feas_tol and dist <= eps * (1 + 1e-12):
            value = g[state.i0] - f[state.i0]
            if value > best_value:
                best_value, bestf, bestg = value, f.copy(), g.copy()
        if dist <= 0:
            break
        scale = eps / dist
        if abs(scale - 1.0) < 1e-13:
            break
        mid = 0.5 * (f + g)
        f = mid - 0.5 * scale * h
        g = mid + 0.5 * scale * h
    if bestf is None:
        # shrink inside the ball as a last resort
        f, _ = projF.polish(f, opts.polish_cycles, opts.feas_tol)
        g, _ = projG.polish(g, opts.polish_cycles, opts.feas_tol)
        h = g - f
        dist = math.sqrt(float(np.dot(h, h)) * state.grid.delta)
        if dist > eps:
            mid = 0.5 * (f + g)
            f = mid - 0.5 * (eps / dist) * h
            g = mid + 0.5 * (eps / dist) * h
            f, _ = projF.polish(f, opts.polish_cycles, opts.feas_tol)
            g, _ = projG.polish(g, opts.polish_cycles, opts.feas_tol)
            h = g - f
            dist = math.sqrt(float(np.dot(h, h)) * state.grid.delta)
            if dist > eps:
                mid = 0.5 * (f + g)
                f = mid - 0.5 * (eps / dist) * h * (1 - 1e-12)
                g = mid + 0.5 * (eps / dist) * h * (1 - 1e-12)
        bestf, bestg = f, g
    return bestf, bestg


def between_modulus(
    F1: ConstraintSystem,
    F2: ConstraintSystem,
    functional: Functional,
    eps: float,
    opts: SolverOptions | None = None,
) -> ModulusResult:
    """omega_plus = max of the two ordered moduli, with the attaining pair."""
    r12 = ordered_modulus(F1, F2, functional, eps, opts)
    r21 = ordered_modulus(F2, F1, functional, eps, opts)
    return r12 if r12.value >= r21.value else r21


def solve_tangent(
    F1: ConstraintSystem,
    F2: ConstraintSystem,
    functional: Functional,
    slope: float,
    opts: SolverOptions | None = None,
    warm: _PairState | None = None,
    kappa0: float | None = None,
) -> tuple[float, float, ModulusResult]:
    """Maximize omega(eps) - slope * eps over eps > 0.

    Returns (eps_star, sup_value, result).  At the optimum the slope is a
    supergradient of the concave omega curve, which the curvature solver
    exposes directly as kappa * distance; a monotone root find in kappa
    therefore solves the tangency without an outer search over eps.
    """
    if slope <= 0:
        raise ValueError("slope must be positive")
    opts = opts or SolverOptions()
    state = warm
    if state is None:
        state = _PairState(F1, F2, functional)
        seed = _mg_seed(F1, F2, functional, opts, slope=slope)
        if seed is not None:
            state.f, state.g, k_seed = seed
            if kappa0 is None:
                kappa0 = k_seed
    delta = state.grid.delta
    eps_lo, eps_hi = delta * EPS_BRACKET_LO_FACTOR, EPS_BRACKET_HI

    def _slope_match(kappa):
        status = "max-iters"
        dist = _distance(state)
        for _ in range(opts.refine_steps):
            state.solve_at_kappa(
                kappa,
                opts,
                rounds=opts.refine_rounds,
                start_cycles=opts.refine_cycles,
                cycle_budget=opts.refine_cycle_budget,
            )
            dist = _distance(state)
            s_now = kappa * min(max(dist, eps_lo), eps_hi)
            if abs(s_now / slope - 1.0) <= max(opts.eps_rtol, 1e-9):
                status = "converged"
                break
            kappa *= min(max((slope / s_now) ** 2.0, 0.2), 5.0)
        return kappa, dist, status

    def measure(kappa, _value, dist):
        d = min(max(dist, eps_lo), eps_hi)
        return 1.0 / max(kappa * d, 1e-300)  # decreasing in kappa

    if kappa0 is None:
        kappa0, _, _, _ = _root_in_kappa(state, measure, 1.0 / slope, slope, opts)
    kappa, dist, status = _slope_match(kappa0)
    if status != "converged":
        kappa, _, _, _ = _root_in_kappa(state, measure, 1.0 / slope, kappa, opts)
        kappa, dist, status = _slope_match(kappa)
    f, g = _polish_pair(state, max(dist, 1e-300), opts)
    state.f, state.g = f, g
    value = float(g[state.i0] - f[state.i0])
    dist = _distance(state)
    eps_star = min(max(dist, eps_lo), eps_hi)
    result = ModulusResult(
        epsilon=eps_star,
        value=value,
        f_star=FunctionOnGrid(state.grid, f),
        g_star=FunctionOnGrid(state.grid, g),
        achieved_distance=dist,
        solver_status=status,
        kappa=float(kappa),
        sweeps=state.sweeps,
    )
    return eps_star, value - slope * dist, result


def tangent_epsilon(
    F1: ConstraintSystem,
    F2: ConstraintSystem,
    functional: Functional,
    slope: float,
    opts: SolverOptions | None = None,
) -> tuple[float, ModulusResult]:
    eps_star, _, result = solve_tangent(F1, F2, functional, slope, opts)
    return eps_star, result


# ---------------------------------------------------------------------------
# Hölder exponent fitting


def fit_exponent(series) -> ExponentFit:
    """Least squares of log omega**2 = log C + q log eps over (eps, omega) pairs."""
    pts = [(float(e), float(w)) for e, w in series]
    if len(pts) < 4:
        raise ValueError("need at least 4 points to fit an exponent")
    eps = np.array([p[0] for p in pts])
    om = np.array([p[1] for p in pts])
    if np.any(eps <= 0) or np.any(om <= 0):
        raise ValueError("eps and omega must be positive")
    if eps.max() / eps.min() < 10 * (1 - 1e-9):
        raise ValueError("eps values must span at least one decade")
    x = np.log(eps)
    y = np.log(om**2)
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ExponentFit(
        q_hat=float(coef[1]),
        c_hat=float(np.exp(coef[0])),
        r_squared=float(r2),
        epsilons=tuple(float(e) for e in eps),
    )


# ---------------------------------------------------------------------------
# Cached modulus curves


class ModulusCurve:
    """Memoized eps -> ordered modulus map for one ordered class pair.

    Repeated evaluations warm-start from the nearest solved point, which
    makes eps ladders and tangent searches cheap.  The accumulated
    snapshot of solved values feeds experiment manifests.
    """

    def __init__(
        self,
        F1: ConstraintSystem,
        F2: ConstraintSystem,
        functional: Functional,
        opts: SolverOptions | None = None,
    ):
        self.F1, self.F2 = F1, F2
        self.functional = functional
        self.opts = opts or SolverOptions()
        self._results: dict[float, ModulusResult] = {}
        self._state = _PairState(F1, F2, functional)

    def at(self, eps: float) -> ModulusResult:
        key = float(eps)
        res = self._results.get(key)
        if res is None:
            kappa0 = self._kappa_guess(key)
            if not self._results:
                seed = _mg_seed(self.F1, self.F2, self.functional, self.opts, eps=key)
                if seed is not None:
                    self._state.f, self._state.g, k_seed = seed
                    if kappa0 is None:
                        kappa0 = k_seed
            res = ordered_modulus(
                self.F1, self.F2, self.functional, key, self.opts, warm=self._state, kappa0=kappa0
            )
            self._results[key] = res
        return res

    def value(self, eps: float) -> float:
        return self.at(eps).value

    def tangent(self, slope: float) -> tuple[float, float, ModulusResult]:
        kappa0 = None
        if self._results:
            # nearest solved point by its slope kappa * distance
            cand = min(self._results.values(), key=lambda r: abs(r.kappa * r.achieved_distance - slope))
            kappa0 = cand.kappa * (slope / max(cand.kappa * cand.achieved_distance, 1e-300))
        else:
            seed = _mg_seed(self.F1, self.F2, self.functional, self.opts, slope=slope)
            if seed is not None:
                self._state.f, self._state.g, kappa0 = seed
        return solve_tangent(
            self.F1, self.F2, self.functional, slope, self.opts, warm=self._state, kappa0=kappa0
        )

    def _kappa_guess(self, eps: float) -> float | None:
        if not self._results:
            return None
        solved = sorted(self._results.values(), key=lambda r: abs(math.log(r.epsilon / eps)))
        if len(solved) == 1 or solved[0].epsilon == eps:
            r = solved[0]
            return r.kappa * (r.epsilon / eps) ** 1.5
        r1, r2 = solved[0], solved[1]
        le1, le2 = math.log(r1.epsilon), math.log(r2.epsilon)
        if abs(le2 - le1) < 1e-12:
            return r1.kappa
        slope = (math.log(r2.kappa) - math.log(r1.kappa)) / (le2 - le1)
        return math.exp(math.log(r1.kappa) + slope * (math.log(eps) - le1))

    def snapshot(self) -> dict[str, float]:
        return {format(e, ".17g"): r.value for e, r in sorted(self._results.items())}


class CurveCache:
    """Session-level cache of ModulusCurve objects keyed by class pair."""

    def __init__(self, functional: Functional, opts: SolverOptions | None = None):
        self.functional = functional
        self.opts = opts or SolverOptions()
        self._curves: dict[tuple[int, int], ModulusCurve] = {}

    def curve(self, F1: ConstraintSystem, F2: ConstraintSystem) -> ModulusCurve:
        key = (id(F1), id(F2))
        if key not in self._curves:
            self._curves[key] = ModulusCurve(F1, F2, self.functional, self.opts)
        return self._curves[key]

    def omega(self, F1: ConstraintSystem, F2: ConstraintSystem, eps: float) -> float:
        return self.curve(F1, F2).value(eps)

    def snapshot(self) -> dict:
        out = {}
        for (a, b), curve in self._curves.items():
            out[f"{curve.F1.label}|{curve.F2.label}"] = curve.snapshot()
        return out
