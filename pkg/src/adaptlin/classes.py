"""Convex function classes rendered as linear inequalities on grid values.

Supported atoms: two-sided Hölder bands ``lipschitz(alpha, M)``, the
one-sided variants ``right_lipschitz`` / ``left_lipschitz`` (constraining
pairs inside [0, 1/2] resp. [-1/2, 0]), the monotone cone ``decreasing``,
level boxes ``box(B)``, and intersections of these.  All systems contain
v == 0 and are convex by construction.

Canonical text form (used by CLI configs):

    decreasing+lipschitz(alpha=1,M=1)
    left_lipschitz(alpha=0.5,M=2)+right_lipschitz(alpha=1,M=2)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .funcspace import FunctionOnGrid, Grid, GridMismatchError
from .funcspace import make_grid as make_grid_fn

_ATOM_KINDS = ("lipschitz", "right_lipschitz", "left_lipschitz", "decreasing", "box")

# Hölder constraints with alpha < 1 bind locally; pairs are pruned to a
# window of this fraction of the grid (alpha = 1 needs adjacent pairs only).
WINDOW_FRACTION = 0.25


@dataclass(frozen=True)
class ClassSpec:
    kind: str
    alpha: float | None = None
    bound: float | None = None
    parts: tuple["ClassSpec", ...] = ()

    def __post_init__(self):
        if self.kind == "intersection":
            if not self.parts:
                raise ValueError("intersection needs at least one part")
            for p in self.parts:
                if p.kind == "intersection":
                    raise ValueError("intersections must be flattened")
        elif self.kind in ("lipschitz", "right_lipschitz", "left_lipschitz"):
            if self.alpha is None or not 0 < self.alpha <= 1:
                raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
            # bound = 0 is accepted as the degenerate constants-only class
            if self.bound is None or self.bound < 0:
                raise ValueError(f"Hölder constant must be >= 0, got {self.bound}")
        elif self.kind == "box":
            if self.bound is None or self.bound < 0:
                raise ValueError(f"box bound must be >= 0, got {self.bound}")
        elif self.kind == "decreasing":
            pass
        else:
            raise ValueError(f"unknown class kind {self.kind!r}")

    def atoms(self) -> tuple["ClassSpec", ...]:
        return self.parts if self.kind == "intersection" else (self,)

    def canonical(self) -> str:
        if self.kind == "intersection":
            return "+".join(p.canonical() for p in self.parts)
        if self.kind == "decreasing":
            return "decreasing"
        if self.kind == "box":
            return f"box(B={_fmt(self.bound)})"
        return f"{self.kind}(alpha={_fmt(self.alpha)},M={_fmt(self.bound)})"


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def lipschitz(alpha: float, M: float) -> ClassSpec:
    return ClassSpec("lipschitz", alpha=float(alpha), bound=float(M))


def right_lipschitz(alpha: float, M: float) -> ClassSpec:
    return ClassSpec("right_lipschitz", alpha=float(alpha), bound=float(M))


def left_lipschitz(alpha: float, M: float) -> ClassSpec:
    return ClassSpec("left_lipschitz", alpha=float(alpha), bound=float(M))


def decreasing() -> ClassSpec:
    return ClassSpec("decreasing")


def box(B: float) -> ClassSpec:
    return ClassSpec("box", bound=float(B))


def intersection(*specs: ClassSpec) -> ClassSpec:
    flat: list[ClassSpec] = []
    for s in specs:
        flat.extend(s.atoms())
    if len(flat) == 1:
        return flat[0]
    return ClassSpec("intersection", parts=tuple(flat))


_ATOM_RE = re.compile(r"^(?P<name>[a-z_]+)(?:\((?P<args>[^()]*)\))?$")


def parse_class_spec(text: str) -> ClassSpec:
    """Parse the canonical '+'-joined atom grammar."""
    parts = []
    for chunk in text.strip().split("+"):
        m = _ATOM_RE.match(chunk.strip())
        if m is None:
            raise ValueError(f"cannot parse class atom {chunk!r}")
        name = m.group("name")
        args: dict[str, float] = {}
        if m.group("args"):
            for kv in m.group("args").split(","):
                if "=" not in kv:
                    raise ValueError(f"malformed argument {kv!r} in {chunk!r}")
                k, v = kv.split("=", 1)
                args[k.strip()] = float(v)
        if name == "decreasing":
            parts.append(decreasing())
        elif name == "box":
            parts.append(box(args.pop("B")))
        elif name in ("lipschitz", "right_lipschitz", "left_lipschitz"):
            parts.append(ClassSpec(name, alpha=args.pop("alpha"), bound=args.pop("M")))
        else:
            raise ValueError(f"unknown class atom {name!r}")
        if name != "decreasing" and args:
            raise ValueError(f"unexpected arguments {sorted(args)} in {chunk!r}")
    return intersection(*parts)


@dataclass(frozen=True)
class PairFamily:
    """Constraints -lower <= v[i+offset] - v[i] <= upper for i in [start, stop)."""

    offset: int
    start: int
    stop: int
    upper: float
    lower: float

    @property
    def count(self) -> int:
        two_sided = np.isfinite(self.upper) and np.isfinite(self.lower)
        return max(0, self.stop - self.start) * (2 if two_sided else 1)


@dataclass(frozen=True)
class ValueFamily:
    """Constraints |v[i]| <= bound for all i."""

    bound: float

    def count(self, m: int) -> int:
        return 2 * m


class ConstraintSystem:
    """Finite system of linear inequalities a . v <= b on grid values.

    Immutable after construction.  The rows are held as structured
    families (difference bands per offset, value boxes) so that solvers
    can sweep them vectorized; `iter_rows` materializes plain rows for
    small-grid cross-checks.
    """

    def __init__(self, grid: Grid, pair_families, value_families=(), spec: ClassSpec | None = None):
        self.grid = grid
        self.pair_families = tuple(pair_families)
        self.value_families = tuple(value_families)
        self.spec = spec
        for fam in self.pair_families:
            if fam.offset < 1 or fam.start < 0 or fam.stop > grid.m - fam.offset:
                raise ValueError(f"family {fam} references indices outside the grid")
            if fam.upper < 0 or fam.lower < 0:
                raise ValueError("v == 0 must stay feasible; negative bound found")
        for fam in self.value_families:
            if fam.bound < 0:
                raise ValueError("v == 0 must stay feasible; negative box bound")
        self._cache: dict = {}
        # rebuilds the same class on a coarser grid (multigrid continuation)
        self.coarsen = None

    @property
    def label(self) -> str:
        return self.spec.canonical() if self.spec is not None else "<anonymous>"

    @property
    def n_inequalities(self) -> int:
        return sum(f.count for f in self.pair_families) + sum(
            f.count(self.grid.m) for f in self.value_families
        )

    def max_violation(self, values: np.ndarray) -> float:
        worst = 0.0
        for fam in self.pair_families:
            i = np.arange(fam.start, fam.stop)
            if len(i) == 0:
                continue
            diff = values[i + fam.offset] - values[i]
            if np.isfinite(fam.upper):
                worst = max(worst, float((diff - fam.upper).max(initial=0.0)))
            if np.isfinite(fam.lower):
                worst = max(worst, float((-fam.lower - diff).max(initial=0.0)))
        for fam in self.value_families:
            worst = max(worst, float(np.abs(values).max() - fam.bound))
        return worst

    def iter_rows(self):
        """Yield (indices, coefficients, bound) triples; for small grids."""
        for fam in self.pair_families:
            for i in range(fam.start, fam.stop):
                j = i + fam.offset
                if np.isfinite(fam.upper):
                    yield (j, i), (1.0, -1.0), fam.upper
                if np.isfinite(fam.lower):
                    yield (j, i), (-1.0, 1.0), fam.lower
        for fam in self.value_families:
            for i in range(self.grid.m):
                yield (i,), (1.0,), fam.bound
                yield (i,), (-1.0,), fam.bound

    def __repr__(self):
        return f"ConstraintSystem({self.label}, m={self.grid.m}, rows={self.n_inequalities})"


def default_window(m: int) -> int:
    return min(m, math.ceil(m * WINDOW_FRACTION))


def _zero_split(grid: Grid) -> tuple[int, int]:
    """Indices bracketing t = 0: last index with t <= 0, first with t >= 0."""
    pts = grid.points
    left_end = int(np.searchsorted(pts, 1e-15, side="right")) - 1
    right_start = int(np.searchsorted(pts, -1e-15, side="left"))
    return left_end, right_start


def build_class(spec: ClassSpec, grid: Grid, window: int | str | None = None) -> ConstraintSystem:
    """Render a ClassSpec as a constraint system on the grid.

    ``window`` overrides the pair-pruning cutoff for alpha < 1 atoms;
    pass "all" to emit every pair (used to validate the default pruning).
    """
    system = _build_class(spec, grid, window)
    system.coarsen = lambda mc: _build_class(spec, make_grid_fn(mc), window)
    return system


def _build_class(spec: ClassSpec, grid: Grid, window: int | str | None = None) -> ConstraintSystem:
    m = grid.m
    if window == "all":
        w_default = m - 1
    elif window is None:
        w_default = default_window(m)
    else:
        w_default = int(window)
    pair_families: list[PairFamily] = []
    value_families: list[ValueFamily] = []
    left_end, right_start = _zero_split(grid)
    for atom in spec.atoms():
        if atom.kind == "decreasing":
            pair_families.append(PairFamily(1, 0, m - 1, upper=0.0, lower=np.inf))
        elif atom.kind == "box":
            value_families.append(ValueFamily(atom.bound))
        else:
            # adjacent pairs imply all pairs when alpha == 1 (triangle
            # inequality); otherwise all pairs within the window
            w = 1 if atom.alpha == 1.0 else w_default
            for d in range(1, w + 1):
                c = atom.bound * (d * grid.delta) ** atom.alpha
                if atom.kind == "lipschitz":
                    start, stop = 0, m - d
                elif atom.kind == "right_lipschitz":
                    start, stop = right_start, m - d
                else:  # left_lipschitz: pairs with t_i <= t_j <= 0
                    start, stop = 0, left_end - d + 1
                if stop > start:
                    pair_families.append(PairFamily(d, start, stop, upper=c, lower=c))
    return ConstraintSystem(grid, pair_families, value_families, spec=spec)


def contains(system: ConstraintSystem, f: FunctionOnGrid, tol: float = 1e-9) -> bool:
    """True iff every inequality is violated by at most tol."""
    if f.grid != system.grid:
        raise GridMismatchError("function and constraint system grids differ")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return system.max_violation(f.values) <= tol


# ---------------------------------------------------------------------------
# Implied difference bounds (chained through arbitrary in-window hops)


def _family_range_kind(fam: PairFamily, grid: Grid) -> str:
    left_end, right_start = _zero_split(grid)
    if fam.start == 0 and fam.stop == grid.m - fam.offset:
        return "full"
    if fam.start == right_start:
        return "right"
    if fam.stop == left_end - fam.offset + 1:
        return "left"
    return "other"


def implied_diff_bounds(system: ConstraintSystem, max_offset: int, range_kind: str = "full") -> tuple[np.ndarray, np.ndarray]:
    """Per-offset bounds on v[i+d] - v[i] implied by chaining constraints.

    Returns (upper, lower) arrays of length max_offset + 1 where
    ``v[i+d] - v[i] <= upper[d]`` and ``>= -lower[d]`` hold for every pair
    whose endpoints both lie in the requested range ("full", "left" of 0,
    or "right" of 0).  Computed as the min-plus closure of the direct
    per-offset bounds, which is exact for difference-constraint systems.
    """
    d_max = int(max_offset)
    up = np.full(d_max + 1, np.inf)
    lo = np.full(d_max + 1, np.inf)
    up[0] = lo[0] = 0.0
    applicable = ("full",) if range_kind == "full" else ("full", range_kind)
    for fam in system.pair_families:
        kind = _family_range_kind(fam, system.grid)
        if kind not in applicable:
            continue
        d = fam.offset
        if d <= d_max:
            up[d] = min(up[d], fam.upper)
            lo[d] = min(lo[d], fam.lower)
    for arr in (up, lo):
        # min-plus squaring until closure; chain length halves each pass
        for _ in range(max(1, math.ceil(math.log2(max(2, d_max))))):
            prev = arr.copy()
            for o in range(1, d_max + 1):
                if np.isfinite(prev[o]):
                    np.minimum(arr[o:], prev[o] + prev[: d_max + 1 - o], out=arr[o:])
            if np.array_equal(prev, arr):
                break
    return up, lo


def dominates(system_a: ConstraintSystem, system_b: ConstraintSystem, tol: float = 1e-9) -> bool:
    """True if every constraint of system_b is implied by system_a
    (so the feasible set of a is contained in that of b)."""
    if system_a.grid != system_b.grid:
        raise GridMismatchError("systems live on different grids")
    max_off = max((f.offset for f in system_b.pair_families), default=0)
    cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def bounds_for(kind: str):
        if kind not in cache:
            cache[kind] = implied_diff_bounds(system_a, max_off, kind)
        return cache[kind]

    for fam in system_b.pair_families:
        kind = _family_range_kind(fam, system_b.grid)
        if kind == "other":
            return False
        up, lo = bounds_for(kind)
        if up[fam.offset] > fam.upper + tol or lo[fam.offset] > fam.lower + tol:
            return False
    if system_b.value_families:
        b_box = min(f.bound for f in system_b.value_families)
        a_box = min((f.bound for f in system_a.value_families), default=np.inf)
        if a_box > b_box + tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Closed-form moduli for the worked example families

_WHICH = ("f1", "f2", "f1f2", "f2f1", "plus")


@dataclass(frozen=True)
class ClosedFormModulus:
    value: float
    exponent: float
    constant: float
    constant_source: str  # "paper" if the display pins it, else "unit"


def closed_form_modulus(family: str, which: str, params: dict, eps: float) -> ClosedFormModulus:
    """Leading-order modulus values for the three worked families.

    Returns the displayed quantity C * eps**(2*g/(2*g+1)) with the
    exponent parameter g per family; the (1 + o(1)) factor is dropped.
    Constants are only pinned for the monotone family; elsewhere they are
    unit-normalized and flagged.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if which not in _WHICH:
        raise ValueError(f"'which' must be one of {_WHICH}")
    if family == "monotone":
        a1, m1 = params["alpha1"], params["M1"]
        a2, m2 = params["alpha2"], params["M2"]
        if not 0 < a2 < a1 <= 1:
            raise ValueError("monotone family needs 0 < alpha2 < alpha1 <= 1")
        if m1 <= 0 or m2 <= 0:
            raise ValueError("Hölder constants must be positive")
        if which in ("f1f2", "f2f1", "plus"):
            g, c = a1, (2 * a1 + 1) ** (a1 / (2 * a1 + 1)) * m1 ** (1 / (2 * a1 + 1))
        elif which == "f1":
            g, c = a1, (a1 + 0.5) ** (a1 / (2 * a1 + 1)) * m1 ** (1 / (2 * a1 + 1))
        else:
            g, c = a2, (a2 + 0.5) ** (a2 / (2 * a2 + 1)) * m2 ** (1 / (2 * a2 + 1))
        source = "paper"
    elif family == "two_sided":
        a1, a2 = params["alpha1"], params["alpha2"]
        b1, b2 = params["beta1"], params["beta2"]
        if not (0 < a2 <= a1 <= 1 and 0 < b1 <= b2 <= 1):
            raise ValueError("two_sided family needs 0 < alpha2 <= alpha1 <= 1 and 0 < beta1 <= beta2 <= 1")
        if which == "f1":
            g = max(a1, a2)
        elif which == "f2":
            g = max(b1, b2)
        else:
            g = max(min(a1, b1), min(a2, b2))
        c, source = 1.0, "unit"
    elif family == "monotone_two_sided":
        a1, a2 = params["alpha1"], params["alpha2"]
        b1, b2 = params["beta1"], params["beta2"]
        if not (b1 > b2 > a1 > a2 > 0 and b1 <= 1):
            raise ValueError("monotone_two_sided family needs 1 >= beta1 > beta2 > alpha1 > alpha2 > 0")
        g = {"f1": a1, "f2": b1, "f1f2": b2, "f2f1": b1, "plus": b2}[which]
        c, source = 1.0, "unit"
    else:
        raise ValueError(f"unknown example family {family!r}")
    exponent = 2 * g / (2 * g + 1)
    return ClosedFormModulus(
        value=c * eps**exponent, exponent=exponent, constant=c, constant_source=source
    )
