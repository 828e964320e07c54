"""Discretized function space for white-noise-with-drift experiments.

The continuum model observes ``dY(t) = f(t) dt + n^{-1/2} dW(t)`` on
``[-1/2, 1/2]``.  We discretize into ``m`` equal bins and work with the
bin-sum observations

    ``Y_i = f(t_i) * delta + sqrt(delta / n) * z_i``,

which keeps the affine-estimator variance algebra exact: an estimator
``c0 + sum(w * Y)`` has mean ``c0 + delta * sum(w * f)`` and variance
``(delta / n) * sum(w ** 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1


class GridMismatchError(ValueError):
    """Operands live on different grids."""


@dataclass(frozen=True)
class Grid:
    """Uniform bin-center grid on [-1/2, 1/2]; delta = 1/m."""

    m: int
    points: np.ndarray = field(repr=False, compare=False)
    delta: float = field(compare=False, default=0.0)

    def __eq__(self, other):
        return isinstance(other, Grid) and other.m == self.m

    def __hash__(self):
        return hash(("Grid", self.m))


def make_grid(m: int) -> Grid:
    if m < 2:
        raise ValueError(f"grid needs at least 2 bins, got m={m}")
    delta = 1.0 / m
    points = (np.arange(m) + 0.5) * delta - 0.5
    points.setflags(write=False)
    return Grid(m=int(m), points=points, delta=delta)


@dataclass(frozen=True)
class FunctionOnGrid:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.m,):
            raise ValueError(f"expected {self.grid.m} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        if isinstance(other, FunctionOnGrid):
            _check_grids(self, other)
            return FunctionOnGrid(self.grid, self.values + other.values)
        return FunctionOnGrid(self.grid, self.values + float(other))

    def __sub__(self, other):
        if isinstance(other, FunctionOnGrid):
            _check_grids(self, other)
            return FunctionOnGrid(self.grid, self.values - other.values)
        return FunctionOnGrid(self.grid, self.values - float(other))

    def __mul__(self, scalar):
        return FunctionOnGrid(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


def constant(grid: Grid, c: float) -> FunctionOnGrid:
    return FunctionOnGrid(grid, np.full(grid.m, float(c)))


def from_callable(grid: Grid, fn) -> FunctionOnGrid:
    return FunctionOnGrid(grid, np.array([fn(t) for t in grid.points], dtype=np.float64))


@dataclass(frozen=True)
class Functional:
    """Point evaluation Tf = f(t0), realized as the nearest-bin value.

    Ties between two equidistant bins resolve to the lower index.  Odd m
    places a bin center exactly at 0, so experiments default to odd m.
    """

    kind: str
    t0: float
    index: int

    def __post_init__(self):
        if self.kind != "point":
            raise ValueError(f"unsupported functional kind {self.kind!r}")


def point_functional(grid: Grid, t0: float = 0.0) -> Functional:
    if not -0.5 <= t0 <= 0.5:
        raise ValueError(f"t0={t0} outside [-1/2, 1/2]")
    index = int(np.argmin(np.abs(grid.points - t0)))
    if abs(grid.points[index] - t0) > grid.delta / 2 + 1e-12:
        raise AssertionError("nearest bin farther than delta/2")
    return Functional(kind="point", t0=float(t0), index=index)


def eval_functional(functional: Functional, f: FunctionOnGrid) -> float:
    if not 0 <= functional.index < f.grid.m:
        raise GridMismatchError("functional index invalid for this grid")
    return float(f.values[functional.index])


def l2_distance(f: FunctionOnGrid, g: FunctionOnGrid) -> float:
    """Discrete surrogate of the L2 norm: sqrt(delta * sum((g-f)**2))."""
    _check_grids(f, g)
    diff = g.values - f.values
    return float(np.sqrt(f.grid.delta * np.dot(diff, diff)))


@dataclass(frozen=True)
class Observation:
    """Bin sums from one draw of the discretized white-noise model."""

    grid: Grid
    y: np.ndarray = field(repr=False)
    n: float
    seed: int
    rep: int = 0


def _philox(seed: int, rep: int) -> np.random.Generator:
    # Philox4x64 counter-based generator; (seed, rep) keys independent
    # sub-streams so replications parallelize deterministically.
    key = np.array([seed & MASK64, rep & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_observation(f: FunctionOnGrid, n: float, seed: int, rep: int = 0) -> Observation:
    if not n > 0:
        raise ValueError(f"noise-level parameter n must be positive, got {n}")
    grid = f.grid
    z = _philox(seed, rep).standard_normal(grid.m)
    y = f.values * grid.delta + np.sqrt(grid.delta / n) * z
    y.setflags(write=False)
    return Observation(grid=grid, y=y, n=float(n), seed=int(seed), rep=int(rep))


def sample_noise_matrix(grid: Grid, n: float, seed: int, reps: range) -> np.ndarray:
    """Stack sqrt(delta/n)-scaled noise rows for the given replication range."""
    if not n > 0:
        raise ValueError(f"noise-level parameter n must be positive, got {n}")
    scale = np.sqrt(grid.delta / n)
    out = np.empty((len(reps), grid.m))
    for row, rep in enumerate(reps):
        out[row] = _philox(seed, rep).standard_normal(grid.m)
    out *= scale
    return out


def apply_affine(estimator, obs: Observation) -> float:
    """Evaluate c0 + sum(w * Y) for an affine estimator on one observation."""
    if estimator.grid != obs.grid:
        raise GridMismatchError("estimator and observation grids differ")
    return float(estimator.c0 + np.dot(estimator.w.values, obs.y))


def _check_grids(f: FunctionOnGrid, g: FunctionOnGrid) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"grids differ: m={f.grid.m} vs m={g.grid.m}")
