"""Uniform time/space grids, level storage and local spatial interpolation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import HermiteRule
from .validation import as_int, as_positive_int, as_positive_real


class OutOfDomainError(ValueError):
    """An interpolation query fell outside the spatial grid.

    Raised instead of extrapolating: silent extrapolation would corrupt
    measured convergence orders, so callers must size their domain to keep
    every query interior.
    """


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant partition of [0, horizon] into n_steps steps."""

    horizon: float
    n_steps: int

    def __post_init__(self) -> None:
        as_positive_real(self.horizon, "horizon")
        as_positive_int(self.n_steps, "n_steps")

    @property
    def h(self) -> float:
        return self.horizon / self.n_steps

    def t(self, n: int) -> float:
        return n * self.h


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """m uniformly spaced nodes spanning [x_min, x_max]."""

    x_min: float
    x_max: float
    m: int
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        as_int(self.m, "m")
        if self.m < 4:
            raise ValueError(f"m: need at least 4 nodes, got {self.m}")
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min must be below x_max, got [{self.x_min}, {self.x_max}]")
        nodes = np.linspace(self.x_min, self.x_max, self.m)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.m - 1)


@dataclass(frozen=True, eq=False)
class LevelData:
    """y and z values over the spatial nodes at one time level."""

    index: int
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        if self.y.shape != self.z.shape or self.y.ndim != 1:
            raise ValueError("y and z must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.z))):
            raise ValueError(f"level {self.index}: non-finite entries")


def interpolate(grid: SpatialGrid, values, x, degree: int):
    """Local Lagrange interpolation of nodal values at ``x``.

    Uses the (degree+1)-node window centered on each query point, shifted
    at the boundaries to stay inside the grid, evaluated in barycentric
    form with the uniform-grid weights (-1)^j C(degree, j).  Nodal queries
    reproduce the stored values exactly and polynomial data of degree up
    to ``degree`` is reproduced to rounding.

    ``x`` may be a scalar or an array; queries outside
    [x_min, x_max] raise OutOfDomainError.
    """
    degree = as_int(degree, "degree")
    if not 1 <= degree <= grid.m - 1:
        raise ValueError(f"degree: must be in [1, {grid.m - 1}], got {degree}")
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.m,):
        raise ValueError(f"values: expected shape ({grid.m},), got {values.shape}")

    scalar = np.isscalar(x) or np.ndim(x) == 0
    shape = np.shape(x)
    xq = np.asarray(x, dtype=float).ravel()
    span = grid.x_max - grid.x_min
    tol = 1e-12 * span
    if xq.size and (xq.min() < grid.x_min - tol or xq.max() > grid.x_max + tol):
        bad = xq[(xq < grid.x_min - tol) | (xq > grid.x_max + tol)][0]
        raise OutOfDomainError(
            f"query {bad!r} outside [{grid.x_min!r}, {grid.x_max!r}]"
        )
    xq = np.clip(xq, grid.x_min, grid.x_max)

    dx = grid.dx
    pos = (xq - grid.x_min) / dx
    start = np.rint(pos - degree / 2.0).astype(np.int64)
    np.clip(start, 0, grid.m - 1 - degree, out=start)
    idx = start[:, None] + np.arange(degree + 1)[None, :]
    diff = xq[:, None] - grid.nodes[idx]

    bary = np.array([(-1.0) ** j * math.comb(degree, j) for j in range(degree + 1)])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = bary / diff
        out = (ratios * values[idx]).sum(axis=1) / ratios.sum(axis=1)

    # queries that hit a node exactly: return the stored value bit-for-bit
    hit = np.abs(diff) < 1e-13 * max(abs(grid.x_min), abs(grid.x_max), 1.0)
    hit_rows = np.nonzero(hit.any(axis=1))[0]
    if hit_rows.size:
        cols = np.argmin(np.abs(diff[hit_rows]), axis=1)
        out[hit_rows] = values[idx[hit_rows, cols]]

    if scalar:
        return float(out[0])
    return out.reshape(shape)


def required_domain(
    eval_half_width: float,
    horizon: float,
    max_offset: int,
    h: float,
    rule: HermiteRule,
    margin: float = 2.0,
) -> tuple[float, float]:
    """Symmetric domain sized so a backward solve never queries outside it.

    The half-width is

        eval_half_width + margin * max|q| * sqrt(2 * max_offset * h) * sqrt(ceil(horizon / h))

    i.e. the evaluation window plus ``margin`` times the worst single-hop
    quadrature reach scaled by the Brownian square-root growth over the
    whole horizon (the sqrt(ceil(horizon/h)) factor cancels the sqrt(h),
    so the width is resolution independent).  With margin >= 1 the solver's
    interior band always covers the evaluation window and its boundary
    treatment keeps every interpolation query inside the returned domain;
    completed solves assert that no out-of-range query occurred.
    """
    as_positive_real(eval_half_width + 1.0, "eval_half_width")  # allow zero
    if eval_half_width < 0:
        raise ValueError(f"eval_half_width: must be >= 0, got {eval_half_width}")
    as_positive_real(horizon, "horizon")
    as_positive_int(max_offset, "max_offset")
    as_positive_real(h, "h")
    if margin < 1.0:
        raise ValueError(f"margin: must be >= 1, got {margin}")
    reach = rule.max_abs_node * math.sqrt(2.0 * max_offset * h)
    half = eval_half_width + margin * reach * math.sqrt(math.ceil(horizon / h))
    return (-half, half)


def build_spatial_grid(x_min: float, x_max: float, dx_target: float, min_nodes: int = 4) -> SpatialGrid:
    """Grid over [x_min, x_max] with spacing at most ``dx_target``."""
    as_positive_real(dx_target, "dx_target")
    m = max(int(math.ceil((x_max - x_min) / dx_target)) + 1, min_nodes)
    return SpatialGrid(x_min=x_min, x_max=x_max, m=m)
