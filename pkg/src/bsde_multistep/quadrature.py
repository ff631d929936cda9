"""Gauss-Hermite evaluation of Gaussian conditional expectations.

For an increment ``W ~ N(0, dt)`` the substitution ``w = x + sqrt(2 dt) q``
turns ``E[g(x + W)]`` into the physicists' Hermite integral

    E[g(x + W)] = (1 / sqrt(pi)) * sum_i  weight_i * g(x + sqrt(2 dt) q_i)

which is exact for polynomials of degree up to 2Q - 1.  The weighted
variant ``E[g(x + W) * W]`` carries the extra factor ``sqrt(2 dt) q_i``
inside the sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .validation import as_int, as_positive_real

MAX_ORDER = 64


@dataclass(frozen=True, eq=False)
class HermiteRule:
    """Nodes and weights for the weight function exp(-q^2)."""

    order: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def max_abs_node(self) -> float:
        return float(np.abs(self.nodes).max())


def hermite_rule(order: int) -> HermiteRule:
    """Gauss-Hermite rule of the given order (1 <= order <= 64)."""
    order = as_int(order, "order")
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order: must be in [1, {MAX_ORDER}], got {order}")
    nodes, weights = hermgauss(order)
    return HermiteRule(order=order, nodes=nodes, weights=weights)


def _evaluate(g: Callable, points: np.ndarray) -> np.ndarray:
    values = np.asarray(g(points), dtype=float)
    if values.shape != points.shape:
        values = np.broadcast_to(values, points.shape)
    if not np.all(np.isfinite(values)):
        raise ValueError("g returned non-finite values at quadrature points")
    return values


def expect(rule: HermiteRule, g: Callable, x, dt: float):
    """Quadrature value of ``E[g(x + W)]`` for ``W ~ N(0, dt)``.

    ``g`` must accept ndarray arguments; ``x`` may be a scalar or an array
    (the result has the shape of ``x``).
    """
    dt = as_positive_real(dt, "dt")
    x_arr = np.asarray(x, dtype=float)
    shift = math.sqrt(2.0 * dt) * rule.nodes
    values = _evaluate(g, x_arr[..., None] + shift)
    out = values @ rule.weights / math.sqrt(math.pi)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def expect_weighted(rule: HermiteRule, g: Callable, x, dt: float):
    """Quadrature value of ``E[g(x + W) * W]`` for ``W ~ N(0, dt)``."""
    dt = as_positive_real(dt, "dt")
    x_arr = np.asarray(x, dtype=float)
    shift = math.sqrt(2.0 * dt) * rule.nodes
    values = _evaluate(g, x_arr[..., None] + shift)
    out = values @ (rule.weights * shift) / math.sqrt(math.pi)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out
