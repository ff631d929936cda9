"""One-sided derivative stencils on integer step offsets.

A stencil is defined by strictly increasing positive integers
``a_1 < ... < a_k`` (the implicit ``a_0 = 0`` is always included).  The
weights ``w_0 .. w_k`` approximate the first derivative at the left
endpoint from samples ``u(t_0 + a_i * h)``:

    u'(t_0)  ~=  (w_0 u_0 + w_1 u_1 + ... + w_k u_k) / h

with error O(h^k) for smooth u.  Weights are obtained by differentiating
the Lagrange basis polynomials on the nodes {0, a_1, ..., a_k} at the left
endpoint, carried out in exact rational arithmetic: the offsets are
integers, so every weight is an exact fraction and the defining identities
(zero weight sum, first-moment one, vanishing higher moments) hold exactly
rather than to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .validation import as_int_tuple, as_positive_real

#: Largest offset accepted by default.  Beyond roughly this size the float
#: view of the weights loses all significance in downstream arithmetic even
#: though the exact fractions stay well defined.
DEFAULT_MAX_OFFSET = 64


@dataclass(frozen=True)
class StencilParams:
    """Integer step offsets ``0 < a_1 < ... < a_k`` (``a_0 = 0`` implicit)."""

    offsets: tuple[int, ...]

    def __post_init__(self) -> None:
        offsets = as_int_tuple(self.offsets, "offsets")
        if len(offsets) < 1:
            raise ValueError("offsets: at least one offset is required")
        if offsets[0] <= 0:
            raise ValueError(f"offsets: must be positive, got {offsets[0]}")
        for prev, cur in zip(offsets, offsets[1:]):
            if cur <= prev:
                raise ValueError(
                    f"offsets: must be strictly increasing, got {prev} before {cur}"
                )
        object.__setattr__(self, "offsets", offsets)

    @property
    def k(self) -> int:
        """Number of future sample points (the approximation order)."""
        return len(self.offsets)

    @property
    def max_offset(self) -> int:
        return self.offsets[-1]


@dataclass(frozen=True, eq=False)
class Stencil:
    """Derivative weights attached to a set of offsets.

    ``weights_exact`` holds the authoritative rational values; ``weights``
    is the float view used by the numerical code paths.
    """

    params: StencilParams
    weights_exact: tuple[Fraction, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.weights.setflags(write=False)

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def offsets(self) -> tuple[int, ...]:
        return self.params.offsets

    @property
    def max_offset(self) -> int:
        return self.params.max_offset

    @property
    def weight_amplification(self) -> float:
        """Sum of |w_i| over the future points divided by |w_0|.

        Measures how strongly the induced backward recursion can amplify
        perturbations; quadratically spread offsets keep it near one while
        equidistant offsets grow it quickly with k.
        """
        return float(sum(abs(w) for w in self.weights_exact[1:]) / abs(self.weights_exact[0]))

    def __repr__(self) -> str:
        return f"Stencil(offsets={self.offsets}, weights={[str(w) for w in self.weights_exact]})"


def _lagrange_derivative_weights(offsets: tuple[int, ...]) -> tuple[Fraction, ...]:
    # d/dt of basis polynomial L_i at t=0.  For i >= 1 every term of the
    # derivative sum except the one dropping the factor (t - 0) vanishes at
    # the left endpoint, which collapses the sum to a single product.
    weights = [Fraction(0)] * (len(offsets) + 1)
    weights[0] = -sum(Fraction(1, a) for a in offsets)
    for i, a_i in enumerate(offsets, start=1):
        num = Fraction(1)
        for a in offsets:
            if a != a_i:
                num *= Fraction(0 - a)
        den = Fraction(a_i)  # factor (a_i - a_0)
        for a in offsets:
            if a != a_i:
                den *= a_i - a
        weights[i] = num / den
    return tuple(weights)


def make_stencil(
    params: StencilParams | Sequence[int],
    *,
    max_offset: int = DEFAULT_MAX_OFFSET,
) -> Stencil:
    """Build the stencil for the given offsets.

    Raises ValueError for non-positive, non-increasing or duplicate
    offsets, and for offsets beyond ``max_offset``.
    """
    if not isinstance(params, StencilParams):
        params = StencilParams(tuple(params))
    if params.max_offset > max_offset:
        raise ValueError(
            f"offsets: largest offset {params.max_offset} exceeds the cap {max_offset}"
        )
    exact = _lagrange_derivative_weights(params.offsets)
    weights = np.array([float(w) for w in exact])
    return Stencil(params=params, weights_exact=exact, weights=weights)


def approximate_derivative(stencil: Stencil, u_values: Sequence[float], h: float) -> float:
    """Weighted difference ``sum_i w_i u_i / h``.

    ``u_values[i]`` must be ``u(t_0 + a_i * h)`` with ``a_0 = 0``.
    """
    h = as_positive_real(h, "h")
    u = np.asarray(u_values, dtype=float)
    if u.shape != (stencil.k + 1,):
        raise ValueError(
            f"u_values: expected {stencil.k + 1} samples for a k={stencil.k} stencil, "
            f"got shape {u.shape}"
        )
    return float(np.dot(stencil.weights, u)) / h


@dataclass(frozen=True)
class TruncationProbe:
    """Outcome of an empirical truncation-order measurement.

    ``exact`` is set when the stencil reproduces the derivative to rounding
    at every step size (polynomial inputs of degree <= k); ``slope`` is the
    fitted log-log order otherwise.
    """

    slope: float | None
    exact: bool
    step_sizes: tuple[float, ...]
    errors: tuple[float, ...]
    reference: float


def _richardson_derivative(u: Callable[[float], float], t0: float) -> float:
    # Three-level Richardson extrapolation of central differences; accurate
    # to ~1e-12 relative for smooth u, far below any probe truncation error.
    e = 1e-2
    d = []
    for i in range(3):
        step = e / 2**i
        d.append((u(t0 + step) - u(t0 - step)) / (2 * step))
    d1 = (4 * d[1] - d[0]) / 3
    d2 = (4 * d[2] - d[1]) / 3
    return (16 * d2 - d1) / 15


def truncation_order_probe(
    stencil: Stencil,
    u: Callable[[float], float],
    t0: float,
    h_list: Sequence[float],
    derivative: float | Callable[[float], float] | None = None,
) -> TruncationProbe:
    """Fit the observed order of the derivative approximation on ``u``.

    Evaluates the weighted difference at each step size in ``h_list``
    (strictly decreasing, at least three entries), compares against the
    true derivative at ``t0`` and least-squares fits log(error) against
    log(h).  Errors at the rounding floor of the weighted sum are excluded
    from the fit; if every step size sits on that floor the result reports
    the exact outcome instead of a slope.

    ``derivative`` optionally supplies the reference u'(t0) as a value or a
    callable; by default it is computed by Richardson extrapolation.
    """
    hs = [as_positive_real(h, "h_list entry") for h in h_list]
    if len(hs) < 3:
        raise ValueError(f"h_list: need at least 3 step sizes, got {len(hs)}")
    for prev, cur in zip(hs, hs[1:]):
        if cur >= prev:
            raise ValueError("h_list: step sizes must be strictly decreasing")

    if derivative is None:
        reference = _richardson_derivative(u, t0)
    elif callable(derivative):
        reference = float(derivative(t0))
    else:
        reference = float(derivative)

    eps = np.finfo(float).eps
    errors: list[float] = []
    floors: list[float] = []
    for h in hs:
        samples = np.array([u(t0 + a * h) for a in (0, *stencil.offsets)], dtype=float)
        approx = float(np.dot(stencil.weights, samples)) / h
        errors.append(abs(approx - reference))
        # rounding floor of the weighted sum, scaled back by 1/h
        floors.append(100.0 * eps * (float(np.abs(stencil.weights * samples).sum()) / h + abs(reference)))

    usable = [(h, e) for h, e, fl in zip(hs, errors, floors) if e > fl]
    if len(usable) < 2:
        return TruncationProbe(
            slope=None, exact=True, step_sizes=tuple(hs), errors=tuple(errors), reference=reference
        )
    log_h = np.log([h for h, _ in usable])
    log_e = np.log([e for _, e in usable])
    slope = float(np.polyfit(log_h, log_e, 1)[0])
    return TruncationProbe(
        slope=slope, exact=False, step_sizes=tuple(hs), errors=tuple(errors), reference=reference
    )
