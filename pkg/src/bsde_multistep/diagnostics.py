"""Stability and convergence diagnostics for a stencil-induced scheme.

Two independent criteria are computed for each stencil:

* the convergence ratio: spread the weights onto the integer lags
  ``0..a_k``, form the tail sums of that sequence, and compare the summed
  magnitude of the tails beyond the first against the first.  A ratio
  below one is the sufficient condition for O(h^k) convergence of the
  backward scheme;
* the root condition: the characteristic polynomial built from the
  weights must have all roots inside the closed unit disk, with any root
  on the circle simple.

The structural root at 1 (a consequence of the weights summing to zero) is
deflated exactly before root finding so it never trips the borderline
tests.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .stencil import Stencil, make_stencil

#: |root - 1| below this counts as the structural unit root.
UNIT_ROOT_TOL = 1e-9
#: residual bound for accepted roots, relative to the largest coefficient
ROOT_RESIDUAL_RTOL = 1e-9
#: |P'(root)| threshold (relative to max coefficient) for a simple root
SIMPLE_ROOT_RTOL = 1e-8


class RootFindingError(RuntimeError):
    """Companion-matrix root finding failed to meet the residual contract."""


@dataclass(frozen=True, eq=False)
class LagCoefficients:
    """Weights spread over integer lags and their tail sums.

    ``per_lag[j]`` is the stencil weight at lag ``j`` (zero when ``j`` is
    not an offset); ``tail_sums[j-1]`` is the sum of ``per_lag[j:]`` for
    ``j = 1..a_k``.
    """

    per_lag_exact: tuple[Fraction, ...]
    tail_sums_exact: tuple[Fraction, ...]
    per_lag: np.ndarray = field(repr=False)
    tail_sums: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.per_lag.setflags(write=False)
        self.tail_sums.setflags(write=False)


@dataclass(frozen=True, eq=False)
class CharacteristicPolynomial:
    """Polynomial ``sum_i w_i lambda^(a_k - a_i)`` in descending powers."""

    coeffs_exact: tuple[Fraction, ...]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.coeffs.setflags(write=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs_exact) - 1

    def __call__(self, x: complex) -> complex:
        out = 0j
        for c in self.coeffs:
            out = out * x + c
        return out

    def derivative_at(self, x: complex) -> complex:
        n = self.degree
        out = 0j
        for i, c in enumerate(self.coeffs[:-1]):
            out = out * x + (n - i) * c
        return out


@dataclass(frozen=True, eq=False)
class SchemeDiagnostics:
    stencil: Stencil
    lags: LagCoefficients
    ratio: float
    roots: np.ndarray
    max_nonunit_root_mag: float
    root_condition_ok: bool
    convergence_condition_ok: bool


def lag_coefficients(stencil: Stencil) -> LagCoefficients:
    """Spread the weights onto lags 0..a_k and accumulate tail sums."""
    a_k = stencil.max_offset
    per_lag = [Fraction(0)] * (a_k + 1)
    per_lag[0] = stencil.weights_exact[0]
    for i, offset in enumerate(stencil.offsets, start=1):
        per_lag[offset] = stencil.weights_exact[i]
    tails: list[Fraction] = []
    running = Fraction(0)
    for lag in range(a_k, 0, -1):
        running += per_lag[lag]
        tails.append(running)
    tails.reverse()
    return LagCoefficients(
        per_lag_exact=tuple(per_lag),
        tail_sums_exact=tuple(tails),
        per_lag=np.array([float(c) for c in per_lag]),
        tail_sums=np.array([float(t) for t in tails]),
    )


def convergence_ratio(lags: LagCoefficients) -> float:
    """Sum of |tail_sums[1:]| over |tail_sums[0]|; zero for one-lag schemes."""
    first = lags.tail_sums_exact[0]
    if first == 0:
        raise ValueError("degenerate stencil: leading tail sum is zero")
    total = sum(abs(t) for t in lags.tail_sums_exact[1:])
    return float(total / abs(first))


def characteristic_polynomial(stencil: Stencil) -> CharacteristicPolynomial:
    lags = lag_coefficients(stencil)
    # coefficient of lambda^(a_k - j) is the lag-j weight
    return CharacteristicPolynomial(
        coeffs_exact=lags.per_lag_exact,
        coeffs=np.array([float(c) for c in lags.per_lag_exact]),
    )


def _deflate_unit_root(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    # synthetic division by (lambda - 1); the remainder is the weight sum
    # and must vanish identically
    out: list[Fraction] = [coeffs[0]]
    for c in coeffs[1:-1]:
        out.append(c + out[-1])
    remainder = coeffs[-1] + out[-1]
    if remainder != 0:
        raise RootFindingError(f"unit root deflation left remainder {remainder}")
    return tuple(out)


def polynomial_roots(poly: CharacteristicPolynomial) -> np.ndarray:
    """All roots of the characteristic polynomial, unit root included.

    The structural root at 1 is removed by exact synthetic division first;
    the remaining roots come from the companion-matrix eigenvalues of the
    deflated polynomial.  Every returned root r satisfies
    ``|P(r)| <= 1e-9 * max|coeff|``.
    """
    if poly.degree < 1:
        raise ValueError("polynomial degree must be at least 1")
    if poly.coeffs_exact[0] == 0:
        raise ValueError("leading coefficient must be nonzero")
    deflated = _deflate_unit_root(poly.coeffs_exact)
    # guard: strip exact trailing zeros (cannot occur for valid stencils,
    # whose last weight is a nonzero product, but root finding must not
    # silently treat them as roots at 0)
    while len(deflated) > 1 and deflated[-1] == 0:
        deflated = deflated[:-1]
    if len(deflated) > 1:
        try:
            rest = np.roots(np.array([float(c) for c in deflated]))
        except np.linalg.LinAlgError as exc:
            raise RootFindingError(f"companion eigenvalue iteration failed: {exc}") from exc
    else:
        rest = np.array([], dtype=complex)
    roots = np.concatenate([rest.astype(complex), [1.0 + 0.0j]])
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]

    scale = float(np.abs(poly.coeffs).max())
    residuals = np.array([abs(poly(r)) for r in roots])
    if np.any(residuals > ROOT_RESIDUAL_RTOL * scale):
        worst = float(residuals.max())
        raise RootFindingError(
            f"root residual {worst:.3e} exceeds {ROOT_RESIDUAL_RTOL:.0e} * max|coeff|"
        )
    return roots


def diagnose(stencil: Stencil) -> SchemeDiagnostics:
    """Assemble ratio, roots and the two condition verdicts for a stencil."""
    lags = lag_coefficients(stencil)
    ratio = convergence_ratio(lags)
    poly = characteristic_polynomial(stencil)
    roots = polynomial_roots(poly)

    mags = np.abs(roots)
    nonunit = mags[np.abs(roots - 1.0) > UNIT_ROOT_TOL]
    max_nonunit = float(nonunit.max()) if nonunit.size else 0.0

    scale = float(np.abs(poly.coeffs).max())
    root_ok = bool(np.all(mags <= 1.0 + UNIT_ROOT_TOL))
    if root_ok:
        on_circle = roots[np.abs(mags - 1.0) <= UNIT_ROOT_TOL]
        for r in on_circle:
            if abs(poly.derivative_at(r)) <= SIMPLE_ROOT_RTOL * scale:
                root_ok = False
                break

    return SchemeDiagnostics(
        stencil=stencil,
        lags=lags,
        ratio=ratio,
        roots=roots,
        max_nonunit_root_mag=max_nonunit,
        root_condition_ok=root_ok,
        convergence_condition_ok=ratio < 1.0,
    )


# --- stencil families and the comparison table ------------------------------

FAMILIES: dict[str, Callable[[int], tuple[int, ...]]] = {
    "equidistant": lambda k: tuple(range(1, k + 1)),
    "quadratic": lambda k: tuple(i * i for i in range(1, k + 1)),
}

TABLE_CSV_HEADER = "family,k,params,ratio,max_root,convergence_ok,root_ok"


@dataclass(frozen=True, eq=False)
class TableRow:
    family: str
    k: int
    offsets: tuple[int, ...]
    diagnostics: SchemeDiagnostics


def family_offsets(family: str | Callable[[int], Sequence[int]], k: int) -> tuple[int, ...]:
    if callable(family):
        return tuple(int(a) for a in family(k))
    try:
        gen = FAMILIES[family]
    except KeyError:
        raise ValueError(
            f"unknown family {family!r}; expected one of {sorted(FAMILIES)}"
        ) from None
    return gen(k)


def diagnostics_table(
    families: Sequence[str | Callable[[int], Sequence[int]]],
    k_range: Iterable[int],
) -> list[TableRow]:
    """One diagnostics row per (family, k)."""
    rows: list[TableRow] = []
    ks = list(k_range)
    for family in families:
        name = family if isinstance(family, str) else getattr(family, "__name__", "custom")
        for k in ks:
            offsets = family_offsets(family, k)
            rows.append(
                TableRow(
                    family=name,
                    k=k,
                    offsets=offsets,
                    diagnostics=diagnose(make_stencil(offsets)),
                )
            )
    return rows


def render_table_csv(rows: Sequence[TableRow]) -> str:
    """Comparison table as CSV (LF line endings, round-trip floats)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_CSV_HEADER.split(","))
    for row in rows:
        d = row.diagnostics
        writer.writerow(
            [
                row.family,
                row.k,
                " ".join(str(a) for a in row.offsets),
                repr(d.ratio),
                repr(d.max_nonunit_root_mag),
                str(d.convergence_condition_ok).lower(),
                str(d.root_condition_ok).lower(),
            ]
        )
    return buf.getvalue()


def render_table_text(rows: Sequence[TableRow]) -> str:
    """Aligned human-readable table (6 significant digits)."""
    header = ("family", "k", "params", "ratio", "max_root", "convergence", "root_cond")
    cells = [header]
    for row in rows:
        d = row.diagnostics
        cells.append(
            (
                row.family,
                str(row.k),
                ",".join(str(a) for a in row.offsets),
                f"{d.ratio:.6g}",
                f"{d.max_nonunit_root_mag:.6g}",
                "ok" if d.convergence_condition_ok else "FAIL",
                "ok" if d.root_condition_ok else "FAIL",
            )
        )
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"
