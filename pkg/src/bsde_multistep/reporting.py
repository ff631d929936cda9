"""Convergence studies, order fitting and CSV serialization.

All CSV output uses shortest round-trip float formatting (``repr``), so a
dumped file parses back to bit-identical values and repeated runs of the
same configuration produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .problems import BsdeProblem
from .solver import MultistepBsdeSolver, SolutionSurface

STUDY_CSV_HEADER = "N,h,err_y_max,err_y_mean,err_z_max,err_z_mean"
SURFACE_CSV_HEADER = "n,t,x,y,z"


def fit_order(step_sizes: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(step size).

    Rows with non-positive error carry no information for the fit and are
    skipped; with fewer than two usable rows the order is NaN.
    """
    pairs = [(h, e) for h, e in zip(step_sizes, errors) if e > 0.0]
    if len(pairs) < 2:
        return float("nan")
    log_h = np.log([h for h, _ in pairs])
    log_e = np.log([e for _, e in pairs])
    return float(np.polyfit(log_h, log_e, 1)[0])


@dataclass(frozen=True)
class StudyRow:
    n_steps: int
    h: float
    err_y_max: float
    err_y_mean: float
    err_z_max: float
    err_z_mean: float


@dataclass(frozen=True)
class StudyReport:
    """Per-resolution errors at t = 0 plus fitted convergence orders."""

    rows: tuple[StudyRow, ...]
    order_y: float
    order_z: float
    config: dict

    @property
    def errors_decreasing(self) -> bool:
        errs = [r.err_y_max for r in self.rows]
        return all(b < a for a, b in zip(errs, errs[1:]))


def run_study(
    problem: BsdeProblem,
    n_values: Iterable[int],
    solver_params: dict | None = None,
) -> StudyReport:
    """Solve the problem at each resolution and fit the observed orders.

    Requires at least three step counts, each exceeding the largest
    stencil offset, and a problem with analytic surfaces to score against.
    """
    ns = sorted(set(int(n) for n in n_values))
    if len(ns) < 3:
        raise ValueError(f"study needs at least 3 step counts, got {ns}")
    if not problem.has_analytic:
        raise ValueError(
            f"problem {problem.name!r} has no analytic surfaces to measure errors against"
        )
    params = dict(solver_params or {})
    params.pop("n_steps", None)

    rows: list[StudyRow] = []
    for n in ns:
        solver = MultistepBsdeSolver(n_steps=n, **params).fit(problem)
        errs = solver.errors_at_initial_time()
        rows.append(
            StudyRow(
                n_steps=n,
                h=solver.time_grid_.h,
                err_y_max=errs["err_y_max"],
                err_y_mean=errs["err_y_mean"],
                err_z_max=errs["err_z_max"],
                err_z_mean=errs["err_z_mean"],
            )
        )
    hs = [r.h for r in rows]
    report_config = {"problem": problem.name, "T": problem.horizon, "N": ns, **params}
    return StudyReport(
        rows=tuple(rows),
        order_y=fit_order(hs, [r.err_y_max for r in rows]),
        order_z=fit_order(hs, [r.err_z_max for r in rows]),
        config=report_config,
    )


def study_csv(report: StudyReport) -> str:
    """Study rows plus a trailing order summary block."""
    lines = [STUDY_CSV_HEADER]
    for r in report.rows:
        lines.append(
            f"{r.n_steps},{r.h!r},{r.err_y_max!r},{r.err_y_mean!r},"
            f"{r.err_z_max!r},{r.err_z_mean!r}"
        )
    lines.append(f"order_y,{report.order_y!r}")
    lines.append(f"order_z,{report.order_z!r}")
    return "\n".join(lines) + "\n"


def study_text(report: StudyReport) -> str:
    lines = ["    N           h   err_y_max   err_z_max"]
    for r in report.rows:
        lines.append(f"{r.n_steps:5d}  {r.h:10.6g}  {r.err_y_max:10.6g}  {r.err_z_max:10.6g}")
    lines.append(f"fitted order_y = {report.order_y:.6g}")
    lines.append(f"fitted order_z = {report.order_z:.6g}")
    return "\n".join(lines) + "\n"


def surface_csv(surface: SolutionSurface) -> str:
    """Full surface dump, one row per (level, node)."""
    h = surface.time_grid.h
    nodes = surface.spatial_grid.nodes
    lines = [SURFACE_CSV_HEADER]
    for n in range(surface.n_levels):
        t = n * h
        y_row = surface.y[n]
        z_row = surface.z[n]
        for j, x in enumerate(nodes):
            lines.append(f"{n},{t!r},{x!r},{y_row[j]!r},{z_row[j]!r}")
    return "\n".join(lines) + "\n"
