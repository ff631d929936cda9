"""Command-line front end.

Subcommands:

* ``diagnose``  -- weights, lag sums, ratio, roots and verdicts for one stencil
* ``table``     -- family comparison table as CSV and aligned text
* ``solve``     -- single backward solve from a TOML config
* ``study``     -- convergence study over a list of N values

Exit codes: 0 success, 1 invalid input, 2 a diagnose verdict failed (the
computation itself succeeded), 3 runtime solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .diagnostics import (
    FAMILIES,
    RootFindingError,
    TableRow,
    diagnose,
    diagnostics_table,
    family_offsets,
    render_table_csv,
    render_table_text,
)
from .grids import OutOfDomainError
from .problems import get_problem
from .reporting import run_study, study_csv, study_text, surface_csv
from .solver import MultistepBsdeSolver, PicardConvergenceError
from .stencil import make_stencil

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERDICT = 2
EXIT_RUNTIME = 3


def _parse_params(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"--params: expected comma-separated integers, got {text!r}")


def _stencil_from_args(args) -> tuple[int, ...]:
    if args.params is not None and args.family is not None:
        raise ValueError("--params and --family are mutually exclusive")
    if args.params is not None:
        return _parse_params(args.params)
    if args.family is not None:
        if args.k is None:
            raise ValueError("--family requires --k")
        return family_offsets(args.family, args.k)
    raise ValueError("one of --params or --family is required")


def _write_or_print(text: str, path: str | None, quiet: bool) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="")
        if not quiet:
            print(f"wrote {path}")
    else:
        sys.stdout.write(text)


def cmd_diagnose(args) -> int:
    offsets = _stencil_from_args(args)
    stencil = make_stencil(offsets)
    d = diagnose(stencil)
    if not args.quiet:
        print(f"offsets:        {','.join(str(a) for a in offsets)}")
        print(f"weights:        {', '.join(str(w) for w in stencil.weights_exact)}")
        print(f"lag weights:    {', '.join(f'{c:.6g}' for c in d.lags.per_lag)}")
        print(f"tail sums:      {', '.join(f'{t:.6g}' for t in d.lags.tail_sums)}")
        print(f"ratio:          {d.ratio:.6g}")
        roots = ", ".join(
            f"{r.real:.6g}" if abs(r.imag) < 1e-12 else f"{r.real:.6g}{r.imag:+.6g}i"
            for r in d.roots
        )
        print(f"roots:          {roots}")
        print(f"max non-unit root magnitude: {d.max_nonunit_root_mag:.6g}")
        print(f"convergence condition (ratio < 1): {'PASS' if d.convergence_condition_ok else 'FAIL'}")
        print(f"root condition:                    {'PASS' if d.root_condition_ok else 'FAIL'}")
    if args.output:
        fam = args.family if args.family is not None else "explicit"
        row = TableRow(family=fam, k=stencil.k, offsets=offsets, diagnostics=d)
        Path(args.output).write_text(render_table_csv([row]), encoding="utf-8", newline="")
    if d.convergence_condition_ok and d.root_condition_ok:
        return EXIT_OK
    return EXIT_VERDICT


def cmd_table(args) -> int:
    families = args.family or list(FAMILIES)
    ks = range(args.k, args.kmax + 1)
    rows = diagnostics_table(families, ks)
    csv_text = render_table_csv(rows)
    if args.output:
        Path(args.output).write_text(csv_text, encoding="utf-8", newline="")
        if not args.quiet:
            print(f"wrote {args.output}")
            print(render_table_text(rows), end="")
    else:
        sys.stdout.write(csv_text if args.quiet else render_table_text(rows))
    return EXIT_OK


def _solver_from_config(cfg: RunConfig, n_steps: int) -> MultistepBsdeSolver:
    params = dict(cfg.solver_params)
    return MultistepBsdeSolver(n_steps=n_steps, **params)


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    problem = get_problem(cfg.problem, cfg.horizon)
    if cfg.n_is_list:
        raise ConfigError("N: solve expects a scalar N (use the study command for lists)")
    solver = _solver_from_config(cfg, cfg.n_values[0]).fit(problem)

    if not args.quiet:
        w = solver.eval_half_width
        xs = np.unique(np.clip([-w, -w / 2, 0.0, w / 2, w], -w, w))
        ys = solver.predict(xs)
        zs = solver.predict_z(xs)
        print(f"problem {problem.name!r}, N={cfg.n_values[0]}, offsets {cfg.stencil}")
        print(f"grid: {solver.spatial_grid_.m} nodes on "
              f"[{solver.spatial_grid_.x_min:.6g}, {solver.spatial_grid_.x_max:.6g}], "
              f"quadrature order {solver.rule_.order}")
        header = f"{'x':>12} {'y(0,x)':>14} {'z(0,x)':>14}"
        if problem.has_analytic:
            header += f" {'err_y':>12} {'err_z':>12}"
        print(header)
        for i, x in enumerate(xs):
            line = f"{x:12.6g} {ys[i]:14.6g} {zs[i]:14.6g}"
            if problem.has_analytic:
                ey = abs(ys[i] - float(problem.analytic_y(0.0, np.array([x]))[0]))
                ez = abs(zs[i] - float(problem.analytic_z(0.0, np.array([x]))[0]))
                line += f" {ey:12.6g} {ez:12.6g}"
            print(line)
        if problem.has_analytic:
            errs = solver.errors_at_initial_time()
            print(
                f"window errors: y max {errs['err_y_max']:.6g} mean {errs['err_y_mean']:.6g}, "
                f"z max {errs['err_z_max']:.6g} mean {errs['err_z_mean']:.6g}"
            )

    out = args.output or cfg.output_path
    if out:
        Path(out).write_text(surface_csv(solver.surface_), encoding="utf-8", newline="")
        if not args.quiet:
            print(f"wrote {out}")
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = load_config(args.config)
    problem = get_problem(cfg.problem, cfg.horizon)
    report = run_study(problem, cfg.n_values, cfg.solver_params)
    if not args.quiet:
        print(f"problem {problem.name!r}, offsets {cfg.stencil}")
        print(study_text(report), end="")
    out = args.output or cfg.output_path
    if out:
        Path(out).write_text(study_csv(report), encoding="utf-8", newline="")
        if not args.quiet:
            print(f"wrote {out}")
    else:
        if args.quiet:
            sys.stdout.write(study_csv(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsde-multistep",
        description="Multistep schemes on integer-offset stencils for scalar BSDEs",
    )
    parser.add_argument("--verbose", action="store_true", help="per-level progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", help="stability/convergence diagnostics for one stencil")
    p.add_argument("--params", help="comma-separated offsets, e.g. 1,2,3")
    p.add_argument("--family", choices=sorted(FAMILIES), help="stencil family")
    p.add_argument("--k", type=int, help="number of points for --family")
    p.add_argument("--output", help="write the diagnostics row as CSV")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("table", help="family comparison table")
    p.add_argument("--family", action="append", choices=sorted(FAMILIES),
                   help="repeatable; default: all families")
    p.add_argument("--k", type=int, default=2, help="smallest k (default 2)")
    p.add_argument("--kmax", type=int, default=7, help="largest k (default 7)")
    p.add_argument("--output", help="CSV output path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("solve", help="single backward solve from a config file")
    p.add_argument("--config", required=True, help="TOML config path")
    p.add_argument("--output", help="surface dump CSV path (overrides output.path)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("study", help="convergence study from a config file with an N list")
    p.add_argument("--config", required=True, help="TOML config path")
    p.add_argument("--output", help="study CSV path (overrides output.path)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_study)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PicardConvergenceError, OutOfDomainError, RootFindingError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())
