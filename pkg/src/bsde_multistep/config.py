"""TOML run configuration for the solve and study commands.

The schema is closed: unknown fields are rejected with their full dotted
path so typos cannot silently fall back to defaults.  ``N`` accepts a
scalar (solve) or a list (study); the stencil comes either as explicit
``stencil.params`` or as ``stencil.family`` plus ``stencil.k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Integral, Real
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .diagnostics import FAMILIES, family_offsets


class ConfigError(ValueError):
    """Invalid run configuration; message carries the offending field path."""


@dataclass(frozen=True)
class RunConfig:
    problem: str
    horizon: float
    n_values: tuple[int, ...]
    n_is_list: bool
    stencil: tuple[int, ...]
    solver_params: dict = field(default_factory=dict)
    output_path: str | None = None


def _expect_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(value)


def _expect_real(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _expect_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _reject_unknown(section: dict, path: str, known: set[str]) -> None:
    for key in section:
        if key not in known:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: unknown field")


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc
    return _normalize(raw)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def _normalize(raw: dict) -> RunConfig:
    _reject_unknown(
        raw,
        "",
        {"problem", "T", "N", "stencil", "quadrature", "grid", "interp_degree", "picard", "init", "output"},
    )
    if "problem" not in raw:
        raise ConfigError("problem: required field is missing")
    problem = _expect_str(raw["problem"], "problem")
    horizon = _expect_real(raw.get("T", 1.0), "T")
    if horizon <= 0:
        raise ConfigError(f"T: must be positive, got {horizon}")

    if "N" not in raw:
        raise ConfigError("N: required field is missing")
    n_raw = raw["N"]
    if isinstance(n_raw, list):
        if not n_raw:
            raise ConfigError("N: list must not be empty")
        n_values = tuple(_expect_int(v, "N") for v in n_raw)
        n_is_list = True
    else:
        n_values = (_expect_int(n_raw, "N"),)
        n_is_list = False
    for n in n_values:
        if n <= 0:
            raise ConfigError(f"N: must be positive, got {n}")

    stencil_sec = raw.get("stencil")
    if not isinstance(stencil_sec, dict):
        raise ConfigError("stencil: section is required")
    _reject_unknown(stencil_sec, "stencil", {"params", "family", "k"})
    if "params" in stencil_sec:
        if "family" in stencil_sec or "k" in stencil_sec:
            raise ConfigError("stencil.params: mutually exclusive with stencil.family/k")
        params_raw = stencil_sec["params"]
        if not isinstance(params_raw, list) or not params_raw:
            raise ConfigError("stencil.params: expected a non-empty list of integers")
        stencil = tuple(_expect_int(v, "stencil.params") for v in params_raw)
    elif "family" in stencil_sec:
        family = _expect_str(stencil_sec["family"], "stencil.family")
        if family not in FAMILIES:
            raise ConfigError(
                f"stencil.family: unknown family {family!r}; expected one of {sorted(FAMILIES)}"
            )
        if "k" not in stencil_sec:
            raise ConfigError("stencil.k: required together with stencil.family")
        k = _expect_int(stencil_sec["k"], "stencil.k")
        if k < 1:
            raise ConfigError(f"stencil.k: must be >= 1, got {k}")
        stencil = family_offsets(family, k)
    else:
        raise ConfigError("stencil: either stencil.params or stencil.family + stencil.k is required")

    solver_params: dict[str, Any] = {"stencil": stencil}

    quad = raw.get("quadrature", {})
    if not isinstance(quad, dict):
        raise ConfigError("quadrature: expected a section")
    _reject_unknown(quad, "quadrature", {"Q"})
    if "Q" in quad:
        solver_params["quad_order"] = _expect_int(quad["Q"], "quadrature.Q")

    grid = raw.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid: expected a section")
    _reject_unknown(grid, "grid", {"eval_half_width", "dx_factor", "margin"})
    if "eval_half_width" in grid:
        solver_params["eval_half_width"] = _expect_real(grid["eval_half_width"], "grid.eval_half_width")
    if "dx_factor" in grid:
        solver_params["dx_factor"] = _expect_real(grid["dx_factor"], "grid.dx_factor")
    if "margin" in grid:
        solver_params["margin"] = _expect_real(grid["margin"], "grid.margin")

    if "interp_degree" in raw:
        solver_params["interp_degree"] = _expect_int(raw["interp_degree"], "interp_degree")

    picard = raw.get("picard", {})
    if not isinstance(picard, dict):
        raise ConfigError("picard: expected a section")
    _reject_unknown(picard, "picard", {"tol", "max_iter"})
    if "tol" in picard:
        tol = _expect_real(picard["tol"], "picard.tol")
        if tol <= 0:
            raise ConfigError(f"picard.tol: must be positive, got {tol}")
        solver_params["picard_tol"] = tol
    if "max_iter" in picard:
        solver_params["picard_max_iter"] = _expect_int(picard["max_iter"], "picard.max_iter")

    init = raw.get("init", {})
    if not isinstance(init, dict):
        raise ConfigError("init: expected a section")
    _reject_unknown(init, "init", {"mode", "substeps"})
    if "mode" in init:
        mode = _expect_str(init["mode"], "init.mode")
        if mode not in ("exact", "bootstrap"):
            raise ConfigError(f"init.mode: expected 'exact' or 'bootstrap', got {mode!r}")
        solver_params["init_mode"] = mode
    if "substeps" in init:
        solver_params["bootstrap_substeps"] = _expect_int(init["substeps"], "init.substeps")

    output = raw.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output: expected a section")
    _reject_unknown(output, "output", {"path"})
    output_path = _expect_str(output["path"], "output.path") if "path" in output else None

    return RunConfig(
        problem=problem,
        horizon=horizon,
        n_values=n_values,
        n_is_list=n_is_list,
        stencil=stencil,
        solver_params=solver_params,
        output_path=output_path,
    )
