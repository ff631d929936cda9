"""Small input-validation helpers shared across the package."""

from __future__ import annotations

from numbers import Integral, Real
from typing import Any, Sequence


def as_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ValueError(f"{name}: expected an integer, got {value!r}")
    return int(value)


def as_positive_int(value: Any, name: str) -> int:
    out = as_int(value, name)
    if out <= 0:
        raise ValueError(f"{name}: must be positive, got {out}")
    return out


def as_real(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ValueError(f"{name}: expected a real number, got {value!r}")
    return float(value)


def as_positive_real(value: Any, name: str) -> float:
    out = as_real(value, name)
    if not out > 0.0:
        raise ValueError(f"{name}: must be positive, got {out}")
    return out


def as_int_tuple(values: Sequence[Any], name: str) -> tuple[int, ...]:
    try:
        items = list(values)
    except TypeError:
        raise ValueError(f"{name}: expected a sequence of integers, got {values!r}")
    return tuple(as_int(v, name) for v in items)
