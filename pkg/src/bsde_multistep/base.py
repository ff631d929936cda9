"""Minimal estimator plumbing compatible with the scikit-learn parameter API.

Estimators in this package expose ``get_params``/``set_params`` with the
usual semantics (constructor arguments stored verbatim, fitted state kept
in trailing-underscore attributes), so ``sklearn.base.clone`` and friends
work on them without this package depending on scikit-learn.
"""

from __future__ import annotations

import inspect
from typing import Any


class ParamsMixin:
    """get_params/set_params driven by the signature of ``__init__``."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict[str, Any]:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params: Any) -> "ParamsMixin":
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(
                    f"invalid parameter {name!r} for {type(self).__name__}; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_is_fitted(estimator: Any, attribute: str) -> None:
    """Raise if ``estimator`` lacks the fitted attribute ``attribute``."""
    if not hasattr(estimator, attribute):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
