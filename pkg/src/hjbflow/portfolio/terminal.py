"""Terminal data phi(x, T) = 1 - U''(x) / U'(x)."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from hjbflow.core.errors import InvalidProblemError, InvalidRiskAversionError
from hjbflow.core.market import FloatArray
from hjbflow.io.tables import PathLike, read_series_csv

Terminal = Callable[[FloatArray], FloatArray]


def cara_utility(a: float, x: float) -> tuple[float, float, float]:
    """U(x) = -exp(-(a - 1) x) / (a - 1) with U' and U''.

    In terms of wealth y = e^x this is the CRRA utility with relative risk
    aversion a.
    """
    if not a > 1.0:
        raise InvalidRiskAversionError(f"risk aversion must exceed 1, got {a}")
    g = a - 1.0
    slope = math.exp(-g * x)
    return -slope / g, slope, -g * slope


def cara_terminal(a: float) -> Terminal:
    if not a > 1.0:
        raise InvalidRiskAversionError(f"risk aversion must exceed 1, got {a}")

    def terminal(x: FloatArray) -> FloatArray:
        return np.full(np.shape(x), float(a))

    return terminal


def terminal_from_csv(path: PathLike) -> Terminal:
    """Tabulated `x,phi` data, linearly interpolated and held constant outside."""
    xs, values = read_series_csv(path, ("x", "phi"))
    if np.any(values <= 0.0):
        raise InvalidProblemError(f"{path}: terminal values must be positive")

    def terminal(x: FloatArray) -> FloatArray:
        return np.asarray(np.interp(x, xs, values), dtype=np.float64)

    return terminal


def parse_terminal(text: str) -> tuple[Terminal, float]:
    """`cara:<a>` or `csv:<file>`; returns the function and its supremum."""
    kind, _, arg = text.strip().partition(":")
    if kind == "cara":
        try:
            a = float(arg)
        except ValueError as exc:
            raise InvalidRiskAversionError(f"cara needs a number, got {arg!r}") from exc
        return cara_terminal(a), a
    if kind == "csv":
        if not arg:
            raise InvalidProblemError("csv terminal needs a file: csv:<path>")
        _, values = read_series_csv(arg, ("x", "phi"))
        return terminal_from_csv(arg), float(np.max(values))
    raise InvalidProblemError(f"unknown terminal condition {text!r}")
