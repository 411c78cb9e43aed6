from __future__ import annotations

import math
from typing import Callable

import numpy as np

from hjbflow.core.errors import ShapeMismatchError
from hjbflow.core.market import FloatArray
from hjbflow.pde.problem import PhiField

ExactFn = Callable[[FloatArray, float], FloatArray]


def layer_norms(errors: FloatArray, h: float) -> tuple[FloatArray, FloatArray]:
    """Per-layer L2 and W^1_2 norms of interior errors (layers x cells)."""
    errors = np.atleast_2d(np.asarray(errors, dtype=np.float64))
    l2_sq = h * np.sum(errors * errors, axis=1)
    slope = np.diff(errors, axis=1) / h
    w12 = np.sqrt(l2_sq + h * np.sum(slope * slope, axis=1))
    return np.sqrt(l2_sq), w12


def error_norms(errors: FloatArray, h: float, k: float) -> tuple[float, float]:
    """(max_j |e^j|_L2, sqrt(k sum_{j>=1} |e^j|_W12^2)) with row 0 the terminal layer."""
    l2, w12 = layer_norms(errors, h)
    linf_l2 = float(np.max(l2)) if l2.size else 0.0
    l2_w12 = math.sqrt(k * float(np.sum(w12[1:] ** 2)))
    return linf_l2, l2_w12


def discrete_norms(numeric: PhiField, exact: ExactFn) -> tuple[float, float]:
    """Error norms of `numeric` against exact(x, tau) on the interior cells."""
    x = numeric.x[1:-1]
    interior = numeric.interior()
    errors = np.empty_like(interior)
    for j, tau in enumerate(numeric.taus):
        ref = np.asarray(exact(x, float(tau)), dtype=np.float64)
        if ref.shape != x.shape:
            raise ShapeMismatchError(
                f"exact solution returned shape {ref.shape} for {x.shape[0]} cells"
            )
        errors[j] = interior[j] - ref
    return error_norms(errors, numeric.h, numeric.k)
