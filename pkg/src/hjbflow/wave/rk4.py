"""Adaptive classical Runge-Kutta for scalar autonomous ODEs.

The local error is estimated by step doubling: one step of size h against two
of size h/2, and the accepted value carries the Richardson correction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from hjbflow.core.errors import StiffnessFailureError
from hjbflow.core.market import FloatArray

_log = logging.getLogger("hjbflow.wave.rk4")

MIN_STEP = 1e-14
_SAFETY = 0.9
_MAX_GROWTH = 2.0
_MIN_SHRINK = 0.2

Rhs = Callable[[float], float]


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: FloatArray
    y: FloatArray
    dy: FloatArray
    stopped: bool
    rejected: int


def rk4_step(rhs: Rhs, y: float, h: float) -> float:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def integrate_adaptive(
    rhs: Rhs,
    y0: float,
    t_end: float,
    rel_tol: float,
    scale: float,
    max_step: float,
    stop: Optional[Callable[[float], bool]] = None,
) -> Trajectory:
    """Integrate y' = rhs(y) from t = 0 to t_end (either sign).

    The error allowance per step is rel_tol * max(|y|, scale). Integration ends
    early once `stop(y)` holds.
    """
    if not rel_tol > 0.0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    direction = 1.0 if t_end >= 0.0 else -1.0
    span = abs(t_end)
    ts = [0.0]
    ys = [y0]
    t, y = 0.0, y0
    h = min(max_step, span) if span > 0.0 else 0.0
    rejected = 0
    stopped = False
    while True:
        remaining = span - abs(t)
        if remaining <= 1e-12 * max(1.0, span):
            break
        if stop is not None and stop(y):
            stopped = True
            break
        h = min(h, remaining, max_step)
        step = direction * h
        full = rk4_step(rhs, y, step)
        half = rk4_step(rhs, rk4_step(rhs, y, 0.5 * step), 0.5 * step)
        err = abs(half - full) / 15.0
        allowed = rel_tol * max(abs(y), scale)
        if err <= allowed:
            t += step
            y = half + (half - full) / 15.0
            ts.append(t)
            ys.append(y)
            growth = _MAX_GROWTH if err == 0.0 else _SAFETY * (allowed / err) ** 0.2
            h *= min(_MAX_GROWTH, max(1.0, growth))
        else:
            rejected += 1
            h *= max(_MIN_SHRINK, _SAFETY * (allowed / err) ** 0.2)
            if h < MIN_STEP:
                raise StiffnessFailureError(f"step size underflow at t={t:.6g}, y={y:.17g}")
        if not math.isfinite(y):
            raise StiffnessFailureError(f"non-finite solution at t={t:.6g}")
    if _log.isEnabledFor(logging.DEBUG):
        _log.debug(
            "rk4: t_end=%.6g, accepted=%d, rejected=%d, stopped=%s",
            t_end,
            len(ts) - 1,
            rejected,
            stopped,
        )
    t_arr = np.array(ts)
    y_arr = np.array(ys)
    return Trajectory(
        t=t_arr,
        y=y_arr,
        dy=np.array([rhs(v) for v in ys]),
        stopped=stopped,
        rejected=rejected,
    )
