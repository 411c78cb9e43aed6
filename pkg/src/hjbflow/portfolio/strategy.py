from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from hjbflow.alpha.piecewise import PiecewiseAlpha
from hjbflow.core.errors import NonPositivePhiError
from hjbflow.core.market import FEASIBILITY_TOL, ConstraintSet, FloatArray, MarketModel
from hjbflow.core.qp import solve_qp
from hjbflow.pde.problem import PhiField

_log = logging.getLogger("hjbflow.portfolio.strategy")

ActiveSet = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class StrategySurface:
    """Optimal weights theta(x, t); rows follow the stored time layers."""

    x: FloatArray
    times: FloatArray
    weights: FloatArray
    active_sets: tuple[tuple[ActiveSet, ...], ...]

    @property
    def y(self) -> FloatArray:
        return np.asarray(np.exp(self.x))

    @property
    def n_assets(self) -> int:
        return int(self.weights.shape[2])

    def max_x_increment(self) -> float:
        """Largest |theta(x_{i+1}, t) - theta(x_i, t)| over the surface."""
        if self.weights.shape[1] < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.weights, axis=1))))

    def frame(self) -> pd.DataFrame:
        """Long table t, x, y, theta_1..theta_n, active_set (1-based, `;`-joined)."""
        n_t, n_x, n = self.weights.shape
        data: dict[str, FloatArray | list[str]] = {
            "t": np.repeat(self.times, n_x),
            "x": np.tile(self.x, n_t),
            "y": np.tile(self.y, n_t),
        }
        flat = self.weights.reshape(n_t * n_x, n)
        for i in range(n):
            data[f"theta_{i + 1}"] = flat[:, i]
        data["active_set"] = [
            ";".join(str(i + 1) for i in active) for row in self.active_sets for active in row
        ]
        return pd.DataFrame(data)


def _piece_tables(alpha: PiecewiseAlpha) -> tuple[FloatArray, FloatArray, FloatArray]:
    his = np.array([p.hi for p in alpha.pieces])
    a_vecs = np.stack([p.a_vec for p in alpha.pieces])
    b_vecs = np.stack([p.b_vec for p in alpha.pieces])
    return his, a_vecs, b_vecs


def extract_strategy(
    phi: PhiField,
    model: MarketModel,
    constraints: ConstraintSet = ConstraintSet.SIMPLEX,
    alpha: Optional[PiecewiseAlpha] = None,
    horizon: Optional[float] = None,
    layers: Optional[Sequence[int]] = None,
) -> StrategySurface:
    """theta(x, t) = theta_hat(phi(x, t)) on the grid of `phi`.

    Values inside a piece of `alpha` use the piece's affine form; the rest go
    through the QP. `layers` selects stored time rows (all by default).
    """
    rows = list(range(phi.values.shape[0])) if layers is None else list(layers)
    values = phi.values[rows]
    if np.any(values <= 0.0):
        raise NonPositivePhiError(f"phi must be positive, min is {float(np.min(values))}")
    horizon = float(phi.taus[-1]) if horizon is None else horizon
    times = horizon - phi.taus[rows]
    n_t, n_x = values.shape
    flat = values.reshape(-1)
    weights = np.empty((flat.shape[0], model.n))
    active: list[ActiveSet] = [()] * flat.shape[0]
    solved = np.zeros(flat.shape[0], dtype=bool)
    if alpha is not None:
        his, a_vecs, b_vecs = _piece_tables(alpha)
        inside = (flat > alpha.phi_min) & (flat <= alpha.phi_max)
        idx = np.minimum(np.searchsorted(his, flat, side="left"), len(alpha.pieces) - 1)
        fast = a_vecs[idx] - b_vecs[idx] / flat[:, None]
        ok = inside & np.all(fast >= -FEASIBILITY_TOL, axis=1)
        weights[ok] = np.clip(fast[ok], 0.0, None)
        for p in np.flatnonzero(ok):
            active[p] = alpha.pieces[int(idx[p])].active_set
        solved |= ok
    pending = np.flatnonzero(~solved)
    for p in pending:
        sol = solve_qp(model, float(flat[p]), constraints)
        weights[p] = sol.theta
        active[p] = sol.active_set
    if _log.isEnabledFor(logging.INFO):
        _log.info(
            "strategy extracted: points=%d, via pieces=%d, via qp=%d",
            flat.shape[0],
            flat.shape[0] - pending.shape[0],
            pending.shape[0],
        )
    return StrategySurface(
        x=phi.x,
        times=np.asarray(times),
        weights=weights.reshape(n_t, n_x, model.n),
        active_sets=tuple(tuple(active[j * n_x : (j + 1) * n_x]) for j in range(n_t)),
    )
