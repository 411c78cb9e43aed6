from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from hjbflow.core.errors import SingularModelError

FloatArray = npt.NDArray[np.float64]

SYMMETRY_TOL = 1e-12
FEASIBILITY_TOL = 1e-12
KKT_TOL = 1e-9
# Membership tolerance for "theta_i = 0".
ACTIVE_TOL = 1e-10
# Pivots at or below n * eps * max(diag(sigma)) count as zero.
_EPS = float(np.finfo(np.float64).eps)


class ConstraintSet(str, Enum):
    """Admissible portfolio weights.

    SIMPLEX is {theta >= 0, sum(theta) = 1}; MERTON_SIMPLEX relaxes the budget to
    sum(theta) <= 1, the larger set used for Merton-type consumption models.
    """

    SIMPLEX = "simplex"
    MERTON_SIMPLEX = "merton"


@dataclass(frozen=True, eq=False)
class MarketModel:
    mu: FloatArray
    sigma: FloatArray
    tickers: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=np.float64).reshape(-1)
        sigma = np.array(self.sigma, dtype=np.float64)
        n = mu.shape[0]
        if n < 1:
            raise SingularModelError("model needs at least one asset")
        if sigma.shape != (n, n):
            raise SingularModelError(f"sigma must be {n}x{n}, got {sigma.shape}")
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(sigma)):
            raise SingularModelError("model contains non-finite entries")
        if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL:
            raise SingularModelError("sigma is not symmetric")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise SingularModelError("sigma is not positive definite") from exc
        pivots = np.diag(chol)
        scale = float(np.max(np.abs(np.diag(sigma))))
        if np.any(pivots <= 0.0) or float(np.min(pivots)) ** 2 <= n * _EPS * scale:
            raise SingularModelError("sigma is not positive definite")
        if self.tickers is not None and len(self.tickers) != n:
            raise SingularModelError("tickers do not match asset count")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return int(self.mu.shape[0])

    def labels(self) -> tuple[str, ...]:
        if self.tickers is not None:
            return self.tickers
        return tuple(f"asset_{i + 1}" for i in range(self.n))

    def objective(self, theta: FloatArray, phi: float) -> float:
        return float(-self.mu @ theta + 0.5 * phi * theta @ self.sigma @ theta)

    def reduced(self, free: Sequence[int]) -> tuple[FloatArray, FloatArray]:
        idx = np.asarray(free, dtype=np.intp)
        return self.mu[idx], self.sigma[np.ix_(idx, idx)]


def factor_block(sigma_block: FloatArray) -> tuple[FloatArray, bool]:
    """Cholesky factor of a principal submatrix, in scipy's cho_factor form."""
    try:
        c, lower = scipy.linalg.cho_factor(sigma_block, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularModelError("principal submatrix is not positive definite") from exc
    if np.any(np.diag(c) <= 0.0):
        raise SingularModelError("principal submatrix is not positive definite")
    return c, lower


@dataclass(frozen=True, eq=False)
class QpSolution:
    theta: FloatArray
    value: float
    derivative: float
    active_set: tuple[int, ...]
    multiplier: float
    budget_binding: bool = True

    def held(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.theta.shape[0]) if i not in self.active_set)

    def kkt_residual(self, model: MarketModel, phi: float) -> float:
        """Largest violation of the stationarity / dual-sign conditions."""
        grad = phi * (model.sigma @ self.theta) - model.mu - self.multiplier
        worst = 0.0
        for i in range(self.theta.shape[0]):
            if i in self.active_set:
                worst = max(worst, -float(grad[i]))
            else:
                worst = max(worst, abs(float(grad[i])))
        return worst
