"""Closed form of the value function for one stock and one bond."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hjbflow.core.errors import InvalidParamsError
from hjbflow.core.market import MarketModel


@dataclass(frozen=True)
class TwoAssetParams:
    mu_s: float
    mu_b: float
    sigma_s: float
    sigma_b: float
    rho: float

    def __post_init__(self) -> None:
        if not (self.sigma_s > 0.0 and self.sigma_b > 0.0):
            raise InvalidParamsError("sigma_s and sigma_b must be positive")
        if not self.mu_s >= self.mu_b >= 0.0:
            raise InvalidParamsError("need mu_s >= mu_b >= 0")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidParamsError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.sigma_b - self.rho * self.sigma_s < 0.0:
            raise InvalidParamsError("need sigma_b - rho * sigma_s >= 0")
        if not self.gamma > 0.0:
            raise InvalidParamsError("stock and bond are perfectly correlated with equal volatility")

    @property
    def gamma(self) -> float:
        return self.sigma_s**2 + self.sigma_b**2 - 2.0 * self.sigma_s * self.sigma_b * self.rho

    @property
    def delta(self) -> float:
        return self.sigma_b**2 - self.sigma_s * self.sigma_b * self.rho

    @property
    def omega(self) -> float:
        return (self.mu_s - self.mu_b) / self.gamma

    def breakpoint(self) -> Optional[float]:
        """phi above which both assets are held; None when the stock is held alone for all phi."""
        gamma, delta = self.gamma, self.delta
        if gamma <= delta or self.omega == 0.0:
            return None
        return self.omega * gamma / (gamma - delta)

    def to_model(self) -> MarketModel:
        cov = self.rho * self.sigma_s * self.sigma_b
        sigma = np.array([[self.sigma_s**2, cov], [cov, self.sigma_b**2]])
        return MarketModel(np.array([self.mu_s, self.mu_b]), sigma, ("stock", "bond"))


def alpha_two_asset(params: TwoAssetParams, phi: float) -> tuple[float, float]:
    """(alpha(phi), stock weight) for the stock/bond pair."""
    if not phi > 0.0 or not math.isfinite(phi):
        raise InvalidParamsError(f"phi must be positive, got {phi}")
    gamma, delta, omega = params.gamma, params.delta, params.omega
    theta = omega / phi + delta / gamma
    if theta < 1.0:
        spread = (1.0 - params.rho**2) * (params.sigma_s * params.sigma_b) ** 2 / gamma
        alpha = (
            -params.mu_b
            - omega * delta
            - omega * omega * gamma / (2.0 * phi)
            + 0.5 * phi * spread
        )
        return alpha, theta
    return 0.5 * params.sigma_s**2 * phi - params.mu_s, 1.0
