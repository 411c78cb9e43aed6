from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from hjbflow.core.errors import (
    InsufficientDataError,
    NonPositivePriceError,
    SingularModelError,
)
from hjbflow.core.market import FloatArray, MarketModel
from hjbflow.io.tables import PathLike, read_price_frame

_log = logging.getLogger("hjbflow.portfolio.history")

MIN_OBSERVATIONS = 3
# Per-period return spread below this (relative to max(1, |r|)) is rounding noise.
FLAT_RETURN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PriceHistory:
    tickers: tuple[str, ...]
    dates: tuple[pd.Timestamp, ...]
    prices: FloatArray

    def __post_init__(self) -> None:
        prices = np.array(self.prices, dtype=np.float64)
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise ValueError(
                f"prices shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(prices)):
            raise ValueError("price table has missing or non-finite cells")
        if np.any(prices <= 0.0):
            row, col = np.argwhere(prices <= 0.0)[0]
            raise NonPositivePriceError(
                f"{self.tickers[col]} on {self.dates[row].date()}: price {prices[row, col]}"
            )
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "PriceHistory":
        """Date-indexed frame, one column per ticker; rows with gaps are dropped."""
        complete = frame.dropna(how="any")
        dropped = len(frame) - len(complete)
        if dropped and _log.isEnabledFor(logging.WARNING):
            _log.warning("dropped %d price row(s) with missing cells", dropped)
        return cls(
            tickers=tuple(str(c) for c in complete.columns),
            dates=tuple(pd.Timestamp(d) for d in complete.index),
            prices=complete.to_numpy(dtype=np.float64),
        )

    @classmethod
    def from_csv(cls, path: PathLike) -> "PriceHistory":
        return cls.from_frame(read_price_frame(path))

    def log_returns(self) -> FloatArray:
        return np.asarray(np.diff(np.log(self.prices), axis=0))


def estimate_moments(history: PriceHistory, periods_per_year: float = 252.0) -> MarketModel:
    """Annualized sample mean and covariance (divisor count - 1) of log-returns."""
    if len(history.dates) < MIN_OBSERVATIONS:
        raise InsufficientDataError(
            f"need at least {MIN_OBSERVATIONS} observations, got {len(history.dates)}"
        )
    if not periods_per_year > 0.0:
        raise ValueError(f"periods_per_year must be positive, got {periods_per_year}")
    returns = history.log_returns()
    spread = returns.std(axis=0, ddof=1)
    size = np.maximum(1.0, np.max(np.abs(returns), axis=0))
    flat = [t for t, s, m in zip(history.tickers, spread, size) if s <= FLAT_RETURN_TOL * m]
    if flat:
        raise SingularModelError(f"returns have no spread for {', '.join(flat)}")
    mu = returns.mean(axis=0) * periods_per_year
    cov = np.atleast_2d(np.cov(returns, rowvar=False, ddof=1)) * periods_per_year
    cov = 0.5 * (cov + cov.T)
    if _log.isEnabledFor(logging.INFO):
        _log.info(
            "moments estimated: assets=%d, returns=%d, periods_per_year=%g",
            len(history.tickers),
            returns.shape[0],
            periods_per_year,
        )
    return MarketModel(mu, cov, history.tickers)
