from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from hjbflow.core.market import ConstraintSet
from hjbflow.pde.boundary import parse_boundary
from hjbflow.pde.solver import DEFAULT_MAX_ITERS, DEFAULT_TOL, Scheme
from hjbflow.verification.eoc import parse_k_rule
from hjbflow.wave.benchmark import DEFAULT_REL_TOL

DEFAULT_PHI_MIN = 1e-3


def _check_k_rule(value: Optional[str]) -> Optional[str]:
    if value is not None:
        parse_k_rule(value)
    return value


class AlphaSettings(BaseModel):
    model: str
    phi_min: float = Field(default=DEFAULT_PHI_MIN, alias="phi-min", gt=0.0)
    phi_max: float = Field(default=10.0, alias="phi-max", gt=0.0)
    samples: int = Field(default=1001, ge=2)
    constraints: ConstraintSet = ConstraintSet.SIMPLEX

    model_config = {
        "populate_by_name": True,
        "extra": "forbid",
    }

    @model_validator(mode="after")
    def _check_range(self) -> "AlphaSettings":
        if not self.phi_min < self.phi_max:
            raise ValueError(f"phi-min must be below phi-max ({self.phi_min} >= {self.phi_max})")
        return self


class PdeSettings(BaseModel):
    model: str
    epsilon: float = Field(default=0.0, ge=0.0)
    r: float = Field(default=0.0, ge=0.0)
    x_lo: float = Field(alias="x-lo")
    x_hi: float = Field(alias="x-hi")
    n: Optional[int] = Field(default=None, ge=2)
    h: Optional[float] = Field(default=None, gt=0.0)
    horizon: float = Field(default=10.0, alias="T", gt=0.0)
    m: Optional[int] = Field(default=None, ge=0)
    k_rule: Optional[str] = Field(default=None, alias="k-rule")
    scheme: Scheme = Scheme.FULLY_IMPLICIT
    tol: float = Field(default=DEFAULT_TOL, gt=0.0)
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, alias="max-iters", ge=1)
    bc_left: str = Field(default="neumann", alias="bc-left")
    bc_right: str = Field(default="neumann", alias="bc-right")
    terminal: str = "cara:9"
    constraints: ConstraintSet = ConstraintSet.SIMPLEX
    phi_min: float = Field(default=DEFAULT_PHI_MIN, alias="phi-min", gt=0.0)

    model_config = {
        "populate_by_name": True,
        "extra": "forbid",
    }

    @field_validator("k_rule")
    @classmethod
    def _k_rule_parses(cls, value: Optional[str]) -> Optional[str]:
        return _check_k_rule(value)

    @model_validator(mode="after")
    def _check_grid(self) -> "PdeSettings":
        if not self.x_lo < self.x_hi:
            raise ValueError(f"x-lo must be below x-hi ({self.x_lo} >= {self.x_hi})")
        if (self.n is None) == (self.h is None):
            raise ValueError("give exactly one of n or h")
        if self.m is not None and self.k_rule is not None:
            raise ValueError("give at most one of m or k-rule")
        # boundary strings are checked here; dirichlet files are read again at solve time
        for text in (self.bc_left, self.bc_right):
            if not text.startswith("dirichlet"):
                parse_boundary(text)
        return self


class WaveSettings(BaseModel):
    model: Optional[str] = None
    alpha_csv: Optional[str] = Field(default=None, alias="alpha-csv")
    v_minus: float = Field(alias="v-minus", gt=0.0)
    v_plus: float = Field(alias="v-plus", gt=0.0)
    x_lo: float = Field(default=-4.0, alias="x-lo")
    x_hi: float = Field(default=4.0, alias="x-hi")
    horizon: float = Field(default=10.0, alias="T", gt=0.0)
    rel_tol: float = Field(default=DEFAULT_REL_TOL, alias="rel-tol", gt=0.0)
    phi_min: float = Field(default=DEFAULT_PHI_MIN, alias="phi-min", gt=0.0)
    phi_max: Optional[float] = Field(default=None, alias="phi-max", gt=0.0)
    constraints: ConstraintSet = ConstraintSet.SIMPLEX

    model_config = {
        "populate_by_name": True,
        "extra": "forbid",
    }

    @model_validator(mode="after")
    def _check_limits(self) -> "WaveSettings":
        if (self.model is None) == (self.alpha_csv is None):
            raise ValueError("give exactly one of model or alpha-csv")
        if not self.v_minus < self.v_plus:
            raise ValueError(f"v-minus must be below v-plus ({self.v_minus} >= {self.v_plus})")
        if not self.x_lo < self.x_hi:
            raise ValueError(f"x-lo must be below x-hi ({self.x_lo} >= {self.x_hi})")
        if self.phi_max is not None and self.phi_max < self.v_plus:
            raise ValueError("phi-max must cover v-plus")
        return self

    def alpha_domain(self) -> tuple[float, float]:
        return self.phi_min, self.phi_max if self.phi_max is not None else 2.0 * self.v_plus


class EocSettings(WaveSettings):
    levels: list[float] = Field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    k_rule: str = Field(default="0.1*h", alias="k-rule")
    scheme: Scheme = Scheme.FULLY_IMPLICIT
    tol: float = Field(default=DEFAULT_TOL, gt=0.0)
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, alias="max-iters", ge=1)

    @field_validator("k_rule")
    @classmethod
    def _k_rule_parses(cls, value: Optional[str]) -> Optional[str]:
        return _check_k_rule(value)

    @model_validator(mode="after")
    def _check_levels(self) -> "EocSettings":
        if len(self.levels) < 2:
            raise ValueError("levels needs at least two entries")
        if any(h <= 0.0 for h in self.levels):
            raise ValueError("levels must be positive")
        if any(b >= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly decreasing")
        return self


class PortfolioSettings(BaseModel):
    model: Optional[str] = None
    prices: Optional[str] = None
    periods_per_year: float = Field(default=252.0, alias="periods-per-year", gt=0.0)
    a: float = 9.0
    epsilon: float = Field(default=1.0, ge=0.0)
    r: float = Field(default=0.0, ge=0.0)
    horizon: float = Field(default=10.0, alias="T", gt=0.0)
    y_lo: float = Field(default=0.01, alias="y-lo", gt=0.0)
    y_hi: float = Field(default=10.0, alias="y-hi", gt=0.0)
    h: float = Field(default=0.1, gt=0.0)
    k_rule: str = Field(default="0.1*h^2", alias="k-rule")
    scheme: Scheme = Scheme.FULLY_IMPLICIT
    tol: float = Field(default=DEFAULT_TOL, gt=0.0)
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, alias="max-iters", ge=1)
    bc_left: str = Field(default="robin:1", alias="bc-left")
    bc_right: str = Field(default="neumann", alias="bc-right")
    constraints: ConstraintSet = ConstraintSet.SIMPLEX
    phi_min: float = Field(default=DEFAULT_PHI_MIN, alias="phi-min", gt=0.0)
    output_every: int = Field(default=1, alias="output-every", ge=1)

    model_config = {
        "populate_by_name": True,
        "extra": "forbid",
    }

    @field_validator("k_rule")
    @classmethod
    def _k_rule_parses(cls, value: Optional[str]) -> Optional[str]:
        return _check_k_rule(value)

    @model_validator(mode="after")
    def _check_inputs(self) -> "PortfolioSettings":
        if (self.model is None) == (self.prices is None):
            raise ValueError("give exactly one of model or prices")
        if not self.a > 1.0:
            raise ValueError(f"risk aversion a must exceed 1, got {self.a}")
        if not self.y_lo < self.y_hi:
            raise ValueError(f"y-lo must be below y-hi ({self.y_lo} >= {self.y_hi})")
        for text in (self.bc_left, self.bc_right):
            if not text.startswith("dirichlet"):
                parse_boundary(text)
        return self
