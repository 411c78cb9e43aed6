"""Ghost-cell boundary conditions.

Each condition is reduced to phi_ghost = L * phi_boundary(tau) + M * phi_adjacent,
with (L, M) = (1, 0) for Dirichlet and (0, 1 / (1 + d h)) for Robin d phi = phi_x.
Neumann is Robin with d = 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from hjbflow.core.errors import InvalidBoundaryConditionError
from hjbflow.io.tables import PathLike, read_series_csv

_log = logging.getLogger("hjbflow.pde.boundary")

ValueFn = Callable[[float], float]


class BoundaryKind(str, Enum):
    DIRICHLET = "dirichlet"
    ROBIN = "robin"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class BoundaryCondition:
    kind: BoundaryKind
    d: float = 0.0
    value_fn: Optional[ValueFn] = None

    def __post_init__(self) -> None:
        if self.kind is BoundaryKind.DIRICHLET and self.value_fn is None:
            raise InvalidBoundaryConditionError("dirichlet condition needs a value function")
        if self.kind is not BoundaryKind.DIRICHLET and self.value_fn is not None:
            raise InvalidBoundaryConditionError(f"{self.kind.value} condition takes no values")
        if self.kind is BoundaryKind.NEUMANN and self.d != 0.0:
            raise InvalidBoundaryConditionError("neumann condition has d = 0")
        if not np.isfinite(self.d):
            raise InvalidBoundaryConditionError(f"d must be finite, got {self.d}")

    @classmethod
    def dirichlet(cls, value_fn: ValueFn) -> "BoundaryCondition":
        return cls(BoundaryKind.DIRICHLET, value_fn=value_fn)

    @classmethod
    def robin(cls, d: float) -> "BoundaryCondition":
        return cls(BoundaryKind.ROBIN, d=float(d))

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls(BoundaryKind.NEUMANN)

    def coefficients(self, h: float) -> tuple[float, float]:
        """(L, M) of the discrete relation for spatial step h."""
        if self.kind is BoundaryKind.DIRICHLET:
            return 1.0, 0.0
        denom = 1.0 + self.d * h
        if not denom > 0.0:
            raise InvalidBoundaryConditionError(f"robin d={self.d} too negative for h={h}")
        return 0.0, 1.0 / denom

    def value(self, tau: float) -> float:
        if self.value_fn is None:
            return 0.0
        return float(self.value_fn(tau))

    def ghost(self, tau: float, adjacent: float, h: float) -> float:
        weight, mix = self.coefficients(h)
        return weight * self.value(tau) + mix * adjacent

    def describe(self) -> str:
        if self.kind is BoundaryKind.ROBIN:
            return f"robin:{self.d:g}"
        return self.kind.value


def dirichlet_from_csv(path: PathLike) -> BoundaryCondition:
    """Dirichlet data from a `tau,value` table, linearly interpolated in tau."""
    taus, values = read_series_csv(path, ("tau", "value"))
    if np.any(values <= 0.0):
        raise InvalidBoundaryConditionError(f"{path}: boundary values must be positive")

    def value_fn(tau: float) -> float:
        if (tau < taus[0] or tau > taus[-1]) and _log.isEnabledFor(logging.WARNING):
            _log.warning(
                "dirichlet data held constant outside [%g, %g]: tau=%g", taus[0], taus[-1], tau
            )
        return float(np.interp(tau, taus, values))

    return BoundaryCondition.dirichlet(value_fn)


def parse_boundary(text: str) -> BoundaryCondition:
    """Parse `dirichlet:<file>`, `robin:<d>` or `neumann`."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    if kind == BoundaryKind.NEUMANN.value:
        if arg:
            raise InvalidBoundaryConditionError("neumann takes no argument")
        return BoundaryCondition.neumann()
    if kind == BoundaryKind.ROBIN.value:
        try:
            d = float(arg)
        except ValueError as exc:
            raise InvalidBoundaryConditionError(f"robin needs a numeric d, got {arg!r}") from exc
        return BoundaryCondition.robin(d)
    if kind == BoundaryKind.DIRICHLET.value:
        if not arg:
            raise InvalidBoundaryConditionError("dirichlet needs a file: dirichlet:<path>")
        return dirichlet_from_csv(arg)
    raise InvalidBoundaryConditionError(f"unknown boundary condition {text!r}")
