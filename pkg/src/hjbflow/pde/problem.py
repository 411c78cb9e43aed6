from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from hjbflow.alpha.protocol import AlphaEvaluator
from hjbflow.core.errors import InvalidProblemError
from hjbflow.core.market import FloatArray
from hjbflow.pde.boundary import BoundaryCondition, BoundaryKind

TerminalFn = Callable[[FloatArray], Union[FloatArray, float]]

# Stand-in for non-positive face values when alpha is evaluated.
POSITIVITY_FLOOR = 1e-6


def grid_for_step(x_lo: float, x_hi: float, h: float) -> tuple[int, float]:
    """(n_interior, h') with h' the step closest to h that divides [x_lo, x_hi]."""
    if not x_lo < x_hi:
        raise InvalidProblemError(f"need x_lo < x_hi, got [{x_lo}, {x_hi}]")
    if not h > 0.0:
        raise InvalidProblemError(f"h must be positive, got {h}")
    intervals = max(3, int(round((x_hi - x_lo) / h)))
    return intervals - 1, (x_hi - x_lo) / intervals


def steps_for(horizon: float, k: float) -> int:
    if not k > 0.0:
        raise InvalidProblemError(f"k must be positive, got {k}")
    return max(1, int(round(horizon / k)))


@dataclass(frozen=True, eq=False)
class PdeProblem:
    """Backward problem for phi on [x_lo, x_hi] x [0, T], marched in tau = T - t.

    Cell centers are x_i = x_lo + i h for i = 0..n+1; cells 0 and n+1 are ghosts
    sitting on the boundary.
    """

    epsilon: float
    r: float
    x_lo: float
    x_hi: float
    n_interior: int
    m_steps: int
    horizon: float
    terminal: TerminalFn
    left_bc: BoundaryCondition
    right_bc: BoundaryCondition
    alpha: AlphaEvaluator
    _terminal_layer: FloatArray = field(init=False, repr=False)
    _phi_plus: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.epsilon >= 0.0:
            raise InvalidProblemError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.r >= 0.0:
            raise InvalidProblemError(f"r must be >= 0, got {self.r}")
        if not (math.isfinite(self.x_lo) and math.isfinite(self.x_hi) and self.x_lo < self.x_hi):
            raise InvalidProblemError(f"need finite x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]")
        if self.n_interior < 2:
            raise InvalidProblemError(f"n_interior must be >= 2, got {self.n_interior}")
        if self.m_steps < 0:
            raise InvalidProblemError(f"m_steps must be >= 0, got {self.m_steps}")
        if not self.horizon > 0.0:
            raise InvalidProblemError(f"T must be positive, got {self.horizon}")
        x = self.x
        layer = np.array(
            np.broadcast_to(np.asarray(self.terminal(x), dtype=np.float64), x.shape)
        )
        if not np.all(np.isfinite(layer)):
            raise InvalidProblemError("terminal condition is not finite on the grid")
        if np.any(layer <= 0.0):
            bad = float(x[int(np.argmin(layer))])
            raise InvalidProblemError(f"terminal condition must be positive (fails at x={bad})")
        layer.setflags(write=False)
        object.__setattr__(self, "_terminal_layer", layer)
        upper = float(np.max(layer))
        for bc in (self.left_bc, self.right_bc):
            if bc.kind is BoundaryKind.DIRICHLET:
                upper = max(upper, max(bc.value(float(t)) for t in self.taus))
        object.__setattr__(self, "_phi_plus", upper)

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / (self.n_interior + 1)

    @property
    def k(self) -> float:
        return self.horizon / max(self.m_steps, 1)

    @property
    def x(self) -> FloatArray:
        return self.x_lo + self.h * np.arange(self.n_interior + 2, dtype=np.float64)

    @property
    def x_faces(self) -> FloatArray:
        return self.x_lo + self.h * (np.arange(self.n_interior + 1, dtype=np.float64) + 0.5)

    @property
    def taus(self) -> FloatArray:
        return self.k * np.arange(self.m_steps + 1, dtype=np.float64)

    def terminal_layer(self) -> FloatArray:
        return self._terminal_layer

    @property
    def phi_plus(self) -> float:
        """Upper comparison bound: sup of the terminal layer and of any Dirichlet data."""
        return self._phi_plus


@dataclass
class SolveStats:
    scheme: str
    iterations: list[int] = field(default_factory=list)
    clamped_faces: int = 0
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def max_iterations(self) -> int:
        return max(self.iterations, default=0)


@dataclass(frozen=True, eq=False)
class PhiField:
    """All computed layers; row j is tau_j = j k, column i is cell x_i."""

    values: FloatArray
    x: FloatArray
    taus: FloatArray
    stats: SolveStats

    def __post_init__(self) -> None:
        if self.values.shape != (self.taus.shape[0], self.x.shape[0]):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"({self.taus.shape[0]}, {self.x.shape[0]})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("phi field contains non-finite values")
        self.values.setflags(write=False)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def k(self) -> float:
        if self.taus.shape[0] < 2:
            return 0.0
        return float(self.taus[1] - self.taus[0])

    def interior(self) -> FloatArray:
        return self.values[:, 1:-1]

    def times(self, horizon: float) -> FloatArray:
        """Backward times t = T - tau of the stored layers."""
        return horizon - self.taus


@dataclass(frozen=True, eq=False)
class FluxTerms:
    """Face data of A = alpha(phi), B = (eps e^-x + r) phi + alpha(phi) (1 - phi), C = 0.

    Face f sits between cells f and f+1; D, E, F and drift have n+1 entries, C has
    one per interior cell. `drift` is the coefficient of the part of B linear in
    phi, so F - drift * phi_face is the alpha term alone.
    """

    phi_face: FloatArray
    drift: FloatArray
    D: FloatArray
    E: FloatArray
    F: FloatArray
    C: FloatArray
    clamped: int

    @classmethod
    def from_layer(cls, problem: PdeProblem, layer: FloatArray) -> "FluxTerms":
        phi_face = 0.5 * (layer[:-1] + layer[1:])
        low = phi_face <= 0.0
        clamped = int(np.count_nonzero(low))
        floored = np.where(low, POSITIVITY_FLOOR, phi_face) if clamped else phi_face
        alpha, dalpha = problem.alpha.evaluate(floored)
        drift = problem.epsilon * np.exp(-problem.x_faces) + problem.r
        flux = drift * phi_face + alpha * (1.0 - phi_face)
        return cls(
            phi_face=phi_face,
            drift=drift,
            D=np.asarray(dalpha, dtype=np.float64),
            E=np.zeros_like(phi_face),
            F=flux,
            C=np.zeros(problem.n_interior),
            clamped=clamped,
        )
