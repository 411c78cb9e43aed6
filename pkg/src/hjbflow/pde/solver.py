"""Finite-volume time march for the transformed HJB equation.

In forward time tau = T - t the equation reads
    phi_tau = (A(phi)_x)_x + B(phi, x)_x + C
and each step solves one tridiagonal system per (micro-)iteration.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from hjbflow.core.errors import (
    ComparisonBoundError,
    NoConvergenceError,
    NonPositivePhiError,
    ZeroPivotError,
)
from hjbflow.core.market import FloatArray
from hjbflow.pde.problem import FluxTerms, PdeProblem, PhiField, SolveStats
from hjbflow.pde.thomas import thomas_solve

_log = logging.getLogger("hjbflow.pde.solver")

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 100
BOUND_SLACK = 1e-6


class Scheme(str, Enum):
    SEMI_IMPLICIT = "semi"
    FULLY_IMPLICIT = "full"


@dataclass(frozen=True, eq=False)
class TridiagonalSystem:
    lower: FloatArray
    diag: FloatArray
    upper: FloatArray
    rhs: FloatArray

    def dominance_margin(self) -> FloatArray:
        return self.diag - np.abs(self.lower) - np.abs(self.upper)


def assemble_system(
    problem: PdeProblem,
    old_layer: FloatArray,
    flux: FluxTerms,
    tau_new: float,
    implicit_drift: bool = False,
) -> TridiagonalSystem:
    """Rows i = 1..n with diffusion at the new layer and D, E, F, C taken from `flux`.

    With `implicit_drift` the part of F linear in phi moves into the matrix and
    only the alpha term stays on the right-hand side.
    """
    k, h = problem.k, problem.h
    coef = k / (h * h)
    d_minus = flux.D[:-1]
    d_plus = flux.D[1:]
    lower = -coef * d_minus
    upper = -coef * d_plus
    diag = 1.0 + coef * (d_plus + d_minus)
    face_flux = flux.F
    if implicit_drift:
        half = 0.5 * k / h
        lower = lower + half * flux.drift[:-1]
        upper = upper - half * flux.drift[1:]
        diag = diag - half * (flux.drift[1:] - flux.drift[:-1])
        face_flux = flux.F - flux.drift * flux.phi_face
    rhs = (
        old_layer[1:-1]
        + (k / h) * (face_flux[1:] - face_flux[:-1] + flux.E[1:] - flux.E[:-1])
        + k * flux.C
    )
    # eliminate ghost cells through phi_0 = L phi_L + M phi_1 and its mirror
    weight_l, mix_l = problem.left_bc.coefficients(h)
    weight_r, mix_r = problem.right_bc.coefficients(h)
    diag[0] += lower[0] * mix_l
    rhs[0] -= lower[0] * weight_l * problem.left_bc.value(tau_new)
    diag[-1] += upper[-1] * mix_r
    rhs[-1] -= upper[-1] * weight_r * problem.right_bc.value(tau_new)
    lower[0] = 0.0
    upper[-1] = 0.0
    return TridiagonalSystem(lower, diag, upper, rhs)


def _with_ghosts(problem: PdeProblem, interior: FloatArray, tau: float) -> FloatArray:
    h = problem.h
    layer = np.empty(interior.shape[0] + 2)
    layer[1:-1] = interior
    layer[0] = problem.left_bc.ghost(tau, float(interior[0]), h)
    layer[-1] = problem.right_bc.ghost(tau, float(interior[-1]), h)
    return layer


def _solve(system: TridiagonalSystem) -> FloatArray:
    return thomas_solve(system.lower, system.diag, system.upper, system.rhs)


def _note_clamp(flux: FluxTerms, stats: Optional[SolveStats]) -> None:
    if not flux.clamped:
        return
    if stats is not None:
        stats.clamped_faces += flux.clamped
    if _log.isEnabledFor(logging.WARNING):
        _log.warning("clamped %d non-positive face values for alpha evaluation", flux.clamped)


def _check_positive(interior: FloatArray) -> None:
    if np.any(interior <= 0.0):
        i = int(np.argmin(interior))
        raise NonPositivePhiError(f"phi={float(interior[i])} at cell {i + 1}")


def step_semi_implicit(
    problem: PdeProblem,
    layer: FloatArray,
    j: int = 0,
    stats: Optional[SolveStats] = None,
) -> FloatArray:
    """Layer j+1 from layer j with D, E, F frozen at layer j."""
    tau_new = (j + 1) * problem.k
    flux = FluxTerms.from_layer(problem, layer)
    _note_clamp(flux, stats)
    interior = _solve(assemble_system(problem, layer, flux, tau_new))
    _check_positive(interior)
    return _with_ghosts(problem, interior, tau_new)


def step_fully_implicit(
    problem: PdeProblem,
    layer: FloatArray,
    j: int = 0,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    stats: Optional[SolveStats] = None,
) -> tuple[FloatArray, int]:
    """Layer j+1 by micro-iterations with every nonlinear term at the latest iterate."""
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    tau_new = (j + 1) * problem.k
    iterate = layer
    diff = float("inf")
    for it in range(1, max_iters + 1):
        flux = FluxTerms.from_layer(problem, iterate)
        _note_clamp(flux, stats)
        interior = _solve(assemble_system(problem, layer, flux, tau_new, implicit_drift=True))
        diff = float(np.max(np.abs(interior - iterate[1:-1])))
        iterate = _with_ghosts(problem, interior, tau_new)
        if diff < tol:
            _check_positive(interior)
            return iterate, it
    raise NoConvergenceError(
        f"no convergence after {max_iters} micro-iterations (last change {diff:.3e})"
    )


def solve_pde(
    problem: PdeProblem,
    scheme: Scheme = Scheme.FULLY_IMPLICIT,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> PhiField:
    """March all layers forward in tau and keep them.

    Every layer must stay within phi+ + BOUND_SLACK, with phi+ the sup of the
    terminal and Dirichlet data; otherwise ComparisonBoundError names the layer.
    """
    stats = SolveStats(scheme=scheme.value)
    values = np.empty((problem.m_steps + 1, problem.n_interior + 2))
    values[0] = problem.terminal_layer()
    bound = problem.phi_plus + BOUND_SLACK
    started = time.perf_counter()
    for j in range(problem.m_steps):
        try:
            if scheme is Scheme.SEMI_IMPLICIT:
                values[j + 1] = step_semi_implicit(problem, values[j], j, stats)
            else:
                values[j + 1], iters = step_fully_implicit(
                    problem, values[j], j, tol, max_iters, stats
                )
                stats.iterations.append(iters)
                if _log.isEnabledFor(logging.DEBUG):
                    _log.debug("layer %d: %d micro-iterations", j + 1, iters)
        except (NonPositivePhiError, NoConvergenceError, ZeroPivotError) as exc:
            raise type(exc)(f"layer {j + 1}: {exc}") from exc
        above = values[j + 1] > bound
        if np.any(above):
            worst = int(np.argmax(values[j + 1]))
            raise ComparisonBoundError(
                f"layer {j + 1}: {int(np.count_nonzero(above))} value(s) above "
                f"phi+={problem.phi_plus:g}, max {values[j + 1, worst]:.10g} "
                f"at x={problem.x[worst]:.6g}"
            )
    stats.wall_time = time.perf_counter() - started
    if stats.clamped_faces:
        stats.warnings.append(f"clamped {stats.clamped_faces} face value(s) to positive floor")
    if _log.isEnabledFor(logging.INFO):
        _log.info(
            "pde solved: scheme=%s, n=%d, m=%d, max_iters=%d, wall=%.3fs",
            scheme.value,
            problem.n_interior,
            problem.m_steps,
            stats.max_iterations,
            stats.wall_time,
        )
    return PhiField(values=values, x=problem.x, taus=problem.taus, stats=stats)
