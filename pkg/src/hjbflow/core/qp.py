from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg

from hjbflow.core.errors import ActiveSetCyclingError, NonPositivePhiError, SingularModelError
from hjbflow.core.market import (
    ACTIVE_TOL,
    KKT_TOL,
    ConstraintSet,
    FloatArray,
    MarketModel,
    QpSolution,
    factor_block,
)

_log = logging.getLogger("hjbflow.core.qp")

# Pseudo-index of the budget constraint in tie-breaking; it sorts after every asset.
_BUDGET = -1


@dataclass(frozen=True, eq=False)
class ReducedCoefficients:
    """Closed-form data of the problem restricted to the free assets.

    theta(phi) = a_vec - b_vec / phi and alpha(phi) = a * phi - b / phi + c.
    Vectors are full length with zeros on the pinned assets.
    """

    a_vec: FloatArray
    b_vec: FloatArray
    a: float
    b: float
    c: float


def reduced_coefficients(
    model: MarketModel, free: Sequence[int], budget_binding: bool = True
) -> ReducedCoefficients:
    n = model.n
    a_vec = np.zeros(n)
    b_vec = np.zeros(n)
    if len(free) == 0:
        if budget_binding:
            raise SingularModelError("budget constraint needs at least one free asset")
        return ReducedCoefficients(a_vec, b_vec, 0.0, 0.0, 0.0)
    mu_f, sigma_f = model.reduced(free)
    factor = factor_block(sigma_f)
    w = scipy.linalg.cho_solve(factor, mu_f, check_finite=False)
    idx = np.asarray(free, dtype=np.intp)
    if not budget_binding:
        b_vec[idx] = -w
        return ReducedCoefficients(a_vec, b_vec, 0.0, 0.5 * float(mu_f @ w), 0.0)
    u = scipy.linalg.cho_solve(factor, np.ones(len(free)), check_finite=False)
    s1 = float(u.sum())
    sm = float(w.sum())
    a_vec[idx] = u / s1
    b_vec[idx] = -w + (sm / s1) * u
    # b >= 0 by Cauchy-Schwarz; clip rounding noise when mu is parallel to 1.
    b = max(0.5 * float(mu_f @ w) - 0.5 * sm * sm / s1, 0.0)
    return ReducedCoefficients(a_vec, b_vec, 0.5 / s1, b, -sm / s1)


def _solve_working_set(
    model: MarketModel, phi: float, free: Sequence[int], budget_binding: bool
) -> tuple[FloatArray, float]:
    """Minimizer with pinned assets at zero, plus the budget multiplier."""
    theta = np.zeros(model.n)
    if len(free) == 0:
        return theta, 0.0
    mu_f, sigma_f = model.reduced(free)
    factor = factor_block(sigma_f)
    w = scipy.linalg.cho_solve(factor, mu_f, check_finite=False)
    idx = np.asarray(free, dtype=np.intp)
    if not budget_binding:
        theta[idx] = w / phi
        return theta, 0.0
    u = scipy.linalg.cho_solve(factor, np.ones(len(free)), check_finite=False)
    lam = (phi - float(w.sum())) / float(u.sum())
    theta[idx] = (w + lam * u) / phi
    return theta, lam


def _finish(
    model: MarketModel,
    phi: float,
    theta: FloatArray,
    lam: float,
    pinned: Iterable[int],
    budget_binding: bool,
) -> QpSolution:
    theta = theta.copy()
    pinned_set = set(pinned)
    for i in pinned_set:
        theta[i] = 0.0
    active = tuple(
        i for i in range(model.n) if i in pinned_set or abs(float(theta[i])) <= ACTIVE_TOL
    )
    theta.setflags(write=False)
    return QpSolution(
        theta=theta,
        value=model.objective(theta, phi),
        derivative=0.5 * float(theta @ model.sigma @ theta),
        active_set=active,
        multiplier=float(lam),
        budget_binding=budget_binding,
    )


def solve_qp_active_set_direct(
    model: MarketModel, phi: float, active_set: Iterable[int]
) -> QpSolution:
    """Equality-constrained solve with the given assets pinned at zero.

    Feasibility of the remaining weights is not checked.
    """
    if not phi > 0.0:
        raise NonPositivePhiError(f"phi must be positive, got {phi}")
    pinned = sorted(set(active_set))
    if any(i < 0 or i >= model.n for i in pinned):
        raise ValueError(f"active set {pinned} outside 0..{model.n - 1}")
    if len(pinned) > model.n - 1:
        raise ValueError("at least one asset must stay free")
    free = [i for i in range(model.n) if i not in pinned]
    theta, lam = _solve_working_set(model, phi, free, True)
    sol = _finish(model, phi, theta, lam, pinned, True)
    # Report exactly the requested set; zero weights on free assets are the caller's concern.
    return QpSolution(
        theta=sol.theta,
        value=sol.value,
        derivative=sol.derivative,
        active_set=tuple(pinned),
        multiplier=sol.multiplier,
        budget_binding=True,
    )


def _ratio_test(
    theta: FloatArray,
    step: FloatArray,
    working: set[int],
    budget_in_working: bool,
    merton: bool,
) -> tuple[float, Optional[int]]:
    best = 1.0
    blocking: Optional[int] = None
    for i in range(theta.shape[0]):
        if i in working or step[i] >= 0.0:
            continue
        ratio = max(float(theta[i]), 0.0) / float(-step[i])
        if ratio < best:
            best = ratio
            blocking = i
    if merton and not budget_in_working:
        rise = float(step.sum())
        if rise > 0.0:
            ratio = max(1.0 - float(theta.sum()), 0.0) / rise
            if ratio < best:
                best = ratio
                blocking = _BUDGET
    return best, blocking


def solve_qp(
    model: MarketModel, phi: float, constraints: ConstraintSet = ConstraintSet.SIMPLEX
) -> QpSolution:
    """Minimize -mu.theta + phi/2 theta.Sigma.theta over the constraint set.

    Primal active-set method started from the barycenter; every working set is
    solved in closed form. Ties are broken toward the smallest index.
    """
    if not phi > 0.0:
        raise NonPositivePhiError(f"phi must be positive, got {phi}")
    n = model.n
    merton = constraints is ConstraintSet.MERTON_SIMPLEX
    theta = np.full(n, 1.0 / n)
    working: set[int] = set()
    budget_in_working = True
    max_iters = 50 + 10 * n
    for it in range(max_iters):
        free = [i for i in range(n) if i not in working]
        target, lam = _solve_working_set(model, phi, free, budget_in_working)
        step = target - theta
        if float(np.max(np.abs(step))) > 0.0:
            ratio, blocking = _ratio_test(theta, step, working, budget_in_working, merton)
            if blocking is not None:
                theta = theta + ratio * step
                if blocking == _BUDGET:
                    budget_in_working = True
                else:
                    working.add(blocking)
                    theta[blocking] = 0.0
                continue
            theta = target
        grad = phi * (model.sigma @ theta) - model.mu
        candidates: list[tuple[float, int, int]] = []
        for i in sorted(working):
            eta = float(grad[i]) - lam
            if eta < -KKT_TOL:
                candidates.append((eta, 0, i))
        if merton and budget_in_working and -lam < -KKT_TOL:
            candidates.append((-lam, 1, _BUDGET))
        if not candidates:
            if _log.isEnabledFor(logging.DEBUG):
                _log.debug(
                    "qp converged: phi=%.6g, iterations=%d, active=%s", phi, it + 1, sorted(working)
                )
            return _finish(model, phi, theta, lam, working, budget_in_working)
        _, _, leaving = min(candidates)
        if leaving == _BUDGET:
            budget_in_working = False
        else:
            working.discard(leaving)
    raise ActiveSetCyclingError(f"active-set method did not terminate at phi={phi}")


def derivative_bounds(
    model: MarketModel, constraints: ConstraintSet = ConstraintSet.SIMPLEX
) -> tuple[float, float]:
    """(lambda_minus, lambda_plus) bounding alpha' over all phi > 0.

    The lower bound is half the minimum portfolio variance over the simplex; the
    upper bound is half the largest single-asset variance, the maximum of a convex
    function over the simplex sitting at a vertex.
    """
    riskless = MarketModel(np.zeros(model.n), model.sigma)
    lower = solve_qp(riskless, 1.0, ConstraintSet.SIMPLEX).derivative
    if constraints is ConstraintSet.MERTON_SIMPLEX:
        lower = 0.0
    return lower, 0.5 * float(np.max(np.diag(model.sigma)))
