"""Exact piecewise-rational representation of the QP value function.

On every interval where the set of zero weights stays fixed the optimal value is
alpha(phi) = a phi - b / phi + c and the optimal weights are affine in 1/phi.
Pieces are half-open (lo, hi]: a breakpoint belongs to the piece on its left.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from hjbflow.core.errors import EmptyRangeError, OutOfDomainError, OutOfRangeError
from hjbflow.core.market import ConstraintSet, FloatArray, MarketModel
from hjbflow.core.qp import reduced_coefficients, solve_qp

_log = logging.getLogger("hjbflow.alpha.piecewise")

SCAN_CELLS = 1024
BREAKPOINT_RESOLUTION = 1e-8
# Slack for values that land on the domain edge through rounding.
_EDGE_SLACK = 1e-13

Signature = tuple[tuple[int, ...], bool]


@dataclass(frozen=True, eq=False)
class AlphaPiece:
    lo: float
    hi: float
    a: float
    b: float
    c: float
    active_set: tuple[int, ...]
    a_vec: FloatArray
    b_vec: FloatArray
    budget_binding: bool = True

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise EmptyRangeError(f"piece interval ({self.lo}, {self.hi}] is empty")
        if self.b < 0.0 or self.a < 0.0:
            raise ValueError(f"piece coefficients must satisfy a, b >= 0 (a={self.a}, b={self.b})")
        if self.budget_binding and not self.a > 0.0:
            raise ValueError("a budget-binding piece needs a > 0")

    def value(self, phi: float) -> float:
        return self.a * phi - self.b / phi + self.c

    def derivative(self, phi: float) -> float:
        return self.a + self.b / (phi * phi)

    def second_derivative(self, phi: float) -> float:
        return -2.0 * self.b / phi**3

    def theta(self, phi: float) -> FloatArray:
        return np.asarray(self.a_vec - self.b_vec / phi, dtype=np.float64)

    def inverse(self, z: float) -> float:
        if self.b == 0.0:
            return (z - self.c) / self.a
        if self.a == 0.0:
            return self.b / (self.c - z)
        # positive root of a phi^2 + (c - z) phi - b = 0, cancellation-free
        p = self.c - z
        root = math.sqrt(p * p + 4.0 * self.a * self.b)
        if p >= 0.0:
            return 2.0 * self.b / (p + root)
        return (root - p) / (2.0 * self.a)


@dataclass(frozen=True, eq=False)
class PiecewiseAlpha:
    pieces: tuple[AlphaPiece, ...]
    model: Optional[MarketModel] = None
    constraints: ConstraintSet = ConstraintSet.SIMPLEX
    _his: FloatArray = field(init=False, repr=False)
    _a: FloatArray = field(init=False, repr=False)
    _b: FloatArray = field(init=False, repr=False)
    _c: FloatArray = field(init=False, repr=False)
    _z_his: FloatArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.pieces:
            raise EmptyRangeError("no pieces")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.hi != right.lo:
                raise ValueError(f"pieces do not tile: {left.hi} != {right.lo}")
        object.__setattr__(self, "_his", np.array([p.hi for p in self.pieces]))
        object.__setattr__(self, "_a", np.array([p.a for p in self.pieces]))
        object.__setattr__(self, "_b", np.array([p.b for p in self.pieces]))
        object.__setattr__(self, "_c", np.array([p.c for p in self.pieces]))
        object.__setattr__(self, "_z_his", np.array([p.value(p.hi) for p in self.pieces]))

    @property
    def phi_min(self) -> float:
        return self.pieces[0].lo

    @property
    def phi_max(self) -> float:
        return self.pieces[-1].hi

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(p.hi for p in self.pieces[:-1])

    def covers(self, phi: float) -> bool:
        return self.phi_min < phi <= self.phi_max

    def piece_index(self, phi: float) -> int:
        if not self.covers(phi):
            raise OutOfDomainError(f"phi={phi} outside ({self.phi_min}, {self.phi_max}]")
        return int(np.searchsorted(self._his, phi, side="left"))

    def piece_at(self, phi: float) -> AlphaPiece:
        return self.pieces[self.piece_index(phi)]

    def value(self, phi: float) -> float:
        return self.piece_at(phi).value(phi)

    def evaluate(self, phi: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Vectorized (alpha, alpha') for an array of phi values.

        Values outside the tabulated range are answered by the exact QP when a
        model is attached.
        """
        phi = np.asarray(phi, dtype=np.float64)
        flat = phi.reshape(-1)
        inside = (flat > self.phi_min) & (flat <= self.phi_max)
        idx = np.searchsorted(self._his, flat, side="left")
        idx = np.minimum(idx, len(self.pieces) - 1)
        safe = np.where(inside, flat, self._his[idx])
        a, b, c = self._a[idx], self._b[idx], self._c[idx]
        value = a * safe - b / safe + c
        deriv = a + b / (safe * safe)
        if not np.all(inside):
            if self.model is None:
                bad = flat[~inside]
                raise OutOfDomainError(
                    f"phi={bad[0]} outside ({self.phi_min}, {self.phi_max}] and no model attached"
                )
            for k in np.flatnonzero(~inside):
                sol = solve_qp(self.model, float(flat[k]), self.constraints)
                value[k] = sol.value
                deriv[k] = sol.derivative
        return value.reshape(phi.shape), deriv.reshape(phi.shape)

    def second_derivative(self, phi: float) -> float:
        return self.piece_at(phi).second_derivative(phi)

    def theta(self, phi: float) -> FloatArray:
        if self.covers(phi):
            return self.piece_at(phi).theta(phi)
        if self.model is None:
            raise OutOfDomainError(f"phi={phi} outside ({self.phi_min}, {self.phi_max}]")
        return np.array(solve_qp(self.model, phi, self.constraints).theta)

    def active_assets(self) -> frozenset[int]:
        """Assets held with positive weight somewhere on the covered domain."""
        held: set[int] = set()
        for p in self.pieces:
            n = p.a_vec.shape[0]
            held.update(i for i in range(n) if i not in p.active_set)
        return frozenset(held)

    def image(self) -> tuple[float, float]:
        first = self.pieces[0]
        return first.value(first.lo), float(self._z_his[-1])

    def inverse(self, z: float) -> float:
        z_lo, z_hi = self.image()
        span = max(abs(z_lo), abs(z_hi), 1.0) * _EDGE_SLACK
        if z <= z_lo - span or z > z_hi + span:
            raise OutOfRangeError(f"z={z} outside the image ({z_lo}, {z_hi}]")
        z = min(max(z, z_lo), z_hi)
        k = int(np.searchsorted(self._z_his, z, side="left"))
        return self.pieces[min(k, len(self.pieces) - 1)].inverse(z)

    def inverse_many(self, z: FloatArray) -> FloatArray:
        """Vectorized inverse; values are clipped into the image first."""
        z_lo, z_hi = self.image()
        flat = np.clip(np.asarray(z, dtype=np.float64).reshape(-1), z_lo, z_hi)
        idx = np.minimum(np.searchsorted(self._z_his, flat, side="left"), len(self.pieces) - 1)
        a, b, c = self._a[idx], self._b[idx], self._c[idx]
        p = c - flat
        root = np.sqrt(p * p + 4.0 * a * b)
        safe_a = np.where(a > 0.0, a, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            quad = np.where(p >= 0.0, 2.0 * b / (p + root), (root - p) / (2.0 * safe_a))
            linear = (flat - c) / safe_a
            merton = b / np.where(p != 0.0, p, 1.0)
        out = np.where(b == 0.0, linear, np.where(a == 0.0, merton, quad))
        return out.reshape(np.shape(z))


def eval_alpha(pw: PiecewiseAlpha, phi: float) -> tuple[float, float]:
    piece = pw.piece_at(phi)
    return piece.value(phi), piece.derivative(phi)


def alpha_inverse(pw: PiecewiseAlpha, z: float) -> float:
    return pw.inverse(z)


def _signature(model: MarketModel, phi: float, constraints: ConstraintSet) -> Signature:
    sol = solve_qp(model, phi, constraints)
    return sol.active_set, sol.budget_binding


def _locate_changes(
    model: MarketModel,
    constraints: ConstraintSet,
    lo: float,
    hi: float,
    sig_lo: Signature,
    sig_hi: Signature,
) -> list[float]:
    found: list[float] = []
    while sig_lo != sig_hi:
        left, right = lo, hi
        while right - left > BREAKPOINT_RESOLUTION:
            mid = 0.5 * (left + right)
            if _signature(model, mid, constraints) == sig_lo:
                left = mid
            else:
                right = mid
        found.append(0.5 * (left + right))
        lo = right
        sig_lo = _signature(model, right, constraints)
    return found


def build_piecewise_alpha(
    model: MarketModel,
    phi_min: float,
    phi_max: float,
    constraints: ConstraintSet = ConstraintSet.SIMPLEX,
) -> PiecewiseAlpha:
    """Scan (phi_min, phi_max] for active-set changes and fit each piece exactly."""
    if not 0.0 < phi_min < phi_max:
        raise EmptyRangeError(f"need 0 < phi_min < phi_max, got ({phi_min}, {phi_max})")
    grid = np.linspace(phi_min, phi_max, SCAN_CELLS + 1)
    sigs = [_signature(model, float(p), constraints) for p in grid]
    breaks: list[float] = []
    for k in range(SCAN_CELLS):
        if sigs[k] != sigs[k + 1]:
            breaks.extend(
                _locate_changes(
                    model, constraints, float(grid[k]), float(grid[k + 1]), sigs[k], sigs[k + 1]
                )
            )
    edges = [phi_min, *breaks, phi_max]
    pieces: list[AlphaPiece] = []
    for lo, hi in zip(edges, edges[1:]):
        if not lo < hi:
            continue
        active, budget = _signature(model, 0.5 * (lo + hi), constraints)
        if pieces and pieces[-1].active_set == active and pieces[-1].budget_binding == budget:
            merged = pieces.pop()
            lo = merged.lo
        free = [i for i in range(model.n) if i not in active]
        coef = reduced_coefficients(model, free, budget)
        pieces.append(
            AlphaPiece(
                lo=lo,
                hi=hi,
                a=coef.a,
                b=coef.b,
                c=coef.c,
                active_set=active,
                a_vec=coef.a_vec,
                b_vec=coef.b_vec,
                budget_binding=budget,
            )
        )
    if _log.isEnabledFor(logging.INFO):
        _log.info(
            "alpha built: domain=(%.6g, %.6g], pieces=%d, breakpoints=%s",
            phi_min,
            phi_max,
            len(pieces),
            ", ".join(f"{p.hi:.8g}" for p in pieces[:-1]) or "none",
        )
    return PiecewiseAlpha(tuple(pieces), model=model, constraints=constraints)


def piecewise_from_coefficients(
    intervals: Sequence[tuple[float, float]],
    coefficients: Sequence[tuple[float, float, float]],
    budget_binding: Optional[Sequence[bool]] = None,
) -> PiecewiseAlpha:
    """Hand-specified alpha (no QP behind it), e.g. alpha(v) = v on one piece.

    The pieces carry no weights, so `theta` is meaningless on the result.
    """
    if len(intervals) != len(coefficients):
        raise ValueError(f"{len(intervals)} intervals but {len(coefficients)} coefficient rows")
    binding = [True] * len(intervals) if budget_binding is None else list(budget_binding)
    pieces = tuple(
        AlphaPiece(
            lo=lo,
            hi=hi,
            a=a,
            b=b,
            c=c,
            active_set=(),
            a_vec=np.ones(1),
            b_vec=np.zeros(1),
            budget_binding=bound,
        )
        for (lo, hi), (a, b, c), bound in zip(intervals, coefficients, binding)
    )
    return PiecewiseAlpha(pieces)
