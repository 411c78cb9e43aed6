"""Experimental order of convergence on the traveling-wave benchmark."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import pandas as pd

from hjbflow.core.market import FloatArray
from hjbflow.pde.boundary import BoundaryCondition
from hjbflow.pde.problem import PdeProblem, grid_for_step, steps_for
from hjbflow.pde.solver import DEFAULT_MAX_ITERS, DEFAULT_TOL, Scheme, solve_pde
from hjbflow.verification.norms import discrete_norms
from hjbflow.wave.benchmark import WaveBenchmark

_log = logging.getLogger("hjbflow.verification.eoc")

_K_RULE = re.compile(
    r"^\s*(?:(?P<coef>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\*\s*)?h(?:\^(?P<pow>[0-9]+))?\s*$"
)


@dataclass(frozen=True)
class KRule:
    """Time step bound to the spatial step: k = coefficient * h**power."""

    coefficient: float
    power: int

    def step(self, h: float) -> float:
        return self.coefficient * h**self.power

    def __str__(self) -> str:
        suffix = "" if self.power == 1 else f"^{self.power}"
        return f"{self.coefficient:g}*h{suffix}"


def parse_k_rule(text: str) -> KRule:
    match = _K_RULE.match(text)
    if match is None:
        raise ValueError(f"k-rule must look like '0.1*h' or '10*h^2', got {text!r}")
    coef = float(match.group("coef")) if match.group("coef") else 1.0
    power = int(match.group("pow")) if match.group("pow") else 1
    if not coef > 0.0 or power < 1:
        raise ValueError(f"k-rule needs a positive coefficient and power >= 1, got {text!r}")
    return KRule(coef, power)


@dataclass(frozen=True)
class ErrorReport:
    h: float
    k: float
    err_linf_l2: float
    err_l2_w12: float
    eoc_linf: Optional[float] = None
    eoc_l2: Optional[float] = None
    max_iterations: int = 0


def eoc(err: float, err_prev: float, h: float, h_prev: float) -> Optional[float]:
    """ln(err / err_prev) / ln(h / h_prev); None when either error vanishes."""
    if err <= 0.0 or err_prev <= 0.0:
        return None
    return math.log(err / err_prev) / math.log(h / h_prev)


def assemble_reports(
    rows: Sequence[tuple[float, float, float, float]], iterations: Sequence[int] = ()
) -> list[ErrorReport]:
    """Attach orders to (h, k, linf_l2, l2_w12) rows ordered coarse to fine."""
    reports: list[ErrorReport] = []
    for i, (h, k, e_inf, e_l2) in enumerate(rows):
        iters = iterations[i] if i < len(iterations) else 0
        if i == 0:
            reports.append(ErrorReport(h, k, e_inf, e_l2, max_iterations=iters))
            continue
        prev = reports[-1]
        reports.append(
            ErrorReport(
                h,
                k,
                e_inf,
                e_l2,
                eoc_linf=eoc(e_inf, prev.err_linf_l2, h, prev.h),
                eoc_l2=eoc(e_l2, prev.err_l2_w12, h, prev.h),
                max_iterations=iters,
            )
        )
    return reports


class ProblemFamily(Protocol):
    def problem(self, h: float) -> PdeProblem: ...

    def exact(self, x: FloatArray, tau: float) -> FloatArray: ...


@dataclass(frozen=True, eq=False)
class TravelingWaveFamily:
    """Problems on [x_lo, x_hi] x [0, T] with Dirichlet data from one benchmark."""

    benchmark: WaveBenchmark
    x_lo: float
    x_hi: float
    horizon: float
    k_rule: KRule

    def exact(self, x: FloatArray, tau: float) -> FloatArray:
        return self.benchmark.exact(x, tau)

    def _boundary(self, x: float) -> BoundaryCondition:
        bm = self.benchmark
        return BoundaryCondition.dirichlet(lambda tau: float(bm.profile(x + bm.c * tau)))

    def problem(self, h: float) -> PdeProblem:
        n, h_used = grid_for_step(self.x_lo, self.x_hi, h)
        m = steps_for(self.horizon, self.k_rule.step(h_used))
        return PdeProblem(
            epsilon=0.0,
            r=0.0,
            x_lo=self.x_lo,
            x_hi=self.x_hi,
            n_interior=n,
            m_steps=m,
            horizon=self.horizon,
            terminal=lambda x: self.benchmark.exact(x, 0.0),
            left_bc=self._boundary(self.x_lo),
            right_bc=self._boundary(self.x_hi),
            alpha=self.benchmark.alpha,
        )


def eoc_study(
    family: ProblemFamily,
    levels: Sequence[float],
    scheme: Scheme = Scheme.FULLY_IMPLICIT,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> list[ErrorReport]:
    """Solve at every h in `levels` (coarse to fine) and report errors with orders."""
    if len(levels) < 2:
        raise ValueError("an EOC study needs at least two levels")
    if any(b >= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"levels must be strictly decreasing, got {list(levels)}")
    rows: list[tuple[float, float, float, float]] = []
    iterations: list[int] = []
    for h in levels:
        problem = family.problem(h)
        field = solve_pde(problem, scheme, tol=tol, max_iters=max_iters)
        e_inf, e_l2 = discrete_norms(field, family.exact)
        rows.append((problem.h, problem.k, e_inf, e_l2))
        iterations.append(field.stats.max_iterations)
        if _log.isEnabledFor(logging.INFO):
            _log.info(
                "eoc level: h=%.6g, k=%.6g, linf_l2=%.5e, l2_w12=%.5e, max_iters=%d",
                problem.h,
                problem.k,
                e_inf,
                e_l2,
                field.stats.max_iterations,
            )
    return assemble_reports(rows, iterations)


def reports_frame(reports: Sequence[ErrorReport]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "h": [r.h for r in reports],
            "k": [r.k for r in reports],
            "err_linf_l2": [r.err_linf_l2 for r in reports],
            "eoc_linf_l2": [r.eoc_linf for r in reports],
            "err_l2_w12": [r.err_l2_w12 for r in reports],
            "eoc_l2_w12": [r.eoc_l2 for r in reports],
            "max_iterations": [r.max_iterations for r in reports],
        }
    )


def format_eoc_table(reports: Sequence[ErrorReport]) -> str:
    """Aligned text: h | Linf(L2)-err | EOC | L2(W12)-err | EOC."""

    def order(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.3f}"

    header = ("h", "Linf(L2)-err", "EOC", "L2(W12)-err", "EOC")
    body = [
        (
            f"{r.h:.6g}",
            f"{r.err_linf_l2:.5e}",
            order(r.eoc_linf),
            f"{r.err_l2_w12:.5e}",
            order(r.eoc_l2),
        )
        for r in reports
    ]
    widths = [max(len(row[i]) for row in (header, *body)) for i in range(len(header))]
    lines = [" | ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in (header, *body)]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)
