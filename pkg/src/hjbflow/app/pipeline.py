"""Orchestration behind the CLI subcommands.

Every `run_*` function validates nothing itself (the settings models do), times
its stages, writes outputs when given a directory and returns a RunManifest
alongside the computed objects. Failures surface as PipelineStageError carrying
the stage label, chained to the original error.
"""

from __future__ import annotations

import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Optional, Union

import numpy as np
import pandas as pd

from hjbflow import __version__
from hjbflow.alpha.piecewise import PiecewiseAlpha, build_piecewise_alpha
from hjbflow.core.errors import PipelineStageError
from hjbflow.core.market import MarketModel
from hjbflow.io import fs
from hjbflow.io.tables import pieces_frame, read_model_csv, read_pieces_csv, write_table
from hjbflow.pde.boundary import BoundaryKind, parse_boundary
from hjbflow.pde.problem import PdeProblem, PhiField, grid_for_step, steps_for
from hjbflow.pde.solver import solve_pde
from hjbflow.portfolio.datasets import BUILTIN_MODELS, builtin_model
from hjbflow.portfolio.history import PriceHistory, estimate_moments
from hjbflow.portfolio.strategy import StrategySurface, extract_strategy
from hjbflow.portfolio.terminal import cara_terminal, parse_terminal
from hjbflow.schema.config import (
    AlphaSettings,
    EocSettings,
    PdeSettings,
    PortfolioSettings,
    WaveSettings,
)
from hjbflow.schema.manifest import RunManifest
from hjbflow.verification.eoc import (
    ErrorReport,
    TravelingWaveFamily,
    eoc_study,
    format_eoc_table,
    parse_k_rule,
    reports_frame,
)
from hjbflow.wave.benchmark import WaveBenchmark, build_wave_benchmark, g_table

_log = logging.getLogger("hjbflow.app.pipeline")

OutDir = Optional[Union[str, Path]]

_STAGE_ERRORS = (ValueError, ArithmeticError, OSError, KeyError)


class _Run:
    def __init__(self, subcommand: str, config: dict[str, Any]):
        self.manifest = RunManifest(subcommand=subcommand, version=__version__, config=config)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        if _log.isEnabledFor(logging.INFO):
            _log.info("stage %s: start", name)
        try:
            yield
        except PipelineStageError:
            raise
        except _STAGE_ERRORS as exc:
            raise PipelineStageError(name, str(exc)) from exc
        finally:
            elapsed = time.perf_counter() - started
            self.manifest.stage_seconds[name] = elapsed
            if _log.isEnabledFor(logging.INFO):
                _log.info("stage %s: %.3fs", name, elapsed)

    def digest(self, path: Union[str, Path]) -> None:
        self.manifest.input_digests[str(path)] = fs.sha3_digest(path)

    def output(self, path: Path) -> None:
        self.manifest.outputs.append(path.name)

    def finish(self, out_dir: OutDir) -> RunManifest:
        if out_dir is not None:
            self.manifest.outputs.append(fs.MANIFEST_FILENAME)
            self.manifest.write(Path(out_dir) / fs.MANIFEST_FILENAME)
        return self.manifest


def load_model(source: str) -> MarketModel:
    """A built-in dataset name or a model CSV path."""
    if source in BUILTIN_MODELS:
        return builtin_model(source)
    return read_model_csv(source)


def _file_argument(source: str, prefix: str) -> Optional[str]:
    kind, _, arg = source.partition(":")
    return arg if kind == prefix and arg else None


def _dump(settings: Any) -> dict[str, Any]:
    data: dict[str, Any] = settings.model_dump(mode="json")
    return data


def alpha_frame(alpha: PiecewiseAlpha, samples: int) -> pd.DataFrame:
    """alpha, alpha', alpha'' and the active set on `samples` points of (phi_min, phi_max]."""
    phi = np.linspace(alpha.phi_min, alpha.phi_max, samples + 1)[1:]
    value, deriv = alpha.evaluate(phi)
    pieces = [alpha.piece_index(float(p)) for p in phi]
    return pd.DataFrame(
        {
            "phi": phi,
            "alpha": value,
            "alpha_prime": deriv,
            "alpha_second": [
                alpha.pieces[i].second_derivative(float(p)) for i, p in zip(pieces, phi)
            ],
            "active_set": [
                ";".join(str(j + 1) for j in alpha.pieces[i].active_set) for i in pieces
            ],
            "piece_id": pieces,
        }
    )


def phi_frame(field: PhiField, layers: Optional[list[int]] = None) -> pd.DataFrame:
    rows = list(range(field.values.shape[0])) if layers is None else layers
    n_x = field.x.shape[0]
    return pd.DataFrame(
        {
            "tau": np.repeat(field.taus[rows], n_x),
            "x": np.tile(field.x, len(rows)),
            "phi": field.values[rows].reshape(-1),
        }
    )


def output_layers(m_steps: int, every: int) -> list[int]:
    """Every `every`-th layer, always including the terminal and the last one."""
    layers = list(range(0, m_steps + 1, every))
    if layers[-1] != m_steps:
        layers.append(m_steps)
    return layers


def _solve_diagnostics(field: PhiField, problem: PdeProblem) -> dict[str, Any]:
    stats = field.stats
    return {
        "scheme": stats.scheme,
        "n_interior": problem.n_interior,
        "m_steps": problem.m_steps,
        "h": problem.h,
        "k": problem.k,
        "iterations": list(stats.iterations),
        "max_iterations": stats.max_iterations,
        "clamped_faces": stats.clamped_faces,
        "boundaries": [problem.left_bc.describe(), problem.right_bc.describe()],
        "phi_min": float(np.min(field.values)),
        "phi_max": float(np.max(field.values)),
    }


@dataclass(frozen=True, eq=False)
class AlphaResult:
    alpha: PiecewiseAlpha
    manifest: RunManifest


def run_alpha(
    settings: AlphaSettings, out_dir: OutDir = None, breakpoints: bool = False
) -> AlphaResult:
    run = _Run("alpha", _dump(settings))
    with run.stage("load"):
        model = load_model(settings.model)
        if settings.model not in BUILTIN_MODELS:
            run.digest(settings.model)
    with run.stage("alpha"):
        alpha = build_piecewise_alpha(
            model, settings.phi_min, settings.phi_max, settings.constraints
        )
    run.manifest.diagnostics["breakpoints"] = list(alpha.breakpoints)
    if out_dir is not None:
        with run.stage("write"):
            fs.ensure_dir(out_dir)
            table = alpha_frame(alpha, settings.samples)
            run.output(write_table(table, Path(out_dir) / fs.ALPHA_FILENAME))
            run.output(write_table(pieces_frame(alpha), Path(out_dir) / fs.PIECES_FILENAME))
            if breakpoints:
                bp = Path(out_dir) / fs.BREAKPOINTS_FILENAME
                bp.write_text(json.dumps(list(alpha.breakpoints)) + "\n", encoding="utf-8")
                run.output(bp)
    return AlphaResult(alpha, run.finish(out_dir))


@dataclass(frozen=True, eq=False)
class SolveResult:
    field: PhiField
    alpha: PiecewiseAlpha
    manifest: RunManifest


def run_solve(settings: PdeSettings, out_dir: OutDir = None) -> SolveResult:
    run = _Run("solve", _dump(settings))
    with run.stage("load"):
        model = load_model(settings.model)
        if settings.model not in BUILTIN_MODELS:
            run.digest(settings.model)
        terminal, phi_plus = parse_terminal(settings.terminal)
        for option, prefix in (
            (settings.terminal, "csv"),
            (settings.bc_left, "dirichlet"),
            (settings.bc_right, "dirichlet"),
        ):
            path = _file_argument(option, prefix)
            if path is not None:
                run.digest(path)
        left = parse_boundary(settings.bc_left)
        right = parse_boundary(settings.bc_right)
    with run.stage("alpha"):
        upper = phi_plus
        taus = np.linspace(0.0, settings.horizon, 257)
        for bc in (left, right):
            if bc.kind is BoundaryKind.DIRICHLET:
                upper = max(upper, max(bc.value(float(t)) for t in taus))
        alpha = build_piecewise_alpha(model, settings.phi_min, upper, settings.constraints)
    with run.stage("solve"):
        if settings.n is not None:
            n = settings.n
            h = (settings.x_hi - settings.x_lo) / (n + 1)
        else:
            assert settings.h is not None
            n, h = grid_for_step(settings.x_lo, settings.x_hi, settings.h)
        if settings.m is not None:
            m = settings.m
        else:
            m = steps_for(settings.horizon, parse_k_rule(settings.k_rule or "0.1*h").step(h))
        problem = PdeProblem(
            epsilon=settings.epsilon,
            r=settings.r,
            x_lo=settings.x_lo,
            x_hi=settings.x_hi,
            n_interior=n,
            m_steps=m,
            horizon=settings.horizon,
            terminal=terminal,
            left_bc=left,
            right_bc=right,
            alpha=alpha,
        )
        field = solve_pde(problem, settings.scheme, settings.tol, settings.max_iters)
    run.manifest.warnings.extend(field.stats.warnings)
    run.manifest.diagnostics.update(_solve_diagnostics(field, problem))
    if out_dir is not None:
        with run.stage("write"):
            fs.ensure_dir(out_dir)
            run.output(write_table(phi_frame(field), Path(out_dir) / fs.PHI_FILENAME))
    return SolveResult(field, alpha, run.finish(out_dir))


@dataclass(frozen=True, eq=False)
class WaveResult:
    benchmark: WaveBenchmark
    manifest: RunManifest


def _wave_alpha(settings: WaveSettings, run: _Run) -> PiecewiseAlpha:
    if settings.alpha_csv is not None:
        with run.stage("load"):
            run.digest(settings.alpha_csv)
            return read_pieces_csv(settings.alpha_csv)
    assert settings.model is not None
    with run.stage("load"):
        model = load_model(settings.model)
        if settings.model not in BUILTIN_MODELS:
            run.digest(settings.model)
    with run.stage("alpha"):
        lo, hi = settings.alpha_domain()
        return build_piecewise_alpha(model, lo, hi, settings.constraints)


def run_wave(settings: WaveSettings, out_dir: OutDir = None, g_samples: int = 0) -> WaveResult:
    run = _Run("wave", _dump(settings))
    alpha = _wave_alpha(settings, run)
    with run.stage("wave"):
        bm = build_wave_benchmark(
            alpha,
            settings.v_minus,
            settings.v_plus,
            settings.x_lo,
            settings.x_hi,
            settings.horizon,
            settings.rel_tol,
        )
    run.manifest.diagnostics.update(bm.header())
    run.manifest.diagnostics["samples"] = int(bm.samples.xi.shape[0])
    if out_dir is not None:
        with run.stage("write"):
            out = fs.ensure_dir(out_dir)
            run.output(write_table(bm.frame(), out / fs.PROFILE_FILENAME))
            header = out / fs.WAVE_HEADER_FILENAME
            header.write_text(json.dumps(bm.header(), indent=2) + "\n", encoding="utf-8")
            run.output(header)
            if g_samples:
                v_lo = max(alpha.phi_min, 0.5 * settings.v_minus)
                v_hi = min(alpha.phi_max, 1.5 * settings.v_plus)
                table = g_table(alpha, bm.c, bm.K0, v_lo, v_hi, g_samples)
                run.output(write_table(table, out / fs.G_TABLE_FILENAME))
    return WaveResult(bm, run.finish(out_dir))


@dataclass(frozen=True, eq=False)
class EocResult:
    reports: list[ErrorReport]
    benchmark: WaveBenchmark
    manifest: RunManifest

    def table(self) -> str:
        return format_eoc_table(self.reports)


def run_eoc(settings: EocSettings, out_dir: OutDir = None) -> EocResult:
    run = _Run("eoc", _dump(settings))
    alpha = _wave_alpha(settings, run)
    with run.stage("wave"):
        bm = build_wave_benchmark(
            alpha,
            settings.v_minus,
            settings.v_plus,
            settings.x_lo,
            settings.x_hi,
            settings.horizon,
            settings.rel_tol,
        )
    family = TravelingWaveFamily(
        benchmark=bm,
        x_lo=settings.x_lo,
        x_hi=settings.x_hi,
        horizon=settings.horizon,
        k_rule=parse_k_rule(settings.k_rule),
    )
    with run.stage("eoc"):
        reports = eoc_study(
            family, settings.levels, settings.scheme, settings.tol, settings.max_iters
        )
    run.manifest.diagnostics["max_iterations"] = [r.max_iterations for r in reports]
    run.manifest.diagnostics.update(bm.header())
    if out_dir is not None:
        with run.stage("write"):
            out = fs.ensure_dir(out_dir)
            run.output(write_table(reports_frame(reports), out / fs.EOC_CSV_FILENAME))
            text = out / fs.EOC_TEXT_FILENAME
            text.write_text(format_eoc_table(reports) + "\n", encoding="utf-8")
            run.output(text)
    return EocResult(reports, bm, run.finish(out_dir))


@dataclass(frozen=True, eq=False)
class PipelineResult:
    model: MarketModel
    alpha: PiecewiseAlpha
    field: PhiField
    strategy: StrategySurface
    manifest: RunManifest


def run_pipeline(settings: PortfolioSettings, out_dir: OutDir = None) -> PipelineResult:
    """Moments, alpha on (phi_min, a], PDE solve in x = ln y and strategy extraction."""
    run = _Run("portfolio", _dump(settings))
    with run.stage("load"):
        if settings.prices is not None:
            run.digest(settings.prices)
            history = PriceHistory.from_csv(settings.prices)
            model = estimate_moments(history, settings.periods_per_year)
        else:
            assert settings.model is not None
            model = load_model(settings.model)
            if settings.model not in BUILTIN_MODELS:
                run.digest(settings.model)
        terminal = cara_terminal(settings.a)
        left = parse_boundary(settings.bc_left)
        right = parse_boundary(settings.bc_right)
    with run.stage("alpha"):
        alpha = build_piecewise_alpha(model, settings.phi_min, settings.a, settings.constraints)
    with run.stage("solve"):
        x_lo, x_hi = math.log(settings.y_lo), math.log(settings.y_hi)
        n, h = grid_for_step(x_lo, x_hi, settings.h)
        m = steps_for(settings.horizon, parse_k_rule(settings.k_rule).step(h))
        problem = PdeProblem(
            epsilon=settings.epsilon,
            r=settings.r,
            x_lo=x_lo,
            x_hi=x_hi,
            n_interior=n,
            m_steps=m,
            horizon=settings.horizon,
            terminal=terminal,
            left_bc=left,
            right_bc=right,
            alpha=alpha,
        )
        field = solve_pde(problem, settings.scheme, settings.tol, settings.max_iters)
    layers = output_layers(m, settings.output_every)
    with run.stage("strategy"):
        strategy = extract_strategy(
            field, model, settings.constraints, alpha, settings.horizon, layers
        )
    run.manifest.warnings.extend(field.stats.warnings)
    run.manifest.diagnostics.update(_solve_diagnostics(field, problem))
    run.manifest.diagnostics["breakpoints"] = list(alpha.breakpoints)
    run.manifest.diagnostics["tickers"] = list(model.labels())
    if out_dir is not None:
        with run.stage("write"):
            out = fs.ensure_dir(out_dir)
            run.output(write_table(phi_frame(field, layers), out / fs.PHI_FILENAME))
            run.output(write_table(strategy.frame(), out / fs.STRATEGY_FILENAME))
            run.output(write_table(alpha_frame(alpha, 1001), out / fs.ALPHA_FILENAME))
    return PipelineResult(model, alpha, field, strategy, run.finish(out_dir))
