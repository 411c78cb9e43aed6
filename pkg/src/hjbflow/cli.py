from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from pydantic import BaseModel, ValidationError

from hjbflow.app.pipeline import run_alpha, run_eoc, run_pipeline, run_solve, run_wave
from hjbflow.core.errors import NUMERICAL_FAILURES, PipelineStageError
from hjbflow.io.yaml import read_yaml
from hjbflow.pde.solver import DEFAULT_MAX_ITERS, DEFAULT_TOL
from hjbflow.schema.config import (
    AlphaSettings,
    EocSettings,
    PdeSettings,
    PortfolioSettings,
    WaveSettings,
)
from hjbflow.wave.benchmark import DEFAULT_REL_TOL

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2

DEFAULT_G_SAMPLES = 201


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raises on bad arguments instead of printing usage and exiting with 2."""

    def error(self, message: str) -> Any:
        raise _UsageError(message)


def _floats(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _pair(text: str) -> tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise ValueError(f"expected 'lo,hi', got {text!r}")
    return values[0], values[1]


def _settings(model: type[BaseModel], args: Any, overrides: dict[str, Any]) -> Any:
    """YAML file (if any) overlaid with the flags given on the command line."""
    names = {f.alias: name for name, f in model.model_fields.items() if f.alias is not None}
    data: dict[str, Any] = {}
    if args.config is not None:
        for key, value in read_yaml(args.config).items():
            data[names.get(key, key)] = value
    for name, value in overrides.items():
        if value is not None:
            data[name] = value
    return model.model_validate(data)


def _report(exc: BaseException, stage: str) -> None:
    message = " ".join(str(exc).split())
    print(f"error={type(exc).__name__} stage={stage} message={message}", file=sys.stderr)


def _report_usage(message: str) -> None:
    text = " ".join(message.split())
    print(f"error=ArgumentError stage=config message={text}", file=sys.stderr)


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        msg = err["msg"]
        parts.append(f"--{loc.replace('_', '-')}: {msg}" if loc else msg)
    return "; ".join(parts)


def _add_common(p: Any) -> None:
    p.add_argument("--config", default=None, help="YAML run file; flags override its keys")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--log-level", default="WARNING", help="logging level (default: WARNING)")


def _add_solver_flags(p: Any) -> None:
    p.add_argument("--scheme", choices=["semi", "full"], default=None, help="(default: full)")
    p.add_argument("--tol", type=float, default=None, help=f"(default: {DEFAULT_TOL:g})")
    p.add_argument(
        "--max-iters", type=int, default=None, help=f"(default: {DEFAULT_MAX_ITERS})"
    )


def _add_wave_flags(p: Any) -> None:
    p.add_argument("--model", default=None, help="model CSV (mu row, Sigma rows) or 'dax6'")
    p.add_argument("--alpha-csv", default=None, help="piece table written by 'alpha' (pieces.csv)")
    p.add_argument("--v-minus", type=float, default=None)
    p.add_argument("--v-plus", type=float, default=None)
    p.add_argument("--domain", type=_pair, default=None, help="x range 'lo,hi' (default: -4,4)")
    p.add_argument("--T", dest="horizon", type=float, default=None, help="(default: 10)")
    p.add_argument(
        "--rel-tol", type=float, default=None, help=f"(default: {DEFAULT_REL_TOL:g})"
    )
    p.add_argument("--phi-min", type=float, default=None, help="(default: 1e-3)")
    p.add_argument("--phi-max", type=float, default=None, help="(default: 2 * v-plus)")
    p.add_argument("--constraints", choices=["simplex", "merton"], default=None)


def _wave_overrides(args: Any) -> dict[str, Any]:
    lo, hi = args.domain if args.domain is not None else (None, None)
    return {
        "model": args.model,
        "alpha_csv": args.alpha_csv,
        "v_minus": args.v_minus,
        "v_plus": args.v_plus,
        "x_lo": lo,
        "x_hi": hi,
        "horizon": args.horizon,
        "rel_tol": args.rel_tol,
        "phi_min": args.phi_min,
        "phi_max": args.phi_max,
        "constraints": args.constraints,
    }


def _dispatch(args: Any) -> int:
    out = Path(args.out)
    if args.cmd == "alpha":
        alpha_settings = _settings(
            AlphaSettings,
            args,
            {
                "model": args.model,
                "phi_min": args.phi_min,
                "phi_max": args.phi_max,
                "samples": args.samples,
                "constraints": args.constraints,
            },
        )
        alpha_result = run_alpha(alpha_settings, out, breakpoints=args.breakpoints)
        print(f"pieces={len(alpha_result.alpha.pieces)} out={out}")
        return EXIT_OK

    if args.cmd == "solve":
        pde_settings = _settings(
            PdeSettings,
            args,
            {
                "model": args.model,
                "epsilon": args.epsilon,
                "r": args.r,
                "x_lo": args.x_lo,
                "x_hi": args.x_hi,
                "n": args.n,
                "h": args.h,
                "horizon": args.horizon,
                "m": args.m,
                "k_rule": args.k_rule,
                "scheme": args.scheme,
                "tol": args.tol,
                "max_iters": args.max_iters,
                "bc_left": args.bc_left,
                "bc_right": args.bc_right,
                "terminal": args.terminal,
                "constraints": args.constraints,
                "phi_min": args.phi_min,
            },
        )
        solve_result = run_solve(pde_settings, out)
        stats = solve_result.field.stats
        print(
            f"layers={solve_result.field.values.shape[0]} "
            f"max_iterations={stats.max_iterations} out={out}"
        )
        return EXIT_OK

    if args.cmd == "wave":
        wave_settings = _settings(WaveSettings, args, _wave_overrides(args))
        wave_result = run_wave(wave_settings, out, g_samples=args.g_table or 0)
        print(json.dumps(wave_result.benchmark.header()))
        return EXIT_OK

    if args.cmd == "eoc":
        overrides = _wave_overrides(args)
        overrides.update(
            {
                "levels": args.levels,
                "k_rule": args.k_rule,
                "scheme": args.scheme,
                "tol": args.tol,
                "max_iters": args.max_iters,
            }
        )
        eoc_result = run_eoc(_settings(EocSettings, args, overrides), out)
        print(eoc_result.table())
        return EXIT_OK

    if args.cmd == "portfolio":
        portfolio_settings = _settings(
            PortfolioSettings,
            args,
            {
                "model": args.model,
                "prices": args.prices,
                "periods_per_year": args.periods_per_year,
                "a": args.a,
                "epsilon": args.epsilon,
                "r": args.r,
                "horizon": args.horizon,
                "y_lo": args.y_lo,
                "y_hi": args.y_hi,
                "h": args.h,
                "k_rule": args.k_rule,
                "scheme": args.scheme,
                "tol": args.tol,
                "max_iters": args.max_iters,
                "bc_left": args.bc_left,
                "bc_right": args.bc_right,
                "constraints": args.constraints,
                "phi_min": args.phi_min,
                "output_every": args.output_every,
            },
        )
        result = run_pipeline(portfolio_settings, out)
        print(f"assets={result.model.n} layers={result.strategy.times.shape[0]} out={out}")
        return EXIT_OK

    return EXIT_INPUT


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entrypoint.

    Subcommands:
      - alpha --model PATH|dax6 [--phi-min X] [--phi-max X] [--breakpoints]
      - solve --model PATH --x-lo X --x-hi X (--n N | --h H) [--m M | --k-rule RULE] ...
      - wave --model PATH --v-minus V --v-plus V [--domain LO,HI] [--g-table [N]]
      - eoc --model PATH --v-minus V --v-plus V --levels H1,H2,... [--k-rule RULE]
      - portfolio (--model PATH|dax6 | --prices PATH) [--a A] [--output-every K] ...

    Exit codes: 0 on success, 1 on input or configuration errors and 2 on
    numerical failures. Failures print one `error=... stage=... message=...`
    line to standard error.
    """
    parser = _Parser(prog="hjbflow")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_alpha = sub.add_parser("alpha", help="tabulate the value function alpha(phi)")
    _add_common(p_alpha)
    p_alpha.add_argument("--model", default=None, help="model CSV (mu row, Sigma rows) or 'dax6'")
    p_alpha.add_argument("--phi-min", type=float, default=None, help="(default: 1e-3)")
    p_alpha.add_argument("--phi-max", type=float, default=None, help="(default: 10)")
    p_alpha.add_argument("--samples", type=int, default=None, help="(default: 1001)")
    p_alpha.add_argument("--constraints", choices=["simplex", "merton"], default=None)
    p_alpha.add_argument("--breakpoints", action="store_true", help="also write breakpoints.json")

    p_solve = sub.add_parser("solve", help="solve the transformed PDE")
    _add_common(p_solve)
    p_solve.add_argument("--model", default=None, help="model CSV (mu row, Sigma rows) or 'dax6'")
    p_solve.add_argument("--epsilon", type=float, default=None, help="(default: 0)")
    p_solve.add_argument("--r", type=float, default=None, help="(default: 0)")
    p_solve.add_argument("--x-lo", type=float, default=None)
    p_solve.add_argument("--x-hi", type=float, default=None)
    p_solve.add_argument("--n", type=int, default=None, help="interior cells")
    p_solve.add_argument("--h", type=float, default=None, help="target cell width")
    p_solve.add_argument("--T", dest="horizon", type=float, default=None, help="(default: 10)")
    p_solve.add_argument("--m", type=int, default=None, help="time steps")
    p_solve.add_argument("--k-rule", default=None, help="'c*h' or 'c*h^2' (default: 0.1*h)")
    _add_solver_flags(p_solve)
    p_solve.add_argument("--bc-left", default=None, help="dirichlet:<file>|robin:<d>|neumann")
    p_solve.add_argument("--bc-right", default=None, help="dirichlet:<file>|robin:<d>|neumann")
    p_solve.add_argument("--terminal", default=None, help="cara:<a>|csv:<file> (default: cara:9)")
    p_solve.add_argument("--constraints", choices=["simplex", "merton"], default=None)
    p_solve.add_argument("--phi-min", type=float, default=None, help="(default: 1e-3)")

    p_wave = sub.add_parser("wave", help="build the traveling-wave benchmark")
    _add_common(p_wave)
    _add_wave_flags(p_wave)
    p_wave.add_argument(
        "--g-table",
        type=int,
        nargs="?",
        const=DEFAULT_G_SAMPLES,
        default=None,
        help=f"also write g_table.csv with N samples (default N: {DEFAULT_G_SAMPLES})",
    )

    p_eoc = sub.add_parser("eoc", help="convergence study against the traveling wave")
    _add_common(p_eoc)
    _add_wave_flags(p_eoc)
    p_eoc.add_argument("--levels", type=_floats, default=None, help="(default: 0.1,0.05,...)")
    p_eoc.add_argument("--k-rule", default=None, help="(default: 0.1*h)")
    _add_solver_flags(p_eoc)

    p_port = sub.add_parser("portfolio", help="optimal strategy surface from market data")
    _add_common(p_port)
    p_port.add_argument("--model", default=None, help="model CSV (mu row, Sigma rows) or 'dax6'")
    p_port.add_argument("--prices", default=None, help="price CSV: date,<ticker>...")
    p_port.add_argument("--periods-per-year", type=float, default=None, help="(default: 252)")
    p_port.add_argument("--a", type=float, default=None, help="risk aversion (default: 9)")
    p_port.add_argument("--epsilon", type=float, default=None, help="(default: 1)")
    p_port.add_argument("--r", type=float, default=None, help="(default: 0)")
    p_port.add_argument("--T", dest="horizon", type=float, default=None, help="(default: 10)")
    p_port.add_argument("--y-lo", type=float, default=None, help="(default: 0.01)")
    p_port.add_argument("--y-hi", type=float, default=None, help="(default: 10)")
    p_port.add_argument("--h", type=float, default=None, help="(default: 0.1)")
    p_port.add_argument("--k-rule", default=None, help="(default: 0.1*h^2)")
    _add_solver_flags(p_port)
    p_port.add_argument("--bc-left", default=None, help="(default: robin:1)")
    p_port.add_argument("--bc-right", default=None, help="(default: neumann)")
    p_port.add_argument("--constraints", choices=["simplex", "merton"], default=None)
    p_port.add_argument("--phi-min", type=float, default=None, help="(default: 1e-3)")
    p_port.add_argument("--output-every", type=int, default=None, help="(default: 1)")

    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _report_usage(str(exc))
        return EXIT_INPUT

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return _dispatch(args)
    except ValidationError as exc:
        print(
            f"error=ValidationError stage=config message={_validation_message(exc)}",
            file=sys.stderr,
        )
        return EXIT_INPUT
    except PipelineStageError as exc:
        cause = exc.__cause__ if exc.__cause__ is not None else exc
        _report(cause, exc.stage)
        return EXIT_NUMERICAL if isinstance(cause, NUMERICAL_FAILURES) else EXIT_INPUT
    except (OSError, ValueError) as exc:
        _report(exc, "config")
        return EXIT_INPUT
