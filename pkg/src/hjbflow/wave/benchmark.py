"""Traveling-wave solutions phi(x, t) = v(x + c (T - t)) for epsilon = r = 0.

With z = alpha(v) the profile solves z' = K0 + c v - z + z v, v = alpha^-1(z),
connecting z+ = alpha(v+) at -infinity to z- = alpha(v-) at +infinity. The free
shift is fixed by z(0) = (z- + z+) / 2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.interpolate import CubicHermiteSpline

from hjbflow.alpha.piecewise import PiecewiseAlpha, alpha_inverse
from hjbflow.core.errors import InvalidLimitsError, OutOfRangeError
from hjbflow.core.market import FloatArray
from hjbflow.wave.rk4 import Trajectory, integrate_adaptive

_log = logging.getLogger("hjbflow.wave.benchmark")

DEFAULT_REL_TOL = 1e-8
MAX_STEP = 0.02
# Limits closer than this to a breakpoint are outside the smooth set.
BREAKPOINT_CLEARANCE = 1e-8
# Distance to z+- at which the orbit is treated as arrived.
ARRIVAL_TOL = 1e-12
# Largest |v - v+-| left at either end of the sampled range.
SETTLE_TOL = 1e-3
# Length of each continuation past the requested range, and the cap on their sum.
EXTENSION_CHUNK = 0.5
MAX_EXTENSION = 50.0
_XI_SLACK = 1e-12


def g_function(alpha: PiecewiseAlpha, c: float, K0: float, v: FloatArray) -> FloatArray:
    """G(v) = K0 + c v - alpha(v) (1 - v); its roots are the wave limits."""
    v = np.asarray(v, dtype=np.float64)
    value, _ = alpha.evaluate(v)
    return np.asarray(K0 + c * v - value * (1.0 - v))


def wave_parameters(alpha: PiecewiseAlpha, v_minus: float, v_plus: float) -> tuple[float, float]:
    """Speed c and intercept K0 making v- and v+ roots of G."""
    if not 0.0 < v_minus < v_plus:
        raise InvalidLimitsError(f"need 0 < v_minus < v_plus, got ({v_minus}, {v_plus})")
    for v in (v_minus, v_plus):
        if not alpha.covers(v):
            raise InvalidLimitsError(
                f"limit {v} outside alpha's domain ({alpha.phi_min}, {alpha.phi_max}]"
            )
        for bp in alpha.breakpoints:
            if abs(v - bp) < BREAKPOINT_CLEARANCE:
                raise InvalidLimitsError(f"limit {v} sits on the breakpoint {bp}")
    values, _ = alpha.evaluate(np.array([v_minus, v_plus]))
    h_minus = float(values[0]) * (1.0 - v_minus)
    h_plus = float(values[1]) * (1.0 - v_plus)
    c = (h_plus - h_minus) / (v_plus - v_minus)
    K0 = -c * v_plus + h_plus
    return c, K0


def ode_rhs(alpha: PiecewiseAlpha, c: float, K0: float, z: float) -> float:
    """F(z) = K0 + c alpha^-1(z) - z + z alpha^-1(z)."""
    v = alpha_inverse(alpha, z)
    return K0 + c * v - z + z * v


@dataclass(frozen=True, eq=False)
class ProfileSamples:
    xi: FloatArray
    z: FloatArray
    dz: FloatArray
    v: FloatArray


def integrate_profile(
    alpha: PiecewiseAlpha,
    c: float,
    K0: float,
    v_minus: float,
    v_plus: float,
    xi_lo: float,
    xi_hi: float,
    rel_tol: float = DEFAULT_REL_TOL,
    settle_tol: float = SETTLE_TOL,
) -> ProfileSamples:
    """Integrate from the anchor xi = 0 forward to xi_hi and backward to xi_lo.

    Integration stops where the orbit is within ARRIVAL_TOL of its limit; the
    samples end there and evaluation beyond them returns the limit. A leg that
    reaches its end with v farther than settle_tol from the limit is continued
    in EXTENSION_CHUNK pieces, so the sampled range may exceed [xi_lo, xi_hi].
    """
    if not xi_lo < xi_hi:
        raise InvalidLimitsError(f"need xi_lo < xi_hi, got ({xi_lo}, {xi_hi})")
    z_minus = alpha.value(v_minus)
    z_plus = alpha.value(v_plus)
    span = z_plus - z_minus

    def rhs(z: float) -> float:
        return ode_rhs(alpha, c, K0, min(max(z, z_minus), z_plus))

    def arrived(z: float) -> bool:
        return z - z_minus < ARRIVAL_TOL or z_plus - z < ARRIVAL_TOL

    def leg(end: float, direction: float, v_limit: float) -> tuple[Trajectory, int]:
        traj = integrate_adaptive(rhs, z0, end, rel_tol, span, MAX_STEP, arrived)
        ts, zs, dzs = [traj.t], [traj.y], [traj.dy]
        rejected, stopped = traj.rejected, traj.stopped
        t_last, z_last = float(traj.t[-1]), float(traj.y[-1])
        pushed = 0.0
        while not stopped and abs(alpha.inverse(z_last) - v_limit) > settle_tol:
            if pushed >= MAX_EXTENSION:
                if _log.isEnabledFor(logging.WARNING):
                    _log.warning(
                        "wave profile not within %.1e of %.6g after extending to xi=%.6g",
                        settle_tol,
                        v_limit,
                        t_last,
                    )
                break
            more = integrate_adaptive(
                rhs, z_last, direction * EXTENSION_CHUNK, rel_tol, span, MAX_STEP, arrived
            )
            ts.append(t_last + more.t[1:])
            zs.append(more.y[1:])
            dzs.append(more.dy[1:])
            rejected += more.rejected
            stopped = more.stopped
            t_last += float(more.t[-1])
            z_last = float(more.y[-1])
            pushed += EXTENSION_CHUNK
        joined = Trajectory(
            t=np.concatenate(ts),
            y=np.concatenate(zs),
            dy=np.concatenate(dzs),
            stopped=stopped,
            rejected=rejected,
        )
        return joined, int(pushed / EXTENSION_CHUNK)

    z0 = 0.5 * (z_minus + z_plus)
    back, back_chunks = leg(min(xi_lo, 0.0), -1.0, v_plus)
    fwd, fwd_chunks = leg(max(xi_hi, 0.0), 1.0, v_minus)
    xi = np.concatenate([back.t[::-1], fwd.t[1:]])
    z = np.clip(np.concatenate([back.y[::-1], fwd.y[1:]]), z_minus, z_plus)
    dz = np.concatenate([back.dy[::-1], fwd.dy[1:]])
    v = alpha.inverse_many(z)
    if _log.isEnabledFor(logging.INFO):
        _log.info(
            "wave profile: c=%.10g, K0=%.10g, samples=%d, xi=[%.6g, %.6g], "
            "rejected=%d, extensions=%d/%d",
            c,
            K0,
            xi.shape[0],
            xi[0],
            xi[-1],
            back.rejected + fwd.rejected,
            back_chunks,
            fwd_chunks,
        )
    return ProfileSamples(xi=xi, z=z, dz=dz, v=v)


@dataclass(frozen=True, eq=False)
class WaveBenchmark:
    v_minus: float
    v_plus: float
    c: float
    K0: float
    alpha: PiecewiseAlpha
    samples: ProfileSamples
    xi_lo: float
    xi_hi: float
    _spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self) -> None:
        s = self.samples
        object.__setattr__(self, "_spline", CubicHermiteSpline(s.xi, s.z, s.dz))

    @property
    def z_minus(self) -> float:
        return self.alpha.value(self.v_minus)

    @property
    def z_plus(self) -> float:
        return self.alpha.value(self.v_plus)

    def profile(self, xi: FloatArray) -> FloatArray:
        """v(xi) on [xi_lo, xi_hi]; constant continuation past the integrated range."""
        xi = np.asarray(xi, dtype=np.float64)
        if np.any(xi < self.xi_lo - _XI_SLACK) or np.any(xi > self.xi_hi + _XI_SLACK):
            raise OutOfRangeError(
                f"xi outside the sampled profile range [{self.xi_lo}, {self.xi_hi}]"
            )
        first, last = self.samples.xi[0], self.samples.xi[-1]
        z = self._spline(np.clip(xi, first, last))
        z = np.where(xi > last, self.z_minus, np.where(xi < first, self.z_plus, z))
        return self.alpha.inverse_many(np.clip(z, self.z_minus, self.z_plus))

    def exact(self, x: FloatArray, tau: float) -> FloatArray:
        """phi at backward time t = T - tau, as a function of forward time."""
        return self.profile(np.asarray(x, dtype=np.float64) + self.c * tau)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"xi": self.samples.xi, "v": self.samples.v})

    def header(self) -> dict[str, float]:
        return {
            "c": self.c,
            "K0": self.K0,
            "z_minus": self.z_minus,
            "z_plus": self.z_plus,
            "v_minus": self.v_minus,
            "v_plus": self.v_plus,
        }


def build_wave_benchmark(
    alpha: PiecewiseAlpha,
    v_minus: float,
    v_plus: float,
    x_lo: float,
    x_hi: float,
    horizon: float,
    rel_tol: float = DEFAULT_REL_TOL,
) -> WaveBenchmark:
    """Benchmark covering every xi = x + c (T - t) reached on [x_lo, x_hi] x [0, T].

    The range is widened to the sampled one when a leg had to be continued
    before the profile settled near its limit.
    """
    c, K0 = wave_parameters(alpha, v_minus, v_plus)
    shift = c * horizon
    xi_lo = x_lo + min(0.0, shift)
    xi_hi = x_hi + max(0.0, shift)
    samples = integrate_profile(alpha, c, K0, v_minus, v_plus, xi_lo, xi_hi, rel_tol)
    xi_lo = min(xi_lo, float(samples.xi[0]))
    xi_hi = max(xi_hi, float(samples.xi[-1]))
    return WaveBenchmark(
        v_minus=v_minus,
        v_plus=v_plus,
        c=c,
        K0=K0,
        alpha=alpha,
        samples=samples,
        xi_lo=xi_lo,
        xi_hi=xi_hi,
    )


def wave_solution_at(benchmark: WaveBenchmark, x: float, t: float, T: float) -> float:
    return float(benchmark.profile(np.array([x + benchmark.c * (T - t)]))[0])


def wave_residual(benchmark: WaveBenchmark, h: float, tau: float) -> float:
    """Max residual of phi_tau = alpha(phi)_xx + (alpha(phi)(1 - phi))_x on interior points.

    Central differences of width h in x and in tau; evaluated on the part of the
    x-range whose stencil stays inside the sampled profile.
    """
    lo = benchmark.xi_lo - benchmark.c * tau + 2.0 * h + abs(benchmark.c) * h
    hi = benchmark.xi_hi - benchmark.c * tau - 2.0 * h - abs(benchmark.c) * h
    x = np.arange(lo, hi, h)

    def phi(xs: FloatArray, t: float) -> FloatArray:
        return benchmark.exact(xs, t)

    centre = phi(x, tau)
    time_deriv = (phi(x, tau + h) - phi(x, tau - h)) / (2.0 * h)
    alpha_c, _ = benchmark.alpha.evaluate(centre)
    alpha_l, _ = benchmark.alpha.evaluate(phi(x - h, tau))
    alpha_r, _ = benchmark.alpha.evaluate(phi(x + h, tau))
    left = phi(x - h, tau)
    right = phi(x + h, tau)
    diffusion = (alpha_r - 2.0 * alpha_c + alpha_l) / (h * h)
    advection = (alpha_r * (1.0 - right) - alpha_l * (1.0 - left)) / (2.0 * h)
    return float(np.max(np.abs(time_deriv - diffusion - advection)))


def g_table(
    alpha: PiecewiseAlpha, c: float, K0: float, v_lo: float, v_hi: float, samples: int = 201
) -> pd.DataFrame:
    v = np.linspace(v_lo, v_hi, samples)
    return pd.DataFrame({"v": v, "G": g_function(alpha, c, K0, v)})
