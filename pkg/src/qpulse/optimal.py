"""Matched-filter optimal pulse, saturation bound, minimum charging time and power-optimal duration.

For a pulse confined to a window of length T that ends at tau = 0, the
battery population at tau = 0 is an inner product of the envelope with the
time-reversed response G(-tau). The truncated time-reversed response is the
best envelope for every window, so the attainable population is

    p(T) = f**2 Gamma * int_0^T G(u)**2 du,

which saturates at Gamma / (Gamma + Gamma_perp).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoInteriorMaximum, ThresholdUnreachable
from .greens import green, green_sq_integral, green_sq_integral_quadrature, tail_horizon
from .numerics import RootResult, find_root
from .params import Regime, SystemParams, classify_regime
from .pulses import OptimalTruncated

__all__ = [
    "ChargingBound",
    "MinTimeResult",
    "PowerResult",
    "optimal_pulse",
    "charging_bound",
    "p_of_duration",
    "p_rate",
    "min_time",
    "min_time_ep_closed_form",
    "power_optimal",
    "ep_power_constants",
]

BOUND_TOL = 1e-6
ROOT_TOL = 1e-12


@dataclass(frozen=True)
class ChargingBound:
    bound: float
    kernel_norm_sq: float


@dataclass(frozen=True)
class MinTimeResult:
    """Shortest window reaching a population threshold.

    ``closed_form_t_min`` is filled only at the exceptional point, where the
    threshold condition reduces to exp(-x)(1 + x + x**2/2) = 1 - q.
    """

    t_min: float
    p_threshold: float
    solver: RootResult
    asymptotic_estimate: float
    q: float
    closed_form_t_min: float | None = None


@dataclass(frozen=True)
class PowerResult:
    """Window length maximizing p(T) / T.

    ``candidates`` lists every stationary point that is a local maximum of
    the power, as (T, p(T)/T) pairs in increasing T.
    """

    t_star: float
    p_at_star: float
    power: float
    x_star: float
    solver: RootResult
    candidates: tuple[tuple[float, float], ...]


def optimal_pulse(params: SystemParams, truncation: float) -> OptimalTruncated:
    """Time-reversed response of ``params`` on [-truncation, 0], unit norm."""
    return OptimalTruncated(truncation, params)


def charging_bound(params: SystemParams, check: bool = True) -> ChargingBound:
    """Saturation population Gamma / (Gamma + Gamma_perp) and the numerically integrated kernel norm."""
    bound = params.bound
    kernel = params.coupling**2 * params.gamma_pulse * green_sq_integral_quadrature(params, math.inf)
    if check and not abs(kernel - bound) <= BOUND_TOL:
        raise AssertionError(f"kernel norm {kernel!r} disagrees with bound {bound!r}")
    return ChargingBound(bound, kernel)


def p_of_duration(params: SystemParams, duration, method: str = "closed"):
    """Population reached at tau = 0 by the optimal pulse of the given duration.

    ``method="closed"`` uses the exact integral of G**2 (vectorized over
    ``duration``); ``method="quadrature"`` integrates G**2 adaptively.
    """
    scale = params.coupling**2 * params.gamma_pulse
    if method == "closed":
        value = green_sq_integral(params, duration)
    elif method == "quadrature":
        value = green_sq_integral_quadrature(params, float(duration))
    else:
        raise ValueError(f"unknown method {method!r}")
    return scale * value


def p_rate(params: SystemParams, duration):
    """dp/dT = f**2 Gamma G(T)**2."""
    g = np.asarray(green(params, duration).g)
    out = params.coupling**2 * params.gamma_pulse * g * g
    return float(out) if out.ndim == 0 else out


def min_time_ep_closed_form(params: SystemParams, p_th: float, tol: float = ROOT_TOL) -> RootResult:
    """Solve exp(-x)(1 + x + x**2/2) = 1 - q for x = gamma T (exceptional point only)."""
    q = p_th / params.bound
    target = 1.0 - q

    def g(x: float) -> float:
        return math.exp(-x) * (1.0 + x + 0.5 * x * x) - target

    hi = 10.0
    while g(hi) > 0:
        hi *= 2.0
    return find_root(g, 0.0, hi, tol)


def min_time(
    params: SystemParams,
    p_th: float,
    method: str = "closed",
    tol: float = ROOT_TOL,
) -> MinTimeResult:
    """Minimum pulse duration whose optimal envelope reaches population ``p_th``.

    The monotone p(T) is bracketed on [0, X / gamma] with X doubling from 10.

    Raises
    ------
    ThresholdUnreachable
        If ``p_th`` is not strictly below the saturation bound.
    """
    bound = params.bound
    if not 0.0 < p_th < bound:
        raise ThresholdUnreachable(
            f"threshold {p_th!r} must lie strictly between 0 and the bound {bound!r}"
        )
    gamma = params.gamma
    q = p_th / bound

    def g(T: float) -> float:
        return float(p_of_duration(params, T, method)) - p_th

    x_hi = 10.0
    while g(x_hi / gamma) <= 0.0:
        x_hi *= 2.0
        if x_hi > 1e6:  # pragma: no cover - q < 1 guarantees termination
            raise ThresholdUnreachable(f"threshold {p_th!r} not reached within {x_hi / gamma} time units")
    solver = find_root(g, 0.0, x_hi / gamma, tol)
    closed = None
    if classify_regime(params).regime is Regime.EXCEPTIONAL_POINT:
        closed = min_time_ep_closed_form(params, p_th, tol).root / gamma
    return MinTimeResult(
        t_min=solver.root,
        p_threshold=p_th,
        solver=solver,
        asymptotic_estimate=math.log(1.0 / (1.0 - q)) / gamma,
        q=q,
        closed_form_t_min=closed,
    )


def ep_power_constants(tol: float = ROOT_TOL) -> tuple[float, float, float]:
    """(x*, p(T*)/bound, P*/(gamma bound)) at the exceptional point.

    x* is the non-trivial root of exp(x) = 1 + x + x**2/2 + x**3/2.
    """
    root = find_root(lambda x: math.exp(-x) * (1 + x + x * x / 2 + x**3 / 2) - 1.0, 1.0, 6.0, tol).root
    ratio = 1.0 - math.exp(-root) * (1.0 + root + 0.5 * root * root)
    return root, ratio, ratio / root


def power_optimal(
    params: SystemParams,
    x_range: tuple[float, float] = (1e-3, None),
    scan_points: int = 4000,
    tol: float = ROOT_TOL,
) -> PowerResult:
    """Duration T* maximizing the charging power p(T) / T.

    Stationary points satisfy p'(T) T = p(T). The stationarity residual is
    scanned on a log grid in x = gamma T; every sign change from + to -
    (a local power maximum) is refined by root finding and the best one is
    returned. Under Rabi oscillations there may be several.

    Raises
    ------
    NoInteriorMaximum
        If no local maximum can be bracketed.
    """
    gamma = params.gamma
    x_lo, x_hi = x_range
    if x_hi is None:
        x_hi = max(200.0, 2.0 * gamma * tail_horizon(params))
    xs = np.geomspace(x_lo, x_hi, scan_points)
    Ts = xs / gamma

    def h(T: float) -> float:
        return float(p_rate(params, T)) * T - float(p_of_duration(params, T))

    # p'(T) T - p(T) scaled by 1/T**3 keeps the scan well conditioned near 0
    hs = (np.asarray(p_rate(params, Ts)) * Ts - np.asarray(p_of_duration(params, Ts))) / Ts**3
    changes = np.nonzero((hs[:-1] > 0) & (hs[1:] <= 0))[0]
    if changes.size == 0:
        raise NoInteriorMaximum("no sign change of p'(T) T - p(T) found on the scan grid")

    candidates = []
    solvers = []
    for i in changes:
        sol = find_root(lambda x: h(x / gamma) / (x / gamma) ** 3, xs[i], xs[i + 1], tol)
        T = sol.root / gamma
        candidates.append((T, float(p_of_duration(params, T)) / T))
        solvers.append(sol)
    best = int(np.argmax([c[1] for c in candidates]))
    t_star, power = candidates[best]
    sol = solvers[best]
    p_star = float(p_of_duration(params, t_star))
    return PowerResult(
        t_star=t_star,
        p_at_star=p_star,
        power=power,
        x_star=gamma * t_star,
        solver=sol,
        candidates=tuple(candidates),
    )
