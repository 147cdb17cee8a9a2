"""Causal response functions of the damped charger-battery pair.

G(t) is the impulse response of  x'' + gamma x' + f**2 x = 0  with
x(0) = 0, x'(0) = 1, switched on at t = 0. The battery amplitude is the
convolution of G with the pulse; the charger amplitude uses G'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .params import EP_TOL, Regime, RegimeData, SystemParams, classify_regime

__all__ = [
    "GreensEval",
    "green",
    "green_sq_integral",
    "green_sq_integral_quadrature",
    "poles",
    "slowest_rate",
    "tail_horizon",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class GreensEval:
    g: float | np.ndarray
    g_prime: float | np.ndarray
    regime_used: Regime


def poles(params: SystemParams, ep_tol: float = EP_TOL) -> tuple[complex, complex]:
    """The two poles r+ and r- of the response (complex when underdamped)."""
    reg = classify_regime(params, ep_tol)
    if reg.regime is Regime.EXCEPTIONAL_POINT:
        r = -0.5 * reg.gamma
        return complex(r), complex(r)
    if reg.regime is Regime.UNDERDAMPED:
        return complex(-0.5 * reg.gamma, reg.omega_rabi), complex(-0.5 * reg.gamma, -reg.omega_rabi)
    rp, rm = reg.roots
    return complex(rp), complex(rm)


def slowest_rate(params: SystemParams, ep_tol: float = EP_TOL) -> float:
    """Smallest decay rate |Re r| among the poles; G decays like exp(-rate t)."""
    return min(-r.real for r in poles(params, ep_tol))


def tail_horizon(params: SystemParams, ep_tol: float = EP_TOL) -> float:
    """Time after which |G|**2 has decayed by exp(-TAIL_CUTOFF) relative to its scale.

    Equals TAIL_CUTOFF / gamma away from the overdamped regime; there the slow
    pole r+ ~ -f**2/gamma sets the horizon instead.
    """
    from .numerics import TAIL_CUTOFF

    return 0.5 * TAIL_CUTOFF / slowest_rate(params, ep_tol)


def _response(reg: RegimeData, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gamma = reg.gamma
    causal = t >= 0
    tc = np.where(causal, t, 0.0)
    decay = np.exp(-0.5 * gamma * tc)
    if reg.regime is Regime.EXCEPTIONAL_POINT:
        g = tc * decay
        gp = decay * (1.0 - 0.5 * gamma * tc)
    elif reg.regime is Regime.UNDERDAMPED:
        om = reg.omega_rabi
        s, c = np.sin(om * tc), np.cos(om * tc)
        g = decay * s / om
        gp = decay * (c - 0.5 * gamma * s / om)
    else:
        # exponential-difference form: no sinh overflow, no 1/sqrt(kappa) cancellation
        root = math.sqrt(reg.kappa)
        rp, rm = reg.roots
        lead = np.exp(rp * tc)
        em1 = np.expm1(-root * tc)
        g = -lead * em1 / root
        gp = lead * (1.0 - rm * em1 / root)
    return np.where(causal, g, 0.0), np.where(causal, gp, 0.0)


def green(params: SystemParams, t: float | np.ndarray, ep_tol: float = EP_TOL) -> GreensEval:
    """Evaluate G(t) and G'(t); both vanish for t < 0.

    Inside the exceptional-point band the EP closed form is used.
    """
    reg = classify_regime(params, ep_tol)
    arr = np.asarray(t, dtype=float)
    g, gp = _response(reg, arr)
    if arr.ndim == 0:
        return GreensEval(float(g), float(gp), reg.regime)
    return GreensEval(g, gp, reg.regime)


def _sq_integral_closed(reg: RegimeData, params: SystemParams, upper: np.ndarray) -> np.ndarray:
    gamma = reg.gamma
    if reg.regime is Regime.EXCEPTIONAL_POINT:
        full = 2.0 / gamma**3
        return np.where(np.isinf(upper), full, full * special.gammainc(3, gamma * np.where(np.isinf(upper), 0.0, upper)))
    rp, rm = poles(params)
    u = np.where(np.isinf(upper), 1.0, upper)

    def piece(c: complex) -> np.ndarray:
        finite = np.expm1(c * u) / c
        return np.where(np.isinf(upper), -1.0 / c, finite)

    total = piece(2 * rp) - 2.0 * piece(rp + rm) + piece(2 * rm)
    return (total / reg.kappa).real


def _sq_integral_gauss(reg: RegimeData, upper: np.ndarray) -> np.ndarray:
    # G**2 is entire; on short intervals a fixed 32-point rule is exact to rounding
    half = 0.5 * upper[..., None]
    nodes = half * (_GL_NODES + 1.0)
    g, _ = _response(reg, nodes)
    return np.sum(_GL_WEIGHTS * g * g, axis=-1) * half[..., 0]


def green_sq_integral(
    params: SystemParams, upper: float | np.ndarray, ep_tol: float = EP_TOL
) -> float | np.ndarray:
    """Integral of G(u)**2 over [0, upper]; ``upper`` may be ``inf``.

    The infinite-horizon value is 1 / (2 gamma f**2) in every regime, so that
    f**2 Gamma times it equals Gamma / (Gamma + Gamma_perp).
    """
    reg = classify_regime(params, ep_tol)
    arr = np.asarray(upper, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("upper limit must be >= 0")
    scale = reg.gamma + math.sqrt(abs(reg.kappa))
    short = np.isfinite(arr) & (arr * scale < 2.0)
    out = _sq_integral_closed(reg, params, np.where(short, np.inf, arr))
    if np.any(short):
        out = np.where(short, _sq_integral_gauss(reg, np.where(short, arr, 0.0)), out)
    return float(out) if out.ndim == 0 else out


def green_sq_integral_quadrature(
    params: SystemParams, upper: float, tol: float = 1e-13, ep_tol: float = EP_TOL
) -> float:
    """Adaptive-quadrature evaluation of the same integral (independent route).

    An infinite upper limit is truncated at :func:`tail_horizon`; the
    neglected tail is below exp(-TAIL_CUTOFF) times a polynomial.
    """
    from .numerics import integrate

    reg = classify_regime(params, ep_tol)
    if math.isinf(upper):
        upper = tail_horizon(params, ep_tol)
    if upper <= 0:
        return 0.0

    def sq(u: float) -> float:
        g, _ = _response(reg, np.asarray(u))
        return float(g) ** 2

    return float(integrate(sq, 0.0, upper, tol=tol).value)
