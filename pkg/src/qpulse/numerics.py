"""Quadrature, bracketed root finding and error-function kernels.

Thin contracts over QUADPACK (``scipy.integrate.quad``), Brent's method
(``scipy.optimize.brentq``) and the Faddeeva function
(``scipy.special.wofz``), with the result records and failure modes the rest
of the package relies on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize
from scipy import special as _special

from .errors import MaxSubdivisions, NoSignChange, RootNotConverged

__all__ = [
    "QuadratureResult",
    "RootResult",
    "SolverReport",
    "integrate",
    "find_root",
    "erfc_real",
    "faddeeva",
    "erf_complex",
    "erfc_complex",
    "TAIL_CUTOFF",
]

#: Improper integrals over exponentially damped integrands stop at TAIL_CUTOFF / rate.
TAIL_CUTOFF = 40.0

_QUAD_LIMIT = 500


@dataclass(frozen=True)
class QuadratureResult:
    value: float | complex
    abs_error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class RootResult:
    """Outcome of a bracketed root solve.

    ``bracket`` is a sign-change interval certified after convergence; its
    width is at most ``tol * max(1, |root|)``.
    """

    root: float
    residual: float
    bracket: tuple[float, float]
    iterations: int


SolverReport = RootResult


def _quad_real(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    points: Sequence[float] | None,
) -> tuple[float, float, int]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        out = _integrate.quad(
            f,
            a,
            b,
            epsabs=tol,
            epsrel=tol,
            limit=_QUAD_LIMIT,
            points=points,
            full_output=1,
        )
    value, err, info = out[0], out[1], out[2]
    ier = 0 if len(out) == 3 else 1
    if ier:
        message = out[3]
        target = max(tol, tol * abs(value))
        if "maximum number of subdivisions" in message or not err <= 10.0 * target:
            raise MaxSubdivisions(
                f"quadrature on [{a}, {b}] stalled at error {err:.3g} "
                f"(target {target:.3g}): {message.strip()}"
            )
    return float(value), float(err), int(info["neval"])


def integrate(
    f: Callable[[float], float | complex],
    a: float,
    b: float,
    tol: float = 1e-10,
    points: Sequence[float] | None = None,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    Complex integrands are detected from a probe evaluation and integrated
    component-wise. ``points`` lists interior breakpoints (discontinuities of
    the integrand) at which the interval is split before subdivision starts.

    Raises
    ------
    MaxSubdivisions
        If the error target cannot be met within the panel budget.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        if a == b:
            return QuadratureResult(0.0, 0.0, 1)
        raise ValueError(f"integration interval must satisfy a < b, got [{a}, {b}]")
    if points is not None:
        points = sorted({float(p) for p in points if a < p < b}) or None

    probe = f(0.5 * (a + b))
    if np.iscomplexobj(probe):
        re, err_re, n_re = _quad_real(lambda x: complex(f(x)).real, a, b, tol, points)
        im, err_im, n_im = _quad_real(lambda x: complex(f(x)).imag, a, b, tol, points)
        return QuadratureResult(complex(re, im), math.hypot(err_re, err_im), n_re + n_im)
    value, err, n = _quad_real(f, a, b, tol, points)
    return QuadratureResult(value, err, n)


def find_root(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    maxiter: int = 200,
) -> RootResult:
    """Root of ``g`` inside a sign-change bracket ``[lo, hi]``.

    Brent's method is run to machine resolution; a final sign-change interval
    of width ``tol * max(1, |root|)`` around the root is certified and
    returned with the residual.

    Raises
    ------
    NoSignChange
        If ``g(lo)`` and ``g(hi)`` do not have opposite signs.
    RootNotConverged
        If ``|g(root)| > tol``.
    """
    lo = float(lo)
    hi = float(hi)
    if lo > hi:
        lo, hi = hi, lo
    g_lo = float(g(lo))
    g_hi = float(g(hi))
    if g_lo == 0.0:
        return RootResult(lo, 0.0, (lo, lo), 0)
    if g_hi == 0.0:
        return RootResult(hi, 0.0, (hi, hi), 0)
    if not (g_lo * g_hi < 0.0):
        raise NoSignChange(
            f"g({lo})={g_lo:.6g} and g({hi})={g_hi:.6g} do not bracket a root"
        )

    root, info = _optimize.brentq(
        g, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps,
        maxiter=maxiter, full_output=True, disp=False,
    )
    residual = float(g(root))
    if residual == 0.0:
        bracket = (root, root)
    else:
        half = 0.5 * tol * max(1.0, abs(root))
        a, b = max(lo, root - half), min(hi, root + half)
        g_a, g_b = float(g(a)), float(g(b))
        if g_a * g_b <= 0.0:
            bracket = (a, b)
        else:
            # the root sits within a few ulps of a bracket end
            bracket = (a, root) if g_a * residual <= 0.0 else (root, b)
    if not abs(residual) <= tol:
        raise RootNotConverged(
            f"root {root!r} has residual {residual:.3g} exceeding tolerance {tol:.3g}"
        )
    return RootResult(float(root), residual, bracket, int(info.iterations))


def erfc_real(x: float | np.ndarray) -> float | np.ndarray:
    """Complementary error function of a real argument."""
    return _special.erfc(x)


def faddeeva(z: complex | np.ndarray) -> complex | np.ndarray:
    """Faddeeva function w(z) = exp(-z**2) erfc(-i z)."""
    return _special.wofz(z)


def erfc_complex(z: complex | np.ndarray) -> complex | np.ndarray:
    """erfc of a complex argument through the Faddeeva function."""
    z = np.asarray(z, dtype=complex)
    # erfc(z) = exp(-z**2) w(i z); reflect for Re z < 0 so w stays in the upper half-plane.
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(
            z.real >= 0,
            np.exp(-z * z) * _special.wofz(1j * z),
            2.0 - np.exp(-z * z) * _special.wofz(-1j * z),
        )
    return out[()] if out.ndim == 0 else out


def erf_complex(z: complex | np.ndarray) -> complex | np.ndarray:
    return 1.0 - erfc_complex(z)
