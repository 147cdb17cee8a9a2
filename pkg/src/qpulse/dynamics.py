"""Battery and charger amplitudes for an arbitrary single-photon envelope.

Three independent routes compute the pair (alpha0, alpha1) of charger-excited
and battery-excited amplitudes:

* closed forms, exact for square, decaying-exponential, Gaussian, delta and
  truncated-optimal envelopes;
* convolution of the response functions with the envelope by adaptive
  quadrature, valid for any pointwise envelope;
* direct integration of the amplitude ODEs, the brute-force oracle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate as _sp_integrate
from scipy import optimize as _sp_optimize

from ._exppoly import poly_exp_integral
from .errors import LedgerViolation, StepSizeUnderflow, UnsupportedShape
from .greens import green, poles
from .numerics import faddeeva, integrate
from .params import Regime, SystemParams, classify_regime
from .pulses import (
    Delta,
    DecayExp,
    Gaussian,
    OptimalTruncated,
    PulseSpec,
    Sampled,
    Square,
    breakpoints,
    nominal_window,
    pulse_norm,
    pulse_value,
    support,
)

__all__ = [
    "LEDGER_TOL",
    "Method",
    "AmplitudeTrace",
    "NormLedger",
    "default_grid",
    "ergotropy",
    "energy_and_ergotropy",
    "closed_form_amplitudes",
    "amplitude_closed_form",
    "closed_form_trace",
    "amplitude_convolution",
    "amplitude_ode_oracle",
    "simulate",
    "norm_ledger",
    "ledger_trace",
    "peak_excitation",
]

LEDGER_TOL = 1e-5
DEFAULT_POINTS = 400


class Method(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    CONVOLUTION = "Convolution"
    ODE_ORACLE = "OdeOracle"


@dataclass(frozen=True, eq=False)
class AmplitudeTrace:
    """Amplitudes on a time grid with stored energy and ergotropy."""

    times: np.ndarray
    alpha0: np.ndarray
    alpha1: np.ndarray
    energy: np.ndarray
    ergotropy: np.ndarray
    method: Method

    @property
    def population(self) -> np.ndarray:
        """Battery excited-state population |alpha1|**2."""
        return np.abs(self.alpha1) ** 2


@dataclass(frozen=True)
class NormLedger:
    """Where the single excitation sits at one instant."""

    p_tls: float
    p_battery: float
    p_emitted_pulse: float
    p_emitted_env: float
    total: float


def ergotropy(population: float | np.ndarray, omega_b: float) -> float | np.ndarray:
    p = np.asarray(population, dtype=float)
    out = np.where(p > 0.5, omega_b * (2.0 * p - 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def energy_and_ergotropy(trace: AmplitudeTrace, params: SystemParams) -> AmplitudeTrace:
    """Fill ``energy`` = omega_b |alpha1|**2 and the piecewise ergotropy."""
    p = np.abs(trace.alpha1) ** 2
    return replace(trace, energy=params.omega_b * p, ergotropy=ergotropy(p, params.omega_b))


def _trace(params: SystemParams, times, alpha0, alpha1, method: Method) -> AmplitudeTrace:
    times = np.asarray(times, dtype=float)
    empty = np.zeros_like(times)
    raw = AmplitudeTrace(times, np.asarray(alpha0, complex), np.asarray(alpha1, complex), empty, empty, method)
    return energy_and_ergotropy(raw, params)


def default_grid(params: SystemParams, spec: PulseSpec, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Uniform grid from one damping time before the pulse to 30 damping times after it starts.

    Long pulses extend the window so it always covers the pulse plus ten
    damping times.
    """
    gamma = params.gamma
    start, end = nominal_window(spec)
    stop = max(start + 30.0 / gamma, end + 10.0 / gamma)
    return np.linspace(start - 1.0 / gamma, stop, points)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _exp_terms(spec: PulseSpec) -> tuple[list[tuple[complex, int, complex]], float, float]:
    """Envelope as sum_j d_j tau**m_j exp(mu_j tau) on [a, b]."""
    if isinstance(spec, Square):
        T = spec.duration
        return [(1.0 / math.sqrt(T), 0, 0.0)], 0.0, T
    if isinstance(spec, DecayExp):
        T = spec.timescale
        return [(1.0 / math.sqrt(T), 0, -0.5 / T)], 0.0, math.inf
    if isinstance(spec, OptimalTruncated):
        amp = spec.amplitude
        reg = classify_regime(spec.params)
        rp, rm = poles(spec.params)
        if reg.regime is Regime.EXCEPTIONAL_POINT:
            # N G(-tau) = -N tau exp(-r tau)
            return [(-amp, 1, -rp)], -spec.duration, 0.0
        delta = rp - rm
        return [(amp / delta, 0, -rp), (-amp / delta, 0, -rm)], -spec.duration, 0.0
    raise UnsupportedShape(f"no exponential-polynomial form for {type(spec).__name__}")


def _kernel_moments_exp(spec: PulseSpec, r: complex, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """I(r,t) = int exp(r(t-tau)) xi(tau) dtau and J(r,t) = int (t-tau) exp(r(t-tau)) xi(tau) dtau."""
    terms, a, b = _exp_terms(spec)
    upper = np.minimum(b, t)
    shift = r * t
    I = np.zeros(t.shape, complex)
    J = np.zeros(t.shape, complex)
    for d, m, mu in terms:
        c = complex(mu) - r
        p_m = poly_exp_integral(m, c, a, upper, shift)
        p_m1 = poly_exp_integral(m + 1, c, a, upper, shift)
        I += d * p_m
        J += d * (t * p_m - p_m1)
    return I, J


def _kernel_moments_gauss(spec: Gaussian, r: complex, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    T = spec.width
    pref = T * math.sqrt(math.pi) / (2.0 * math.pi * T * T) ** 0.25
    z = t / (2.0 * T) + r * T
    envelope = np.exp(-t * t / (4.0 * T * T))
    # exp(r t + r^2 T^2) erfc(-z), written with the Faddeeva function in the
    # half-plane where it stays bounded
    with np.errstate(over="ignore", invalid="ignore"):
        left = envelope * faddeeva(-1j * z)
        right = 2.0 * np.exp(r * t + r * r * T * T) - envelope * faddeeva(1j * z)
    E = np.where(z.real <= 0, left, right)
    I = pref * E
    J = (t + 2.0 * r * T * T) * I + pref * (2.0 * T / math.sqrt(math.pi)) * envelope
    return I, J


def _kernel_moments(spec: PulseSpec, r: complex, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(spec, Gaussian):
        return _kernel_moments_gauss(spec, r, t)
    return _kernel_moments_exp(spec, r, t)


def closed_form_amplitudes(
    params: SystemParams, spec: PulseSpec, times: float | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact (alpha0, alpha1) at ``times``.

    Raises
    ------
    UnsupportedShape
        For sampled envelopes, which only the convolution route handles.
    """
    t = np.asarray(times, dtype=float)
    sqrt_gamma = math.sqrt(params.gamma_pulse)
    f = params.coupling
    if isinstance(spec, Sampled):
        raise UnsupportedShape("sampled envelopes have no closed form; use amplitude_convolution")
    if isinstance(spec, Delta):
        ge = green(params, t - spec.arrival)
        return -np.asarray(ge.g_prime, complex), 1j * f * np.asarray(ge.g, complex)

    reg = classify_regime(params)
    rp, rm = poles(params)
    if reg.regime is Regime.EXCEPTIONAL_POINT:
        I, J = _kernel_moments(spec, rp, t)
        alpha1 = 1j * f * sqrt_gamma * J
        alpha0 = -sqrt_gamma * (I + rp * J)
    else:
        Ip, _ = _kernel_moments(spec, rp, t)
        Im, _ = _kernel_moments(spec, rm, t)
        delta = rp - rm
        alpha1 = 1j * f * sqrt_gamma * (Ip - Im) / delta
        alpha0 = -sqrt_gamma * (rp * Ip - rm * Im) / delta
    if isinstance(spec, Gaussian):
        return alpha0, alpha1
    start = support(spec)[0]
    causal = t >= start
    return np.where(causal, alpha0, 0.0), np.where(causal, alpha1, 0.0)


def amplitude_closed_form(params: SystemParams, spec: PulseSpec, t: float | np.ndarray):
    """Battery amplitude alpha1(t) from the exact closed form."""
    _, alpha1 = closed_form_amplitudes(params, spec, t)
    return complex(alpha1) if np.ndim(alpha1) == 0 else alpha1


def closed_form_trace(params: SystemParams, spec: PulseSpec, times: np.ndarray | None = None) -> AmplitudeTrace:
    times = default_grid(params, spec) if times is None else np.asarray(times, float)
    alpha0, alpha1 = closed_form_amplitudes(params, spec, times)
    return _trace(params, times, alpha0, alpha1, Method.CLOSED_FORM)


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def _scalar_response(params: SystemParams) -> Callable[[float], tuple[float, float]]:
    reg = classify_regime(params)
    gamma = reg.gamma
    if reg.regime is Regime.EXCEPTIONAL_POINT:
        def resp(s):
            if s < 0:
                return 0.0, 0.0
            e = math.exp(-0.5 * gamma * s)
            return s * e, e * (1.0 - 0.5 * gamma * s)
    elif reg.regime is Regime.UNDERDAMPED:
        om = reg.omega_rabi

        def resp(s):
            if s < 0:
                return 0.0, 0.0
            e = math.exp(-0.5 * gamma * s)
            sn, cs = math.sin(om * s), math.cos(om * s)
            return e * sn / om, e * (cs - 0.5 * gamma * sn / om)
    else:
        root = math.sqrt(reg.kappa)
        rp, rm = reg.roots

        def resp(s):
            if s < 0:
                return 0.0, 0.0
            lead = math.exp(rp * s)
            em1 = math.expm1(-root * s)
            return -lead * em1 / root, lead * (1.0 - rm * em1 / root)
    return resp


def amplitude_convolution(
    params: SystemParams,
    spec: PulseSpec,
    times: np.ndarray | None = None,
    tol: float = 1e-11,
) -> AmplitudeTrace:
    """Amplitudes by quadrature of G and G' against the envelope.

    alpha1(t) = i f sqrt(Gamma) int G(t - tau) xi(tau) dtau and
    alpha0(t) = -sqrt(Gamma) int G'(t - tau) xi(tau) dtau, split at every
    envelope discontinuity. Delta envelopes are evaluated analytically.
    """
    times = default_grid(params, spec) if times is None else np.asarray(times, float)
    if isinstance(spec, Delta):
        alpha0, alpha1 = closed_form_amplitudes(params, spec, times)
        return _trace(params, times, alpha0, alpha1, Method.CONVOLUTION)
    resp = _scalar_response(params)
    sqrt_gamma = math.sqrt(params.gamma_pulse)
    f = params.coupling
    a, b = support(spec)
    pts = breakpoints(spec)
    if isinstance(spec, Gaussian):
        pts = (0.0,)
    elif isinstance(spec, DecayExp):
        b = math.inf
    alpha0 = np.zeros(times.shape, complex)
    alpha1 = np.zeros(times.shape, complex)
    for i, t in enumerate(times):
        upper = min(b, t)
        if upper <= a:
            continue
        g_int = integrate(lambda tau: resp(t - tau)[0] * pulse_value(spec, tau), a, upper, tol=tol, points=pts)
        gp_int = integrate(lambda tau: resp(t - tau)[1] * pulse_value(spec, tau), a, upper, tol=tol, points=pts)
        alpha1[i] = 1j * f * sqrt_gamma * g_int.value
        alpha0[i] = -sqrt_gamma * gp_int.value
    return _trace(params, times, alpha0, alpha1, Method.CONVOLUTION)


# ---------------------------------------------------------------------------
# ODE oracle
# ---------------------------------------------------------------------------

def _ode_solve(
    params: SystemParams,
    spec: PulseSpec,
    t_end: float,
    rtol: float,
    atol: float,
    augmented: bool = False,
):
    """Integrate the amplitude ODEs from rest; returns (start, segments, initial state).

    Each segment is ``(t_lo, t_hi, dense_solution)``. With ``augmented`` the
    state also accumulates the pulse-mode and environment emission.
    """
    gamma = params.gamma
    f = params.coupling
    sqrt_gamma = math.sqrt(params.gamma_pulse)
    gamma_pulse, gamma_env = params.gamma_pulse, params.gamma_env
    is_delta = isinstance(spec, Delta)
    start, stop = support(spec)
    knots = sorted({start, *(p for p in breakpoints(spec) if start < p < t_end), t_end})
    if stop < t_end:
        knots = sorted(set(knots) | {stop})

    def xi(t: float) -> complex:
        return 0.0 if is_delta else complex(pulse_value(spec, t))

    def rhs(t, y):
        a0 = complex(y[0], y[1])
        a1 = complex(y[2], y[3])
        drive = xi(t)
        d0 = -1j * f * a1 - sqrt_gamma * drive - gamma * a0
        d1 = -1j * f * a0
        out = [d0.real, d0.imag, d1.real, d1.imag]
        if augmented:
            pop0 = a0.real**2 + a0.imag**2
            cross = (drive.conjugate() * a0).real
            out += [gamma_pulse * pop0 + 2.0 * sqrt_gamma * cross, gamma_env * pop0]
        return out

    y = np.zeros(6 if augmented else 4)
    if is_delta:
        y[0] = -1.0
    initial = y.copy()
    segments = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi <= lo:
            continue
        sol = _sp_integrate.solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if sol.status != 0:
            raise StepSizeUnderflow(f"ODE integration failed on [{lo}, {hi}]: {sol.message}")
        segments.append((lo, hi, sol.sol))
        y = sol.y[:, -1]
    return start, segments, initial


def _evaluate_segments(segments, times: np.ndarray, initial: np.ndarray) -> np.ndarray:
    out = np.zeros((initial.size, times.size))
    if not segments:
        out[:, times == times.max()] = initial[:, None]
        return out
    for i, t in enumerate(times):
        for lo, hi, sol in segments:
            if lo <= t <= hi:
                out[:, i] = sol(t)
                break
        else:
            if t > segments[-1][1]:
                out[:, i] = segments[-1][2](segments[-1][1])
    return out


def amplitude_ode_oracle(
    params: SystemParams,
    spec: PulseSpec,
    times: np.ndarray | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> AmplitudeTrace:
    """Integrate the amplitude equations directly with an adaptive 8th-order stepper.

    alpha0' = -i f alpha1 - sqrt(Gamma) xi(t) - gamma alpha0,  alpha1' = -i f alpha0,
    starting from rest where the envelope begins. A delta envelope enters as
    the initial kick alpha0 = -1 at its arrival time.

    Raises
    ------
    StepSizeUnderflow
        If the stepper cannot meet the tolerances.
    """
    times = default_grid(params, spec) if times is None else np.asarray(times, float)
    start, segments, initial = _ode_solve(params, spec, float(max(times.max(), support(spec)[0])), rtol, atol)
    y = _evaluate_segments(segments, times, initial)
    before = times < start
    alpha0 = np.where(before, 0.0, y[0] + 1j * y[1])
    alpha1 = np.where(before, 0.0, y[2] + 1j * y[3])
    return _trace(params, times, alpha0, alpha1, Method.ODE_ORACLE)


def simulate(
    params: SystemParams,
    spec: PulseSpec,
    times: np.ndarray | None = None,
    method: Method | str | None = None,
) -> AmplitudeTrace:
    """Amplitude trace by the requested route; by default the closed form when one exists."""
    if method is None:
        method = Method.CONVOLUTION if isinstance(spec, Sampled) else Method.CLOSED_FORM
    method = Method(method)
    if method is Method.CLOSED_FORM:
        return closed_form_trace(params, spec, times)
    if method is Method.CONVOLUTION:
        return amplitude_convolution(params, spec, times)
    return amplitude_ode_oracle(params, spec, times)


# ---------------------------------------------------------------------------
# excitation ledger
# ---------------------------------------------------------------------------

def _check_ledger(ledger: NormLedger, tol: float, t: float) -> NormLedger:
    if not abs(ledger.total - 1.0) <= tol:
        raise LedgerViolation(f"excitation ledger sums to {ledger.total!r} at t={t!r} (tolerance {tol})")
    return ledger


def norm_ledger(
    params: SystemParams,
    spec: PulseSpec,
    t: float,
    tol: float = LEDGER_TOL,
    quad_tol: float = 1e-11,
    check: bool = True,
) -> NormLedger:
    """Split the single excitation at time ``t`` into charger, battery and emitted parts.

    The emitted pulse-mode part integrates |xi + sqrt(Gamma) alpha0|**2 up to
    ``t`` (Theta(0) = 1) and |xi|**2 beyond it; the environment part is
    Gamma_perp times the integral of |alpha0|**2. Amplitudes come from the ODE
    oracle, the integrals from adaptive quadrature.

    Raises
    ------
    LedgerViolation
        If ``check`` is set and the parts do not sum to one within ``tol``.
    """
    is_delta = isinstance(spec, Delta)
    a, b = support(spec)
    t = float(t)
    if t < a:
        in_flight = 1.0 if is_delta else pulse_norm(spec)
        ledger = NormLedger(0.0, 0.0, in_flight, 0.0, in_flight)
        return _check_ledger(ledger, tol, t) if check else ledger

    _, segments, initial = _ode_solve(params, spec, t, rtol=1e-12, atol=1e-14)
    state = _evaluate_segments(segments, np.array([t]), initial)[:, 0]
    p_tls = state[0] ** 2 + state[1] ** 2
    p_battery = state[2] ** 2 + state[3] ** 2

    def alpha0(tau: float) -> complex:
        for lo, hi, sol in segments:
            if lo <= tau <= hi:
                y = sol(tau)
                return complex(y[0], y[1])
        return -1.0 + 0j if is_delta else 0j

    sqrt_gamma = math.sqrt(params.gamma_pulse)
    pts = sorted({lo for lo, _, _ in segments} | {hi for _, hi, _ in segments})
    if t > a:
        if is_delta:
            emitted = params.gamma_pulse * integrate(lambda s: abs(alpha0(s)) ** 2, a, t, tol=quad_tol, points=pts).value
        else:
            emitted = integrate(
                lambda s: abs(pulse_value(spec, s) + sqrt_gamma * alpha0(s)) ** 2, a, t, tol=quad_tol, points=pts
            ).value
        env = params.gamma_env * integrate(lambda s: abs(alpha0(s)) ** 2, a, t, tol=quad_tol, points=pts).value
    else:
        emitted = env = 0.0
    if not is_delta and t < b:
        emitted += integrate(
            lambda s: abs(pulse_value(spec, s)) ** 2, t, b, tol=quad_tol, points=breakpoints(spec)
        ).value
    ledger = NormLedger(float(p_tls), float(p_battery), float(emitted), float(env),
                        float(p_tls + p_battery + emitted + env))
    return _check_ledger(ledger, tol, t) if check else ledger


def ledger_trace(
    params: SystemParams,
    spec: PulseSpec,
    times: np.ndarray,
    tol: float = LEDGER_TOL,
    check: bool = True,
) -> list[NormLedger]:
    """Ledger on a whole grid from one ODE solve that also accumulates emission.

    The pulse-mode emission is tracked through its rate
    Gamma |alpha0|**2 + 2 sqrt(Gamma) Re(conj(xi) alpha0), added to the
    photon norm still in flight.
    """
    times = np.asarray(times, float)
    is_delta = isinstance(spec, Delta)
    a = support(spec)[0]
    photon = 1.0 if is_delta else pulse_norm(spec)
    _, segments, initial = _ode_solve(params, spec, float(max(times.max(), a)), 1e-12, 1e-14, augmented=True)
    y = _evaluate_segments(segments, times, initial)
    out = []
    for i, t in enumerate(times):
        if t < a:
            ledger = NormLedger(0.0, 0.0, photon, 0.0, photon)
        else:
            p_tls = y[0, i] ** 2 + y[1, i] ** 2
            p_bat = y[2, i] ** 2 + y[3, i] ** 2
            emitted = y[4, i] + (0.0 if is_delta else photon)
            env = y[5, i]
            ledger = NormLedger(p_tls, p_bat, emitted, env, p_tls + p_bat + emitted + env)
        if check:
            _check_ledger(ledger, tol, float(t))
        out.append(ledger)
    return out


# ---------------------------------------------------------------------------
# peak search
# ---------------------------------------------------------------------------

def peak_excitation(
    params: SystemParams,
    spec: PulseSpec,
    points: int = 1200,
    method: Method | str | None = None,
) -> tuple[float, float]:
    """Time t_m and value of the maximum of |alpha1(t)|**2.

    A grid scan locates the maximum, then a bounded scalar search refines it
    between the neighbouring grid points.
    """
    times = default_grid(params, spec, points)
    trace = simulate(params, spec, times, method)
    pop = trace.population
    i = int(np.argmax(pop))
    lo = times[max(i - 1, 0)]
    hi = times[min(i + 1, times.size - 1)]

    def neg(t: float) -> float:
        return -float(np.abs(simulate(params, spec, np.array([t]), method).alpha1[0]) ** 2)

    res = _sp_optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    if -res.fun >= pop[i]:
        return float(res.x), float(-res.fun)
    return float(times[i]), float(pop[i])
