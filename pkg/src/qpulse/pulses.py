"""Single-photon temporal envelopes xi(t).

Every realizable envelope has unit L2 norm. ``Delta`` stands for the
idealized impulse xi(t) = delta(t - t0) / sqrt(Gamma); it has no pointwise
value and is handled analytically by the dynamics routines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .errors import DeltaNotPointwise, ValidationError
from .greens import green, green_sq_integral
from .numerics import integrate
from .params import SystemParams, classify_regime, Regime

__all__ = [
    "Square",
    "DecayExp",
    "Gaussian",
    "Delta",
    "OptimalTruncated",
    "Sampled",
    "PulseSpec",
    "PulseWidth",
    "NORM_TOL",
    "pulse_value",
    "pulse_width",
    "pulse_width_quadrature",
    "pulse_norm",
    "optimal_width_limit",
    "support",
    "nominal_window",
    "breakpoints",
]

NORM_TOL = 1e-6

# Effective-support half-widths (in units of the width parameter) used when
# integrating over pulses without compact support.
_GAUSS_SUPPORT = 10.0
_EXP_SUPPORT = 40.0


def _positive(name: str, value: float) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ValidationError({name: f"must be a finite number > 0, got {value!r}"})


@dataclass(frozen=True)
class Square:
    """Flat envelope on [0, T]."""

    duration: float

    def __post_init__(self) -> None:
        _positive("duration", self.duration)
        object.__setattr__(self, "duration", float(self.duration))


@dataclass(frozen=True)
class DecayExp:
    """exp(-t / 2T) / sqrt(T) for t >= 0."""

    timescale: float

    def __post_init__(self) -> None:
        _positive("timescale", self.timescale)
        object.__setattr__(self, "timescale", float(self.timescale))


@dataclass(frozen=True)
class Gaussian:
    """Gaussian envelope centred on t = 0 whose intensity has standard deviation ``width``."""

    width: float

    def __post_init__(self) -> None:
        _positive("width", self.width)
        object.__setattr__(self, "width", float(self.width))


@dataclass(frozen=True)
class Delta:
    arrival: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.arrival):
            raise ValidationError({"arrival": f"must be finite, got {self.arrival!r}"})
        object.__setattr__(self, "arrival", float(self.arrival))


@dataclass(frozen=True)
class OptimalTruncated:
    """Time-reversed response G(-tau) of ``params`` on [-duration, 0], renormalized.

    The envelope ends at tau = 0, the instant at which the battery
    population it produces peaks.
    """

    duration: float
    params: SystemParams

    def __post_init__(self) -> None:
        _positive("duration", self.duration)
        object.__setattr__(self, "duration", float(self.duration))

    @cached_property
    def kept_mass(self) -> float:
        """Fraction of the untruncated envelope's L2 mass inside [-duration, 0]."""
        return float(green_sq_integral(self.params, self.duration) / green_sq_integral(self.params, math.inf))

    @cached_property
    def amplitude(self) -> float:
        """Prefactor N with xi(tau) = N G(-tau); tends to sqrt(2 gamma) f as duration grows."""
        return 1.0 / math.sqrt(green_sq_integral(self.params, self.duration))


@dataclass(frozen=True)
class Sampled:
    """Envelope given on a grid, linearly interpolated and zero outside it.

    Values are rescaled on construction so the interpolant has unit norm
    (an all-zero envelope is kept as is).
    """

    times: tuple[float, ...]
    values: tuple[complex, ...] | tuple[float, ...]
    renormalize: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        problems = {}
        if t.ndim != 1 or t.size < 2:
            problems["times"] = "need at least two grid points"
        elif not np.all(np.isfinite(t)) or not np.all(np.diff(t) > 0):
            problems["times"] = "grid must be finite and strictly increasing"
        if v.shape != t.shape:
            problems["values"] = f"expected {t.shape} values, got {v.shape}"
        elif not np.all(np.isfinite(v)):
            problems["values"] = "values must be finite"
        if problems:
            raise ValidationError(problems)
        complex_valued = np.iscomplexobj(v) and np.any(v.imag != 0)
        v = v.astype(complex) if complex_valued else v.real.astype(float)
        norm = _piecewise_linear_norm(t, v)
        if self.renormalize and norm > 0:
            v = v / math.sqrt(norm)
        object.__setattr__(self, "times", tuple(float(x) for x in t))
        object.__setattr__(
            self, "values", tuple(complex(x) for x in v) if complex_valued else tuple(float(x) for x in v)
        )

    @cached_property
    def grid(self) -> np.ndarray:
        return np.asarray(self.times)

    @cached_property
    def samples(self) -> np.ndarray:
        return np.asarray(self.values)


PulseSpec = Union[Square, DecayExp, Gaussian, Delta, OptimalTruncated, Sampled]


@dataclass(frozen=True)
class PulseWidth:
    t_sigma: float


def _piecewise_linear_norm(t: np.ndarray, v: np.ndarray) -> float:
    a, b = v[:-1], v[1:]
    h = np.diff(t)
    return float(np.sum(h * (abs(a) ** 2 + (a * np.conj(b)).real + abs(b) ** 2) / 3.0))


def pulse_value(spec: PulseSpec, t: float | np.ndarray) -> float | complex | np.ndarray:
    """Envelope xi(t); accepts scalars or arrays. Heaviside steps use Theta(0) = 1."""
    arr = np.asarray(t, dtype=float)
    if isinstance(spec, Square):
        T = spec.duration
        out = np.where((arr >= 0) & (arr <= T), 1.0 / math.sqrt(T), 0.0)
    elif isinstance(spec, DecayExp):
        T = spec.timescale
        tc = np.where(arr >= 0, arr, 0.0)
        out = np.where(arr >= 0, np.exp(-tc / (2.0 * T)) / math.sqrt(T), 0.0)
    elif isinstance(spec, Gaussian):
        T = spec.width
        out = np.exp(-arr * arr / (4.0 * T * T)) / (2.0 * math.pi * T * T) ** 0.25
    elif isinstance(spec, OptimalTruncated):
        inside = (arr >= -spec.duration) & (arr <= 0)
        g = green(spec.params, np.where(inside, -arr, 0.0)).g
        out = np.where(inside, spec.amplitude * g, 0.0)
    elif isinstance(spec, Sampled):
        grid = spec.grid
        inside = (arr >= grid[0]) & (arr <= grid[-1])
        samples = spec.samples
        if np.iscomplexobj(samples):
            interp = np.interp(arr, grid, samples.real) + 1j * np.interp(arr, grid, samples.imag)
        else:
            interp = np.interp(arr, grid, samples)
        out = np.where(inside, interp, 0.0)
    elif isinstance(spec, Delta):
        raise DeltaNotPointwise("a delta pulse has no pointwise value")
    else:
        raise TypeError(f"not a pulse spec: {spec!r}")
    return out[()] if out.ndim == 0 else out


def support(spec: PulseSpec) -> tuple[float, float]:
    """Interval outside which the envelope vanishes (or is below ~exp(-20) in amplitude)."""
    if isinstance(spec, Square):
        return 0.0, spec.duration
    if isinstance(spec, DecayExp):
        return 0.0, _EXP_SUPPORT * spec.timescale
    if isinstance(spec, Gaussian):
        return -_GAUSS_SUPPORT * spec.width, _GAUSS_SUPPORT * spec.width
    if isinstance(spec, Delta):
        return spec.arrival, spec.arrival
    if isinstance(spec, OptimalTruncated):
        return -spec.duration, 0.0
    if isinstance(spec, Sampled):
        return spec.times[0], spec.times[-1]
    raise TypeError(f"not a pulse spec: {spec!r}")


def nominal_window(spec: PulseSpec) -> tuple[float, float]:
    """Interval carrying essentially all of the photon, used to place default time grids."""
    if isinstance(spec, DecayExp):
        return 0.0, 10.0 * spec.timescale
    if isinstance(spec, Gaussian):
        return -5.0 * spec.width, 5.0 * spec.width
    return support(spec)


def breakpoints(spec: PulseSpec) -> tuple[float, ...]:
    """Points where the envelope or its derivative jumps."""
    if isinstance(spec, Square):
        return (0.0, spec.duration)
    if isinstance(spec, DecayExp):
        return (0.0,)
    if isinstance(spec, OptimalTruncated):
        return (-spec.duration, 0.0)
    if isinstance(spec, Sampled):
        return spec.times
    if isinstance(spec, Delta):
        return (spec.arrival,)
    return ()


def _intensity_moments(spec: PulseSpec, tol: float) -> tuple[float, float, float]:
    a, b = support(spec)
    pts = breakpoints(spec)

    def moment(k: int) -> float:
        return integrate(lambda t: abs(pulse_value(spec, t)) ** 2 * t**k, a, b, tol=tol, points=pts).value

    return moment(0), moment(1), moment(2)


def pulse_norm(spec: PulseSpec, tol: float = 1e-12) -> float:
    """L2 norm squared of the envelope by adaptive quadrature over its support."""
    if isinstance(spec, Delta):
        raise DeltaNotPointwise("a delta pulse has no finite L2 norm to integrate")
    a, b = support(spec)
    return float(
        integrate(lambda t: abs(pulse_value(spec, t)) ** 2, a, b, tol=tol, points=breakpoints(spec)).value
    )


def pulse_width_quadrature(spec: PulseSpec, tol: float = 1e-12) -> PulseWidth:
    """Standard deviation of |xi|**2 computed numerically."""
    if isinstance(spec, Delta):
        return PulseWidth(0.0)
    m0, m1, m2 = _intensity_moments(spec, tol)
    mean = m1 / m0
    return PulseWidth(math.sqrt(max(m2 / m0 - mean * mean, 0.0)))


def pulse_width(spec: PulseSpec) -> PulseWidth:
    """Temporal standard deviation T_sigma of the intensity |xi(t)|**2."""
    if isinstance(spec, Square):
        return PulseWidth(spec.duration / math.sqrt(12.0))
    if isinstance(spec, DecayExp):
        return PulseWidth(spec.timescale)
    if isinstance(spec, Gaussian):
        return PulseWidth(spec.width)
    if isinstance(spec, Delta):
        return PulseWidth(0.0)
    return pulse_width_quadrature(spec)


def optimal_width_limit(params: SystemParams) -> float:
    """T_sigma of the untruncated optimal envelope."""
    reg = classify_regime(params)
    gamma, f = reg.gamma, params.coupling
    if reg.regime is Regime.EXCEPTIONAL_POINT:
        return math.sqrt(3.0) / gamma
    return math.sqrt(1.0 / gamma**2 + (gamma**2 - 2.0 * f**2) / (4.0 * f**4))
