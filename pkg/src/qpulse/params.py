"""Physical rates of the charger-battery model and regime classification.

All rates are angular rates (1/time) with hbar = 1. The two-level charger
decays into the pulse mode at ``gamma_pulse`` and into the remaining
electromagnetic environment at ``gamma_env``; it exchanges excitations with
the battery oscillator at rate ``coupling``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ValidationError

__all__ = [
    "EP_TOL",
    "Regime",
    "RegimeData",
    "SystemParams",
    "classify_regime",
]

#: Half-width of the exceptional-point band, applied as |kappa| <= EP_TOL * gamma**2.
EP_TOL = 1e-8


class Regime(str, enum.Enum):
    UNDERDAMPED = "Underdamped"
    EXCEPTIONAL_POINT = "ExceptionalPoint"
    OVERDAMPED = "Overdamped"


@dataclass(frozen=True)
class SystemParams:
    """Rates of the charger-battery model.

    Parameters
    ----------
    gamma_pulse : float
        Decay rate of the charger into the pulse mode (Gamma).
    gamma_env : float
        Decay rate of the charger into the environment (Gamma_perp).
    coupling : float
        Charger-battery exchange rate (f).
    omega_b : float
        Battery frequency; sets the energy scale of stored energy and ergotropy.
    """

    gamma_pulse: float = 1.0
    gamma_env: float = 0.0
    coupling: float = 0.25
    omega_b: float = 1.0

    def __post_init__(self) -> None:
        problems = {}
        for name in ("gamma_pulse", "gamma_env", "coupling", "omega_b"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems[name] = f"must be a real number, got {value!r}"
            elif not math.isfinite(value):
                problems[name] = f"must be finite, got {value!r}"
        if "gamma_pulse" not in problems and self.gamma_pulse <= 0:
            problems["gamma_pulse"] = f"must be > 0, got {self.gamma_pulse!r}"
        if "gamma_env" not in problems and self.gamma_env < 0:
            problems["gamma_env"] = f"must be >= 0, got {self.gamma_env!r}"
        if "coupling" not in problems and self.coupling <= 0:
            problems["coupling"] = f"must be > 0, got {self.coupling!r}"
        if "omega_b" not in problems and self.omega_b <= 0:
            problems["omega_b"] = f"must be > 0, got {self.omega_b!r}"
        if problems:
            raise ValidationError(problems)
        for name in ("gamma_pulse", "gamma_env", "coupling", "omega_b"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def gamma(self) -> float:
        """Amplitude damping rate (Gamma + Gamma_perp) / 2."""
        return 0.5 * (self.gamma_pulse + self.gamma_env)

    @property
    def bound(self) -> float:
        """Saturation value Gamma / (Gamma + Gamma_perp) of the battery population."""
        return self.gamma_pulse / (self.gamma_pulse + self.gamma_env)

    @classmethod
    def at_exceptional_point(
        cls, gamma_pulse: float = 1.0, gamma_env: float = 0.0, omega_b: float = 1.0
    ) -> "SystemParams":
        """Parameters with the coupling tuned exactly to f_ep = gamma / 2."""
        gamma = 0.5 * (gamma_pulse + gamma_env)
        return cls(gamma_pulse, gamma_env, 0.5 * gamma, omega_b)


@dataclass(frozen=True)
class RegimeData:
    """Derived quantities that select the branch of the response functions.

    ``omega_rabi`` is only set in the underdamped regime and ``roots`` (the
    real poles r+ and r-) only when kappa >= 0.
    """

    gamma: float
    kappa: float
    regime: Regime
    omega_rabi: float | None
    roots: tuple[float, float] | None
    f_ep: float

    @property
    def sqrt_abs_kappa(self) -> float:
        return math.sqrt(abs(self.kappa))


def classify_regime(params: SystemParams, ep_tol: float = EP_TOL) -> RegimeData:
    """Classify the damping regime of the charger-battery pair.

    Inside the band ``|kappa| <= ep_tol * gamma**2`` the parameters are treated
    as sitting on the exceptional point, so tiny perturbations of the coupling
    around ``gamma / 2`` do not flip the branch.
    """
    gamma = params.gamma
    f = params.coupling
    kappa = gamma * gamma - 4.0 * f * f
    if abs(kappa) <= ep_tol * gamma * gamma:
        regime = Regime.EXCEPTIONAL_POINT
    elif kappa < 0:
        regime = Regime.UNDERDAMPED
    else:
        regime = Regime.OVERDAMPED

    omega = None
    if kappa < 0:
        omega = math.sqrt(f * f - 0.25 * gamma * gamma)
        if regime is Regime.UNDERDAMPED and not omega > 0:  # pragma: no cover
            raise AssertionError("underdamped regime with non-positive Rabi frequency")
    roots = None
    if kappa >= 0:
        s = math.sqrt(kappa)
        roots = (0.5 * (-gamma + s), 0.5 * (-gamma - s))
    return RegimeData(
        gamma=gamma,
        kappa=kappa,
        regime=regime,
        omega_rabi=omega,
        roots=roots,
        f_ep=0.5 * gamma,
    )
