"""Single-photon charging of a quantum battery through a dissipative two-level charger."""

from .errors import (
    DeltaNotPointwise,
    LedgerViolation,
    MaxSubdivisions,
    NoInteriorMaximum,
    NoSignChange,
    ParseError,
    QPulseError,
    RootNotConverged,
    StepSizeUnderflow,
    ThresholdUnreachable,
    UnsupportedShape,
    ValidationError,
)
from .params import EP_TOL, Regime, RegimeData, SystemParams, classify_regime
from .greens import GreensEval, green, green_sq_integral, green_sq_integral_quadrature, poles
from .pulses import (
    DecayExp,
    Delta,
    Gaussian,
    OptimalTruncated,
    PulseSpec,
    PulseWidth,
    Sampled,
    Square,
    optimal_width_limit,
    pulse_norm,
    pulse_value,
    pulse_width,
)
from .dynamics import (
    AmplitudeTrace,
    Method,
    NormLedger,
    amplitude_closed_form,
    amplitude_convolution,
    amplitude_ode_oracle,
    energy_and_ergotropy,
    ergotropy,
    ledger_trace,
    norm_ledger,
    peak_excitation,
    simulate,
)
from .optimal import (
    ChargingBound,
    MinTimeResult,
    PowerResult,
    charging_bound,
    ep_power_constants,
    min_time,
    optimal_pulse,
    p_of_duration,
    power_optimal,
)
from .config import RECIPES, FigureRecipe, RunConfig, parse_config, render_config

__version__ = "0.1.0"
