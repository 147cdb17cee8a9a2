"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class QPulseError(Exception):
    """Base class for every error raised by :mod:`qpulse`."""


class DeltaNotPointwise(QPulseError):
    """A delta pulse was asked for a pointwise value."""


class UnsupportedShape(QPulseError):
    """The requested evaluation route has no formula for this pulse shape."""


class MaxSubdivisions(QPulseError):
    """Adaptive quadrature could not meet its error target."""


class NoSignChange(QPulseError):
    """A root bracket does not straddle a sign change."""


class RootNotConverged(QPulseError):
    """A root was located but its residual exceeds the tolerance."""


class StepSizeUnderflow(QPulseError):
    """The ODE stepper could not reach the requested tolerance."""


class LedgerViolation(QPulseError):
    """The excitation-number ledger does not sum to one."""


class ThresholdUnreachable(QPulseError):
    """The requested charge threshold is at or above the saturation bound."""


class NoInteriorMaximum(QPulseError):
    """No stationary point of the charging power could be bracketed."""


class ParseError(QPulseError):
    """A configuration source could not be parsed."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(QPulseError):
    """One or more invariants of a configuration or parameter set are violated.

    ``problems`` maps each offending field name to a description.
    """

    def __init__(self, problems: dict[str, str]):
        self.problems = dict(problems)
        detail = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(f"invalid configuration ({detail})")
