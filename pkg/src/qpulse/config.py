"""Run configuration for the ``qpulse`` command line: schema, parsing, recipes.

A configuration is either a JSON object or ``key = value`` lines (``#``
starts a comment, values are JSON literals or bare words, dotted keys such as
``pulse.shape`` address nested fields). Recognized keys::

    command        dynamics | compare-shapes | optimal-pulse | min-time | power | sweep
    gamma_pulse    Gamma (default 1)
    gamma_env      Gamma_perp (default 0)
    coupling       f (default: exceptional point)
    omega_b        battery frequency (default 1)
    pulse          {"shape": square|decay-exp|gaussian|delta|optimal|sampled,
                    "width": T, "times": [...], "values": [...]}
    grid           {"points": N, "start": t0, "stop": t1}  or just N
    sweep_axes     [{"axis": NAME, "start": a, "stop": b, "points": n}, ...]
    output         {"path": PATH, "format": csv | json}
    tolerances     {"quad": q, "root": r, "ledger": l}
    threshold      charge threshold p_th (min-time)
    truncation     optimal-pulse duration (default 40 / gamma)
    couplings      list of f values overlaid by optimal-pulse
    t_sigma        common intensity width for compare-shapes
    recipe         name of the figure recipe the config came from

Times and rates in the file are absolute; command-line flags take them in
units of Gamma.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any

from .errors import ParseError, QPulseError, ValidationError
from .params import SystemParams
from .pulses import DecayExp, Delta, Gaussian, OptimalTruncated, PulseSpec, Sampled, Square

__all__ = [
    "COMMANDS",
    "SWEEP_AXES",
    "GridSpec",
    "SweepAxis",
    "OutputSpec",
    "Tolerances",
    "RunConfig",
    "FigureRecipe",
    "RECIPES",
    "parse_config",
    "parse_source",
    "build_config",
    "config_to_dict",
    "render_config",
    "pulse_to_dict",
]

COMMANDS = ("dynamics", "compare-shapes", "optimal-pulse", "min-time", "power", "sweep")
SWEEP_AXES = ("coupling_over_gamma_pulse", "gamma_t_product", "gamma_env_over_gamma_pulse")
FORMATS = ("csv", "json")
SHAPES = ("square", "decay-exp", "gaussian", "delta", "optimal", "sampled")

_TOP_KEYS = {
    "command", "gamma_pulse", "gamma_env", "coupling", "omega_b", "pulse", "grid",
    "sweep_axes", "output", "tolerances", "threshold", "truncation", "couplings",
    "t_sigma", "recipe",
}
_PULSE_KEYS = {"shape", "width", "times", "values"}
_GRID_KEYS = {"points", "start", "stop"}
_AXIS_KEYS = {"axis", "start", "stop", "points"}
_OUTPUT_KEYS = {"path", "format"}
_TOL_KEYS = {"quad", "root", "ledger"}


@dataclass(frozen=True)
class GridSpec:
    points: int = 400
    start: float | None = None
    stop: float | None = None


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    points: int

    def values(self) -> list[float]:
        if self.points == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.points - 1)
        return [self.start + i * step for i in range(self.points)]


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class Tolerances:
    quad: float = 1e-11
    root: float = 1e-12
    ledger: float = 1e-5


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: SystemParams
    pulse: PulseSpec | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    sweep_axes: tuple[SweepAxis, ...] = ()
    output: OutputSpec = field(default_factory=OutputSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    threshold: float | None = None
    truncation: float | None = None
    couplings: tuple[float, ...] = ()
    t_sigma: float | None = None
    recipe: str | None = None


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_scalar(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        if (text.startswith("[") or text.startswith("{") or text.startswith('"')):
            raise
        return text


def _parse_key_value(source: str) -> dict[str, Any]:
    data: dict[str, Any] = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        elif ":" in line:
            key, _, value = line.partition(":")
        else:
            raise ParseError("expected 'key = value'", line=lineno)
        key = key.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*", key):
            raise ParseError(f"malformed key {key!r}", line=lineno)
        try:
            parsed = _parse_scalar(value)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad value: {exc.msg}", line=lineno, field=key) from None
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            nested = target.setdefault(part, {})
            if not isinstance(nested, dict):
                raise ParseError("cannot nest under a scalar", line=lineno, field=key)
            target = nested
        if parts[-1] in target:
            raise ParseError("duplicate key", line=lineno, field=key)
        target[parts[-1]] = parsed
    return data


def parse_source(source: str) -> dict[str, Any]:
    """Raw mapping from JSON or key-value text, before validation."""
    stripped = source.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
        if not isinstance(data, dict):  # pragma: no cover - guarded by the '{' check
            raise ParseError("top level must be an object")
        return data
    return _parse_key_value(source)


def _check_keys(mapping: Any, allowed: set[str], where: str) -> None:
    if not isinstance(mapping, dict):
        raise ParseError(f"expected an object, got {type(mapping).__name__}", field=where)
    for key in mapping:
        if key not in allowed:
            raise ParseError("unknown key", field=f"{where}.{key}" if where else key)


def _number(problems: dict, name: str, value: Any, *, positive: bool = False, minimum: float | None = None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems[name] = f"must be a number, got {value!r}"
        return None
    value = float(value)
    if not math.isfinite(value):
        problems[name] = f"must be finite, got {value!r}"
        return None
    if positive and value <= 0:
        problems[name] = f"must be > 0, got {value!r}"
        return None
    if minimum is not None and value < minimum:
        problems[name] = f"must be >= {minimum}, got {value!r}"
        return None
    return value


def _integer(problems: dict, name: str, value: Any, minimum: int):
    if isinstance(value, bool) or not isinstance(value, int) and not (isinstance(value, float) and value.is_integer()):
        problems[name] = f"must be an integer, got {value!r}"
        return None
    value = int(value)
    if value < minimum:
        problems[name] = f"must be >= {minimum}, got {value!r}"
        return None
    return value


def _build_pulse(raw: Any, params: SystemParams | None, problems: dict) -> PulseSpec | None:
    if isinstance(raw, str):
        raw = {"shape": raw}
    _check_keys(raw, _PULSE_KEYS, "pulse")
    shape = raw.get("shape")
    if shape not in SHAPES:
        problems["pulse.shape"] = f"must be one of {', '.join(SHAPES)}, got {shape!r}"
        return None
    if shape == "sampled":
        times, values = raw.get("times"), raw.get("values")
        if not isinstance(times, list) or not isinstance(values, list):
            problems["pulse.times"] = "sampled pulses need 'times' and 'values' lists"
            return None
        try:
            vals = [complex(v[0], v[1]) if isinstance(v, list) else v for v in values]
            return Sampled(tuple(times), tuple(vals))
        except ValidationError as exc:
            problems.update({f"pulse.{k}": v for k, v in exc.problems.items()})
        except (TypeError, ValueError, IndexError) as exc:
            problems["pulse.values"] = str(exc)
        return None
    if "width" not in raw:
        problems["pulse.width"] = "missing"
        return None
    if shape == "delta":
        width = _number(problems, "pulse.width", raw["width"])
        return None if width is None else Delta(width)
    width = _number(problems, "pulse.width", raw["width"], positive=True)
    if width is None:
        return None
    if shape == "square":
        return Square(width)
    if shape == "decay-exp":
        return DecayExp(width)
    if shape == "gaussian":
        return Gaussian(width)
    if params is None:
        return None
    return OptimalTruncated(width, params)


def pulse_to_dict(spec: PulseSpec) -> dict[str, Any]:
    if isinstance(spec, Square):
        return {"shape": "square", "width": spec.duration}
    if isinstance(spec, DecayExp):
        return {"shape": "decay-exp", "width": spec.timescale}
    if isinstance(spec, Gaussian):
        return {"shape": "gaussian", "width": spec.width}
    if isinstance(spec, Delta):
        return {"shape": "delta", "width": spec.arrival}
    if isinstance(spec, OptimalTruncated):
        return {"shape": "optimal", "width": spec.duration}
    values = [[v.real, v.imag] if isinstance(v, complex) else v for v in spec.values]
    return {"shape": "sampled", "times": list(spec.times), "values": values}


def build_config(data: dict[str, Any]) -> RunConfig:
    """Validate a raw mapping and apply defaults.

    Raises
    ------
    ParseError
        On unknown keys or structurally wrong sections.
    ValidationError
        Listing every violated invariant.
    """
    _check_keys(data, _TOP_KEYS, "")
    problems: dict[str, str] = {}

    command = data.get("command")
    if command not in COMMANDS:
        problems["command"] = f"must be one of {', '.join(COMMANDS)}, got {command!r}"

    rates = {}
    for name, default in (("gamma_pulse", 1.0), ("gamma_env", 0.0), ("omega_b", 1.0)):
        rates[name] = data.get(name, default)
    gp, ge = rates["gamma_pulse"], rates["gamma_env"]
    numeric_rates = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (gp, ge))
    rates["coupling"] = data.get("coupling", 0.25 * (gp + ge) if numeric_rates else None)
    params = None
    try:
        params = SystemParams(**rates)
    except ValidationError as exc:
        problems.update(exc.problems)

    pulse = None
    if "pulse" in data:
        pulse = _build_pulse(data["pulse"], params, problems)

    grid_raw = data.get("grid", {})
    if not isinstance(grid_raw, dict):
        grid_raw = {"points": grid_raw}
    _check_keys(grid_raw, _GRID_KEYS, "grid")
    points = _integer(problems, "grid.points", grid_raw.get("points", 400), 2)
    start = grid_raw.get("start")
    stop = grid_raw.get("stop")
    if start is not None:
        start = _number(problems, "grid.start", start)
    if stop is not None:
        stop = _number(problems, "grid.stop", stop)
    if start is not None and stop is not None and not start < stop:
        problems["grid"] = f"start must be < stop, got [{start}, {stop}]"
    grid = GridSpec(points or 400, start, stop)

    axes_raw = data.get("sweep_axes", [])
    if not isinstance(axes_raw, list):
        raise ParseError("expected a list", field="sweep_axes")
    axes = []
    seen = set()
    for i, ax in enumerate(axes_raw):
        _check_keys(ax, _AXIS_KEYS, f"sweep_axes[{i}]")
        where = f"sweep_axes[{i}]"
        name = ax.get("axis")
        if name not in SWEEP_AXES:
            problems[f"{where}.axis"] = f"must be one of {', '.join(SWEEP_AXES)}, got {name!r}"
        elif name in seen:
            problems[f"{where}.axis"] = f"duplicate axis {name!r}"
        seen.add(name)
        a = _number(problems, f"{where}.start", ax.get("start"), positive=True)
        b = _number(problems, f"{where}.stop", ax.get("stop"), positive=True)
        n = _integer(problems, f"{where}.points", ax.get("points"), 1)
        if a is not None and b is not None and b < a:
            problems[f"{where}"] = f"stop must be >= start, got [{a}, {b}]"
        if None not in (a, b, n) and name in SWEEP_AXES:
            axes.append(SweepAxis(name, a, b, n))
    if command == "sweep" and not 1 <= len(axes_raw) <= 2:
        problems["sweep_axes"] = f"sweep requires 1 or 2 axes, got {len(axes_raw)}"
    elif command != "sweep" and axes_raw:
        problems["sweep_axes"] = "only the sweep command takes sweep axes"

    out_raw = data.get("output", {})
    _check_keys(out_raw, _OUTPUT_KEYS, "output")
    fmt = out_raw.get("format", "csv")
    if fmt not in FORMATS:
        problems["output.format"] = f"must be csv or json, got {fmt!r}"
    path = out_raw.get("path")
    if path is not None and not isinstance(path, str):
        problems["output.path"] = "must be a string"
    output = OutputSpec(path, fmt if fmt in FORMATS else "csv")

    tol_raw = data.get("tolerances", {})
    _check_keys(tol_raw, _TOL_KEYS, "tolerances")
    tol_values = {}
    for key, value in tol_raw.items():
        v = _number(problems, f"tolerances.{key}", value, positive=True)
        if v is not None:
            tol_values[key] = v
    tolerances = Tolerances(**tol_values)

    threshold = data.get("threshold")
    if threshold is not None:
        threshold = _number(problems, "threshold", threshold, positive=True)
        if threshold is not None and params is not None and not threshold < params.bound:
            problems["threshold"] = f"must be below the bound {params.bound!r}, got {threshold!r}"
    if command == "min-time" and "threshold" not in data:
        problems["threshold"] = "min-time requires a threshold"

    truncation = data.get("truncation")
    if truncation is not None:
        truncation = _number(problems, "truncation", truncation, positive=True)

    couplings_raw = data.get("couplings", [])
    if not isinstance(couplings_raw, list):
        raise ParseError("expected a list", field="couplings")
    couplings = []
    for i, c in enumerate(couplings_raw):
        v = _number(problems, f"couplings[{i}]", c, positive=True)
        if v is not None:
            couplings.append(v)

    t_sigma = data.get("t_sigma")
    if t_sigma is not None:
        t_sigma = _number(problems, "t_sigma", t_sigma, positive=True)

    if command == "dynamics" and "pulse" not in data:
        problems["pulse"] = "dynamics requires a pulse"

    recipe = data.get("recipe")
    if recipe is not None and recipe not in RECIPES:
        problems["recipe"] = f"unknown recipe {recipe!r}"

    if problems:
        raise ValidationError(problems)
    return RunConfig(
        command=command,
        params=params,
        pulse=pulse,
        grid=grid,
        sweep_axes=tuple(axes),
        output=output,
        tolerances=tolerances,
        threshold=threshold,
        truncation=truncation,
        couplings=tuple(couplings),
        t_sigma=t_sigma,
        recipe=recipe,
    )


def parse_config(source: str) -> RunConfig:
    """Parse and validate configuration text into a :class:`RunConfig`."""
    return build_config(parse_source(source))


def config_to_dict(config: RunConfig) -> dict[str, Any]:
    p = config.params
    data: dict[str, Any] = {
        "command": config.command,
        "gamma_pulse": p.gamma_pulse,
        "gamma_env": p.gamma_env,
        "coupling": p.coupling,
        "omega_b": p.omega_b,
        "grid": {"points": config.grid.points},
        "output": {"format": config.output.format},
        "tolerances": {
            "quad": config.tolerances.quad,
            "root": config.tolerances.root,
            "ledger": config.tolerances.ledger,
        },
    }
    if config.grid.start is not None:
        data["grid"]["start"] = config.grid.start
    if config.grid.stop is not None:
        data["grid"]["stop"] = config.grid.stop
    if config.output.path is not None:
        data["output"]["path"] = config.output.path
    if config.pulse is not None:
        data["pulse"] = pulse_to_dict(config.pulse)
    if config.sweep_axes:
        data["sweep_axes"] = [
            {"axis": a.name, "start": a.start, "stop": a.stop, "points": a.points} for a in config.sweep_axes
        ]
    for name in ("threshold", "truncation", "t_sigma", "recipe"):
        value = getattr(config, name)
        if value is not None:
            data[name] = value
    if config.couplings:
        data["couplings"] = list(config.couplings)
    return data


def render_config(config: RunConfig) -> str:
    """Canonical JSON text; ``parse_config(render_config(c)) == c``."""
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# figure recipes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FigureRecipe:
    """Preset reproducing the data behind one of the reference figures."""

    name: str
    description: str
    settings: dict[str, Any]

    def config(self) -> RunConfig:
        return build_config({**self.settings, "recipe": self.name})


def _recipes() -> dict[str, FigureRecipe]:
    items = [
        FigureRecipe(
            "fig7-optimal-dynamics",
            "Battery population driven by the optimal pulse for several couplings, Gamma_perp = 0.",
            {
                "command": "optimal-pulse",
                "gamma_pulse": 1.0,
                "gamma_env": 0.0,
                "coupling": 0.25,
                "couplings": [0.125, 0.25, 0.5, 1.0],
                "truncation": 80.0,
                "grid": {"points": 400, "start": -20.0, "stop": 20.0},
            },
        ),
        FigureRecipe(
            "fig8-optimal-shapes",
            "Optimal envelopes xi_opt(tau) for several f / Gamma with Gamma_perp = 0.",
            {
                "command": "optimal-pulse",
                "gamma_pulse": 1.0,
                "gamma_env": 0.0,
                "coupling": 0.25,
                "couplings": [0.1, 0.25, 0.5, 1.0, 2.0],
                "truncation": 80.0,
                "grid": {"points": 400, "start": -30.0, "stop": 0.0},
            },
        ),
        FigureRecipe(
            "figC-pulse-compare",
            "Square, decaying-exponential, Gaussian and optimal pulses sharing Gamma T_sigma = 2 sqrt(3) at the EP.",
            {
                "command": "compare-shapes",
                "gamma_pulse": 1.0,
                "gamma_env": 0.0,
                "coupling": 0.25,
                "t_sigma": 2.0 * math.sqrt(3.0),
                "truncation": 80.0,
                "grid": {"points": 400},
            },
        ),
        FigureRecipe(
            "figGauss-sweep",
            "Peak battery population for Gaussian pulses over f / Gamma and Gamma T, Gamma_perp = 0.",
            {
                "command": "sweep",
                "gamma_pulse": 1.0,
                "gamma_env": 0.0,
                "coupling": 0.25,
                "pulse": {"shape": "gaussian", "width": 3.0},
                "sweep_axes": [
                    {"axis": "coupling_over_gamma_pulse", "start": 0.05, "stop": 1.0, "points": 20},
                    {"axis": "gamma_t_product", "start": 0.1, "stop": 10.0, "points": 34},
                ],
            },
        ),
        FigureRecipe(
            "figGauss-ep-slice",
            "Peak population and its time versus f / Gamma for a Gaussian pulse with Gamma T = 3, Gamma_perp = 0.",
            {
                "command": "sweep",
                "gamma_pulse": 1.0,
                "gamma_env": 0.0,
                "coupling": 0.25,
                "pulse": {"shape": "gaussian", "width": 3.0},
                "sweep_axes": [
                    {"axis": "coupling_over_gamma_pulse", "start": 0.05, "stop": 1.0, "points": 20},
                ],
            },
        ),
        FigureRecipe(
            "figD-lossy-optimal",
            "Optimal envelopes and resulting populations with Gamma_perp = 0.5 Gamma.",
            {
                "command": "optimal-pulse",
                "gamma_pulse": 1.0,
                "gamma_env": 0.5,
                "coupling": 0.375,
                "couplings": [0.1, 0.375, 0.75, 1.5],
                "truncation": 60.0,
                "grid": {"points": 400, "start": -20.0, "stop": 20.0},
            },
        ),
    ]
    return {r.name: r for r in items}


RECIPES = _recipes()
