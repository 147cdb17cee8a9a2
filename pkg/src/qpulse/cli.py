"""``qpulse`` command line: simulations, optimizations and sweeps written as CSV or JSON.

Every command writes a table. CSV files start with ``# key: value`` metadata
lines, then a header whose entries carry units in parentheses, then rows with
floats in shortest round-trip form. JSON output holds the same content under
``metadata``, ``columns`` and ``rows``.
"""

from __future__ import annotations

import argparse
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .config import (
    COMMANDS,
    RECIPES,
    SHAPES,
    RunConfig,
    build_config,
    parse_source,
    pulse_to_dict,
)
from .dynamics import default_grid, ergotropy, ledger_trace, peak_excitation, simulate
from .errors import LedgerViolation, ParseError, QPulseError, ValidationError
from .optimal import min_time, optimal_pulse, power_optimal
from .params import SystemParams, classify_regime
from .pulses import (
    DecayExp,
    Delta,
    Gaussian,
    OptimalTruncated,
    PulseSpec,
    Sampled,
    Square,
    nominal_window,
    optimal_width_limit,
    pulse_value,
    pulse_width,
)

__all__ = ["Table", "run", "compute", "main", "EXIT_OK", "EXIT_INVALID", "EXIT_SOLVER", "EXIT_LEDGER", "EXIT_IO"]

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_LEDGER = 4

TOL_ENV = "QPULSE_TOL"


@dataclass
class Table:
    """Command result: ordered columns, rows and free-form metadata."""

    command: str
    columns: list[str]
    rows: list[list[Any]]
    metadata: dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _plain(value: Any) -> Any:
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value) + 0.0)  # no negative zeros
    return str(value)


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# command: {table.command}\n")
    for key in sorted(table.metadata):
        buf.write(f"# {key}: {json.dumps(_plain(table.metadata[key]), sort_keys=True)}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def render_json(table: Table) -> str:
    doc = {
        "command": table.command,
        "metadata": _plain(table.metadata),
        "columns": table.columns,
        "rows": _plain(table.rows),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _times(config: RunConfig, default: np.ndarray) -> np.ndarray:
    g = config.grid
    if g.start is None and g.stop is None:
        return default
    start = default[0] if g.start is None else g.start
    stop = default[-1] if g.stop is None else g.stop
    return np.linspace(start, stop, g.points)


def _params_metadata(params: SystemParams) -> dict[str, Any]:
    reg = classify_regime(params)
    return {
        "gamma_pulse": params.gamma_pulse,
        "gamma_env": params.gamma_env,
        "coupling": params.coupling,
        "omega_b": params.omega_b,
        "gamma": reg.gamma,
        "kappa": reg.kappa,
        "regime": reg.regime.value,
        "coupling_ep": reg.f_ep,
        "bound": params.bound,
    }


def _dynamics(config: RunConfig) -> tuple[Table, LedgerViolation | None]:
    params, spec = config.params, config.pulse
    times = _times(config, default_grid(params, spec, config.grid.points))
    trace = simulate(params, spec, times)
    ledgers = ledger_trace(params, spec, times, tol=config.tolerances.ledger, check=False)
    columns = [
        "t (1/rate)",
        "re_alpha0 (amplitude)",
        "im_alpha0 (amplitude)",
        "re_alpha1 (amplitude)",
        "im_alpha1 (amplitude)",
        "pop_alpha1 (probability)",
        "energy (omega_b units)",
        "ergotropy (omega_b units)",
        "ledger_total (probability)",
    ]
    rows = []
    worst = 0.0
    for i, t in enumerate(times):
        a0, a1 = trace.alpha0[i], trace.alpha1[i]
        total = ledgers[i].total
        worst = max(worst, abs(total - 1.0))
        rows.append([t, a0.real, a0.imag, a1.real, a1.imag, trace.population[i],
                     trace.energy[i], trace.ergotropy[i], total])
    meta = _params_metadata(params)
    meta.update(pulse=pulse_to_dict(spec), method=trace.method.value, ledger_max_deviation=worst)
    violation = None
    if worst > config.tolerances.ledger:
        violation = LedgerViolation(
            f"excitation ledger deviates from one by {worst!r} (tolerance {config.tolerances.ledger})"
        )
    return Table(config.command, columns, rows, meta), violation


def _compare_shapes(config: RunConfig) -> Table:
    params = config.params
    gamma = params.gamma
    t_sigma = config.t_sigma if config.t_sigma is not None else optimal_width_limit(params)
    truncation = config.truncation if config.truncation is not None else 40.0 / gamma
    shapes: list[tuple[str, PulseSpec]] = [
        ("square", Square(math.sqrt(12.0) * t_sigma)),
        ("decay-exp", DecayExp(t_sigma)),
        ("gaussian", Gaussian(t_sigma)),
        ("optimal", optimal_pulse(params, truncation)),
    ]
    starts = [nominal_window(s)[0] for _, s in shapes]
    stops = [default_grid(params, s, 2)[-1] for _, s in shapes]
    start = max(min(starts), -20.0 / gamma) - 1.0 / gamma
    default = np.linspace(start, max(stops), config.grid.points)
    times = _times(config, default)
    columns = ["shape", "t (1/rate)", "xi (1/sqrt(time))", "pop_alpha1 (probability)",
               "energy (omega_b units)", "ergotropy (omega_b units)"]
    rows = []
    meta = _params_metadata(params)
    meta["t_sigma"] = t_sigma
    for name, spec in shapes:
        trace = simulate(params, spec, times)
        xi = np.real(pulse_value(spec, times))
        for i, t in enumerate(times):
            rows.append([name, t, xi[i], trace.population[i], trace.energy[i], trace.ergotropy[i]])
        t_m, p_m = peak_excitation(params, spec)
        meta[f"{name}.t_sigma"] = pulse_width(spec).t_sigma
        meta[f"{name}.peak_time"] = t_m
        meta[f"{name}.peak_population"] = p_m
    return Table(config.command, columns, rows, meta)


def _optimal_pulse(config: RunConfig) -> Table:
    base = config.params
    couplings = config.couplings or (base.coupling,)
    columns = ["coupling (rate)", "t (1/rate)", "xi_opt (1/sqrt(time))", "pop_alpha1 (probability)",
               "energy (omega_b units)", "ergotropy (omega_b units)"]
    rows = []
    meta = _params_metadata(base)
    for f in couplings:
        params = replace(base, coupling=f)
        gamma = params.gamma
        truncation = config.truncation if config.truncation is not None else 40.0 / gamma
        spec = optimal_pulse(params, truncation)
        default = np.linspace(-min(truncation, 20.0 / gamma), 20.0 / gamma, config.grid.points)
        times = _times(config, default)
        trace = simulate(params, spec, times)
        xi = np.real(pulse_value(spec, times))
        for i, t in enumerate(times):
            rows.append([f, t, xi[i], trace.population[i], trace.energy[i], trace.ergotropy[i]])
        at_zero = float(simulate(params, spec, np.array([0.0])).population[0])
        meta[f"f={f!r}.regime"] = classify_regime(params).regime.value
        meta[f"f={f!r}.truncation"] = truncation
        meta[f"f={f!r}.pop_at_zero"] = at_zero
    return Table(config.command, columns, rows, meta)


def _solver_columns(sol) -> tuple[list[str], list[Any]]:
    return (
        ["root", "residual", "bracket_lo", "bracket_hi", "iterations"],
        [sol.root, sol.residual, sol.bracket[0], sol.bracket[1], sol.iterations],
    )


def _min_time(config: RunConfig) -> Table:
    params = config.params
    res = min_time(params, config.threshold, method="quadrature", tol=config.tolerances.root)
    names, values = _solver_columns(res.solver)
    columns = ["t_min (1/rate)", "gamma_t_min (dimensionless)", "p_threshold (probability)", "q (dimensionless)",
               "asymptotic_estimate (1/rate)", "closed_form_t_min (1/rate)"] + [f"{n} (solver)" for n in names]
    row = [res.t_min, params.gamma * res.t_min, res.p_threshold, res.q, res.asymptotic_estimate,
           res.closed_form_t_min] + values
    return Table(config.command, columns, [row], _params_metadata(params))


def _power(config: RunConfig) -> Table:
    params = config.params
    res = power_optimal(params, tol=config.tolerances.root)
    names, values = _solver_columns(res.solver)
    columns = ["t_star (1/rate)", "x_star (dimensionless)", "p_at_star (probability)",
               "p_over_bound (dimensionless)", "power (probability rate)",
               "power_over_gamma_bound (dimensionless)"] + [f"{n} (solver)" for n in names]
    row = [res.t_star, res.x_star, res.p_at_star, res.p_at_star / params.bound, res.power,
           res.power / (params.gamma * params.bound)] + values
    meta = _params_metadata(params)
    meta["candidates"] = [list(c) for c in res.candidates]
    return Table(config.command, columns, [row], meta)


def _respec(spec: PulseSpec, params: SystemParams, width: float | None) -> PulseSpec:
    if isinstance(spec, OptimalTruncated):
        return OptimalTruncated(spec.duration if width is None else width, params)
    if width is None:
        return spec
    if isinstance(spec, Square):
        return Square(width)
    if isinstance(spec, DecayExp):
        return DecayExp(width)
    if isinstance(spec, Gaussian):
        return Gaussian(width)
    if isinstance(spec, Delta):
        return Delta(width)
    raise ValidationError({"sweep_axes": "gamma_t_product cannot rescale a sampled pulse"})


def _sweep_cell(base: RunConfig, spec: PulseSpec, names: tuple[str, ...], values: tuple[float, ...]):
    params = base.params
    gp = params.gamma_pulse
    settings = dict(zip(names, values))
    if "gamma_env_over_gamma_pulse" in settings:
        params = replace(params, gamma_env=settings["gamma_env_over_gamma_pulse"] * gp)
    if "coupling_over_gamma_pulse" in settings:
        params = replace(params, coupling=settings["coupling_over_gamma_pulse"] * gp)
    width = settings["gamma_t_product"] / gp if "gamma_t_product" in settings else None
    cell_spec = _respec(spec, params, width)
    t_m, p_m = peak_excitation(params, cell_spec)
    return [*values, t_m, p_m, ergotropy(p_m, params.omega_b)]


def _sweep(config: RunConfig) -> Table:
    params = config.params
    spec = config.pulse if config.pulse is not None else Gaussian(3.0 / params.gamma_pulse)
    if isinstance(spec, Sampled) and any(a.name == "gamma_t_product" for a in config.sweep_axes):
        raise ValidationError({"sweep_axes": "gamma_t_product cannot rescale a sampled pulse"})
    names = tuple(a.name for a in config.sweep_axes)
    cells = list(itertools.product(*(a.values() for a in config.sweep_axes)))
    workers = min(len(cells), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        rows = list(pool.map(lambda c: _sweep_cell(config, spec, names, c), cells))
    columns = [f"{n} (dimensionless)" for n in names] + [
        "t_peak (1/rate)", "peak_population (probability)", "peak_ergotropy (omega_b units)"
    ]
    meta = _params_metadata(params)
    meta["pulse"] = pulse_to_dict(spec)
    # EP marker f_ep / Gamma = (1 + Gamma_perp / Gamma) / 4 for each environment ratio in play
    env_axis = next((a for a in config.sweep_axes if a.name == "gamma_env_over_gamma_pulse"), None)
    env_ratios = env_axis.values() if env_axis else [params.gamma_env / params.gamma_pulse]
    meta["ep_coupling_over_gamma_pulse"] = [[r, 0.25 * (1.0 + r)] for r in env_ratios]
    return Table(config.command, columns, rows, meta)


def compute(config: RunConfig) -> tuple[Table, LedgerViolation | None]:
    """Evaluate a command without writing anything."""
    if config.command == "dynamics":
        return _dynamics(config)
    handlers = {
        "compare-shapes": _compare_shapes,
        "optimal-pulse": _optimal_pulse,
        "min-time": _min_time,
        "power": _power,
        "sweep": _sweep,
    }
    return handlers[config.command](config), None


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def _error_record(exc: BaseException) -> str:
    record: dict[str, Any] = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ValidationError):
        record["problems"] = exc.problems
    if isinstance(exc, ParseError):
        record["line"] = exc.line
        record["field"] = exc.field
    return json.dumps(record, sort_keys=True)


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, LedgerViolation):
        return EXIT_LEDGER
    if isinstance(exc, (ParseError, ValidationError)):
        return EXIT_INVALID
    if isinstance(exc, QPulseError):
        return EXIT_SOLVER
    return EXIT_IO


def _write(config: RunConfig, table: Table, stdout) -> None:
    text = render_json(table) if config.output.format == "json" else render_csv(table)
    if config.output.path is None:
        stdout.write(text)
    else:
        with open(config.output.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute ``config``, write its output and return the exit status.

    Failures produce a one-line JSON error record on ``stderr``. A ledger
    violation still writes the data and then exits with ``EXIT_LEDGER``.
    """
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        table, violation = compute(config)
        _write(config, table, stdout)
    except (QPulseError, OSError) as exc:
        stderr.write(_error_record(exc) + "\n")
        return _exit_code(exc)
    if violation is not None:
        stderr.write(_error_record(violation) + "\n")
        return EXIT_LEDGER
    return EXIT_OK


def _env_tolerances(value: str) -> dict[str, float]:
    value = value.strip()
    try:
        tol = float(value)
        return {"quad": tol, "root": tol}
    except ValueError:
        pass
    out = {}
    for part in value.split(","):
        key, sep, num = part.partition("=")
        key = key.strip()
        if not sep or key not in ("quad", "root", "ledger"):
            raise ParseError(f"cannot read {TOL_ENV}={value!r}", field=TOL_ENV)
        try:
            out[key] = float(num)
        except ValueError:
            raise ParseError(f"bad number {num!r}", field=f"{TOL_ENV}.{key}") from None
    return out


def _merge(base: dict[str, Any], over: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qpulse",
        description="Single-photon charging of a quantum battery through a two-level charger. "
        "Rates on the command line are in units of Gamma.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="FILE", help="JSON or key = value configuration file")
    p.add_argument("--gamma-env-ratio", type=float, metavar="X", help="Gamma_perp / Gamma")
    p.add_argument("--coupling-ratio", type=float, metavar="X", help="f / Gamma")
    p.add_argument("--pulse", choices=[s for s in SHAPES if s != "sampled"], metavar="SHAPE",
                   help="square, decay-exp, gaussian, delta or optimal")
    p.add_argument("--pulse-width", type=float, metavar="X", help="Gamma T (Gamma t0 for delta)")
    p.add_argument("--threshold", type=float, metavar="P", help="charge threshold for min-time")
    p.add_argument("--truncation", type=float, metavar="X", help="Gamma times the optimal-pulse duration")
    p.add_argument("--grid", type=int, metavar="N", help="number of time samples")
    p.add_argument("--out", metavar="PATH", help="output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--recipe", choices=sorted(RECIPES), metavar="NAME",
                   help="figure preset: " + ", ".join(sorted(RECIPES)))
    return p


def config_from_args(args: argparse.Namespace, environ=None) -> RunConfig:
    """Layer recipe, ``QPULSE_TOL``, config file and flags, later ones winning."""
    environ = os.environ if environ is None else environ
    data: dict[str, Any] = {}
    if args.recipe:
        recipe = RECIPES[args.recipe]
        if recipe.settings["command"] != args.command:
            raise ValidationError(
                {"command": f"recipe {args.recipe!r} runs {recipe.settings['command']!r}, not {args.command!r}"}
            )
        data = _merge(recipe.settings, {"recipe": args.recipe})
    if environ.get(TOL_ENV):
        data = _merge(data, {"tolerances": _env_tolerances(environ[TOL_ENV])})
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            from_file = parse_source(fh.read())
        if "command" in from_file and from_file["command"] != args.command:
            raise ValidationError(
                {"command": f"config file runs {from_file['command']!r}, not {args.command!r}"}
            )
        data = _merge(data, from_file)
    data["command"] = args.command

    gp = data.get("gamma_pulse", 1.0)
    if not isinstance(gp, (int, float)) or isinstance(gp, bool) or not gp > 0:
        gp = 1.0  # build_config reports the bad value
    if args.gamma_env_ratio is not None:
        data["gamma_env"] = args.gamma_env_ratio * gp
    if args.coupling_ratio is not None:
        data["coupling"] = args.coupling_ratio * gp
    pulse = data.get("pulse")
    if isinstance(pulse, str):
        pulse = {"shape": pulse}
    if args.pulse is not None:
        pulse = {**(pulse or {}), "shape": args.pulse}
        pulse.pop("times", None)
        pulse.pop("values", None)
    if args.pulse_width is not None:
        pulse = {**(pulse or {"shape": "gaussian"}), "width": args.pulse_width / gp}
    if pulse is not None:
        if "width" not in pulse and pulse.get("shape") not in (None, "sampled"):
            pulse["width"] = 0.0 if pulse["shape"] == "delta" else 3.0 / gp
        data["pulse"] = pulse
    if args.threshold is not None:
        data["threshold"] = args.threshold
    if args.truncation is not None:
        data["truncation"] = args.truncation / gp
    if args.grid is not None:
        data["grid"] = _merge(data.get("grid", {}) if isinstance(data.get("grid"), dict)
                              else {"points": data.get("grid")} if "grid" in data else {}, {"points": args.grid})
    output = dict(data.get("output", {})) if isinstance(data.get("output"), dict) else data.get("output")
    if args.out is not None or args.format is not None:
        output = output if isinstance(output, dict) else {}
        if args.out is not None:
            output["path"] = args.out
        if args.format is not None:
            output["format"] = args.format
    if output is not None:
        data["output"] = output
    return build_config(data)


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (QPulseError, OSError) as exc:
        sys.stderr.write(_error_record(exc) + "\n")
        return _exit_code(exc)
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
