"""Acceptance suite: one pass/fail line per criterion, with its runtime budget.

Run directly (``python tests/test_acceptance.py``) for the summary lines, or
through pytest, where each criterion is a test that prints its line.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import pytest
from scipy import interpolate, optimize

from qpulse import (
    DecayExp,
    Gaussian,
    OptimalTruncated,
    Sampled,
    Square,
    SystemParams,
    amplitude_convolution,
    amplitude_ode_oracle,
    ergotropy,
    ep_power_constants,
    green,
    green_sq_integral,
    green_sq_integral_quadrature,
    min_time,
    norm_ledger,
    p_of_duration,
    peak_excitation,
    power_optimal,
    simulate,
)
from qpulse.optimal import min_time_ep_closed_form
from qpulse.pulses import nominal_window


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    elapsed: float
    budget: float

    @property
    def ok(self) -> bool:
        return self.passed and self.elapsed < self.budget

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        timing = f"{self.elapsed:.2f}s < {self.budget:g}s" if self.elapsed < self.budget else (
            f"{self.elapsed:.2f}s over the {self.budget:g}s budget"
        )
        return f"[{status}] criterion {self.number} ({self.title}): {self.detail}; {timing}"


def _ep(gamma_env_ratio: float, scale: float = 1.0) -> SystemParams:
    gamma = 0.5 * (1.0 + gamma_env_ratio)
    return SystemParams(1.0, gamma_env_ratio, scale * 0.5 * gamma)


# ---------------------------------------------------------------------------


def criterion_1():
    worst = 0.0
    for ge in (0.0, 0.5, 1.0):
        for scale in (0.3, 1.0, 3.0):
            p = _ep(ge, scale)
            kernel = p.coupling**2 * p.gamma_pulse * green_sq_integral_quadrature(p, math.inf)
            closed = p.coupling**2 * p.gamma_pulse * green_sq_integral(p, math.inf)
            worst = max(worst, abs(kernel - p.bound), abs(closed - p.bound))
    return worst <= 1e-6, f"max |f^2 Gamma int G^2 - bound| = {worst:.2e} over 9 sets (tol 1e-6)"


def criterion_2():
    worst = 0.0
    for ge in (0.0, 0.5, 1.0):
        p = _ep(ge)
        spec = OptimalTruncated(40.0 / p.gamma, p)
        pop = amplitude_ode_oracle(p, spec, np.array([0.0])).population[0]
        worst = max(worst, abs(pop - p.bound))
    return worst <= 1e-4, f"max ||alpha1(0)|^2 - bound| = {worst:.2e} at gamma T = 40 (tol 1e-4)"


def criterion_3():
    x_star, ratio, scaled_power = ep_power_constants()
    res = power_optimal(SystemParams(1.0, 0.0, 0.25))
    ok_x = abs(res.x_star - 3.389) <= 1e-3
    ok_ratio = abs(res.p_at_star / 1.0 - 0.657) <= 1e-3
    gamma = 0.5
    ok_power = abs(res.power - 0.194 * gamma * 1.0) <= 1e-3 * gamma
    detail = (
        f"x* = {res.x_star:.7f} (target 3.389 +- 0.001: {'ok' if ok_x else 'MISS'}), "
        f"p(T*)/bound = {res.p_at_star:.5f} ({'ok' if ok_ratio else 'MISS'}), "
        f"P*/(gamma bound) = {res.power / gamma:.5f} ({'ok' if ok_power else 'MISS'}); "
        f"closed-form root {x_star:.10f}"
    )
    return ok_x and ok_ratio and ok_power, detail


def criterion_4():
    worst_rel = 0.0
    worst_res = 0.0
    for ge in (0.0, 0.5, 1.0):
        p = _ep(ge)
        for q in (0.1, 0.5, 0.9):
            p_th = q * p.bound
            generic = min_time(p, p_th, method="quadrature")
            closed = min_time_ep_closed_form(p, p_th).root / p.gamma
            worst_rel = max(worst_rel, abs(generic.t_min - closed) / closed)
            worst_res = max(worst_res, abs(p_of_duration(p, generic.t_min, method="quadrature") - p_th))
    ok = worst_rel <= 1e-8 and worst_res <= 1e-10
    return ok, f"max relative gap {worst_rel:.2e} (tol 1e-8), max residual {worst_res:.2e} (tol 1e-10)"


def _draw_params(rng, regime: str) -> SystemParams:
    ge = rng.uniform(0.0, 1.0)
    gamma = 0.5 * (1.0 + ge)
    factor = {"under": rng.uniform(1.5, 4.0), "ep": 1.0, "over": rng.uniform(0.2, 0.7)}[regime]
    return SystemParams(1.0, ge, factor * 0.5 * gamma)


def criterion_5():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    count = 0
    for regime in ("under", "ep", "over"):
        for _ in range(3):
            p = _draw_params(rng, regime)
            width = rng.uniform(0.5, 4.0)
            for spec in (Square(math.sqrt(12.0) * width), DecayExp(width), Gaussian(width)):
                start = nominal_window(spec)[0]
                times = np.linspace(start, start + 30.0 / p.gamma, 300)
                closed = simulate(p, spec, times)
                ode = amplitude_ode_oracle(p, spec, times)
                worst = max(worst, float(np.max(np.abs(closed.alpha1 - ode.alpha1))))
                count += 1
    return worst <= 1e-6 and count == 27, f"max |alpha1_closed - alpha1_ode| = {worst:.2e} over {count} scenarios (tol 1e-6)"


def criterion_6():
    rng = np.random.default_rng(7)
    worst = 0.0
    count = 0
    for regime in ("under", "ep", "over"):
        p = _draw_params(rng, regime)
        for spec in (Square(3.0), DecayExp(1.5), Gaussian(2.0)):
            start = nominal_window(spec)[0]
            for t in np.linspace(start - 1.0, start + 30.0 / p.gamma, 20):
                led = norm_ledger(p, spec, float(t), check=False)
                worst = max(worst, abs(led.total - 1.0))
            count += 1
    return worst <= 1e-5, f"max |ledger total - 1| = {worst:.2e} at 20 times x {count} scenarios (tol 1e-5)"


def _random_pulses(rng, params: SystemParams, duration: float, n: int = 10) -> list[Sampled]:
    grid = np.linspace(-duration, 0.0, 101)
    # a sampled copy of the optimum probes the bound from just below
    pulses = [
        Sampled(tuple(grid), tuple(green(params, -grid).g)),
        Sampled(tuple(grid), tuple(np.ones_like(grid))),
    ]
    for _ in range(3):
        centre = rng.uniform(-duration, 0.0)
        width = rng.uniform(0.1, 0.5) * duration
        pulses.append(Sampled(tuple(grid), tuple(np.exp(-((grid - centre) ** 2) / (4 * width**2)))))
    while len(pulses) < n:
        knots = np.linspace(-duration, 0.0, rng.integers(4, 9))
        spline = interpolate.CubicSpline(knots, rng.normal(size=knots.size))
        pulses.append(Sampled(tuple(grid), tuple(spline(grid))))
    return pulses


def criterion_7():
    rng = np.random.default_rng(11)
    worst = -math.inf
    count = 0
    for p in (SystemParams(1.0, 0.0, 0.25), SystemParams(1.0, 0.5, 1.0), SystemParams(1.0, 0.2, 0.15)):
        for x in (2.0, 5.0, 10.0):
            duration = x / p.gamma
            limit = p_of_duration(p, duration)
            for spec in _random_pulses(rng, p, duration):
                pop = amplitude_convolution(p, spec, np.array([0.0]), tol=1e-13).population[0]
                worst = max(worst, pop - limit)
                count += 1
    return worst <= 1e-8, f"max excess over p(T) = {worst:.2e} across {count} random pulses (tol 1e-8)"


def criterion_8():
    p = SystemParams(1.0, 0.0, 0.25)
    xs = np.linspace(0.5, 10.0, 39)
    peaks = [peak_excitation(p, Gaussian(x))[1] for x in xs]
    i = int(np.argmax(peaks))
    res = optimize.minimize_scalar(
        lambda x: -peak_excitation(p, Gaussian(x))[1], bounds=(xs[max(i - 1, 0)], xs[i + 1]), method="bounded",
        options={"xatol": 1e-6},
    )
    x_best = float(res.x)

    lossy = SystemParams(1.0, 1.0, 0.5)
    max_erg = 0.0
    max_pop = 0.0
    for f_ratio in np.linspace(0.05, 1.0, 20):
        q = SystemParams(1.0, 1.0, f_ratio)
        for x in np.linspace(0.1, 10.0, 34):
            _, pop = peak_excitation(q, Gaussian(x))
            max_pop = max(max_pop, pop)
            max_erg = max(max_erg, ergotropy(pop, lossy.omega_b))
    ok = 2.5 <= x_best <= 3.5 and max_erg == 0.0
    return ok, (
        f"best Gamma T = {x_best:.4f} (peak {-res.fun:.5f}, window [2.5, 3.5]); "
        f"Gamma_perp = Gamma: max peak {max_pop:.5f}, max ergotropy {max_erg:g} over 680 cells"
    )


def criterion_9():
    worst_g = 0.0
    worst_p = 0.0
    for ge in (0.0, 0.5, 1.0):
        base = _ep(ge)
        ts = np.linspace(0.0, 20.0 / base.gamma, 2001)
        g_ep = green(base, ts).g
        p_ep = p_of_duration(base, ts)
        for sign in (1, -1):
            near = SystemParams(1.0, ge, base.coupling * (1 + sign * 1e-5))
            worst_g = max(worst_g, float(np.max(np.abs(green(near, ts).g - g_ep))))
            worst_p = max(worst_p, float(np.max(np.abs(p_of_duration(near, ts) - p_ep))))
    ok = worst_g <= 1e-4 and worst_p <= 1e-4
    return ok, f"max |G - G_ep| = {worst_g:.2e}, max |p - p_ep| = {worst_p:.2e} (tol 1e-4)"


CRITERIA = [
    (1, "saturation bound", criterion_1, 1.0),
    (2, "optimal-pulse saturation", criterion_2, 5.0),
    (3, "power constants at the EP", criterion_3, 1.0),
    (4, "min-time consistency", criterion_4, 2.0),
    (5, "oracle equivalence", criterion_5, 30.0),
    (6, "norm conservation", criterion_6, 30.0),
    (7, "matched-filter optimality", criterion_7, 20.0),
    (8, "Gaussian sweep landmark", criterion_8, 60.0),
    (9, "regime continuity", criterion_9, 2.0),
]


def evaluate(number: int) -> Outcome:
    _, title, fn, budget = next(c for c in CRITERIA if c[0] == number)
    start = time.perf_counter()
    passed, detail = fn()
    return Outcome(number, title, passed, detail, time.perf_counter() - start, budget)


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA])
def test_criterion(number):
    outcome = evaluate(number)
    print("\n" + outcome.line())
    assert outcome.ok, outcome.line()


if __name__ == "__main__":
    for number, *_ in CRITERIA:
        print(evaluate(number).line(), flush=True)
