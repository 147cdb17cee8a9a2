import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from qpulse import (
    NoInteriorMaximum,
    OptimalTruncated,
    SystemParams,
    ThresholdUnreachable,
    amplitude_ode_oracle,
    charging_bound,
    ep_power_constants,
    min_time,
    optimal_pulse,
    p_of_duration,
    power_optimal,
)
from qpulse.optimal import min_time_ep_closed_form, p_rate

from .conftest import REGIME_PARAMS


def _mp_power_root():
    mp.mp.dps = 40
    return mp.findroot(lambda x: mp.e**x - (1 + x + x**2 / 2 + x**3 / 2), 3.4)


def test_bound_values():
    assert charging_bound(SystemParams(1.0, 0.0, 0.25)).bound == 1.0
    assert charging_bound(SystemParams(1.0, 1.0, 0.5)).bound == 0.5


@pytest.mark.parametrize("f", [0.1, 0.375, 1.0])
def test_bound_matches_kernel_norm(f):
    cb = charging_bound(SystemParams(1.0, 0.5, f))
    assert cb.bound == pytest.approx(2 / 3)
    assert cb.kernel_norm_sq == pytest.approx(2 / 3, abs=1e-6)


def test_optimal_pulse_is_truncated_time_reversal():
    p = SystemParams(1.0, 0.0, 0.25)
    assert optimal_pulse(p, 10.0) == OptimalTruncated(10.0, p)


def test_p_zero_duration():
    assert p_of_duration(SystemParams(), 0.0) == 0.0


def test_p_near_power_optimum_at_ep():
    p = SystemParams(1.0, 0.0, 0.25)
    assert p_of_duration(p, 3.389 / p.gamma) == pytest.approx(0.657, abs=2e-3)


@pytest.mark.parametrize("name", sorted(REGIME_PARAMS))
def test_p_matches_simulated_peak(name):
    p = REGIME_PARAMS[name]
    T = 6.0 / p.gamma
    ode = amplitude_ode_oracle(p, OptimalTruncated(T, p), np.array([0.0]))
    assert ode.population[0] == pytest.approx(p_of_duration(p, T), abs=1e-5)


@given(st.sampled_from(sorted(REGIME_PARAMS)), st.floats(0.01, 30.0))
def test_p_closed_matches_quadrature(name, x):
    p = REGIME_PARAMS[name]
    T = x / p.gamma
    assert p_of_duration(p, T) == pytest.approx(p_of_duration(p, T, method="quadrature"), rel=1e-9, abs=1e-14)


@given(st.sampled_from(sorted(REGIME_PARAMS)), st.floats(0.05, 30.0))
def test_p_rate_is_derivative(name, x):
    p = REGIME_PARAMS[name]
    T = x / p.gamma
    h = 1e-5 / p.gamma
    fd = (p_of_duration(p, T + h) - p_of_duration(p, T - h)) / (2 * h)
    assert p_rate(p, T) == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_p_saturates_at_bound():
    for name, p in REGIME_PARAMS.items():
        assert p_of_duration(p, math.inf) == pytest.approx(p.bound, abs=1e-12)


def test_min_time_half_at_ep():
    p = SystemParams(1.0, 0.0, 0.25)
    res = min_time(p, 0.5)
    assert p.gamma * res.t_min == pytest.approx(2.674, abs=1e-3)
    mp.mp.dps = 40
    ref = mp.findroot(lambda x: mp.e ** (-x) * (1 + x + x**2 / 2) - mp.mpf(1) / 2, 2.7)
    assert p.gamma * res.t_min == pytest.approx(float(ref), rel=1e-12)
    assert res.closed_form_t_min == pytest.approx(res.t_min, rel=1e-12)


def test_min_time_vanishes_with_threshold():
    p = SystemParams(1.0, 0.0, 0.25)
    times = [min_time(p, q).t_min for q in (1e-2, 1e-4, 1e-6)]
    assert times[0] > times[1] > times[2]
    assert times[2] < 0.05


def test_min_time_asymptote():
    p = SystemParams(1.0, 0.0, 0.25)
    res = min_time(p, 0.99)
    assert 0.5 <= res.asymptotic_estimate / res.t_min <= 1.0


@pytest.mark.parametrize("name", sorted(REGIME_PARAMS))
def test_min_time_reaches_threshold(name):
    p = REGIME_PARAMS[name]
    p_th = 0.6 * p.bound
    res = min_time(p, p_th, method="quadrature")
    assert p_of_duration(p, res.t_min) == pytest.approx(p_th, abs=1e-10)
    assert res.solver.bracket[0] <= res.t_min <= res.solver.bracket[1]


@pytest.mark.parametrize("p_th", [0.0, 1.0, 1.2])
def test_min_time_unreachable(p_th):
    with pytest.raises(ThresholdUnreachable):
        min_time(SystemParams(), p_th)


def test_min_time_unreachable_with_environment():
    with pytest.raises(ThresholdUnreachable):
        min_time(SystemParams(1.0, 1.0, 0.5), 0.5)


def test_ep_constants_match_oracle():
    x, ratio, power = ep_power_constants()
    ref = float(_mp_power_root())
    assert x == pytest.approx(ref, abs=1e-11)
    assert ratio == pytest.approx(1 - math.exp(-ref) * (1 + ref + ref * ref / 2), abs=1e-12)
    assert ratio == pytest.approx(0.657, abs=1e-3)
    assert power == pytest.approx(0.194, abs=1e-3)


def test_power_optimum_without_environment():
    p = SystemParams(1.0, 0.0, 0.25)
    res = power_optimal(p)
    assert res.x_star == pytest.approx(float(_mp_power_root()), abs=1e-9)
    assert res.power == pytest.approx(0.194 * 0.5, abs=1e-3)
    assert len(res.candidates) == 1


def test_power_optimum_with_equal_environment():
    p = SystemParams(1.0, 1.0, 0.5)
    res = power_optimal(p)
    assert res.power == pytest.approx(0.194 * 1.0 * 0.5, abs=1e-3)
    assert res.p_at_star / p.bound == pytest.approx(0.657, abs=1e-3)


@pytest.mark.parametrize("name", sorted(REGIME_PARAMS))
def test_power_optimum_beats_grid(name):
    p = REGIME_PARAMS[name]
    res = power_optimal(p)
    Ts = np.geomspace(0.01 / p.gamma, 100 / p.gamma, 200)
    grid_power = p_of_duration(p, Ts) / Ts
    assert res.power >= np.max(grid_power) - 1e-12


def test_strongly_underdamped_lists_candidates():
    p = SystemParams(1.0, 0.0, 3.0)
    res = power_optimal(p)
    assert len(res.candidates) >= 2
    assert res.power == max(c[1] for c in res.candidates)


def test_no_interior_maximum():
    with pytest.raises(NoInteriorMaximum):
        power_optimal(SystemParams(1.0, 0.0, 0.25), x_range=(1e-3, 1.0), scan_points=50)
