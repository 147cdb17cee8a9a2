import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from qpulse import MaxSubdivisions, NoSignChange
from qpulse.numerics import erf_complex, erfc_complex, erfc_real, faddeeva, find_root, integrate


def test_integrate_constant():
    assert integrate(lambda t: 1.0, 0.0, 1.0).value == pytest.approx(1.0, abs=1e-14)


def test_integrate_gamma_integral():
    gamma = 0.5
    res = integrate(lambda u: u * u * math.exp(-gamma * u), 0.0, 40 / gamma)
    assert res.value == pytest.approx(2 / gamma**3, abs=1e-8)


def test_integrate_sin_squared():
    res = integrate(lambda t: math.sin(t) ** 2, 0.0, 2 * math.pi)
    assert res.value == pytest.approx(math.pi, abs=1e-10)


def test_integrate_complex_integrand():
    res = integrate(lambda t: np.exp(1j * t), 0.0, math.pi / 2)
    assert res.value == pytest.approx(1 + 1j, abs=1e-12)


def test_integrate_breakpoints_handle_jumps():
    f = lambda t: 1.0 if 0.3 <= t <= 0.7 else 0.0
    assert integrate(f, 0.0, 1.0, points=[0.3, 0.7]).value == pytest.approx(0.4, abs=1e-12)


def test_integrate_empty_interval():
    assert integrate(math.exp, 2.0, 2.0).value == 0.0


def test_integrate_reports_failure():
    with pytest.raises(MaxSubdivisions):
        integrate(lambda t: math.sin(1.0 / t) / t, 1e-12, 1.0, tol=1e-14)


@given(st.floats(0.1, 0.9))
def test_integrate_is_additive(b):
    f = lambda t: math.exp(-t) * math.cos(5 * t)
    tol = 1e-10
    whole = integrate(f, 0.0, 1.0, tol=tol).value
    parts = integrate(f, 0.0, b, tol=tol).value + integrate(f, b, 1.0, tol=tol).value
    assert abs(whole - parts) <= 2 * tol


def test_find_root_sqrt2():
    res = find_root(lambda x: x * x - 2, 1.0, 2.0)
    assert res.root == pytest.approx(math.sqrt(2), abs=1e-10)
    lo, hi = res.bracket
    assert lo <= res.root <= hi


def test_find_root_transcendental_oracle():
    # bisection reference in extended precision
    mp.mp.dps = 40
    ref = mp.findroot(lambda x: mp.e ** (-x) * (1 + x + x**2 / 2) - mp.mpf(1) / 2, (0, 10), solver="bisect", tol=1e-30)
    res = find_root(lambda x: math.exp(-x) * (1 + x + x * x / 2) - 0.5, 0.0, 10.0)
    assert res.root == pytest.approx(float(ref), abs=1e-12)
    assert round(res.root, 3) == 2.674


def test_find_root_power_stationarity():
    mp.mp.dps = 40
    ref = mp.findroot(lambda x: mp.e**x - (1 + x + x**2 / 2 + x**3 / 2), 3.4)
    res = find_root(lambda x: math.exp(x) - (1 + x + x * x / 2 + x**3 / 2), 1.0, 6.0)
    assert res.root == pytest.approx(float(ref), abs=1e-10)


def test_find_root_requires_sign_change():
    with pytest.raises(NoSignChange):
        find_root(lambda x: x * x + 1, -1.0, 1.0)


@given(st.floats(-1e3, 1e3), st.floats(0.1, 5.0))
def test_bracket_contains_sign_change(c, width):
    res = find_root(lambda x: math.atan(x - c), c - width, c + 2 * width)
    lo, hi = res.bracket
    assert math.atan(lo - c) * math.atan(hi - c) <= 0
    assert hi - lo <= 1e-12 * max(1, abs(res.root)) * 1.0000001


def test_erf_values():
    assert erfc_real(0.0) == 1.0
    assert faddeeva(0.0) == 1 + 0j
    assert 1 - erfc_real(1.0) == pytest.approx(0.8427007929, abs=1e-10)


@pytest.mark.parametrize("z", [0.3 + 0.2j, -2.5 + 1.0j, 4.0 - 3.0j, -6.0 - 0.5j, 0.01j, 25.0 + 25.0j, -30.0 + 0.1j])
def test_faddeeva_against_mpmath(z):
    mp.mp.dps = 30
    ref = complex(mp.exp(-mp.mpc(z) ** 2) * mp.erfc(-1j * mp.mpc(z)))
    assert abs(faddeeva(z) - ref) <= 1e-13 * max(1.0, abs(ref))


@pytest.mark.parametrize("z", [0.5 + 0.5j, -1.5 + 0.7j, 2.0 - 1.0j, -3.0 - 2.0j, 0.1 + 3.0j])
def test_complex_erf_against_mpmath(z):
    mp.mp.dps = 30
    ref_erf = complex(mp.erf(mp.mpc(z)))
    ref_erfc = complex(mp.erfc(mp.mpc(z)))
    assert abs(erf_complex(z) - ref_erf) <= 1e-12 * max(1.0, abs(ref_erf))
    assert abs(erfc_complex(z) - ref_erfc) <= 1e-12 * max(1.0, abs(ref_erfc))


@given(st.floats(-25.0, 25.0))
def test_erfc_real_against_mpmath(x):
    ref = float(mp.erfc(x))
    assert erfc_real(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)
