"""Exact integrals of polynomial-times-exponential integrands.

Closed-form amplitudes reduce to sums of integrals

    exp(shift) * integral_a^b tau**n exp(c tau) dtau,   n <= 3,

with complex ``c``. They are evaluated through phi_k(x) = int_0^1 u**k e^(x u) du
expanded about whichever end of the interval keeps Re(x) <= 0, so neither
overflow nor cancellation near c = 0 occurs.
"""

from __future__ import annotations

from math import comb, factorial

import numpy as np

_SERIES_TERMS = 30
_SERIES_COEF = np.array([1.0 / factorial(j) for j in range(_SERIES_TERMS)])


def phi(x: np.ndarray, kmax: int) -> list[np.ndarray]:
    """[phi_0(x), ..., phi_kmax(x)] for complex ``x`` with Re(x) <= 0."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1.0
    xs = np.where(small, x, 0.0)
    xl = np.where(small, 1.0, x)
    powers = xs[..., None] ** np.arange(_SERIES_TERMS)
    ex = np.exp(xl)
    out = []
    prev = np.expm1(xl) / xl
    for k in range(kmax + 1):
        series = np.sum(powers * (_SERIES_COEF / (np.arange(_SERIES_TERMS) + k + 1)), axis=-1)
        if k > 0:
            prev = (ex - k * prev) / xl
        out.append(np.where(small, series, prev))
    return out


def poly_exp_integral(
    n: int, c: complex, a: float, b: np.ndarray, shift: np.ndarray | complex = 0.0
) -> np.ndarray:
    """exp(shift) * int_a^b tau**n exp(c tau) dtau, zero wherever b <= a."""
    b = np.asarray(b, dtype=float)
    length = np.maximum(b - a, 0.0)
    if c.real <= 0:
        base = np.full_like(b, a)
        sign = 1.0
        ph = phi(c * length, n)
    else:
        base = b
        sign = -1.0
        ph = phi(-c * length, n)
    total = np.zeros(b.shape, dtype=complex)
    for k in range(n + 1):
        total = total + comb(n, k) * base ** (n - k) * sign**k * length ** (k + 1) * ph[k]
    with np.errstate(over="ignore", invalid="ignore"):
        scaled = np.exp(shift + c * base) * total
    return np.where(length > 0, scaled, 0.0)
