"""Shapiro-Wilk normality test (Royston's AS R94 approximation, 3 <= n <= 5000).

The W statistic is the squared correlation between the ordered sample and a
set of normal-score coefficients; the p-value comes from Royston's
polynomial normalizing transformations of W, with separate branches for
n = 3, 4 <= n <= 11, and n >= 12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DataError

# Polynomial coefficients (ascending powers) of the AS R94 approximation.
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -2.0322e-3)
_C5 = (-1.5861, -0.31082, -0.083751, 3.8915e-3)
_C6 = (-0.4803, -0.082676, 3.0302e-3)
_G = (-2.273, 0.459)


@dataclass(frozen=True)
class ShapiroResult:
    statistic: float  # W, in (0, 1]
    p_value: float


def _poly(coefs, x):
    return sum(c * x**i for i, c in enumerate(coefs))


def _coefficients(n: int) -> np.ndarray:
    """Normal-score weights a_1..a_n (antisymmetric, unit norm)."""
    m = norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    mm = float(m @ m)
    c = m / np.sqrt(mm)
    a = np.empty(n)
    if n == 3:
        return np.array([-np.sqrt(0.5), 0.0, np.sqrt(0.5)])
    u = 1.0 / np.sqrt(n)
    a_n = c[-1] + _poly(_C1, u)
    if n > 5:
        a_n1 = c[-2] + _poly(_C2, u)
        phi = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2)
        a[2:-2] = m[2:-2] / np.sqrt(phi)
        a[-1], a[-2], a[0], a[1] = a_n, a_n1, -a_n, -a_n1
    else:
        phi = (mm - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
        a[1:-1] = m[1:-1] / np.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
    return a


def shapiro_wilk(x) -> ShapiroResult:
    """W statistic and p-value for the null hypothesis of normality."""
    x = np.sort(np.asarray(getattr(x, "values", x), dtype=float))
    n = len(x)
    if not 3 <= n <= 5000:
        raise ValueError(f"shapiro_wilk requires 3 <= n <= 5000, got n={n}")
    if np.isnan(x).any():
        raise DataError("shapiro_wilk: input contains NaN")
    ssq = float(np.sum((x - x.mean()) ** 2))
    if ssq <= 0 or x[-1] - x[0] < 1e-19:
        raise DataError("shapiro_wilk: zero variance input")

    a = _coefficients(n)
    w = float((a @ x) ** 2 / ssq)
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / np.pi * (np.arcsin(np.sqrt(w)) - np.arcsin(np.sqrt(0.75)))
        return ShapiroResult(statistic=w, p_value=float(min(max(p, 0.0), 1.0)))
    if n <= 11:
        gamma = _poly(_G, n)
        if gamma - np.log(1 - w) <= 0:
            return ShapiroResult(statistic=w, p_value=0.0)
        w_t = -np.log(gamma - np.log(1 - w))
        mu = _poly(_C3, n)
        sigma = np.exp(_poly(_C4, n))
    else:
        w_t = np.log(1 - w)
        ln_n = np.log(n)
        mu = _poly(_C5, ln_n)
        sigma = np.exp(_poly(_C6, ln_n))
    p = float(norm.sf((w_t - mu) / sigma))
    return ShapiroResult(statistic=w, p_value=p)
