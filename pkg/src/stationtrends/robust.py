"""Regression S-estimator with the Tukey biweight rho (50% breakdown point).

The slope/intercept pair minimizes the M-scale s of the residuals, where s
solves mean(rho(r_i / s)) = k and k = E[rho(Z)] under a standard normal Z
(so the estimate is consistent at the normal model). Minimization uses a
fast-S search: random two-point elemental starts, short iteratively
reweighted refinements, full refinement of the best few candidates.

An exact fit (at least half of the residuals zero) drives the M-scale to
zero; that case short-circuits and returns the interpolating line.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from .errors import ConvergenceError

#: Biweight tuning constant giving a 50% breakdown point.
TUNING_C = 1.547

N_STARTS = 50
N_KEEP = 5
REFINE_STEPS = 2
MAX_ITER = 200
SCALE_TOL = 1e-10
BETA_TOL = 1e-9

_ZERO_RTOL = 1e-12  # residuals below this (relative) count as exact zeros


def rho(u, c: float = TUNING_C):
    """Tukey biweight rho: increasing on [0, c], constant c^2/6 beyond."""
    u = np.asarray(u, dtype=float)
    v = u * u
    out = v / 2 - v * v / (2 * c * c) + v * v * v / (6 * c**4)
    return np.where(np.abs(u) <= c, out, c * c / 6)


def psi(u, c: float = TUNING_C):
    """rho' (the influence function)."""
    u = np.asarray(u, dtype=float)
    t = (u / c) ** 2
    return np.where(np.abs(u) <= c, u * (1 - t) ** 2, 0.0)


def psi_prime(u, c: float = TUNING_C):
    u = np.asarray(u, dtype=float)
    t = (u / c) ** 2
    return np.where(np.abs(u) <= c, (1 - t) * (1 - 5 * t), 0.0)


def biweight_weights(u, c: float = TUNING_C):
    """IRLS weights psi(u)/u, with w(0) = 1."""
    u = np.asarray(u, dtype=float)
    t = (u / c) ** 2
    return np.where(np.abs(u) <= c, (1 - t) ** 2, 0.0)


def rho_max(c: float = TUNING_C) -> float:
    return c * c / 6


@lru_cache(maxsize=None)
def scale_target(c: float = TUNING_C) -> float:
    """k = integral of rho(x) phi(x) dx over the standard normal density."""
    val, _ = quad(lambda x: float(rho(x, c)) * norm.pdf(x), -np.inf, np.inf)
    return val


@lru_cache(maxsize=None)
def slope_variance_factor(c: float = TUNING_C) -> float:
    """Asymptotic variance factor E[psi^2] / E[psi']^2 at the normal model."""
    e_psi2, _ = quad(lambda x: float(psi(x, c)) ** 2 * norm.pdf(x), -np.inf, np.inf)
    e_dpsi, _ = quad(lambda x: float(psi_prime(x, c)) * norm.pdf(x), -np.inf, np.inf)
    return e_psi2 / e_dpsi**2


def solve_scale(residuals, c: float = TUNING_C, tol: float = SCALE_TOL,
                max_iter: int = MAX_ITER) -> np.ndarray:
    """M-scale for each row of residuals, by bisection on mean(rho(r/s)) = k.

    Returns 0 for rows in an exact-fit state (so few nonzero residuals that
    the scale equation has no positive root). Accepts a 1-D array as a single
    row; always returns a 1-D array of per-row scales.
    """
    R = np.atleast_2d(np.abs(np.asarray(residuals, dtype=float)))
    m, n = R.shape
    k = scale_target(c)
    rmax = rho_max(c)
    zero_tol = _ZERO_RTOL * max(1.0, float(R.max(initial=0.0)))
    nz = R > zero_tol
    nz_count = nz.sum(axis=1)
    s = np.zeros(m)
    solvable = nz_count * rmax > k * n
    if not solvable.any():
        return s

    Rs = np.where(nz, R, np.inf)
    lo = np.where(solvable, Rs.min(axis=1) / (2 * c), 1.0)
    hi = np.where(solvable, np.maximum(R.max(axis=1), lo * 2), 2.0)

    def gap(scales):
        return rho(R / scales[:, None], c).mean(axis=1) - k

    for _ in range(max_iter):
        grow = solvable & (gap(hi) > 0)
        if not grow.any():
            break
        hi[grow] *= 2.0
    for _ in range(max_iter):
        active = solvable & (hi - lo > tol * np.maximum(hi, 1.0))
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        pos = gap(mid) > 0
        lo = np.where(active & pos, mid, lo)
        hi = np.where(active & ~pos, mid, hi)
    s[solvable] = 0.5 * (lo + hi)[solvable]
    return s


def _weighted_line(t, y, W, A, B):
    """Closed-form weighted LS line per candidate row; degenerate rows keep (A, B)."""
    sw = W.sum(axis=1)
    swt = W @ t
    swtt = W @ (t * t)
    swy = W @ y
    swty = W @ (t * y)
    denom = sw * swtt - swt * swt
    ok = denom > 1e-30
    slope = np.where(ok, (sw * swty - swt * swy) / np.where(ok, denom, 1.0), B)
    icpt = np.where(ok, (swy - slope * swt) / np.where(ok, sw, 1.0), A)
    return icpt, slope


def _pick_exact(R, A, B, zero_tol):
    zeros = (np.abs(R) <= zero_tol).sum(axis=1)
    i = int(np.argmax(zeros))
    return float(A[i]), float(B[i]), 0.0


def fast_s_line(t, y, *, n_starts: int = N_STARTS, n_keep: int = N_KEEP,
                refine_steps: int = REFINE_STEPS, max_iter: int = MAX_ITER,
                tol: float = BETA_TOL, seed: int = 0, c: float = TUNING_C):
    """S-estimate of (intercept, slope, scale) for y against t.

    Runs `n_starts` random two-point candidates, refines each with a couple
    of reweighted steps, then iterates the `n_keep` best to convergence and
    returns the candidate with the smallest M-scale.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    rng = np.random.default_rng(seed)
    zero_tol = _ZERO_RTOL * max(1.0, float(np.abs(y).max()))

    i = rng.integers(0, n, size=n_starts)
    j = rng.integers(0, n - 1, size=n_starts)
    j = j + (j >= i)
    B = (y[j] - y[i]) / (t[j] - t[i])
    A = y[i] - B * t[i]

    R = y[None, :] - A[:, None] - B[:, None] * t[None, :]
    s = solve_scale(R, c)
    if (s == 0).any():
        return _pick_exact(R[s == 0], A[s == 0], B[s == 0], zero_tol)

    for _ in range(refine_steps):
        W = biweight_weights(R / s[:, None], c)
        A, B = _weighted_line(t, y, W, A, B)
        R = y[None, :] - A[:, None] - B[:, None] * t[None, :]
        s = solve_scale(R, c)
        if (s == 0).any():
            return _pick_exact(R[s == 0], A[s == 0], B[s == 0], zero_tol)

    keep = np.argsort(s, kind="stable")[:n_keep]
    A, B, R, s = A[keep], B[keep], R[keep], s[keep]

    converged = np.zeros(len(keep), dtype=bool)
    for _ in range(max_iter):
        W = biweight_weights(R / s[:, None], c)
        A_new, B_new = _weighted_line(t, y, W, A, B)
        R_new = y[None, :] - A_new[:, None] - B_new[:, None] * t[None, :]
        s_new = solve_scale(R_new, c)
        if (s_new == 0).any():
            m = s_new == 0
            return _pick_exact(R_new[m], A_new[m], B_new[m], zero_tol)
        worse = s_new > s  # safeguard: a step that increases the scale is rejected
        step = np.maximum(np.abs(A_new - A), np.abs(B_new - B))
        small = step < tol * np.maximum(1.0, np.maximum(np.abs(A), np.abs(B)))
        upd = ~converged & ~worse
        A = np.where(upd, A_new, A)
        B = np.where(upd, B_new, B)
        R = np.where(upd[:, None], R_new, R)
        s = np.where(upd, s_new, s)
        converged |= worse | small
        if converged.all():
            break
    best = int(np.argmin(s))
    if not converged[best]:
        raise ConvergenceError(
            f"fast_s_line: best candidate did not converge within {max_iter} iterations"
        )
    return float(A[best]), float(B[best]), float(s[best])


def fast_s_location(y, *, n_starts: int = N_STARTS, max_iter: int = MAX_ITER,
                    tol: float = BETA_TOL, seed: int = 0, c: float = TUNING_C):
    """S-estimate of (location, scale): the intercept-only companion of fast_s_line."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    rng = np.random.default_rng(seed)
    starts = y[rng.integers(0, n, size=min(n_starts, 4 * n))]
    A = np.unique(np.append(starts, np.median(y)))

    R = y[None, :] - A[:, None]
    s = solve_scale(R, c)
    if (s == 0).any():
        i = int(np.argmax(s == 0))
        return float(A[i]), 0.0
    converged = np.zeros(len(A), dtype=bool)
    for _ in range(max_iter):
        W = biweight_weights(R / s[:, None], c)
        sw = W.sum(axis=1)
        ok = sw > 0
        A_new = np.where(ok, (W @ y) / np.where(ok, sw, 1.0), A)
        R_new = y[None, :] - A_new[:, None]
        s_new = solve_scale(R_new, c)
        if (s_new == 0).any():
            i = int(np.argmax(s_new == 0))
            return float(A_new[i]), 0.0
        worse = s_new > s
        small = np.abs(A_new - A) < tol * np.maximum(1.0, np.abs(A))
        upd = ~converged & ~worse
        A = np.where(upd, A_new, A)
        R = np.where(upd[:, None], R_new, R)
        s = np.where(upd, s_new, s)
        converged |= worse | small
        if converged.all():
            break
    best = int(np.argmin(s))
    return float(A[best]), float(s[best])
