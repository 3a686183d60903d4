"""Linear trend detection and quantification for regular series.

Four routes are provided and reported side by side:

* ordinary least squares (slope, R^2, two-sided t-test on the slope),
* a robust S-estimator fit (Tukey biweight, 50% breakdown point),
* the Mann-Kendall test (S statistic, tie-corrected variance, Z score),
* Sen's slope (median of all pairwise slopes).

Prechecks cover Shapiro-Wilk normality and lag-1 serial correlation. The
time index is always encoded as t = 1..n; slopes are per index unit
(degC/year for annual series, degC/month-step for monthly ones).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm
from scipy.stats import t as t_dist

from . import robust
from .errors import DataError
from .swilk import ShapiroResult, shapiro_wilk


@dataclass(frozen=True)
class TrendFit:
    """One fitted trend line: slope/intercept plus fit quality and test result."""

    method: str  # "OLS" | "SEstimator" | "SenMK"
    slope: float
    intercept: float
    r_squared: float
    p_value: float

    @property
    def significant_5pct(self) -> bool:
        return self.p_value < 0.05


@dataclass(frozen=True)
class MKResult:
    """Mann-Kendall statistic with tie-corrected variance and normal score."""

    s_statistic: int
    variance: float
    z_score: float
    p_value: float
    n: int
    tie_groups: tuple[int, ...]

    @property
    def significant_5pct(self) -> bool:
        return self.p_value < 0.05


@dataclass(frozen=True)
class Lag1Result:
    r1: float
    threshold: float  # 1.96 / sqrt(n)

    @property
    def significant(self) -> bool:
        return abs(self.r1) > self.threshold


@dataclass(frozen=True)
class PrecheckReport:
    shapiro_w: float
    shapiro_p: float
    lag1_autocorr: float
    lag1_significant: bool


@dataclass(frozen=True)
class TrendReport:
    """All trend methods plus prechecks for one station and window."""

    station: str
    window: str
    ols: TrendFit
    s_est: TrendFit
    sen: TrendFit
    mk: MKResult
    precheck: PrecheckReport

    ROW_FIELDS = (
        "station,window,ols_slope,ols_r2,ols_p,s_slope,s_r2,s_p,"
        "sen_slope,sen_r2,mk_p,shapiro_p,lag1,lag1_sig"
    ).split(",")

    def to_row(self) -> dict:
        return {
            "station": self.station,
            "window": self.window,
            "ols_slope": self.ols.slope,
            "ols_r2": self.ols.r_squared,
            "ols_p": self.ols.p_value,
            "s_slope": self.s_est.slope,
            "s_r2": self.s_est.r_squared,
            "s_p": self.s_est.p_value,
            "sen_slope": self.sen.slope,
            "sen_r2": self.sen.r_squared,
            "mk_p": self.mk.p_value,
            "shapiro_p": self.precheck.shapiro_p,
            "lag1": self.precheck.lag1_autocorr,
            "lag1_sig": int(self.precheck.lag1_significant),
        }


def _as_values(series) -> np.ndarray:
    """Accept a RegularSeries or any 1-D array-like of values."""
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D series of values")
    if np.isnan(x).any():
        raise DataError("series contains missing values; impute first")
    return x


def ols_trend(series) -> TrendFit:
    """Least-squares line against t = 1..n with an intercept term.

    R^2 is 1 - SS_res/SS_tot; the p-value is the two-sided t-test on the
    slope with n-2 degrees of freedom. A constant series (SS_tot = 0) is
    reported with slope 0, R^2 = 0 and p = 1 rather than NaN.
    """
    y = _as_values(series)
    n = len(y)
    if n < 3:
        raise DataError(f"ols_trend requires n >= 3, got {n}")
    t = np.arange(1, n + 1, dtype=float)
    t_bar, y_bar = t.mean(), y.mean()
    sxx = np.sum((t - t_bar) ** 2)
    sxy = np.sum((t - t_bar) * (y - y_bar))
    slope = sxy / sxx
    intercept = y_bar - slope * t_bar
    ss_tot = np.sum((y - y_bar) ** 2)
    if ss_tot <= 0:
        return TrendFit("OLS", 0.0, float(y_bar), 0.0, 1.0)
    resid = y - intercept - slope * t
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 - ss_res / ss_tot
    if ss_res <= 0:
        return TrendFit("OLS", float(slope), float(intercept), 1.0, 0.0)
    se = np.sqrt(ss_res / (n - 2) / sxx)
    p = 2.0 * t_dist.sf(abs(slope / se), n - 2)
    return TrendFit("OLS", float(slope), float(intercept), float(r2), float(p))


def s_estimator_trend(series, seed: int = 0) -> TrendFit:
    """Robust trend via the biweight S-estimator (see the robust module).

    The robust R^2 is 1 - (s_model / s_null)^2 with s_null the M-scale of an
    intercept-only fit, clamped to [0, 1]; the p-value comes from the
    asymptotic normal test of the slope. An exact fit reports R^2 = 1, p = 0.
    """
    y = _as_values(series)
    n = len(y)
    if n < 5:
        raise DataError(f"s_estimator_trend requires n >= 5, got {n}")
    t = np.arange(1, n + 1, dtype=float)
    intercept, slope, scale = robust.fast_s_line(t, y, seed=seed)
    _, scale_null = robust.fast_s_location(y, seed=seed)
    if scale == 0.0:
        if np.allclose(y, y[0]):
            return TrendFit("SEstimator", 0.0, float(y[0]), 0.0, 1.0)
        return TrendFit("SEstimator", float(slope), float(intercept), 1.0, 0.0)
    r2 = 0.0 if scale_null == 0.0 else 1.0 - (scale / scale_null) ** 2
    r2 = float(min(max(r2, 0.0), 1.0))
    sxx = np.sum((t - t.mean()) ** 2)
    se = scale * np.sqrt(robust.slope_variance_factor() / sxx)
    p = 2.0 * norm.sf(abs(slope / se))
    return TrendFit("SEstimator", float(slope), float(intercept), r2, float(p))


def mann_kendall(series) -> MKResult:
    """Mann-Kendall test for a monotonic trend.

    S sums the signs of all pairwise later-minus-earlier differences;
    Var(S) = [N(N-1)(2N+5) - sum t_k(t_k-1)(2t_k+5)] / 18 over tie groups
    of size t_k; Z applies the +-1 continuity correction and the two-sided
    p-value uses the normal approximation.
    """
    x = _as_values(series)
    n = len(x)
    if n < 3:
        raise DataError(f"mann_kendall requires n >= 3, got {n}")
    diff_sign = np.sign(x[None, :] - x[:, None])
    s = int(np.triu(diff_sign, 1).sum())
    _, counts = np.unique(x, return_counts=True)
    ties = tuple(int(c) for c in counts[counts > 1])
    tie_term = sum(tk * (tk - 1) * (2 * tk + 5) for tk in ties)
    var_s = (n * (n - 1) * (2 * n + 5) - tie_term) / 18.0
    if var_s <= 0:
        raise DataError("mann_kendall: all values identical (zero variance)")
    if s > 0:
        z = (s - 1) / np.sqrt(var_s)
    elif s < 0:
        z = (s + 1) / np.sqrt(var_s)
    else:
        z = 0.0
    p = 2.0 * norm.sf(abs(z))
    return MKResult(s, float(var_s), float(z), float(p), n, ties)


def sens_slope(series, mk: MKResult | None = None) -> TrendFit:
    """Sen's slope: the median of all pairwise slopes (X_j - X_k)/(j - k).

    The intercept is median(X_i - Q t_i). R^2 is evaluated against the Sen
    line and floored at 0; the p-value is taken from the companion
    Mann-Kendall test.
    """
    x = _as_values(series)
    n = len(x)
    if n < 2:
        raise DataError(f"sens_slope requires n >= 2, got {n}")
    t = np.arange(1, n + 1, dtype=float)
    jj, kk = np.triu_indices(n, k=1)
    slopes = (x[kk] - x[jj]) / (t[kk] - t[jj])
    q = float(np.median(slopes))
    intercept = float(np.median(x - q * t))
    ss_tot = float(np.sum((x - x.mean()) ** 2))
    if ss_tot <= 0:
        r2 = 0.0
    else:
        ss_res = float(np.sum((x - intercept - q * t) ** 2))
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    if mk is None:
        mk = mann_kendall(x)
    return TrendFit("SenMK", q, intercept, r2, mk.p_value)


def lag1_check(series) -> Lag1Result:
    """Sample lag-1 autocorrelation with the 1.96/sqrt(N) significance bound."""
    x = _as_values(series)
    n = len(x)
    if n < 4:
        raise DataError(f"lag1_check requires n >= 4, got {n}")
    xc = x - x.mean()
    denom = float(np.sum(xc * xc))
    if denom <= 0:
        raise DataError("lag1_check: zero variance input")
    r1 = float(np.sum(xc[:-1] * xc[1:]) / denom)
    return Lag1Result(r1=r1, threshold=1.96 / np.sqrt(n))


def precheck(series) -> PrecheckReport:
    sw = shapiro_wilk(series)
    l1 = lag1_check(series)
    return PrecheckReport(
        shapiro_w=sw.statistic,
        shapiro_p=sw.p_value,
        lag1_autocorr=l1.r1,
        lag1_significant=l1.significant,
    )


def trend_report(series, station: str | None = None, window: str = "",
                 seed: int = 0) -> TrendReport:
    """Run all trend methods and prechecks on one regular, imputed series."""
    station = station or getattr(series, "station", "")
    mk = mann_kendall(series)
    return TrendReport(
        station=station,
        window=window,
        ols=ols_trend(series),
        s_est=s_estimator_trend(series, seed=seed),
        sen=sens_slope(series, mk=mk),
        mk=mk,
        precheck=precheck(series),
    )
