"""Parsing, aggregation, and seasonal imputation of raw station observations.

Raw files are one CSV per station with a timestamp and a value column
(RFC 4180, missing values as an empty field or "NA"). Observations live on
a fixed cadence grid; gaps are held explicitly as NaN slots so coverage
accounting stays exact. Monthly means below the coverage threshold are
treated as missing and later restored by calendar-month interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError

#: A monthly window with less than this fraction of raw samples present is
#: treated as missing (and subsequently imputed).
COVERAGE_THRESHOLD = 0.5

MINUTE = np.timedelta64(1, "m")


@dataclass(frozen=True)
class ObsSchema:
    """Column mapping and timezone declaration for one raw observation file."""

    timestamp: str = "timestamp"
    value: str = "value"
    timezone: str = "UTC"
    cadence_min: int = 60
    na_markers: tuple[str, ...] = ("", "NA")

    def __post_init__(self):
        if self.cadence_min <= 0:
            raise DataError(f"cadence_min must be positive, got {self.cadence_min}")


@dataclass(frozen=True)
class ObservationSeries:
    """Raw readings on a uniform UTC grid; NaN marks a missing slot.

    The grid runs from `start` in steps of `cadence_min`; values[i] holds the
    reading at start + i * cadence. n_parsed / n_rejected report how many file
    rows carried a usable value and how many were discarded as unparseable.
    """

    station: str
    start: np.datetime64
    cadence_min: int
    values: np.ndarray
    n_parsed: int = 0
    n_rejected: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(len(self.values)) * self.cadence_min * MINUTE

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.values).sum())


@dataclass(frozen=True)
class RegularSeries:
    """Gap-free (after imputation) monthly or annual mean series for one station.

    Keys are parallel (years, months) arrays sorted chronologically; months is
    None at annual resolution. coverage[i] is the fraction of expected raw
    samples that were present in key i before any imputation.
    """

    station: str
    resolution: str  # "monthly" | "annual"
    years: np.ndarray
    months: np.ndarray | None
    values: np.ndarray
    coverage: np.ndarray

    def __post_init__(self):
        if self.resolution not in ("monthly", "annual"):
            raise ValueError(f"resolution must be monthly|annual, got {self.resolution!r}")
        for name in ("years", "months", "values", "coverage"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float if name in ("values", "coverage") else int)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.resolution == "annual" and self.months is not None:
            raise ValueError("annual series must not carry a months index")
        if self.resolution == "monthly" and self.months is None:
            raise ValueError("monthly series requires a months index")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.values).sum())

    def month_values(self, month: int) -> np.ndarray:
        """Year-ordered sub-series of one calendar month (monthly resolution only)."""
        if self.resolution != "monthly":
            raise ValueError("month_values requires monthly resolution")
        sel = self.months == month
        order = np.argsort(self.years[sel])
        return self.values[sel][order]

    def clip_years(self, start_year: int, end_year: int) -> "RegularSeries":
        sel = (self.years >= start_year) & (self.years <= end_year)
        return replace(
            self,
            years=self.years[sel],
            months=None if self.months is None else self.months[sel],
            values=self.values[sel],
            coverage=self.coverage[sel],
        )


@dataclass(frozen=True)
class MissingnessSummary:
    """Share of expected raw samples absent, overall and per calendar month."""

    station: str
    pct_missing: float
    per_month_pct: np.ndarray = field(default_factory=lambda: np.zeros(12))


def parse_observations(path, schema: ObsSchema) -> ObservationSeries:
    """Read one raw station CSV into an explicit-gap observation series.

    Timestamps are converted from the schema's declared timezone to UTC and
    must be strictly increasing with every gap a whole multiple of the
    declared cadence. Empty/NA values become NaN slots; rows whose value
    field cannot be parsed as a number are counted as rejected and treated
    as missing.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"observation file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:
        raise DataError(f"{path}: unreadable CSV: {exc}") from exc
    for col in (schema.timestamp, schema.value):
        if col not in df.columns:
            raise DataError(f"{path}: missing column {col!r}")
    if len(df) == 0:
        raise DataError(f"{path}: no observation rows")

    try:
        ts = pd.to_datetime(df[schema.timestamp], utc=False, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: unparseable timestamps: {exc}") from exc
    if ts.dt.tz is None:
        ts = ts.dt.tz_localize(schema.timezone)
    ts = ts.dt.tz_convert("UTC")

    epoch_min = ts.astype("int64").to_numpy() // 60_000_000_000
    diffs = np.diff(epoch_min)
    if np.any(diffs <= 0):
        i = int(np.argmax(diffs <= 0)) + 1
        raise DataError(f"{path}: non-monotonic timestamps at row {i + 1}")
    if np.any((epoch_min - epoch_min[0]) % schema.cadence_min != 0):
        i = int(np.argmax((epoch_min - epoch_min[0]) % schema.cadence_min != 0))
        raise DataError(
            f"{path}: cadence violation at row {i + 1}: timestamp not on the "
            f"{schema.cadence_min}-minute grid"
        )

    raw = df[schema.value].str.strip().to_numpy()
    is_na = np.isin(raw, schema.na_markers)
    vals = np.full(len(raw), np.nan)
    n_rejected = 0
    todo = ~is_na
    try:
        vals[todo] = raw[todo].astype(float)
    except ValueError:
        # slow path: isolate the rows that do not parse
        for i in np.flatnonzero(todo):
            try:
                vals[i] = float(raw[i])
            except ValueError:
                n_rejected += 1
    n_parsed = int(np.sum(~np.isnan(vals)))

    slot = (epoch_min - epoch_min[0]) // schema.cadence_min
    grid = np.full(int(slot[-1]) + 1, np.nan)
    grid[slot] = vals
    start = np.datetime64(int(epoch_min[0]), "m")
    return ObservationSeries(
        station=path.stem,
        start=start,
        cadence_min=schema.cadence_min,
        values=grid,
        n_parsed=n_parsed,
        n_rejected=n_rejected,
    )


def _window_keys(obs: ObservationSeries, resolution: str):
    """Assign every grid slot to its (year, month) or (year,) window."""
    ts = obs.timestamps
    years = ts.astype("datetime64[Y]").astype(int) + 1970
    if resolution == "annual":
        return years
    months = ts.astype("datetime64[M]").astype(int) % 12 + 1
    return years * 12 + (months - 1)


def aggregate(obs: ObservationSeries, resolution: str,
              coverage_threshold: float = COVERAGE_THRESHOLD) -> RegularSeries:
    """Mean of present raw samples per monthly or annual window.

    A window whose coverage (present / expected slots) falls below the
    threshold is marked missing (NaN) for later imputation. Window keys cover
    the full observation span, so the key index is contiguous by construction.
    """
    if resolution not in ("monthly", "annual"):
        raise ValueError(f"resolution must be monthly|annual, got {resolution!r}")
    if len(obs) == 0:
        raise DataError(f"station {obs.station}: empty observation series")
    key = _window_keys(obs, resolution)
    uniq, inv = np.unique(key, return_inverse=True)
    present = ~np.isnan(obs.values)
    sums = np.bincount(inv[present], weights=obs.values[present], minlength=len(uniq))
    counts = np.bincount(inv[present], minlength=len(uniq))
    expected = np.bincount(inv, minlength=len(uniq))
    coverage = counts / expected
    means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    means[coverage < coverage_threshold] = np.nan
    if resolution == "annual":
        years, months = uniq, None
    else:
        years, months = uniq // 12, uniq % 12 + 1
    return RegularSeries(
        station=obs.station,
        resolution=resolution,
        years=years,
        months=months,
        values=means,
        coverage=coverage,
    )


def impute_seasonal(series: RegularSeries) -> RegularSeries:
    """Fill missing monthly means by interpolation within each calendar month.

    The series is segmented into the twelve calendar-month sub-series
    (year -> value for month m); interior gaps in a sub-series are filled by
    linear interpolation over years, boundary gaps by the nearest observed
    value. Observed values are never modified.
    """
    if series.resolution != "monthly":
        raise ValueError("impute_seasonal requires a monthly series")
    if series.n_missing == 0:
        return series
    values = np.array(series.values)
    for m in range(1, 13):
        sel = np.flatnonzero(series.months == m)
        sel = sel[np.argsort(series.years[sel])]
        sub = values[sel]
        gaps = np.isnan(sub)
        if not gaps.any():
            continue
        obs_idx = np.flatnonzero(~gaps)
        if len(obs_idx) == 0:
            raise DataError(
                f"station {series.station}: calendar month {m} has no observed values, cannot impute"
            )
        if len(obs_idx) < 2:
            raise DataError(
                f"station {series.station}: calendar month {m} has fewer than 2 observed values, cannot impute"
            )
        fill = np.interp(np.flatnonzero(gaps), obs_idx, sub[obs_idx])
        sub[gaps] = fill
        values[sel] = sub
    return replace(series, values=values)


def annual_from_monthly(series: RegularSeries) -> RegularSeries:
    """Annual means as the equal-weight average of the 12 imputed monthly means.

    Keeps monthly and annual products mutually consistent. Requires a
    gap-free monthly series covering whole years.
    """
    if series.resolution != "monthly":
        raise ValueError("annual_from_monthly requires a monthly series")
    if series.n_missing:
        raise DataError(f"station {series.station}: impute before computing annual means")
    years = np.unique(series.years)
    vals = np.empty(len(years))
    cov = np.empty(len(years))
    for i, y in enumerate(years):
        sel = series.years == y
        if sel.sum() != 12:
            raise DataError(
                f"station {series.station}: year {y} has {int(sel.sum())} months, expected 12"
            )
        vals[i] = series.values[sel].mean()
        cov[i] = series.coverage[sel].mean()
    return RegularSeries(
        station=series.station,
        resolution="annual",
        years=years,
        months=None,
        values=vals,
        coverage=cov,
    )


def missingness(obs: ObservationSeries) -> MissingnessSummary:
    """Percentage of expected raw samples absent, overall and per calendar month."""
    absent = np.isnan(obs.values)
    pct = 100.0 * absent.sum() / len(obs)
    months = obs.timestamps.astype("datetime64[M]").astype(int) % 12 + 1
    per_month = np.zeros(12)
    for m in range(1, 13):
        sel = months == m
        per_month[m - 1] = 100.0 * absent[sel].sum() / sel.sum() if sel.any() else 0.0
    return MissingnessSummary(station=obs.station, pct_missing=float(pct), per_month_pct=per_month)


# ---------------------------------------------------------------------------
# Series file formats (year,month,mean_c,coverage / year,mean_c,coverage)
# ---------------------------------------------------------------------------

def write_series_csv(series: RegularSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        if series.resolution == "monthly":
            fh.write("year,month,mean_c,coverage\n")
            for y, m, v, c in zip(series.years, series.months, series.values, series.coverage):
                v_str = "" if np.isnan(v) else f"{v:.4f}"
                fh.write(f"{y},{m},{v_str},{c:.4f}\n")
        else:
            fh.write("year,mean_c,coverage\n")
            for y, v, c in zip(series.years, series.values, series.coverage):
                v_str = "" if np.isnan(v) else f"{v:.4f}"
                fh.write(f"{y},{v_str},{c:.4f}\n")


def read_series_csv(path, station: str) -> RegularSeries:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"series file not found: {path}")
    df = pd.read_csv(path)
    monthly = "month" in df.columns
    return RegularSeries(
        station=station,
        resolution="monthly" if monthly else "annual",
        years=df["year"].to_numpy(),
        months=df["month"].to_numpy() if monthly else None,
        values=df["mean_c"].to_numpy(dtype=float),
        coverage=df["coverage"].to_numpy(dtype=float),
    )
