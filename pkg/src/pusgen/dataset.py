"""Hourly CSV ingestion, per-component standardization and daily reshaping.

A day of data for ``n`` attributes is held as a vector ``v`` of length
``24 * n``. Component ``attr * 24 + hour`` holds attribute ``attr`` at
``hour``, so ``v.reshape(n, 24)`` is the matrix with one attribute profile
per row.
"""

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import HOURS, check_points, frozen
from .exceptions import (
    DegenerateBoundary,
    DimensionMismatch,
    MissingHours,
    NonMonotoneTimestamps,
    NonNumericCell,
    SchemaMismatch,
    TooFewDays,
)

# relative threshold below which a component is considered constant
DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class RawSeries:
    """Validated hourly records: ``values`` has one row per hour."""

    timestamps: tuple
    values: np.ndarray
    attribute_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", frozen(self.values))
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))

    @property
    def n_attributes(self):
        return len(self.attribute_names)

    @property
    def n_days(self):
        return self.values.shape[0] // HOURS

    def daily_points(self):
        """Day vectors of shape ``(m, 24 * n)`` in attribute-major layout."""
        return hourly_to_daily(self.values)


@dataclass(frozen=True)
class StandardizedDataset:
    points: np.ndarray
    component_means: np.ndarray
    component_stds: np.ndarray
    degenerate: np.ndarray
    attribute_names: tuple

    def __post_init__(self):
        for name in ("points", "component_means", "component_stds"):
            object.__setattr__(self, name, frozen(getattr(self, name)))
        deg = np.array(self.degenerate, dtype=bool)
        deg.setflags(write=False)
        object.__setattr__(self, "degenerate", deg)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))

    @property
    def n_attributes(self):
        return len(self.attribute_names)

    @property
    def n_days(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def layout(self):
        return component_layout(self.n_attributes)

    def matrices(self):
        """Standardized profiles as an ``(m, n, 24)`` array."""
        return self.points.reshape(self.n_days, self.n_attributes, HOURS)


@dataclass(frozen=True)
class BoundaryStats:
    """Mean and std of the overnight step ``V[i+1][:, 0] - V[i][:, 23]``."""

    mu_delta: np.ndarray
    sigma_delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu_delta", frozen(self.mu_delta))
        object.__setattr__(self, "sigma_delta", frozen(self.sigma_delta))


def component_layout(n_attributes):
    """List mapping component index to ``(attribute, hour)``."""
    return [(a, h) for a in range(n_attributes) for h in range(HOURS)]


def component_names(attribute_names):
    return [f"{a}@{h:02d}" for a in attribute_names for h in range(HOURS)]


def hourly_to_daily(values):
    values = np.asarray(values, dtype=float)
    hours, n = values.shape
    if hours % HOURS:
        raise MissingHours(f"{hours} hourly rows is not a whole number of days")
    m = hours // HOURS
    return values.reshape(m, HOURS, n).transpose(0, 2, 1).reshape(m, HOURS * n)


def daily_to_hourly(points, n_attributes):
    points = np.asarray(points, dtype=float)
    m = points.shape[0]
    return points.reshape(m, n_attributes, HOURS).transpose(0, 2, 1).reshape(m * HOURS, n_attributes)


def _parse_timestamp(text, row):
    try:
        ts = datetime.fromisoformat(text.strip())
    except ValueError:
        raise NonNumericCell(f"row {row}: cannot parse timestamp {text!r}", row=row, column="timestamp") from None
    if ts.tzinfo is not None:
        raise NonNumericCell(f"row {row}: timestamps must be timezone-naive, got {text!r}", row=row, column="timestamp")
    return ts


def load_csv(path, schema=None):
    """Read a wide hourly CSV (``timestamp,<attr1>,...``) into a :class:`RawSeries`.

    ``schema``, when given, is the expected sequence of attribute names and
    must match the header exactly. Rows are data rows numbered from 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = [r for r in reader if r]
    if header is None:
        raise MissingHours(f"{path}: empty file, no complete days")
    header = [h.strip() for h in header]
    if not header or header[0] != "timestamp":
        raise SchemaMismatch(f"{path}: first column must be 'timestamp', got {header[:1]}")
    names = header[1:]
    if not names:
        raise SchemaMismatch(f"{path}: no attribute columns")
    if len(set(names)) != len(names):
        raise SchemaMismatch(f"{path}: duplicate attribute columns")
    if schema is not None and list(schema) != names:
        raise SchemaMismatch(f"{path}: header {names} does not match expected attributes {list(schema)}")
    if not rows:
        raise MissingHours(f"{path}: no data rows, no complete days")

    timestamps = []
    values = np.empty((len(rows), len(names)))
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise NonNumericCell(f"row {i}: expected {len(header)} cells, got {len(row)}", row=i)
        timestamps.append(_parse_timestamp(row[0], i))
        for j, cell in enumerate(row[1:]):
            try:
                x = float(cell)
            except ValueError:
                x = math.nan
            if not math.isfinite(x):
                raise NonNumericCell(f"row {i}, column {names[j]!r}: non-numeric value {cell!r}", row=i, column=names[j])
            values[i - 1, j] = x
    return build_raw_series(timestamps, values, names)


def build_raw_series(timestamps, values, attribute_names):
    """Validate hourly completeness and contiguity, returning a :class:`RawSeries`."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape != (len(timestamps), len(attribute_names)):
        raise DimensionMismatch(
            f"values shape {values.shape} does not match {len(timestamps)} timestamps x {len(attribute_names)} attributes"
        )
    if not len(timestamps):
        raise MissingHours("no data rows, no complete days")
    if not np.all(np.isfinite(values)):
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise NonNumericCell(f"row {i + 1}, column {attribute_names[j]!r}: non-finite value", row=int(i) + 1,
                             column=attribute_names[j])

    # per-day completeness first so DST duplicates/gaps surface as MissingHours
    per_day = Counter(ts.date() for ts in timestamps)
    for day, count in sorted(per_day.items()):
        if count != HOURS:
            raise MissingHours(f"{day.isoformat()} has {count} hourly rows, expected {HOURS}")
    for i in range(1, len(timestamps)):
        if timestamps[i] <= timestamps[i - 1]:
            raise NonMonotoneTimestamps(f"row {i + 1}: {timestamps[i]} does not follow {timestamps[i - 1]}")
    if timestamps[0].hour != 0 or timestamps[0].minute or timestamps[0].second:
        raise MissingHours(f"{timestamps[0].date()} does not start at hour 0")
    step = timedelta(hours=1)
    for i in range(1, len(timestamps)):
        if timestamps[i] - timestamps[i - 1] != step:
            raise MissingHours(f"gap between {timestamps[i - 1]} and {timestamps[i]} (row {i + 1})")
    return RawSeries(timestamps, values, attribute_names)


def _moments(points):
    means = points.mean(axis=0)
    stds = points.std(axis=0)
    degenerate = stds <= DEGENERATE_STD * np.maximum(1.0, np.abs(means))
    stds = np.where(degenerate, 1.0, stds)
    return means, stds, degenerate


def standardize(raw):
    """Standardize every (attribute, hour) component to mean 0 and std 1.

    The population convention (divisor ``m``) is used. Constant components
    are flagged in ``degenerate``, mapped to 0 and given a recorded std of 1.
    """
    if isinstance(raw, RawSeries):
        points, names = raw.daily_points(), raw.attribute_names
    else:
        points, names = raw
        points = check_points(points, name="daily points")
    if points.shape[0] < 2:
        raise TooFewDays(f"standardization needs at least 2 days, got {points.shape[0]}")
    means, stds, degenerate = _moments(points)
    z = (points - means) / stds
    z[:, degenerate] = 0.0
    return StandardizedDataset(z, means, stds, degenerate, names)


def destandardize(points, ds):
    """Map standardized day vectors back to physical units."""
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != ds.dim:
        raise DimensionMismatch(f"points have width {arr.shape[-1]}, dataset components are {ds.dim}")
    out = arr * ds.component_stds + ds.component_means
    return out[0] if single else out


def restandardize(points, ds):
    """Apply an already-fitted standardization to physical-unit day vectors."""
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != ds.dim:
        raise DimensionMismatch(f"points have width {arr.shape[-1]}, dataset components are {ds.dim}")
    out = (arr - ds.component_means) / ds.component_stds
    return out[0] if single else out


def boundary_stats(raw, standardized):
    """Per-attribute mean/std of the standardized overnight step between consecutive days."""
    if raw is not None and raw.n_days != standardized.n_days:
        raise DimensionMismatch(f"raw series has {raw.n_days} days, standardized data {standardized.n_days}")
    if standardized.n_days < 2:
        raise TooFewDays("boundary statistics need at least one pair of consecutive days")
    V = standardized.matrices()
    delta = V[1:, :, 0] - V[:-1, :, HOURS - 1]
    mu = delta.mean(axis=0)
    sigma = delta.std(axis=0)
    bad = sigma <= DEGENERATE_STD * np.maximum(1.0, np.abs(mu))
    if np.any(bad):
        names = [standardized.attribute_names[i] for i in np.flatnonzero(bad)]
        raise DegenerateBoundary(f"overnight step has zero variance for attributes {names}")
    return BoundaryStats(mu, sigma)


class ProfileStandardizer(TransformerMixin, BaseEstimator):
    """Per-component standardizer for day vectors (population std, constants kept as 0).

    Unlike ``sklearn.preprocessing.StandardScaler`` it records a degeneracy
    mask and refuses fewer than two days.
    """

    def fit(self, X, y=None):
        X = check_points(X, name="X", min_samples=2)
        self.mean_, self.scale_, self.degenerate_ = _moments(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_points(X, dim=self.n_features_in_, name="X")
        Z = (X - self.mean_) / self.scale_
        Z[:, self.degenerate_] = 0.0
        return Z

    def inverse_transform(self, Z):
        check_is_fitted(self)
        Z = check_points(Z, dim=self.n_features_in_, name="Z")
        return Z * self.scale_ + self.mean_
