"""Gaussian KDE marginals along principal axes, with grid CDF and quantile function."""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ._validation import frozen
from .exceptions import DegenerateSample, QOutOfRange

GRID_SIZE = 2048
GRID_PAD = 4.0  # bandwidths beyond the sample extremes
LOW_SAMPLE = 8


def silverman_bandwidth(sample):
    """``0.9 * min(std, IQR / 1.34) * n ** (-1/5)``, falling back to std when the IQR is 0."""
    x = np.asarray(sample, dtype=float)
    sd = x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    return 0.9 * spread * x.size ** -0.2


@dataclass(frozen=True)
class MarginalKDE:
    sample: np.ndarray
    bandwidth: float
    grid: np.ndarray
    cdf_values: np.ndarray

    def __post_init__(self):
        for name in ("sample", "grid", "cdf_values"):
            object.__setattr__(self, name, frozen(getattr(self, name)))

    @property
    def low_sample(self):
        return self.sample.size < LOW_SAMPLE

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        u = (x[..., None] - self.sample) / self.bandwidth
        return np.exp(-0.5 * u**2).mean(axis=-1) / (self.bandwidth * np.sqrt(2 * np.pi))

    def cdf(self, x):
        """Exact KDE distribution function (mean of Gaussian CDFs)."""
        x = np.asarray(x, dtype=float)
        return ndtr((x[..., None] - self.sample) / self.bandwidth).mean(axis=-1)

    def quantile(self, q):
        return quantile(self, q)


def fit_kde(sample, bandwidth="silverman"):
    """Fit a Gaussian KDE; ``bandwidth`` is ``"silverman"`` or a positive number."""
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    if x.size < 2:
        raise DegenerateSample(f"KDE needs at least 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DegenerateSample("sample contains non-finite values")
    if x[-1] - x[0] <= 1e-12 * max(1.0, abs(x[0])):
        raise DegenerateSample("all sample values are equal")
    if isinstance(bandwidth, str):
        if bandwidth != "silverman":
            raise ValueError(f"unknown bandwidth rule {bandwidth!r}")
        h = silverman_bandwidth(x)
    else:
        h = float(bandwidth)
    if not h > 0:
        raise DegenerateSample(f"bandwidth must be positive, got {h}")
    if h <= 1e-12 * max(1.0, abs(x[0]), abs(x[-1])):
        # the grid padding and kernel width vanish in floating point at this scale
        raise DegenerateSample(f"bandwidth {h:.3g} is negligible at the data scale")
    grid = np.linspace(x[0] - GRID_PAD * h, x[-1] + GRID_PAD * h, GRID_SIZE)
    # chunked to bound memory on large samples
    cdf = np.concatenate([ndtr((g[:, None] - x) / h).mean(axis=1) for g in np.array_split(grid, 8)])
    cdf = np.maximum.accumulate(cdf)
    return MarginalKDE(x, h, grid, cdf)


def quantile(kde, q):
    """Inverse CDF by monotone linear interpolation on the grid."""
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa > 0) & (qa < 1))):
        raise QOutOfRange(f"quantile level must lie in (0, 1), got {q}")
    cdf, grid = kde.cdf_values, kde.grid
    # first grid point with cdf >= q, then interpolate inside the cell that rises through q;
    # flat stretches of the grid CDF are thereby never interpolated across
    i = np.clip(np.searchsorted(cdf, qa, side="left"), 1, cdf.size - 1)
    lo, hi = cdf[i - 1], cdf[i]
    t = np.clip((qa - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0, 1.0)
    out = grid[i - 1] + t * (grid[i] - grid[i - 1])
    return float(out) if out.ndim == 0 else out
