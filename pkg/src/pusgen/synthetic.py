"""Synthetic hourly data with planted attribute groups, latent factors and regimes.

Each group owns ``factors`` latent daily scores drawn around one of
``regimes`` centers; every attribute of the group is a smooth daily shape
plus a factor-weighted combination of smooth loadings, plus small noise.
Groups are mutually independent, so attribute correlation is strong within
and near zero across groups.
"""

from datetime import datetime, timedelta

import numpy as np

from ._validation import HOURS
from .dataset import build_raw_series

DEFAULT_GROUPS = {
    "seasonal": ["demand", "temp"],
    "solar": ["solar_n", "solar_s"],
    "wind": ["wind_on", "wind_off"],
}
REGIME_WEIGHTS = (0.4, 0.3, 0.2, 0.1)


def planted_profiles(n_days=360, groups=None, factors=2, regimes=4, noise=0.02, factor_spread=0.5,
                     regime_weights=REGIME_WEIGHTS, seed=0):
    """Return ``(day_vectors, attribute_names, regime_labels)``.

    ``regime_labels`` has one column per group. Day vectors are attribute-major
    (component ``attr * 24 + hour``).
    """
    groups = groups or DEFAULT_GROUPS
    rng = np.random.default_rng(seed)
    hours = np.arange(HOURS)
    names, blocks, labels = [], [], []
    weights = np.asarray(regime_weights[:regimes], dtype=float)
    weights = weights / weights.sum()
    angles = np.linspace(0, 2 * np.pi, regimes, endpoint=False) + np.pi / 4
    for gi, (gname, attrs) in enumerate(groups.items()):
        centers = np.zeros((regimes, factors))
        centers[:, 0] = 2.5 * np.cos(angles)
        if factors > 1:
            centers[:, 1] = 2.5 * np.sin(angles)
        lab = rng.choice(regimes, size=n_days, p=weights)
        scores = centers[lab] + factor_spread * rng.standard_normal((n_days, factors))
        for ai, attr in enumerate(attrs):
            phase = 0.7 * gi + 0.3 * ai
            base = 10 + 3 * np.sin(2 * np.pi * hours / HOURS + phase)
            loadings = np.array([
                1.0 + 0.4 * np.sin(2 * np.pi * hours / HOURS + phase + f * np.pi / 2) + 0.2 * f
                for f in range(factors)
            ])
            if factors > 1:
                loadings[1] = 0.6 * np.cos(2 * np.pi * hours / HOURS + phase)
            prof = base + scores @ loadings + noise * rng.standard_normal((n_days, HOURS))
            blocks.append(prof)
            names.append(attr)
        labels.append(lab)
    points = np.concatenate(blocks, axis=1)
    return points, names, np.column_stack(labels)


def planted_series(n_days=360, start=datetime(2015, 1, 1), **kw):
    """Like :func:`planted_profiles` but as a validated hourly :class:`RawSeries`."""
    points, names, labels = planted_profiles(n_days=n_days, **kw)
    n = len(names)
    values = points.reshape(n_days, n, HOURS).transpose(0, 2, 1).reshape(n_days * HOURS, n)
    stamps = [start + timedelta(hours=h) for h in range(n_days * HOURS)]
    return build_raw_series(stamps, values, names), labels


def write_csv(path, series):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("timestamp," + ",".join(series.attribute_names) + "\n")
        for ts, row in zip(series.timestamps, series.values):
            fh.write(ts.strftime("%Y-%m-%dT%H:00") + "," + ",".join(repr(float(x)) for x in row) + "\n")
