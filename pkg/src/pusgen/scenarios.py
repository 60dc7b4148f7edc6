"""Joint scenarios over attribute groups: empirical probabilities, thresholding, and the set for one scenario."""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._rng import as_generator
from ._validation import check_points, check_vector
from .exceptions import EmptyScenarioSet, InconsistentDayCounts, UnknownCluster
from .polytope import INSIDE, Verdict, export_lifted, membership, merge_exports, sample

# relative tolerance on the component left out by the truncated basis
SPAN_TOL = 1e-8


def format_key(key):
    return "-".join(str(int(k)) for k in key)


def parse_key(text, n_groups=None):
    try:
        key = tuple(int(part) for part in str(text).strip().split("-"))
    except ValueError:
        raise UnknownCluster(f"malformed scenario key {text!r}; expected labels joined by '-', e.g. 0-2-1") from None
    if n_groups is not None and len(key) != n_groups:
        raise UnknownCluster(f"scenario key {text!r} has {len(key)} labels, model has {n_groups} groups")
    return key


@dataclass(frozen=True)
class RetainedScenario:
    key: tuple
    p_hat: float
    p: float
    days: int


@dataclass(frozen=True)
class ScenarioSet:
    retained: tuple
    threshold: float
    dropped_mass: float

    def __len__(self):
        return len(self.retained)

    @property
    def keys(self):
        return [s.key for s in self.retained]


def joint_counts(assignments):
    labels = [np.asarray(a, dtype=int).ravel() for a in assignments]
    if not labels:
        raise InconsistentDayCounts("no groups given")
    m = labels[0].size
    if any(a.size != m for a in labels):
        raise InconsistentDayCounts(f"groups disagree on the day count: {[a.size for a in labels]}")
    return Counter(zip(*(a.tolist() for a in labels))), m


def joint_probabilities(assignments):
    """Empirical joint frequency of per-group labels over days; unseen combinations are omitted."""
    counts, m = joint_counts(assignments)
    return {key: c / m for key, c in sorted(counts.items())}


def filter_scenarios(probs, p_tilde, counts=None):
    """Keep combinations with ``p_hat >= p_tilde`` and rescale them to sum to one.

    Retained scenarios are ordered by decreasing ``p_hat`` then key.
    """
    if not probs:
        raise EmptyScenarioSet("no scenario probabilities given")
    if not 0.0 <= p_tilde < 1.0:
        raise ValueError(f"p_tilde must lie in [0, 1), got {p_tilde}")
    kept = sorted(((k, p) for k, p in probs.items() if p >= p_tilde), key=lambda kp: (-kp[1], kp[0]))
    if not kept:
        raise EmptyScenarioSet(f"threshold {p_tilde} exceeds the largest scenario probability {max(probs.values())}")
    if counts is not None:
        total = sum(counts[k] for k, _ in kept)
        rescaled = [counts[k] / total for k, _ in kept]
    else:
        total = sum(p for _, p in kept)
        rescaled = [p / total for _, p in kept]
    dropped = sum(p for k, p in probs.items() if p < p_tilde)
    retained = tuple(
        RetainedScenario(tuple(k), float(p), float(q), int(counts[k]) if counts is not None else None)
        for (k, p), q in zip(kept, rescaled)
    )
    return ScenarioSet(retained, float(p_tilde), float(dropped))


def scenario_count_curve(probs, p_tilde_grid):
    values = np.array(sorted(probs.values()))
    out = []
    for t in p_tilde_grid:
        t = float(t)
        if not 0.0 <= t < 1.0:
            raise ValueError(f"threshold grid values must lie in [0, 1), got {t}")
        out.append((t, int(values.size - np.searchsorted(values, t, side="left"))))
    return out


class ScenarioPUS:
    """The set for one scenario key: one group-scenario set per group, joined by conjunction.

    ``groups`` holds objects exposing ``name``, ``components`` (indices into
    the full day vector), ``basis`` and ``puses`` (one set per cluster).
    """

    def __init__(self, key, groups, dim):
        key = tuple(int(k) for k in key)
        if len(key) != len(groups):
            raise UnknownCluster(f"key {key} has {len(key)} labels for {len(groups)} groups")
        for label, g in zip(key, groups):
            if not 0 <= label < len(g.puses):
                raise UnknownCluster(f"group {g.name!r} has no cluster {label} (has {len(g.puses)})")
        self.key = key
        self.groups = list(groups)
        self.dim = int(dim)
        self.parts = [g.puses[label] for label, g in zip(key, groups)]

    def __repr__(self):
        return f"ScenarioPUS(key={format_key(self.key)!r}, dim={self.dim})"

    def group_coordinates(self, g, v_a):
        """``(w_bar, relative residual outside the retained span)`` for a group slice."""
        w = g.basis.p_matrix @ v_a
        r = g.basis.rank
        resid = np.linalg.norm(w[r:]) / max(1.0, np.linalg.norm(v_a))
        return w[:r], resid

    def membership(self, v):
        v = check_vector(v, self.dim, "profile")
        for g, pus in zip(self.groups, self.parts):
            w_bar, resid = self.group_coordinates(g, v[g.components])
            if resid > SPAN_TOL:
                return Verdict(False, "span", f"relative residual {resid:.3g} outside retained axes", group=g.name)
            verdict = membership(pus, w_bar)
            if not verdict:
                return verdict.located(group=g.name)
        return INSIDE

    def sample(self, count, seed=None):
        """Concatenate per-group lifted samples into full standardized day vectors."""
        rng = as_generator(seed)
        out = np.zeros((int(count), self.dim))
        for g, pus in zip(self.groups, self.parts):
            w = sample(pus, count, rng)
            out[:, g.components] = w @ g.basis.truncated
        return out

    def export(self, prefix="", v_offset=0, v_dim=None):
        parts = [
            export_lifted(pus, g.basis, prefix=f"{prefix}{g.name}.", v_rows=np.asarray(g.components) + v_offset,
                          v_dim=v_dim if v_dim is not None else self.dim)
            for g, pus in zip(self.groups, self.parts)
        ]
        out = merge_exports(parts, v_dim if v_dim is not None else self.dim)
        out.meta = {"kind": "scenario", "key": format_key(self.key)}
        return out


def scenario_pus(key, group_models, dim=None):
    if dim is None:
        dim = sum(len(g.components) for g in group_models)
    return ScenarioPUS(key, group_models, dim)
