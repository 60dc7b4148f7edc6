"""Attribute correlation and partition into groups of mutually correlated attributes."""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._validation import HOURS, frozen
from .exceptions import (
    DegenerateAttribute,
    DuplicateAttribute,
    TooFewDays,
    UncoveredAttribute,
    UnknownAttribute,
)

DEFAULT_THRESHOLD = 0.4


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    attribute_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", frozen(self.values))
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))


@dataclass(frozen=True)
class AttributeGrouping:
    """Disjoint attribute-index groups covering ``range(n)``; ``names`` labels each group."""

    groups: tuple
    names: tuple = None

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        names = self.names if self.names is not None else tuple(f"g{i}" for i in range(len(groups)))
        object.__setattr__(self, "names", tuple(names))

    def __len__(self):
        return len(self.groups)

    @property
    def sizes(self):
        return [len(g) for g in self.groups]

    def component_indices(self, index):
        """Indices of the group's components inside a full day vector."""
        return np.concatenate([np.arange(a * HOURS, (a + 1) * HOURS) for a in self.groups[index]])


def attribute_series(ds):
    """Each attribute's standardized hours concatenated over days, shape ``(n, 24 m)``."""
    return ds.matrices().transpose(1, 0, 2).reshape(ds.n_attributes, -1)


def correlation_matrix(ds):
    """Pearson correlation between attributes' concatenated standardized hourly series."""
    if ds.n_days < 2:
        raise TooFewDays("correlation needs at least 2 days")
    series = attribute_series(ds)
    centered = series - series.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))
    bad = norms <= 1e-12 * np.sqrt(series.shape[1])
    if np.any(bad):
        names = [ds.attribute_names[i] for i in np.flatnonzero(bad)]
        raise DegenerateAttribute(f"attributes with zero variance: {names}")
    unit = centered / norms[:, None]
    corr = unit @ unit.T
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return CorrelationMatrix(corr, ds.attribute_names)


def auto_group(corr, threshold=DEFAULT_THRESHOLD):
    """Connected components of the graph with an edge wherever ``|corr| >= threshold``.

    Groups are ordered by their smallest member index.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    adjacency = np.abs(corr.values) >= threshold
    _, labels = connected_components(csr_matrix(adjacency), directed=False)
    groups = {}
    for idx, lab in enumerate(labels):
        groups.setdefault(lab, []).append(idx)
    return AttributeGrouping(sorted(groups.values(), key=min))


def explicit_group(names, schema):
    """User-supplied partition given as name-sets (or a ``{group_name: members}`` mapping)."""
    schema = list(schema)
    if isinstance(names, dict):
        group_names, sets = list(names.keys()), list(names.values())
    else:
        group_names, sets = None, list(names)
    index = {a: i for i, a in enumerate(schema)}
    seen = set()
    groups = []
    for members in sets:
        members = [members] if isinstance(members, str) else list(members)
        if not members:
            raise UncoveredAttribute("empty attribute group")
        g = []
        for a in members:
            if a not in index:
                raise UnknownAttribute(f"attribute {a!r} is not in the data schema")
            if a in seen:
                raise DuplicateAttribute(f"attribute {a!r} appears in more than one group")
            seen.add(a)
            g.append(index[a])
        groups.append(sorted(g))
    missing = [a for a in schema if a not in seen]
    if missing:
        raise UncoveredAttribute(f"attributes not assigned to any group: {missing}")
    return AttributeGrouping(groups, group_names)
