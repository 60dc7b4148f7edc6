"""End-to-end estimator: historical day profiles in, scenario-indexed uncertainty sets out."""

import json
from dataclasses import dataclass
from datetime import date

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._rng import substream
from ._validation import HOURS, check_points
from .clustering import GroupClusters, assign, kmeans
from .dataset import (
    BoundaryStats,
    RawSeries,
    StandardizedDataset,
    boundary_stats,
    destandardize,
    restandardize,
    standardize,
)
from .density import fit_kde
from .exceptions import PusError, VersionMismatch
from .grouping import AttributeGrouping, auto_group, correlation_matrix, explicit_group
from .multiday import DayChain
from .polytope import GroupScenarioPUS, PusParams, build_pus
from .reduction import PcaBasis, choose_rank, fit_pca, project
from .scenarios import (
    RetainedScenario,
    ScenarioSet,
    filter_scenarios,
    joint_counts,
    parse_key,
    scenario_pus,
)

MODEL_FORMAT = "pusgen-model"
MODEL_VERSION = 1

GROUP_KEYS = ("clusters", "restarts", "rank", "alpha", "phi", "psi", "s")


@dataclass(frozen=True)
class GroupModel:
    name: str
    attributes: tuple
    components: np.ndarray
    basis: PcaBasis
    clusters: GroupClusters
    puses: tuple
    bandwidths: tuple
    settings: dict

    @property
    def rank(self):
        return self.basis.rank

    @property
    def reduction_factor(self):
        return self.basis.dim / self.basis.rank


class ScenarioPUSModel(TransformerMixin, BaseEstimator):
    """Fit scenario-indexed polyhedral uncertainty sets to daily multi-attribute profiles.

    ``fit`` accepts a :class:`~pusgen.dataset.RawSeries` or an ``(m, 24 n)``
    array of physical-unit day vectors (with ``attribute_names``).
    ``transform`` returns the concatenated truncated PCA coordinates of each
    group and ``predict`` the per-group cluster labels (the scenario key) of
    each day.

    Parameters
    ----------
    groups : mapping of group name to attribute names, optional
        Explicit partition; when omitted, attributes are grouped by
        thresholding ``|correlation|`` at ``threshold``.
    rank : dict
        ``{"explained_variance": f}`` or ``{"fixed": r}``.
    group_overrides : mapping of group name to dict, optional
        Per-group values for any of ``clusters, restarts, rank, alpha, phi, psi, s``.
    """

    def __init__(self, attribute_names=None, groups=None, threshold=0.4, n_clusters=4, restarts=1,
                 rank=None, alpha=0.05, phi=5.0, psi=1.5, s=24, p_tilde=0.03, bandwidth="silverman",
                 continuity=2.5, pairwise_includes_diagonal=True, group_overrides=None, random_state=0):
        self.attribute_names = attribute_names
        self.groups = groups
        self.threshold = threshold
        self.n_clusters = n_clusters
        self.restarts = restarts
        self.rank = rank
        self.alpha = alpha
        self.phi = phi
        self.psi = psi
        self.s = s
        self.p_tilde = p_tilde
        self.bandwidth = bandwidth
        self.continuity = continuity
        self.pairwise_includes_diagonal = pairwise_includes_diagonal
        self.group_overrides = group_overrides
        self.random_state = random_state

    def _group_settings(self, name):
        settings = {
            "clusters": self.n_clusters,
            "restarts": self.restarts,
            "rank": dict(self.rank) if self.rank is not None else {"explained_variance": 0.95},
            "alpha": self.alpha,
            "phi": self.phi,
            "psi": self.psi,
            "s": self.s,
        }
        overrides = (self.group_overrides or {}).get(name, {})
        unknown = set(overrides) - set(GROUP_KEYS)
        if unknown:
            raise PusError(f"unknown per-group settings for {name!r}: {sorted(unknown)}")
        settings.update(overrides)
        return settings

    def _dataset(self, X):
        if isinstance(X, RawSeries):
            self.first_day_ = X.timestamps[0].date().isoformat()
            return standardize(X)
        if self.attribute_names is None:
            raise PusError("attribute_names is required when fitting on an array")
        X = check_points(X, dim=HOURS * len(self.attribute_names), name="X", min_samples=2)
        self.first_day_ = None
        return standardize((X, self.attribute_names))

    def fit(self, X, y=None):
        ds = self._dataset(X)
        self.standardization_ = ds
        self.n_days_ = ds.n_days
        names = list(ds.attribute_names)
        if self.groups is not None:
            grouping = explicit_group(self.groups, names)
        else:
            self.correlation_ = correlation_matrix(ds)
            grouping = auto_group(self.correlation_, self.threshold)
        self.grouping_ = grouping
        if self.group_overrides:
            unknown = set(self.group_overrides) - set(grouping.names)
            if unknown:
                raise PusError(f"overrides given for unknown groups {sorted(unknown)}; groups are {list(grouping.names)}")

        models = []
        for gi, gname in enumerate(grouping.names):
            settings = self._group_settings(gname)
            comps = grouping.component_indices(gi)
            pts = ds.points[:, comps]
            basis = choose_rank(fit_pca(pts), settings["rank"])
            reduced = project(basis, pts)
            seed = int(substream(self.random_state, "kmeans", gname).integers(2**32))
            clusters = kmeans(reduced, settings["clusters"], seed=seed, restarts=settings["restarts"])
            params = PusParams(settings["alpha"], settings["phi"], settings["psi"], settings["s"],
                               self.pairwise_includes_diagonal).for_rank(basis.rank)
            puses, bws = [], []
            for k in range(clusters.n_clusters):
                members = reduced[clusters.assignments == k]
                try:
                    kdes = [fit_kde(members[:, ax], self.bandwidth) for ax in range(basis.rank)]
                except PusError as exc:
                    raise type(exc)(f"group {gname!r}, cluster {k}: {exc}") from exc
                puses.append(build_pus(kdes, params, basis_ref=gname))
                bws.append(tuple(k_.bandwidth for k_ in kdes))
            models.append(GroupModel(gname, tuple(grouping.groups[gi]), comps, basis, clusters,
                                     tuple(puses), tuple(bws), settings))
        self.group_models_ = models

        counts, m = joint_counts([g.clusters.assignments for g in models])
        self.joint_counts_ = dict(sorted(counts.items()))
        self.joint_probabilities_ = {k: c / m for k, c in self.joint_counts_.items()}
        self.scenarios_ = filter_scenarios(self.joint_probabilities_, self.p_tilde, counts=self.joint_counts_)
        self.boundary_ = boundary_stats(None, ds)
        self.n_features_in_ = ds.dim
        return self

    # --- transforms -----------------------------------------------------
    def standardize(self, X):
        check_is_fitted(self)
        return restandardize(X, self.standardization_)

    def destandardize(self, Z):
        check_is_fitted(self)
        return destandardize(Z, self.standardization_)

    def transform(self, X):
        """Truncated PCA coordinates of physical-unit day vectors, groups concatenated."""
        check_is_fitted(self)
        Z = restandardize(check_points(X, dim=self.n_features_in_, name="X"), self.standardization_)
        return np.hstack([project(g.basis, Z[:, g.components]) for g in self.group_models_])

    def predict(self, X):
        """Scenario key (one cluster label per group) of each physical-unit day vector."""
        check_is_fitted(self)
        Z = restandardize(check_points(X, dim=self.n_features_in_, name="X"), self.standardization_)
        labels = [np.atleast_1d(assign(g.clusters, project(g.basis, Z[:, g.components]))) for g in self.group_models_]
        return np.column_stack(labels)

    # --- sets -----------------------------------------------------------
    @property
    def n_groups(self):
        return len(self.group_models_)

    def scenario(self, key):
        check_is_fitted(self)
        if isinstance(key, str):
            key = parse_key(key, self.n_groups)
        return scenario_pus(key, self.group_models_, self.n_features_in_)

    def chain(self, keys, c=None):
        check_is_fitted(self)
        return DayChain(tuple(self.scenario(k) for k in keys), self.continuity if c is None else c,
                        self.boundary_, len(self.standardization_.attribute_names))

    def is_retained(self, key):
        key = parse_key(key, self.n_groups) if isinstance(key, str) else tuple(key)
        return key in self.scenarios_.keys

    # --- persistence ----------------------------------------------------
    def to_dict(self):
        check_is_fitted(self)
        ds = self.standardization_
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "params": _plain(self.get_params()),
            "attributes": list(ds.attribute_names),
            "n_days": int(self.n_days_),
            "first_day": self.first_day_,
            "standardization": {
                "means": ds.component_means.tolist(),
                "stds": ds.component_stds.tolist(),
                "degenerate": ds.degenerate.tolist(),
            },
            "boundary": {"mu_delta": self.boundary_.mu_delta.tolist(),
                         "sigma_delta": self.boundary_.sigma_delta.tolist()},
            "groups": [_group_to_dict(g, ds.attribute_names) for g in self.group_models_],
            "scenarios": {
                "threshold": self.scenarios_.threshold,
                "dropped_mass": self.scenarios_.dropped_mass,
                "joint": [{"key": list(k), "count": int(c)} for k, c in self.joint_counts_.items()],
                "retained": [{"key": list(s.key), "p_hat": s.p_hat, "p": s.p, "days": s.days}
                             for s in self.scenarios_.retained],
            },
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != MODEL_FORMAT:
            raise VersionMismatch(f"not a {MODEL_FORMAT} file")
        if doc.get("version") != MODEL_VERSION:
            raise VersionMismatch(f"model file version {doc.get('version')!r}, this build reads {MODEL_VERSION}")
        model = cls(**doc["params"])
        names = tuple(doc["attributes"])
        st = doc["standardization"]
        means = np.array(st["means"])
        m = int(doc["n_days"])
        # points are not persisted; an empty matrix keeps the layout metadata
        model.standardization_ = StandardizedDataset(np.zeros((0, means.size)), means, np.array(st["stds"]),
                                                     np.array(st["degenerate"], dtype=bool), names)
        model.first_day_ = doc.get("first_day")
        model.n_days_ = m
        model.boundary_ = BoundaryStats(np.array(doc["boundary"]["mu_delta"]), np.array(doc["boundary"]["sigma_delta"]))
        model.group_models_ = [_group_from_dict(g, names, model.pairwise_includes_diagonal) for g in doc["groups"]]
        model.grouping_ = AttributeGrouping([g.attributes for g in model.group_models_],
                                            [g.name for g in model.group_models_])
        sc = doc["scenarios"]
        model.joint_counts_ = {tuple(e["key"]): int(e["count"]) for e in sc["joint"]}
        total = sum(model.joint_counts_.values())
        model.joint_probabilities_ = {k: c / total for k, c in model.joint_counts_.items()}
        model.scenarios_ = ScenarioSet(
            tuple(RetainedScenario(tuple(e["key"]), e["p_hat"], e["p"], e["days"]) for e in sc["retained"]),
            sc["threshold"], sc["dropped_mass"])
        model.n_features_in_ = means.size
        return model

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise VersionMismatch(f"{path}: not a JSON model file ({exc})") from None
        return cls.from_dict(doc)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _group_to_dict(g, attribute_names):
    return {
        "name": g.name,
        "attributes": [attribute_names[a] for a in g.attributes],
        "settings": _plain(g.settings),
        "basis": {
            "p_matrix": g.basis.p_matrix.tolist(),
            "eigenvalues": g.basis.eigenvalues.tolist(),
            "mean": g.basis.mean.tolist(),
            "rank": int(g.basis.rank),
        },
        "clusters": {
            "centroids": g.clusters.centroids.tolist(),
            "assignments": g.clusters.assignments.tolist(),
            "inertia": float(g.clusters.inertia),
        },
        "pus": [
            {
                "cluster": k,
                "alpha": p.params.alpha,
                "phi": p.params.phi,
                "psi": p.params.psi,
                "s": p.params.s,
                "xi_lb": p.xi_lb.tolist(),
                "xi_ub": p.xi_ub.tolist(),
                "bandwidths": list(g.bandwidths[k]),
                "n_points": int(g.clusters.counts[k]),
                "low_sample": bool(g.clusters.counts[k] < 8),
            }
            for k, p in enumerate(g.puses)
        ],
    }


def _group_from_dict(d, attribute_names, diagonal):
    index = {a: i for i, a in enumerate(attribute_names)}
    attrs = tuple(index[a] for a in d["attributes"])
    comps = np.concatenate([np.arange(a * HOURS, (a + 1) * HOURS) for a in attrs])
    b = d["basis"]
    basis = PcaBasis(np.array(b["p_matrix"]), np.array(b["eigenvalues"]), np.array(b["mean"]), int(b["rank"]))
    cl = d["clusters"]
    labels = np.array(cl["assignments"], dtype=int)
    k = len(cl["centroids"])
    counts = np.bincount(labels, minlength=k)
    clusters = GroupClusters(np.array(cl["centroids"]), labels, counts / counts.sum(), cl["inertia"])
    puses = tuple(
        GroupScenarioPUS(np.array(p["xi_lb"]), np.array(p["xi_ub"]),
                         PusParams(p["alpha"], p["phi"], p["psi"], p["s"], diagonal), d["name"])
        for p in d["pus"]
    )
    bws = tuple(tuple(p["bandwidths"]) for p in d["pus"])
    return GroupModel(d["name"], attrs, comps, basis, clusters, puses, bws, d["settings"])


def month_proportions(model):
    """Rows ``(group, cluster, YYYY-MM, proportion of that month's days)``."""
    if not model.first_day_:
        raise PusError("model was fitted without timestamps; monthly proportions unavailable")
    start = date.fromisoformat(model.first_day_).toordinal()
    rows = []
    for g in model.group_models_:
        labels = g.clusters.assignments
        months = np.array([date.fromordinal(start + i).strftime("%Y-%m") for i in range(labels.size)])
        for month in sorted(set(months.tolist())):
            sel = labels[months == month]
            for k in range(g.clusters.n_clusters):
                rows.append((g.name, k, month, float(np.mean(sel == k))))
    return rows
