"""K-means group-scenarios in the truncated PCA basis."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_vector, frozen
from .exceptions import KTooLarge

MAX_ITER = 300


@dataclass(frozen=True)
class GroupClusters:
    centroids: np.ndarray
    assignments: np.ndarray
    probabilities: np.ndarray
    inertia: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "centroids", frozen(self.centroids))
        labels = np.array(self.assignments, dtype=np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "assignments", labels)
        object.__setattr__(self, "probabilities", frozen(self.probabilities))

    @property
    def n_clusters(self):
        return self.centroids.shape[0]

    @property
    def counts(self):
        return np.bincount(self.assignments, minlength=self.n_clusters)


def _sq_distances(X, C):
    # fixed reduction order: explicit sum over the coordinate axis
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _plusplus_init(X, k, rng):
    m = X.shape[0]
    centers = [X[rng.integers(m)]]
    closest = _sq_distances(X, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining points coincide with a chosen center
            idx = rng.integers(m)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, m - 1)
        centers.append(X[idx])
        closest = np.minimum(closest, _sq_distances(X, X[idx][None, :])[:, 0])
    return np.array(centers)


def _lloyd(X, centers):
    k = centers.shape[0]
    labels = None
    history = []
    for _ in range(MAX_ITER):
        d2 = _sq_distances(X, centers)
        new_labels = np.argmin(d2, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        # repair empty clusters with the points farthest from their centroid
        for empty in np.flatnonzero(counts == 0):
            own = d2[np.arange(X.shape[0]), new_labels]
            movable = counts[new_labels] > 1
            far = int(np.argmax(np.where(movable, own, -1.0)))
            counts[new_labels[far]] -= 1
            new_labels[far] = empty
            counts[empty] = 1
            d2[far] = 0.0
        history.append(float(d2[np.arange(X.shape[0]), new_labels].sum()))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        centers = np.array([X[labels == j].mean(axis=0) for j in range(k)])
    sse = float(_sq_distances(X, centers)[np.arange(X.shape[0]), labels].sum())
    return centers, labels, sse, history


def cluster_probabilities(labels, k):
    counts = np.bincount(labels, minlength=k)
    return counts / counts.sum()


def kmeans(points, k, seed=0, restarts=1):
    """Lloyd iterations from k-means++ seeding; best of ``restarts`` by SSE.

    Deterministic for a given ``(points, k, seed, restarts)``. Restart ``i``
    draws from ``default_rng([seed, i])``; ties in SSE keep the lowest ``i``.
    """
    X = check_points(points, name="reduced points")
    m = X.shape[0]
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > m:
        raise KTooLarge(f"cannot form {k} clusters from {m} points")
    best = None
    for i in range(max(1, int(restarts))):
        rng = np.random.default_rng([int(seed), i])
        centers, labels, sse, _ = _lloyd(X, _plusplus_init(X, k, rng))
        if best is None or sse < best[2]:
            best = (centers, labels, sse)
    centers, labels, sse = best
    return GroupClusters(centers, labels, cluster_probabilities(labels, k), sse)


def assign(clusters, point):
    """Nearest centroid label; ties go to the lowest label."""
    arr = np.asarray(point, dtype=float)
    dim = clusters.centroids.shape[1]
    if arr.ndim == 1:
        arr = check_vector(arr, dim, "point")[None, :]
        return int(np.argmin(_sq_distances(arr, clusters.centroids), axis=1)[0])
    arr = check_points(arr, dim=dim)
    return np.argmin(_sq_distances(arr, clusters.centroids), axis=1)


class KMeansPP(ClusterMixin, BaseEstimator):
    """Deterministic k-means estimator exposing ``labels_``, ``cluster_centers_`` and ``probabilities_``."""

    def __init__(self, n_clusters=4, random_state=0, restarts=1):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.restarts = restarts

    def fit(self, X, y=None):
        self.clusters_ = kmeans(X, self.n_clusters, seed=self.random_state, restarts=self.restarts)
        self.cluster_centers_ = self.clusters_.centroids
        self.labels_ = self.clusters_.assignments
        self.probabilities_ = self.clusters_.probabilities
        self.inertia_ = self.clusters_.inertia
        self.n_features_in_ = self.cluster_centers_.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self)
        return assign(self.clusters_, check_points(X, dim=self.n_features_in_, name="X"))
