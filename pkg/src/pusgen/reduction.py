"""Per-group PCA basis, truncation rank, projection and lifting."""

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_vector, frozen
from .exceptions import NumericalFailure, RankOutOfRange, TooFewDays

# eigenvalues below this fraction of the largest count as zero
ZERO_EIGENVALUE = 1e-12


@dataclass(frozen=True)
class PcaBasis:
    """Orthogonal basis with principal directions as rows of ``p_matrix``.

    ``w = p_matrix @ v`` expresses ``v`` in the basis; ``rank`` is the
    truncation ``r`` (``None`` until :func:`choose_rank`).
    """

    p_matrix: np.ndarray
    eigenvalues: np.ndarray
    mean: np.ndarray
    rank: int = None

    def __post_init__(self):
        object.__setattr__(self, "p_matrix", frozen(self.p_matrix))
        object.__setattr__(self, "eigenvalues", frozen(self.eigenvalues))
        object.__setattr__(self, "mean", frozen(self.mean))

    @property
    def dim(self):
        return self.p_matrix.shape[0]

    @property
    def truncated(self):
        """The first ``rank`` directions, shape ``(r, dim)``."""
        if self.rank is None:
            raise RankOutOfRange("truncation rank has not been chosen")
        return self.p_matrix[: self.rank]


def fit_pca(group_points):
    """Principal directions of the sample covariance (divisor ``m``), largest variance first.

    Computed by SVD of the centered data. Each direction is signed so that its
    largest-magnitude entry is positive; equal eigenvalues keep the order of
    their leading component index.
    """
    X = check_points(group_points, name="group points")
    m, d = X.shape
    if m < 2:
        raise TooFewDays(f"PCA needs at least 2 points, got {m}")
    mean = X.mean(axis=0)
    Xc = X - mean
    try:
        _, s, vt = np.linalg.svd(Xc, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    eig = np.zeros(d)
    eig[: s.size] = s**2 / m
    eig[eig < 0] = 0.0

    # sign convention and deterministic tie order
    P = vt.copy()
    lead = np.argmax(np.abs(P), axis=1)
    signs = np.sign(P[np.arange(d), lead])
    signs[signs == 0] = 1.0
    P *= signs[:, None]
    lead = np.argmax(np.abs(P), axis=1)
    eig[eig <= ZERO_EIGENVALUE * eig[0]] = 0.0
    order = np.lexsort((lead, -eig))
    return PcaBasis(P[order], eig[order], mean)


def n_nonzero(eigenvalues):
    if eigenvalues.size == 0 or eigenvalues[0] <= 0:
        return 0
    return int(np.count_nonzero(eigenvalues > ZERO_EIGENVALUE * eigenvalues[0]))


def choose_rank(basis, policy):
    """Set the truncation rank.

    ``policy`` is ``{"explained_variance": fraction}`` (smallest ``r`` whose
    cumulative eigenvalue share reaches ``fraction``) or ``{"fixed": r}``.
    """
    if not isinstance(policy, dict) or len(policy) != 1:
        raise RankOutOfRange(f"rank policy must be a single-key mapping, got {policy!r}")
    (kind, value), = policy.items()
    d = basis.dim
    if kind == "fixed":
        r = int(value)
        if r != value or not 1 <= r <= d:
            raise RankOutOfRange(f"fixed rank {value} outside [1, {d}]")
    elif kind == "explained_variance":
        frac = float(value)
        if not 0.0 < frac <= 1.0:
            raise RankOutOfRange(f"explained variance fraction {value} outside (0, 1]")
        nz = n_nonzero(basis.eigenvalues)
        if nz == 0:
            r = 1
        else:
            share = np.cumsum(basis.eigenvalues[:nz]) / basis.eigenvalues[:nz].sum()
            r = int(np.searchsorted(share, frac - 1e-12) + 1)
            r = min(r, nz)
    else:
        raise RankOutOfRange(f"unknown rank policy {kind!r}")
    return replace(basis, rank=r)


def project(basis, points):
    """Coordinates on the first ``r`` directions: ``(P v)[:r]``."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        return basis.truncated @ check_vector(arr, basis.dim, "point")
    return check_points(arr, dim=basis.dim) @ basis.truncated.T


def lift(basis, reduced):
    """Map truncated coordinates back: ``P.T @ [w_bar; 0]``."""
    arr = np.asarray(reduced, dtype=float)
    r = basis.truncated.shape[0]
    if arr.ndim == 1:
        return check_vector(arr, r, "reduced point") @ basis.truncated
    return check_points(arr, dim=r, name="reduced points") @ basis.truncated


class TruncatedPCA(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_pca` / :func:`choose_rank`.

    Unlike ``sklearn.decomposition.PCA``, ``transform`` does not center:
    the basis acts linearly on already-standardized data.
    """

    def __init__(self, explained_variance=0.95, n_components=None):
        self.explained_variance = explained_variance
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_points(X, name="X", min_samples=2)
        policy = ({"fixed": self.n_components} if self.n_components is not None
                  else {"explained_variance": self.explained_variance})
        self.basis_ = choose_rank(fit_pca(X), policy)
        self.components_ = self.basis_.truncated
        self.explained_variance_ = self.basis_.eigenvalues[: self.basis_.rank]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        return project(self.basis_, check_points(X, dim=self.n_features_in_, name="X"))

    def inverse_transform(self, W):
        check_is_fitted(self)
        return lift(self.basis_, W)
