"""Two-component PCA of a dissimilarity matrix, for scatter plots."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DataError

# singular values below this fraction of the largest are treated as zero
_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Embedding2D:
    labels: tuple
    coords: np.ndarray
    explained_variance_ratio: tuple


def _fix_signs(components):
    """Flip each component so its largest-magnitude loading is positive."""
    for c in components:
        i = int(np.argmax(np.abs(c)))
        if c[i] < 0:
            c *= -1
    return components


def _principal_axes(D):
    D = check_array(D, dtype=np.float64)
    if D.shape[0] < 3:
        raise DataError(f"embedding needs at least 3 clusters, got {D.shape[0]}")
    mean = D.mean(axis=0)
    C = D - mean
    _, s, vt = np.linalg.svd(C, full_matrices=False)
    components = np.zeros((2, D.shape[1]))
    total = float(np.sum(s ** 2))
    ratios = np.zeros(2)
    for i in range(min(2, s.size)):
        if s[i] > _RANK_TOL * max(s[0], 1e-300) and s[i] > 0:
            components[i] = vt[i]
            ratios[i] = s[i] ** 2 / total
    return mean, _fix_signs(components), ratios


def embed_dissimilarity(matrix, labels=None):
    """Project the rows of a K x K dissimilarity matrix onto two components.

    Each row is treated as a K-dimensional feature vector; columns are
    centered (no double-centering). A missing second component, as for a
    rank-one matrix, is returned as zeros.

    Parameters
    ----------
    matrix : DissimilarityMatrix or array-like of shape (K, K)
    labels : sequence of str, optional
        Defaults to the matrix labels.

    Returns
    -------
    Embedding2D
    """
    if hasattr(matrix, "entries"):
        D, default = matrix.entries, matrix.labels
    else:
        D, default = np.asarray(matrix, dtype=np.float64), None
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DataError(f"dissimilarity matrix must be square, got shape {D.shape}")
    mean, components, ratios = _principal_axes(D)
    coords = (D - mean) @ components.T
    if labels is None:
        labels = default if default is not None else range(D.shape[0])
    labels = tuple(str(v) for v in labels)
    if len(labels) != D.shape[0]:
        raise DataError(f"{len(labels)} labels for {D.shape[0]} rows")
    return Embedding2D(labels, coords, (float(ratios[0]), float(ratios[1])))


class DissimilarityPCA(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`embed_dissimilarity`.

    ``fit`` learns the column means and principal axes from a square
    dissimilarity matrix; ``transform`` projects rows of distances (to the
    same K reference clusters) onto them.

    Attributes
    ----------
    mean_ : ndarray of shape (K,)
    components_ : ndarray of shape (2, K)
    explained_variance_ratio_ : ndarray of shape (2,)
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[0] != X.shape[1]:
            raise DataError(f"expected a square matrix, got shape {X.shape}")
        self.mean_, self.components_, self.explained_variance_ratio_ = _principal_axes(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return (X - self.mean_) @ self.components_.T
