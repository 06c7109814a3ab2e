"""scikit-learn style estimator for hierarchical qualitative clustering."""

import numbers

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_int, check_nonneg_float
from .data import Dataset, ValueGroup, group_by_value, standardize
from .embedding import embed_dissimilarity
from .engine import cut_linkage, run_hqc
from .exceptions import ConfigError
from .statdist import GAMMA_MODES, KernelConfig


def restrict(dataset, groups):
    """Keep only the rows of ``groups``; returns the subset and re-indexed groups."""
    keep = np.sort(np.concatenate([g.row_indices for g in groups]))
    sub = Dataset(
        dataset.quantitative[keep],
        dataset.qualitative[keep],
        dataset.column_names,
        dataset.label_name,
        dropped_rows=dataset.dropped_rows,
        zero_variance_columns=dataset.zero_variance_columns,
        standardized=dataset.standardized,
        context={k: v[keep] for k, v in dataset.context.items()},
    )
    new = [ValueGroup(g.value, np.searchsorted(keep, g.row_indices)) for g in groups]
    return sub, new


def resolve_kernel(gamma, X, seed):
    """Turn the ``gamma`` parameter (mode name or positive number) into a config."""
    if isinstance(gamma, numbers.Real) and not isinstance(gamma, bool):
        return KernelConfig.resolve("fixed", gamma)
    if gamma in GAMMA_MODES and gamma != "fixed":
        return KernelConfig.resolve(gamma, X=X, seed=seed)
    raise ConfigError(f"gamma must be a positive number or one of "
                      f"'unit_variance_default', 'median_heuristic'; got {gamma!r}")


class HierarchicalQualitativeClustering(ClusterMixin, BaseEstimator):
    """Cluster the distinct values of a qualitative variable.

    Rows are grouped by their qualitative value ``y``; groups are then
    merged bottom-up, closest first, where the distance between two groups
    is the MMD between their rows of ``X`` under an RBF kernel.

    Parameters
    ----------
    gamma : {"unit_variance_default", "median_heuristic"} or float, default="unit_variance_default"
        RBF bandwidth. The default 0.5 suits standardized features.
    top_k : int, default=None
        Keep only the ``top_k`` most frequent values.
    min_count : int, default=2
        Discard values with fewer rows.
    cap : int, default=None
        Subsample each cluster to at most ``cap`` rows.
    standardize : bool, default=True
        Z-score the retained rows before computing kernels.
    distance_threshold : float, default=None
        If set, ``labels_`` and :meth:`predict` use the partition formed by
        merges strictly below this distance. Otherwise every retained value
        is its own cluster.
    random_state : int, default=0

    Attributes
    ----------
    values_ : list of str
        Initial cluster values; value ``values_[i]`` is cluster id ``i``.
    dissimilarity_ : DissimilarityMatrix
        Distances between the initial clusters.
    linkage_ : list of LinkageRecord
    nodes_ : list of ClusterNode
    linkage_matrix_ : ndarray of shape (K - 1, 4)
        SciPy-compatible linkage (child, child, distance, number of values).
        Distances can decrease, so pass it to SciPy plotting routines only.
    partition_ : list of frozenset
    labels_ : ndarray of shape (n_samples,)
        Flat cluster index of every training row; -1 for discarded rows.
    dataset_ : Dataset
        The retained (and standardized) training data.
    kernel_ : KernelConfig
    """

    def __init__(self, gamma="unit_variance_default", top_k=None, min_count=2, cap=None,
                 standardize=True, distance_threshold=None, random_state=0):
        self.gamma = gamma
        self.top_k = top_k
        self.min_count = min_count
        self.cap = cap
        self.standardize = standardize
        self.distance_threshold = distance_threshold
        self.random_state = random_state

    def fit(self, X, y, feature_names=None):
        """Fit on quantitative features ``X`` and qualitative values ``y``."""
        seed = check_int(self.random_state, "random_state", minimum=0)
        cap = check_int(self.cap, "cap", minimum=2, allow_none=True)
        check_nonneg_float(self.distance_threshold, "distance_threshold", allow_none=True)
        data = Dataset.from_arrays(X, y, feature_names)
        groups = group_by_value(data, self.top_k, self.min_count)
        data, groups = restrict(data, groups)
        if self.standardize:
            data = standardize(data)
        self.kernel_ = resolve_kernel(self.gamma, data.quantitative, seed)
        self.nodes_, self.linkage_, self.dissimilarity_ = run_hqc(
            data, groups, self.kernel_, cap=cap, seed=seed)
        self.values_ = [g.value for g in groups]
        self.dataset_ = data
        self.n_features_in_ = data.n_features
        self.linkage_matrix_ = self._scipy_linkage()
        self.partition_ = self.cut(self.distance_threshold)

        row_label = np.full(len(y), -1, dtype=np.intp)
        lookup = self._value_index(self.partition_)
        y = np.asarray(y, dtype=object)
        for i, v in enumerate(y):
            row_label[i] = lookup.get(str(v), -1)
        self.labels_ = row_label
        return self

    def _scipy_linkage(self):
        n_values = {i: 1 for i in range(len(self.values_))}
        Z = np.zeros((len(self.linkage_), 4))
        for t, r in enumerate(self.linkage_):
            n_values[r.new_id] = n_values[r.child1] + n_values[r.child2]
            Z[t] = (r.child1, r.child2, r.distance, n_values[r.new_id])
        return Z

    @staticmethod
    def _value_index(partition):
        return {v: k for k, block in enumerate(partition) for v in block}

    def cut(self, threshold=None):
        """Partition of the values using merges below ``threshold``.

        ``None`` gives one block per value.
        """
        check_is_fitted(self, "linkage_")
        if threshold is None:
            return [frozenset([v]) for v in sorted(self.values_)]
        return cut_linkage(self.linkage_, threshold, self.values_)

    def predict(self, y):
        """Flat cluster index of each qualitative value (-1 if unseen)."""
        check_is_fitted(self, "partition_")
        lookup = self._value_index(self.partition_)
        return np.array([lookup.get(str(v), -1) for v in np.asarray(y, dtype=object)],
                        dtype=np.intp)

    def fit_predict(self, X, y, feature_names=None):
        return self.fit(X, y, feature_names).labels_

    def embed(self):
        """2-D PCA embedding of :attr:`dissimilarity_` labelled by value."""
        check_is_fitted(self, "dissimilarity_")
        return embed_dissimilarity(self.dissimilarity_, self.values_)
