"""Agglomerative merging of qualitative-value clusters.

Each qualitative value starts as its own cluster (ids ``0..K-1``). At every
step the closest pair of active clusters is merged into a new cluster with
the next id, and the distance from the merged cluster to every survivor is
recomputed from the pooled rows. Because distances are recomputed rather
than updated with a linkage formula, merge heights need not increase.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import subsample_indices
from .exceptions import DataError
from .statdist import (
    KernelConfig,
    ad_statistic,
    canonical_pair,
    clamp_distance,
    combine_terms,
    cross_term,
    jaccard_distance,
    ks_statistic,
    overlap_dissimilarity,
    within_term,
)


@dataclass(frozen=True, eq=False)
class ClusterNode:
    id: int
    values: frozenset
    row_indices: np.ndarray = field(repr=False)
    children: tuple = None
    height: float = 0.0

    @property
    def size(self):
        return int(self.row_indices.size)

    @property
    def is_leaf(self):
        return self.children is None


@dataclass(frozen=True)
class LinkageRecord:
    """One merge: ``child1`` and ``child2`` joined at ``distance`` into ``new_id``."""

    new_id: int
    child1: int
    child2: int
    distance: float
    size: int
    values: frozenset

    def __post_init__(self):
        object.__setattr__(self, "values", frozenset(self.values))
        if self.child1 == self.child2:
            raise DataError(f"record {self.new_id} merges cluster {self.child1} with itself")


class DissimilarityMatrix:
    """Symmetric distances between the active clusters, labelled by cluster id.

    Labels are kept in ascending order, so scanning the upper triangle row
    by row visits pairs in lexicographic ``(low id, high id)`` order.
    """

    def __init__(self, labels, entries):
        entries = np.array(entries, dtype=np.float64)
        labels = [int(v) for v in labels]
        if entries.shape != (len(labels), len(labels)):
            raise DataError(f"matrix shape {entries.shape} does not match {len(labels)} labels")
        if labels != sorted(labels) or len(set(labels)) != len(labels):
            raise DataError("labels must be strictly increasing")
        if not np.array_equal(entries, entries.T):
            raise DataError("dissimilarity matrix is not symmetric")
        if np.any(np.diag(entries) != 0) or np.any(entries < 0):
            raise DataError("dissimilarity matrix needs a zero diagonal and non-negative entries")
        self.labels = labels
        self.entries = entries

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, pair):
        a, b = pair
        return float(self.entries[self.labels.index(a), self.labels.index(b)])

    def argmin(self):
        """Closest pair; ties go to the lexicographically smallest id pair."""
        k = len(self.labels)
        if k < 2:
            raise DataError("need at least 2 active clusters")
        masked = np.where(np.triu(np.ones((k, k), dtype=bool), 1), self.entries, np.inf)
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        return self.labels[i], self.labels[j], float(self.entries[i, j])

    def replace(self, drop, new_label, new_row):
        """Remove ``drop`` ids and append ``new_label`` with distances ``new_row``.

        ``new_row`` is ordered like the surviving labels.
        """
        keep = [i for i, v in enumerate(self.labels) if v not in drop]
        labels = [self.labels[i] for i in keep] + [int(new_label)]
        k = len(labels)
        out = np.zeros((k, k))
        out[: k - 1, : k - 1] = self.entries[np.ix_(keep, keep)]
        out[k - 1, : k - 1] = new_row
        out[: k - 1, k - 1] = new_row
        return DissimilarityMatrix(labels, out)

    def copy(self):
        return DissimilarityMatrix(list(self.labels), self.entries.copy())


class MMDLinkage:
    """Pooled-sample MMD distance between cluster nodes.

    Within-cluster kernel terms depend on one cluster only, so they are
    cached by node id; the cross term is recomputed per pair.
    """

    def __init__(self, X, config=KernelConfig(), cap=None, seed=0):
        self.X = np.asarray(X, dtype=np.float64)
        self.config = config
        self.cap = cap
        self.seed = seed
        self._rows = {}
        self._within = {}

    def rows(self, node):
        if node.id not in self._rows:
            idx = subsample_indices(node.row_indices, self.cap, self.seed, node.id)
            if idx.size < 2:
                raise DataError(f"cluster {node.id} has {idx.size} row(s); MMD needs 2")
            self._rows[node.id] = self.X[idx]
        return self._rows[node.id]

    def within(self, node):
        if node.id not in self._within:
            self._within[node.id] = within_term(self.rows(node), self.config.gamma)
        return self._within[node.id]

    def raw(self, a, b):
        x, y = self.rows(a), self.rows(b)
        wx, wy = self.within(a), self.within(b)
        first, second = canonical_pair(x, y)
        return combine_terms(wx, wy, cross_term(first, second, self.config.gamma))

    def __call__(self, a, b):
        return clamp_distance(self.raw(a, b))

    def forget(self, node_id):
        self._rows.pop(node_id, None)
        self._within.pop(node_id, None)


class ColumnLinkage:
    """Univariate KS or AD statistic on one quantitative column."""

    def __init__(self, column_values, statistic):
        self.values = np.asarray(column_values, dtype=np.float64)
        self.statistic = {"ks": ks_statistic, "ad": ad_statistic}[statistic]

    def __call__(self, a, b):
        return float(self.statistic(self.values[a.row_indices], self.values[b.row_indices]))

    def forget(self, node_id):
        pass


class TokenSetLinkage:
    """Overlap or Jaccard dissimilarity on per-row context tokens.

    A cluster's token set is the set of distinct tokens over its rows.
    """

    def __init__(self, tokens, statistic):
        self.tokens = np.asarray(tokens, dtype=object)
        self.statistic = {"overlap": overlap_dissimilarity, "jaccard": jaccard_distance}[statistic]

    def __call__(self, a, b):
        return float(self.statistic(set(self.tokens[a.row_indices]),
                                    set(self.tokens[b.row_indices])))

    def forget(self, node_id):
        pass


def leaf_nodes(groups):
    if len(groups) < 2:
        raise DataError(f"clustering needs at least 2 groups, got {len(groups)}")
    return [ClusterNode(i, frozenset([g.value]), g.row_indices) for i, g in enumerate(groups)]


def initial_dissimilarity(groups, dataset=None, config=KernelConfig(), linkage=None,
                          nodes=None):
    """K x K matrix of pairwise distances between the initial value groups.

    Parameters
    ----------
    groups : list of ValueGroup
    dataset : Dataset
        Source of the quantitative rows (unused when ``linkage`` is given).
    config : KernelConfig
    linkage : callable, optional
        Distance between two :class:`ClusterNode`; defaults to pooled MMD.
    """
    nodes = leaf_nodes(groups) if nodes is None else nodes
    if linkage is None:
        linkage = MMDLinkage(dataset.quantitative, config)
    k = len(nodes)
    D = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            D[i, j] = D[j, i] = linkage(nodes[i], nodes[j])
    return DissimilarityMatrix([n.id for n in nodes], D)


def merge_step(matrix, nodes, linkage):
    """Merge the closest active pair in place.

    ``nodes`` maps id -> :class:`ClusterNode` and gains the merged node;
    returns the :class:`LinkageRecord` and the updated matrix.
    """
    if len(matrix) < 2:
        raise DataError("need at least 2 active clusters to merge")
    a, b, dist = matrix.argmin()
    left, right = nodes[a], nodes[b]
    new_id = max(nodes) + 1
    merged = ClusterNode(
        new_id,
        left.values | right.values,
        np.union1d(left.row_indices, right.row_indices),
        (a, b),
        dist,
    )
    nodes[new_id] = merged
    survivors = [v for v in matrix.labels if v not in (a, b)]
    row = np.array([linkage(nodes[c], merged) for c in survivors])
    linkage.forget(a)
    linkage.forget(b)
    record = LinkageRecord(new_id, a, b, dist, merged.size, merged.values)
    return record, matrix.replace((a, b), new_id, row)


def agglomerate(groups, linkage):
    """Run the merge loop with an arbitrary node distance.

    Returns
    -------
    nodes : list of ClusterNode
        Leaves ``0..K-1`` followed by merged nodes in creation order.
    records : list of LinkageRecord
    initial : DissimilarityMatrix
        Distances between the K initial clusters.
    """
    leaves = leaf_nodes(groups)
    nodes = {n.id: n for n in leaves}
    matrix = initial_dissimilarity(groups, linkage=linkage, nodes=leaves)
    initial = matrix.copy()
    records = []
    while len(matrix) > 1:
        record, matrix = merge_step(matrix, nodes, linkage)
        records.append(record)
    return [nodes[i] for i in sorted(nodes)], records, initial


def run_hqc(dataset, groups, config=KernelConfig(), cap=None, seed=0):
    """Hierarchical clustering of qualitative values under the MMD distance.

    Parameters
    ----------
    dataset : Dataset
        Normally standardized beforehand.
    groups : list of ValueGroup
        Initial clusters; group ``i`` becomes cluster id ``i``.
    config : KernelConfig
    cap : int, optional
        Maximum rows per cluster sample; larger clusters are subsampled
        with a generator seeded by ``(seed, cluster id)``.
    seed : int

    Returns
    -------
    nodes, records, initial
        As in :func:`agglomerate`.
    """
    return agglomerate(groups, MMDLinkage(dataset.quantitative, config, cap, seed))


def cut_linkage(records, threshold, leaf_values=None):
    """Partition of values produced by the merges with ``distance < threshold``.

    Merges are replayed in record order; a merge is applied only if both of
    its children are still present, so the result is always a partition.

    Parameters
    ----------
    records : list of LinkageRecord
    threshold : float
    leaf_values : list of str, optional
        Value of each leaf id. Inferred from the records when omitted.

    Returns
    -------
    list of frozenset
        Sorted by their smallest value.
    """
    if leaf_values is None:
        live = leaf_value_sets(records)
    else:
        live = {i: frozenset([v]) for i, v in enumerate(leaf_values)}
    for r in records:
        if r.distance < threshold and r.child1 in live and r.child2 in live:
            live[r.new_id] = live.pop(r.child1) | live.pop(r.child2)
    return sorted(live.values(), key=lambda s: sorted(s))


def leaf_value_sets(records):
    """Recover ``{leaf id: {value}}`` from a complete linkage.

    A leaf's value is its parent's value set minus its sibling's. When two
    leaves merge directly the pair is split in sorted order; either choice
    yields the same partitions.
    """
    merged = {r.new_id: r.values for r in records}
    leaves = {}
    for r in records:
        c1, c2 = r.child1, r.child2
        if c1 in merged and c2 in merged:
            continue
        if c1 in merged or c2 in merged:
            leaf, sib = (c2, c1) if c1 in merged else (c1, c2)
            rest = r.values - merged[sib]
        else:
            rest = r.values
            if len(rest) != 2:
                raise DataError(f"record {r.new_id} joins two leaves but has {len(rest)} values")
            first, second = sorted(rest)
            leaves[min(c1, c2)] = frozenset([first])
            leaves[max(c1, c2)] = frozenset([second])
            continue
        if len(rest) != 1:
            raise DataError(f"leaf {leaf} of record {r.new_id} would hold {len(rest)} values")
        leaves[leaf] = rest
    return dict(sorted(leaves.items()))
