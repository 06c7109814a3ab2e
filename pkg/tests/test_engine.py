import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqc.data import Dataset, ValueGroup, group_by_value, sample_for
from hqc.engine import (
    ColumnLinkage,
    DissimilarityMatrix,
    LinkageRecord,
    MMDLinkage,
    TokenSetLinkage,
    agglomerate,
    cut_linkage,
    initial_dissimilarity,
    leaf_nodes,
    leaf_value_sets,
    merge_step,
    run_hqc,
)
from hqc.exceptions import DataError
from hqc.statdist import KernelConfig, mmd_distance
from hqc.synthetic import nonmonotone_groups, planted_groups

import table1
from oracles import brute_mmd2, naive_hqc

HALF = KernelConfig(0.5, "fixed")


def make(X, y, min_count=2):
    d = Dataset.from_arrays(X, y)
    return d, group_by_value(d, min_count=min_count)


def random_instance(rng, k_max=5, n_max=12, dim=2):
    k = int(rng.integers(2, k_max + 1))
    sizes = rng.integers(2, n_max + 1, size=k)
    X = np.vstack([rng.normal(rng.normal(0, 1.5, dim), 1, (s, dim)) for s in sizes])
    y = np.repeat([f"v{i}" for i in range(k)], sizes)
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


def check_against_naive(X, y, config=HALF):
    d, groups = make(X, y)
    _, records, _ = run_hqc(d, groups, config)
    ref = naive_hqc(d.quantitative, [g.row_indices for g in groups], config)
    got = [(r.new_id, r.child1, r.child2, r.distance, r.size) for r in records]
    assert got == ref


# initial matrix

def test_duplicate_groups_zero_distance():
    X = np.random.default_rng(0).normal(size=(6, 2))
    d = Dataset.from_arrays(np.vstack([X, X]), ["a"] * 6 + ["b"] * 6)
    groups = group_by_value(d)
    M = initial_dissimilarity(groups, d, HALF)
    assert M.entries[0, 1] == 0.0 and M.entries[1, 0] == 0.0


def test_planted_initial_matrix_frozen_values():
    X, y = planted_groups(n_per_group=200, n_features=2, shift=5.0, seed=0)
    d, groups = make(X, y)
    M = initial_dissimilarity(groups, d, HALF)
    assert [g.value for g in groups] == ["A", "B", "C"]
    # frozen from the brute-force double-loop oracle
    assert M[0, 1] == 0.0  # squared estimate -0.0027352835485517923 clamps to 0
    assert M[0, 2] == pytest.approx(math.sqrt(0.7130289220520404), abs=1e-9)
    assert M[1, 2] == pytest.approx(math.sqrt(0.703121393804944), abs=1e-9)
    assert M[0, 1] < M[0, 2] and M[0, 1] < M[1, 2]
    assert np.array_equal(M.entries, M.entries.T)
    assert np.all(np.diag(M.entries) == 0)


def test_initial_matrix_entries_match_oracle():
    rng = np.random.default_rng(1)
    X, y = random_instance(rng, k_max=4)
    d, groups = make(X, y)
    M = initial_dissimilarity(groups, d, HALF)
    for i, gi in enumerate(groups):
        for j, gj in enumerate(groups):
            if i < j:
                raw = brute_mmd2(X[gi.row_indices], X[gj.row_indices], 0.5)
                assert M.entries[i, j] == pytest.approx(math.sqrt(max(raw, 0)), abs=1e-10)


# matrix behaviour

def test_matrix_validation():
    with pytest.raises(DataError):
        DissimilarityMatrix([0, 1], [[0, 1], [2, 0]])
    with pytest.raises(DataError):
        DissimilarityMatrix([0, 1], [[1, 1], [1, 0]])
    with pytest.raises(DataError):
        DissimilarityMatrix([1, 0], [[0, 1], [1, 0]])


def test_argmin_tie_breaks_lexicographically():
    M = DissimilarityMatrix([0, 1, 2, 3], [[0, 2, 1, 1], [2, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]])
    assert M.argmin() == (0, 2, 1.0)


def test_merge_step_tie_rule():
    X = np.zeros((8, 1))
    X[6:] = 50.0
    y = ["a", "a", "b", "b", "c", "c", "d", "d"]
    d, groups = make(X, y)
    nodes = {n.id: n for n in leaf_nodes(groups)}
    link = MMDLinkage(d.quantitative, HALF)
    M = initial_dissimilarity(groups, linkage=link, nodes=list(nodes.values()))
    rec, M2 = merge_step(M, nodes, link)
    assert (rec.child1, rec.child2, rec.distance) == (0, 1, 0.0)
    assert M2.labels == [2, 3, 4]


def test_merge_step_two_clusters_terminates():
    X, y = planted_groups(n_per_group=10, n_features=2, seed=3)
    keep = np.isin(y, ["A", "C"])
    d, groups = make(X[keep], y[keep])
    nodes = {n.id: n for n in leaf_nodes(groups)}
    link = MMDLinkage(d.quantitative, HALF)
    M = initial_dissimilarity(groups, linkage=link, nodes=list(nodes.values()))
    rec, M2 = merge_step(M, nodes, link)
    assert len(M2) == 1 and M2.labels == [2]
    assert rec.distance == M.entries[0, 1]
    with pytest.raises(DataError):
        merge_step(M2, nodes, link)


def test_two_groups_single_record():
    X, y = planted_groups(n_per_group=15, n_features=3, seed=1)
    keep = y != "B"
    d, groups = make(X[keep], y[keep])
    nodes, records, initial = run_hqc(d, groups, HALF)
    assert len(records) == 1
    assert records[0].distance == mmd_distance(
        sample_for([groups[0]], d), sample_for([groups[1]], d), HALF).statistic
    assert records[0].new_id == 2 and records[0].size == 30


def test_needs_two_groups():
    d = Dataset.from_arrays(np.zeros((3, 1)), ["a"] * 3)
    with pytest.raises(DataError):
        run_hqc(d, [ValueGroup("a", [0, 1, 2])], HALF)


# whole runs

@pytest.mark.parametrize("seed", range(8))
def test_matches_naive_reference(seed):
    check_against_naive(*random_instance(np.random.default_rng(seed)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_run_invariants(seed):
    rng = np.random.default_rng(seed)
    X, y = random_instance(rng)
    d, groups = make(X, y)
    K = len(groups)
    nodes, records, initial = run_hqc(d, groups, HALF)
    assert len(records) == K - 1
    assert [r.new_id for r in records] == list(range(K, 2 * K - 1))
    by_id = {n.id: n for n in nodes}
    active = {i: by_id[i].row_indices for i in range(K)}
    for r in records:
        assert r.child1 != r.child2
        assert r.size == by_id[r.child1].size + by_id[r.child2].size
        assert by_id[r.child1].values.isdisjoint(by_id[r.child2].values)
        assert r.values == by_id[r.child1].values | by_id[r.child2].values
        del active[r.child1], active[r.child2]
        active[r.new_id] = by_id[r.new_id].row_indices
        rows = np.sort(np.concatenate(list(active.values())))
        assert np.array_equal(rows, np.arange(d.n_rows))
        assert r.distance >= 0
    assert records[-1].values == frozenset(g.value for g in groups)


def test_deterministic():
    X, y = random_instance(np.random.default_rng(42))
    d, groups = make(X, y)
    a = run_hqc(d, groups, HALF)[1]
    b = run_hqc(d, groups, HALF)[1]
    assert a == b


def test_nonmonotone_linkage_completes():
    X, y = nonmonotone_groups(seed=0)
    d, groups = make(X, y)
    _, records, initial = run_hqc(d, groups, HALF)
    assert (records[0].child1, records[0].child2) == (0, 1)
    assert records[1].distance < records[0].distance


def test_cap_subsamples_deterministically():
    X, y = planted_groups(n_per_group=60, n_features=2, seed=2)
    d, groups = make(X, y)
    a = run_hqc(d, groups, HALF, cap=25, seed=3)[1]
    b = run_hqc(d, groups, HALF, cap=25, seed=3)[1]
    c = run_hqc(d, groups, HALF, cap=25, seed=4)[1]
    full = run_hqc(d, groups, HALF)[1]
    assert a == b
    assert [r.distance for r in a] != [r.distance for r in c]
    assert [r.size for r in a] == [r.size for r in full]


def test_baseline_linkages_run():
    X, y = planted_groups(n_per_group=20, n_features=2, seed=0)
    d, groups = make(X, y)
    for stat in ("ks", "ad"):
        _, recs, init = agglomerate(groups, ColumnLinkage(d.quantitative[:, 0], stat))
        assert len(recs) == 2
        assert recs[-1].values == {"A", "B", "C"}
    tokens = np.where(y == "C", "t2", "t1")
    _, recs, init = agglomerate(groups, TokenSetLinkage(tokens, "jaccard"))
    assert init.entries[0, 1] == 0.0 and init.entries[0, 2] == 1.0
    assert (recs[0].child1, recs[0].child2) == (0, 1)


# cutting

def test_cut_extremes():
    recs = table1.records()
    assert cut_linkage(recs, 0.0) == sorted(
        (frozenset([a]) for a in table1.ARTISTS), key=sorted)
    assert cut_linkage(recs, math.inf) == [frozenset(table1.ARTISTS)]


def test_cut_table_at_040():
    recs = table1.records()
    parts = cut_linkage(recs, 0.4, table1.ARTISTS)
    assert parts == cut_linkage(recs, 0.4)
    by_id = {r.new_id: r.values for r in recs}
    # merges up to id 51 apply, 52 (0.408) and everything after do not
    expected = [by_id[51], by_id[50], by_id[47], frozenset(["Bob Marley & The Wailers"]),
                frozenset(["Orchestra Studio 7"]), frozenset(["Metallica"]),
                frozenset(["Ignacio Corsini"]), frozenset(["Francisco Canaro"])]
    assert sorted(parts, key=sorted) == sorted(expected, key=sorted)
    assert sum(len(p) for p in parts) == 30


def test_cut_is_strict():
    recs = [LinkageRecord(2, 0, 1, 0.4, 4, {"a", "b"})]
    assert len(cut_linkage(recs, 0.4)) == 2
    assert len(cut_linkage(recs, 0.40001)) == 1


def test_leaf_value_sets_table():
    leaves = leaf_value_sets(table1.records())
    assert leaves[21] == {"The Who"} and leaves[27] == {"The Kinks"}
    assert set().union(*leaves.values()) == set(table1.ARTISTS)
