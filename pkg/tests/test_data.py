import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hqc.data import Dataset, ValueGroup, group_by_value, load_csv, sample_for, standardize
from hqc.exceptions import ConfigError, DataError, SmallSampleWarning


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


CSV4 = """artist,tempo,energy
a,120,0.5
b,98.5,0.7
a,101,1e-1
c,87,.9
"""


def test_load_csv_basic(tmp_path):
    d = load_csv(write(tmp_path, CSV4), "artist")
    assert d.n_rows == 4 and d.n_features == 2
    assert d.column_names == ("tempo", "energy")
    assert list(d.qualitative) == ["a", "b", "a", "c"]
    assert d.dropped_rows == 0
    np.testing.assert_array_equal(d.quantitative[:, 1], [0.5, 0.7, 0.1, 0.9])


def test_load_csv_drops_missing(tmp_path):
    text = CSV4.replace("98.5", "")
    d = load_csv(write(tmp_path, text), "artist")
    assert d.n_rows == 3
    assert d.dropped_rows == 1


def test_unparseable_cell_counts_as_missing(tmp_path):
    text = CSV4 + "d,fast,0.3\n"
    d = load_csv(write(tmp_path, text), "artist", ["tempo", "energy"])
    assert d.n_rows == 4 and d.dropped_rows == 1


def test_auto_mode_skips_text_columns(tmp_path):
    text = "name,genre,x\na,rock,1\nb,pop,2\n"
    d = load_csv(write(tmp_path, text), "name")
    assert d.column_names == ("x",)


def test_zero_numeric_columns(tmp_path):
    text = "artist,genre\na,rock\nb,pop\n"
    with pytest.raises(DataError, match="zero numeric columns"):
        load_csv(write(tmp_path, text), "artist")


def test_explicit_non_numeric_column(tmp_path):
    text = "artist,genre,x\na,rock,1\nb,pop,2\n"
    with pytest.raises(DataError, match="genre"):
        load_csv(write(tmp_path, text), "artist", ["genre"])


@pytest.mark.parametrize("label, exc", [("nope", ConfigError)])
def test_missing_label_column(tmp_path, label, exc):
    with pytest.raises(exc, match="nope"):
        load_csv(write(tmp_path, CSV4), label)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "absent.csv", "artist")


def test_zero_rows_survive(tmp_path):
    text = "artist,x\na,\nb,zz\n,1\n"
    with pytest.raises(DataError, match="zero rows"):
        load_csv(write(tmp_path, text), "artist", ["x"])


def test_quoted_fields_and_utf8(tmp_path):
    text = 'artist,x\n"Vicente Fernández",1\n"Bob Marley, & The Wailers",2\n'
    d = load_csv(write(tmp_path, text), "artist")
    assert list(d.qualitative) == ["Vicente Fernández", "Bob Marley, & The Wailers"]


def test_context_columns(tmp_path):
    text = "artist,genre,x\na,rock,1\nb,pop,\nc,jazz,3\n"
    d = load_csv(write(tmp_path, text), "artist", ["x"], context_columns=["genre"])
    assert list(d.context["genre"]) == ["rock", "jazz"]


def test_dataset_is_immutable():
    d = Dataset.from_arrays(np.ones((3, 2)), ["a", "b", "c"])
    with pytest.raises(ValueError):
        d.quantitative[0, 0] = 5.0


def test_row_count_mismatch():
    with pytest.raises(DataError):
        Dataset.from_arrays(np.ones((3, 2)), ["a", "b"])


# standardize

def test_standardize_hand_example():
    d = standardize(Dataset.from_arrays([[1.0], [2.0], [3.0]], ["a", "b", "c"]))
    np.testing.assert_allclose(d.quantitative[:, 0], [-1.0, 0.0, 1.0], atol=1e-15)
    assert d.standardized


def test_standardize_constant_column():
    d = standardize(Dataset.from_arrays([[5.0, 1], [5.0, 2], [5.0, 4]], ["a", "b", "c"]))
    np.testing.assert_array_equal(d.quantitative[:, 0], 0.0)
    assert d.zero_variance_columns == ("x0",)


def test_standardize_already_standard_unchanged():
    col = np.array([-1.0, 0.0, 1.0])
    d = standardize(Dataset.from_arrays(col[:, None], ["a", "b", "c"]))
    np.testing.assert_allclose(d.quantitative[:, 0], col, atol=1e-12)


def test_standardize_needs_two_rows():
    with pytest.raises(DataError):
        standardize(Dataset.from_arrays([[1.0]], ["a"]))


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 4)), elements=finite))
def test_standardize_moments_and_idempotence(X):
    d = Dataset.from_arrays(X, ["v"] * X.shape[0])
    s1 = standardize(d)
    s2 = standardize(s1)
    np.testing.assert_allclose(s2.quantitative, s1.quantitative, atol=1e-9)
    live = [j for j, n in enumerate(s1.column_names) if n not in s1.zero_variance_columns]
    Z = s1.quantitative[:, live]
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1.0, atol=1e-9)
    dead = [j for j in range(X.shape[1]) if j not in live]
    assert np.all(s1.quantitative[:, dead] == 0)


# grouping

def labelled(labels):
    return Dataset.from_arrays(np.arange(len(labels), dtype=float)[:, None], labels)


def test_group_top_k():
    groups = group_by_value(labelled(list("aaabbc")), top_k=2, min_count=2)
    assert [(g.value, g.count) for g in groups] == [("a", 3), ("b", 2)]
    assert list(groups[0].row_indices) == [0, 1, 2]


def test_group_ties_lexicographic():
    groups = group_by_value(labelled(list("ccbbaa")), min_count=2)
    assert [g.value for g in groups] == ["a", "b", "c"]


def test_group_too_few():
    with pytest.raises(DataError):
        group_by_value(labelled(["a", "b"]), min_count=2)


def test_group_min_count_validated():
    with pytest.raises(ConfigError):
        group_by_value(labelled(list("aabb")), min_count=1)


def test_small_groups_warn():
    with pytest.warns(SmallSampleWarning):
        group_by_value(labelled(list("aabb")))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from("abcdefg"), min_size=4, max_size=80),
       st.integers(2, 4), st.one_of(st.none(), st.integers(2, 7)))
def test_groups_partition_retained_rows(labels, min_count, top_k):
    d = labelled(labels)
    try:
        groups = group_by_value(d, top_k, min_count)
    except DataError:
        return
    rows = np.concatenate([g.row_indices for g in groups])
    assert len(set(rows.tolist())) == rows.size
    for g in groups:
        assert g.count >= min_count
        assert np.all(np.diff(g.row_indices) > 0)
        assert all(d.qualitative[i] == g.value for i in g.row_indices)
    kept = {g.value for g in groups}
    retained = [i for i, v in enumerate(labels) if v in kept]
    assert sorted(rows.tolist()) == retained
    counts = [g.count for g in groups]
    assert counts == sorted(counts, reverse=True)


# sampling

def test_sample_single_group():
    d = labelled(list("aaab"))
    g = ValueGroup("a", [0, 1, 2])
    assert sample_for([g], d).n == 3


def test_sample_concatenates():
    d = labelled(list("aabbb"))
    groups = group_by_value(d, min_count=2)
    s = sample_for(groups, d)
    assert s.n == 5
    np.testing.assert_array_equal(s.rows[:, 0], np.arange(5.0))


def test_sample_cap_deterministic():
    d = Dataset.from_arrays(np.random.default_rng(0).normal(size=(1000, 3)), ["a"] * 1000)
    g = ValueGroup("a", np.arange(1000))
    s1 = sample_for([g], d, cap=500, seed=7)
    s2 = sample_for([g], d, cap=500, seed=7)
    s3 = sample_for([g], d, cap=500, seed=8)
    assert s1.n == 500
    np.testing.assert_array_equal(s1.rows, s2.rows)
    assert not np.array_equal(s1.rows, s3.rows)


def test_identical_inputs_identical_groups(tmp_path):
    p = write(tmp_path, CSV4 + "b,1,2\nc,3,4\n")
    g1 = group_by_value(load_csv(p, "artist"))
    g2 = group_by_value(load_csv(p, "artist"))
    assert [(g.value, g.row_indices.tobytes()) for g in g1] == \
        [(g.value, g.row_indices.tobytes()) for g in g2]
