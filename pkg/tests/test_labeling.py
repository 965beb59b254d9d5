import itertools

import numpy as np
import pytest

from clusterselect.errors import DegenerateInputError, DimensionError, EmptyInputError, ParameterError, ParseError
from clusterselect.labeling import (
    Labeling,
    canonicalize,
    contingency,
    pair_counts,
    read_labeling,
    write_labeling,
)

from .helpers import permute_labels, random_labeling


def brute_pair_counts(a, b):
    n11 = n00 = n10 = n01 = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        same_a, same_b = a[i] == a[j], b[i] == b[j]
        if same_a and same_b:
            n11 += 1
        elif not same_a and not same_b:
            n00 += 1
        elif same_a:
            n10 += 1
        else:
            n01 += 1
    return n11, n00, n10, n01


def test_contingency_identical():
    t = contingency(Labeling([0, 0, 1, 1]), Labeling([0, 0, 1, 1]))
    np.testing.assert_array_equal(t.counts, [[2, 0], [0, 2]])
    assert t.total == 4


def test_contingency_fully_crossed():
    t = contingency(Labeling([0, 0, 1, 1]), Labeling([0, 1, 0, 1]))
    np.testing.assert_array_equal(t.counts, np.ones((2, 2)))
    np.testing.assert_array_equal(t.row_marginals, [2, 2])
    np.testing.assert_array_equal(t.col_marginals, [2, 2])


def test_contingency_rows_in_first_appearance_order():
    t = contingency(Labeling([7, 7, 2]), Labeling([1, 3, 3]))
    assert t.row_labels == (7, 2)
    assert t.col_labels == (1, 3)
    np.testing.assert_array_equal(t.counts, [[1, 1], [0, 1]])


@pytest.mark.parametrize("seed", range(20))
def test_contingency_matches_point_tally(seed):
    rng = np.random.default_rng(seed)
    a, b = random_labeling(rng, 10, 4), random_labeling(rng, 10, 4)
    t = contingency(a, b)
    for s, sv in enumerate(t.row_labels):
        for c, cv in enumerate(t.col_labels):
            expected = sum(1 for i in range(10) if a.labels[i] == sv and b.labels[i] == cv)
            assert t.counts[s, c] == expected
    assert t.counts.sum() == 10
    np.testing.assert_array_equal(t.counts.sum(axis=1), t.row_marginals)
    np.testing.assert_array_equal(t.counts.sum(axis=0), t.col_marginals)


def test_contingency_length_mismatch():
    with pytest.raises(DimensionError):
        contingency(Labeling([0, 1]), Labeling([0, 1, 2]))


def test_pair_counts_identical_two_clusters():
    assert pair_counts(Labeling([0, 0, 1, 1]), Labeling([0, 0, 1, 1])) == (2, 4, 0, 0)


def test_pair_counts_single_cluster():
    assert pair_counts(Labeling([0, 0, 0]), Labeling([5, 5, 5])) == (3, 0, 0, 0)


def test_pair_counts_needs_two_points():
    with pytest.raises(DegenerateInputError):
        pair_counts(Labeling([0]), Labeling([0]))


@pytest.mark.parametrize("seed", range(30))
def test_pair_counts_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    a, b = random_labeling(rng, 8, 4), random_labeling(rng, 8, 4)
    counts = pair_counts(a, b)
    assert counts == brute_pair_counts(a.labels, b.labels)
    assert sum(counts) == 8 * 7 // 2
    aa = pair_counts(a, a)
    assert aa[2] == aa[3] == 0


@pytest.mark.parametrize("seed", range(20))
def test_relabeling_leaves_statistics_unchanged(seed):
    rng = np.random.default_rng(seed)
    a, b = random_labeling(rng, 12, 5), random_labeling(rng, 12, 5)
    pa, pb = permute_labels(rng, a), permute_labels(rng, b)
    assert pair_counts(pa, pb) == pair_counts(a, b)
    t1, t2 = contingency(a, b), contingency(pa, pb)
    np.testing.assert_array_equal(t1.counts, t2.counts)


def test_canonicalize_example():
    assert canonicalize(Labeling([3, 3, 1, 1, 1, 2])).tolist() == [0, 0, 1, 1, 1, 2]
    assert canonicalize(Labeling([0, 1, 2])).tolist() == [0, 1, 2]


def test_canonicalize_is_idempotent():
    once = canonicalize(Labeling([9, 4, 9, 0, 4]))
    assert canonicalize(once).tolist() == once.tolist()


def test_canonicalize_keeps_noise_label():
    lab = canonicalize(Labeling([5, 2, 2, 5, 9], noise_label=2))
    assert lab.tolist() == [0, 1, 1, 0, 2]
    assert lab.noise_label == 1


def test_labelings_compare_up_to_relabeling():
    assert Labeling([1, 1, 2, 2, 2, 3]) == Labeling([3, 3, 1, 1, 1, 2])
    assert Labeling([0, 0, 1]) != Labeling([0, 1, 1])
    assert len({Labeling([0, 1]), Labeling([1, 0])}) == 1


def test_labeling_validation():
    with pytest.raises(ParameterError):
        Labeling([0, -1])
    with pytest.raises(ParameterError):
        Labeling([0.5, 1])
    with pytest.raises(EmptyInputError):
        Labeling([])
    with pytest.raises(DimensionError):
        Labeling([[0, 1]])


def test_write_then_read_labeling_is_canonical(tmp_path):
    path = tmp_path / "l.txt"
    write_labeling(Labeling([4, 4, 2, 9]), path)
    assert path.read_text() == "0\n0\n1\n2\n"
    assert read_labeling(path).tolist() == [0, 0, 1, 2]


def test_read_labeling_single_csv_row(tmp_path):
    path = tmp_path / "l.csv"
    path.write_text("2, 2, 0, 1\n")
    assert read_labeling(path).tolist() == [2, 2, 0, 1]


def test_read_labeling_reports_line(tmp_path):
    path = tmp_path / "l.txt"
    path.write_text("0\n\n1\nfoo\n")
    with pytest.raises(ParseError, match="line 4"):
        read_labeling(path)
