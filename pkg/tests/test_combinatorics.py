import math
from itertools import combinations, permutations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shsbm.combinatorics import (
    binom,
    class_at,
    class_index,
    count_D_t,
    disagreement,
    enumerate_classes,
    log_binom,
    log_space_size,
    misclassification_stats,
    space_size,
    stirling_log_lower_bound,
    subset_rank,
    subset_unrank,
)
from shsbm.errors import EnumerationGuardError, InvalidConfigError, InvalidSubsetError
from shsbm.model import Hypothesis


def brute_labeled(n, r, k):
    for labels in product(range(r + 1), repeat=n):
        if all(labels.count(c) == k for c in range(r)):
            yield Hypothesis(labels, r, k)


def test_binom_values():
    assert binom(5, 2) == 10
    assert binom(4, 0) == 1
    assert binom(3, 5) == 0
    assert binom(3, -1) == 0


@pytest.mark.parametrize("a,b", [(50, 25), (100, 3), (7, 7), (300, 150)])
def test_log_binom_matches_exact(a, b):
    exact = math.log(binom(a, b))
    assert log_binom(a, b) == pytest.approx(exact, rel=1e-9, abs=1e-12)


def test_rank_examples():
    assert subset_rank((0, 1), 4, 2) == 0
    pairs = list(combinations(range(4), 2))
    assert subset_rank((2, 3), 4, 2) == pairs.index((2, 3)) == 5


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("m", range(1, 5))
def test_rank_round_trip_exhaustive(n, m):
    if m > n:
        return
    for expected, s in enumerate(combinations(range(n), m)):
        assert subset_rank(s, n, m) == expected
        assert subset_unrank(expected, n, m) == s


def test_rank_errors():
    with pytest.raises(InvalidSubsetError):
        subset_unrank(6, 4, 2)
    with pytest.raises(InvalidSubsetError):
        subset_rank((1, 1), 4, 2)


@pytest.mark.parametrize("n,r,k,labeled,classes", [(4, 1, 2, 6, 6), (6, 2, 2, 90, 45), (5, 1, 5, 1, 1)])
def test_space_size_examples(n, r, k, labeled, classes):
    s = space_size(n, r, k)
    assert (s.labeled_size, s.class_size) == (labeled, classes)
    assert sum(1 for _ in brute_labeled(n, r, k)) == labeled


def test_space_size_rejects_oversized():
    with pytest.raises(InvalidConfigError):
        space_size(5, 2, 3)


def test_enumerate_examples():
    got = [y.communities[0] for y in enumerate_classes(4, 1, 2)]
    assert got == list(combinations(range(4), 2))
    assert sum(1 for _ in enumerate_classes(6, 2, 2)) == 45
    (only,) = enumerate_classes(3, 1, 3)
    assert only.labels == (0, 0, 0)


@pytest.mark.parametrize("n,r,k", [(6, 2, 2), (7, 2, 3), (8, 2, 4), (8, 1, 3), (7, 3, 2)])
def test_enumeration_covers_each_class_once(n, r, k):
    enumerated = [y.class_key for y in enumerate_classes(n, r, k)]
    brute = {y.class_key for y in brute_labeled(n, r, k)}
    assert len(enumerated) == len(set(enumerated)) == len(brute) == space_size(n, r, k).class_size
    assert set(enumerated) == brute
    assert all(y == y.canonical() for y in enumerate_classes(n, r, k))


def test_enumeration_chunks_are_disjoint_and_complete():
    full = [y.labels for y in enumerate_classes(8, 2, 3)]
    chunks = []
    for start in range(0, len(full), 37):
        chunks.extend(y.labels for y in enumerate_classes(8, 2, 3, start, start + 37))
    assert chunks == full
    assert all(class_at(8, 2, 3, i).labels == labels for i, labels in enumerate(full))
    assert all(class_index(Hypothesis(labels, 2, 3)) == i for i, labels in enumerate(full))


def test_enumeration_guard():
    with pytest.raises(EnumerationGuardError):
        next(enumerate_classes(12, 2, 4, cap=100))


def test_disagreement_examples():
    truth = Hypothesis((0, 0, 1, 1), 1, 2)
    assert disagreement(truth, truth, 2).d == 0
    assert disagreement(truth, truth, 2).d_pair == 0
    y = Hypothesis.from_communities(4, [[0, 2]])
    assert disagreement(y, truth, 2).d == 1
    others = [c for c in enumerate_classes(4, 1, 2) if not c.same_class(truth)]
    assert len(others) == 5
    assert all(disagreement(c, truth, 2).d == 1 for c in others)


def brute_d(y, truth, m):
    return sum(
        1 for s in combinations(range(y.n), m)
        if len({truth.labels[i] for i in s}) == 1 and truth.labels[s[0]] < truth.r
        and not (len({y.labels[i] for i in s}) == 1 and y.labels[s[0]] < y.r)
    )


@pytest.mark.parametrize("n,r,k,m", [(7, 2, 3, 2), (7, 2, 3, 3), (8, 1, 4, 3), (6, 3, 2, 2)])
def test_disagreement_against_brute_force(n, r, k, m):
    truth = class_at(n, r, k, 3)
    for y in enumerate_classes(n, r, k):
        s = disagreement(y, truth, m)
        assert s.d == brute_d(y, truth, m)
        assert s.symmetric_difference == 2 * s.d
        assert s.d_pair == brute_d(y, truth, 2)


def test_misclassification_examples():
    truth = Hypothesis((0, 0, 1, 1), 1, 2)
    same = misclassification_stats(truth, truth)
    assert same.M == (0,) and same.N1 == (0,) and same.N2 == (0,)
    ms = misclassification_stats(Hypothesis.from_communities(4, [[0, 2]]), truth)
    assert (ms.M, ms.N1, ms.N2) == ((1,), (1,), (0,))
    assert ms.d_pair == 1


@pytest.mark.parametrize("n,r,k", [(8, 2, 4), (8, 2, 3), (7, 3, 2), (8, 1, 4)])
def test_misclassification_decomposition_exhaustive(n, r, k):
    truth = class_at(n, r, k, 0)
    for y in enumerate_classes(n, r, k):
        for perm in permutations(range(r)):
            yl = y.relabel(perm)
            ms = misclassification_stats(yl, truth)
            assert ms.d_pair == disagreement(yl, truth, 2).d_pair
            for M, a, b in zip(ms.M, ms.N1, ms.N2):
                assert 4 * (a + b) >= k * M


def test_count_D_t_examples():
    truth = Hypothesis((0, 0, 1, 1), 1, 2)
    assert count_D_t(4, 1, 2, 2, truth) == {0: 1, 1: 5}
    hist = count_D_t(6, 2, 2, 2, class_at(6, 2, 2, 0))
    assert hist[0] == 1 and sum(hist.values()) == 45


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(7, 2, 3, 2), (8, 2, 3, 3), (8, 1, 4, 2), (6, 2, 2, 2), (8, 2, 4, 4)]), st.data())
def test_d_range_property(shape, data):
    n, r, k, m = shape
    size = space_size(n, r, k).class_size
    truth = class_at(n, r, k, data.draw(st.integers(0, size - 1)))
    y = class_at(n, r, k, data.draw(st.integers(0, size - 1)))
    s = disagreement(y, truth, m)
    if y.same_class(truth):
        assert s.d == 0
    else:
        assert binom(k - 1, m - 1) <= s.d <= r * binom(k, m)
        assert s.d_pair * binom(k, m) <= binom(k, 2) * s.d


@pytest.mark.parametrize("n,r,k", [(8, 2, 3), (20, 3, 4), (60, 4, 10), (12, 1, 12)])
def test_log_space_size_routes_agree(n, r, k):
    exact = math.log(space_size(n, r, k).labeled_size) if space_size(n, r, k).labeled_size > 1 else 0.0
    assert log_space_size(n, r, k) == pytest.approx(exact, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("n,r,k", [(8, 2, 3), (20, 3, 4), (60, 4, 10), (9, 3, 3)])
def test_stirling_lower_bound_holds(n, r, k):
    assert stirling_log_lower_bound(n, r, k) <= math.log(space_size(n, r, k).labeled_size)
