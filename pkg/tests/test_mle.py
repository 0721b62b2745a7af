from itertools import permutations

import numpy as np
import pytest

from shsbm.combinatorics import class_at, disagreement, enumerate_classes, space_size
from shsbm.errors import ConfigMismatchError, EnumerationGuardError
from shsbm.mle import decompose, recovery_success, score, solve
from shsbm.model import Hypothesis, ModelConfig, WeightTensor, sample_weights


def naive_scores(weights, r, k):
    out = []
    for y in enumerate_classes(weights.n, r, k):
        out.append((sum(weights[s] for s in y.within_subsets(weights.m)), y))
    return out


def test_score_examples(tiny_config, tiny_truth):
    c = ModelConfig(6, 2, 3, 2, 1.0, 0.0)
    truth = Hypothesis.from_communities(6, [[0, 1, 2], [3, 4, 5]])
    w = sample_weights(c, truth, seed=0)
    assert score(w, truth) == 6
    for y in enumerate_classes(6, 2, 3):
        assert score(w, y) == 6 - disagreement(y, truth, 2).d
    zero = WeightTensor(tiny_config, np.zeros(6))
    assert all(score(zero, y) == 0 for y in enumerate_classes(4, 1, 2))


def test_score_shape_mismatch(tiny_config):
    w = WeightTensor(tiny_config, np.zeros(6))
    with pytest.raises(ConfigMismatchError):
        score(w, Hypothesis((0, 0, 1, 1, 1), 1, 2))


@pytest.mark.parametrize("shape", [(6, 2, 3, 2), (8, 2, 4, 3), (12, 1, 6, 3), (7, 3, 2, 2)])
def test_perfect_separation_recovers_truth(shape):
    n, r, k, m = shape
    c = ModelConfig(n, r, k, m, 1.0, 0.0, family="point_mass")
    rng = np.random.default_rng(5)
    for _ in range(3):
        truth = Hypothesis(tuple(rng.permutation([c_ for c_ in range(r) for _ in range(k)] + [r] * (n - r * k))), r, k)
        res = solve(sample_weights(c, truth, seed=rng), r, k)
        assert res.unique and recovery_success(res, truth)
        assert res.best_score == r * (k * (k - 1) * (k - 2) // 6 if m == 3 else k * (k - 1) // 2)


def test_constant_tensor_ties_everywhere():
    c = ModelConfig(6, 2, 2, 2, 0.7, 0.3)
    res = solve(WeightTensor(c, np.full(15, 0.5)), 2, 2)
    assert not res.unique
    assert len(res.argmax_classes) == space_size(6, 2, 2).class_size == 45
    assert not recovery_success(res, class_at(6, 2, 2, 0))


def test_matches_naive_rescan():
    c = ModelConfig(6, 2, 2, 2, 0.7, 0.3)
    truth = Hypothesis.from_communities(6, [[0, 3], [1, 5]])
    w = sample_weights(c, truth, seed=11)
    naive = naive_scores(w, 2, 2)
    best = max(s for s, _ in naive)
    res = solve(w, 2, 2)
    assert res.best_score == best
    assert [y.labels for y in res.argmax_classes] == [y.labels for s, y in naive if s == best]


@pytest.mark.parametrize("family", ["bernoulli", "beta"])
def test_parallel_and_chunking_do_not_matter(family):
    c = ModelConfig(10, 2, 3, 2, 0.6, 0.4, family=family, precision=3.0 if family == "beta" else None)
    truth = class_at(10, 2, 3, 77)
    w = sample_weights(c, truth, seed=3)
    serial = solve(w, 2, 3)
    for jobs, chunk in [(1, 7), (4, 100), (8, 1000)]:
        assert solve(w, 2, 3, jobs=jobs, chunk_size=chunk) == serial


def test_minimize_sense():
    c = ModelConfig(8, 2, 3, 2, 0.0, 1.0, family="point_mass")
    truth = class_at(8, 2, 3, 40)
    res = solve(sample_weights(c, truth, seed=0), 2, 3, sense="minimize")
    assert res.best_score == 0.0 and recovery_success(res, truth)


def test_relabel_invariance_exhaustive():
    c = ModelConfig(7, 3, 2, 2, 0.6, 0.2)
    w = sample_weights(c, class_at(7, 3, 2, 0), seed=2)
    for y in enumerate_classes(7, 3, 2):
        base = score(w, y)
        assert all(score(w, y.relabel(p)) == base for p in permutations(range(3)))


def test_bernoulli_scores_are_integral():
    c = ModelConfig(8, 2, 3, 3, 0.5, 0.4)
    w = sample_weights(c, class_at(8, 2, 3, 0), seed=9)
    res = solve(w, 2, 3)
    assert float(res.best_score).is_integer()


def test_recovery_success_cases():
    truth = Hypothesis((0, 0, 1, 1), 1, 2)
    c = ModelConfig(4, 1, 2, 2, 1.0, 0.0)
    res = solve(sample_weights(c, truth, seed=0), 1, 2)
    assert recovery_success(res, truth)
    assert not recovery_success(res, Hypothesis((0, 1, 0, 1), 1, 2))


def test_guard():
    c = ModelConfig(12, 2, 4, 2, 0.7, 0.3)
    w = WeightTensor(c, np.zeros(66))
    with pytest.raises(EnumerationGuardError):
        solve(w, 2, 4, cap=1000)


def test_decompose_examples(tiny_config, tiny_truth):
    w = sample_weights(tiny_config, tiny_truth, seed=4)
    same = decompose(w, tiny_config, tiny_truth, tiny_truth)
    assert same.noise == 0.0 and same.signal == 0.0
    y = Hypothesis.from_communities(4, [[0, 2]])
    dec = decompose(w, tiny_config, y, tiny_truth)
    assert dec.signal == pytest.approx(-0.5, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_decomposition_identity(seed):
    c = ModelConfig(8, 2, 3, 3, 0.65, 0.25, family="beta", precision=2.5)
    truth = class_at(8, 2, 3, seed)
    w = sample_weights(c, truth, seed=seed)
    for y in list(enumerate_classes(8, 2, 3))[::17]:
        dec = decompose(w, c, y, truth)
        assert abs(dec.noise + dec.signal - (score(w, y) - score(w, truth))) <= 1e-12
