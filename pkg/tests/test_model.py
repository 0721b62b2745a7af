import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shsbm.combinatorics import all_subsets
from shsbm.errors import ConfigMismatchError, InvalidConfigError, InvalidHypothesisError, InvalidSubsetError
from shsbm.model import (
    Hypothesis,
    ModelConfig,
    WeightDistribution,
    WeightTensor,
    expected_tensor,
    membership_indicator,
    sample_weights,
    uniform_hypothesis,
)


def test_membership_indicator_examples():
    y = Hypothesis((0, 0, 1, 1), 2, 2)
    assert membership_indicator(y, (0, 1)) == 1
    assert membership_indicator(y, (0, 2)) == 0
    isolated = Hypothesis((0, 0, 1, 1), 1, 2)
    assert membership_indicator(isolated, (2, 3)) == 0


@pytest.mark.parametrize("subset", [(0, 0), (0, 4), (-1, 2), (2, 1)])
def test_membership_indicator_rejects_bad_subsets(subset):
    y = Hypothesis((0, 0, 1, 1), 2, 2)
    with pytest.raises(InvalidSubsetError):
        membership_indicator(y, subset)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=4, r=1, k=2, m=3, p=0.8, q=0.3),  # m > k
        dict(n=3, r=2, k=2, m=2, p=0.8, q=0.3),  # rk > n
        dict(n=4, r=1, k=2, m=2, p=0.5, q=0.5),
        dict(n=4, r=1, k=2, m=2, p=1.2, q=0.3),
        dict(n=4, r=1, k=1, m=2, p=0.8, q=0.3),
    ],
)
def test_config_invariants(kwargs):
    with pytest.raises(InvalidConfigError):
        ModelConfig(**kwargs)


def test_config_derived_quantities():
    c = ModelConfig(10, 2, 3, 2, 0.7, 0.1)
    assert c.isolated == 4
    assert c.within_per_community == 3
    assert c.num_subsets == 45
    assert ModelConfig.from_dict(c.to_dict()) == c


def test_hypothesis_validation():
    with pytest.raises(InvalidHypothesisError):
        Hypothesis((0, 0, 0, 1), 1, 2)
    with pytest.raises(InvalidHypothesisError):
        Hypothesis((0, 0, 2, 2), 1, 2)
    y = Hypothesis((1, 2, 0, 1, 0, 2), 2, 2)
    assert y.communities == ((2, 4), (0, 3))
    assert y.isolated_nodes == (1, 5)
    assert y.canonical().labels == (0, 2, 1, 0, 1, 2)


def test_weight_families():
    b = WeightDistribution.beta_mean(0.3, 5)
    assert b.shape_params == pytest.approx((1.5, 3.5))
    assert b.variance == pytest.approx(0.035)
    assert WeightDistribution.point_mass(0.4).sub_gaussian_sq == 0.0
    assert WeightDistribution.bernoulli(0.4).sub_gaussian_sq == 0.25
    with pytest.raises(InvalidConfigError):
        WeightDistribution("bernoulli", 0.4, sub_gaussian_sq=0.3)
    with pytest.raises(InvalidConfigError):
        WeightDistribution.beta_mean(0.0, 5)


@pytest.mark.parametrize(
    "law", [WeightDistribution.bernoulli(0.3), WeightDistribution.beta_mean(0.3, 2.0), WeightDistribution.point_mass(0.3)]
)
def test_samples_lie_in_unit_interval_with_right_mean(law):
    x = law.sample(np.random.default_rng(0), 200_000)
    assert x.min() >= 0 and x.max() <= 1
    assert abs(x.mean() - law.mean) <= 4 * np.sqrt(law.variance / x.size) + 1e-12


def test_point_masses_reproduce_indicator(tiny_truth):
    c = ModelConfig(4, 1, 2, 2, 1.0, 0.0, family="point_mass")
    w = sample_weights(c, tiny_truth, seed=1)
    np.testing.assert_array_equal(w.values, tiny_truth.indicator(2))
    assert w == expected_tensor(c, tiny_truth)


def test_zero_mean_bernoulli_entries_are_zero(tiny_truth):
    c = ModelConfig(4, 1, 2, 2, 0.0, 0.6)
    for seed in range(50):
        assert sample_weights(c, tiny_truth, seed=seed)[(0, 1)] == 0.0


def test_sampler_is_deterministic(tiny_config, tiny_truth):
    a = sample_weights(tiny_config, tiny_truth, seed=12345)
    b = sample_weights(tiny_config, tiny_truth, seed=12345)
    assert a == b
    assert a.values.tobytes() == b.values.tobytes()


def test_sampler_mean_mismatch(tiny_config, tiny_truth):
    with pytest.raises(ConfigMismatchError):
        sample_weights(tiny_config, tiny_truth, WeightDistribution.bernoulli(0.7), WeightDistribution.bernoulli(0.3))


def test_within_entry_mean_over_resamples(tiny_config, tiny_truth):
    draws = np.array([sample_weights(tiny_config, tiny_truth, seed=s)[(0, 1)] for s in range(100_000)])
    assert abs(draws.mean() - 0.8) <= 0.01


def test_expected_tensor_entries(tiny_config, tiny_truth):
    e = expected_tensor(tiny_config, tiny_truth)
    subsets = [tuple(s) for s in all_subsets(4, 2).tolist()]
    assert {s: e[s] for s in subsets} == {s: (0.8 if s == (0, 1) else 0.3) for s in subsets}
    assert e.values.sum() == pytest.approx(2.3, abs=1e-12)


def test_weight_tensor_validation(tiny_config):
    with pytest.raises(ConfigMismatchError):
        WeightTensor(tiny_config, np.zeros(5))
    with pytest.raises(ConfigMismatchError):
        WeightTensor(tiny_config, np.full(6, 1.5))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(4, 9))
def test_uniform_hypothesis_is_valid(seed, n):
    y = uniform_hypothesis(n, 2, 2, np.random.default_rng(seed))
    assert sorted(y.labels).count(0) == 2 and sorted(y.labels).count(1) == 2
