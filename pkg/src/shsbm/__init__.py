"""Exact community recovery in m-uniform sub-hypergraph stochastic block models."""

from .model import (
    Hypothesis,
    ModelConfig,
    WeightDistribution,
    WeightTensor,
    expected_tensor,
    membership_indicator,
    sample_weights,
    uniform_hypothesis,
)

__version__ = "0.1.0"
