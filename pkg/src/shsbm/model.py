"""Domain types for the m-uniform sub-hypergraph stochastic block model and its sampler.

Node ids are 0-based. A hypothesis labels each node with a community id in
``0..r-1`` or with ``r`` for an isolated node. Hyperedge weights are stored
densely, one value per m-subset of nodes, indexed by the lexicographic rank of
the sorted subset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .combinatorics.counting import all_subsets, binom, check_subset, rank_array
from .errors import (
    ConfigMismatchError,
    InvalidConfigError,
    InvalidHypothesisError,
)

FAMILIES = ("bernoulli", "beta", "point_mass")

# variance proxy of any distribution supported on an interval of length 1
BOUNDED_SUBGAUSSIAN_SQ = 0.25


@dataclass(frozen=True)
class WeightDistribution:
    """A hyperedge-weight law on [0, 1] with a known mean.

    ``beta`` is parametrised by mean and precision, with shape parameters
    ``mean * precision`` and ``(1 - mean) * precision``. ``sub_gaussian_sq`` uses
    the variance-proxy convention; it defaults to 1/4 for the random families
    and to 0 for a point mass.
    """

    family: str
    mean: float
    precision: float | None = None
    sub_gaussian_sq: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfigError(f"unknown weight family {self.family!r}; expected one of {FAMILIES}")
        if not 0.0 <= self.mean <= 1.0:
            raise InvalidConfigError(f"mean must lie in [0, 1], got {self.mean}")
        if self.family == "beta":
            if self.precision is None or not self.precision > 0:
                raise InvalidConfigError("beta family needs precision > 0")
            if not 0.0 < self.mean < 1.0:
                raise InvalidConfigError("beta family needs a mean strictly inside (0, 1)")
        if self.sub_gaussian_sq is None:
            default = 0.0 if self.family == "point_mass" else BOUNDED_SUBGAUSSIAN_SQ
            object.__setattr__(self, "sub_gaussian_sq", default)
        if not 0.0 <= self.sub_gaussian_sq <= BOUNDED_SUBGAUSSIAN_SQ:
            raise InvalidConfigError(f"sub_gaussian_sq must lie in [0, 1/4], got {self.sub_gaussian_sq}")

    @classmethod
    def bernoulli(cls, mean: float) -> "WeightDistribution":
        return cls("bernoulli", mean)

    @classmethod
    def beta_mean(cls, mean: float, precision: float) -> "WeightDistribution":
        return cls("beta", mean, precision=precision)

    @classmethod
    def point_mass(cls, mean: float) -> "WeightDistribution":
        return cls("point_mass", mean)

    @property
    def shape_params(self) -> tuple[float, float]:
        if self.family != "beta":
            raise AttributeError("shape parameters exist only for the beta family")
        return self.mean * self.precision, (1.0 - self.mean) * self.precision

    @property
    def variance(self) -> float:
        if self.family == "bernoulli":
            return self.mean * (1.0 - self.mean)
        if self.family == "beta":
            return self.mean * (1.0 - self.mean) / (self.precision + 1.0)
        return 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family == "bernoulli":
            return (rng.random(size) < self.mean).astype(np.float64)
        if self.family == "beta":
            a, b = self.shape_params
            return rng.beta(a, b, size)
        return np.full(size, self.mean, dtype=np.float64)

    def to_dict(self) -> dict:
        d = {"family": self.family, "mean": self.mean, "sub_gaussian_sq": self.sub_gaussian_sq}
        if self.precision is not None:
            d["precision"] = self.precision
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WeightDistribution":
        return cls(d["family"], float(d["mean"]), d.get("precision"), d.get("sub_gaussian_sq"))


@dataclass(frozen=True)
class ModelConfig:
    """Parameters (n, r, k, m, p, q) of one model instance plus its weight family."""

    n: int
    r: int
    k: int
    m: int
    p: float
    q: float
    family: str = "bernoulli"
    precision: float | None = None
    sigma_p_sq: float | None = None
    sigma_q_sq: float | None = None

    def __post_init__(self):
        for name in ("n", "r", "k", "m"):
            if int(getattr(self, name)) != getattr(self, name):
                raise InvalidConfigError(f"{name} must be an integer")
        if self.n < 1 or self.r < 1 or self.k < 2:
            raise InvalidConfigError("need n >= 1, r >= 1, k >= 2")
        if not 2 <= self.m <= self.k:
            raise InvalidConfigError(f"need 2 <= m <= k, got m={self.m}, k={self.k}")
        if self.r * self.k > self.n:
            raise InvalidConfigError(f"r*k = {self.r * self.k} exceeds n = {self.n}")
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise InvalidConfigError("p and q must lie in [0, 1]")
        if self.p == self.q:
            raise InvalidConfigError("p must differ from q")
        # builds and validates both laws
        self.dist_in
        self.dist_out

    @property
    def isolated(self) -> int:
        return self.n - self.r * self.k

    @property
    def num_subsets(self) -> int:
        return binom(self.n, self.m)

    @property
    def within_per_community(self) -> int:
        return binom(self.k, self.m)

    @cached_property
    def dist_in(self) -> WeightDistribution:
        return WeightDistribution(self.family, self.p, self.precision, self.sigma_p_sq)

    @cached_property
    def dist_out(self) -> WeightDistribution:
        return WeightDistribution(self.family, self.q, self.precision, self.sigma_q_sq)

    def to_dict(self) -> dict:
        d = {"n": self.n, "r": self.r, "k": self.k, "m": self.m, "p": self.p, "q": self.q, "family": self.family}
        for name in ("precision", "sigma_p_sq", "sigma_q_sq"):
            if getattr(self, name) is not None:
                d[name] = getattr(self, name)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        try:
            return cls(
                n=int(d["n"]), r=int(d["r"]), k=int(d["k"]), m=int(d["m"]),
                p=float(d["p"]), q=float(d["q"]),
                family=d.get("family", "bernoulli"),
                precision=d.get("precision"),
                sigma_p_sq=d.get("sigma_p_sq"),
                sigma_q_sq=d.get("sigma_q_sq"),
            )
        except KeyError as exc:
            raise InvalidConfigError(f"config is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Hypothesis:
    """A membership labeling with r communities of exactly k nodes each."""

    labels: tuple[int, ...]
    r: int
    k: int

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        object.__setattr__(self, "labels", labels)
        n = len(labels)
        if self.r < 1 or self.k < 1:
            raise InvalidHypothesisError("need r >= 1 and k >= 1")
        if self.r * self.k > n:
            raise InvalidHypothesisError(f"r*k = {self.r * self.k} exceeds n = {n}")
        counts = [0] * (self.r + 1)
        for v in labels:
            if not 0 <= v <= self.r:
                raise InvalidHypothesisError(f"label {v} outside 0..{self.r}")
            counts[v] += 1
        if any(c != self.k for c in counts[: self.r]):
            raise InvalidHypothesisError(f"community sizes {counts[: self.r]} differ from k = {self.k}")

    @classmethod
    def from_communities(cls, n: int, communities: Sequence[Sequence[int]]) -> "Hypothesis":
        if not communities:
            raise InvalidHypothesisError("need at least one community")
        r = len(communities)
        k = len(communities[0])
        labels = [r] * n
        for c, members in enumerate(communities):
            for i in members:
                if labels[i] != r:
                    raise InvalidHypothesisError(f"node {i} assigned twice")
                labels[i] = c
        return cls(tuple(labels), r, k)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def isolated_label(self) -> int:
        return self.r

    @cached_property
    def communities(self) -> tuple[tuple[int, ...], ...]:
        members = [[] for _ in range(self.r)]
        for i, v in enumerate(self.labels):
            if v < self.r:
                members[v].append(i)
        return tuple(tuple(c) for c in members)

    @property
    def isolated_nodes(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.labels) if v == self.r)

    def canonical(self) -> "Hypothesis":
        """Representative of the tensor class: communities ordered by smallest member."""
        order = sorted(range(self.r), key=lambda c: self.communities[c][0])
        relabel = {old: new for new, old in enumerate(order)}
        relabel[self.r] = self.r
        return Hypothesis(tuple(relabel[v] for v in self.labels), self.r, self.k)

    @cached_property
    def class_key(self) -> tuple[int, ...]:
        return self.canonical().labels

    def same_class(self, other: "Hypothesis") -> bool:
        return self.class_key == other.class_key

    def relabel(self, perm: Sequence[int]) -> "Hypothesis":
        """Apply a permutation of community ids; the isolated label is fixed."""
        mapping = list(perm) + [self.r]
        return Hypothesis(tuple(mapping[v] for v in self.labels), self.r, self.k)

    def within_subsets(self, m: int) -> Iterator[tuple[int, ...]]:
        for members in self.communities:
            yield from combinations(members, m)

    def within_ranks(self, m: int) -> np.ndarray:
        """Ranks of the r*C(k, m) within-community m-subsets."""
        subs = np.array([s for s in self.within_subsets(m)], dtype=np.int64).reshape(-1, m)
        return rank_array(subs, self.n, m)

    def indicator(self, m: int) -> np.ndarray:
        """Dense membership indicator over all C(n, m) subsets."""
        out = np.zeros(binom(self.n, m), dtype=np.int8)
        out[self.within_ranks(m)] = 1
        return out

    def check_config(self, config: ModelConfig) -> None:
        if (self.n, self.r, self.k) != (config.n, config.r, config.k):
            raise ConfigMismatchError(
                f"hypothesis shape (n={self.n}, r={self.r}, k={self.k}) does not match config "
                f"(n={config.n}, r={config.r}, k={config.k})"
            )


def membership_indicator(y: Hypothesis, subset: Sequence[int]) -> int:
    """1 iff every node of ``subset`` carries the same non-isolated label."""
    s = check_subset(subset, y.n, len(subset))
    first = y.labels[s[0]]
    if first == y.r:
        return 0
    return int(all(y.labels[i] == first for i in s[1:]))


@dataclass(frozen=True)
class WeightTensor:
    config: ModelConfig
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (self.config.num_subsets,):
            raise ConfigMismatchError(f"expected {self.config.num_subsets} weights, got shape {vals.shape}")
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0 or np.isnan(vals).any()):
            raise ConfigMismatchError("weights must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def m(self) -> int:
        return self.config.m

    def __getitem__(self, subset: Sequence[int]) -> float:
        from .combinatorics.counting import subset_rank

        return float(self.values[subset_rank(subset, self.n, self.m)])

    def subsets(self) -> np.ndarray:
        return all_subsets(self.n, self.m)

    def __eq__(self, other):
        if not isinstance(other, WeightTensor):
            return NotImplemented
        return self.config == other.config and np.array_equal(self.values, other.values)

    __hash__ = None


def _check_dists(config: ModelConfig, dist_in: WeightDistribution, dist_out: WeightDistribution) -> None:
    if dist_in.mean != config.p or dist_out.mean != config.q:
        raise ConfigMismatchError(
            f"distribution means ({dist_in.mean}, {dist_out.mean}) do not match config (p={config.p}, q={config.q})"
        )


def sample_weights(
    config: ModelConfig,
    y_star: Hypothesis,
    dist_in: WeightDistribution | None = None,
    dist_out: WeightDistribution | None = None,
    seed: int | np.random.Generator = 0,
) -> WeightTensor:
    """Draw every hyperedge weight independently given the planted labeling.

    An integer seed feeds ``numpy.random.default_rng``; the full within-law draw
    is taken before the full cross-law draw, so a given seed reproduces the
    tensor exactly.
    """
    dist_in = config.dist_in if dist_in is None else dist_in
    dist_out = config.dist_out if dist_out is None else dist_out
    _check_dists(config, dist_in, dist_out)
    y_star.check_config(config)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    size = config.num_subsets
    inside = dist_in.sample(rng, size)
    outside = dist_out.sample(rng, size)
    mask = y_star.indicator(config.m).astype(bool)
    return WeightTensor(config, np.where(mask, inside, outside))


def expected_tensor(config: ModelConfig, y: Hypothesis) -> WeightTensor:
    y.check_config(config)
    mask = y.indicator(config.m).astype(bool)
    return WeightTensor(config, np.where(mask, config.p, config.q))


def uniform_hypothesis(n: int, r: int, k: int, rng: np.random.Generator) -> Hypothesis:
    """Uniform draw from the labeled hypothesis set (random permutation, cut into blocks)."""
    perm = rng.permutation(n)
    labels = [r] * n
    for c in range(r):
        for i in perm[c * k:(c + 1) * k]:
            labels[int(i)] = c
    return Hypothesis(tuple(labels), r, k)
