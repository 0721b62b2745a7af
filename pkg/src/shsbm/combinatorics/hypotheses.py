"""Counting, enumeration and disagreement statistics over the hypothesis space."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import TYPE_CHECKING, Iterator

import numpy as np

from ..errors import EnumerationGuardError, InvalidConfigError, InvalidHypothesisError
from .. import model as _model

if TYPE_CHECKING:
    from ..model import Hypothesis

from .counting import binom, rank_array, subset_unrank

DEFAULT_CLASS_CAP = 10**7


@dataclass(frozen=True)
class HypothesisSpace:
    n: int
    r: int
    k: int
    labeled_size: int
    class_size: int

    @property
    def log_labeled_size(self) -> float:
        return math.log(self.labeled_size)


def _check_shape(n: int, r: int, k: int) -> None:
    if n < 1 or r < 1 or k < 1:
        raise InvalidConfigError("need n, r, k >= 1")
    if r * k > n:
        raise InvalidConfigError(f"r*k = {r * k} exceeds n = {n}")


def space_size(n: int, r: int, k: int) -> HypothesisSpace:
    _check_shape(n, r, k)
    labeled = math.factorial(n) // (math.factorial(n - r * k) * math.factorial(k) ** r)
    return HypothesisSpace(n, r, k, labeled, labeled // math.factorial(r))


def log_space_size(n: int, r: int, k: int) -> float:
    """ln |Y| through log-gamma, without forming the big integer."""
    _check_shape(n, r, k)
    return math.lgamma(n + 1) - math.lgamma(n - r * k + 1) - r * math.lgamma(k + 1)


def stirling_log_lower_bound(n: int, r: int, k: int) -> float:
    """Lower estimate of ln |Y| from sqrt(x)(x/e)^x <= x! <= e sqrt(x)(x/e)^x.

    The (n - rk)! factor is taken as exactly 1 when no node is isolated, since
    the two-sided bound does not hold at zero.
    """
    _check_shape(n, r, k)

    def log_lower(x):
        return 0.5 * math.log(x) + x * (math.log(x) - 1.0)

    def log_upper(x):
        return 1.0 + log_lower(x)

    iso = n - r * k
    value = log_lower(n) - r * log_upper(k)
    if iso > 0:
        value -= log_upper(iso)
    return value


def stirling_leading_term(n: int, r: int, k: int) -> float:
    """(n - rk) ln(n / (n - rk)) + rk ln(n / k), the leading order of ln |Y|."""
    iso = n - r * k
    head = iso * math.log(n / iso) if iso > 0 else 0.0
    return head + r * k * math.log(n / k)


# ---------------------------------------------------------------------------
# tensor-class enumeration
#
# A class is encoded by mixed-radix digits: digit 0 ranks the set of r*k
# non-isolated nodes among all C(n, rk) subsets; digit j ranks, among the
# C(rk - (j-1)k - 1, k - 1) choices, the companions of the smallest node still
# unassigned. Communities therefore come out ordered by smallest member, which
# is the canonical labeling.


def class_radices(n: int, r: int, k: int) -> tuple[int, ...]:
    _check_shape(n, r, k)
    rk = r * k
    return (binom(n, rk),) + tuple(binom(rk - j * k - 1, k - 1) for j in range(r))


def _digits_of(index: int, radices: tuple[int, ...]) -> list[int]:
    digits = [0] * len(radices)
    for pos in range(len(radices) - 1, -1, -1):
        index, digits[pos] = divmod(index, radices[pos])
    return digits


def _members_from_digits(n: int, r: int, k: int, digits: list[int]) -> list[tuple[int, ...]]:
    support = subset_unrank(digits[0], n, r * k)
    pool = list(support)
    blocks = []
    for j in range(r):
        head = pool[0]
        rest = pool[1:]
        pick = subset_unrank(digits[j + 1], len(rest), k - 1) if k > 1 else ()
        chosen = [head] + [rest[i] for i in pick]
        blocks.append(tuple(chosen))
        taken = set(chosen)
        pool = [v for v in pool if v not in taken]
    return blocks


def class_at(n: int, r: int, k: int, index: int) -> Hypothesis:
    space = space_size(n, r, k)
    if not 0 <= index < space.class_size:
        raise IndexError(f"class index {index} outside [0, {space.class_size})")
    return _model.Hypothesis.from_communities(n, _members_from_digits(n, r, k, _digits_of(index, class_radices(n, r, k))))


def class_index(y: Hypothesis) -> int:
    """Inverse of :func:`class_at` for the class containing ``y``."""
    from .counting import subset_rank

    c = y.canonical()
    support = sorted(i for i, v in enumerate(c.labels) if v < c.r)
    digits = [subset_rank(support, c.n, c.r * c.k)]
    pool = support
    for members in c.communities:
        rest = pool[1:]
        pos = {v: i for i, v in enumerate(rest)}
        digits.append(subset_rank([pos[v] for v in members[1:]], len(rest), c.k - 1) if c.k > 1 else 0)
        taken = set(members)
        pool = [v for v in pool if v not in taken]
    index = 0
    for d, radix in zip(digits, class_radices(c.n, c.r, c.k)):
        index = index * radix + d
    return index


def _guard(class_size: int, cap: int | None) -> None:
    cap = DEFAULT_CLASS_CAP if cap is None else cap
    if class_size > cap:
        raise EnumerationGuardError(f"{class_size} tensor classes exceeds the enumeration cap of {cap}")


def iter_class_members(n: int, r: int, k: int, start: int = 0, stop: int | None = None) -> Iterator[list[tuple[int, ...]]]:
    """Community member lists for classes ``start..stop-1`` in enumeration order."""
    radices = class_radices(n, r, k)
    total = math.prod(radices)
    stop = total if stop is None else min(stop, total)
    if start >= stop:
        return
    digits = _digits_of(start, radices)
    for _ in range(start, stop):
        yield _members_from_digits(n, r, k, digits)
        pos = len(radices) - 1
        while pos >= 0:
            digits[pos] += 1
            if digits[pos] < radices[pos]:
                break
            digits[pos] = 0
            pos -= 1


def enumerate_classes(
    n: int, r: int, k: int, start: int = 0, stop: int | None = None, cap: int | None = None
) -> Iterator[Hypothesis]:
    """One canonical representative per tensor class, restricted to an index range.

    Disjoint ranges yield disjoint sets of classes, so the space can be split
    into contiguous chunks for parallel work.
    """
    space = space_size(n, r, k)
    _guard(space.class_size, cap)
    for members in iter_class_members(n, r, k, start, stop):
        yield _model.Hypothesis.from_communities(n, members)


@lru_cache(maxsize=16)
def _position_patterns(k: int, m: int) -> np.ndarray:
    return np.array(list(combinations(range(k), m)), dtype=np.int64).reshape(-1, m)


def within_rank_table(n: int, r: int, k: int, m: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Ranks of the within-community m-subsets for a range of classes.

    Row ``i`` holds the r*C(k, m) subset ranks of class ``start + i``.
    """
    members = np.array(list(iter_class_members(n, r, k, start, stop)), dtype=np.int64).reshape(-1, r, k)
    pat = _position_patterns(k, m)
    subs = members[:, :, pat]  # (count, r, C(k,m), m)
    return rank_array(subs, n, m).reshape(members.shape[0], -1)


@lru_cache(maxsize=8)
def cached_rank_table(n: int, r: int, k: int, m: int) -> np.ndarray:
    table = within_rank_table(n, r, k, m)
    table.setflags(write=False)
    return table


# ---------------------------------------------------------------------------
# disagreement statistics


@dataclass(frozen=True)
class DisagreementStats:
    d: int
    d_pair: int
    symmetric_difference: int

    @property
    def t(self) -> int:
        return self.d


def _same_shape(y: Hypothesis, y_star: Hypothesis) -> None:
    if (y.n, y.r, y.k) != (y_star.n, y_star.r, y_star.k):
        raise InvalidHypothesisError(
            f"hypotheses differ in shape: (n={y.n}, r={y.r}, k={y.k}) vs (n={y_star.n}, r={y_star.r}, k={y_star.k})"
        )


def _one_sided(y: Hypothesis, y_star: Hypothesis, m: int) -> tuple[int, int]:
    ours = set(y.within_subsets(m))
    truth = set(y_star.within_subsets(m))
    return len(truth - ours), len(ours - truth)


def disagreement(y: Hypothesis, y_star: Hypothesis, m: int) -> DisagreementStats:
    """Count m-subsets inside a true community but not inside a community of ``y``.

    With equal community sizes the reverse count is the same number, so the
    symmetric difference is exactly twice ``d``; a mismatch raises.
    """
    _same_shape(y, y_star)
    d, reverse = _one_sided(y, y_star, m)
    if d != reverse:
        raise AssertionError(f"one-sided disagreement counts differ: {d} vs {reverse}")
    d_pair, reverse_pair = _one_sided(y, y_star, 2)
    if d_pair != reverse_pair:
        raise AssertionError(f"one-sided pair counts differ: {d_pair} vs {reverse_pair}")
    return DisagreementStats(d=d, d_pair=d_pair, symmetric_difference=d + reverse)


@dataclass(frozen=True)
class MisclassificationStats:
    M: tuple[int, ...]
    N1: tuple[int, ...]
    N2: tuple[int, ...]
    reordered_partition: tuple[tuple[int, ...], ...]

    @property
    def d_pair(self) -> int:
        return sum(self.N1) + sum(self.N2)


def misclassification_stats(y: Hypothesis, y_star: Hypothesis) -> MisclassificationStats:
    """Per-community misclassification counts after aligning the communities of ``y``.

    A community of ``y`` holding more than k/2 nodes of true community i takes
    slot i; the remaining communities fill the free slots in increasing order of
    their index in ``y``. The isolated set always takes slot r.
    """
    _same_shape(y, y_star)
    r, k = y.r, y.k
    truth = [set(c) for c in y_star.communities]
    ours = [set(c) for c in y.communities]
    slot_of: dict[int, int] = {}
    for i, t in enumerate(truth):
        for j, c in enumerate(ours):
            if 2 * len(c & t) > k:
                slot_of[j] = i
    free_slots = [i for i in range(r) if i not in slot_of.values()]
    unmatched = [j for j in range(r) if j not in slot_of]
    for j, i in zip(unmatched, free_slots):
        slot_of[j] = i
    tilde: list[set[int]] = [set() for _ in range(r + 1)]
    for j, i in slot_of.items():
        tilde[i] = ours[j]
    tilde[r] = set(y.isolated_nodes)

    M, N1, N2 = [], [], []
    for i, t in enumerate(truth):
        kept = len(t & tilde[i])
        misplaced = k - kept
        M.append(misplaced)
        N1.append(misplaced * kept)
        N2.append(binom(misplaced, 2) - sum(binom(len(t & tilde[j]), 2) for j in range(r) if j != i))
    return MisclassificationStats(
        M=tuple(M), N1=tuple(N1), N2=tuple(N2), reordered_partition=tuple(tuple(sorted(c)) for c in tilde)
    )


def class_disagreements(n: int, r: int, k: int, m: int, y_star: Hypothesis, cap: int | None = None) -> np.ndarray:
    """d for every tensor class, in enumeration order."""
    space = space_size(n, r, k)
    _guard(space.class_size, cap)
    if (y_star.n, y_star.r, y_star.k) != (n, r, k):
        raise InvalidHypothesisError("y_star does not match (n, r, k)")
    table = cached_rank_table(n, r, k, m)
    star = y_star.indicator(m)
    return table.shape[1] - star[table].sum(axis=1, dtype=np.int64)


def count_D_t(n: int, r: int, k: int, m: int, y_star: Hypothesis, cap: int | None = None) -> dict[int, int]:
    """Histogram t -> number of tensor classes with disagreement t."""
    d = class_disagreements(n, r, k, m, y_star, cap)
    return dict(sorted(Counter(int(v) for v in d).items()))
