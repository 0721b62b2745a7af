"""Binomial coefficients and lexicographic ranking of m-subsets."""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from ..errors import InvalidSubsetError


def binom(a: int, b: int) -> int:
    """Exact C(a, b); zero outside 0 <= b <= a."""
    if a < 0:
        raise ValueError(f"binom: a must be non-negative, got {a}")
    if b < 0 or b > a:
        return 0
    return math.comb(a, b)


def log_binom(a: int, b: int) -> float:
    """Natural log of C(a, b) via log-gamma; -inf when the coefficient is zero."""
    if a < 0:
        raise ValueError(f"log_binom: a must be non-negative, got {a}")
    if b < 0 or b > a:
        return -math.inf
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def check_subset(subset: Sequence[int], n: int, m: int) -> tuple[int, ...]:
    s = tuple(int(i) for i in subset)
    if len(s) != m:
        raise InvalidSubsetError(f"expected {m} node ids, got {len(s)}")
    if any(i < 0 or i >= n for i in s):
        raise InvalidSubsetError(f"node id out of range [0, {n}): {s}")
    if any(s[j] >= s[j + 1] for j in range(m - 1)):
        if len(set(s)) != m:
            raise InvalidSubsetError(f"duplicate node id in {s}")
        raise InvalidSubsetError(f"subset must be sorted ascending: {s}")
    return s


def subset_rank(subset: Sequence[int], n: int, m: int) -> int:
    """Lexicographic rank of a sorted m-subset of range(n)."""
    s = check_subset(subset, n, m)
    # complement of the colex rank of the reflected subset
    return binom(n, m) - 1 - sum(binom(n - 1 - c, m - i) for i, c in enumerate(s))


def subset_unrank(rank: int, n: int, m: int) -> tuple[int, ...]:
    total = binom(n, m)
    if not 0 <= rank < total:
        raise InvalidSubsetError(f"rank {rank} outside [0, {total})")
    out = []
    x = rank
    lo = 0
    for i in range(m):
        c = lo
        # skip all subsets whose i-th element is c
        while True:
            block = binom(n - 1 - c, m - 1 - i)
            if x < block:
                break
            x -= block
            c += 1
        out.append(c)
        lo = c + 1
    return tuple(out)


@lru_cache(maxsize=64)
def _rank_lookup(n: int, m: int) -> np.ndarray:
    # dense n^m lookup is only built for the small tensors the rest of the package handles
    table = np.full((n,) * m, -1, dtype=np.int64)
    for r, s in enumerate(combinations(range(n), m)):
        table[s] = r
    table.setflags(write=False)
    return table


def rank_array(subsets: np.ndarray, n: int, m: int) -> np.ndarray:
    """Vectorised ranks for an (..., m) array of sorted subsets."""
    subsets = np.asarray(subsets, dtype=np.int64)
    if n ** m <= 4_000_000:
        return _rank_lookup(n, m)[tuple(np.moveaxis(subsets, -1, 0))]
    total = binom(n, m)
    acc = np.zeros(subsets.shape[:-1], dtype=np.int64)
    for i in range(m):
        col = n - 1 - subsets[..., i]
        acc += np.array([binom(int(c), m - i) for c in col.ravel()], dtype=np.int64).reshape(col.shape)
    return total - 1 - acc


@lru_cache(maxsize=64)
def all_subsets(n: int, m: int) -> np.ndarray:
    """All m-subsets of range(n) in lexicographic order, shape (C(n,m), m)."""
    arr = np.array(list(combinations(range(n), m)), dtype=np.int64).reshape(-1, m)
    arr.setflags(write=False)
    return arr
