"""Exact maximum-likelihood recovery by exhaustive search over tensor classes."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .combinatorics import DEFAULT_CLASS_CAP, class_at, disagreement, space_size, within_rank_table
from .combinatorics.hypotheses import cached_rank_table
from .errors import ConfigMismatchError, EnumerationGuardError
from .model import Hypothesis, ModelConfig, WeightTensor, expected_tensor

CHUNK_SIZE = 1 << 15
# spaces up to this many classes keep their full rank table in memory
CACHE_LIMIT = 200_000


@dataclass(frozen=True)
class MleResult:
    best_score: float
    argmax_classes: tuple[Hypothesis, ...]
    unique: bool
    classes_evaluated: int
    sense: str = "maximize"

    def to_dict(self) -> dict:
        return {
            "best_score": self.best_score,
            "argmax_count": len(self.argmax_classes),
            "unique": self.unique,
            "classes_evaluated": self.classes_evaluated,
            "sense": self.sense,
            "hypothesis": list(self.argmax_classes[0].labels),
        }


def _row_scores(values: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # rows are sorted so that every class is summed in the same order wherever it is scored
    return values[np.sort(rows, axis=-1)].sum(axis=-1)


def _check_shape(weights: WeightTensor, y: Hypothesis) -> None:
    if y.n != weights.n:
        raise ConfigMismatchError(f"hypothesis has {y.n} nodes, weights have {weights.n}")


def score(weights: WeightTensor, y: Hypothesis) -> float:
    """Total weight on the within-community m-subsets of ``y``."""
    _check_shape(weights, y)
    return float(_row_scores(weights.values, y.within_ranks(weights.m)[None, :])[0])


def _check_sense(sense: str) -> int:
    if sense not in ("maximize", "minimize"):
        raise ValueError(f"sense must be 'maximize' or 'minimize', got {sense!r}")
    return 1 if sense == "maximize" else -1


def _guard(n: int, r: int, k: int, cap: int | None) -> int:
    size = space_size(n, r, k).class_size
    cap = DEFAULT_CLASS_CAP if cap is None else cap
    if size > cap:
        raise EnumerationGuardError(f"{size} tensor classes exceeds the enumeration cap of {cap}")
    return size


def class_scores(weights: WeightTensor, r: int, k: int, cap: int | None = None) -> np.ndarray:
    """Objective value of every tensor class, in enumeration order."""
    size = _guard(weights.n, r, k, cap)
    if size <= CACHE_LIMIT:
        return _row_scores(weights.values, cached_rank_table(weights.n, r, k, weights.m))
    return np.concatenate([
        _row_scores(weights.values, within_rank_table(weights.n, r, k, weights.m, start, start + CHUNK_SIZE))
        for start in range(0, size, CHUNK_SIZE)
    ])


def _chunk_best(args):
    values, n, r, k, m, start, stop, sign = args
    if stop - start == space_size(n, r, k).class_size and stop - start <= CACHE_LIMIT:
        table = cached_rank_table(n, r, k, m)
    else:
        table = within_rank_table(n, r, k, m, start, stop)
    s = sign * _row_scores(values, table)
    best = s.max()
    return float(best), (np.flatnonzero(s == best) + start).tolist()


def _merge(parts):
    best = -math.inf
    ties: list[int] = []
    for value, idx in parts:
        if value > best:
            best, ties = value, list(idx)
        elif value == best:
            ties.extend(idx)
    return best, sorted(ties)


def solve(
    weights: WeightTensor,
    r: int,
    k: int,
    sense: str = "maximize",
    jobs: int = 1,
    cap: int | None = None,
    chunk_size: int = CHUNK_SIZE,
) -> MleResult:
    """Exhaustive maximum- (or minimum-) weight search over all tensor classes.

    The class space is cut into contiguous index ranges; each range reports its
    best value and tie set, and the merge keeps every class attaining the
    global optimum. The result does not depend on ``jobs`` or ``chunk_size``.
    """
    sign = _check_sense(sense)
    size = _guard(weights.n, r, k, cap)
    bounds = [(s, min(s + chunk_size, size)) for s in range(0, size, chunk_size)]
    tasks = [(weights.values, weights.n, r, k, weights.m, a, b, sign) for a, b in bounds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            parts = list(pool.map(_chunk_best, tasks))
    else:
        parts = [_chunk_best(t) for t in tasks]
    best, ties = _merge(parts)
    return MleResult(
        best_score=sign * best,
        argmax_classes=tuple(class_at(weights.n, r, k, i) for i in ties),
        unique=len(ties) == 1,
        classes_evaluated=size,
        sense=sense,
    )


def result_from_scores(scores: np.ndarray, n: int, r: int, k: int, sense: str = "maximize") -> MleResult:
    sign = _check_sense(sense)
    s = sign * scores
    best = s.max()
    ties = np.flatnonzero(s == best).tolist()
    return MleResult(
        best_score=float(sign * best),
        argmax_classes=tuple(class_at(n, r, k, i) for i in ties),
        unique=len(ties) == 1,
        classes_evaluated=int(scores.size),
        sense=sense,
    )


def recovery_success(result: MleResult, y_star: Hypothesis) -> bool:
    """Strict dominance: a single optimal class, and it is the planted one."""
    return result.unique and result.argmax_classes[0].same_class(y_star)


@dataclass(frozen=True)
class NoiseSignalDecomposition:
    noise: float
    signal: float


def decompose(weights: WeightTensor, config: ModelConfig, y: Hypothesis, y_star: Hypothesis) -> NoiseSignalDecomposition:
    """Split <A, Y> - <A, Y*> into <A - EA, Y - Y*> and <EA, Y - Y*>.

    The expectation is taken under the planted labeling. The signal term is
    cross-checked against -(p - q) d.
    """
    _check_shape(weights, y)
    _check_shape(weights, y_star)
    mean = expected_tensor(config, y_star).values
    diff = y.indicator(config.m).astype(np.float64) - y_star.indicator(config.m)
    noise = float(np.dot(weights.values - mean, diff))
    signal = float(np.dot(mean, diff))
    d = disagreement(y, y_star, config.m).d
    if abs(signal + (config.p - config.q) * d) > 1e-12 * max(1.0, d):
        raise AssertionError(f"signal {signal} differs from -(p-q)d = {-(config.p - config.q) * d}")
    return NoiseSignalDecomposition(noise=noise, signal=signal)
