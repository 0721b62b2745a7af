"""Brute-force and Monte Carlo checks of the bounds and counting identities.

Every check returns a :class:`LemmaReport` whose ``max_violation`` is the
largest amount by which the checked inequality (or identity, net of its
tolerance) failed; a report passes when that value is <= 0.

Pair checks fix the planted hypothesis to the first canonical class. Any other
planted hypothesis is the image of that one under a node permutation, which
permutes the hypothesis space and leaves every statistic's distribution
unchanged, so one planted hypothesis per shape is exhaustive.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations, product
from typing import Iterable, Iterator

import numpy as np
from scipy import stats

from .combinatorics import (
    binom,
    class_at,
    class_disagreements,
    count_D_t,
    disagreement,
    enumerate_classes,
    log_space_size,
    misclassification_stats,
    space_size,
    stirling_log_lower_bound,
)
from .combinatorics.hypotheses import cached_rank_table
from .errors import EnumerationGuardError, ShsbmError, UnsupportedDivergenceError
from .model import Hypothesis, ModelConfig, WeightDistribution, expected_tensor
from .thresholds import bernoulli_d, mi_upper_bound, signal_ratio_max, signal_ratio_min

IDENTITY_TOL = 1e-12
LEMMA_IDS = (
    "signal_identity",
    "d_range",
    "pair_relation",
    "D_t_bound",
    "labeled_count_bound",
    "decomposition",
    "kl_chain",
    "bhatia_davis",
    "count_formula",
)
SIGNAL_PQ_GRID = ((0.8, 0.3), (0.5, 0.1), (0.2, 0.7))
MI_OUTCOME_CAP = 20
MI_HYPOTHESIS_CAP = 10**4


@dataclass
class LemmaReport:
    lemma_id: str
    instances_checked: int = 0
    max_violation: float = -math.inf
    details: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_violation <= 0

    def record(self, violation: float, case: dict, keep: int = 5) -> None:
        self.instances_checked += 1
        if violation > self.max_violation:
            self.max_violation = violation
        if violation > 0 or len(self.details) < keep:
            self.details.append({"violation": violation, **case})
        if len(self.details) > keep:
            # keep the worst cases
            self.details.sort(key=lambda c: c["violation"], reverse=True)
            del self.details[keep:]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        if self.instances_checked == 0:
            d["max_violation"] = None
        return d


def small_shapes(max_n: int, r_max: int = 2, k_max: int = 4) -> Iterator[tuple[int, int, int, int]]:
    """Every (n, r, k, m) with n <= max_n, r <= r_max, 2 <= m <= k <= k_max and rk <= n."""
    for n in range(2, max_n + 1):
        for r in range(1, r_max + 1):
            for k in range(2, k_max + 1):
                if r * k > n:
                    continue
                for m in range(2, k + 1):
                    yield n, r, k, m


def _planted(n: int, r: int, k: int) -> Hypothesis:
    return class_at(n, r, k, 0)


# ---------------------------------------------------------------------------
# exact mutual information


@dataclass(frozen=True)
class MIResult:
    exact_mi: float
    lemma2_bound: float
    slack: float
    log_space: float

    def to_dict(self) -> dict:
        return asdict(self)


def enumerate_labeled(n: int, r: int, k: int) -> Iterator[Hypothesis]:
    """All labeled hypotheses, by filtering every labeling in {0..r}^n."""
    for labels in product(range(r + 1), repeat=n):
        counts = [0] * (r + 1)
        for v in labels:
            counts[v] += 1
        if all(c == k for c in counts[:r]):
            yield Hypothesis(labels, r, k)


def _mi_terms(config: ModelConfig):
    ys = list(enumerate_labeled(config.n, config.r, config.k))
    ind = np.array([y.indicator(config.m) for y in ys], dtype=np.int64)
    return ys, ind


def exact_mi(config: ModelConfig, chunk_bits: int = 16) -> MIResult:
    """I(y*; A) by summing over every binary tensor and every labeled hypothesis.

    The prior on y* is uniform over labeled hypotheses; the result is in nats.
    """
    if config.family != "bernoulli":
        raise UnsupportedDivergenceError("exact mutual information is only enumerated for Bernoulli weights")
    N = config.num_subsets
    if N > MI_OUTCOME_CAP:
        raise EnumerationGuardError(f"C(n, m) = {N} exceeds the outcome cap of {MI_OUTCOME_CAP}")
    labeled = space_size(config.n, config.r, config.k).labeled_size
    if labeled > MI_HYPOTHESIS_CAP:
        raise EnumerationGuardError(f"|Y| = {labeled} exceeds the hypothesis cap of {MI_HYPOTHESIS_CAP}")
    ys, ind = _mi_terms(config)
    if len(ys) != labeled:
        raise AssertionError("labeled enumeration disagrees with the closed-form count")
    p, q = config.p, config.q
    inside = int(ind[0].sum())
    weight = 1.0 / len(ys)

    total = 0.0
    step = 1 << min(chunk_bits, N)
    shifts = np.arange(N, dtype=np.int64)
    for start in range(0, 1 << N, step):
        codes = np.arange(start, start + step, dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(np.int64)
        ones = bits.sum(axis=1, keepdims=True)
        hits = bits @ ind.T  # ones landing on within-community entries
        cond = (
            np.power(p, hits) * np.power(1.0 - p, inside - hits)
            * np.power(q, ones - hits) * np.power(1.0 - q, N - inside - ones + hits)
        )
        marg = cond.mean(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(cond > 0, cond * np.log(cond / marg), 0.0)
        total += weight * terms.sum()
    mi = max(total, 0.0)
    bound = mi_upper_bound(config)
    return MIResult(exact_mi=float(mi), lemma2_bound=bound, slack=float(bound - mi), log_space=math.log(labeled))


def _binary_entropy(x: float) -> float:
    return -sum(v * math.log(v) for v in (x, 1.0 - x) if v > 0)


def exact_mi_entropy_route(config: ModelConfig) -> float:
    """I = H(A) - H(A | y*), with H(A | y*) in closed form; used to cross-check :func:`exact_mi`."""
    ys, ind = _mi_terms(config)
    N = config.num_subsets
    inside = int(ind[0].sum())
    p, q = config.p, config.q
    codes = np.arange(1 << N, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(N)) & 1).astype(np.int64)
    ones = bits.sum(axis=1, keepdims=True)
    hits = bits @ ind.T
    marg = (
        np.power(p, hits) * np.power(1.0 - p, inside - hits)
        * np.power(q, ones - hits) * np.power(1.0 - q, N - inside - ones + hits)
    ).mean(axis=1)
    nz = marg[marg > 0]
    h_a = float(-(nz * np.log(nz)).sum())
    h_cond = inside * _binary_entropy(p) + (N - inside) * _binary_entropy(q)
    return h_a - h_cond


MI_GRID_VALUES = (0.2, 0.5, 0.8)


def mi_grid_configs(ns=(3, 4, 5), ks=(2, 3), m: int = 2, r: int = 1) -> Iterator[ModelConfig]:
    for n in ns:
        for k in ks:
            if r * k > n or m > k:
                continue
            for p in MI_GRID_VALUES:
                for q in MI_GRID_VALUES:
                    if p != q:
                        yield ModelConfig(n, r, k, m, p, q)


def check_lemma2_grid(max_n: int = 5) -> LemmaReport:
    report = LemmaReport("lemma2_mi")
    for config in mi_grid_configs(ns=tuple(n for n in (3, 4, 5) if n <= max_n)):
        res = exact_mi(config)
        report.record(res.exact_mi - res.lemma2_bound, {"config": config.to_dict(), **res.to_dict()})
    return report


# ---------------------------------------------------------------------------
# exhaustive lemma checks


def _pair_rows(n, r, k, m):
    """Planted hypothesis and, for every class, its index, hypothesis and d."""
    y_star = _planted(n, r, k)
    d = class_disagreements(n, r, k, m, y_star)
    return y_star, list(enumerate_classes(n, r, k)), d


def _check_signal_identity(report: LemmaReport, max_n: int, class_cap: int) -> None:
    for n, r, k, m in small_shapes(max_n):
        if space_size(n, r, k).class_size > class_cap:
            continue
        y_star = _planted(n, r, k)
        table = cached_rank_table(n, r, k, m)
        ind = np.zeros((table.shape[0], binom(n, m)), dtype=np.float64)
        np.put_along_axis(ind, table, 1.0, axis=1)
        diff = ind - y_star.indicator(m)
        d = class_disagreements(n, r, k, m, y_star)
        for p, q in SIGNAL_PQ_GRID:
            config = ModelConfig(n, r, k, m, p, q)
            signal = diff @ expected_tensor(config, y_star).values
            err = np.abs(signal + (p - q) * d)
            worst = int(err.argmax())
            report.record(
                float(err[worst]) - IDENTITY_TOL,
                {"shape": [n, r, k, m], "p": p, "q": q, "classes": int(d.size), "max_abs_error": float(err[worst])},
            )


def _check_d_range(report: LemmaReport, max_n: int) -> None:
    for n, r, k, m in small_shapes(max_n):
        y_star, classes, d = _pair_rows(n, r, k, m)
        lo, hi = binom(k - 1, m - 1), r * binom(k, m)
        for y, dv in zip(classes, d.tolist()):
            stats_ = disagreement(y, y_star, m)
            same = y.same_class(y_star)
            if same:
                violation = stats_.d
            else:
                violation = max(lo - stats_.d, stats_.d - hi)
            violation = max(violation, abs(stats_.d - dv), abs(stats_.symmetric_difference - 2 * stats_.d))
            report.record(violation, {"shape": [n, r, k, m], "y": list(y.labels), "d": stats_.d, "range": [lo, hi]})


def _check_pair_relation(report: LemmaReport, max_n: int) -> None:
    for n, r, k, m in small_shapes(max_n):
        y_star, classes, _ = _pair_rows(n, r, k, m)
        for y in classes:
            s = disagreement(y, y_star, m)
            # d_pair * C(k, m) <= C(k, 2) * d, in integers
            violation = s.d_pair * binom(k, m) - binom(k, 2) * s.d
            report.record(violation, {"shape": [n, r, k, m], "y": list(y.labels), "d": s.d, "d_pair": s.d_pair})


def _check_D_t(report: LemmaReport, max_n: int) -> None:
    for n, r, k, m in small_shapes(max_n):
        hist = count_D_t(n, r, k, m, _planted(n, r, k))
        if hist.get(0) != 1:
            report.record(1.0, {"shape": [n, r, k, m], "reason": "D_0 != 1", "hist": hist})
            continue
        ckm = binom(k, m)
        for t, count in hist.items():
            if t == 0:
                continue
            labeled = math.factorial(r) * count
            holds = labeled ** ckm <= n ** (8 * k * t)
            gap = math.log(labeled) - 8 * k * t / ckm * math.log(n)
            report.record(gap if not holds else min(gap, 0.0), {"shape": [n, r, k, m], "t": t, "D_t": count, "log_gap": gap})


def _check_labeled_count(report: LemmaReport, max_n: int) -> None:
    seen = set()
    for n, r, k, _ in small_shapes(max_n):
        if (n, r, k) in seen:
            continue
        seen.add((n, r, k))
        y_star, classes, _ = _pair_rows(n, r, k, 2)
        dp = np.array([disagreement(y, y_star, 2).d_pair for y in classes])
        for t in range(0, int(dp.max()) + 1):
            count = int((dp <= t).sum())
            labeled = math.factorial(r) * count
            bound_pow = n ** (16 * t)
            class_ok = count ** k <= bound_pow
            # at t = 0 the r! relabelings of the planted labeling already exceed n^0
            labeled_ok = t == 0 or labeled ** k <= bound_pow
            gap_class = math.log(count) - 16 * t / k * math.log(n)
            gap_labeled = math.log(labeled) - 16 * t / k * math.log(n)
            gap = gap_class if t == 0 else max(gap_class, gap_labeled)
            ok = class_ok and labeled_ok
            report.record(
                gap if not ok else min(gap, 0.0),
                {"shape": [n, r, k], "t_pair": t, "classes": count, "labeled": labeled, "log_gap": gap},
            )


def _check_decomposition(report: LemmaReport, max_n: int) -> None:
    seen = set()
    for n, r, k, _ in small_shapes(max_n):
        if (n, r, k) in seen:
            continue
        seen.add((n, r, k))
        y_star, classes, _ = _pair_rows(n, r, k, 2)
        for y in classes:
            # every labeled member of the class, since the alignment depends on labels
            for perm in _permutations(r):
                yl = y.relabel(perm)
                ms = misclassification_stats(yl, y_star)
                d_pair = disagreement(yl, y_star, 2).d_pair
                ident = abs(ms.d_pair - d_pair)
                floor = max(k * mi - 4 * (a + b) for mi, a, b in zip(ms.M, ms.N1, ms.N2))
                report.record(
                    max(ident, floor),
                    {"shape": [n, r, k], "y": list(yl.labels), "M": ms.M, "N1": ms.N1, "N2": ms.N2, "d_pair": d_pair},
                )


def _permutations(r: int):
    from itertools import permutations

    return permutations(range(r))


KL_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


def _check_kl_chain(report: LemmaReport) -> None:
    display_misses = 0
    for p in KL_GRID:
        for q in KL_GRID:
            if p == q:
                continue
            d = bernoulli_d(p, q)
            split = (p - q) ** 2 / (q * (1 - p)) if p >= q else (p - q) ** 2 / (p * (1 - q))
            bound = signal_ratio_min(p, q)
            if d > signal_ratio_max(p, q):
                display_misses += 1
            report.record(max(d - bound, d - split), {"p": p, "q": q, "d": d, "ratio_min": bound})
    report.info["points_where_d_exceeds_max_denominator_ratio"] = display_misses


def _check_bhatia_davis(report: LemmaReport) -> None:
    for mean in KL_GRID:
        laws = [WeightDistribution.bernoulli(mean), WeightDistribution.point_mass(mean)]
        laws += [WeightDistribution.beta_mean(mean, s) for s in (0.5, 1.0, 5.0, 20.0)]
        for law in laws:
            var = law.variance
            if law.family == "beta":
                a, b = law.shape_params
                ref = float(stats.beta(a, b).var())
                if not math.isclose(var, ref, rel_tol=1e-12):
                    report.record(abs(var - ref), {"law": law.to_dict(), "reason": "variance formula mismatch"})
                    continue
            report.record(var - mean * (1 - mean), {"law": law.to_dict(), "variance": var})


def _check_count_formula(report: LemmaReport, max_n: int) -> None:
    seen = set()
    stirling = []
    for n, r, k, _ in small_shapes(max_n):
        if (n, r, k) in seen:
            continue
        seen.add((n, r, k))
        labeled = 0
        classes = set()
        for y in enumerate_labeled(n, r, k):
            labeled += 1
            classes.add(frozenset(frozenset(c) for c in y.communities))
        space = space_size(n, r, k)
        formula = math.factorial(n) // (math.factorial(n - r * k) * math.factorial(k) ** r)
        enumerated = [c.class_key for c in enumerate_classes(n, r, k)]
        mismatch = (
            abs(labeled - formula)
            + abs(len(classes) * math.factorial(r) - formula)
            + abs(len(enumerated) * math.factorial(r) - formula)
            + abs(space.labeled_size - formula)
            + (len(set(enumerated)) != len(enumerated))
        )
        log_exact = math.log(formula)
        lg_err = abs(log_space_size(n, r, k) - log_exact) / max(log_exact, 1.0)
        report.record(
            max(mismatch, lg_err - 1e-9),
            {"shape": [n, r, k], "labeled": labeled, "classes": len(classes), "formula": formula},
        )
        if formula > 1:
            st = stirling_log_lower_bound(n, r, k)
            stirling.append({"shape": [n, r, k], "log_size": log_exact, "stirling_lower": st, "holds": st <= log_exact})
    report.info["stirling"] = {
        "instances": len(stirling),
        "holds_everywhere": all(s["holds"] for s in stirling),
        "failures": [s for s in stirling if not s["holds"]][:5],
    }


def verify_lemma(lemma_id: str, max_n: int = 8, class_cap: int = 10**4) -> LemmaReport:
    """Exhaustively check one named inequality or identity on all small shapes."""
    if lemma_id not in LEMMA_IDS:
        raise ShsbmError(f"unknown lemma id {lemma_id!r}; expected one of {LEMMA_IDS}")
    report = LemmaReport(lemma_id)
    if lemma_id == "signal_identity":
        _check_signal_identity(report, max_n, class_cap)
    elif lemma_id == "d_range":
        _check_d_range(report, max_n)
    elif lemma_id == "pair_relation":
        _check_pair_relation(report, max_n)
    elif lemma_id == "D_t_bound":
        _check_D_t(report, max_n)
    elif lemma_id == "labeled_count_bound":
        _check_labeled_count(report, max_n)
    elif lemma_id == "decomposition":
        _check_decomposition(report, max_n)
    elif lemma_id == "kl_chain":
        _check_kl_chain(report)
    elif lemma_id == "bhatia_davis":
        _check_bhatia_davis(report)
    else:
        _check_count_formula(report, max_n)
    return report


# ---------------------------------------------------------------------------
# concentration tails


def bernstein_tail_bound(p: float, q: float, d: int) -> float:
    """2 exp(-3 (p-q)^2 d / (28 (p v q)(1 - p ^ q)))."""
    den = 28.0 * max(p, q) * (1.0 - min(p, q))
    if den == 0.0:
        return 0.0
    return 2.0 * math.exp(-3.0 * (p - q) ** 2 * d / den)


def hoeffding_tail_bound(p: float, q: float, d: int, sigma_p_sq: float, sigma_q_sq: float) -> float:
    """2 exp(-(p-q)^2 d / (4 max(sigma^2))), sigma^2 in the variance-proxy convention.

    The noise term sums 2d independent centred weights; a sum of N terms with
    variance proxy s^2 has P(S >= t) <= exp(-t^2 / (2 N s^2)), evaluated at
    t = |p - q| d.
    """
    s2 = max(sigma_p_sq, sigma_q_sq)
    if s2 == 0.0:
        return 0.0
    return 2.0 * math.exp(-((p - q) ** 2) * d / (4.0 * s2))


def clopper_pearson_upper(events: int, trials: int, confidence: float = 0.99) -> float:
    if events >= trials:
        return 1.0
    return float(stats.beta.ppf(confidence, events + 1, trials - events))


def tail_check(
    config: ModelConfig,
    y: Hypothesis,
    y_star: Hypothesis,
    samples: int = 100_000,
    bound: str = "bernstein",
    seed: int = 0,
    confidence: float = 0.99,
    chunk: int = 10_000,
) -> LemmaReport:
    """Monte Carlo frequency of the noise term reaching the signal gap, against a tail bound.

    The event is sign(p - q) * <A - EA, Y - Y*> >= |p - q| d. The check passes
    when the one-sided Clopper-Pearson upper limit of its frequency does not
    exceed the analytic bound.
    """
    if bound not in ("bernstein", "hoeffding"):
        raise ShsbmError(f"unknown bound {bound!r}")
    if samples < 10_000:
        raise ShsbmError("tail checks need at least 10^4 samples")
    y.check_config(config)
    y_star.check_config(config)
    if y.same_class(y_star):
        raise ShsbmError("y and y_star induce the same tensor; there is no event to test")
    d = disagreement(y, y_star, config.m).d
    p, q = config.p, config.q
    if bound == "bernstein":
        value = bernstein_tail_bound(p, q, d)
    else:
        value = hoeffding_tail_bound(p, q, d, config.dist_in.sub_gaussian_sq, config.dist_out.sub_gaussian_sq)

    mask = y_star.indicator(config.m).astype(bool)
    mean = np.where(mask, p, q)
    diff = (y.indicator(config.m).astype(np.float64) - mask)
    support = np.flatnonzero(diff)
    sign = 1.0 if p > q else -1.0
    threshold = abs(p - q) * d
    rng = np.random.default_rng(seed)
    events = 0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        # only entries where the two indicators differ enter the noise term
        a_in = config.dist_in.sample(rng, (size, support.size))
        a_out = config.dist_out.sample(rng, (size, support.size))
        a = np.where(mask[support], a_in, a_out)
        noise = (a - mean[support]) @ diff[support]
        events += int((sign * noise >= threshold - 1e-12).sum())
        done += size
    ucl = clopper_pearson_upper(events, samples, confidence)
    report = LemmaReport(f"tail_{bound}")
    report.record(
        ucl - value,
        {
            "config": config.to_dict(), "d": d, "threshold": threshold, "samples": samples,
            "events": events, "empirical": events / samples, "upper_confidence": ucl, "bound": value,
            "vacuous": value >= 1.0,
        },
    )
    return report


def _split(n: int, k: int, offset: int, r: int = 1) -> list[list[int]]:
    return [list(range(offset + c * k, offset + (c + 1) * k)) for c in range(r)]


def tail_instances() -> list[tuple[str, ModelConfig, Hypothesis, Hypothesis]]:
    """The fixed instances the tail checks run on."""
    out = []
    truth12 = Hypothesis.from_communities(12, [list(range(6))])
    disjoint12 = Hypothesis.from_communities(12, [list(range(6, 12))])
    for bound in ("bernstein", "hoeffding"):
        out.append((bound, ModelConfig(12, 1, 6, 3, 0.8, 0.3), disjoint12, truth12))
    truth8 = Hypothesis.from_communities(8, [[0, 1, 2, 3]])
    swap8 = Hypothesis.from_communities(8, [[0, 1, 2, 4]])
    for bound in ("bernstein", "hoeffding"):
        out.append((bound, ModelConfig(8, 1, 4, 2, 0.7, 0.2), swap8, truth8))
    out.append(("hoeffding", ModelConfig(12, 1, 6, 3, 0.7, 0.4, family="beta", precision=4.0), disjoint12, truth12))
    truth6 = Hypothesis.from_communities(6, [[0, 1, 2], [3, 4, 5]])
    swap6 = Hypothesis.from_communities(6, [[0, 1, 3], [2, 4, 5]])
    for bound in ("bernstein", "hoeffding"):
        out.append((bound, ModelConfig(6, 2, 3, 2, 0.2, 0.7), swap6, truth6))
    out.append(("bernstein", ModelConfig(12, 1, 6, 3, 1.0, 0.0, family="point_mass"), disjoint12, truth12))
    return out


def check_tails(samples: int = 100_000, seed: int = 0) -> list[LemmaReport]:
    merged = {"bernstein": LemmaReport("tail_bernstein"), "hoeffding": LemmaReport("tail_hoeffding")}
    for i, (bound, config, y, y_star) in enumerate(tail_instances()):
        single = tail_check(config, y, y_star, samples=samples, bound=bound, seed=seed + i)
        case = dict(single.details[0])
        merged[bound].record(case.pop("violation"), case)
    return list(merged.values())


SUITES = LEMMA_IDS + ("lemma2_mi", "tails")


def run_suite(suite: str = "all", max_n: int = 8, seed: int = 0, samples: int = 100_000) -> list[LemmaReport]:
    if suite != "all" and suite not in SUITES:
        raise ShsbmError(f"unknown suite {suite!r}; expected 'all' or one of {SUITES}")
    names: Iterable[str] = SUITES if suite == "all" else (suite,)
    reports = []
    for name in names:
        if name == "lemma2_mi":
            reports.append(check_lemma2_grid(max_n=min(max_n, 5)))
        elif name == "tails":
            reports.extend(check_tails(samples=samples, seed=seed))
        else:
            reports.append(verify_lemma(name, max_n=max_n))
    return reports
