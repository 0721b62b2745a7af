"""Monte Carlo harness: trial batches, parameter sweeps and the Fano comparison.

Trial ``i`` of a batch with base seed ``s`` draws everything from
``numpy.random.default_rng([s, i])`` (a ``SeedSequence`` over the pair): first
the planted labeling (uniform over labeled hypotheses, unless fixed), then a
community relabeling used for the labeled-success flag, then the weights.
Outcomes therefore depend only on ``(config, s, i)``, never on worker count.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .combinatorics import class_index
from .errors import InvalidConfigError, ShsbmError
from .mle import class_scores, result_from_scores
from .model import Hypothesis, ModelConfig, sample_weights, uniform_hypothesis
from .serialization import SCHEMA_VERSION, jsonable
from .thresholds import ThresholdParams, classify

log = logging.getLogger(__name__)

Z95 = 1.959963984540054
CSV_COLUMNS = (
    "n", "r", "k", "m", "p", "q", "trials", "successes", "rate", "wilson_low", "wilson_high",
    "d_pq", "mi_upper", "fano_floor", "lower_rhs", "upper_rhs", "classification",
)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # the interval endpoints are exactly 0 and 1 at the extremes; avoid rounding residue
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class TrialResult:
    index: int
    success: bool
    labeled_success: bool
    score_margin: float
    truth: tuple[int, ...]
    estimate: tuple[int, ...]
    argmax_count: int
    elapsed: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "success": self.success,
            "labeled_success": self.labeled_success,
            "score_margin": self.score_margin,
            "truth": list(self.truth),
            "estimate": list(self.estimate),
            "argmax_count": self.argmax_count,
        }


def sense_for(config: ModelConfig) -> str:
    return "maximize" if config.p > config.q else "minimize"


def run_trial(config: ModelConfig, index: int, base_seed: int, fixed_truth: Hypothesis | None = None) -> TrialResult:
    start = time.perf_counter()
    rng = np.random.default_rng([base_seed, index])
    y_star = uniform_hypothesis(config.n, config.r, config.k, rng)
    if fixed_truth is not None:
        y_star = fixed_truth
    perm = rng.permutation(config.r)
    weights = sample_weights(config, y_star, seed=rng)

    sense = sense_for(config)
    scores = class_scores(weights, config.r, config.k)
    result = result_from_scores(scores, config.n, config.r, config.k, sense)
    truth_idx = class_index(y_star)
    sign = 1.0 if sense == "maximize" else -1.0
    others = np.delete(sign * scores, truth_idx)
    margin = float(sign * scores[truth_idx] - others.max()) if others.size else math.inf
    success = margin > 0
    estimate = result.argmax_classes[0].relabel(perm)
    labeled = success and estimate.labels == y_star.labels
    return TrialResult(
        index=index,
        success=success,
        labeled_success=labeled,
        score_margin=margin,
        truth=y_star.labels,
        estimate=estimate.labels,
        argmax_count=len(result.argmax_classes),
        elapsed=time.perf_counter() - start,
    )


def _run_range(args) -> list[TrialResult]:
    config, start, stop, base_seed, truth = args
    return [run_trial(config, i, base_seed, truth) for i in range(start, stop)]


@dataclass(frozen=True)
class BatchResult:
    config: ModelConfig
    base_seed: int
    trials: int
    successes: int
    labeled_successes: int
    per_trial: tuple[TrialResult, ...] = field(repr=False, default=())

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def labeled_rate(self) -> float:
        return self.labeled_successes / self.trials

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    def to_dict(self, include_trials: bool = False) -> dict:
        lo, hi = self.wilson
        d = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "base_seed": self.base_seed,
            "trials": self.trials,
            "successes": self.successes,
            "labeled_successes": self.labeled_successes,
            "rate": self.rate,
            "labeled_rate": self.labeled_rate,
            "wilson_low": lo,
            "wilson_high": hi,
        }
        if include_trials:
            d["per_trial"] = [t.to_dict() for t in self.per_trial]
        return d


def run_batch(
    config: ModelConfig,
    trials: int,
    base_seed: int = 0,
    jobs: int = 1,
    fixed_truth: Hypothesis | None = None,
) -> BatchResult:
    """Sample, solve and score ``trials`` independent instances."""
    if trials < 1:
        raise ShsbmError("trials must be at least 1")
    if fixed_truth is not None:
        fixed_truth.check_config(config)
    # builds the class table (and trips the guard) before any worker starts
    from .combinatorics import space_size
    from .mle import _guard

    _guard(config.n, config.r, config.k, None)
    log.debug("batch n=%d r=%d k=%d m=%d p=%g q=%g: %d classes", config.n, config.r, config.k, config.m,
              config.p, config.q, space_size(config.n, config.r, config.k).class_size)
    if jobs > 1 and trials > 1:
        per = math.ceil(trials / jobs)
        tasks = [(config, a, min(a + per, trials), base_seed, fixed_truth) for a in range(0, trials, per)]
        with ProcessPoolExecutor(max_workers=len(tasks)) as pool:
            results = [t for part in pool.map(_run_range, tasks) for t in part]
    else:
        results = _run_range((config, 0, trials, base_seed, fixed_truth))
    return BatchResult(
        config=config,
        base_seed=base_seed,
        trials=trials,
        successes=sum(t.success for t in results),
        labeled_successes=sum(t.labeled_success for t in results),
        per_trial=tuple(results),
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class Grid:
    points: list[ModelConfig]
    axes: dict[str, list[float]] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)


def load_grid(doc) -> Grid:
    """Grid from either a list of config dicts or ``{"base": {...}, "axes": {name: [values]}}``.

    Axis products that produce an invalid config (for instance p == q) are
    skipped and listed in ``Grid.skipped``.
    """
    if isinstance(doc, dict) and "points" in doc:
        doc = doc["points"]
    if isinstance(doc, list):
        if not doc:
            raise InvalidConfigError("grid has no points")
        return Grid([ModelConfig.from_dict(p) for p in doc])
    if not isinstance(doc, dict) or "base" not in doc or "axes" not in doc:
        raise InvalidConfigError("grid must be a list of configs or an object with 'base' and 'axes'")
    axes = {str(k): list(v) for k, v in doc["axes"].items()}
    if not axes or any(not v for v in axes.values()):
        raise InvalidConfigError("every grid axis needs at least one value")
    grid = Grid([], axes)
    for combo in itertools.product(*axes.values()):
        point = dict(doc["base"])
        point.update(zip(axes.keys(), combo))
        try:
            grid.points.append(ModelConfig.from_dict(point))
        except InvalidConfigError as exc:
            grid.skipped.append({"point": point, "reason": str(exc)})
    if not grid.points:
        raise InvalidConfigError("grid has no valid points")
    return grid


@dataclass
class SweepResult:
    rows: list[dict]
    axes: dict[str, list[float]] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "columns": list(CSV_COLUMNS), "rows": self.rows,
                "axes": self.axes, "skipped": self.skipped}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in CSV_COLUMNS})
        return buf.getvalue()


def sweep_row(batch: BatchResult, params: ThresholdParams) -> dict:
    cfg = batch.config
    report = classify(cfg, params)
    lo, hi = batch.wilson
    return jsonable({
        "n": cfg.n, "r": cfg.r, "k": cfg.k, "m": cfg.m, "p": cfg.p, "q": cfg.q,
        "trials": batch.trials, "successes": batch.successes, "rate": batch.rate,
        "wilson_low": lo, "wilson_high": hi,
        "d_pq": report.d_pq, "mi_upper": report.mi_upper, "fano_floor": report.fano_floor,
        "lower_rhs": report.lower_rhs, "upper_rhs": report.upper_rhs,
        "classification": report.classification,
    })


def sweep(
    grid: Grid | Sequence[ModelConfig],
    trials: int,
    base_seed: int = 0,
    jobs: int = 1,
    params: ThresholdParams | None = None,
) -> SweepResult:
    """One batch per grid point, joined with its threshold report.

    Every point reuses the same base seed, so neighbouring points share their
    random streams.
    """
    if not isinstance(grid, Grid):
        grid = Grid(list(grid))
    params = params or ThresholdParams()
    rows = []
    for cfg in grid.points:
        batch = run_batch(cfg, trials, base_seed, jobs)
        rows.append(sweep_row(batch, params))
        log.info("p=%g q=%g rate=%.3f", cfg.p, cfg.q, batch.rate)
    return SweepResult(rows, grid.axes, grid.skipped)


def isotonic_violations(rows: Sequence[dict]) -> list[tuple[int, int]]:
    """Index pairs (i < j) where the later rate is lower and the Wilson intervals are disjoint."""
    out = []
    for i, j in itertools.combinations(range(len(rows)), 2):
        a, b = rows[i], rows[j]
        if b["rate"] < a["rate"] and b["wilson_high"] < a["wilson_low"]:
            out.append((i, j))
    return out


# ---------------------------------------------------------------------------
# SVG heatmap


def _crossing(values: Sequence[float], gaps: Sequence[float]) -> float | None:
    for (v0, g0), (v1, g1) in zip(zip(values, gaps), zip(values[1:], gaps[1:])):
        if g0 == 0:
            return v0
        if (g0 < 0) != (g1 < 0):
            if math.isinf(g0) or math.isinf(g1):
                return v1 if math.isinf(g0) else v0
            return v0 + (v1 - v0) * g0 / (g0 - g1)
    return None


def sweep_svg(result: SweepResult, params: ThresholdParams | None = None, cell: int = 40) -> str:
    """Heatmap of success rate over a two-axis sweep with the two theory boundaries.

    The boundaries are where the lower statistic meets the lower threshold and
    the upper statistic meets the upper threshold, interpolated along the
    second axis within each column. Per-point threshold values are embedded as
    JSON in the ``<desc>`` element.
    """
    if len(result.axes) != 2:
        raise ShsbmError("SVG output needs a sweep over exactly two axes")
    params = params or ThresholdParams()
    (xname, xs), (yname, ys) = result.axes.items()
    by_key = {(row[xname], row[yname]): row for row in result.rows}
    margin = 60
    width, height = margin + cell * len(xs) + 20, margin + cell * len(ys) + 20

    def px(ix):
        return margin + cell * ix + cell / 2

    def py(iy):
        return 20 + cell * (len(ys) - 1 - iy) + cell / 2

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">']
    theory = []
    lower_gap = {}
    upper_gap = {}
    for ix, x in enumerate(xs):
        for iy, y in enumerate(ys):
            row = by_key.get((x, y))
            x0, y0 = px(ix) - cell / 2, py(iy) - cell / 2
            if row is None:
                parts.append(f'<rect x="{x0}" y="{y0}" width="{cell}" height="{cell}" fill="#dddddd"/>')
                continue
            shade = int(round(255 * (1 - row["rate"])))
            parts.append(
                f'<rect x="{x0}" y="{y0}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)">'
                f'<title>{xname}={x} {yname}={y} rate={row["rate"]:.3f}</title></rect>'
            )
            cfg = ModelConfig.from_dict({k: row[k] for k in ("n", "r", "k", "m", "p", "q")})
            rep = classify(cfg, params)
            lower_gap[(ix, iy)] = rep.lower_statistic - rep.lower_rhs
            upper_gap[(ix, iy)] = rep.upper_statistic - rep.upper_rhs
            theory.append({
                xname: x, yname: y, "lower_rhs": rep.lower_rhs, "upper_rhs": rep.upper_rhs,
                "lower_statistic": rep.lower_statistic, "upper_statistic": rep.upper_statistic,
            })
    for gaps, colour, label in ((lower_gap, "#d62728", "lower"), (upper_gap, "#2ca02c", "upper")):
        pts = []
        for ix in range(len(xs)):
            col = [(iy, gaps[(ix, iy)]) for iy in range(len(ys)) if (ix, iy) in gaps]
            if len(col) < 2:
                continue
            at = _crossing([iy for iy, _ in col], [g for _, g in col])
            if at is not None:
                pts.append(f"{px(ix):.2f},{py(at):.2f}")
        if pts:
            parts.append(f'<polyline class="{label}-boundary" points="{" ".join(pts)}" fill="none" '
                         f'stroke="{colour}" stroke-width="2"/>')
    for ix, x in enumerate(xs):
        parts.append(f'<text x="{px(ix)}" y="{height - 25}" font-size="10" text-anchor="middle">{x}</text>')
    for iy, y in enumerate(ys):
        parts.append(f'<text x="{margin - 5}" y="{py(iy) + 3}" font-size="10" text-anchor="end">{y}</text>')
    parts.append(f'<text x="{margin + cell * len(xs) / 2}" y="{height - 5}" font-size="12" '
                 f'text-anchor="middle">{xname}</text>')
    parts.append(f'<text x="12" y="{20 + cell * len(ys) / 2}" font-size="12">{yname}</text>')
    desc = json.dumps(jsonable({"axes": [xname, yname], "theory": theory}), sort_keys=True)
    parts.insert(1, f"<desc>{desc}</desc>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Fano comparison


@dataclass(frozen=True)
class FanoResult:
    config: ModelConfig
    trials: int
    errors: int
    empirical_error: float
    wilson_low: float
    wilson_high: float
    fano_floor: float
    margin: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION, "config": self.config.to_dict(), "trials": self.trials,
            "errors": self.errors, "empirical_error": self.empirical_error, "wilson_low": self.wilson_low,
            "wilson_high": self.wilson_high, "fano_floor": self.fano_floor, "margin": self.margin,
            "pass": self.passed,
        }


def fano_experiment(config: ModelConfig, trials: int, base_seed: int = 0, jobs: int = 1) -> FanoResult:
    """Empirical labeled error of the MLE under the uniform prior versus the Fano floor.

    Passes when the Wilson lower limit of the error rate is at least the floor
    minus three Wilson half-widths.
    """
    if config.r != 1:
        raise InvalidConfigError("the Fano comparison needs r = 1, where labeled and class recovery coincide")
    if config.family != "bernoulli":
        raise InvalidConfigError("the Fano comparison needs Bernoulli weights")
    from .thresholds import fano_floor

    floor = fano_floor(config)
    batch = run_batch(config, trials, base_seed, jobs)
    errors = trials - batch.labeled_successes
    lo, hi = wilson_interval(errors, trials)
    margin = 3 * (hi - lo) / 2
    return FanoResult(
        config=config, trials=trials, errors=errors, empirical_error=errors / trials,
        wilson_low=lo, wilson_high=hi, fano_floor=floor, margin=margin, passed=lo >= floor - margin,
    )
