import csv
import io
import json
import re

import pytest
from statsmodels.stats.proportion import proportion_confint

from shsbm.errors import InvalidConfigError
from shsbm.experiments import (
    CSV_COLUMNS,
    fano_experiment,
    isotonic_violations,
    load_grid,
    run_batch,
    sweep,
    sweep_svg,
    wilson_interval,
)
from shsbm.model import Hypothesis, ModelConfig
from shsbm.serialization import dumps
from shsbm.thresholds import classify


@pytest.mark.parametrize("x,n", [(10, 10), (0, 10), (3, 17), (150, 200), (1, 1)])
def test_wilson_matches_reference(x, n):
    lo, hi = proportion_confint(x, n, alpha=0.05, method="wilson")
    assert wilson_interval(x, n) == pytest.approx((lo, hi), abs=1e-12)


def test_wilson_ten_of_ten():
    lo, hi = wilson_interval(10, 10)
    assert lo == pytest.approx(0.7224672001371106, abs=1e-12) and hi == 1.0


def test_point_mass_batch_is_perfect():
    b = run_batch(ModelConfig(8, 2, 3, 2, 1.0, 0.0, family="point_mass"), 40, base_seed=3)
    assert b.rate == 1.0 and b.wilson[0] > 0.9
    assert all(t.score_margin > 0 for t in b.per_trial)


def test_near_zero_signal_batch():
    b = run_batch(ModelConfig(6, 1, 3, 2, 0.51, 0.49), 200, base_seed=0)
    assert b.rate < 0.5


def test_margin_sign_matches_success():
    b = run_batch(ModelConfig(7, 2, 3, 2, 0.8, 0.1), 60, base_seed=1)
    assert 0 < b.successes < 60
    assert all((t.score_margin > 0) == t.success for t in b.per_trial)
    assert all(t.labeled_success <= t.success for t in b.per_trial)


def test_batch_determinism_across_jobs():
    c = ModelConfig(8, 2, 3, 2, 0.7, 0.3)
    one = dumps(run_batch(c, 24, base_seed=42, jobs=1).to_dict(include_trials=True))
    eight = dumps(run_batch(c, 24, base_seed=42, jobs=8).to_dict(include_trials=True))
    assert one == eight
    other = dumps(run_batch(c, 24, base_seed=43, jobs=1).to_dict(include_trials=True))
    assert other != one


def test_fixed_truth_batch():
    truth = Hypothesis.from_communities(8, [[0, 1, 2, 3]])
    b = run_batch(ModelConfig(8, 1, 4, 2, 0.8, 0.1), 20, fixed_truth=truth)
    assert all(t.truth == truth.labels for t in b.per_trial)


def test_minimize_batch():
    b = run_batch(ModelConfig(8, 2, 3, 2, 0.0, 1.0, family="point_mass"), 10)
    assert b.rate == 1.0


def test_one_point_sweep_is_a_batch():
    c = ModelConfig(6, 1, 3, 2, 0.8, 0.2)
    row = sweep([c], 30, base_seed=5).rows[0]
    b = run_batch(c, 30, base_seed=5)
    assert row["successes"] == b.successes and row["rate"] == b.rate
    assert row["wilson_low"] <= row["rate"] <= row["wilson_high"]


def test_grid_loading():
    g = load_grid({"base": {"n": 6, "r": 1, "k": 3, "m": 2, "p": 0.5, "q": 0.1}, "axes": {"p": [0.1, 0.5, 0.9]}})
    assert [c.p for c in g.points] == [0.5, 0.9] and len(g.skipped) == 1
    assert len(load_grid([{"n": 6, "r": 1, "k": 3, "m": 2, "p": 0.5, "q": 0.1}]).points) == 1
    with pytest.raises(InvalidConfigError):
        load_grid({"axes": {}})
    with pytest.raises(InvalidConfigError):
        load_grid([])


def test_csv_and_svg():
    grid = load_grid({
        "base": {"n": 6, "r": 1, "k": 3, "m": 2, "p": 0.5, "q": 0.1},
        "axes": {"q": [0.1, 0.2], "p": [0.3, 0.5, 0.7, 0.9]},
    })
    res = sweep(grid, 10, base_seed=0)
    rows = list(csv.DictReader(io.StringIO(res.to_csv())))
    assert tuple(rows[0].keys()) == CSV_COLUMNS and len(rows) == 8
    svg = sweep_svg(res)
    desc = json.loads(re.search(r"<desc>(.*)</desc>", svg).group(1))
    for point in desc["theory"]:
        rep = classify(ModelConfig(6, 1, 3, 2, point["p"], point["q"]))
        assert point["lower_rhs"] == rep.lower_rhs and point["upper_rhs"] == rep.upper_rhs
        assert point["lower_statistic"] == rep.lower_statistic
    assert svg.count("<rect") == 8


def test_isotonic_violations():
    rows = [{"rate": 0.9, "wilson_low": 0.8, "wilson_high": 0.95}, {"rate": 0.1, "wilson_low": 0.05, "wilson_high": 0.2}]
    assert isotonic_violations(rows) == [(0, 1)]
    assert isotonic_violations(rows[::-1]) == []


def test_fano_vacuous_and_errors():
    res = fano_experiment(ModelConfig(6, 1, 3, 2, 0.95, 0.05), 20)
    assert res.fano_floor == 0.0 and res.passed
    with pytest.raises(InvalidConfigError):
        fano_experiment(ModelConfig(6, 2, 3, 2, 0.7, 0.3), 10)
