"""Closed-form information-theoretic thresholds and region classification.

All logarithms are natural unless a ``log_base`` is passed explicitly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .combinatorics import binom, log_space_size, space_size
from .errors import (
    DegenerateSpaceError,
    InvalidConfigError,
    MissingSigmaError,
    UnsupportedDivergenceError,
)
from .model import ModelConfig

MODES = ("min_mode", "max_mode", "sigma_mode")
IMPOSSIBLE = "impossible_minimax"
POSSIBLE = "possible_mle"
GAP = "indeterminate_gap"
PRESETS = ("planted_sbm", "densest_sub", "multipartite")


@dataclass(frozen=True)
class ThresholdParams:
    """Constants the asymptotic statements leave open.

    ``c0`` scales the impossibility side, ``C_upper`` the achievability side.
    ``denominator_mode=None`` compares the min-denominator ratio against the
    lower threshold and the max-denominator ratio against the upper one.
    """

    c0: float = 0.5
    C_upper: float = 1.0
    denominator_mode: str | None = None

    def __post_init__(self):
        if not 0.0 < self.c0 < 1.0:
            raise InvalidConfigError(f"c0 must lie in (0, 1), got {self.c0}")
        if not self.C_upper > 0.0:
            raise InvalidConfigError(f"C_upper must be positive, got {self.C_upper}")
        if self.denominator_mode is not None and self.denominator_mode not in MODES:
            raise InvalidConfigError(f"unknown denominator mode {self.denominator_mode!r}")


def _xlogy_ratio(a: float, b: float) -> float:
    # a * ln(a / b) with 0 ln 0 = 0
    if a == 0.0:
        return 0.0
    if b == 0.0:
        return math.inf
    return a * math.log(a / b)


def bernoulli_kl(p: float, q: float) -> float:
    return _xlogy_ratio(p, q) + _xlogy_ratio(1.0 - p, 1.0 - q)


def bernoulli_d(p: float, q: float) -> float:
    """Symmetrised KL divergence between Bernoulli(p) and Bernoulli(q), in nats."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("p and q must lie in [0, 1]")
    if p == q:
        return 0.0
    if p in (0.0, 1.0) or q in (0.0, 1.0):
        return math.inf
    return (p - q) * math.log(p * (1.0 - q) / (q * (1.0 - p)))


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return math.inf if num > 0 else 0.0
    return num / den


def signal_ratio_min(p: float, q: float) -> float:
    """(p - q)^2 / ((p ^ q)(1 - p v q))."""
    return _ratio((p - q) ** 2, min(p, q) * (1.0 - max(p, q)))


def signal_ratio_max(p: float, q: float) -> float:
    """(p - q)^2 / ((p v q)(1 - p ^ q))."""
    return _ratio((p - q) ** 2, max(p, q) * (1.0 - min(p, q)))


def signal_ratio_sigma(p: float, q: float, sigma_p_sq: float, sigma_q_sq: float) -> float:
    return _ratio((p - q) ** 2, max(sigma_p_sq, sigma_q_sq))


def _require_bernoulli(config: ModelConfig) -> None:
    if config.family != "bernoulli":
        raise UnsupportedDivergenceError(
            f"symmetric divergence is only implemented for Bernoulli weights, not {config.family!r}"
        )


def overlap_factor(config: ModelConfig) -> Fraction:
    """1 - r C(n-m, k-m) / C(n, k), exactly."""
    f = 1 - Fraction(config.r * binom(config.n - config.m, config.k - config.m), binom(config.n, config.k))
    if not 0 <= f <= 1:
        raise AssertionError(f"overlap factor {f} outside [0, 1]")
    return f


def mi_upper_bound(config: ModelConfig) -> float:
    """Upper bound on I(y*; A) under the uniform prior, in nats."""
    _require_bernoulli(config)
    d = bernoulli_d(config.p, config.q)
    factor = overlap_factor(config)
    if factor == 0:
        return 0.0
    return config.r * d * config.within_per_community * float(factor)


def fano_floor(config: ModelConfig, log_route: str = "exact", log_base: float | None = None) -> float:
    """max(0, 1 - (I_upper + log 2) / log |Y|) for any estimator under the uniform prior.

    ``log_route`` picks how log |Y| is evaluated: ``"exact"`` takes the log of
    the exact integer, ``"lgamma"`` sums log-gamma terms.
    """
    _require_bernoulli(config)
    space = space_size(config.n, config.r, config.k)
    if space.labeled_size == 1:
        raise DegenerateSpaceError("hypothesis space has a single element; the Fano floor is undefined")
    if log_route == "exact":
        log_y = math.log(space.labeled_size)
    elif log_route == "lgamma":
        log_y = log_space_size(config.n, config.r, config.k)
    else:
        raise ValueError(f"unknown log route {log_route!r}")
    mi = mi_upper_bound(config)
    log_2 = math.log(2.0)
    if log_base is not None:
        scale = math.log(log_base)
        log_y, mi, log_2 = log_y / scale, mi / scale, log_2 / scale
    return max(0.0, 1.0 - (mi + log_2) / log_y)


@dataclass(frozen=True)
class ThresholdReport:
    config: dict
    params: dict
    d_pq: float | None
    signal_ratio_min: float
    signal_ratio_max: float
    signal_ratio_sigma: float | None
    mi_upper: float | None
    fano_floor: float | None
    lower_rhs: float
    upper_rhs: float
    lower_statistic: float
    upper_statistic: float
    lower_form: str
    upper_form: str
    classification: str
    d_below_lower_rhs: bool | None
    log_base: float | None = None
    preset: str | None = None
    preset_notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["preset_notes"] = list(self.preset_notes)
        return d


def _classify(lower_stat: float, lower_rhs: float, upper_stat: float, upper_rhs: float) -> str:
    # the impossibility statement takes precedence when user constants make both hold
    if lower_stat <= lower_rhs:
        return IMPOSSIBLE
    if upper_stat >= upper_rhs:
        return POSSIBLE
    return GAP


def _optional(fn, config):
    try:
        return fn(config)
    except (UnsupportedDivergenceError, DegenerateSpaceError):
        return None


def _sigmas(config: ModelConfig, sigmas: tuple[float, float] | None) -> tuple[float, float] | None:
    if sigmas is not None:
        return sigmas
    if config.sigma_p_sq is not None or config.sigma_q_sq is not None or config.family != "bernoulli":
        return config.dist_in.sub_gaussian_sq, config.dist_out.sub_gaussian_sq
    return None


_FORMS = {
    "min_mode": "(p-q)^2/((p^q)(1-pvq))",
    "max_mode": "(p-q)^2/((pvq)(1-p^q))",
    "sigma_mode": "(p-q)^2/max(sigma_p^2, sigma_q^2)",
}


def classify(
    config: ModelConfig,
    params: ThresholdParams | None = None,
    sigmas: tuple[float, float] | None = None,
    log_base: float | None = None,
) -> ThresholdReport:
    """Place a configuration in the impossible / possible / gap region.

    ``sigmas`` are the squared sub-Gaussian parameters (within, cross); they
    default to the configured weight laws when those are not Bernoulli or carry
    explicit overrides. ``log_base`` changes the unit of every logarithm,
    including the one inside the divergence.
    """
    params = params or ThresholdParams()
    p, q, k = config.p, config.q, config.k
    ckm = config.within_per_community
    scale = 1.0 if log_base is None else math.log(log_base)

    lower_rhs = (1.0 - params.c0) * k * (math.log(config.n / k) / scale) / ckm
    upper_rhs = params.C_upper * k * (math.log(config.n) / scale) / ckm

    r_min = signal_ratio_min(p, q)
    r_max = signal_ratio_max(p, q)
    sig = _sigmas(config, sigmas)
    r_sigma = None if sig is None else signal_ratio_sigma(p, q, *sig)

    mode = params.denominator_mode
    lower_mode = "min_mode" if mode in (None, "sigma_mode") else mode
    upper_mode = "max_mode" if mode is None else mode
    by_mode = {"min_mode": r_min, "max_mode": r_max, "sigma_mode": r_sigma}
    if upper_mode == "sigma_mode" and r_sigma is None:
        raise MissingSigmaError("sigma_mode needs sub-Gaussian parameters for both weight laws")
    lower_stat, upper_stat = by_mode[lower_mode], by_mode[upper_mode]

    d_pq = bernoulli_d(p, q) / scale if config.family == "bernoulli" else None
    mi = _optional(mi_upper_bound, config)
    floor = _optional(lambda c: fano_floor(c, log_base=log_base), config)
    return ThresholdReport(
        config=config.to_dict(),
        params={"c0": params.c0, "C_upper": params.C_upper, "denominator_mode": mode},
        d_pq=d_pq,
        signal_ratio_min=r_min,
        signal_ratio_max=r_max,
        signal_ratio_sigma=r_sigma,
        mi_upper=None if mi is None else mi / scale,
        fano_floor=floor,
        lower_rhs=lower_rhs,
        upper_rhs=upper_rhs,
        lower_statistic=lower_stat,
        upper_statistic=upper_stat,
        lower_form=_FORMS[lower_mode],
        upper_form=_FORMS[upper_mode],
        classification=_classify(lower_stat, lower_rhs, upper_stat, upper_rhs),
        d_below_lower_rhs=None if d_pq is None else d_pq <= lower_rhs,
        log_base=log_base,
    )


def _ratio_p1q(p: float, q: float) -> float:
    return _ratio((p - q) ** 2, p * (1.0 - q))


def _ratio_q1p(p: float, q: float) -> float:
    return _ratio((p - q) ** 2, q * (1.0 - p))


def preset_thresholds(model: str, config: ModelConfig, params: ThresholdParams | None = None) -> ThresholdReport:
    """Thresholds in the specialised forms for the three classical sub-models.

    planted_sbm: n = rk, both sides scale with ln r and use (p-q)^2/(p(1-q)).
    densest_sub: r = 1, lower side ln(n/k), upper side ln n, (p-q)^2/(p(1-q)).
    multipartite: n = rk and q > p; lower side ln r with (p-q)^2/(p(1-q)),
    upper side ln(rk) with (p-q)^2/(q(1-p)).
    """
    params = params or ThresholdParams()
    p, q, n, r, k = config.p, config.q, config.n, config.r, config.k
    if model not in PRESETS:
        raise InvalidConfigError(f"unknown preset {model!r}; expected one of {PRESETS}")
    if model in ("planted_sbm", "multipartite") and n != r * k:
        raise InvalidConfigError(f"preset {model} needs n = r*k")
    if model == "densest_sub" and r != 1:
        raise InvalidConfigError("preset densest_sub needs r = 1")
    if model == "multipartite" and not q > p:
        raise InvalidConfigError("preset multipartite needs q > p")

    ckm = config.within_per_community
    if model == "planted_sbm":
        lower_log, upper_log = math.log(r), math.log(r)
        lower_stat, upper_stat = _ratio_p1q(p, q), _ratio_p1q(p, q)
        lower_form = upper_form = "(p-q)^2/(p(1-q))"
    elif model == "densest_sub":
        lower_log, upper_log = math.log(n / k), math.log(n)
        lower_stat, upper_stat = _ratio_p1q(p, q), _ratio_p1q(p, q)
        lower_form = upper_form = "(p-q)^2/(p(1-q))"
    else:
        lower_log, upper_log = math.log(r), math.log(r * k)
        lower_stat, upper_stat = _ratio_p1q(p, q), _ratio_q1p(p, q)
        lower_form, upper_form = "(p-q)^2/(p(1-q))", "(p-q)^2/(q(1-p))"

    lower_rhs = (1.0 - params.c0) * k * lower_log / ckm
    upper_rhs = params.C_upper * k * upper_log / ckm

    notes = []
    r_min, r_max = signal_ratio_min(p, q), signal_ratio_max(p, q)
    if not math.isclose(lower_stat, r_min, rel_tol=1e-12):
        notes.append(f"lower form {lower_form} differs from the general (p^q)(1-pvq) denominator at this (p, q)")
    if not math.isclose(upper_stat, r_max, rel_tol=1e-12):
        notes.append(f"upper form {upper_form} differs from the general (pvq)(1-p^q) denominator at this (p, q)")

    base = classify(config, params)
    return ThresholdReport(
        config=base.config,
        params=base.params,
        d_pq=base.d_pq,
        signal_ratio_min=r_min,
        signal_ratio_max=r_max,
        signal_ratio_sigma=base.signal_ratio_sigma,
        mi_upper=base.mi_upper,
        fano_floor=base.fano_floor,
        lower_rhs=lower_rhs,
        upper_rhs=upper_rhs,
        lower_statistic=lower_stat,
        upper_statistic=upper_stat,
        lower_form=lower_form,
        upper_form=upper_form,
        classification=_classify(lower_stat, lower_rhs, upper_stat, upper_rhs),
        d_below_lower_rhs=None if base.d_pq is None else base.d_pq <= lower_rhs,
        preset=model,
        preset_notes=tuple(notes),
    )
