"""JSON and CSV formats for weight tensors, hypotheses and reports."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .combinatorics import all_subsets
from .errors import ConfigMismatchError, InvalidConfigError
from .model import Hypothesis, ModelConfig, WeightDistribution, WeightTensor

SCHEMA_VERSION = 1


def jsonable(obj: Any) -> Any:
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def read_json(path: str | Path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def tensor_to_json(
    weights: WeightTensor,
    dist_in: WeightDistribution | None = None,
    dist_out: WeightDistribution | None = None,
    seed: int | None = None,
    truth: Hypothesis | None = None,
    sparse: bool | None = None,
) -> dict:
    """Weight-tensor document; the sparse form drops entries equal to ``default_weight``."""
    cfg = weights.config
    dist_in = dist_in or cfg.dist_in
    dist_out = dist_out or cfg.dist_out
    if sparse is None:
        sparse = cfg.family == "bernoulli"
    subsets = all_subsets(weights.n, weights.m)
    default = 0.0 if sparse else None
    entries = []
    for s, w in zip(subsets.tolist(), weights.values.tolist()):
        if sparse and w == default:
            continue
        entries.append(s + [w])
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "dist_in": dist_in.to_dict(),
        "dist_out": dist_out.to_dict(),
        "seed": seed,
        "default_weight": default,
        "entries": entries,
    }
    if truth is not None:
        doc["truth"] = list(truth.labels)
    return doc


def tensor_from_json(doc: dict) -> WeightTensor:
    try:
        cfg = ModelConfig.from_dict(doc["config"])
        entries = doc["entries"]
    except KeyError as exc:
        raise InvalidConfigError(f"weight file is missing field {exc.args[0]!r}") from None
    default = doc.get("default_weight")
    values = np.full(cfg.num_subsets, np.nan if default is None else float(default))
    from .combinatorics import subset_rank

    for row in entries:
        if len(row) != cfg.m + 1:
            raise ConfigMismatchError(f"entry {row} should hold {cfg.m} node ids and a weight")
        values[subset_rank(row[:-1], cfg.n, cfg.m)] = float(row[-1])
    if np.isnan(values).any():
        raise ConfigMismatchError("dense weight file is missing entries")
    return WeightTensor(cfg, values)


def hypothesis_from_json(doc: Any, r: int, k: int) -> Hypothesis:
    """Accepts a bare label list, ``{"labels": [...]}``, or a weight document with ``truth``."""
    if isinstance(doc, dict):
        labels = doc.get("labels", doc.get("truth"))
        if labels is None:
            raise InvalidConfigError("truth document needs a 'labels' or 'truth' field")
    else:
        labels = doc
    return Hypothesis(tuple(int(v) for v in labels), r, k)
