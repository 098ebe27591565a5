"""YAML experiment configuration.

Schema (all keys optional unless marked)::

    graph:            # required
      kind: sbm | hub | band | scale_free | max_degree   # required
      p: 50                                             # required
      seed: 0         # graph seed; the truth is shared by all replicates
      blocks: 5
      connectivity: [[...], ...]   # blocks x blocks, sbm only
      group_size: 10               # hub
      width: 3                     # band
      max_degree: 3                # max_degree
    precision: {gamma: 0.3, beta: 0.2}
    n: 100
    statistic: ztransform | nodewise
    nsbm_variant: gaussian | nig
    alpha: 0.1        # default depends on graph kind
    replicates: 10
    seed: 0
    output: rows.csv  # summary goes next to it as <stem>_summary.csv
    procedures: [nsbm, bh]
    lam: null         # nodewise lasso penalty, null = 2 sqrt(log p / n)
    record_runtime: true
    greedy: {q_init: null, max_sweeps: 100, restarts: 3, merge: true}
    grid: [3, 8, 15]  # sweep-maxdegree only
"""
from __future__ import annotations

import copy
from dataclasses import fields

import yaml

from .datagen import GraphSpec, PrecisionSpec
from .experiment import ConfigError, ExperimentConfig

TOP_KEYS = {f.name for f in fields(ExperimentConfig)} | {"grid"}
GRAPH_KEYS = {f.name for f in fields(GraphSpec)}
PRECISION_KEYS = {f.name for f in fields(PrecisionSpec)}
INT_KEYS = {"n", "replicates", "seed"}


def load_yaml(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    return raw


def _section(raw: dict, key: str, allowed: set, required=()) -> dict:
    sec = raw.get(key, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{key}: must be a mapping")
    for k in sec:
        if k not in allowed:
            raise ConfigError(f"{key}.{k}: unknown field")
    for k in required:
        if k not in sec:
            raise ConfigError(f"{key}.{k}: required field missing")
    return dict(sec)


def build_config(raw: dict, overrides: dict | None = None) -> tuple[ExperimentConfig, dict]:
    """Validate a parsed mapping; returns the config and the leftover ``grid``."""
    raw = copy.deepcopy(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    for k in raw:
        if k not in TOP_KEYS:
            raise ConfigError(f"{k}: unknown field")
    if "graph" not in raw:
        raise ConfigError("graph: required field missing")
    g = _section(raw, "graph", GRAPH_KEYS, required=("kind", "p"))
    prec = _section(raw, "precision", PRECISION_KEYS)
    greedy = _section(raw, "greedy", {"q_init", "max_sweeps", "restarts", "merge", "check_deltas"})
    for k in INT_KEYS:
        if k in raw and (not isinstance(raw[k], int) or isinstance(raw[k], bool)):
            raise ConfigError(f"{k}: expected an integer, got {raw[k]!r}")
    try:
        graph = GraphSpec(**g)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"graph: {exc}") from exc
    try:
        precision = PrecisionSpec(**prec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"precision: {exc}") from exc
    kwargs = {k: v for k, v in raw.items() if k not in {"graph", "precision", "greedy", "grid"}}
    if "procedures" in kwargs and not isinstance(kwargs["procedures"], (list, tuple)):
        raise ConfigError("procedures: expected a list")
    try:
        cfg = ExperimentConfig(graph=graph, precision=precision, greedy=greedy, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from exc
    extra = {}
    if "grid" in raw:
        grid = raw["grid"]
        if not isinstance(grid, list) or not grid or not all(isinstance(s, int) and s >= 1 for s in grid):
            raise ConfigError("grid: expected a non-empty list of positive integers")
        extra["grid"] = grid
    return cfg, extra
