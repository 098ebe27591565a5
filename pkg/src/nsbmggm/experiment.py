"""Replicated simulation experiments and single-data-set inference."""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .datagen import GraphKind, GraphSpec, PrecisionSpec, gen_graph, precision_from_graph, sample_gaussian
from .ggmstats import nodewise_residual_stats, pvalues_from_normal, ztransform_stats
from .greedy import FitResult, GreedyConfig, greedy_fit
from .icl import Variant
from .model import Hyperparams
from .mtp import fdp_tdp, rejection_to_adjacency, select_edges

PROCEDURES = ("nsbm", "bh")
STATISTICS = ("ztransform", "nodewise")
ROW_HEADER = ["replicate", "procedure", "fdp", "tdp", "q_hat", "icl", "runtime_ms"]
SUMMARY_HEADER = ["procedure", "replicates", "fdr", "tdr"]
DEFAULT_ALPHA = {
    GraphKind.SBM: 0.1,
    GraphKind.HUB: 0.1,
    GraphKind.BAND: 0.05,
    GraphKind.SCALE_FREE: 0.05,
    GraphKind.MAX_DEGREE: 0.1,
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    graph: GraphSpec
    precision: PrecisionSpec = field(default_factory=PrecisionSpec)
    n: int = 100
    statistic: str = "ztransform"
    nsbm_variant: Variant = Variant.GAUSSIAN
    alpha: float | None = None
    replicates: int = 10
    seed: int = 0
    output: str | None = None
    procedures: tuple = PROCEDURES
    lam: float | None = None
    greedy: dict = field(default_factory=dict)
    record_runtime: bool = True

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ConfigError(f"statistic: expected one of {STATISTICS}, got {self.statistic!r}")
        try:
            self.nsbm_variant = Variant(self.nsbm_variant)
        except ValueError:
            raise ConfigError(f"nsbm_variant: unknown variant {self.nsbm_variant!r}") from None
        if self.alpha is None:
            self.alpha = DEFAULT_ALPHA[self.graph.kind]
        if not 0.0 < float(self.alpha) < 1.0:
            raise ConfigError(f"alpha: must lie in (0, 1), got {self.alpha}")
        if int(self.replicates) < 1:
            raise ConfigError("replicates: must be >= 1")
        if int(self.n) < 2:
            raise ConfigError("n: must be >= 2")
        bad = [p for p in self.procedures if p not in PROCEDURES]
        if bad or not self.procedures:
            raise ConfigError(f"procedures: expected a non-empty subset of {PROCEDURES}, got {list(self.procedures)}")
        self.procedures = tuple(self.procedures)
        known = {f.name for f in fields(GreedyConfig)} - {"seed", "variant"}
        extra = set(self.greedy) - known
        if extra:
            raise ConfigError(f"greedy.{sorted(extra)[0]}: unknown option")


def compute_statistics(y, statistic: str, lam=None) -> np.ndarray:
    if statistic == "ztransform":
        return ztransform_stats(y)
    return nodewise_residual_stats(y, lam)


def infer_graph(x, alpha: float, variant=Variant.GAUSSIAN, greedy=None, seed: int = 0, hp=None):
    """NSBM fit followed by l-value selection; returns (adjacency, fit)."""
    cfg = GreedyConfig(variant=variant, seed=seed, **(greedy or {}))
    fit, _ = greedy_fit(x, cfg, hp or Hyperparams())
    rej = select_edges(fit.lvalues, alpha, "lvalue")
    return rejection_to_adjacency(rej, len(x)), fit


def bh_graph(x, alpha: float) -> np.ndarray:
    return rejection_to_adjacency(select_edges(pvalues_from_normal(x), alpha, "bh"), len(x))


def replicate_seed(seed: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(r)])


def truth_for(cfg: ExperimentConfig):
    a = gen_graph(cfg.graph)
    _, sigma = precision_from_graph(a, cfg.precision)
    return a, sigma


def run_replicate(cfg: ExperimentConfig, r: int, truth=None) -> list[dict]:
    a_true, sigma = truth if truth is not None else truth_for(cfg)
    data_seq, fit_seq = replicate_seed(cfg.seed, r).spawn(2)
    y = sample_gaussian(sigma, cfg.n, np.random.default_rng(data_seq))
    x = compute_statistics(y, cfg.statistic, cfg.lam)
    rows = []
    for proc in cfg.procedures:
        t0 = time.perf_counter()
        if proc == "nsbm":
            fit_seed = int(fit_seq.generate_state(1)[0])
            est, fit = infer_graph(x, cfg.alpha, cfg.nsbm_variant, cfg.greedy, fit_seed)
            q_hat, icl = fit.q, fit.icl.total
        else:
            est, q_hat, icl = bh_graph(x, cfg.alpha), None, None
        ms = (time.perf_counter() - t0) * 1000.0 if cfg.record_runtime else 0.0
        fdp, tdp = fdp_tdp(est, a_true)
        rows.append(dict(replicate=r, procedure=proc, fdp=fdp, tdp=tdp, q_hat=q_hat, icl=icl, runtime_ms=ms))
    return rows


def _worker(args):
    cfg, r, truth = args
    return run_replicate(cfg, r, truth)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[dict]:
    """All replicate rows, in replicate order regardless of ``workers``."""
    truth = truth_for(cfg)
    jobs = [(cfg, r, truth) for r in range(cfg.replicates)]
    if workers <= 1:
        chunks = [_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_worker, jobs))
    return [row for chunk in chunks for row in chunk]


def summarize(rows: list[dict], procedures=PROCEDURES) -> list[dict]:
    out = []
    for proc in procedures:
        sel = [r for r in rows if r["procedure"] == proc]
        if not sel:
            continue
        out.append(
            dict(
                procedure=proc,
                replicates=len(sel),
                fdr=float(np.mean([r["fdp"] for r in sel])),
                tdr=float(np.mean([r["tdp"] for r in sel])),
            )
        )
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "%.10g" % v
    return str(v)


def rows_to_csv(rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row.get(k)) for k in header])
    return buf.getvalue()
