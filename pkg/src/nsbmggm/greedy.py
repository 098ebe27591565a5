"""Greedy node-swap maximisation of the exact ICL.

Each sweep visits the nodes in a fresh random order. For the visited node the
ICL difference of moving it to every other block is evaluated from the
count statistics of the two blocks involved; the best strictly improving move
is applied, after which the parameter estimates of the affected block pairs
and the edge posteriors are refreshed. Blocks that empty are removed, so the
number of blocks only decreases.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.special import gammaln

from .icl import IclValue, Variant, icl_total, noise_pair_terms, sbm_pair_terms
from .merge import ACCEPT_TOL, merge_pass, partial_update
from .model import (
    CountStats,
    Hyperparams,
    LatentState,
    SwapContext,
    apply_swap,
    as_observation,
    compact_labels,
    compute_count_stats,
    drop_block,
    make_swap_context,
    possible_pairs,
    swapped_rows,
)
from .posterior import (
    ModelParams,
    edge_posterior,
    estimate_params,
    lvalue_matrix,
    posterior_rows,
    threshold_graph,
)

logger = logging.getLogger(__name__)

INIT_THRESHOLD = 2.0


@dataclass
class GreedyConfig:
    q_init: int | None = None  # None: min(ceil(sqrt(p)) + 2, p)
    max_sweeps: int = 100
    restarts: int = 3
    seed: int = 0
    variant: Variant = Variant.GAUSSIAN
    merge: bool = True
    check_deltas: bool = False

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.q_init is not None and self.q_init < 1:
            raise ValueError("q_init must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class FitTrace:
    icl_per_accepted_move: list[float] = field(default_factory=list)
    final_q: int = 0
    sweeps_used: int = 0
    merges: int = 0


@dataclass
class FitResult:
    z: np.ndarray
    a: np.ndarray
    q: int
    params: ModelParams
    rho: np.ndarray
    lvalues: np.ndarray
    icl: IclValue
    trace: FitTrace


def default_q_init(p: int) -> int:
    return min(math.ceil(math.sqrt(p)) + 2, p)


def _initial_labels(x, q_init: int, rng: np.random.Generator) -> np.ndarray:
    p = len(x)
    if q_init <= 1:
        return np.zeros(p, dtype=np.int64)
    data = np.abs(x)
    if np.ptp(data, axis=0).max() == 0.0:
        return np.zeros(p, dtype=np.int64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            _, labels = kmeans2(data, q_init, minit="++", rng=rng)
        except (ValueError, np.linalg.LinAlgError):
            labels = rng.integers(q_init, size=p)
    return compact_labels(labels)


def init_state(x, cfg: GreedyConfig, hp: Hyperparams | None = None, rng=None):
    """Threshold ``|X| > 2`` for ``A``, k-means on rows of ``|X|`` for ``Z``.

    Returns ``(state, params, rho)`` with the parameters estimated using
    ``A`` as weights and ``rho`` the resulting edge posteriors.
    """
    hp = hp or Hyperparams()
    x = as_observation(x)
    p = len(x)
    if p < 2:
        raise ValueError("need at least two nodes")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    q_init = min(cfg.q_init or default_q_init(p), p)
    a = (np.abs(x) > INIT_THRESHOLD).astype(np.uint8)
    np.fill_diagonal(a, 0)
    z = _initial_labels(x, q_init, rng)
    params = estimate_params(x, z, a, hp, cfg.variant)
    rho = edge_posterior(x, z, params)
    return LatentState(z, a), params, rho


def propose_adjacency_row(istar: int, h: int, x, z, params: ModelParams):
    """Thresholded and raw posterior row of ``istar`` if it were in block ``h``."""
    post = posterior_rows(x[istar], z, params, [h])[0]
    post[istar] = 0.0
    return (post > 0.5).astype(np.uint8), post


def dirichlet_swap_change(n, g: int, h: int, n0: float) -> float:
    """Change of the Dirichlet part of the ICL when one node moves ``g -> h``."""
    if n[g] > 1:
        return math.log((n0 + n[h]) / (n0 + n[g] - 1))
    q = int(np.count_nonzero(n))
    p = int(np.sum(n))
    return float(
        math.log((n0 + n[h]) / n0)
        + gammaln(q * n0 + p)
        + gammaln((q - 1) * n0)
        - gammaln((q - 1) * n0 + p)
        - gammaln(q * n0)
    )


def _swap_cells(stats: CountStats, ctx: SwapContext):
    """Old and new values over the relevant block pairs (row g, row h minus (h, g))."""
    g, h = ctx.g, ctx.h
    n_new, rows = swapped_rows(stats, ctx)
    cols_h = np.array([l for l in range(stats.q) if l != g], dtype=np.int64)
    m_new = possible_pairs(n_new)
    old = {k: np.concatenate([getattr(stats, k)[g], getattr(stats, k)[h, cols_h]]) for k in ("n1", "m", "sx", "sxx")}
    new = {k: np.concatenate([rows[k][0], rows[k][1][cols_h]]) for k in ("n1", "sx", "sxx")}
    new["m"] = np.concatenate([m_new[g], m_new[h, cols_h]])
    return old, new


def _delta_swap(stats: CountStats, ctx: SwapContext, hp: Hyperparams, variant: Variant) -> float:
    if ctx.g == ctx.h:
        return 0.0
    old, new = _swap_cells(stats, ctx)
    sbm = dirichlet_swap_change(stats.n, ctx.g, ctx.h, hp.n0) + float(
        np.sum(sbm_pair_terms(new["n1"], new["m"] - new["n1"], hp))
        - np.sum(sbm_pair_terms(old["n1"], old["m"] - old["n1"], hp))
    )
    noise = -0.5 * ctx.null_sq_change + float(
        np.sum(noise_pair_terms(variant, new["n1"], new["sx"], new["sxx"], hp))
        - np.sum(noise_pair_terms(variant, old["n1"], old["sx"], old["sxx"], hp))
    )
    return sbm + noise


def delta_swap_gaussian(stats: CountStats, ctx: SwapContext, hp: Hyperparams) -> float:
    return _delta_swap(stats, ctx, hp, Variant.GAUSSIAN)


def delta_swap_nig(stats: CountStats, ctx: SwapContext, hp: Hyperparams) -> float:
    return _delta_swap(stats, ctx, hp, Variant.NIG)


def _full_icl(x, z, a, hp, variant) -> float:
    return icl_total(variant, compute_count_stats(x, LatentState(z, a)), hp).total


class _Run:
    """Mutable state of one greedy run."""

    def __init__(self, x, state: LatentState, params: ModelParams, rho, hp: Hyperparams, cfg: GreedyConfig):
        self.x = x
        self.state = state.copy()
        self.params = params
        self.rho = rho
        self.hp = hp
        self.cfg = cfg
        self.variant = cfg.variant
        self.stats = compute_count_stats(x, self.state)
        self.icl = icl_total(self.variant, self.stats, hp).total
        self.trace = FitTrace(icl_per_accepted_move=[self.icl])

    def visit(self, istar: int) -> bool:
        x, state, stats = self.x, self.state, self.stats
        g = int(state.z[istar])
        cand = [h for h in range(stats.q) if h != g]
        if not cand:
            return False
        post = posterior_rows(x[istar], state.z, self.params, cand)
        post[:, istar] = 0.0
        rows = (post > 0.5).astype(np.uint8)
        best = None
        for k, h in enumerate(cand):
            ctx = make_swap_context(x, state, istar, h, rows[k], q=stats.q)
            delta = _delta_swap(stats, ctx, self.hp, self.variant)
            if self.cfg.check_deltas:
                z_new = state.z.copy()
                z_new[istar] = h
                a_new = state.a.copy()
                a_new[istar, :] = rows[k]
                a_new[:, istar] = rows[k]
                full = _full_icl(x, z_new, a_new, self.hp, self.variant) - self.icl
                if abs(full - delta) > 1e-8:
                    raise AssertionError(f"swap delta mismatch node {istar} {g}->{h}: {delta} vs {full}")
            if best is None or delta > best[0]:
                best = (delta, ctx, post[k])
        delta, ctx, post_row = best
        if not delta > ACCEPT_TOL:
            return False
        self._accept(ctx, post_row, delta)
        return True

    def _accept(self, ctx: SwapContext, post_row, delta: float):
        istar, g, h = ctx.istar, ctx.g, ctx.h
        z, a = self.state.z, self.state.a
        z[istar] = h
        a[istar, :] = ctx.a_new
        a[:, istar] = ctx.a_new
        self.stats = apply_swap(self.stats, ctx)
        rho = self.rho.copy()
        rho[istar, :] = post_row
        rho[:, istar] = post_row
        touched = [g, h]
        params = self.params
        if self.stats.n[g] == 0:
            self.stats = drop_block(self.stats, g)
            params = params.drop_block(g)
            z[z > g] -= 1
            touched = [h - 1 if h > g else h]
        fresh = estimate_params(self.x, z, rho, self.hp, self.variant, q=self.stats.q)
        self.params = partial_update(params, fresh, touched)
        self.rho = edge_posterior(self.x, z, self.params)
        self.icl += delta
        self.trace.icl_per_accepted_move.append(self.icl)

    def refresh(self) -> bool:
        """Full parameter refresh; keep the re-thresholded ``A`` if it helps."""
        exact = icl_total(self.variant, self.stats, self.hp).total
        if self.cfg.check_deltas and abs(exact - self.icl) > 1e-6:
            raise AssertionError(f"accumulated ICL drifted: {self.icl} vs {exact}")
        self.icl = exact
        z = self.state.z
        self.params = estimate_params(self.x, z, self.rho, self.hp, self.variant, q=self.stats.q)
        self.rho = edge_posterior(self.x, z, self.params)
        a_thr = threshold_graph(self.rho)
        if np.array_equal(a_thr, self.state.a):
            return False
        cand = LatentState(z, a_thr)
        cand_stats = compute_count_stats(self.x, cand)
        cand_icl = icl_total(self.variant, cand_stats, self.hp).total
        if cand_icl > self.icl + ACCEPT_TOL:
            self.state, self.stats, self.icl = cand, cand_stats, cand_icl
            self.trace.icl_per_accepted_move.append(self.icl)
            return True
        return False

    def sweeps(self, rng: np.random.Generator):
        for sweep in range(self.cfg.max_sweeps):
            accepted = 0
            for istar in rng.permutation(self.state.p):
                accepted += self.visit(int(istar))
            changed = self.refresh()
            self.trace.sweeps_used = sweep + 1
            if accepted == 0 and not changed:
                break


def _single_run(x, hp: Hyperparams, cfg: GreedyConfig, rng: np.random.Generator) -> FitResult:
    state, params, rho = init_state(x, cfg, hp, rng)
    run = _Run(x, state, params, rho, hp, cfg)
    run.sweeps(rng)
    state, params, rho, trace = run.state, run.params, run.rho, run.trace
    if cfg.merge and run.stats.q > 1:
        state, params, rho, merge_trace = merge_pass(
            x, state, params, rho, hp, cfg.variant, check_deltas=cfg.check_deltas
        )
        trace.merges = len(merge_trace) - 1
        for value in merge_trace:
            if value > trace.icl_per_accepted_move[-1] + ACCEPT_TOL:
                trace.icl_per_accepted_move.append(value)
    stats = compute_count_stats(x, state)
    trace.final_q = stats.q
    return FitResult(
        z=state.z.copy(),
        a=state.a.copy(),
        q=stats.q,
        params=params,
        rho=rho,
        lvalues=lvalue_matrix(x, state.z, params),
        icl=icl_total(cfg.variant, stats, hp),
        trace=trace,
    )


def greedy_fit(x, cfg: GreedyConfig | None = None, hp: Hyperparams | None = None) -> tuple[FitResult, FitTrace]:
    """Fit the noisy SBM; the restart with the highest ICL wins."""
    cfg = cfg or GreedyConfig()
    hp = hp or Hyperparams()
    x = as_observation(x)
    best = None
    for r, child in enumerate(np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)):
        result = _single_run(x, hp, cfg, np.random.default_rng(child))
        logger.debug("restart %d: Q=%d ICL=%.6f", r, result.q, result.icl.total)
        if best is None or result.icl.total > best.icl.total:
            best = result
    return best, best.trace
