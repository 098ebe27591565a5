"""Edge selection: l-value FDR rule, Benjamini-Hochberg, and FDP/TDP scoring."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RejectionSet:
    """Indices (or node pairs) declared significant at level ``alpha``."""

    pairs: set = field(default_factory=set)
    threshold: float = float("nan")
    alpha: float = float("nan")

    def __len__(self) -> int:
        return len(self.pairs)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _group_ends(sorted_vals: np.ndarray) -> np.ndarray:
    """Boolean mask: position k closes a run of tied values."""
    ends = np.ones(len(sorted_vals), dtype=bool)
    ends[:-1] = sorted_vals[1:] != sorted_vals[:-1]
    return ends


def lvalue_fdr_select(lvalues, alpha: float, keys=None) -> RejectionSet:
    """Reject the largest prefix of sorted l-values whose running mean is <= alpha.

    Tied values are kept together: a prefix may only end after the last
    member of a tie group. ``keys`` label the entries (default: positions).
    """
    alpha = _check_alpha(alpha)
    ell = np.asarray(lvalues, dtype=float).ravel()
    if ell.size == 0:
        return RejectionSet(set(), float("nan"), alpha)
    if np.any((ell < 0) | (ell > 1)):
        raise ValueError("l-values must lie in [0, 1]")
    order = np.argsort(ell, kind="stable")
    s = ell[order]
    means = np.cumsum(s) / np.arange(1, s.size + 1)
    ok = np.flatnonzero((means <= alpha) & _group_ends(s))
    keys = list(range(ell.size)) if keys is None else list(keys)
    if ok.size == 0:
        return RejectionSet(set(), float("nan"), alpha)
    k = int(ok[-1]) + 1
    return RejectionSet({keys[i] for i in order[:k]}, float(s[k - 1]), alpha)


def bh_select(pvalues, alpha: float, keys=None) -> RejectionSet:
    """Benjamini-Hochberg step-up at level ``alpha``."""
    alpha = _check_alpha(alpha)
    pv = np.asarray(pvalues, dtype=float).ravel()
    if pv.size == 0:
        return RejectionSet(set(), float("nan"), alpha)
    m = pv.size
    order = np.argsort(pv, kind="stable")
    s = pv[order]
    passing = np.flatnonzero(s <= alpha * np.arange(1, m + 1) / m)
    keys = list(range(m)) if keys is None else list(keys)
    if passing.size == 0:
        return RejectionSet(set(), float("nan"), alpha)
    k = int(passing[-1]) + 1
    return RejectionSet({keys[i] for i in order[:k]}, alpha * k / m, alpha)


def upper_pairs(p: int):
    iu = np.triu_indices(p, 1)
    return iu, list(zip(iu[0].tolist(), iu[1].tolist()))


def select_edges(matrix, alpha: float, method: str = "lvalue") -> RejectionSet:
    """Run a selector over the upper triangle of a p x p statistic matrix."""
    matrix = np.asarray(matrix, dtype=float)
    iu, keys = upper_pairs(len(matrix))
    vals = matrix[iu]
    if method == "lvalue":
        return lvalue_fdr_select(vals, alpha, keys)
    if method == "bh":
        return bh_select(vals, alpha, keys)
    raise ValueError(f"unknown selection method {method!r}")


def rejection_to_adjacency(rej: RejectionSet, p: int) -> np.ndarray:
    a = np.zeros((p, p), dtype=np.uint8)
    for i, j in rej.pairs:
        a[i, j] = a[j, i] = 1
    return a


def fdp_tdp(rejected, truth) -> tuple[float, float]:
    """False discovery and true discovery proportions against a true adjacency.

    ``rejected`` is a RejectionSet of (i, j) pairs or a p x p binary matrix.
    """
    truth = np.asarray(truth)
    p = len(truth)
    est = rejection_to_adjacency(rejected, p) if isinstance(rejected, RejectionSet) else np.asarray(rejected)
    iu = np.triu_indices(p, 1)
    e, t = est[iu] != 0, truth[iu] != 0
    n_rej, n_true = int(e.sum()), int(t.sum())
    fdp = int((e & ~t).sum()) / max(n_rej, 1)
    tdp = int((e & t).sum()) / n_true if n_true else 0.0
    return fdp, tdp
