"""Latent state of the noisy SBM and the block-pair count statistics.

Blocks are labelled ``0..Q-1``. Count matrices are ``Q x Q`` and symmetric;
the diagonal cell ``(q, q)`` refers to pairs of distinct nodes inside block
``q``. Sums of observations are stored instead of variances so that a node
swap only touches the cells of the two blocks involved.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class Hyperparams:
    """Prior hyperparameters.

    ``n0`` is the Dirichlet parameter, ``eta0``/``xi0`` the Beta parameters
    of the connection probabilities, ``rho0``/``tau0sq`` the Gaussian prior on
    alternative means and ``sigma_sq`` the known alternative variance. The
    normal-inverse-Gamma variant uses ``a0, b0, c0, d0`` instead of the last
    three.
    """

    n0: float = 1.0
    eta0: float = 1.0
    xi0: float = 1.0
    rho0: float = 0.0
    tau0sq: float = 1.0
    sigma_sq: float = 1.0
    a0: float = 0.0
    b0: float = 1.0
    c0: float = 1.0
    d0: float = 1.0

    def __post_init__(self):
        for name in ("n0", "eta0", "xi0", "tau0sq", "sigma_sq", "b0", "c0", "d0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"hyperparameter {name} must be > 0, got {value!r}")
        for name in ("rho0", "a0"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"hyperparameter {name} must be finite")


def as_observation(x) -> np.ndarray:
    """Validate a symmetric matrix of edge statistics; returns a float copy
    whose diagonal is zeroed."""
    x = np.array(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"observation matrix must be square, got shape {x.shape}")
    np.fill_diagonal(x, 0.0)
    if not np.all(np.isfinite(x)):
        raise ValueError("observation matrix has non-finite entries")
    if not np.array_equal(x, x.T):
        raise ValueError("observation matrix must be symmetric")
    return x


def compact_labels(z) -> np.ndarray:
    """Relabel so that labels are ``0..Q-1``, keeping their relative order."""
    _, inv = np.unique(np.asarray(z), return_inverse=True)
    return inv.astype(np.int64)


def one_hot(z, q: int) -> np.ndarray:
    out = np.zeros((len(z), q))
    out[np.arange(len(z)), z] = 1.0
    return out


@dataclass
class LatentState:
    """Clustering ``z`` and binary hollow symmetric adjacency ``a``."""

    z: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.int64)
        self.a = np.asarray(self.a, dtype=np.uint8)
        p = len(self.z)
        if self.a.shape != (p, p):
            raise ValueError(f"adjacency shape {self.a.shape} does not match {p} nodes")
        if np.any(np.diag(self.a)) or not np.array_equal(self.a, self.a.T):
            raise ValueError("adjacency must be symmetric with an empty diagonal")
        if p and (self.z.min() < 0):
            raise ValueError("block labels must be non-negative")

    @property
    def p(self) -> int:
        return len(self.z)

    @property
    def q(self) -> int:
        return int(self.z.max()) + 1 if len(self.z) else 0

    def copy(self) -> "LatentState":
        return LatentState(self.z.copy(), self.a.copy())


def possible_pairs(n: np.ndarray) -> np.ndarray:
    """``n_q n_l`` off the diagonal and ``n_q (n_q - 1) / 2`` on it."""
    n = np.asarray(n, dtype=np.int64)
    m = np.outer(n, n)
    np.fill_diagonal(m, n * (n - 1) // 2)
    return m


@dataclass
class CountStats:
    n: np.ndarray  # nodes per block
    n1: np.ndarray  # present edges per block pair
    n0: np.ndarray  # absent edges per block pair
    m: np.ndarray  # possible pairs per block pair
    sx: np.ndarray  # sum of X over present edges
    sxx: np.ndarray  # sum of X^2 over present edges
    total_sq_null: float  # sum of X^2 over absent edges
    mA: int  # total number of present edges

    @property
    def q(self) -> int:
        return len(self.n)

    @property
    def p(self) -> int:
        return int(self.n.sum())

    @property
    def n_nonempty(self) -> int:
        return int(np.count_nonzero(self.n))

    def copy(self) -> "CountStats":
        return replace(
            self,
            n=self.n.copy(),
            n1=self.n1.copy(),
            n0=self.n0.copy(),
            m=self.m.copy(),
            sx=self.sx.copy(),
            sxx=self.sxx.copy(),
        )


def _pair_sum(weights: np.ndarray, zh: np.ndarray) -> np.ndarray:
    """Sum ``weights[i, j]`` over pairs ``i < j`` by block pair (symmetric)."""
    upper = zh.T @ np.triu(weights, 1) @ zh
    return upper + upper.T - np.diag(np.diag(upper))


def compute_count_stats(x: np.ndarray, state: LatentState, q: int | None = None) -> CountStats:
    """Tally all count statistics from scratch.

    ``q`` defaults to ``state.q``; a larger value leaves trailing empty blocks.
    """
    p = state.p
    if x.shape != (p, p):
        raise ValueError(f"observation shape {x.shape} does not match {p} nodes")
    q = state.q if q is None else q
    zh = one_hot(state.z, q)
    a = state.a.astype(float)
    n = np.bincount(state.z, minlength=q).astype(np.int64)
    n1 = np.rint(_pair_sum(a, zh)).astype(np.int64)
    sx = _pair_sum(a * x, zh)
    sxx = _pair_sum(a * x * x, zh)
    m = possible_pairs(n)
    iu = np.triu_indices(p, 1)
    absent = 1.0 - a[iu]
    return CountStats(
        n=n,
        n1=n1,
        n0=m - n1,
        m=m,
        sx=sx,
        sxx=sxx,
        total_sq_null=float(np.sum(absent * x[iu] ** 2)),
        mA=int(state.a[iu].sum()),
    )


def pair_moments(n1, sx, sxx):
    """Vectorised ``(count, mean, population variance)``; zeros for empty cells."""
    n1 = np.asarray(n1, dtype=float)
    safe = np.where(n1 > 0, n1, 1.0)
    mean = np.where(n1 > 0, sx / safe, 0.0)
    var = np.where(n1 > 0, np.maximum(sxx / safe - mean**2, 0.0), 0.0)
    return n1, mean, var


def variance_of_pair(stats: CountStats, q: int, l: int) -> tuple[int, float, float]:
    n1, mean, var = pair_moments(stats.n1[q, l], stats.sx[q, l], stats.sxx[q, l])
    return int(n1), float(mean), float(var)


@dataclass
class SwapContext:
    """Everything needed to update the counts when ``istar`` moves ``g -> h``.

    The per-block vectors count the neighbours of ``istar`` among the other
    nodes (``istar`` itself excluded) in the old row ``a_old`` and the
    proposed row ``a_new``.
    """

    istar: int
    g: int
    h: int
    a_old: np.ndarray
    a_new: np.ndarray
    cnt_old: np.ndarray
    sx_old: np.ndarray
    sxx_old: np.ndarray
    cnt_new: np.ndarray
    sx_new: np.ndarray
    sxx_new: np.ndarray
    null_sq_change: float  # change of sum_{absent} X^2
    edge_change: int  # change of the total edge count


def make_swap_context(x, state: LatentState, istar: int, h: int, a_new, q: int | None = None) -> SwapContext:
    q = state.q if q is None else q
    g = int(state.z[istar])
    a_old = state.a[istar].astype(np.int64)
    a_new = np.asarray(a_new, dtype=np.int64).copy()
    a_new[istar] = 0
    row = x[istar]
    others = np.ones(state.p, dtype=bool)
    others[istar] = False
    zo = state.z[others]
    ro = row[others]

    def tally(a_row):
        w = a_row[others].astype(float)
        return (
            np.rint(np.bincount(zo, weights=w, minlength=q)).astype(np.int64),
            np.bincount(zo, weights=w * ro, minlength=q),
            np.bincount(zo, weights=w * ro * ro, minlength=q),
        )

    cnt_old, sx_old, sxx_old = tally(a_old)
    cnt_new, sx_new, sxx_new = tally(a_new)
    diff = a_old - a_new
    return SwapContext(
        istar=int(istar),
        g=g,
        h=int(h),
        a_old=a_old,
        a_new=a_new,
        cnt_old=cnt_old,
        sx_old=sx_old,
        sxx_old=sxx_old,
        cnt_new=cnt_new,
        sx_new=sx_new,
        sxx_new=sxx_new,
        null_sq_change=float(np.sum(diff * row * row)),
        edge_change=int(-diff.sum()),
    )


def swapped_rows(stats: CountStats, ctx: SwapContext):
    """Post-swap values of rows ``g`` and ``h``.

    Returns ``(n, rows)`` where ``n`` is the new node-count vector and
    ``rows[k]`` for ``k`` in ``n1, sx, sxx`` is a ``2 x Q`` array holding the
    new rows ``g`` and ``h``.
    """
    g, h = ctx.g, ctx.h
    n = stats.n.copy()
    n[g] -= 1
    n[h] += 1
    rows = {}
    for name, old, new in (
        ("n1", ctx.cnt_old, ctx.cnt_new),
        ("sx", ctx.sx_old, ctx.sx_new),
        ("sxx", ctx.sxx_old, ctx.sxx_new),
    ):
        mat = getattr(stats, name)
        row_g = mat[g] - old
        row_g[h] += new[g]
        row_h = mat[h] + new
        row_h[g] = row_g[h]
        rows[name] = np.vstack([row_g, row_h])
    return n, rows


def apply_swap(stats: CountStats, ctx: SwapContext) -> CountStats:
    """Incrementally updated statistics after moving ``ctx.istar`` to ``ctx.h``.

    Only the rows and columns ``g`` and ``h`` of the pair matrices change.
    """
    if ctx.g == ctx.h:
        return stats
    g, h = ctx.g, ctx.h
    n, rows = swapped_rows(stats, ctx)
    out = stats.copy()
    out.n = n
    for name in ("n1", "sx", "sxx"):
        mat = getattr(out, name)
        for k, b in enumerate((g, h)):
            mat[b, :] = rows[name][k]
            mat[:, b] = rows[name][k]
    out.m = possible_pairs(n)
    out.n0 = out.m - out.n1
    out.total_sq_null = stats.total_sq_null + ctx.null_sq_change
    out.mA = stats.mA + ctx.edge_change
    return out


def merge_vmask(z, g: int, h: int) -> np.ndarray:
    """Boolean ``p x p`` mask of the pairs touching a node of block g or h."""
    in_gh = (z == g) | (z == h)
    mask = in_gh[:, None] | in_gh[None, :]
    np.fill_diagonal(mask, False)
    return mask


def apply_merge(stats: CountStats, x, z, g: int, h: int, a_merge) -> CountStats:
    """Statistics after absorbing block ``g`` into ``h`` with adjacency ``a_merge``.

    ``z`` is the clustering before the merge and ``a_merge`` the full
    adjacency after it; ``a_merge`` may only differ from the pre-merge
    adjacency on pairs touching ``g`` or ``h``. Block ``g`` is left empty.
    """
    if g == h:
        raise ValueError("cannot merge a block with itself")
    z = np.asarray(z)
    a_merge = np.asarray(a_merge)
    nodes = np.flatnonzero((z == g) | (z == h))
    z_m = np.where(z == g, h, z)
    q = stats.q
    zh = one_hot(z_m, q)
    rows = a_merge[nodes].astype(float)
    xr = x[nodes]
    new = {}
    for name, w in (("n1", rows), ("sx", rows * xr), ("sxx", rows * xr * xr)):
        per_block = w.sum(axis=0) @ zh
        # pairs inside the merged block are seen from both endpoints
        per_block[h] /= 2.0
        new[name] = per_block
    out = stats.copy()
    out.n = stats.n.copy()
    out.n[h] += out.n[g]
    out.n[g] = 0
    for name in ("n1", "sx", "sxx"):
        mat = getattr(out, name)
        row = np.rint(new[name]).astype(np.int64) if name == "n1" else new[name]
        mat[h, :] = row
        mat[:, h] = row
        mat[g, :] = 0
        mat[:, g] = 0
    out.m = possible_pairs(out.n)
    out.n0 = out.m - out.n1
    # Pairs touching g or h live in rows g, h before and in row h after.
    old_n1 = stats.n1[g].sum() + stats.n1[h].sum() - stats.n1[g, h]
    old_sxx = stats.sxx[g].sum() + stats.sxx[h].sum() - stats.sxx[g, h]
    out.total_sq_null = stats.total_sq_null + float(old_sxx - out.sxx[h].sum())
    out.mA = int(stats.mA + out.n1[h].sum() - old_n1)
    return out


def drop_block(stats: CountStats, g: int) -> CountStats:
    """Remove the (empty) block ``g`` and shift the following labels down."""
    if stats.n[g] != 0:
        raise ValueError(f"block {g} still holds {stats.n[g]} nodes")
    keep = np.array([b for b in range(stats.q) if b != g], dtype=np.int64)
    sub = np.ix_(keep, keep)
    return replace(
        stats,
        n=stats.n[keep],
        n1=stats.n1[sub],
        n0=stats.n0[sub],
        m=stats.m[sub],
        sx=stats.sx[sub],
        sxx=stats.sxx[sub],
    )
