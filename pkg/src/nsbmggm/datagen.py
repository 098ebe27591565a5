"""Synthetic graphs, precision matrices and Gaussian samples."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .linalg import cholesky, invert_spd, min_eig_sym

SBM_WITHIN = 0.25
SBM_BETWEEN = 0.02
SBM_BLOCKS = 5
HUB_GROUP = 10
BAND_WIDTH = 3
DEGREE_RETRIES = 100


class GraphKind(str, enum.Enum):
    SBM = "sbm"
    HUB = "hub"
    BAND = "band"
    SCALE_FREE = "scale_free"
    MAX_DEGREE = "max_degree"


@dataclass
class GraphSpec:
    kind: GraphKind
    p: int
    seed: int = 0
    blocks: int = SBM_BLOCKS
    connectivity: list | None = None  # blocks x blocks; None uses the defaults
    group_size: int = HUB_GROUP
    width: int = BAND_WIDTH
    max_degree: int = 3

    def __post_init__(self):
        self.kind = GraphKind(self.kind)
        if self.p < 2:
            raise ValueError("p must be >= 2")
        for name in ("blocks", "group_size", "width", "max_degree"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.connectivity is not None:
            c = np.asarray(self.connectivity, dtype=float)
            if c.shape != (self.blocks, self.blocks) or not np.allclose(c, c.T):
                raise ValueError("connectivity must be a symmetric blocks x blocks matrix")
            if np.any((c < 0) | (c > 1)):
                raise ValueError("connectivity entries must be probabilities")


@dataclass(frozen=True)
class PrecisionSpec:
    gamma: float = 0.3
    beta: float = 0.2

    def __post_init__(self):
        if not (self.gamma > 0 and self.beta > 0):
            raise ValueError("gamma and beta must be positive")


def sbm_labels(p: int, blocks: int) -> np.ndarray:
    """Consecutive blocks of (almost) equal size."""
    return (np.arange(p) * blocks) // p


def _symmetrize_upper(upper: np.ndarray) -> np.ndarray:
    a = np.triu(upper, 1).astype(np.uint8)
    return a | a.T


def sbm_graph(p, blocks, connectivity, rng) -> np.ndarray:
    if connectivity is None:
        connectivity = np.full((blocks, blocks), SBM_BETWEEN)
        np.fill_diagonal(connectivity, SBM_WITHIN)
    c = np.asarray(connectivity, dtype=float)
    z = sbm_labels(p, blocks)
    return _symmetrize_upper(rng.random((p, p)) < c[z][:, z])


def hub_graph(p, group_size) -> np.ndarray:
    """Each run of ``group_size`` nodes is a star around its first node."""
    a = np.zeros((p, p), dtype=np.uint8)
    for start in range(0, p, group_size):
        members = np.arange(start, min(start + group_size, p))
        a[members[0], members[1:]] = 1
        a[members[1:], members[0]] = 1
    return a


def band_graph(p, width) -> np.ndarray:
    d = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return ((d >= 1) & (d <= width)).astype(np.uint8)


def scale_free_graph(p, rng) -> np.ndarray:
    """Preferential attachment tree grown from two connected nodes."""
    a = np.zeros((p, p), dtype=np.uint8)
    a[0, 1] = a[1, 0] = 1
    deg = np.zeros(p)
    deg[:2] = 1
    for v in range(2, p):
        u = int(rng.choice(v, p=deg[:v] / deg[:v].sum()))
        a[u, v] = a[v, u] = 1
        deg[u] += 1
        deg[v] = 1
    return a


def is_graphical(degrees) -> bool:
    """Erdos-Gallai test."""
    d = np.sort(np.asarray(degrees, dtype=np.int64))[::-1]
    n = len(d)
    if d.sum() % 2 or (n and (d[0] >= n or d[-1] < 0)):
        return False
    csum = np.cumsum(d)
    for k in range(1, n + 1):
        rhs = k * (k - 1) + np.minimum(d[k:], k).sum()
        if csum[k - 1] > rhs:
            return False
    return True


def havel_hakimi(degrees) -> np.ndarray:
    """Realize a graphical degree sequence; raises ValueError otherwise."""
    deg = np.asarray(degrees, dtype=np.int64).copy()
    n = len(deg)
    a = np.zeros((n, n), dtype=np.uint8)
    remaining = deg.copy()
    while True:
        order = np.lexsort((np.arange(n), -remaining))
        v = order[0]
        k = remaining[v]
        if k == 0:
            break
        targets = order[1:k + 1]
        if len(targets) < k or remaining[targets].min() <= 0:
            raise ValueError("degree sequence is not graphical")
        a[v, targets] = a[targets, v] = 1
        remaining[targets] -= 1
        remaining[v] = 0
    return a


def rewire(a, rng, n_swaps: int | None = None) -> np.ndarray:
    """Degree-preserving double edge swaps."""
    a = a.copy()
    iu = np.triu_indices(len(a), 1)
    edges = [tuple(e) for e in np.column_stack(iu)[a[iu] == 1]]
    m = len(edges)
    if m < 2:
        return a
    n_swaps = 10 * m if n_swaps is None else n_swaps
    for _ in range(n_swaps):
        i1, i2 = rng.choice(m, size=2, replace=False)
        (u, v), (x, y) = edges[i1], edges[i2]
        if rng.random() < 0.5:
            x, y = y, x
        if len({u, v, x, y}) < 4 or a[u, x] or a[v, y]:
            continue
        a[u, v] = a[v, u] = a[x, y] = a[y, x] = 0
        a[u, x] = a[x, u] = a[v, y] = a[y, v] = 1
        edges[i1], edges[i2] = (u, x), (v, y)
    return a


def power_law_degrees(p, s, rng, exponent: float = 2.0) -> np.ndarray:
    support = np.arange(1, s + 1)
    mass = support.astype(float) ** -exponent
    return rng.choice(support, size=p, p=mass / mass.sum())


def max_degree_graph(p, s, rng) -> np.ndarray:
    """Power-law degrees on ``{1..s}`` with the largest one pinned to ``s``, so the maximum degree is ``s``."""
    s = min(s, p - 1)
    for _ in range(DEGREE_RETRIES):
        deg = power_law_degrees(p, s, rng)
        deg[np.argmax(deg)] = s
        if is_graphical(deg):
            return rewire(havel_hakimi(deg), rng)
    raise ValueError(f"no graphical power-law degree sequence after {DEGREE_RETRIES} draws (p={p}, s={s})")


def gen_graph(spec: GraphSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    kind = spec.kind
    if kind is GraphKind.SBM:
        return sbm_graph(spec.p, spec.blocks, spec.connectivity, rng)
    if kind is GraphKind.HUB:
        return hub_graph(spec.p, spec.group_size)
    if kind is GraphKind.BAND:
        return band_graph(spec.p, spec.width)
    if kind is GraphKind.SCALE_FREE:
        return scale_free_graph(spec.p, rng)
    return max_degree_graph(spec.p, spec.max_degree, rng)


def precision_from_graph(a, spec: PrecisionSpec = PrecisionSpec()):
    """``Omega = gamma A + (|lambda_min(gamma A)| + beta) I`` and its inverse."""
    a = np.asarray(a, dtype=float)
    ga = spec.gamma * a
    shift = abs(min_eig_sym(ga)) + spec.beta if ga.any() else spec.beta
    omega = ga + shift * np.eye(len(a))
    return omega, invert_spd(omega)


def sample_gaussian(sigma, n: int, seed) -> np.ndarray:
    """``n`` rows N(0, sigma) drawn as ``E @ L.T`` with ``L`` the Cholesky factor."""
    low = cholesky(sigma)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.standard_normal((n, len(low))) @ low.T
