"""Closed-form integrated complete-data log-likelihood of the noisy SBM.

Two noise layers are supported: a Gaussian alternative with known variance
and a Gaussian prior on the block-pair means (``Variant.GAUSSIAN``), and an
alternative with unknown block-pair variances under a normal-inverse-Gamma
prior (``Variant.NIG``). Everything is evaluated in log space.

Besides the full criteria, the module exposes per-block-pair contributions
(``*_pair_terms``). Each of them vanishes for a block pair without any
possible node pair, which is what makes the swap and merge differences
reduce to the cells of the blocks involved.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import CountStats, Hyperparams

LOG_2PI = math.log(2.0 * math.pi)


class Variant(str, enum.Enum):
    GAUSSIAN = "gaussian"
    NIG = "nig"


@dataclass(frozen=True)
class IclValue:
    total: float
    sbm_part: float
    noise_part: float


def lbeta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(a + b)


def _upper(stats: CountStats):
    """Upper-triangle cells (q <= l) restricted to non-empty blocks."""
    keep = np.flatnonzero(stats.n > 0)
    sub = np.ix_(keep, keep)
    iu = np.triu_indices(len(keep))
    return tuple(getattr(stats, k)[sub][iu] for k in ("n1", "n0", "sx", "sxx"))


def dirichlet_term(n, n0: float) -> float:
    """log C(n0 + n_1, ..., n0 + n_Q) / C(n0, ..., n0) over non-empty blocks."""
    n = np.asarray(n)
    n = n[n > 0]
    q = len(n)
    p = n.sum()
    return float(np.sum(gammaln(n0 + n)) - gammaln(q * n0 + p) - q * gammaln(n0) + gammaln(q * n0))


def sbm_pair_terms(n1, n0, hp: Hyperparams):
    return lbeta(hp.eta0 + n1, hp.xi0 + n0) - lbeta(hp.eta0, hp.xi0)


def icl_sbm(stats: CountStats, hp: Hyperparams) -> float:
    n1, n0, _, _ = _upper(stats)
    return dirichlet_term(stats.n, hp.n0) + float(np.sum(sbm_pair_terms(n1, n0, hp)))


def _centered_sq(n1, sx, sxx, center):
    """sum over present edges of (X - center)^2, expanded from the sums."""
    return sxx - 2.0 * center * sx + n1 * center**2


def gaussian_pair_terms(n1, sx, sxx, hp: Hyperparams):
    """Per-pair noise contribution, known-variance model.

    Includes the pair's share ``(1 - n_{q,l}) log sigma`` of the global
    ``-(M^A - N_Q) log sigma`` term, so an empty cell contributes exactly 0.
    """
    n1 = np.asarray(n1, dtype=float)
    s2, t2 = hp.sigma_sq, hp.tau0sq
    log_sigma = 0.5 * math.log(s2)
    spread = n1 * sxx - sx * sx  # n^2 S
    return (
        (1.0 - n1) * log_sigma
        - 0.5 * np.log(s2 + t2 * n1)
        - 0.5 * t2 * spread / (s2 * (t2 * n1 + s2))
        - 0.5 * _centered_sq(n1, sx, sxx, hp.rho0) / (s2 + t2 * n1)
    )


def nig_d(n1, sx, sxx, hp: Hyperparams):
    n1 = np.asarray(n1, dtype=float)
    safe = np.where(n1 > 0, n1, 1.0)
    mean = np.where(n1 > 0, sx / safe, 0.0)
    ss = np.where(n1 > 0, np.maximum(sxx - sx * sx / safe, 0.0), 0.0)  # n S
    return hp.d0 + 0.5 * ss + n1 * hp.b0 / (2.0 * (hp.b0 + n1)) * (mean - hp.a0) ** 2


def nig_pair_terms(n1, sx, sxx, hp: Hyperparams):
    """Per-pair noise contribution, unknown-variance model (0 for empty cells)."""
    n1 = np.asarray(n1, dtype=float)
    shape = hp.c0 + 0.5 * n1
    base = gammaln(hp.c0) - 0.5 * math.log(hp.b0) - hp.c0 * math.log(hp.d0)
    return gammaln(shape) - 0.5 * np.log(hp.b0 + n1) - shape * np.log(nig_d(n1, sx, sxx, hp)) - base


def icl_noise_gaussian(stats: CountStats, hp: Hyperparams) -> float:
    p = stats.p
    big_n = p * (p - 1) / 2
    q = stats.n_nonempty
    nq = q * (q + 1) / 2
    n1, _, sx, sxx = _upper(stats)
    n1 = n1.astype(float)
    s2, t2 = hp.sigma_sq, hp.tau0sq
    log_sigma = 0.5 * math.log(s2)
    spread = n1 * sxx - sx * sx
    pair = (
        np.log(s2 + t2 * n1)
        + t2 * spread / (t2 * s2 * n1 + s2 * s2)
        + _centered_sq(n1, sx, sxx, hp.rho0) / (s2 + t2 * n1)
    )
    return float(
        -0.5 * big_n * LOG_2PI
        - 0.5 * stats.total_sq_null
        - (stats.mA - nq) * log_sigma
        - 0.5 * np.sum(pair)
    )


def icl_noise_nig(stats: CountStats, hp: Hyperparams) -> float:
    p = stats.p
    big_n = p * (p - 1) / 2
    q = stats.n_nonempty
    nq = q * (q + 1) / 2
    n1, _, sx, sxx = _upper(stats)
    n1 = n1.astype(float)
    shape = hp.c0 + 0.5 * n1
    pair = gammaln(shape) - 0.5 * np.log(hp.b0 + n1) - shape * np.log(nig_d(n1, sx, sxx, hp))
    prior = gammaln(hp.c0) - hp.c0 * math.log(hp.d0) - 0.5 * math.log(hp.b0)
    return float(-0.5 * big_n * LOG_2PI - nq * prior - 0.5 * stats.total_sq_null + np.sum(pair))


def noise_pair_terms(variant: Variant, n1, sx, sxx, hp: Hyperparams):
    if Variant(variant) is Variant.GAUSSIAN:
        return gaussian_pair_terms(n1, sx, sxx, hp)
    return nig_pair_terms(n1, sx, sxx, hp)


def icl_total(variant: Variant, stats: CountStats, hp: Hyperparams) -> IclValue:
    sbm = icl_sbm(stats, hp)
    if Variant(variant) is Variant.GAUSSIAN:
        noise = icl_noise_gaussian(stats, hp)
    else:
        noise = icl_noise_nig(stats, hp)
    return IclValue(total=sbm + noise, sbm_part=sbm, noise_part=noise)
