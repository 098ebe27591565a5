"""Weighted-mean parameter estimates, edge posteriors and l-values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .icl import Variant
from .model import Hyperparams, one_hot, possible_pairs

W_EPS = 1e-6
VAR_FLOOR = 1e-3


@dataclass
class ModelParams:
    pi: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    sigma_sq: np.ndarray

    @property
    def q(self) -> int:
        return len(self.pi)

    def copy(self) -> "ModelParams":
        return ModelParams(self.pi.copy(), self.w.copy(), self.mu.copy(), self.sigma_sq.copy())

    def drop_block(self, g: int) -> "ModelParams":
        keep = np.array([b for b in range(self.q) if b != g])
        sub = np.ix_(keep, keep)
        pi = self.pi[keep]
        return ModelParams(pi / pi.sum(), self.w[sub], self.mu[sub], self.sigma_sq[sub])


def _pair_sum(weights, zh):
    upper = zh.T @ np.triu(weights, 1) @ zh
    return upper + upper.T - np.diag(np.diag(upper))


def estimate_params(
    x,
    z,
    rho,
    hp: Hyperparams | None = None,
    variant: Variant = Variant.GAUSSIAN,
    q: int | None = None,
) -> ModelParams:
    """Estimate ``(pi, w, mu, sigma^2)`` as means weighted by the posteriors.

    Block pairs without possible pairs get ``w = eps``; pairs with zero total
    weight get the prior mean and unit variance. For the known-variance
    variant ``sigma_sq`` holds the model's global variance.
    """
    hp = hp or Hyperparams()
    z = np.asarray(z)
    q = int(z.max()) + 1 if q is None else q
    zh = one_hot(z, q)
    rho = np.asarray(rho, dtype=float)
    n = np.bincount(z, minlength=q)
    m = possible_pairs(n).astype(float)
    wsum = _pair_sum(rho, zh)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(m > 0, wsum / np.where(m > 0, m, 1.0), W_EPS)
        prior_mean = hp.rho0 if Variant(variant) is Variant.GAUSSIAN else hp.a0
        has_w = wsum > 1e-12
        safe = np.where(has_w, wsum, 1.0)
        mu = np.where(has_w, _pair_sum(rho * x, zh) / safe, prior_mean)
        mu_full = mu[z][:, z]
        var = np.where(has_w, _pair_sum(rho * (x - mu_full) ** 2, zh) / safe, 1.0)
    w = np.clip(w, W_EPS, 1.0 - W_EPS)
    if Variant(variant) is Variant.GAUSSIAN:
        sigma_sq = np.full((q, q), hp.sigma_sq)
    else:
        sigma_sq = np.maximum(var, VAR_FLOOR)
    pi = n / n.sum()
    return ModelParams(pi=pi, w=w, mu=mu, sigma_sq=sigma_sq)


def _log_null_minus_alt(x, w, mu, sigma_sq):
    """log[(1-w) f_N(0,1)(x)] - log[w f_N(mu,sigma^2)(x)]."""
    log_f0 = -0.5 * x * x
    log_f1 = -0.5 * (x - mu) ** 2 / sigma_sq - 0.5 * np.log(sigma_sq)
    return np.log1p(-w) - np.log(w) + log_f0 - log_f1


def lvalue(x, w, mu, sigma_sq):
    """Posterior probability that the edge is absent."""
    return expit(_log_null_minus_alt(np.asarray(x, dtype=float), w, mu, sigma_sq))


def lvalue_matrix(x, z, params: ModelParams) -> np.ndarray:
    """Elementwise l-values using the parameters of each node's block pair.

    The diagonal is set to 1 (never an edge).
    """
    z = np.asarray(z)
    ell = lvalue(x, params.w[z][:, z], params.mu[z][:, z], params.sigma_sq[z][:, z])
    np.fill_diagonal(ell, 1.0)
    return ell


def edge_posterior(x, z, params: ModelParams) -> np.ndarray:
    """``rho = 1 - l``, zero on the diagonal."""
    rho = 1.0 - lvalue_matrix(x, z, params)
    np.fill_diagonal(rho, 0.0)
    return rho


def posterior_rows(x_row, z, params: ModelParams, blocks) -> np.ndarray:
    """Posterior edge probabilities of one node placed in each of ``blocks``.

    Returns an array of shape ``(len(blocks), p)``.
    """
    blocks = np.asarray(blocks)
    z = np.asarray(z)
    w = params.w[blocks][:, z]
    mu = params.mu[blocks][:, z]
    s2 = params.sigma_sq[blocks][:, z]
    return 1.0 - lvalue(np.broadcast_to(x_row, w.shape), w, mu, s2)


def threshold_graph(rho, t: float = 0.5) -> np.ndarray:
    a = (np.asarray(rho) > t).astype(np.uint8)
    np.fill_diagonal(a, 0)
    return a

