"""Edge test statistics for Gaussian graphical models from an n x p sample."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .linalg import NotPositiveDefiniteError, invert_spd

KKT_TOL = 1e-6


class DataError(ValueError):
    """Input data that cannot be turned into statistics."""


def _as_sample(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2:
        raise DataError(f"sample must be a 2-d array, got shape {y.shape}")
    if y.shape[0] < 2:
        raise DataError("need at least two observations")
    if not np.all(np.isfinite(y)):
        raise DataError("sample contains non-finite values")
    return y - y.mean(axis=0)


def sample_covariance(y) -> np.ndarray:
    yc = _as_sample(y)
    return yc.T @ yc / len(yc)


def ztransform_stats(y) -> np.ndarray:
    """``sqrt(n - p - 1) * atanh(partial correlation)``, zero diagonal."""
    yc = _as_sample(y)
    n, p = yc.shape
    if n <= p + 1:
        raise DataError(f"z-transform statistics need n > p + 1 observations (n={n}, p={p})")
    try:
        k = invert_spd(yc.T @ yc / n)
    except NotPositiveDefiniteError as exc:
        raise DataError(f"sample covariance is singular: {exc}") from exc
    d = np.sqrt(np.diag(k))
    r = np.clip(-k / np.outer(d, d), -1.0 + 1e-15, 1.0 - 1e-15)
    x = math.sqrt(n - p - 1) * np.arctanh(r)
    np.fill_diagonal(x, 0.0)
    return 0.5 * (x + x.T)


def default_lambda(n: int, p: int) -> float:
    return 2.0 * math.sqrt(math.log(max(p, 2)) / n)


@dataclass
class LassoFit:
    coef: np.ndarray
    residuals: np.ndarray
    lam: float
    n_iter: int
    objective: list = field(default_factory=list)
    kkt: float = 0.0


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _kkt_residual(grad, coef, lam):
    """Violation of the subgradient condition of (1/2n)|y - Xb|^2 + lam |b|_1."""
    active = coef != 0
    on = np.abs(grad + lam * np.sign(coef))
    off = np.maximum(np.abs(grad) - lam, 0.0)
    return np.where(active, on, off)


def lasso_cd(design, response, lam: float, max_iter: int = 10_000, tol: float = KKT_TOL) -> LassoFit:
    """Cyclic coordinate descent on the Gram matrix; raises if KKT is not met."""
    xm = np.asarray(design, dtype=float)
    yv = np.asarray(response, dtype=float).ravel()
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    n, d = xm.shape
    if len(yv) != n:
        raise ValueError("design and response have different lengths")
    gram = xm.T @ xm / n
    corr = xm.T @ yv / n
    diag = np.diag(gram)
    b = np.zeros(d)
    objective = []
    usable = diag > 0

    def obj(beta):
        r = yv - xm @ beta
        return 0.5 * float(r @ r) / n + lam * float(np.abs(beta).sum())

    for it in range(1, max_iter + 1):
        for j in np.flatnonzero(usable):
            partial = corr[j] - gram[j] @ b + diag[j] * b[j]
            b[j] = _soft(partial, lam) / diag[j]
        objective.append(obj(b))
        kkt = float(_kkt_residual(gram @ b - corr, b, lam).max(initial=0.0))
        if kkt <= tol:
            return LassoFit(b, yv - xm @ b, lam, it, objective, kkt)
    raise RuntimeError(f"lasso coordinate descent did not converge in {max_iter} sweeps (KKT {kkt:.2e})")


def nodewise_coefficients(gram, lam: float, max_iter: int = 10_000, tol: float = KKT_TOL) -> np.ndarray:
    """Lasso coefficients for regressing every column on all others at once.

    ``B[:, i]`` holds regression ``i``; ``B[i, i] = 0``. ``gram`` is ``Y'Y / n``.
    """
    p = len(gram)
    diag = np.diag(gram).copy()
    if np.any(diag <= 0):
        col = int(np.flatnonzero(diag <= 0)[0])
        raise DataError(f"column {col} has zero variance")
    b = np.zeros((p, p))
    for _ in range(max_iter):
        for j in range(p):
            partial = gram[j] - gram[j] @ b + diag[j] * b[j]
            row = _soft(partial, lam) / diag[j]
            row[j] = 0.0
            b[j] = row
        grad = gram @ b - gram
        viol = _kkt_residual(grad, b, lam)
        np.fill_diagonal(viol, 0.0)
        if viol.max() <= tol:
            return b
    raise RuntimeError(f"nodewise lasso did not converge in {max_iter} sweeps")


def nodewise_residual_stats(y, lam: float | None = None) -> np.ndarray:
    """Bias-corrected residual covariances of nodewise lasso regressions, standardised."""
    yc = _as_sample(y)
    n, p = yc.shape
    if p < 2:
        raise DataError("need at least two variables")
    lam = default_lambda(n, p) if lam is None else float(lam)
    gram = yc.T @ yc / n
    b = nodewise_coefficients(gram, lam)
    resid = yc - yc @ b
    r = resid.T @ resid / n
    rd = np.diag(r).copy()
    bad = np.flatnonzero(rd <= 1e-14 * max(1.0, float(np.max(np.diag(gram)))))
    if bad.size:
        raise DataError(f"degenerate residual for column {int(bad[0])}")
    # b[j, i] is the coefficient of variable j in regression i
    corrected = -(r + b.T * rd[None, :] + b * rd[:, None])
    x = math.sqrt(n) * corrected / np.sqrt(np.outer(rd, rd))
    np.fill_diagonal(x, 0.0)
    return 0.5 * (x + x.T)


def pvalues_from_normal(x) -> np.ndarray:
    return 2.0 * norm.sf(np.abs(np.asarray(x, dtype=float)))


def read_sample_csv(path, with_header: bool = False):
    """Numeric CSV, rows are observations; a non-numeric first row is taken as header.

    With ``with_header`` returns ``(data, names)``; ``names`` is None without header.
    """
    rows = []
    width = None
    names = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                if lineno == 1 and not rows:
                    width = len(rec)
                    names = [c.strip() for c in rec]
                    continue
                raise DataError(f"{path}:{lineno}: non-numeric value in {rec!r}") from None
            if width is None:
                width = len(vals)
            if len(vals) != width:
                raise DataError(f"{path}:{lineno}: expected {width} fields, found {len(vals)}")
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    return (data, names) if with_header else data
