"""Small dense kernels for symmetric matrices: Cholesky, SPD inverse, Jacobi eigen."""
from __future__ import annotations

import numpy as np


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


def _square_symmetric(m, tol: float = 1e-10) -> np.ndarray:
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if not np.allclose(m, m.T, atol=tol * scale, rtol=0.0):
        raise ValueError("matrix is not symmetric")
    return m


def cholesky(m) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == m`` (row-oriented Cholesky-Banachiewicz)."""
    m = _square_symmetric(m)
    n = len(m)
    low = np.zeros_like(m)
    for i in range(n):
        # off-diagonal entries of row i, then its pivot
        for j in range(i):
            low[i, j] = (m[i, j] - low[i, :j] @ low[j, :j]) / low[j, j]
        piv = m[i, i] - low[i, :i] @ low[i, :i]
        if not piv > 0.0:
            raise NotPositiveDefiniteError(
                f"matrix not positive definite: pivot {i} is {piv:.3e} (n={n}, max|m|={np.abs(m).max():.3e})"
            )
        low[i, i] = np.sqrt(piv)
    return low


def _solve_lower(low, b):
    n = len(low)
    y = np.zeros_like(b, dtype=float)
    for i in range(n):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    return y


def _solve_upper(up, b):
    n = len(up)
    y = np.zeros_like(b, dtype=float)
    for i in range(n - 1, -1, -1):
        y[i] = (b[i] - up[i, i + 1:] @ y[i + 1:]) / up[i, i]
    return y


def cholesky_solve(low, b):
    return _solve_upper(low.T, _solve_lower(low, np.asarray(b, dtype=float)))


def invert_spd(m) -> np.ndarray:
    low = cholesky(m)
    inv = cholesky_solve(low, np.eye(len(low)))
    return 0.5 * (inv + inv.T)


def jacobi_eig(m, tol: float = 1e-10, max_sweeps: int = 100):
    """Eigenvalues (ascending) and eigenvectors (columns) by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm is at most ``tol`` times
    the norm of the input.
    """
    a = _square_symmetric(m)
    a = 0.5 * (a + a.T)
    n = len(a)
    v = np.eye(n)
    target = tol * max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * ap - s * aq, s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise np.linalg.LinAlgError("Jacobi eigensolver did not converge")
    vals = np.diag(a).copy()
    order = np.argsort(vals)
    return vals[order], v[:, order]


def min_eig_sym(m) -> float:
    return float(jacobi_eig(m)[0][0])
