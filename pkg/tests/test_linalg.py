from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsbmggm.linalg import (
    NotPositiveDefiniteError,
    cholesky,
    cholesky_solve,
    invert_spd,
    jacobi_eig,
    min_eig_sym,
)


def random_spd(rng, n):
    b = rng.normal(size=(n, n))
    return b @ b.T + n * np.eye(n)


def exact_inverse(m):
    """Gauss-Jordan over the rationals."""
    n = len(m)
    aug = [[Fraction(m[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = next(r for r in range(c, n) if aug[r][c] != 0)
        aug[c], aug[piv] = aug[piv], aug[c]
        lead = aug[c][c]
        aug[c] = [v / lead for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    return [row[n:] for row in aug]


def test_identity_factors():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(invert_spd(np.eye(3)), np.eye(3))


@pytest.mark.parametrize("n", [1, 3, 10, 25])
def test_cholesky_reconstructs(n):
    m = random_spd(np.random.default_rng(n), n)
    low = cholesky(m)
    assert np.allclose(low, np.tril(low))
    assert np.linalg.norm(low @ low.T - m) <= 1e-8 * np.linalg.norm(m)


def test_cholesky_solve():
    rng = np.random.default_rng(1)
    m = random_spd(rng, 6)
    b = rng.normal(size=6)
    np.testing.assert_allclose(m @ cholesky_solve(cholesky(m), b), b, atol=1e-10)


def test_hilbert_inverse_matches_rational_oracle():
    hilbert = [[Fraction(1, i + j + 1) for j in range(4)] for i in range(4)]
    want = np.array(exact_inverse(hilbert), dtype=float)
    np.testing.assert_array_equal(want[0], [16, -120, 240, -140])
    got = invert_spd(np.array(hilbert, dtype=float))
    assert np.max(np.abs(got - want) / np.abs(want)) <= 1e-6


def test_invert_spd_identity_product():
    m = random_spd(np.random.default_rng(2), 12)
    assert np.abs(m @ invert_spd(m) - np.eye(12)).max() <= 1e-6


def test_non_spd_and_bad_shapes_rejected():
    with pytest.raises(NotPositiveDefiniteError, match="pivot 1"):
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ValueError):
        cholesky(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        cholesky([[1.0, 0.5], [0.0, 1.0]])


def test_two_by_two_eigenvalues_closed_form():
    a, b, c = 2.0, -1.5, 0.5
    vals, _ = jacobi_eig([[a, b], [b, c]])
    disc = np.sqrt(((a - c) / 2) ** 2 + b * b)
    np.testing.assert_allclose(vals, [(a + c) / 2 - disc, (a + c) / 2 + disc], rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_jacobi_residuals_and_orthogonality(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(10, 10))
    m = m + m.T
    vals, vecs = jacobi_eig(m)
    assert np.all(np.diff(vals) >= 0)
    for k in range(10):
        assert np.linalg.norm(m @ vecs[:, k] - vals[k] * vecs[:, k]) <= 1e-8
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(10), atol=1e-10)
    assert min_eig_sym(m) == pytest.approx(vals[0])
