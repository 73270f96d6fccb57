import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian, random_psd
from ftangle.cxmat import (
    I4, PAULI, SIGMA1, SIGMA2, SIGMA3, dagger, herm_eig, kron, partial_transpose_2, pauli_dot,
    product_spectrum, psd_sqrt,
)
from ftangle.errors import NoConvergence, NotHermitian, NotPSD


def test_pauli_algebra():
    for a in range(3):
        for b in range(3):
            anti = PAULI[a] @ PAULI[b] + PAULI[b] @ PAULI[a]
            assert np.allclose(anti, 2 * (a == b) * np.eye(2), atol=0)
    assert np.array_equal(SIGMA1 @ SIGMA2, 1j * SIGMA3)


def test_kron_matches_numpy():
    rng = np.random.default_rng(0)
    a, b = random_hermitian(rng, 5, 2), random_hermitian(rng, 5, 2)
    out = kron(a, b)
    for k in range(5):
        assert np.allclose(out[k], np.kron(a[k], b[k]), rtol=0, atol=1e-15)


def test_pauli_dot():
    v = np.array([1 + 2j, -0.5, 3j])
    assert np.allclose(pauli_dot(v), v[0] * SIGMA1 + v[1] * SIGMA2 + v[2] * SIGMA3, atol=1e-15)


def test_partial_transpose_is_involution_and_matches_blocks():
    rng = np.random.default_rng(1)
    m = random_hermitian(rng, 3, 4)
    pt = partial_transpose_2(m)
    assert np.array_equal(partial_transpose_2(pt), m)
    # block (i, j) of the result is the transpose of block (i, j) of m
    assert np.array_equal(pt[:, :2, 2:], np.swapaxes(m[:, :2, 2:], -1, -2))
    # an operator a x b becomes a x b^T
    a, b = random_hermitian(rng, 1, 2)[0], random_hermitian(rng, 1, 2)[0]
    assert np.array_equal(partial_transpose_2(np.kron(a, b)), np.kron(a, b.T))


def test_herm_eig_against_lapack():
    rng = np.random.default_rng(2)
    m = random_hermitian(rng, 2000, 4)
    evals, vecs = herm_eig(m)
    ref = np.linalg.eigvalsh(m)
    assert np.max(np.abs(evals - ref)) < 1e-12
    assert np.max(np.abs(m @ vecs - vecs * evals[:, None, :])) < 1e-12
    assert np.max(np.abs(dagger(vecs) @ vecs - I4)) < 1e-13


def test_herm_eig_degenerate_and_diagonal():
    evals, vecs = herm_eig(np.diag([3.0, 1.0, 1.0, -2.0]))
    assert np.array_equal(evals, [-2.0, 1.0, 1.0, 3.0])
    assert np.allclose(np.abs(vecs), np.eye(4)[:, [3, 1, 2, 0]])
    evals, _ = herm_eig(np.zeros((4, 4)))
    assert np.array_equal(evals, np.zeros(4))


def test_herm_eig_batch_independence():
    rng = np.random.default_rng(3)
    m = random_hermitian(rng, 6, 4)
    m[2] = np.diag([1.0, 2.0, 3.0, 4.0])
    whole = herm_eig(m)
    for k in range(6):
        single = herm_eig(m[k])
        assert np.array_equal(single.eigenvalues, whole.eigenvalues[k])
        assert np.array_equal(single.eigenvectors, whole.eigenvectors[k])


def test_herm_eig_errors():
    with pytest.raises(NotHermitian):
        herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))
    rng = np.random.default_rng(4)
    with pytest.raises(NoConvergence):
        herm_eig(random_hermitian(rng, 1, 4), max_sweeps=1)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=4))
def test_psd_sqrt_squares_back(seed, rank):
    rho = random_psd(np.random.default_rng(seed), 1, rank=rank)[0]
    root = psd_sqrt(rho)
    assert np.max(np.abs(root @ root - rho)) < 1e-13
    assert np.max(np.abs(root - dagger(root))) < 1e-15
    assert np.min(np.linalg.eigvalsh(root)) > -1e-13


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NotPSD):
        psd_sqrt(np.diag([1.0, -0.1, 0.0, 0.0]))
    # roundoff-sized negatives are clamped
    assert np.array_equal(psd_sqrt(np.diag([1.0, -1e-12, 0.0, 0.0])), np.diag([1.0, 0, 0, 0]))


def _faddeev_leverrier(a):
    n = a.shape[-1]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs)


def test_product_spectrum_against_char_poly_roots():
    rng = np.random.default_rng(5)
    a = random_psd(rng, 1000)
    # full rank: a repeated zero root would make the polynomial oracle itself ill-conditioned
    b = random_psd(rng, 1000)
    got = product_spectrum(a, b)
    worst = 0.0
    for k in range(1000):
        roots = np.roots(_faddeev_leverrier(a[k] @ b[k]))
        ref = np.sort(np.sqrt(np.clip(roots.real, 0, None)))[::-1]
        worst = max(worst, np.max(np.abs(got[k] - ref)))
    assert worst < 1e-8


def test_product_spectrum_rank_deficient_exact_zeros():
    # rank-2 rho: the two null directions must stay exactly null
    rho = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    other = random_psd(np.random.default_rng(6), 1)[0]
    vals = product_spectrum(rho, other)
    assert vals[2] == 0.0 and vals[3] == 0.0
    ref = np.sqrt(np.linalg.eigvalsh(0.5 * other[:2, :2]))[::-1]
    assert np.allclose(vals[:2], ref, atol=1e-14)
