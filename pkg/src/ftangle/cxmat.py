"""Small dense complex linear algebra for 2x2 and 4x4 matrices.

Everything here works on numpy arrays with arbitrary leading batch
dimensions, so ``herm_eig(rhos)`` with ``rhos.shape == (n, 4, 4)`` diagonalizes
``n`` matrices at once.  The eigensolver is a cyclic complex Jacobi method;
no LAPACK routine is involved, which keeps the oracles independent of the
closed-form code paths they check.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, NotHermitian, NotPSD

I2 = np.eye(2, dtype=np.complex128)
I4 = np.eye(4, dtype=np.complex128)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = np.stack([SIGMA1, SIGMA2, SIGMA3])
EPSILON = np.array([[0, 1], [-1, 0]], dtype=np.complex128)

HERMITIAN_TOL = 1e-10
OFFDIAG_TOL = 1e-13
MAX_SWEEPS = 100
NOT_PSD_TOL = 1e-9
SNAP_ULPS = 16
# below this an off-diagonal entry is already exact zero for every purpose
_TINY = 1e-150


class HermEigResult(NamedTuple):
    eigenvalues: np.ndarray
    """Ascending real eigenvalues, shape ``(..., n)``."""
    eigenvectors: np.ndarray
    """Orthonormal eigenvectors as columns, shape ``(..., n, n)``."""


def as_complex(a, name: str = "value") -> np.ndarray:
    """Convert to a complex128 array, rejecting NaN and infinities."""
    arr = np.asarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def pauli_dot(v: np.ndarray) -> np.ndarray:
    """``v . sigma`` for complex 3-vectors ``v`` of shape ``(..., 3)``."""
    return np.einsum("...a,aij->...ij", v, PAULI)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of 2x2 matrices: ``out[2i+k, 2j+l] = a[i,j] * b[k,l]``."""
    out = np.einsum("...ij,...kl->...ikjl", a, b)
    return out.reshape(out.shape[:-4] + (4, 4))


def partial_transpose_2(m: np.ndarray) -> np.ndarray:
    """Transpose with respect to the second qubit of a 4x4 matrix."""
    m = np.asarray(m)
    blocks = m.reshape(m.shape[:-2] + (2, 2, 2, 2))
    return np.swapaxes(blocks, -3, -1).reshape(m.shape)


def _offdiag_norm(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    off = a * (1.0 - np.eye(n))
    return np.sqrt(np.sum(off.real ** 2 + off.imag ** 2, axis=(-2, -1)))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    # Complex Jacobi rotation J = D R: the phase D makes a[p,q] real, R is the
    # classical real rotation annihilating it.  a <- J^H a J, v <- v J in place.
    apq = a[:, p, q]
    mag = np.abs(apq)
    live = mag > _TINY
    safe = np.where(live, mag, 1.0)
    phase = np.where(live, np.conj(apq) / safe, 1.0)
    tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
    t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
    t = np.where(live, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    cp = c[:, None]
    sp = s[:, None]
    ep = phase[:, None]
    col_p = a[:, :, p].copy()
    col_q = a[:, :, q]
    a[:, :, p] = cp * col_p - sp * ep * col_q
    a[:, :, q] = sp * col_p + cp * ep * col_q
    row_p = a[:, p, :].copy()
    row_q = a[:, q, :]
    a[:, p, :] = cp * row_p - sp * np.conj(ep) * row_q
    a[:, q, :] = sp * row_p + cp * np.conj(ep) * row_q
    a[:, p, q] = 0.0
    a[:, q, p] = 0.0
    a[:, p, p] = a[:, p, p].real
    a[:, q, q] = a[:, q, q].real

    vp = v[:, :, p].copy()
    vq = v[:, :, q]
    v[:, :, p] = cp * vp - sp * ep * vq
    v[:, :, q] = sp * vp + cp * ep * vq


def herm_eig(m, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS) -> HermEigResult:
    """Eigendecomposition of Hermitian matrices by cyclic complex Jacobi sweeps.

    Sweeps continue until the off-diagonal Frobenius norm is at most ``tol``
    (scaled by the Frobenius norm when that exceeds one).  Each batch element
    stops rotating as soon as it has converged, so its result does not depend
    on what else is in the batch.  Eigenvalues come back ascending; equal
    values keep their original diagonal order.

    Raises :class:`NotHermitian` if ``max|m - m^H| > 1e-10`` and
    :class:`NoConvergence` if ``max_sweeps`` is exhausted.
    """
    m = as_complex(m, "matrix")
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {m.shape}")
    asym = np.max(np.abs(m - dagger(m)), initial=0.0)
    if asym > HERMITIAN_TOL:
        raise NotHermitian(f"matrix is not Hermitian (max |m - m^H| = {asym:.3e})")

    shape = m.shape
    n = shape[-1]
    a = (0.5 * (m + dagger(m))).reshape(-1, n, n).copy()
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()
    limit = tol * np.maximum(1.0, np.linalg.norm(a, axis=(-2, -1)))

    active = np.arange(a.shape[0])
    for sweep in range(max_sweeps + 1):
        active = active[_offdiag_norm(a[active]) > limit[active]]
        if active.size == 0:
            break
        if sweep == max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        sub_a = a[active]
        sub_v = v[active]
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(sub_a, sub_v, p, q)
        a[active] = sub_a
        v[active] = sub_v

    evals = np.einsum("bii->bi", a).real
    order = np.argsort(evals, axis=-1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return HermEigResult(evals.reshape(shape[:-1]), v.reshape(shape))


def _clamped(evals: np.ndarray, snap: bool = False) -> np.ndarray:
    worst = np.min(evals, initial=0.0)
    if worst < -NOT_PSD_TOL:
        raise NotPSD(f"matrix has eigenvalue {worst:.3e} < -{NOT_PSD_TOL:g}")
    floor = 0.0
    if snap:
        # Analytic zeros come back as +-(a few ulps of the largest eigenvalue);
        # snapping them to exactly zero keeps square roots from amplifying them.
        floor = SNAP_ULPS * np.finfo(float).eps * np.max(np.abs(evals), axis=-1, keepdims=True)
    return np.where(evals <= floor, 0.0, evals)


def psd_sqrt(m) -> np.ndarray:
    """Hermitian PSD square root via :func:`herm_eig`.

    Eigenvalues down to ``-1e-9`` are treated as roundoff and clamped to zero;
    anything more negative raises :class:`NotPSD`.
    """
    evals, vecs = herm_eig(m)
    root = np.sqrt(_clamped(evals, snap=True))
    return (vecs * root[..., None, :]) @ dagger(vecs)


def product_spectrum(rho, rho_tilde) -> np.ndarray:
    """Square roots of the eigenvalues of ``rho @ rho_tilde``, descending.

    With ``S = sqrt(rho)`` the product is similar to the Hermitian ``S rho_tilde S``.
    Writing ``S = V D V^H`` the latter is unitarily similar to
    ``D (V^H rho_tilde V) D``, which is what gets diagonalized: null directions
    of ``rho`` then stay exactly null instead of picking up rotation roundoff.
    """
    evals, vecs = herm_eig(rho)
    root = np.sqrt(_clamped(evals, snap=True))
    inner = dagger(vecs) @ np.asarray(rho_tilde, dtype=np.complex128) @ vecs
    graded = root[..., :, None] * inner * root[..., None, :]
    prod = herm_eig(graded).eigenvalues
    return np.sqrt(_clamped(prod))[..., ::-1]
