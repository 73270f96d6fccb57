"""Reduced density matrices and the local-unitary canonical form.

Two independent routes exist for every reduced matrix: the closed forms in
terms of ``(w, z)`` and :func:`partial_trace` of the full four-qubit state.
Qubits are labelled 1..4; a kept pair is always ordered ascending, so
``keep=(2, 4)`` gives rows indexed by ``2*j + l``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cxmat import EPSILON, I2, I4, PAULI, SIGMA1, SIGMA3, dagger, kron, pauli_dot
from .errors import AntipodalDegenerate, BadSubset, ZeroVector
from .state import FamilyParams, spin_vectors, sqnorm, symmetric_block

ZERO_TOL = 1e-12
ANTIPODAL_REL = 1e-12

# exp(i pi/2 sigma_1); conjugation by it maps a.sigma to (a1, -a2, -a3).sigma
_HALF_TURN_1 = 1j * SIGMA1
_FLIP = np.array([1.0, -1.0, -1.0])
# rotation carrying the 3-axis onto the 1-axis
_Z_TO_X = (I2 + SIGMA3 @ SIGMA1) / np.sqrt(2.0)


def _eye2(batch: tuple) -> np.ndarray:
    return np.broadcast_to(I2, batch + (2, 2))


def lambda_matrix(w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Traceless part ``Lambda`` with ``rho = (1 + Lambda)/4``; no normalization check."""
    cplx = np.result_type(np.asarray(w).dtype, np.asarray(z).dtype, np.complex128)
    w = np.asarray(w, dtype=cplx)
    z = np.asarray(z, dtype=cplx)
    x, y = spin_vectors(w, z)
    one = _eye2(w.shape[:-1])
    return (kron(pauli_dot(x.astype(cplx)), one)
            + kron(one, pauli_dot(y.astype(cplx)))
            + kron(pauli_dot(w), pauli_dot(np.conj(z)))
            + kron(pauli_dot(np.conj(w)), pauli_dot(z)))


def rho_from_params(p: FamilyParams) -> np.ndarray:
    return 0.25 * (I4 + lambda_matrix(p.w, p.z))


def single_qubit(v: np.ndarray) -> np.ndarray:
    """``(I + v.sigma)/2`` for real Bloch vectors ``v``."""
    return 0.5 * (_eye2(v.shape[:-1]) + pauli_dot(v.astype(np.complex128)))


def _rank_two_pair(diag_norm2: np.ndarray, v: np.ndarray) -> np.ndarray:
    # (1/2)(|u|^2 eps x eps + B x conj(B)) with B = eps (v . conj(sigma))
    b = symmetric_block(v)
    ee = np.einsum("ik,jl->ikjl", EPSILON, EPSILON)
    m = 0.5 * (diag_norm2[..., None, None, None, None] * ee + np.einsum("...ik,...jl->...ikjl", b, np.conj(b)))
    return m.reshape(m.shape[:-4] + (4, 4))


def reduced_closed(p: FamilyParams, keep) -> np.ndarray:
    """Closed-form reduced density matrix for any one or two qubits."""
    keep = _check_keep(keep)
    x, y = spin_vectors(p.w, p.z)
    if keep in ((1,), (3,)):
        return single_qubit(x)
    if keep in ((2,), (4,)):
        return single_qubit(y)
    if keep in ((1, 2), (3, 4)):
        return rho_from_params(p)
    if keep == (1, 4):
        return 0.25 * (I4 + lambda_matrix(-p.w, p.z))
    if keep == (2, 3):
        # exchange plus one sign; the sign drops out of every measure
        return 0.25 * (I4 + lambda_matrix(-p.z, p.w))
    if keep == (1, 3):
        return _rank_two_pair(sqnorm(p.z), p.w)
    return _rank_two_pair(sqnorm(p.w), p.z)


def _check_keep(keep) -> tuple:
    try:
        labels = tuple(sorted(int(q) for q in keep))
    except TypeError:
        labels = (int(keep),)
    if len(labels) not in (1, 2) or len(set(labels)) != len(labels) or not set(labels) <= {1, 2, 3, 4}:
        raise BadSubset(f"keep must be one or two distinct qubits from 1..4, got {keep!r}")
    return labels


def partial_trace(psi: np.ndarray, keep) -> np.ndarray:
    """Reduced density matrix of the kept qubits, by direct contraction of ``|psi><psi|``."""
    keep = _check_keep(keep)
    psi = np.asarray(psi, dtype=np.complex128)
    t = psi.reshape(psi.shape[:-1] + (2, 2, 2, 2))
    ket = "abcd"
    bra = "".join("efgh"[q] if q + 1 in keep else ket[q] for q in range(4))
    out = "".join(ket[q - 1] for q in keep) + "".join(bra[q - 1] for q in keep)
    m = np.einsum(f"...{ket},...{bra}->...{out}", t, np.conj(t))
    d = 2 ** len(keep)
    return m.reshape(psi.shape[:-1] + (d, d))


def _plus_x3(x: np.ndarray, r: np.ndarray) -> np.ndarray:
    # r + x3 without cancellation when x3 < 0
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    denom = np.where(r - x3 > 0, r - x3, 1.0)
    return np.where(x3 >= 0, r + x3, (x1 * x1 + x2 * x2) / denom)


def _rotation_raw(x: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    rp = _plus_x3(x, r)
    x1, x2 = x[..., 0], x[..., 1]
    u = np.empty(x.shape[:-1] + (2, 2), dtype=np.complex128)
    u[..., 0, 0] = rp
    u[..., 0, 1] = -(x1 - 1j * x2)
    u[..., 1, 0] = x1 + 1j * x2
    u[..., 1, 1] = rp
    return u / np.sqrt(2.0 * r * rp)[..., None, None]


def rotation_to_z(x) -> np.ndarray:
    """SU(2) matrix ``U`` with ``U^H (x.sigma) U = |x| sigma_3``.

    Raises :class:`ZeroVector` when ``|x| <= 1e-12`` and
    :class:`AntipodalDegenerate` when ``x`` points (almost) along ``-e3``.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r <= ZERO_TOL):
        raise ZeroVector("cannot align a zero vector")
    if np.any(x[..., 2] <= -r * (1 - ANTIPODAL_REL)):
        raise AntipodalDegenerate("x is antiparallel to the 3-axis")
    return _rotation_raw(x)


def conjugate_vector(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Components of ``U^H (v.sigma) U`` in the Pauli basis."""
    m = dagger(u) @ pauli_dot(v) @ u
    return 0.5 * np.einsum("aij,...ji->...a", PAULI, m)


def aligning_rotation(x: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotation taking the spin vector ``x`` of ``v`` to the 3-axis, and the rotated ``v``.

    Three cases per batch element:

    * regular: ``U = U_x`` and ``v'`` from the component formula, whose third entry is 0;
    * ``x`` antipodal to ``e3``: a half turn about the 1-axis first, then as above;
    * ``|x| <= 1e-12``: ``v`` is a real vector up to phase.  Identity if its third
      component is already negligible, otherwise the rotation laying its real
      direction on the 1-axis.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=np.complex128)
    if x.ndim == 1:
        u, vp = aligning_rotation(x[None], v[None])
        return u[0], vp[0]
    r = np.linalg.norm(x, axis=-1)
    zero = r <= ZERO_TOL
    anti = ~zero & (x[..., 2] <= -r * (1 - ANTIPODAL_REL))

    xs = np.where(anti[..., None], x * _FLIP, x)
    vs = np.where(anti[..., None], v * _FLIP, v)
    xs = np.where(zero[..., None], np.array([0.0, 0.0, 1.0]), xs)
    u = _rotation_raw(xs)
    u = np.where(anti[..., None, None], _HALF_TURN_1 @ u, u)

    rp = _plus_x3(xs, np.linalg.norm(xs, axis=-1))
    coef = vs[..., 2] / rp
    vp = np.stack([vs[..., 0] - xs[..., 0] * coef, vs[..., 1] - xs[..., 1] * coef,
                   np.zeros_like(coef)], axis=-1)

    if np.any(zero):
        u = u.copy()
        vp = vp.copy()
        for idx in zip(*np.nonzero(zero)):
            u[idx], vp[idx] = _real_direction_rotation(v[idx])
    return u, vp


def _real_direction_rotation(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if abs(v[2]) <= ZERO_TOL:
        return I2.copy(), v.copy()
    vv = np.sum(v * v)
    phase = np.exp(-0.5j * np.angle(vv)) if abs(vv) > 0 else 1.0
    real_dir = (phase * v).real
    nrm = np.linalg.norm(real_dir)
    if real_dir[2] <= -nrm * (1 - ANTIPODAL_REL):
        u = _HALF_TURN_1 @ _Z_TO_X
    else:
        u = _rotation_raw(real_dir) @ _Z_TO_X
    return u, conjugate_vector(u, v)


@dataclass(frozen=True)
class CanonicalForm:
    rho: np.ndarray
    rho_prime: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    w_prime: np.ndarray
    z_prime: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def xshape_residual(self) -> np.ndarray:
        """Largest modulus among the eight entries an X-state must have zero."""
        return np.max(np.abs(self.rho_prime * ~XMASK), axis=(-2, -1))


XMASK = np.eye(4, dtype=bool) | np.eye(4, dtype=bool)[::-1]


def _re_pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # a conj(b) + conj(a) b
    return 2.0 * (a * np.conj(b)).real


def canonicalize(p: FamilyParams) -> CanonicalForm:
    """Local ``U x V`` bringing ``rho`` to X-shape, with the block vectors ``alpha``, ``beta``."""
    x, y = spin_vectors(p.w, p.z)
    u, wp = aligning_rotation(x, p.w)
    v, zp = aligning_rotation(y, p.z)
    rho = rho_from_params(p)
    uv = kron(u, v)
    rho_prime = dagger(uv) @ rho @ uv

    r = np.linalg.norm(x, axis=-1)
    s = np.linalg.norm(y, axis=-1)
    xi1 = _re_pair(wp[..., 0], zp[..., 0])
    xi2 = _re_pair(wp[..., 1], zp[..., 1])
    zeta1 = _re_pair(wp[..., 1], zp[..., 0])
    zeta2 = _re_pair(wp[..., 0], zp[..., 1])
    alpha = np.stack([xi1 - xi2, zeta1 + zeta2, r + s], axis=-1)
    beta = np.stack([xi1 + xi2, zeta1 - zeta2, r - s], axis=-1)
    return CanonicalForm(rho, rho_prime, alpha, beta, wp, zp, u, v)


def x_state(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``(1 + Lambda')/4`` assembled from the two block vectors."""
    lam = np.zeros(alpha.shape[:-1] + (4, 4), dtype=np.complex128)
    lam[..., 0, 0] = alpha[..., 2]
    lam[..., 3, 3] = -alpha[..., 2]
    lam[..., 0, 3] = alpha[..., 0] - 1j * alpha[..., 1]
    lam[..., 3, 0] = alpha[..., 0] + 1j * alpha[..., 1]
    lam[..., 1, 1] = beta[..., 2]
    lam[..., 2, 2] = -beta[..., 2]
    lam[..., 1, 2] = beta[..., 0] - 1j * beta[..., 1]
    lam[..., 2, 1] = beta[..., 0] + 1j * beta[..., 1]
    return 0.25 * (I4 + lam)


@dataclass(frozen=True)
class Rho24Canonical:
    kappa: np.ndarray
    wnorm2: np.ndarray
    V: np.ndarray

    def matrix(self) -> np.ndarray:
        k0, k1, k2, k3 = np.moveaxis(self.kappa, -1, 0)
        wn = self.wnorm2
        m = np.zeros(k0.shape + (4, 4), dtype=np.complex128)
        m[..., 0, 0] = k0 + k3
        m[..., 3, 3] = k0 - k3
        m[..., 0, 3] = k1 - 1j * k2
        m[..., 3, 0] = k1 + 1j * k2
        m[..., 1, 1] = wn
        m[..., 2, 2] = wn
        m[..., 1, 2] = -wn
        m[..., 2, 1] = -wn
        return 0.5 * m


def _hopf(vp: np.ndarray) -> np.ndarray:
    c = vp[..., 0] * np.conj(vp[..., 1])
    return np.stack([
        sqnorm(vp),
        -(np.abs(vp[..., 0]) ** 2 - np.abs(vp[..., 1]) ** 2),
        -2.0 * c.real,
        -2.0 * c.imag,
    ], axis=-1)


def rho24_canonical(p: FamilyParams) -> Rho24Canonical:
    """Canonical form of ``rho_24``; it equals ``(V^H x V^H) rho_24 (V x V)``."""
    _, y = spin_vectors(p.w, p.z)
    v, zp = aligning_rotation(y, p.z)
    return Rho24Canonical(_hopf(zp), sqnorm(p.w), v)


def rho13_canonical(p: FamilyParams) -> Rho24Canonical:
    """Mirror of :func:`rho24_canonical` with ``w`` and ``z`` exchanged, rotated by ``U``."""
    x, _ = spin_vectors(p.w, p.z)
    u, wp = aligning_rotation(x, p.w)
    return Rho24Canonical(_hopf(wp), sqnorm(p.z), u)



def block_identity_residual(cf: CanonicalForm) -> np.ndarray:
    """Worst deviation, per state, of the identities tying ``alpha`` and ``beta`` to ``w', z'``.

    Checked: ``a1^2 + a2^2``, ``b1^2 + b2^2``, ``1 - a3^2``, ``1 - b3^2`` against
    their expressions in ``|w'|, |z'|, w'.w', z'.z', rs``, plus the two
    consequences ``a1^2 + a2^2 = 1 - a3^2 - eta^2`` (same for ``beta``).
    """
    wp, zp = cf.w_prime, cf.z_prime
    x, y = spin_vectors(wp, zp)
    rs = np.linalg.norm(x, axis=-1) * np.linalg.norm(y, axis=-1)
    wsq = np.sum(wp * wp, axis=-1)
    zsq = np.sum(zp * zp, axis=-1)
    base = 2 * sqnorm(wp) * sqnorm(zp)
    cross = 2 * (wsq * np.conj(zsq)).real
    diag = np.abs(wsq) ** 2 + np.abs(zsq) ** 2
    eta2 = np.abs(wsq - zsq) ** 2
    a, b = cf.alpha, cf.beta
    a12 = a[..., 0] ** 2 + a[..., 1] ** 2
    b12 = b[..., 0] ** 2 + b[..., 1] ** 2
    devs = [
        a12 - (base + cross - 2 * rs),
        b12 - (base + cross + 2 * rs),
        1 - a[..., 2] ** 2 - (base + diag - 2 * rs),
        1 - b[..., 2] ** 2 - (base + diag + 2 * rs),
        a12 - (1 - a[..., 2] ** 2 - eta2),
        b12 - (1 - b[..., 2] ** 2 - eta2),
    ]
    return np.max(np.abs(np.stack(devs, axis=-1)), axis=-1)
