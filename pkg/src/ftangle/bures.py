"""Bures metric on the family, three ways.

``bures_closed`` is the 15-vector formula ``|dk|^2 / (1 - |k|^2)``;
``bures_trace_oracle`` rebuilds ``dLambda`` as a 4x4 matrix straight from
``(dw, dz)`` and takes ``Tr(dLambda^2) / (4 eta^2)``;
``bures_uhlmann_diagnostic`` evaluates the textbook eigenbasis sum
``(1/2) sum |<i|drho|j>|^2 / (l_i + l_j)`` and only reports its ratio to the
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cxmat import I4, as_complex, dagger, herm_eig, kron, pauli_dot
from .density import _eye2, lambda_matrix
from .errors import NotTangent, SingularState, VanishingTraceViolation
from .state import FamilyParams, bilinear_square, spin_vectors, sqnorm

ETA_MIN = 1e-6
ETA_MIN_DIAGNOSTIC = 0.05
TANGENT_TOL = 1e-12
TRACE_TOL = 1e-10


@dataclass(frozen=True)
class TangentParams:
    dw: np.ndarray
    dz: np.ndarray


def make_tangent(p: FamilyParams, dw, dz) -> TangentParams:
    """Validate that ``(dw, dz)`` keeps ``|w|^2 + |z|^2`` fixed to first order.

    Tangents are never projected here; see :func:`random_tangent` for sampling.
    """
    dw = as_complex(dw, "dw")
    dz = as_complex(dz, "dz")
    drift = np.sum(np.conj(p.w) * dw + np.conj(p.z) * dz, axis=-1).real
    if np.max(np.abs(drift), initial=0.0) > TANGENT_TOL:
        raise NotTangent(f"tangent changes the norm to first order (Re<psi, dpsi> = {np.max(np.abs(drift)):.3e})")
    return TangentParams(np.broadcast_to(dw, p.w.shape), np.broadcast_to(dz, p.z.shape))


def random_tangent(p: FamilyParams, rng: np.random.Generator) -> TangentParams:
    """Unit-norm Gaussian direction with the radial part removed."""
    g = rng.standard_normal(p.w.shape[:-1] + (12,))
    v = g[..., 0:6] + 1j * g[..., 6:12]
    psi = np.concatenate([p.w, p.z], axis=-1)
    v = v - np.sum(np.conj(psi) * v, axis=-1, keepdims=True).real * psi
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return make_tangent(p, v[..., 0:3], v[..., 3:6])


def _f_matrix(w: np.ndarray, z: np.ndarray) -> np.ndarray:
    return 2.0 * (w[..., :, None] * np.conj(z[..., None, :])).real


def k_components(w: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``(x, y, f_11, f_12, ..., f_33)`` for any ``w, z``, normalized or not."""
    x, y = spin_vectors(w, z)
    f = _f_matrix(w, z)
    return np.concatenate([x, y, f.reshape(f.shape[:-2] + (9,))], axis=-1)


def k_vector(p: FamilyParams) -> np.ndarray:
    """The 15 real components of ``Lambda`` in the two-qubit Pauli basis.

    ``1 - |k|^2`` equals ``eta^2``; that is checked on every call.
    """
    k = k_components(p.w, p.z)
    eta2 = np.abs(bilinear_square(p.w) - bilinear_square(p.z)) ** 2
    dev = np.max(np.abs(1 - np.sum(k * k, axis=-1) - eta2), initial=0.0)
    if dev > 1e-11:
        raise AssertionError(f"eta^2 = 1 - |k|^2 failed by {dev:.3e}")
    return k


def dk(p: FamilyParams, t: TangentParams) -> np.ndarray:
    """First-order change of :func:`k_vector` along ``t``."""
    w, z, dw, dz = p.w, p.z, t.dw, t.dz
    dx = (1j * (np.cross(dw, np.conj(w)) + np.cross(w, np.conj(dw)))).real
    dy = (1j * (np.cross(dz, np.conj(z)) + np.cross(z, np.conj(dz)))).real
    df = _f_matrix(dw, z) + _f_matrix(w, dz)
    return np.concatenate([dx, dy, df.reshape(df.shape[:-2] + (9,))], axis=-1)


def _eta(p: FamilyParams) -> np.ndarray:
    return np.abs(bilinear_square(p.w) - bilinear_square(p.z))


def _require_regular(eta: np.ndarray, limit: float) -> None:
    if np.any(eta < limit):
        raise SingularState(f"eta = {np.min(eta):.3e} below {limit:g}; rho is (nearly) singular")


def _extended(p: FamilyParams, t: TangentParams) -> tuple[FamilyParams, TangentParams]:
    # Near eta = 0.05 the 1/eta^2 factor magnifies double rounding to ~1e-10
    # in ds^2; both forms are evaluated in long double and rounded at the end.
    ext = np.clongdouble
    return (FamilyParams(p.w.astype(ext), p.z.astype(ext)),
            TangentParams(np.asarray(t.dw).astype(ext), np.asarray(t.dz).astype(ext)))


def bures_closed(p: FamilyParams, t: TangentParams) -> np.ndarray:
    """``|dk|^2 / (1 - |k|^2)``, with ``1`` read as ``(|w|^2 + |z|^2)^2``.

    The homogeneous denominator keeps the identity ``1 - |k|^2 = eta^2`` exact
    for inputs that are normalized only to rounding.
    """
    _require_regular(_eta(p), ETA_MIN)
    k_vector(p)
    pe, te = _extended(p, t)
    d = dk(pe, te)
    k = k_components(pe.w, pe.z)
    norm2 = sqnorm(pe.w) + sqnorm(pe.z)
    return (np.sum(d * d, axis=-1) / (norm2 * norm2 - np.sum(k * k, axis=-1))).astype(np.float64)


def d_lambda(p: FamilyParams, t: TangentParams) -> np.ndarray:
    """``dLambda`` as a 4x4 matrix by the product rule on each term of ``Lambda``."""
    w, z, dw, dz = p.w, p.z, t.dw, t.dz
    dx = (1j * (np.cross(dw, np.conj(w)) + np.cross(w, np.conj(dw)))).real
    dy = (1j * (np.cross(dz, np.conj(z)) + np.cross(z, np.conj(dz)))).real
    one = _eye2(w.shape[:-1])
    cross_terms = (kron(pauli_dot(dw), pauli_dot(np.conj(z))) + kron(pauli_dot(w), pauli_dot(np.conj(dz))))
    cplx = np.result_type(w.dtype, np.complex128)
    return (kron(pauli_dot(dx.astype(cplx)), one)
            + kron(one, pauli_dot(dy.astype(cplx)))
            + cross_terms + dagger(cross_terms))


def rho_inverse(p: FamilyParams) -> np.ndarray:
    """``(4/eta^2)(1 - Lambda)``."""
    eta = _eta(p)
    _require_regular(eta, ETA_MIN)
    return (4 / eta ** 2)[..., None, None] * (I4 - lambda_matrix(p.w, p.z))


def bures_trace_oracle(p: FamilyParams, t: TangentParams, return_residual: bool = False):
    """``Tr(dL dL - dL L dL) / (4 eta^2)`` with the second trace checked to vanish.

    Raises :class:`VanishingTraceViolation` if ``|Tr(dL L dL)| > 1e-10``.
    """
    _require_regular(_eta(p), ETA_MIN)
    p, t = _extended(p, t)
    eta = _eta(p)
    dl = d_lambda(p, t)
    lam = lambda_matrix(p.w, p.z)
    first = np.einsum("...ij,...ji->...", dl, dl).real
    second = np.einsum("...ij,...jk,...ki->...", dl, lam, dl)
    worst = np.max(np.abs(second), initial=0.0)
    if worst > TRACE_TOL:
        raise VanishingTraceViolation(f"Tr(dL L dL) = {worst:.3e} should vanish")
    ds2 = ((first - second.real) / (4 * eta ** 2)).astype(np.float64)
    if return_residual:
        return ds2, np.abs(second).astype(np.float64)
    return ds2


def bures_uhlmann_diagnostic(p: FamilyParams, t: TangentParams) -> tuple[np.ndarray, np.ndarray]:
    """Textbook Bures form and its ratio to :func:`bures_closed` (1 where both vanish)."""
    _require_regular(_eta(p), ETA_MIN_DIAGNOSTIC)
    rho = 0.25 * (I4 + lambda_matrix(p.w, p.z))
    evals, vecs = herm_eig(rho)
    drho = 0.25 * d_lambda(p, t)
    in_basis = dagger(vecs) @ drho @ vecs
    denom = evals[..., :, None] + evals[..., None, :]
    standard = 0.5 * np.sum(np.abs(in_basis) ** 2 / denom, axis=(-2, -1))
    closed = bures_closed(p, t)
    both_zero = (standard == 0) & (closed == 0)
    ratio = np.where(both_zero, 1.0, standard / np.where(closed == 0, np.inf, closed))
    return standard, ratio
