"""Entanglement measures of the family: closed forms, eigensolver oracles, monogamy.

Closed forms take an :class:`~ftangle.state.InvariantSet`; oracles take plain
density matrices and only use :mod:`ftangle.cxmat`.  Everything is vectorized
over leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cxmat import SIGMA2, herm_eig, kron, partial_transpose_2, product_spectrum
from .density import partial_trace
from .errors import DomainError, DualComputationMismatch, IdentityViolation, NegativeRadicand
from .state import FamilyParams, InvariantSet, amplitudes

RADICAND_CLAMP = 1e-12
RADICAND_FAIL = 1e-9
BRANCH_BAND = 1e-12
IDENTITY_FAIL = 1e-8
ORACLE_TOL = 1e-9
CLOSED_TOL = 1e-11

SPIN_FLIP = kron(SIGMA2, SIGMA2)
MAX_NEGATIVITY = (np.sqrt(2.0) - 1.0) / 2.0


def _root(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    worst = np.min(x, initial=0.0)
    if worst < -RADICAND_FAIL:
        raise NegativeRadicand(f"radicand {worst:.3e} is negative beyond roundoff")
    return np.sqrt(np.maximum(x, 0.0))


def concurrence_closed(inv: InvariantSet) -> np.ndarray:
    a = _root(1 - inv.gamma_minus ** 2 - inv.eta ** 2)
    b = _root(1 - inv.gamma_plus ** 2)
    return np.maximum(0.0, 0.5 * (a - b))


def negativity_closed(inv: InvariantSet) -> np.ndarray:
    return np.maximum(0.0, 0.5 * (_root(1 - inv.eta ** 2 + 4 * inv.r * inv.s) - 1))


def purity(inv: InvariantSet) -> tuple[np.ndarray, np.ndarray]:
    """``(Tr rho^2, 1/Tr rho^2)``; both depend on ``eta`` alone."""
    trace_sq = 0.25 * (2 - inv.eta ** 2)
    if np.any(trace_sq < 0.25 - 1e-12) or np.any(trace_sq > 0.5 + 1e-12):
        raise DomainError("purity outside [1/4, 1/2]; invariants are not from a valid state")
    return trace_sq, 4 / (2 - inv.eta ** 2)


def rho_spectrum_closed(inv: InvariantSet) -> np.ndarray:
    """Eigenvalues of ``rho``, ascending: each of ``(1 -+ sqrt(1 - eta^2))/4`` twice."""
    d = _root(1 - inv.eta ** 2)
    lo, hi = 0.25 * (1 - d), 0.25 * (1 + d)
    return np.stack([lo, lo, hi, hi], axis=-1)


def spinflip_spectrum_closed(inv: InvariantSet) -> np.ndarray:
    """Square roots of the eigenvalues of ``rho rho~``, descending."""
    vals = []
    for g in (inv.gamma_plus, inv.gamma_minus):
        a = _root(1 - g ** 2)
        b = _root(1 - g ** 2 - inv.eta ** 2)
        vals += [0.25 * (a + b), 0.25 * (a - b)]
    out = np.stack(vals, axis=-1)
    order = np.argsort(-out, axis=-1, kind="stable")
    return np.take_along_axis(out, order, axis=-1)


def pt_spectrum_closed(inv: InvariantSet) -> np.ndarray:
    """Eigenvalues of the partial transpose of ``rho``, ascending."""
    four_rs = 4 * inv.r * inv.s
    a = _root(1 - inv.eta ** 2 + four_rs)
    b = _root(1 - inv.eta ** 2 - four_rs)
    out = np.stack([0.25 * (1 - a), 0.25 * (1 - b), 0.25 * (1 + b), 0.25 * (1 + a)], axis=-1)
    return np.sort(out, axis=-1, kind="stable")


def spin_flip(rho) -> np.ndarray:
    return SPIN_FLIP @ np.conj(rho) @ SPIN_FLIP


def wootters_oracle(rho) -> np.ndarray:
    lam = product_spectrum(rho, spin_flip(rho))
    return np.maximum(0.0, lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3])


def negativity_oracle(rho) -> np.ndarray:
    mu = herm_eig(partial_transpose_2(rho)).eigenvalues
    return np.maximum(0.0, -2.0 * mu[..., 0])


def _worst(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def single_tangles(inv: InvariantSet, p: FamilyParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Tangles of qubit 1 and qubit 2 with the other three: ``(1 - r^2, 1 - s^2)``.

    Given the state as well, each is recomputed as ``4 det`` of the traced-out
    single-qubit matrices (qubits 1..4) and compared to ``1e-11``.
    """
    t1 = 1 - inv.r ** 2
    t2 = 1 - inv.s ** 2
    if p is not None:
        psi = amplitudes(p)
        dets = {q: 4 * np.linalg.det(partial_trace(psi, (q,))).real for q in (1, 2, 3, 4)}
        dev = max(_worst(dets[1] - t1), _worst(dets[3] - t1), _worst(dets[2] - t2), _worst(dets[4] - t2))
        if dev > CLOSED_TOL:
            raise DualComputationMismatch(f"single-qubit tangles disagree with 4 det(rho_q) by {dev:.3e}")
    return t1, t2


def cross_concurrences(inv: InvariantSet, p: FamilyParams, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Squared concurrences of the ``13`` and ``24`` pairs.

    With ``check`` the values are compared with the Wootters oracle on the
    traced-out pairs and with the equivalent invariant expression
    ``s^2 + (eta^2 + sigma^2)/2 - 2 |z|^2 |w.w|`` (mirrored for ``24``).
    """
    abs_wsq = np.abs(inv.w_sq)
    abs_zsq = np.abs(inv.z_sq)
    c2_13 = (inv.znorm2 - abs_wsq) ** 2
    c2_24 = (inv.wnorm2 - abs_zsq) ** 2
    if check:
        half = 0.5 * (inv.eta ** 2 + inv.sigma ** 2)
        alt13 = inv.s ** 2 + half - 2 * inv.znorm2 * abs_wsq
        alt24 = inv.r ** 2 + half - 2 * inv.wnorm2 * abs_zsq
        dev = max(_worst(alt13 - c2_13), _worst(alt24 - c2_24))
        if dev > CLOSED_TOL:
            raise DualComputationMismatch(f"cross-concurrence invariant form off by {dev:.3e}")
        psi = amplitudes(p)
        c13 = wootters_oracle(partial_trace(psi, (1, 3)))
        c24 = wootters_oracle(partial_trace(psi, (2, 4)))
        dev = max(_worst(c13 - np.sqrt(c2_13)), _worst(c24 - np.sqrt(c2_24)))
        if dev > ORACLE_TOL:
            raise DualComputationMismatch(f"cross concurrences disagree with Wootters oracle by {dev:.3e}")
    return c2_13, c2_24


@dataclass(frozen=True)
class TangleReport:
    c2_1_234: np.ndarray
    c2_2_134: np.ndarray
    c2_12: np.ndarray
    c2_13: np.ndarray
    c2_24: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    branch: np.ndarray
    """``"entangled"`` or ``"separable"`` per state."""
    boundary: np.ndarray
    """True where ``|4rs - eta^2| <= 1e-12``; both branches were evaluated there."""
    identity_residual: np.ndarray
    """Max deviation of the two tangle-sum identities, per state."""

    @property
    def saturated(self) -> np.ndarray:
        return (np.abs(self.sigma1) <= 1e-12) & (np.abs(self.sigma2) <= 1e-12)


def _residual_entangled(inv: InvariantSet, p_plus, p_minus):
    half_sig = 0.5 * inv.sigma ** 2
    root = _root((half_sig + p_plus) * (half_sig + p_minus))
    s1 = 2 * inv.znorm2 * np.abs(inv.w_sq) + root - half_sig
    s2 = 2 * inv.wnorm2 * np.abs(inv.z_sq) + root - half_sig
    pair_sum = 1 - inv.r ** 2 - inv.s ** 2 - 0.5 * inv.eta ** 2 - np.sqrt(
        np.maximum(1 - inv.eta ** 2 - inv.gamma_minus ** 2, 0.0) * np.maximum(1 - inv.gamma_plus ** 2, 0.0))
    c2_12 = np.maximum(0.5 * pair_sum, 0.0)
    return s1, s2, c2_12


def _residual_separable(inv: InvariantSet):
    s1 = 2 * inv.znorm2 * (np.abs(inv.w_sq) + inv.wnorm2)
    s2 = 2 * inv.wnorm2 * (np.abs(inv.z_sq) + inv.znorm2)
    return s1, s2, np.zeros_like(s1)


def residual_tangles(inv: InvariantSet, p: FamilyParams | None = None, check: bool = False) -> TangleReport:
    """Residual tangles closing the two monogamy relations into identities.

    For entangled states ``C12^2 + C14^2`` comes from squaring the
    concurrence formula and is split evenly (the two are equal).  Raises
    :class:`IdentityViolation` if either identity
    ``C12^2 + C13^2 + C14^2 + Sigma1 = C1(234)^2`` (and its mirror) is off by
    more than ``1e-8``.
    """
    c2_1, c2_2 = single_tangles(inv, p if check else None)
    c2_13, c2_24 = cross_concurrences(inv, p, check=check and p is not None)
    gap = 4 * inv.r * inv.s - inv.eta ** 2
    p_plus = 2 * inv.znorm2 * inv.wnorm2 + 0.5 * gap
    p_minus = 2 * inv.znorm2 * inv.wnorm2 - 0.5 * gap

    entangled = gap > BRANCH_BAND
    boundary = np.abs(gap) <= BRANCH_BAND
    ent = _residual_entangled(inv, p_plus, np.maximum(p_minus, 0.0))
    sep = _residual_separable(inv)
    s1, s2, c2_12 = (np.where(entangled, e, s) for e, s in zip(ent, sep))

    res = np.maximum(np.abs(2 * c2_12 + c2_13 + s1 - c2_1), np.abs(2 * c2_12 + c2_24 + s2 - c2_2))
    if np.any(boundary):
        # both branches must close the identities inside the band
        res_ent = np.maximum(np.abs(2 * ent[2] + c2_13 + ent[0] - c2_1), np.abs(2 * ent[2] + c2_24 + ent[1] - c2_2))
        res = np.where(boundary, np.maximum(res, res_ent), res)
    worst = _worst(res)
    if worst > IDENTITY_FAIL:
        raise IdentityViolation(f"monogamy identity violated by {worst:.3e}")

    return TangleReport(
        c2_1_234=c2_1, c2_2_134=c2_2, c2_12=c2_12, c2_13=c2_13, c2_24=c2_24,
        sigma1=s1, sigma2=s2, p_plus=p_plus, p_minus=p_minus,
        branch=np.where(entangled, "entangled", "separable"), boundary=boundary,
        identity_residual=res,
    )


def cn_bounds(c) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper negativity bounds at concurrence ``c`` for this family."""
    c = np.asarray(c, dtype=float)
    if np.any(c < -1e-12) or np.any(c > 0.5 + 1e-12):
        raise DomainError("concurrence must lie in [0, 1/2]")
    c = np.clip(c, 0.0, 0.5)
    lower = np.sqrt((1 - c) ** 2 + c ** 2) - (1 - c)
    upper = 0.5 * (np.sqrt(2 - (1 - 2 * c) ** 2) - 1)
    if np.any(lower > upper + 1e-15) or np.any(upper > c + 1e-15):
        raise AssertionError("bound ordering lower <= upper <= c failed")
    return lower, upper


def boundary_family(r) -> tuple[np.ndarray, np.ndarray]:
    """``(C, N)`` of the states with ``w = z`` and ``|x| = r``; they saturate the upper bound."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r > 0.5):
        raise DomainError("r must lie in (0, 1/2]")
    c = 0.5 * (1 - np.sqrt(1 - 4 * r ** 2))
    n = 0.5 * (np.sqrt(1 + 4 * r ** 2) - 1)
    _, upper = cn_bounds(c)
    if _worst(upper - n) > 1e-12:
        raise AssertionError("boundary family does not saturate the upper bound")
    return c, n


@dataclass(frozen=True)
class MeasureReport:
    concurrence: np.ndarray
    negativity: np.ndarray
    purity: np.ndarray
    participation: np.ndarray
    rho_spectrum: np.ndarray
    spinflip_spectrum: np.ndarray
    pt_spectrum: np.ndarray
    entangled: np.ndarray


def measure_report(inv: InvariantSet) -> MeasureReport:
    c = concurrence_closed(inv)
    trace_sq, part = purity(inv)
    return MeasureReport(
        concurrence=c,
        negativity=negativity_closed(inv),
        purity=trace_sq,
        participation=part,
        rho_spectrum=rho_spectrum_closed(inv),
        spinflip_spectrum=spinflip_spectrum_closed(inv),
        pt_spectrum=pt_spectrum_closed(inv),
        entangled=c > 0,
    )
