"""The ``(w, z)`` parametrization, four-qubit amplitudes and scalar invariants.

A state of the family is a pair ``w, z`` of complex 3-vectors with
``|w|^2 + |z|^2 = 1``.  All functions accept arrays with leading batch
dimensions: ``w.shape == z.shape == (..., 3)``.

Random sampling
---------------
``random_state(seed)`` draws 12 standard normals from
``numpy.random.default_rng(seed)`` and reads them as
``w = g[0:3] + 1j*g[3:6]``, ``z = g[6:9] + 1j*g[9:12]`` before normalizing.
``random_states(n, seed)`` splits the ``n`` draws into consecutive chunks of
``CHUNK`` states; chunk ``c`` uses the generator seeded with
``SeedSequence(seed, spawn_key=(c,))`` and the same 12-column layout.  The
output therefore does not depend on how many workers process the chunks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cxmat import EPSILON, PAULI, as_complex
from .errors import DualComputationMismatch, NotNormalized, ZeroState

NORM_TOL = 1e-12
DUAL_TOL = 1e-12
CHUNK = 10_000

_SQ = np.sqrt(0.5)
TEST_VECTORS = {
    "E1": ((1, 0, 0), (0, 0, 0)),
    "E2": ((_SQ, _SQ * 1j, 0), (0, 0, 0)),
    "E3": ((0.5, 0.5j, 0), (0.5, 0.5j, 0)),
    "E4": ((np.sqrt(0.1), np.sqrt(0.1) * 1j, 0), (np.sqrt(0.4), -np.sqrt(0.4) * 1j, 0)),
    "E5": ((0.6, 0, 0), (0, 0.8, 0)),
}


@dataclass(frozen=True)
class FamilyParams:
    """Normalized pair ``(w, z)``; build through :func:`make_params`."""

    w: np.ndarray
    z: np.ndarray

    @property
    def batch_shape(self) -> tuple:
        return self.w.shape[:-1]

    def __len__(self) -> int:
        return int(np.prod(self.batch_shape, dtype=int)) if self.batch_shape else 1

    def __getitem__(self, idx) -> "FamilyParams":
        return FamilyParams(self.w[idx], self.z[idx])


@dataclass(frozen=True)
class InvariantSet:
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray
    s: np.ndarray
    eta: np.ndarray
    sigma: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    H: np.ndarray
    L: np.ndarray
    # not independent invariants, but every closed form downstream needs them
    wnorm2: np.ndarray
    znorm2: np.ndarray
    w_sq: np.ndarray
    z_sq: np.ndarray


def sqnorm(v: np.ndarray) -> np.ndarray:
    return np.sum(v.real ** 2 + v.imag ** 2, axis=-1)


def bilinear_square(v: np.ndarray) -> np.ndarray:
    """``v . v`` without complex conjugation."""
    return np.sum(v * v, axis=-1)


def make_params(w, z, normalize: bool = False) -> FamilyParams:
    w = as_complex(w, "w").copy()
    z = as_complex(z, "z").copy()
    if w.shape[-1:] != (3,) or z.shape != w.shape:
        raise ValueError(f"w and z must both have shape (..., 3), got {w.shape} and {z.shape}")
    total = sqnorm(w) + sqnorm(z)
    if normalize:
        if np.any(total == 0.0):
            raise ZeroState("cannot normalize w = z = 0")
        scale = np.sqrt(total)[..., None]
        w, z = w / scale, z / scale
    else:
        dev = np.max(np.abs(total - 1.0), initial=0.0)
        if dev > NORM_TOL:
            raise NotNormalized(f"|w|^2 + |z|^2 deviates from 1 by {dev:.3e}")
    w.setflags(write=False)
    z.setflags(write=False)
    return FamilyParams(w, z)


def named_state(name: str) -> FamilyParams:
    """One of the fixtures ``E1``..``E5``."""
    w, z = TEST_VECTORS[name]
    return make_params(w, z)


def symmetric_block(v: np.ndarray) -> np.ndarray:
    # eps (v . conj(sigma)), symmetric 2x2
    return np.einsum("ij,...a,ajk->...ik", EPSILON, v, PAULI.conj())


def amplitudes(p: FamilyParams) -> np.ndarray:
    """Antisymmetric four-qubit amplitudes, flat index ``8i + 4j + 2k + l``."""
    a = symmetric_block(p.z)
    b = symmetric_block(p.w)
    psi = 0.5 * (np.einsum("ik,...jl->...ijkl", EPSILON, a) + np.einsum("...ik,jl->...ijkl", b, EPSILON))
    return psi.reshape(psi.shape[:-4] + (16,))


def spin_vectors(w: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The real vectors ``x = i w x conj(w)`` and ``y = i z x conj(z)``."""
    x = 1j * np.cross(w, np.conj(w))
    y = 1j * np.cross(z, np.conj(z))
    return x.real, y.real


def invariant_H(psi: np.ndarray) -> np.ndarray:
    """Quadratic four-qubit invariant from the 16 amplitudes."""
    pairs = ((0, 15, 1), (1, 14, -1), (2, 13, -1), (3, 12, 1),
             (4, 11, -1), (5, 10, 1), (6, 9, 1), (7, 8, -1))
    return sum(sign * psi[..., a] * psi[..., b] for a, b, sign in pairs)


def invariant_L(psi: np.ndarray) -> np.ndarray:
    """Quartic invariant: determinant of the amplitudes as a 4x4 matrix."""
    return np.linalg.det(psi.reshape(psi.shape[:-1] + (4, 4)))


def invariants(p: FamilyParams, check: bool = True) -> InvariantSet:
    """All scalar invariants of a state.

    ``H`` and ``L`` are evaluated from the amplitudes and compared against
    ``-(z.z + w.w)/2`` and ``(z.z - w.w)^2/16``; a disagreement above
    ``1e-12`` raises :class:`DualComputationMismatch`.
    """
    w, z = p.w, p.z
    x, y = spin_vectors(w, z)
    r = np.linalg.norm(x, axis=-1)
    s = np.linalg.norm(y, axis=-1)
    w_sq = bilinear_square(w)
    z_sq = bilinear_square(z)
    eta = np.abs(w_sq - z_sq)
    sigma = np.abs(w_sq + z_sq)

    H = -0.5 * (z_sq + w_sq)
    L = (z_sq - w_sq) ** 2 / 16
    if check:
        psi = amplitudes(p)
        dev_h = np.max(np.abs(invariant_H(psi) - H), initial=0.0)
        dev_l = np.max(np.abs(invariant_L(psi) - L), initial=0.0)
        if dev_h > DUAL_TOL or dev_l > DUAL_TOL:
            raise DualComputationMismatch(f"H/L amplitude forms disagree: dH={dev_h:.3e}, dL={dev_l:.3e}")

    return InvariantSet(
        x=x, y=y, r=r, s=s, eta=eta, sigma=sigma,
        gamma_plus=r + s, gamma_minus=r - s, H=H, L=L,
        wnorm2=sqnorm(w), znorm2=sqnorm(z), w_sq=w_sq, z_sq=z_sq,
    )


def _from_normals(g: np.ndarray) -> FamilyParams:
    w = g[..., 0:3] + 1j * g[..., 3:6]
    z = g[..., 6:9] + 1j * g[..., 9:12]
    return make_params(w, z, normalize=True)


def random_state(rng_seed: int) -> FamilyParams:
    """Uniform sample from the unit sphere in C^6."""
    return _from_normals(np.random.default_rng(rng_seed).standard_normal(12))


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def random_chunk(seed: int, chunk: int, size: int) -> FamilyParams:
    return _from_normals(chunk_rng(seed, chunk).standard_normal((size, 12)))


def chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def random_states(n: int, seed: int) -> FamilyParams:
    """``n`` uniform samples as one batch; see the module docstring for the stream layout."""
    parts = [random_chunk(seed, c, size) for c, size in enumerate(chunk_sizes(n))]
    return make_params(np.concatenate([q.w for q in parts]), np.concatenate([q.z for q in parts]))
