import numpy as np
import pytest
from hypothesis import given, settings

from conftest import family_states
from ftangle.cxmat import I4, SIGMA3, dagger, herm_eig, kron, pauli_dot
from ftangle.density import (
    XMASK, aligning_rotation, block_identity_residual, canonicalize, conjugate_vector, lambda_matrix,
    partial_trace, reduced_closed, rho13_canonical, rho24_canonical, rho_from_params, rotation_to_z, x_state,
)
from ftangle.errors import AntipodalDegenerate, BadSubset, ZeroVector
from ftangle.measures import wootters_oracle
from ftangle.state import amplitudes, invariants, make_params, named_state, random_states, sqnorm

PAIRS = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]


@pytest.fixture(scope="module")
def states():
    return random_states(10_000, 2024)


def test_lambda_square_identity(states):
    lam = lambda_matrix(states.w, states.z)
    eta = invariants(states, check=False).eta
    assert np.max(np.abs(lam @ lam - (1 - eta ** 2)[:, None, None] * I4)) < 1e-12
    assert np.max(np.abs(np.trace(lam, axis1=-2, axis2=-1))) < 1e-15


def test_rho_is_a_density_matrix(states):
    rho = rho_from_params(states)
    assert np.max(np.abs(rho - dagger(rho))) < 1e-15
    assert np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1)) < 1e-15
    assert np.min(herm_eig(rho).eigenvalues) > -1e-14


@pytest.mark.parametrize("keep", PAIRS + [(1,), (2,), (3,), (4,)])
def test_reduced_closed_matches_partial_trace(states, keep):
    oracle = partial_trace(amplitudes(states), keep)
    assert np.max(np.abs(reduced_closed(states, keep) - oracle)) < 1e-12


def test_reduced_structure(states):
    psi = amplitudes(states)
    assert np.max(np.abs(partial_trace(psi, (1, 2)) - partial_trace(psi, (3, 4)))) < 1e-12
    assert np.max(np.abs(partial_trace(psi, (1,)) - partial_trace(psi, (3,)))) < 1e-12
    assert np.max(np.abs(partial_trace(psi, (2,)) - partial_trace(psi, (4,)))) < 1e-12
    spec = herm_eig(partial_trace(psi, (2, 4))).eigenvalues
    wn, zn = sqnorm(states.w), sqnorm(states.z)
    ref = np.sort(np.stack([wn, zn, 0 * wn, 0 * wn], axis=-1), axis=-1)
    assert np.max(np.abs(spec - ref)) < 1e-11


def test_pair_concurrences_equal(states):
    psi = amplitudes(states[:2000])
    cs = [wootters_oracle(partial_trace(psi, keep)) for keep in ((1, 2), (1, 4), (2, 3), (3, 4))]
    for c in cs[1:]:
        assert np.max(np.abs(c - cs[0])) < 1e-9


def test_partial_trace_keep_validation():
    psi = amplitudes(named_state("E5"))
    for bad in [(), (1, 1), (0,), (5,), (1, 2, 3)]:
        with pytest.raises(BadSubset):
            partial_trace(psi, bad)
    assert np.array_equal(partial_trace(psi, (2, 1)), partial_trace(psi, (1, 2)))
    assert partial_trace(psi, 3).shape == (2, 2)


def test_single_qubit_on_e2():
    # w = (1, i, 0)/sqrt2 has x = e3: qubit 1 is pure
    rho1 = reduced_closed(named_state("E2"), (1,))
    assert np.allclose(rho1, np.diag([1, 0]), atol=1e-15)


def test_rotation_to_z():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((500, 3))
    u = rotation_to_z(x)
    r = np.linalg.norm(x, axis=-1)
    assert np.max(np.abs(dagger(u) @ u - np.eye(2))) < 1e-15
    assert np.max(np.abs(np.linalg.det(u) - 1)) < 1e-14
    lhs = dagger(u) @ pauli_dot(x.astype(complex)) @ u
    assert np.max(np.abs(lhs - r[:, None, None] * SIGMA3)) < 1e-14
    with pytest.raises(ZeroVector):
        rotation_to_z([0, 0, 0])
    with pytest.raises(AntipodalDegenerate):
        rotation_to_z([0, 0, -2])


def test_conjugate_vector_real_for_real_input():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((50, 3))
    u = rotation_to_z(x)
    assert np.allclose(conjugate_vector(u, x.astype(complex)), np.linalg.norm(x, axis=-1)[:, None] * [0, 0, 1],
                       atol=1e-14)


def _antipodal_states(n, seed):
    # w along (1, -i, 0) has x = -|w|^2 e3
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w = a[:, None] * np.array([1, -1j, 0])
    z = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    z[: n // 2] = np.conj(z[: n // 2, [0]]) * np.array([1, -1j, 0])  # y antipodal as well
    return make_params(w, z, normalize=True)


def test_aligning_rotation_antipodal_path():
    p = _antipodal_states(200, 10)
    x = invariants(p, check=False).x
    assert np.all(x[:, 2] < 0) and np.max(np.abs(x[:, :2])) < 1e-15
    u, wp = aligning_rotation(x, p.w)
    assert np.max(np.abs(dagger(u) @ pauli_dot(x.astype(complex)) @ u
                         - np.linalg.norm(x, axis=-1)[:, None, None] * SIGMA3)) < 1e-14
    assert np.max(np.abs(wp[:, 2])) == 0
    assert np.max(np.abs(conjugate_vector(u, p.w) - wp)) < 1e-14


def test_aligning_rotation_zero_spin():
    # real w: x = 0 and any rotation works; the third component must still vanish
    w = np.array([0.3, -0.2, 0.5], dtype=complex) * np.exp(0.4j)
    u, wp = aligning_rotation(np.zeros(3), w)
    assert abs(wp[2]) < 1e-15
    assert np.max(np.abs(conjugate_vector(u, w) - wp)) < 1e-15
    u, wp = aligning_rotation(np.zeros(3), np.array([0.6, 0, 0]))
    assert np.array_equal(u, np.eye(2)) and np.array_equal(wp, [0.6, 0, 0])


def _check_canonical(p):
    cf = canonicalize(p)
    inv = invariants(p, check=False)
    uv = kron(cf.U, cf.V)
    assert np.max(np.abs(cf.rho_prime - dagger(uv) @ cf.rho @ uv)) < 1e-12
    assert np.max(cf.xshape_residual) < 1e-12
    assert np.max(np.abs(cf.w_prime[..., 2])) < 1e-12 and np.max(np.abs(cf.z_prime[..., 2])) < 1e-12
    assert np.max(np.abs(cf.alpha[..., 2] - inv.gamma_plus)) < 1e-12
    assert np.max(np.abs(cf.beta[..., 2] - inv.gamma_minus)) < 1e-12
    assert np.max(block_identity_residual(cf)) < 1e-11
    assert np.max(np.abs(x_state(cf.alpha, cf.beta) - cf.rho_prime)) < 1e-12
    # invariance of the bilinear squares and norms under the rotation
    assert np.max(np.abs(np.sum(cf.w_prime ** 2, axis=-1) - inv.w_sq)) < 1e-12
    assert np.max(np.abs(sqnorm(cf.z_prime) - inv.znorm2)) < 1e-12
    return cf


def test_canonicalize_random(states):
    _check_canonical(states)


def test_canonicalize_antipodal():
    _check_canonical(_antipodal_states(1000, 11))


@settings(max_examples=100, deadline=None)
@given(family_states())
def test_canonicalize_property(p):
    _check_canonical(p)


def test_canonical_e5_is_untouched():
    cf = _check_canonical(named_state("E5"))
    assert np.array_equal(cf.U, np.eye(2)) and np.array_equal(cf.V, np.eye(2))
    # xi = 2 Re(w'_1 z'_1) = 0, xi2 = 0, zeta1 = 2 Re(w'_2 z'_1) = 0, zeta2 = 2 Re(w'_1 z'_2) = 0.96
    assert np.allclose(cf.alpha, [0, 0.96, 0], atol=1e-15)
    assert np.allclose(cf.beta, [0, -0.96, 0], atol=1e-15)


def test_canonical_maximal_state():
    cf = _check_canonical(named_state("E3"))
    assert np.allclose(cf.U, np.eye(2)) and np.allclose(cf.V, np.eye(2))
    ref = 0.25 * np.array([[2, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]])
    assert np.max(np.abs(cf.rho_prime - ref)) < 1e-15


def test_diag_three_halves_candidate_is_not_maximal():
    # (1/4) diag-block matrix with corners 3/2, 1/2 and a unit inner block: a valid
    # state, but its concurrence is far from 1/2, so it cannot be the maximal canonical form.
    cand = 0.25 * np.array([[1.5, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0.5]], dtype=complex)
    assert np.min(np.linalg.eigvalsh(cand)) >= 0
    assert wootters_oracle(cand) < 0.1
    assert wootters_oracle(canonicalize(named_state("E3")).rho_prime) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("which", ["24", "13"])
def test_pair_canonical_forms(states, which):
    sub = states[:3000]
    if which == "24":
        can, keep, own = rho24_canonical(sub), (2, 4), sub.z
    else:
        can, keep, own = rho13_canonical(sub), (1, 3), sub.w
    rho = partial_trace(amplitudes(sub), keep)
    vv = kron(can.V, can.V)
    assert np.max(np.abs(can.matrix() - dagger(vv) @ rho @ vv)) < 1e-11
    assert np.max(np.abs(can.kappa[:, 0] - sqnorm(own))) < 1e-12
    # kappa is a null four-vector: kappa_0^2 = |kappa_vec|^2 + |v'.v'|^2 ... reduces to |kappa_vec| <= kappa_0
    assert np.all(np.linalg.norm(can.kappa[:, 1:], axis=-1) <= can.kappa[:, 0] + 1e-12)
