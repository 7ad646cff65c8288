import numpy as np
import pytest

from diraclab.algebra import (ALPHA, ALPHA5, BETA, GAMMA, SPIN,
                              chiral_invariant, class_V_matrix, conjugation_C,
                              dirac_constants, gamma_pairing, in_class_V, in_E,
                              project_E, project_E_alt, random_E_spinor)

I4 = np.eye(4)


def test_all_anticommutation_relations_exact():
    # beta relations
    assert np.array_equal(BETA @ BETA, I4)
    for a in ALPHA:
        assert np.array_equal(BETA @ a + a @ BETA, np.zeros((4, 4)))
    # alpha relations, including squares
    for j in range(3):
        for k in range(3):
            lhs = ALPHA[j] @ ALPHA[k] + ALPHA[k] @ ALPHA[j]
            assert np.array_equal(lhs, 2.0 * (j == k) * I4)


def test_hermiticity_of_generators():
    for m in (BETA, *ALPHA, ALPHA5):
        assert np.array_equal(m, m.conj().T)


def test_gamma_structure():
    assert np.array_equal(GAMMA @ GAMMA, I4)
    assert np.array_equal(GAMMA, GAMMA.T)
    assert np.array_equal(GAMMA, GAMMA.conj())


def test_conjugation_is_antilinear_involution(rng):
    z = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
    assert np.allclose(conjugation_C(conjugation_C(z)), z, atol=0, rtol=0)
    lam = 2.0 - 3.0j
    assert np.allclose(conjugation_C(lam * z), np.conj(lam) * conjugation_C(z))


def test_spin_matrices():
    # S_j = -(i/2) alpha_k alpha_l, hermitian with square 1/4 I
    for s in SPIN:
        assert np.allclose(s, s.conj().T)
        assert np.allclose(s @ s, 0.25 * I4)
    consts = dirac_constants()
    assert set(consts) == {"alpha1", "alpha2", "alpha3", "beta", "gamma",
                           "alpha5", "S1", "S2", "S3"}


def test_chiral_invariant_examples():
    assert chiral_invariant(np.array([1, 0, 0, 1], dtype=complex)) == 0.0
    assert chiral_invariant(np.array([1, 0, 0, 0], dtype=complex)) == 1.0
    assert chiral_invariant(np.zeros(4, dtype=complex)) == 0.0


def test_chiral_invariant_vanishes_on_phase_rotated_E(rng):
    z = random_E_spinor(rng, shape=(1000,))
    theta = rng.uniform(0, 2 * np.pi, size=(1000, 1))
    rotated = np.exp(1j * theta) * z
    norms = np.linalg.norm(z, axis=-1)
    assert np.all(chiral_invariant(rotated) <= 1e-12 * norms ** 4)


def test_chiral_invariant_nonnegative(rng):
    z = 10 * (rng.standard_normal((500, 4)) + 1j * rng.standard_normal((500, 4)))
    assert np.all(chiral_invariant(z) >= 0)


def test_project_E_examples():
    d = project_E(np.array([1, 0, 0, 1], dtype=complex))
    assert np.allclose(d.parallel, [1, 0, 0, 1], atol=0)
    assert np.allclose(d.defect, 0, atol=0)

    d = project_E(np.array([1, 0, 0, 0], dtype=complex))
    assert np.allclose(d.parallel, [0.5, 0, 0, 0.5], atol=0)
    assert np.allclose(d.defect, [0.5, 0, 0, -0.5], atol=0)

    z = np.array([0, 1, -1, 0], dtype=complex)
    d = project_E(z)
    assert np.allclose(d.parallel, z, atol=0)


def test_project_E_idempotent_and_orthogonal(rng):
    z = rng.standard_normal((200, 4)) + 1j * rng.standard_normal((200, 4))
    d = project_E(z)
    again = project_E(d.parallel)
    assert np.abs(again.parallel - d.parallel).max() < 1e-14
    assert np.abs(d.reconstruct() - z).max() < 1e-14
    # defect real-orthogonal to E
    e = random_E_spinor(rng, shape=(200,))
    ip = np.sum(d.defect * np.conj(e), axis=-1)
    assert np.abs(ip.real).max() < 1e-12 * np.linalg.norm(e, axis=-1).max() * 10


def test_both_projections_land_in_E(rng):
    z = rng.standard_normal((100, 4)) + 1j * rng.standard_normal((100, 4))
    assert np.all(in_E(project_E(z).parallel))
    assert np.all(in_E(project_E_alt(z)))


def test_project_E_alt_examples():
    out = project_E_alt(np.array([1, 0, 0, 1], dtype=complex))
    assert np.allclose(out, [2, 0, 0, 2], atol=0)
    assert np.allclose(project_E_alt(np.zeros(4, dtype=complex)), 0, atol=0)
    out = project_E_alt(np.array([1j, 0, 0, 0], dtype=complex))
    assert np.allclose(out, [1j, 0, 0, -1j], atol=0)
    assert np.allclose(out @ GAMMA.T, np.conj(out), atol=0)


def test_project_E_alt_not_identity_on_E():
    # on E the componentwise symmetrization is not a scalar multiple of the identity
    z = np.array([1j, 0, 0, -1j], dtype=complex)   # in E
    out = project_E_alt(z)
    assert not np.allclose(out, 2 * z)


def test_in_class_V_examples():
    assert in_class_V(BETA)
    assert not in_class_V(ALPHA[0])
    m = class_V_matrix(1.0, 2.0, 1 + 1j, 3j)
    assert in_class_V(m)
    assert np.allclose(m, m.conj().T)


def test_class_V_is_real_vector_space(rng):
    for _ in range(20):
        m1 = class_V_matrix(rng.standard_normal(), rng.standard_normal(),
                            complex(*rng.standard_normal(2)),
                            complex(*rng.standard_normal(2)))
        m2 = class_V_matrix(rng.standard_normal(), rng.standard_normal(),
                            complex(*rng.standard_normal(2)),
                            complex(*rng.standard_normal(2)))
        assert in_class_V(m1 + m2, tol=1e-12)
        assert in_class_V(2.5 * m1, tol=1e-12)


def test_in_class_V_tolerance_and_errors():
    with pytest.raises(ValueError):
        in_class_V(BETA, tol=-1.0)
    with pytest.raises(ValueError):
        in_class_V(np.eye(3))
    noisy = BETA + 1e-9 * np.ones((4, 4))
    assert not in_class_V(noisy, tol=1e-12)
    assert in_class_V(noisy, tol=1e-7)


def test_gamma_pairing_conjugate_symmetry(rng):
    z = rng.standard_normal((100, 4)) + 1j * rng.standard_normal((100, 4))
    swapped = conjugation_C(z)       # gamma * conj(z)
    assert np.allclose(gamma_pairing(swapped), np.conj(gamma_pairing(z)),
                       rtol=1e-14, atol=1e-14)
