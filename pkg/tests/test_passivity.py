import numpy as np
import pytest

from relaxkit.errors import DomainError, NonUnique
from relaxkit.gen import gyrator_like, random_relaxation, rc_two_port
from relaxkit.model import StateSpaceModel, similarity_transform
from relaxkit.passivity import (TCertificate, lemma_passivity_check, lmi_matrix, lmi_residual,
                                signature_inertia, solve_T)

from helpers import first_order


def test_symmetric_coordinates_give_identity():
    s = random_relaxation(2, 4, 2, 1)
    cert = solve_T(s)
    assert np.allclose(cert.T, np.eye(s.n), rtol=0, atol=1e-12)
    assert cert.residual_sylvester <= 1e-12 and cert.residual_output <= 1e-12


def test_transformation_law():
    rng = np.random.default_rng(3)
    s = random_relaxation(6, 3, 2, 2)
    S = rng.standard_normal((s.n, s.n)) + 2 * np.eye(s.n)
    cert = solve_T(similarity_transform(s, S))
    Si = np.linalg.inv(S)
    expect = Si.T @ Si
    assert np.linalg.norm(cert.T - expect) <= 1e-9 * np.linalg.norm(expect)
    assert cert.residual_sylvester <= 1e-9 and cert.residual_output <= 1e-9


def test_gyrator_has_no_valid_certificate():
    try:
        cert = solve_T(gyrator_like())
    except NonUnique:
        return
    assert not cert.residuals_ok() or signature_inertia(cert)[1] > 0


def test_non_minimal_system_is_not_unique():
    s = StateSpaceModel(np.diag([-1.0, -2.0]), np.array([[1.0], [0.0]]),
                        np.array([[1.0, 0.0]]), np.zeros((1, 1)))
    with pytest.raises(NonUnique) as info:
        solve_T(s)
    assert info.value.nullity >= 1


def test_passivity_check_examples():
    s = first_order()
    cert = TCertificate.from_matrix(s, [[1.0]])
    assert lemma_passivity_check(s, cert)
    two = StateSpaceModel(-np.eye(2), np.eye(2), np.diag([1.0, -1.0]), np.zeros((2, 2)))
    cert = TCertificate.from_matrix(two, np.diag([1.0, -1.0]))
    assert cert.residuals_ok() and not lemma_passivity_check(two, cert)
    swap = StateSpaceModel(-np.eye(2), np.eye(2), np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert not lemma_passivity_check(swap, TCertificate.from_matrix(swap, np.eye(2)))


def test_passivity_check_rejects_invalid_certificate():
    s = first_order()
    with pytest.raises(DomainError):
        lemma_passivity_check(s, TCertificate.from_matrix(s, [[2.0]]))


def test_lmi_examples():
    s = first_order()
    assert np.array_equal(lmi_matrix(s, [[1.0]]), [[-2.0, 0.0], [0.0, 0.0]])
    assert lmi_residual(s, [[1.0]]) == 0.0
    assert lmi_residual(s, [[0.0]]) >= 1.0
    sd = s.with_D([[1.0]])
    assert lmi_residual(sd, [[1.0]]) <= 0.0
    with pytest.raises(DomainError):
        lmi_matrix(rc_two_port().with_D(np.eye(2)), [[1.0, 2.0]])
    two = StateSpaceModel(-np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)))
    with pytest.raises(DomainError):
        lmi_residual(two, [[1.0, 1.0], [0.0, 1.0]])


def test_inertia_examples():
    two = StateSpaceModel(-np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)))
    assert signature_inertia(TCertificate.from_matrix(two, np.eye(2))) == (2, 0, 0)
    assert signature_inertia(TCertificate.from_matrix(two, np.diag([1.0, -1.0]))) == (1, 1, 0)


def test_relaxation_certificates_are_positive():
    for seed in range(20):
        s = random_relaxation(seed, 3, 2, 1)
        cert = solve_T(s)
        assert cert.valid() and lemma_passivity_check(s, cert)
        assert signature_inertia(cert) == (s.n, 0, 0)
        scale = 1 + np.abs(lmi_matrix(s, cert.T)).max()
        assert lmi_residual(s, cert.T) <= 1e-8 * scale
