import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaxkit.errors import DomainError, PoleError
from relaxkit.gen import rc_two_port
from relaxkit.model import (StateSpaceModel, Trajectory, impulse_response_g, is_minimal,
                            is_stable, markov_parameters, matrix_exponential,
                            similarity_transform, simulate_foh, simulate_zoh, transfer_eval)

from helpers import first_order, oscillator, random_stable


def test_dimension_checks():
    with pytest.raises(DomainError):
        StateSpaceModel(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), np.zeros((1, 1)))
    with pytest.raises(DomainError):
        StateSpaceModel(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), np.zeros((2, 1)))
    with pytest.raises(DomainError):
        StateSpaceModel(np.array([[np.nan]]), np.ones((1, 1)), np.ones((1, 1)), np.zeros((1, 1)))


def test_square_flag():
    rect = StateSpaceModel(-np.eye(2), np.ones((2, 1)), np.ones((2, 2)), np.zeros((2, 1)))
    assert not rect.is_square
    with pytest.raises(DomainError):
        rect.require_square()
    assert first_order().is_square


def test_matrices_are_read_only():
    s = first_order()
    with pytest.raises(ValueError):
        s.A[0, 0] = 3.0


def test_impulse_response_examples():
    s = first_order()
    assert np.array_equal(impulse_response_g(s, 0.0), [[1.0]])
    assert impulse_response_g(s, 1.0)[0, 0] == pytest.approx(math.exp(-1), rel=1e-14)
    assert np.array_equal(impulse_response_g(rc_two_port(), 0.0), np.ones((2, 2)))
    with pytest.raises(DomainError):
        impulse_response_g(s, -0.1)


def test_matrix_exponential_examples():
    assert np.array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))
    E = matrix_exponential(np.diag([-1.0, -2.0]))
    assert np.allclose(E, np.diag([math.exp(-1), math.exp(-2)]), rtol=1e-14, atol=0)
    assert np.allclose(matrix_exponential(np.array([[0.0, 1.0], [0.0, 0.0]])),
                       [[1.0, 1.0], [0.0, 1.0]], rtol=0, atol=1e-15)
    with pytest.raises(DomainError):
        matrix_exponential(np.array([[np.inf]]))


def test_matrix_exponential_against_series():
    # independent oracle: Taylor series in extended precision
    import mpmath
    rng = np.random.default_rng(3)
    M = rng.standard_normal((4, 4))
    M *= 3.0 / np.linalg.norm(M, 2)
    ref = np.array(mpmath.expm(mpmath.matrix(M.tolist()), method="taylor").tolist(), dtype=float)
    assert np.linalg.norm(matrix_exponential(M) - ref) / np.linalg.norm(ref) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 6),
       t=st.floats(0.0, 3.0), s=st.floats(0.0, 3.0))
def test_exponential_semigroup(seed, n, t, s):
    A = random_stable(np.random.default_rng(seed), n).A
    lhs = matrix_exponential(A * (t + s))
    rhs = matrix_exponential(A * t) @ matrix_exponential(A * s)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(np.linalg.norm(lhs), 1e-300) + 1e-14


def test_is_stable_examples():
    assert is_stable(first_order()) == (True, -1.0)
    flag, alpha = is_stable(oscillator())
    assert flag and alpha == pytest.approx(-0.5, abs=1e-14)
    z = StateSpaceModel(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)), np.zeros((1, 1)))
    assert is_stable(z) == (False, 0.0)


def test_is_minimal_examples():
    assert is_minimal(first_order()) == (True, True)
    A = np.diag([-1.0, -2.0])
    assert is_minimal(StateSpaceModel(A, np.array([[1.0], [0.0]]), np.array([[1.0, 0.0]]),
                                      np.zeros((1, 1)))) == (False, False)
    assert is_minimal(StateSpaceModel(A, np.array([[1.0], [1.0]]), np.array([[1.0, 1.0]]),
                                      np.zeros((1, 1)))) == (True, True)


def test_eigenvalue_minimality_test():
    A = np.diag([-1.0, -2.0])
    half = StateSpaceModel(A, np.array([[1.0], [0.0]]), np.array([[1.0, 1.0]]), np.zeros((1, 1)))
    assert is_minimal(half, method="pbh") == (False, True)
    # seven spread modes: the Kalman matrix loses rank numerically, the eigenvalue test does not
    rates = np.array([0.13, 0.89, 2.40, 2.44, 2.88, 7.0, 7.65])
    wide = StateSpaceModel(np.diag(-rates), np.ones((7, 1)), np.ones((1, 7)), np.zeros((1, 1)))
    assert is_minimal(wide) == (False, False)
    assert is_minimal(wide, method="pbh") == (True, True)
    # a Jordan block entered at its top state and read at its bottom one
    J = np.array([[-1.0, 1.0], [0.0, -1.0]])
    jb = StateSpaceModel(J, np.array([[1.0], [0.0]]), np.array([[0.0, 1.0]]), np.zeros((1, 1)))
    assert is_minimal(jb, method="pbh") == is_minimal(jb) == (False, False)
    with pytest.raises(DomainError):
        is_minimal(half, method="gramian")


def test_simulate_zoh_examples():
    s = first_order()
    tr = simulate_zoh(s, np.zeros((20, 1)), 0.1)
    assert not np.any(tr.states) and not np.any(tr.outputs)
    tr = simulate_zoh(s, np.ones((30, 1)), 0.1)
    k = np.arange(30)
    assert np.allclose(tr.states[:, 0], 1 - np.exp(-0.1 * k), rtol=0, atol=1e-14)
    tr = simulate_zoh(s, np.zeros((30, 1)), 0.1, x0=[1.0])
    assert np.allclose(tr.states[:, 0], np.exp(-0.1 * k), rtol=1e-13, atol=0)
    with pytest.raises(DomainError):
        simulate_zoh(s, np.zeros((5, 2)), 0.1)
    with pytest.raises(DomainError):
        simulate_zoh(s, np.zeros((5, 1)), 0.0)


def test_outputs_follow_state_equation():
    rng = np.random.default_rng(5)
    s = random_stable(rng, 3, 2)
    s = s.with_D(rng.standard_normal((2, 2)))
    tr = simulate_zoh(s, rng.standard_normal((400, 2)), 0.01)
    assert np.allclose(tr.outputs, tr.states @ s.C.T + tr.inputs @ s.D.T, rtol=0, atol=1e-14)
    assert isinstance(tr, Trajectory) and len(tr.times) == 400


@pytest.mark.parametrize("steps", [100, 2000])
def test_zoh_refinement_is_exact(steps):
    # both the loop and the long-run recurrence path
    rng = np.random.default_rng(11)
    s = random_stable(rng, 4, 2)
    U = rng.standard_normal((steps, 2))
    coarse = simulate_zoh(s, U, 0.02)
    fine = simulate_zoh(s, np.repeat(U, 2, axis=0), 0.01)
    assert np.allclose(fine.states[::2], coarse.states, rtol=0,
                       atol=1e-10 * max(1.0, np.abs(coarse.states).max()))


def test_foh_is_exact_for_ramps():
    # x' = -x + t from 0 has x = t - 1 + e^{-t}
    s = first_order()
    t = 0.05 * np.arange(200)
    tr = simulate_foh(s, t, 0.05)
    assert np.allclose(tr.states[:, 0], t - 1 + np.exp(-t), rtol=0, atol=1e-13)


def test_transfer_eval_examples():
    s = first_order()
    assert transfer_eval(s, 0.0)[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert transfer_eval(s, 1.0)[0, 0] == pytest.approx(0.5, abs=1e-15)
    d_only = StateSpaceModel(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)),
                             np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert np.array_equal(transfer_eval(d_only, 0.3 + 1j), d_only.D)
    with pytest.raises(PoleError) as info:
        transfer_eval(s, -1.0)
    assert info.value.eigenvalue == pytest.approx(-1.0)


def test_markov_parameter_examples():
    assert [float(M[0, 0]) for M in markov_parameters(first_order(), 3)] == [1.0, -1.0, 1.0]
    mk = markov_parameters(rc_two_port(), 2)
    assert np.array_equal(mk[0], np.ones((2, 2))) and np.array_equal(mk[1], -np.ones((2, 2)))
    assert [float(M[0, 0]) for M in markov_parameters(oscillator(), 3)] == [0.0, 1.0, -1.0]


def test_markov_parameters_are_derivatives():
    rng = np.random.default_rng(2)
    s = random_stable(rng, 3, 2)
    h = 1e-2
    g = lambda t: impulse_response_g(s, t)
    # fourth-order one-sided differences at t = 0
    fd = [g(0.0),
          (-25 * g(0) + 48 * g(h) - 36 * g(2 * h) + 16 * g(3 * h) - 3 * g(4 * h)) / (12 * h)]
    mk = markov_parameters(s, 2)
    for i in range(2):
        assert np.allclose(fd[i], mk[i], rtol=0, atol=1e-5 * (1 + np.abs(mk[i]).max()))
    # second and third derivatives: central differences at t = 1, compared with
    # C A^k e^{A} B, whose value at t = 0 is the Markov parameter
    t0 = 1.0
    stencils = {2: ([-1, 16, -30, 16, -1], 1e-2, lambda h: 12 * h ** 2),
                3: ([1, -8, 13, 0, -13, 8, -1], 5e-2, lambda h: 8 * h ** 3)}
    for k, (coeffs, step, denom) in stencils.items():
        half = len(coeffs) // 2
        fdk = sum(c * g(t0 + (j - half) * step) for j, c in enumerate(coeffs)) / denom(step)
        exact = s.C @ np.linalg.matrix_power(s.A, k) @ matrix_exponential(s.A * t0) @ s.B
        assert np.allclose(fdk, exact, rtol=0, atol=1e-5 * (1 + np.abs(exact).max()))
    assert np.allclose(s.C @ np.linalg.matrix_power(s.A, 3) @ s.B, markov_parameters(s, 4)[3])


def test_similarity_transform_preserves_transfer():
    rng = np.random.default_rng(8)
    s = random_stable(rng, 4, 2)
    S = rng.standard_normal((4, 4)) + 3 * np.eye(4)
    t = similarity_transform(s, S)
    for z in (0.7, 1 + 2j, 3.0 - 0.5j):
        assert np.allclose(transfer_eval(s, z), transfer_eval(t, z), rtol=1e-12, atol=1e-13)
