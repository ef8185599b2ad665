import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from golem_dag.errors import NumericOverflowError, SingularMatrixError
from golem_dag.numlin import inverse_transpose, log_abs_det, matrix_exp


def test_expm_zero_is_identity():
    np.testing.assert_array_equal(matrix_exp(np.zeros((4, 4))), np.eye(4))


def test_expm_diagonal():
    d = np.array([-3.0, 0.0, 0.5, 7.0])
    np.testing.assert_allclose(matrix_exp(np.diag(d)), np.diag(np.exp(d)), rtol=1e-13)


def test_expm_rotation_generator():
    # exp([[0, -t], [t, 0]]) is rotation by t.
    t = 2.3
    got = matrix_exp(np.array([[0.0, -t], [t, 0.0]]))
    want = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    np.testing.assert_allclose(got, want, atol=1e-14)


def test_expm_two_cycle_closed_form():
    # [[0, a], [b, 0]] squared is ab I, giving cosh / sinh blocks.
    a, b = 1.7, 0.4
    r = math.sqrt(a * b)
    got = matrix_exp(np.array([[0.0, a], [b, 0.0]]))
    want = np.array([[math.cosh(r), a * math.sinh(r) / r], [b * math.sinh(r) / r, math.cosh(r)]])
    np.testing.assert_allclose(got, want, rtol=1e-13)


def test_expm_nilpotent_is_finite_taylor_sum():
    rng = np.random.default_rng(3)
    n = np.triu(rng.normal(size=(6, 6)) * 3, k=1)
    want = np.eye(6)
    term = np.eye(6)
    for k in range(1, 6):
        term = term @ n / k
        want = want + term
    np.testing.assert_allclose(matrix_exp(n), want, rtol=1e-12, atol=1e-12)


def test_expm_large_norm_uses_squaring():
    a = np.array([[1.0, 20.0], [0.0, 2.0]])
    # Upper triangular with distinct eigenvalues: off-diagonal is 20 (e^2 - e) / (2 - 1).
    want = np.array([[math.e, 20 * (math.e**2 - math.e)], [0.0, math.e**2]])
    np.testing.assert_allclose(matrix_exp(a), want, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(-4, 4)))
def test_expm_matches_scipy(a):
    np.testing.assert_allclose(matrix_exp(a), scipy.linalg.expm(a), rtol=1e-10, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-2, 2)))
def test_expm_inverse_and_determinant(a):
    e = matrix_exp(a)
    np.testing.assert_allclose(e @ matrix_exp(-a), np.eye(4), atol=1e-8)
    assert math.isclose(np.linalg.det(e), math.exp(np.trace(a)), rel_tol=1e-8)


def test_expm_overflow_raises():
    with pytest.raises(NumericOverflowError):
        matrix_exp(np.array([[800.0, 0.0], [0.0, 0.0]]))


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), np.array([[np.nan]]), np.zeros(3)])
def test_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        matrix_exp(bad)
    with pytest.raises(ValueError):
        log_abs_det(bad)


def test_log_abs_det_examples():
    assert log_abs_det(np.eye(3)) == 0.0
    assert math.isclose(log_abs_det(np.diag([2.0, -3.0, 0.5])), math.log(3.0), rel_tol=1e-14)
    a = np.array([[0.0, 2.0], [3.0, 1.0]])  # needs pivoting, det = -6
    assert math.isclose(log_abs_det(a), math.log(6.0), rel_tol=1e-14)


def test_log_abs_det_unit_triangular_is_zero():
    rng = np.random.default_rng(0)
    a = np.eye(7) - np.triu(rng.normal(size=(7, 7)), k=1)
    assert abs(log_abs_det(a)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(-3, 3)))
def test_log_abs_det_matches_slogdet(a):
    a = a + 6 * np.eye(5)  # diagonally dominant, comfortably nonsingular
    sign, ref = np.linalg.slogdet(a)
    assert math.isclose(log_abs_det(a), ref, rel_tol=1e-10, abs_tol=1e-10)


def test_singular_raises():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError):
        log_abs_det(a)
    with pytest.raises(SingularMatrixError):
        inverse_transpose(a)
    with pytest.raises(ArithmeticError):
        log_abs_det(np.zeros((3, 3)))


def test_inverse_transpose():
    a = np.array([[2.0, 1.0], [0.0, 4.0]])
    want = np.array([[0.5, 0.0], [-0.125, 0.25]])
    np.testing.assert_allclose(inverse_transpose(a), want, rtol=1e-14)
    rng = np.random.default_rng(1)
    m = rng.normal(size=(6, 6)) + 5 * np.eye(6)
    np.testing.assert_allclose(inverse_transpose(m).T @ m, np.eye(6), atol=1e-12)
