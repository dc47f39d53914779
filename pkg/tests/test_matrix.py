import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deftrace.errors import DomainError
from deftrace.matrix import (
    apply_scalar,
    check_pd,
    dagger,
    eigh,
    matrix_exp_p,
    matrix_from_json,
    matrix_log_p,
    matrix_power,
    matrix_to_json,
    operator_norm,
    psd_trace_power,
    random_contraction,
    random_hermitian,
    random_pd,
    random_signed,
    random_unitary,
)


def test_eigh_examples():
    dec = eigh(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(dec.eigenvalues, [1.0, 3.0])
    np.testing.assert_allclose(np.abs(dec.eigenvectors), [[0, 1], [1, 0]], atol=1e-15)
    np.testing.assert_allclose(eigh(np.eye(4)).eigenvalues, np.ones(4))
    A = random_hermitian(5, seed=42)
    assert np.linalg.norm(eigh(A).reconstruct() - A) < 1e-10


def test_apply_scalar_examples():
    np.testing.assert_allclose(apply_scalar(np.square, np.diag([1.0, 2.0])), np.diag([1.0, 4.0]))
    A = random_pd(3, seed=1)
    np.testing.assert_allclose(apply_scalar(lambda w: w, A), A, atol=1e-13)
    np.testing.assert_allclose(apply_scalar(lambda w: w**-0.5, np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]))


def test_log_exp_examples():
    np.testing.assert_allclose(matrix_exp_p(np.zeros((3, 3)), 1.7), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(matrix_log_p(np.eye(3), 0.4), np.zeros((3, 3)), atol=1e-15)
    for p in (-1.0, 0.4, 1.0, 1.7, 3.0):
        A = random_pd(4, seed=7)
        back = matrix_exp_p(matrix_log_p(A, p), p)
        assert np.linalg.norm(back - A) / np.linalg.norm(A) < 1e-10


def test_exp_p_domain_error_lists_eigenvalues():
    with pytest.raises(DomainError) as e:
        matrix_exp_p(np.diag([0.0, -2.0]), 2.0)
    assert e.value.offending == -2.0
    assert "-2.0" in str(e.value)


def test_power_needs_pd():
    with pytest.raises(DomainError):
        matrix_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(DomainError):
        check_pd(np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        check_pd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sampler_examples():
    for seed in range(20):
        assert operator_norm(random_contraction(2, seed)) <= 1 + 1e-12
        assert np.linalg.eigvalsh(random_signed(3, "negative", seed))[-1] <= 1e-15
        assert np.linalg.eigvalsh(random_signed(3, 1, seed))[0] >= -1e-15
        w = np.linalg.eigvalsh(random_pd(4, seed, spread=100))
        assert w[-1] / w[0] <= 1e4 * (1 + 1e-10)
    U = random_unitary(4, seed=3)
    np.testing.assert_allclose(U @ dagger(U), np.eye(4), atol=1e-13)
    assert not np.any(random_signed(3, 0, seed=1))


def test_samplers_deterministic():
    np.testing.assert_array_equal(random_pd(3, seed=11), random_pd(3, seed=11))
    assert not np.array_equal(random_pd(3, seed=11), random_pd(3, seed=12))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 5), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_power_composition(seed, n, r, s):
    A = random_pd(n, seed)
    lhs = matrix_power(matrix_power(A, r), s)
    rhs = matrix_power(A, r * s)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * (1 + np.linalg.norm(rhs))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 5), st.floats(-2.0, 3.0))
def test_unitary_covariance(seed, n, p):
    A = random_pd(n, seed)
    U = random_unitary(n, seed + 1)
    lhs = matrix_log_p(U @ A @ dagger(U), p)
    rhs = U @ matrix_log_p(A, p) @ dagger(U)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * (1 + np.linalg.norm(rhs))


def test_psd_trace_power_convention():
    B = np.diag([4.0, 0.0])
    assert psd_trace_power(B, 0.5) == pytest.approx(2.0)
    assert psd_trace_power(B, 0) == 2.0
    with pytest.raises(DomainError):
        psd_trace_power(B, -1.0)
    with pytest.raises(DomainError):
        psd_trace_power(np.diag([1.0, -0.5]), 0.5)


def test_json_round_trip():
    A = random_hermitian(3, seed=5) + 1j * np.eye(3)
    obj = json.loads(json.dumps(matrix_to_json(A)))
    np.testing.assert_array_equal(matrix_from_json(obj), A)
    with pytest.raises(ValueError):
        matrix_from_json({"n": 2, "re": [1.0], "im": [0.0]})
