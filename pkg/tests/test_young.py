import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deftrace.errors import DomainError
from deftrace.matrix import random_pd
from deftrace.young import expected_sign, run_young_suite, young_defect


def test_examples():
    assert young_defect(np.diag([4.0]), np.diag([1.0]), 0.5) == pytest.approx(0.5)
    assert young_defect(np.diag([4.0]), np.diag([1.0]), 2.0) == pytest.approx(-9.0)


def test_endpoints_vanish():
    A, B = random_pd(3, 1), random_pd(3, 2)
    assert young_defect(A, B, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert young_defect(A, B, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert expected_sign(0.0) == expected_sign(1.0) == 0


def test_equal_arguments():
    A = random_pd(4, 3)
    for p in (-1.0, 0.3, 2.0):
        assert abs(young_defect(A, A, p)) <= 1e-10


def test_commuting_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = np.exp(rng.uniform(-2, 2, 3))
        b = np.exp(rng.uniform(-2, 2, 3))
        p = rng.uniform(-1, 2)
        oracle = np.sum(p * a + (1 - p) * b - a**p * b ** (1 - p))
        assert young_defect(np.diag(a), np.diag(b), p) == pytest.approx(oracle, rel=1e-12, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 5), st.floats(-1.0, 2.0), st.floats(0.1, 10.0))
def test_homogeneity(seed, n, p, c):
    A, B = random_pd(n, seed), random_pd(n, seed + 1)
    d = young_defect(A, B, p)
    assert young_defect(c * A, c * B, p) == pytest.approx(c * d, rel=1e-10, abs=1e-10 * c * np.trace(A + B).real)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 5), st.floats(-1.0, 2.0))
def test_sign_branches(seed, n, p):
    A, B = random_pd(n, seed), random_pd(n, seed + 1)
    d = young_defect(A, B, p)
    tol = 1e-9 * np.trace(A + B).real
    if 0 < p < 1:
        assert d >= -tol
    elif p < 0 or p > 1:
        assert d <= tol


def test_rejects_non_pd():
    with pytest.raises(DomainError):
        young_defect(np.diag([1.0, -1.0]), np.eye(2), 0.5)


def test_suite_report():
    report = run_young_suite(trials=40, dims=(2, 3), seed=3)
    assert report.passed
    assert len(report.rows) == 2 * 7
    lines = report.to_csv().splitlines()
    assert lines[0] == "p,dim,trials,worst_defect,verdict"
    assert all(line.endswith(",pass") for line in lines[1:])
    assert run_young_suite(trials=40, dims=(2,), seed=3, commuting=True).passed
