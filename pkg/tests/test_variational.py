import numpy as np
import pytest

from deftrace.identities import random_spec
from deftrace.matrix import random_pd, random_pd_stack
from deftrace.trace_functions import F_of, phi_direct, variational_target
from deftrace.variational import (
    direction_for,
    optimize_F,
    partial_optimization_defects,
    relative_entropy_gap,
    run_variational_suite,
    trace_objective,
    verify_trace_variation,
)


def test_objective_at_target():
    for q in (-1.0, 0.5, 1.0, 2.0, 3.0):
        Y = random_pd(3, 4)
        tr = np.trace(Y).real
        assert trace_objective(Y, Y, q) == pytest.approx(tr, rel=1e-12)


def test_classical_branch():
    X, Y = random_pd(2, 1), random_pd(2, 2)
    wX, VX = np.linalg.eigh(X)
    wY, VY = np.linalg.eigh(Y)
    logX = (VX * np.log(wX)) @ VX.conj().T
    logY = (VY * np.log(wY)) @ VY.conj().T
    expected = np.trace(X - X @ (logX - logY)).real
    assert trace_objective(X, Y, 1.0) == pytest.approx(expected, rel=1e-12)


def test_direction():
    assert direction_for(2.0) == "sup"
    assert direction_for(1.5) == "sup"
    assert direction_for(2.5) == "inf"


def test_min_branch_example():
    Y = np.diag([1.0, 2.0])
    res = verify_trace_variation(Y, 3.0, restarts=20, steps=20, seed=1)
    assert res.direction == "inf"
    assert res.analytic_value == pytest.approx(3.0)
    assert res.best_found >= 3.0 - 1e-6
    assert res.max_crossing <= 1e-6
    assert res.values_at_target == pytest.approx(3.0, rel=1e-12)


def test_max_branch_converges():
    Y = random_pd(2, 3, spread=3)
    res = verify_trace_variation(Y, 0.5, restarts=3, steps=60, seed=2)
    assert res.direction == "sup"
    assert res.one_sided
    assert res.best_found == pytest.approx(res.analytic_value, rel=1e-6)


def test_optimize_F_branches():
    rng = np.random.default_rng(4)
    for p, q, direction in ((1.5, 1.0, "sup"), (2.5, 1.0, "inf")):
        s = random_spec(rng, 2, p, q)
        assert s.beta == pytest.approx(p)
        A = random_pd(2, 7)
        res = optimize_F(s, A, restarts=3, steps=15, seed=0)
        assert res.direction == direction
        assert res.analytic_value == pytest.approx(phi_direct(s, A))
        assert res.values_at_target == pytest.approx(res.analytic_value, rel=1e-10)
        assert res.max_crossing <= 1e-6


def test_entropy_gap():
    Y = random_pd(3, 8)
    assert relative_entropy_gap(Y, Y) == pytest.approx(0.0, abs=1e-12)
    assert relative_entropy_gap(np.diag([2.0]), np.diag([1.0])) == pytest.approx(2 * np.log(2) - 1)
    rng = np.random.default_rng(0)
    for n in (2, 3, 4, 5):
        for X, Y in zip(random_pd_stack(50, n, rng), random_pd_stack(50, n, rng)):
            assert relative_entropy_gap(X, Y) >= -1e-10 * np.trace(X + Y).real


def test_partial_optimization_probe():
    # inside the concave region every F(X, .) is concave, so a min over a
    # fixed X-grid is concave too; a max over the grid carries no such claim
    rng = np.random.default_rng(11)
    s = random_spec(rng, 2, 1.5, 0.5)
    X_grid = list(random_pd_stack(8, 2, rng, 3.0))
    pairs = list(zip(random_pd_stack(30, 2, rng), random_pd_stack(30, 2, rng)))
    X_grid.append(variational_target(s, pairs[0][0]))
    defects, tols = partial_optimization_defects(s, X_grid, pairs, "min")
    assert np.all(defects >= -tols)
    with pytest.raises(ValueError):
        partial_optimization_defects(s, X_grid, pairs, "median")


def test_F_below_phi_for_samples():
    rng = np.random.default_rng(12)
    s = random_spec(rng, 3, 1.5, 1.0)  # beta = 1.5
    A = random_pd(3, 1)
    phi = phi_direct(s, A)
    assert all(F_of(X, A, s) <= phi + 1e-6 * (1 + phi) for X in random_pd_stack(100, 3, rng))
    s = random_spec(rng, 3, 2.5, 1.0)  # beta = 2.5
    phi = phi_direct(s, A)
    assert all(F_of(X, A, s) >= phi - 1e-6 * (1 + phi) for X in random_pd_stack(100, 3, rng))


def test_suite_small():
    report = run_variational_suite(instances=4, seed=1, restarts=2, steps=8, entropy_pairs=20)
    assert report.passed, report.failures
    assert len(report.rows) == 8
    csv = report.to_csv()
    assert csv.splitlines()[0].startswith("kind,index")
    assert csv == run_variational_suite(instances=4, seed=1, restarts=2, steps=8, entropy_pairs=20).to_csv()
