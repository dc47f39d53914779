import os
import subprocess
import sys

import numpy as np
import pytest

from deftrace import _kernels
from deftrace.identities import random_spec
from deftrace.matrix import random_contraction_stack, random_general_stack, random_pd_stack, random_signed_stack
from deftrace.trace_functions import UpsilonSpec, phi_direct, upsilon

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
BACKENDS = ["numpy", pytest.param("numba", marks=needs_numba)]


@pytest.mark.parametrize("backend", BACKENDS)
def test_phi_kernel_matches_dense(backend):
    rng = np.random.default_rng(0)
    for n in (1, 2, 3, 4):
        for _ in range(10):
            s = random_spec(rng, n)
            A = random_pd_stack(1, n, rng)
            v = _kernels.phi_values(A, s.H[None], s.L[None], s.p, s.q, backend=backend)[0]
            assert v == pytest.approx(phi_direct(s, A[0]), rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("s", [-1.0, 0.0, 0.5, 2.0])
def test_upsilon_kernel_matches_dense(backend, s):
    rng = np.random.default_rng(1)
    n, T = 3, 20
    A = random_pd_stack(T, n, rng)
    H = random_general_stack(T, n, rng)
    K = random_signed_stack(T, n, 1, rng)
    v = _kernels.upsilon_values(A, H, K, 1.4, s, backend=backend)
    dense = [upsilon(UpsilonSpec(1.4, s, K[t], H[t]), A[t]) for t in range(T)]
    np.testing.assert_allclose(v, dense, rtol=1e-11)


@pytest.mark.parametrize("backend", BACKENDS)
def test_invalid_trials_are_nan(backend):
    A = np.array([np.eye(2), -np.eye(2)], dtype=complex)
    H = np.array([np.eye(2)] * 2, dtype=complex)
    Z = np.zeros_like(A)
    assert np.isnan(_kernels.phi_values(A, H, Z, 2.0, 1.0, backend=backend)).tolist() == [False, True]
    # singular base with a negative exponent
    Hs = np.array([np.diag([1.0, 0.0])] * 2, dtype=complex)
    assert np.all(np.isnan(_kernels.upsilon_values(np.abs(A), Hs, Z, 1.0, -1.0, backend=backend)))
    # 0**s = 0 for s > 0
    v = _kernels.upsilon_values(np.abs(A), Hs, Z, 1.0, 0.5, backend=backend)
    np.testing.assert_allclose(v, [1.0, 1.0])


@needs_numba
def test_backends_agree_on_batches():
    rng = np.random.default_rng(2)
    A = random_pd_stack(200, 4, rng)
    H = random_contraction_stack(200, 4, rng)
    L = random_signed_stack(200, 4, -1, rng)
    a = _kernels.phi_values(A, H, L, 0.4, -1.3, backend="numpy")
    b = _kernels.phi_values(A, H, L, 0.4, -1.3, backend="numba")
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_env_flag_selects_numpy():
    code = "from deftrace import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, DEFTRACE_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_benchmark_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--trials", "50", "--dims", "2", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "phi" in out and "upsilon" in out
