"""Randomised identity checks for the deformed calculus and the forms of ``phi``.

Each check draws its own instances from ``SeedSequence([seed, k])`` and
returns an :class:`IdentityCheck` carrying the worst error and the first
failing instance.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels, deformed
from .config import Tolerances
from .matrix import (
    matrix_to_json,
    random_contraction_stack,
    random_pd_stack,
    random_signed_stack,
)
from .trace_functions import TraceFunctionSpec, phi_algebraic, phi_beta, phi_direct


@dataclass
class IdentityCheck:
    name: str
    trials: int
    tolerance: float
    failures: int = 0
    worst_error: float = 0.0
    first_failure: dict = None

    @property
    def passed(self):
        return self.failures == 0

    def record(self, err, instance):
        self.worst_error = max(self.worst_error, float(err))
        if not err <= self.tolerance:
            self.failures += 1
            if self.first_failure is None:
                self.first_failure = dict(instance, error=float(err))


@dataclass
class IdentityReport:
    seed: int
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def first_failure(self):
        for c in self.checks:
            if not c.passed:
                return {"check": c.name, **c.first_failure}
        return None

    def to_dict(self):
        return {"seed": self.seed, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def rel_err(a, b):
    """``|a - b| / max(1, |a|, |b|)``: relative, with a unit floor near zero."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


def fd_derivative(f, x, richardson=True):
    """Central difference at ``h = 1e-5 max(1, |x|)``, optionally Richardson-extrapolated."""
    h = 1e-5 * max(1.0, abs(x))
    d1 = (f(x + h) - f(x - h)) / (2.0 * h)
    if not richardson:
        return d1
    d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h
    return (4.0 * d2 - d1) / 3.0


def _logu(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _p_away(rng, lo, hi, gap):
    while True:
        p = float(rng.uniform(lo, hi))
        if abs(p - 1.0) >= gap:
            return p


def check_round_trip(trials, rng, tol):
    c = IdentityCheck("round_trip", trials, tol)
    for _ in range(trials):
        p = float(rng.uniform(-2.0, 4.0))
        x = _logu(rng, 0.1, 10.0)
        c.record(rel_err(deformed.exp_p(deformed.log_p(x, p), p), x), {"p": p, "x": x})
        y = deformed.log_p(_logu(rng, 0.1, 10.0), p)
        c.record(rel_err(deformed.log_p(deformed.exp_p(y, p), p), y), {"p": p, "y": y})
    return c


def check_power_identity(trials, rng, tol):
    c = IdentityCheck("log_power", trials, tol)
    for _ in range(trials):
        p = float(rng.uniform(-2.0, 4.0))
        q = float(rng.uniform(-3.0, 3.0))
        x = _logu(rng, 0.1, 10.0)
        lhs = deformed.log_p(x**q, p)
        rhs = q * deformed.log_p(x, deformed.alpha_of(q, p))
        c.record(rel_err(lhs, rhs), {"p": p, "q": q, "x": x})
    return c


def check_exp_identity(trials, rng, tol):
    c = IdentityCheck("exp_power", trials, tol)
    for _ in range(trials):
        p = _p_away(rng, -2.0, 4.0, 0.05)
        q = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 3.0))
        x = (_logu(rng, 0.1, 10.0) - 1.0) / (p - 1.0)
        lhs = deformed.exp_p(x, p) ** q
        rhs = deformed.exp_p(q * x, deformed.beta_of(p, q))
        c.record(rel_err(lhs, rhs), {"p": p, "q": q, "x": x})
    return c


def check_derivatives(trials, rng, tol, richardson=True, lo=0.5, hi=2.0):
    c = IdentityCheck("derivatives" if richardson else "derivatives_central", trials, tol)
    for _ in range(trials):
        p = float(rng.uniform(-2.0, 4.0))
        x = _logu(rng, lo, hi)
        d = fd_derivative(lambda t: deformed.log_p(t, p), x, richardson)
        c.record(abs(d - x ** (p - 2.0)) / x ** (p - 2.0), {"p": p, "x": x, "function": "log_p"})
        if deformed.is_natural(p) or abs(p - 1.0) < 0.05:
            continue
        y = (_logu(rng, lo, hi) - 1.0) / (p - 1.0)
        d = fd_derivative(lambda t: deformed.exp_p(t, p), y, richardson)
        exact = deformed.exp_p(y, p) ** (2.0 - p)
        c.record(abs(d - exact) / exact, {"p": p, "x": y, "function": "exp_p"})
    return c


def random_spec(rng, n, p=None, q=None):
    """A valid :class:`TraceFunctionSpec` with ``L`` signed by ``p``."""
    p = _p_away(rng, 0.0, 3.0, 0.01) if p is None else p
    if q is None:
        q = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.01, 2.0))
    H = random_contraction_stack(1, n, rng)[0]
    sign = 0 if deformed.is_natural(p) else (1 if p > 1 else -1)
    L = random_signed_stack(1, n, sign, rng)[0]
    return TraceFunctionSpec(p, q, H, L)


def check_phi_forms(trials, rng, tol, dims=(2, 3, 4, 5)):
    c = IdentityCheck("phi_three_forms", trials, tol)
    for i in range(trials):
        n = dims[i % len(dims)]
        spec = random_spec(rng, n)
        A = random_pd_stack(1, n, rng)[0]
        d = phi_direct(spec, A)
        a = phi_algebraic(spec, A)
        b = phi_beta(spec, A)
        err = max(abs(a - d), abs(b - d)) / abs(d)
        c.record(err, {"p": spec.p, "q": spec.q, "A": matrix_to_json(A),
                       "H": matrix_to_json(spec.H), "L": matrix_to_json(spec.L)})
    return c


def check_kernel(trials, rng, tol, dims=(2, 3, 4, 5)):
    """Batch kernel (active backend) against the dense single-matrix path."""
    c = IdentityCheck(f"phi_kernel_{_kernels.BACKEND}", trials, tol)
    for i in range(trials):
        n = dims[i % len(dims)]
        spec = random_spec(rng, n)
        A = random_pd_stack(1, n, rng)[0]
        v = _kernels.phi_values(A[None], spec.H[None], spec.L[None], spec.p, spec.q)[0]
        d = phi_direct(spec, A)
        c.record(abs(v - d) / abs(d), {"p": spec.p, "q": spec.q})
    return c


def run_identity_suite(trials=1000, seed=0, tolerances=None, dims=(2, 3, 4, 5)):
    tol = tolerances or Tolerances()
    streams = [np.random.default_rng(np.random.SeedSequence([int(seed), k])) for k in range(6)]
    checks = [
        check_round_trip(trials, streams[0], tol.scalar),
        check_power_identity(trials, streams[1], tol.scalar),
        check_exp_identity(trials, streams[2], tol.scalar),
        check_derivatives(trials, streams[3], tol.derivative),
        check_phi_forms(trials, streams[4], tol.matrix, dims),
        check_kernel(trials, streams[5], tol.matrix, dims),
    ]
    return IdentityReport(int(seed), checks)
