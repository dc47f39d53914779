"""Tracial Young inequalities.

``Tr A^p B^(1-p) <= p Tr A + (1-p) Tr B`` for ``0 <= p <= 1`` and the reverse
for ``p <= 0`` or ``p >= 1``.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .matrix import check_pd, matrix_power, matrix_to_json, random_pd_stack

YOUNG_TOL = 1e-9


def young_defect(A, B, p):
    """``p Tr A + (1-p) Tr B - Tr A^p B^(1-p)``.

    Nonnegative for ``0 <= p <= 1``, nonpositive otherwise.  The trace of the
    product is real by cyclicity; an imaginary residue above ``1e-10`` of the
    trace scale is reported as a :class:`NumericError`.
    """
    A = check_pd(A, "A")
    B = check_pd(B, "B")
    tr = np.trace(matrix_power(A, p) @ matrix_power(B, 1.0 - p))
    trA = float(np.real(np.trace(A)))
    trB = float(np.real(np.trace(B)))
    scale = trA + trB + abs(tr)
    if abs(tr.imag) > 1e-10 * scale:
        raise NumericError(
            f"Tr A^p B^(1-p) has imaginary part {tr.imag!r}",
            context={"p": p, "A": matrix_to_json(A), "B": matrix_to_json(B)},
        )
    return p * trA + (1.0 - p) * trB - float(tr.real)


def expected_sign(p):
    """+1 when the defect must be >= 0, -1 when it must be <= 0, 0 when both."""
    if p in (0.0, 1.0):
        return 0
    return 1 if 0.0 < p < 1.0 else -1


@dataclass
class YoungRow:
    p: float
    dim: int
    trials: int
    worst_defect: float
    verdict: str


@dataclass
class YoungReport:
    rows: list
    violations: list = field(default_factory=list)
    seed: int = 0
    tol: float = YOUNG_TOL

    @property
    def passed(self):
        return not self.violations

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "dim", "trials", "worst_defect", "verdict"])
        for r in self.rows:
            w.writerow([repr(r.p), r.dim, r.trials, repr(r.worst_defect), r.verdict])
        return buf.getvalue()


def run_young_suite(trials=500, dims=(2, 3, 4, 5), p_grid=(-1.0, -0.5, 0.25, 0.5, 0.75, 1.5, 2.0),
                    seed=0, tol=YOUNG_TOL, spread=10.0, commuting=False):
    """Check both sign branches on random PD pairs.

    ``trials`` pairs are drawn per dimension (shared across ``p``).  The worst
    defect per ``(p, dim)`` is the one closest to violating its branch.  Each
    violation of ``tol * (Tr A + Tr B)`` is kept as a JSON-ready certificate.
    With ``commuting=True`` both matrices are diagonal.
    """
    rng = np.random.default_rng(seed)
    rows, violations = [], []
    for dim in dims:
        As = random_pd_stack(trials, dim, rng, spread)
        Bs = random_pd_stack(trials, dim, rng, spread)
        if commuting:
            As = np.array([np.diag(np.diag(a).real) for a in As], dtype=np.complex128)
            Bs = np.array([np.diag(np.diag(b).real) for b in Bs], dtype=np.complex128)
        for p in p_grid:
            sign = expected_sign(p)
            worst = None
            for A, B in zip(As, Bs):
                d = young_defect(A, B, p)
                bound = tol * float(np.real(np.trace(A) + np.trace(B)))
                adverse = -d if sign > 0 else (d if sign < 0 else abs(d))
                if worst is None or adverse > worst[0]:
                    worst = (adverse, d)
                if adverse > bound:
                    violations.append({
                        "p": p, "dim": dim, "defect": d, "tolerance": bound,
                        "A": matrix_to_json(A), "B": matrix_to_json(B),
                    })
            rows.append(YoungRow(p, dim, trials, worst[1],
                                 "pass" if not any(v["p"] == p and v["dim"] == dim for v in violations) else "fail"))
    return YoungReport(rows, violations, seed, tol)
