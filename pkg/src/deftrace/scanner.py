"""Randomised convexity/concavity classification over parameter grids.

A cell ``(p, q)`` is classified from midpoint defects
``f((A1 + A2)/2) - (f(A1) + f(A2))/2`` over random instances: convexity
forbids defects above ``tol``, concavity forbids defects below ``-tol``.
Directional second differences are computed alongside as a cross-check.

Targets:

``phi``
    ``Tr exp_p(L + H^* log_p(A) H)**q`` with a random contraction ``H`` and
    ``L`` signed according to ``p``.
``upsilon``
    ``Tr (K + H^*A^pH)**s`` with arbitrary ``H`` and ``K >= 0`` (second grid
    coordinate is ``s``).

The known regions of convexity/concavity are encoded in :data:`PHI_REGIONS`
and :data:`UPSILON_REGIONS`; cells inside a region are expected to carry its
verdict, cells outside are observations only.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _kernels
from .matrix import (
    check_pd,
    hermitize,
    matrix_from_json,
    matrix_to_json,
    random_contraction_stack,
    random_general_stack,
    random_hermitian_stack,
    random_pd_stack,
    random_signed_stack,
)
from .trace_functions import psi

VERDICTS = ("convex", "concave", "neither", "indeterminate")
INF = math.inf


# --- regions --------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """``p_lo <= p <= p_hi`` and ``lo(p) <= x <= hi(p)``."""

    label: str
    verdict: str
    p_lo: float
    p_hi: float
    x_lo: object
    x_hi: object
    note: str = ""

    def bounds(self, p):
        lo = self.x_lo(p) if callable(self.x_lo) else self.x_lo
        hi = self.x_hi(p) if callable(self.x_hi) else self.x_hi
        return lo, hi

    def contains(self, p, x, margin=0.0):
        if not (self.p_lo + margin <= p <= self.p_hi - margin):
            return False
        lo, hi = self.bounds(p)
        return lo + margin <= x <= hi - margin


def _inv(p):
    return -INF if p == 0 else 1.0 / p


def _inv_hi(p):
    return INF if p == 0 else 1.0 / p


PHI_REGIONS = (
    Region("a", "concave", 0.0, 1.0, 0.0, 1.0, "L <= 0"),
    Region("b", "concave", 1.0, 2.0, 0.0, 1.0, "L >= 0"),
    Region("c", "convex", 0.0, 1.0, -INF, 0.0, "L <= 0"),
    Region("d", "convex", 1.0, 2.0, -INF, 0.0, "L >= 0"),
    Region("e", "convex", 2.0, 3.0, 1.0, INF, "L >= 0"),
)

UPSILON_REGIONS = (
    Region("a", "concave", -1.0, 0.0, _inv, 0.0, "1/p <= s <= 0"),
    Region("b", "concave", 0.0, 1.0, 0.0, _inv_hi, "0 <= s <= 1/p"),
    Region("c", "convex", -1.0, 0.0, 0.0, INF, "s >= 0"),
    Region("d", "convex", 0.0, 1.0, -INF, 0.0, "s <= 0"),
    Region("e", "convex", 1.0, 2.0, _inv, INF, "s >= 1/p"),
)

_SPECIAL = {
    "phi": ((0.0, 1.0, 2.0, 3.0), (0.0, 1.0)),
    "upsilon": ((-1.0, 0.0, 1.0, 2.0), (0.0,)),
}


def regions_for(target):
    if target == "phi":
        return PHI_REGIONS
    if target == "upsilon":
        return UPSILON_REGIONS
    raise ValueError(f"unknown target {target!r}")


def region_of(p, x, target):
    """First region containing ``(p, x)`` (boundaries included), or ``None``."""
    for r in regions_for(target):
        if r.contains(p, x, -1e-9):
            return r
    return None


def sampling_point(p, x, target, inset=1e-3):
    """Move a grid point off degenerate boundaries.

    Points in a region are nudged into its interior by ``inset`` per
    coordinate; other points are nudged away from the special values of
    ``p`` and ``x``.  Returns ``(p_eff, x_eff, region)``.
    """
    region = region_of(p, x, target)
    if region is not None:
        offsets = sorted(
            ((dp, dx) for dp in (0.0, inset, -inset) for dx in (0.0, inset, -inset)),
            key=lambda o: (abs(o[0]) + abs(o[1]), -o[0], -o[1]),
        )
        for dp, dx in offsets:
            pe, xe = p + dp, x + dx
            if region.contains(pe, xe, 0.5 * inset) and _clear(pe, xe, target, 0.5 * inset):
                return pe, xe, region
        return p, x, region
    ps, xs = _SPECIAL[target]
    pe = p
    for v in ps:
        if abs(p - v) < 1e-9:
            pe = v - inset if v == max(ps) else v + inset
    xe = x
    for v in xs:
        if abs(x - v) < 1e-9:
            xe = v + inset
    return pe, xe, None


def _clear(p, x, target, margin):
    ps, xs = _SPECIAL[target]
    return all(abs(p - v) >= margin for v in ps) and all(abs(x - v) >= margin for v in xs)


# --- scalar probes --------------------------------------------------------


def midpoint_defect(f, A1, A2):
    """``f((A1 + A2)/2) - (f(A1) + f(A2))/2``.

    Convexity requires ``<= tol``, concavity ``>= -tol``, with
    ``tol = 1e-8 (1 + |f(A1)| + |f(A2)|)`` (see :func:`midpoint_tolerance`).
    """
    A1 = check_pd(A1, "A1")
    A2 = check_pd(A2, "A2")
    if A1.shape != A2.shape:
        raise ValueError("A1 and A2 differ in shape")
    return f(0.5 * (A1 + A2)) - 0.5 * (f(A1) + f(A2))


def midpoint_tolerance(f1, f2, rel=1e-8):
    return rel * (1.0 + abs(f1) + abs(f2))


def second_difference(f, A, D, h=1e-2, max_halvings=30):
    """``f(A + hD) - 2 f(A) + f(A - hD)``, halving ``h`` until both ends are PD.

    Returns ``(value, h_used)``.  The value is ``>= 0`` for convex ``f``.
    """
    A = check_pd(A)
    D = hermitize(D)
    for _ in range(max_halvings):
        if np.linalg.eigvalsh(A - h * D)[0] > 0 and np.linalg.eigvalsh(A + h * D)[0] > 0:
            return f(A + h * D) - 2.0 * f(A) + f(A - h * D), h
        h *= 0.5
    raise ValueError("could not find a step keeping A +/- hD positive definite")


# --- cell classification --------------------------------------------------


@dataclass(frozen=True)
class ScanConfig:
    trials: int = 200
    dims: tuple = (2, 3, 4)
    spread: float = 10.0
    rel_tol: float = 1e-8
    #: "neither" needs violations of both signs above ``neither_factor * tol``.
    neither_factor: float = 100.0
    inset: float = 1e-3
    sd_step: float = 1e-2
    sd_dirs: int = 5
    l_scale: float = 1.0
    #: "signed" (sign follows p) or "zero" for phi; "psd" or "zero" for K in upsilon.
    l_mode: str = "signed"
    k_mode: str = "zero"
    #: Multiplies every A sample (scale-robustness probe).
    a_scale: float = 1.0
    backend: str = None
    workers: int = 1

    def __post_init__(self):
        if self.trials <= 0 or not self.dims or any(d < 1 for d in self.dims):
            raise ValueError("trials and dims must be positive")
        if self.l_mode not in ("signed", "zero") or self.k_mode not in ("psd", "zero"):
            raise ValueError("l_mode must be signed|zero and k_mode psd|zero")


@dataclass
class ConvexityVerdict:
    cell: tuple
    verdict: str
    max_convexity_defect: float
    max_concavity_defect: float
    trials: int
    sampled: tuple = None
    expected: str = None
    region: str = None
    convexity_violations: int = 0
    concavity_violations: int = 0
    invalid: int = 0
    second_difference_agrees: bool = True
    reason: str = ""
    certificate: dict = None

    @property
    def contradiction(self):
        """A forbidden-sign defect inside a known region."""
        if self.expected == "convex":
            return self.convexity_violations > 0 or self.verdict != "convex"
        if self.expected == "concave":
            return self.concavity_violations > 0 or self.verdict != "concave"
        return False

    def to_dict(self):
        d = asdict(self)
        d["cell"] = list(self.cell)
        d["sampled"] = list(self.sampled) if self.sampled else None
        return d


def _split(trials, dims):
    k = len(dims)
    return [(d, trials // k + (i < trials % k)) for i, d in enumerate(dims)]


def _sample_group(target, p, count, n, rng, config):
    A1 = random_pd_stack(count, n, rng, config.spread) * config.a_scale
    A2 = random_pd_stack(count, n, rng, config.spread) * config.a_scale
    if target == "phi":
        H = random_contraction_stack(count, n, rng)
        if config.l_mode == "zero" or abs(p - 1.0) < 1e-12:
            sign = 0
        else:
            sign = 1 if p > 1 else -1
        L = random_signed_stack(count, n, sign, rng, config.l_scale)
    else:
        H = random_general_stack(count, n, rng)
        L = random_signed_stack(count, n, 1 if config.k_mode == "psd" else 0, rng, config.l_scale)
    D = random_hermitian_stack(count * config.sd_dirs, n, rng).reshape(count, config.sd_dirs, n, n)
    return A1, A2, H, L, D


def _evaluate(target, A, H, L, p, x, backend):
    if target == "phi":
        return _kernels.phi_values(A, H, L, p, x, backend=backend)
    return _kernels.upsilon_values(A, H, L, p, x, backend=backend)


def _certificate(target, p, x, A1, A2, H, L, defect, tol, side):
    return {
        "target": target,
        "p": p,
        "x": x,
        "side": side,
        "defect": float(defect),
        "tolerance": float(tol),
        "A1": matrix_to_json(A1),
        "A2": matrix_to_json(A2),
        "H": matrix_to_json(H),
        "L": matrix_to_json(L),
    }


def _decide(conv, conc, big_conv, big_conc, d):
    if not np.any(conv) and not np.any(conc):
        # both hold within tolerance; label by the dominant sign of the evidence
        return ("convex" if np.max(-d) >= np.max(d) else "concave"), ""
    if not np.any(conc):
        return "concave", ""
    if not np.any(conv):
        return "convex", ""
    if np.any(big_conv) and np.any(big_conc):
        return "neither", ""
    return "indeterminate", "small violations of both signs"


def classify_at(p, x, target="phi", seed=0, config=ScanConfig(), region=None, cell=None):
    """Classify the exact sampling point ``(p, x)`` (no inset)."""
    rng = np.random.default_rng(seed)
    defects, tols, sds, sd_tols = [], [], [], []
    worst = {"convex": (0.0, None), "concave": (0.0, None)}
    invalid = 0
    for n, count in _split(config.trials, config.dims):
        if count == 0:
            continue
        A1, A2, H, L, D = _sample_group(target, p, count, n, rng, config)
        Am = 0.5 * (A1 + A2)
        # directions scaled to half the smallest eigenvalue of A1 keep A1 +/- hD PD
        lam = np.linalg.eigvalsh(A1)[:, 0]
        dn = np.linalg.norm(D, 2, axis=(2, 3))
        D = D * (0.5 * lam[:, None] / dn)[:, :, None, None]
        h = config.sd_step
        k = config.sd_dirs
        Ap = (A1[:, None] + h * D).reshape(-1, n, n)
        Amn = (A1[:, None] - h * D).reshape(-1, n, n)
        stackA = np.concatenate([A1, A2, Am, Ap, Amn])
        stackH = np.concatenate([H, H, H] + [np.repeat(H, k, axis=0)] * 2)
        stackL = np.concatenate([L, L, L] + [np.repeat(L, k, axis=0)] * 2)
        vals = _evaluate(target, stackA, stackH, stackL, p, x, config.backend)
        f1, f2, fm = vals[:count], vals[count:2 * count], vals[2 * count:3 * count]
        fp = vals[3 * count:3 * count + count * k].reshape(count, k)
        fn = vals[3 * count + count * k:].reshape(count, k)
        d = fm - 0.5 * (f1 + f2)
        tol = config.rel_tol * (1.0 + np.abs(f1) + np.abs(f2))
        sd = fp - 2.0 * f1[:, None] + fn
        sdt = config.rel_tol * (1.0 + 4.0 * np.abs(f1))[:, None] * np.ones_like(sd)
        bad = ~np.isfinite(d) | np.any(~np.isfinite(sd), axis=1)
        invalid += int(bad.sum())
        for i in np.flatnonzero(~bad):
            for side, ratio in (("convex", d[i] / tol[i]), ("concave", -d[i] / tol[i])):
                if ratio > 1.0 and ratio > worst[side][0]:
                    worst[side] = (ratio, _certificate(target, p, x, A1[i], A2[i], H[i], L[i], d[i], tol[i], side))
        defects.append(d[~bad])
        tols.append(tol[~bad])
        sds.append(sd[~bad])
        sd_tols.append(sdt[~bad])

    region_label = region.label if region else None
    expected = region.verdict if region else None
    d = np.concatenate(defects) if defects else np.empty(0)
    tol = np.concatenate(tols) if tols else np.empty(0)
    sd = np.concatenate(sds) if sds else np.empty((0, 1))
    sdt = np.concatenate(sd_tols) if sd_tols else np.empty((0, 1))
    cell = cell if cell is not None else (p, x)
    if d.size == 0:
        return ConvexityVerdict(cell, "indeterminate", np.nan, np.nan, config.trials, (p, x),
                                expected, region_label, invalid=invalid, reason="domain: no valid trials")
    mid_verdict, _ = _decide(d > tol, -d > tol, d > config.neither_factor * tol,
                             -d > config.neither_factor * tol, d)
    # second differences count as evidence too: sd < 0 breaks convexity
    sd_conv = np.any(sd < -sdt, axis=1)
    sd_conc = np.any(sd > sdt, axis=1)
    f = config.neither_factor
    conv_mask = (d > tol) | sd_conv
    conc_mask = (-d > tol) | sd_conc
    verdict, reason = _decide(conv_mask, conc_mask,
                              (d > f * tol) | np.any(sd < -f * sdt, axis=1),
                              (-d > f * tol) | np.any(sd > f * sdt, axis=1), d)
    conv_v = int(conv_mask.sum())
    conc_v = int(conc_mask.sum())
    if invalid and not reason:
        reason = f"{invalid} trials outside the domain"
    if mid_verdict == "convex":
        agrees = not bool(np.any(sd_conv))
    elif mid_verdict == "concave":
        agrees = not bool(np.any(sd_conc))
    else:
        agrees = True
    side = "convex" if worst["convex"][0] >= worst["concave"][0] else "concave"
    return ConvexityVerdict(
        cell=cell,
        verdict=verdict,
        max_convexity_defect=float(np.max(d)),
        max_concavity_defect=float(np.max(-d)),
        trials=int(d.size),
        sampled=(p, x),
        expected=expected,
        region=region_label,
        convexity_violations=conv_v,
        concavity_violations=conc_v,
        invalid=invalid,
        second_difference_agrees=agrees,
        reason=reason,
        certificate=worst[side][1],
    )


def classify_cell(p, q, target="phi", trials=None, dims=None, seed=0, config=ScanConfig()):
    """Classify the grid cell ``(p, q)``, sampling at an inset point.

    ``trials``/``dims`` override the corresponding ``config`` fields.
    """
    if trials is not None or dims is not None:
        config = replace(config, trials=trials or config.trials, dims=tuple(dims or config.dims))
    pe, xe, region = sampling_point(p, q, target, config.inset)
    return classify_at(pe, xe, target, seed, config, region, cell=(p, q))


# --- grid scans -----------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    pmin: float
    pmax: float
    psteps: int
    qmin: float
    qmax: float
    qsteps: int

    def __post_init__(self):
        if self.psteps < 1 or self.qsteps < 1:
            raise ValueError("grid needs at least one point per axis")
        if (self.psteps > 1 and self.pmax <= self.pmin) or (self.qsteps > 1 and self.qmax <= self.qmin):
            raise ValueError("grid steps must be positive")

    @classmethod
    def parse(cls, text):
        """``"pmin:pmax:points,qmin:qmax:points"``."""
        try:
            pa, qa = text.split(",")
            p0, p1, pn = pa.split(":")
            q0, q1, qn = qa.split(":")
            return cls(float(p0), float(p1), int(pn), float(q0), float(q1), int(qn))
        except ValueError as exc:
            raise ValueError(f"bad grid {text!r}: expected pmin:pmax:points,qmin:qmax:points") from exc

    def axis_values(self):
        ps = np.linspace(self.pmin, self.pmax, self.psteps) if self.psteps > 1 else np.array([self.pmin])
        qs = np.linspace(self.qmin, self.qmax, self.qsteps) if self.qsteps > 1 else np.array([self.qmin])
        # snap near-integers/near-thirds roundoff so boundary detection is exact
        return [float(round(v, 12)) for v in ps], [float(round(v, 12)) for v in qs]

    def cells(self):
        ps, qs = self.axis_values()
        return [(p, q) for p in ps for q in qs]

    def __str__(self):
        return f"{self.pmin}:{self.pmax}:{self.psteps},{self.qmin}:{self.qmax}:{self.qsteps}"


def cell_seed(seed, index):
    return np.random.SeedSequence([int(seed), int(index)])


@dataclass
class RegionScanReport:
    grid: GridSpec
    target: str
    seed: int
    config: ScanConfig
    cells: list = field(default_factory=list)

    @property
    def contradictions(self):
        return [c for c in self.cells if c.contradiction]

    @property
    def passed(self):
        return not self.contradictions

    def _x_name(self):
        return "q" if self.target == "phi" else "s"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", self._x_name(), "verdict", "max_convexity_defect", "max_concavity_defect",
                    "trials", "expected", "region", "invalid"])
        for c in self.cells:
            w.writerow([repr(c.cell[0]), repr(c.cell[1]), c.verdict, repr(c.max_convexity_defect),
                        repr(c.max_concavity_defect), c.trials, c.expected or "", c.region or "", c.invalid])
        return buf.getvalue()

    def to_json(self):
        cfg = asdict(self.config)
        cfg["dims"] = list(self.config.dims)
        # parallelism does not change results, so it stays out of the report
        del cfg["workers"], cfg["backend"]
        body = {
            "target": self.target,
            "grid": str(self.grid),
            "seed": self.seed,
            "config": cfg,
            "backend": self.config.backend or _kernels.BACKEND,
            "cells": [c.to_dict() for c in self.cells],
        }
        return json.dumps(body, indent=1, sort_keys=True, default=_json_default)

    def to_grid_text(self):
        """Character map: rows are descending ``q``/``s``, columns ascending ``p``.

        ``V`` convex, ``A`` concave, ``x`` neither, ``?`` indeterminate; lower
        case marks cells inside a known region and ``!`` a contradiction.
        """
        ps, qs = self.grid.axis_values()
        lookup = {c.cell: c for c in self.cells}
        sym = {"convex": "V", "concave": "A", "neither": "x", "indeterminate": "?"}
        lines = [f"# target={self.target} grid={self.grid} seed={self.seed}"]
        for q in reversed(qs):
            row = []
            for p in ps:
                c = lookup[(p, q)]
                ch = sym[c.verdict]
                if c.contradiction:
                    ch = "!"
                elif c.expected:
                    ch = ch.lower()
                row.append(ch)
            lines.append(f"{q:8.3f} " + " ".join(row))
        lines.append(" " * 9 + " ".join("|" for _ in ps))
        lines.append(f"# p from {ps[0]} to {ps[-1]}")
        return "\n".join(lines) + "\n"

    def to_gnuplot(self):
        """``p x code`` triples with blank lines between ``p`` blocks (pm3d/image)."""
        code = {"convex": 1, "concave": -1, "neither": 0, "indeterminate": "NaN"}
        ps, qs = self.grid.axis_values()
        lookup = {c.cell: c for c in self.cells}
        out = ["# p x verdict_code (1 convex, -1 concave, 0 neither, NaN indeterminate)"]
        for p in ps:
            for q in qs:
                out.append(f"{p!r} {q!r} {code[lookup[(p, q)].verdict]}")
            out.append("")
        return "\n".join(out) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def scan_region(grid, target="phi", config=ScanConfig(), seed=0):
    """Classify every cell; each cell draws from ``SeedSequence([seed, index])``."""
    cells = grid.cells()

    def work(item):
        index, (p, q) = item
        return classify_cell(p, q, target, seed=cell_seed(seed, index), config=config)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            verdicts = list(pool.map(work, enumerate(cells)))
    else:
        verdicts = [work(item) for item in enumerate(cells)]
    return RegionScanReport(grid, target, seed, config, verdicts)


# --- symmetry -------------------------------------------------------------


@dataclass
class SymmetryReport:
    source: ConvexityVerdict
    mirror: ConvexityVerdict

    @property
    def agree(self):
        return self.source.verdict == self.mirror.verdict


def symmetry_check(p, q, trials=200, seed=0, config=ScanConfig()):
    """Compare the verdict at ``(p, q, L)`` with ``(2 - p, q, -L)``.

    The source is whichever of ``p`` and ``2 - p`` has ``q/(1-p) > 0``, so
    ``(0.3, -1)`` and ``(1.7, -1)`` give the same pair.  ``p = 1`` is its own
    mirror.  The mirror draws fresh samples with the opposite ``L`` sign.
    """
    config = replace(config, trials=trials)
    if abs(p - 1.0) < 1e-12:
        v = classify_cell(p, q, "phi", seed=cell_seed(seed, 0), config=config)
        return SymmetryReport(v, v)
    if q == 0:
        raise ValueError("symmetry needs q != 0")
    if not q / (1.0 - p) > 0:
        p = 2.0 - p
    pe, qe, region = sampling_point(p, q, "phi", config.inset)
    src = classify_at(pe, qe, "phi", cell_seed(seed, 0), config, region, cell=(p, q))
    mreg = region_of(2.0 - pe, qe, "phi")
    mir = classify_at(2.0 - pe, qe, "phi", cell_seed(seed, 1), config, mreg, cell=(2.0 - p, q))
    return SymmetryReport(src, mir)


# --- counterexample search ------------------------------------------------


@dataclass
class SearchResult:
    p: float
    s: float
    seed: int
    samples: int
    certificate: dict = None
    #: hits whose ``L = 0`` control also showed a violation
    rejected_control: int = 0
    #: hits the dense recomputation did not reproduce
    rejected_reverify: int = 0

    @property
    def candidates_rejected(self):
        return self.rejected_control + self.rejected_reverify


def _psi_batch(A, H, L, p, s, backend=None):
    return _kernels.upsilon_values(A, H, L, p, s, backend=backend)


def counterexample_search(p, s, budget=1_000_000, seed=0, l_mode="psd", batch=4096,
                          probe_size=64, threshold=1e-6, reverify_tol=1e-8, backend=None):
    """Look for 2x2 ``(H, L, A1, A2)`` where ``Tr (L + H^*A^pH)**s`` is not midpoint convex.

    A candidate needs a defect above ``threshold * scale`` and a control: the
    ``L = 0`` function with the same ``H`` shows no convexity violation on
    ``probe_size`` random pairs (plus the candidate pair).  Survivors are
    recomputed with the dense single-matrix path and must reproduce the defect
    to ``reverify_tol * scale``.  Returns a :class:`SearchResult` whose
    ``certificate`` is ``None`` when the budget runs out.
    """
    if not s < 0:
        raise ValueError("the search is for negative exponents s")
    rng = np.random.default_rng(seed)
    n = 2
    used = 0
    rejected = {"control": 0, "reverify": 0}
    while used < budget:
        m = min(batch, budget - used)
        H = random_general_stack(m, n, rng)
        if l_mode == "zero":
            L = np.zeros((m, n, n), dtype=np.complex128)
        else:
            L = random_signed_stack(m, n, 1, rng) * (10.0 ** rng.uniform(-1, 2, size=m))[:, None, None]
        A1 = random_pd_stack(m, n, rng)
        A2 = random_pd_stack(m, n, rng)
        vals = _psi_batch(np.concatenate([A1, A2, 0.5 * (A1 + A2)]), np.concatenate([H] * 3),
                          np.concatenate([L] * 3), p, s, backend)
        f1, f2, fm = vals[:m], vals[m:2 * m], vals[2 * m:]
        d = fm - 0.5 * (f1 + f2)
        scale = 1.0 + np.abs(f1) + np.abs(f2)
        hits = np.flatnonzero(np.isfinite(d) & (d > threshold * scale))
        for i in hits:
            cert, why = _confirm(p, s, H[i], L[i], A1[i], A2[i], d[i], rng, probe_size, threshold,
                                 reverify_tol, backend)
            if cert is None:
                rejected[why] += 1
                continue
            cert.update({"seed": int(seed), "sample_index": int(used + i)})
            return SearchResult(p, s, seed, int(used + i + 1), cert, rejected["control"], rejected["reverify"])
        used += m
    return SearchResult(p, s, seed, used, None, rejected["control"], rejected["reverify"])


def _confirm(p, s, H, L, A1, A2, defect, rng, probe_size, threshold, reverify_tol, backend):
    n = H.shape[0]
    P1 = np.concatenate([A1[None], random_pd_stack(probe_size, n, rng)])
    P2 = np.concatenate([A2[None], random_pd_stack(probe_size, n, rng)])
    k = probe_size + 1
    Z = np.zeros((3 * k, n, n), dtype=np.complex128)
    Hs = np.repeat(H[None], 3 * k, axis=0)
    v = _psi_batch(np.concatenate([P1, P2, 0.5 * (P1 + P2)]), Hs, Z, p, s, backend)
    c = v[2 * k:] - 0.5 * (v[:k] + v[k:2 * k])
    ctol = 1e-8 * (1.0 + np.abs(v[:k]) + np.abs(v[k:2 * k]))
    if not np.all(np.isfinite(c)) or np.any(c > ctol):
        return None, "control"
    f1 = psi(L, H, p, s, A1)
    f2 = psi(L, H, p, s, A2)
    fm = psi(L, H, p, s, 0.5 * (A1 + A2))
    again = fm - 0.5 * (f1 + f2)
    scale = 1.0 + abs(f1) + abs(f2)
    if not again > threshold * scale or abs(again - defect) > reverify_tol * scale:
        return None, "reverify"
    return {
        "kind": "psi-midpoint-convexity-violation",
        "p": float(p),
        "s": float(s),
        "defect": float(again),
        "batch_defect": float(defect),
        "scale": float(scale),
        "threshold": threshold,
        "control_pairs": int(k),
        "control_max_defect": float(np.max(c)),
        "H": matrix_to_json(H),
        "L": matrix_to_json(L),
        "A1": matrix_to_json(A1),
        "A2": matrix_to_json(A2),
    }, None


def reverify_certificate(cert, tol=1e-8):
    """Recompute a search certificate; True if the violation reproduces."""
    H, L = matrix_from_json(cert["H"]), matrix_from_json(cert["L"])
    A1, A2 = matrix_from_json(cert["A1"]), matrix_from_json(cert["A2"])
    p, s = cert["p"], cert["s"]
    f1, f2 = psi(L, H, p, s, A1), psi(L, H, p, s, A2)
    d = psi(L, H, p, s, 0.5 * (A1 + A2)) - 0.5 * (f1 + f2)
    scale = 1.0 + abs(f1) + abs(f2)
    return d > cert["threshold"] * scale and abs(d - cert["defect"]) <= tol * scale
