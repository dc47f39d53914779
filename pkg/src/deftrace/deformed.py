"""Deformed (Tsallis) logarithm and exponential.

``log_p(x) = (x**(p-1) - 1) / (p-1)`` with the natural logarithm at ``p = 1``;
``exp_p`` is its inverse.  Both accept Python scalars or numpy arrays and
return the same kind.  Evaluation goes through ``expm1``/``log1p`` so that the
closed form stays accurate as ``p`` approaches 1.
"""

import numpy as np

from .errors import DegenerateParameterError, DomainError

#: Below this ``|p - 1|`` the natural branch is used.
P_SWITCH = 1e-7
#: ``1 + (p-1) x`` must exceed this for ``exp_p(x)`` to be defined.
EXP_MARGIN = 1e-300
#: Natural-log of the largest finite double (overflow guard).
_LOG_MAX = np.log(np.finfo(np.float64).max)


def is_natural(p):
    """True when ``p`` is close enough to 1 to use ``log``/``exp``."""
    return abs(p - 1.0) < P_SWITCH


def _wrap(value, scalar):
    return float(value) if scalar else value


def log_p(x, p):
    """Deformed logarithm of ``x > 0``.

    Raises
    ------
    DomainError
        If any entry of ``x`` is not strictly positive.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    bad = ~(x > 0)
    if np.any(bad):
        first = x[bad].flat[0] if x.ndim else float(x)
        raise DomainError(f"log_p requires x > 0, got {first!r}", offending=first)
    lx = np.log(x)
    if is_natural(p):
        return _wrap(lx, scalar)
    return _wrap(np.expm1((p - 1.0) * lx) / (p - 1.0), scalar)


def _exp_log(x, p):
    """``log(exp_p(x))`` and a validity mask, without raising."""
    x = np.asarray(x, dtype=np.float64)
    if is_natural(p):
        logv = x.copy()
        ok = np.isfinite(x) & (x < _LOG_MAX)
        return logv, ok
    base = 1.0 + (p - 1.0) * x
    ok = np.isfinite(base) & (base > EXP_MARGIN)
    with np.errstate(invalid="ignore", divide="ignore"):
        logv = np.log1p(np.where(ok, (p - 1.0) * x, 0.0)) / (p - 1.0)
    ok &= logv < _LOG_MAX
    return logv, ok


def exp_p(x, p):
    """Deformed exponential, the inverse of :func:`log_p`.

    Defined where ``1 + (p-1) x > 0`` (everywhere for ``p = 1``) and where the
    result is finite.
    """
    scalar = np.ndim(x) == 0
    logv, ok = _exp_log(x, p)
    if not np.all(ok):
        xs = np.asarray(x, dtype=np.float64)
        first = xs[~ok].flat[0] if xs.ndim else float(xs)
        raise DomainError(
            f"exp_p(x) undefined or overflowing for x={first!r}, p={p!r}",
            offending=first,
        )
    return _wrap(np.exp(logv), scalar)


def in_exp_domain(x, p):
    """Whether ``exp_p(x)`` is defined (with margin) and finite."""
    _, ok = _exp_log(x, p)
    return bool(ok) if np.ndim(ok) == 0 else ok


def alpha_of(q, p):
    """Index ``a`` with ``log_p(x**q) == q * log_a(x)``."""
    return 1.0 + q * (p - 1.0)


def beta_of(p, q):
    """Index ``b`` with ``exp_p(x)**q == exp_b(q*x)``; undefined for ``q = 0``."""
    if q == 0:
        raise DegenerateParameterError("beta = 1 + (p-1)/q is undefined at q = 0")
    return 1.0 + (p - 1.0) / q
