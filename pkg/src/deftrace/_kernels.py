"""Batched trace-function kernels used by the region scanner.

Every kernel takes stacks of shape ``(T, n, n)`` and returns ``T`` values, with
``nan`` marking trials that left the domain (the scanner turns those into
``indeterminate`` evidence instead of raising).

Two implementations exist: a numba ``@njit`` loop and a vectorised numpy
path.  The numba path is used when numba imports and ``DEFTRACE_NUMBA`` is not
set to ``0``; both are importable directly for cross-checks and benchmarks.
"""

import os

import numpy as np

from .deformed import EXP_MARGIN, P_SWITCH
from .matrix import EIG_FLOOR

# --- numpy path -----------------------------------------------------------


def _dag(X):
    return np.conj(np.swapaxes(X, -1, -2))


def _floored_power_sum_np(b, s):
    scale = np.max(np.abs(b), axis=-1, keepdims=True)
    cut = EIG_FLOOR * scale
    bad = np.any(b < -cut, axis=-1)
    b = np.where(b <= cut, 0.0, b)
    pos = b > 0
    if s == 0:
        out = np.full(b.shape[0], float(b.shape[-1]))
    else:
        if s < 0:
            bad |= ~np.all(pos, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(pos, np.where(pos, b, 1.0) ** s, 0.0)
        out = terms.sum(axis=-1)
    out[bad] = np.nan
    return out


def phi_values_numpy(A, H, L, p, q):
    """``Tr exp_p(L + H^* log_p(A) H)**q`` for each slice of the stacks."""
    w, V = np.linalg.eigh(A)
    valid = np.all(w > 0, axis=-1)
    w = np.where(w > 0, w, 1.0)
    natural = abs(p - 1.0) < P_SWITCH
    lw = np.log(w) if natural else np.expm1((p - 1.0) * np.log(w)) / (p - 1.0)
    W = _dag(V) @ H
    M = L + (_dag(W) * lw[:, None, :]) @ W
    M = 0.5 * (M + _dag(M))
    m = np.linalg.eigvalsh(M)
    if natural:
        logv = m
    else:
        base = 1.0 + (p - 1.0) * m
        valid &= np.all(base > EXP_MARGIN, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            logv = np.log1p((p - 1.0) * m) / (p - 1.0)
    if q == 0:
        out = np.full(A.shape[0], float(A.shape[-1]))
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.exp(q * logv).sum(axis=-1)
    valid &= np.isfinite(out)
    out[~valid] = np.nan
    return out


def upsilon_values_numpy(A, H, K, p, s):
    """``Tr (K + H^*A^pH)**s`` for each slice, ``0**s = 0`` for ``s > 0``."""
    w, V = np.linalg.eigh(A)
    valid = np.all(w > 0, axis=-1)
    w = np.where(w > 0, w, 1.0)
    W = _dag(V) @ H
    B = K + (_dag(W) * (w**p)[:, None, :]) @ W
    B = 0.5 * (B + _dag(B))
    out = _floored_power_sum_np(np.linalg.eigvalsh(B), s)
    valid &= np.isfinite(out)
    out[~valid] = np.nan
    return out


# --- numba path -----------------------------------------------------------

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True)
    def _floored_power_sum_nb(b, s):
        n = b.shape[0]
        scale = 0.0
        for i in range(n):
            scale = max(scale, abs(b[i]))
        cut = EIG_FLOOR * scale
        if s == 0.0:
            for i in range(n):
                if b[i] < -cut:
                    return np.nan
            return float(n)
        total = 0.0
        for i in range(n):
            if b[i] < -cut:
                return np.nan
            if b[i] <= cut:
                if s < 0.0:
                    return np.nan
                continue
            total += b[i] ** s
        return total

    @njit(cache=True)
    def _congruence(Lt, W, d):
        # Lt + W^* diag(d) W
        n = W.shape[0]
        M = Lt.copy()
        for i in range(n):
            for j in range(n):
                acc = 0.0 + 0.0j
                for k in range(n):
                    acc += np.conj(W[k, i]) * d[k] * W[k, j]
                M[i, j] += acc
        for i in range(n):
            for j in range(i + 1, n):
                z = 0.5 * (M[i, j] + np.conj(M[j, i]))
                M[i, j] = z
                M[j, i] = np.conj(z)
            M[i, i] = M[i, i].real + 0.0j
        return M

    @njit(cache=True)
    def phi_values_numba(A, H, L, p, q):
        T = A.shape[0]
        n = A.shape[1]
        natural = abs(p - 1.0) < P_SWITCH
        out = np.empty(T)
        for t in range(T):
            w, V = np.linalg.eigh(A[t])
            if w[0] <= 0.0:
                out[t] = np.nan
                continue
            lw = np.empty(n)
            for i in range(n):
                if natural:
                    lw[i] = np.log(w[i])
                else:
                    lw[i] = np.expm1((p - 1.0) * np.log(w[i])) / (p - 1.0)
            W = np.ascontiguousarray(np.conj(V.T)) @ H[t]
            m = np.linalg.eigvalsh(_congruence(L[t], W, lw))
            if q == 0.0:
                out[t] = float(n)
                continue
            total = 0.0
            ok = True
            for i in range(n):
                if natural:
                    lv = m[i]
                else:
                    base = 1.0 + (p - 1.0) * m[i]
                    if not base > EXP_MARGIN:
                        ok = False
                        break
                    lv = np.log1p((p - 1.0) * m[i]) / (p - 1.0)
                total += np.exp(q * lv)
            out[t] = total if ok and np.isfinite(total) else np.nan
        return out

    @njit(cache=True)
    def upsilon_values_numba(A, H, K, p, s):
        T = A.shape[0]
        n = A.shape[1]
        out = np.empty(T)
        for t in range(T):
            w, V = np.linalg.eigh(A[t])
            if w[0] <= 0.0:
                out[t] = np.nan
                continue
            d = np.empty(n)
            for i in range(n):
                d[i] = w[i] ** p
            W = np.ascontiguousarray(np.conj(V.T)) @ H[t]
            b = np.linalg.eigvalsh(_congruence(K[t], W, d))
            v = _floored_power_sum_nb(b, s)
            out[t] = v if np.isfinite(v) else np.nan
        return out


def _prep(*arrays):
    return tuple(np.ascontiguousarray(a, dtype=np.complex128) for a in arrays)


def _use_numba():
    return HAVE_NUMBA and os.environ.get("DEFTRACE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


BACKEND = "numba" if _use_numba() else "numpy"


def phi_values(A, H, L, p, q, backend=None):
    A, H, L = _prep(A, H, L)
    if (backend or BACKEND) == "numba":
        return phi_values_numba(A, H, L, float(p), float(q))
    return phi_values_numpy(A, H, L, float(p), float(q))


def upsilon_values(A, H, K, p, s, backend=None):
    A, H, K = _prep(A, H, K)
    if (backend or BACKEND) == "numba":
        return upsilon_values_numba(A, H, K, float(p), float(s))
    return upsilon_values_numpy(A, H, K, float(p), float(s))
