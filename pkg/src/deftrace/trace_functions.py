"""The deformed trace function ``phi`` and its relatives.

``phi(A) = Tr exp_p(L + H^* log_p(A) H)**q`` for a contraction ``H`` and a
Hermitian ``L`` whose sign follows ``p`` (``L >= 0`` for ``p > 1``, ``L <= 0``
for ``p < 1``).  Three algebraically equivalent evaluations are provided:

* :func:`phi_direct` – the defining formula,
* :func:`phi_algebraic` – ``Tr [I - H^*H + (p-1)L + H^*A^(p-1)H]**(q/(p-1))``,
* :func:`phi_beta` – ``Tr exp_b(qL + qH^* log_p(A) H)`` with ``b = 1 + (p-1)/q``.

Also here: ``Tr (K + H^*A^pH)**s`` (:func:`upsilon`, :func:`psi`), the
block-matrix embedding that removes ``K``, the variational functional ``F`` and
its non-linear part ``G``, and the large/small-``t`` scaling defect.
"""

from dataclasses import dataclass

import numpy as np

from . import deformed
from .errors import BranchUnavailableError, ConditioningError, DomainError
from .matrix import (
    EIG_FLOOR,
    as_general,
    as_hermitian,
    check_pd,
    check_psd,
    dagger,
    eigh,
    hermitize,
    matrix_exp_p,
    matrix_log_p,
    matrix_power,
    operator_norm,
    psd_trace_power,
)

NORM_TOL = 1e-10
SIGN_TOL = 1e-10
#: ``scaling_limit_defect`` refuses ``H`` with a larger condition number.
MAX_CONDITION = 1e8


@dataclass(frozen=True)
class TraceFunctionSpec:
    """Parameters ``(p, q, H, L)`` of ``phi``.

    Construction validates the contraction bound on ``H`` and the sign rule on
    ``L``; ``L`` must vanish at ``p = 1``.
    """

    p: float
    q: float
    H: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        H = as_general(self.H, "H")
        L = as_hermitian(self.L, "L")
        if H.shape != L.shape:
            raise ValueError(f"H {H.shape} and L {L.shape} differ in shape")
        if operator_norm(H) > 1.0 + NORM_TOL:
            raise DomainError(f"H must be a contraction (norm {operator_norm(H)!r})")
        w = np.linalg.eigvalsh(L)
        scale = SIGN_TOL * max(1.0, float(np.max(np.abs(w), initial=0.0)))
        if deformed.is_natural(self.p):
            if np.max(np.abs(w), initial=0.0) > scale:
                raise DomainError("L must be zero at p = 1")
        elif self.p > 1 and w[0] < -scale:
            raise DomainError("L must be positive semidefinite for p > 1")
        elif self.p < 1 and w[-1] > scale:
            raise DomainError("L must be negative semidefinite for p < 1")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "L", L)

    @property
    def n(self):
        return self.H.shape[0]

    @property
    def beta(self):
        return deformed.beta_of(self.p, self.q)

    def with_L(self, L):
        return TraceFunctionSpec(self.p, self.q, self.H, L)


@dataclass(frozen=True)
class UpsilonSpec:
    """Parameters ``(p, s, K, H)`` of ``Tr (K + H^*A^pH)**s``; ``H`` is arbitrary."""

    p: float
    s: float
    K: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        K = check_psd(self.K, "K")
        H = as_general(self.H, "H")
        if H.shape != K.shape:
            raise ValueError(f"H {H.shape} and K {K.shape} differ in shape")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "H", H)


def inner_argument(spec, A):
    """``L + H^* log_p(A) H``, the argument of ``exp_p`` in ``phi``."""
    A = check_pd(A)
    H = spec.H
    return hermitize(spec.L + dagger(H) @ matrix_log_p(A, spec.p) @ H)


def phi_direct(spec, A):
    """``Tr exp_p(L + H^* log_p(A) H)**q`` straight from the definition.

    At ``q = 0`` this is literally ``Tr I``.
    """
    M = inner_argument(spec, A)
    E = matrix_exp_p(M, spec.p)
    w = np.linalg.eigvalsh(E)
    if spec.q == 0:
        return float(w.size)
    return float(np.sum(w**spec.q))


def algebraic_base(spec, A):
    """``I - H^*H + (p-1)L + H^*A^(p-1)H``."""
    A = check_pd(A)
    H, p = spec.H, spec.p
    n = spec.n
    return hermitize(
        np.eye(n) - dagger(H) @ H + (p - 1.0) * spec.L + dagger(H) @ matrix_power(A, p - 1.0) @ H
    )


def phi_algebraic(spec, A):
    """``Tr [I - H^*H + (p-1)L + H^*A^(p-1)H]**(q/(p-1))``; no branch at ``p = 1``."""
    if deformed.is_natural(spec.p):
        raise BranchUnavailableError("the algebraic form of phi has no p = 1 branch; use phi_direct")
    B = algebraic_base(spec, A)
    return psd_trace_power(B, spec.q / (spec.p - 1.0))


def phi_beta(spec, A):
    """``Tr exp_b(qL + qH^* log_p(A) H)`` with ``b = 1 + (p-1)/q``."""
    beta = spec.beta
    M = spec.q * inner_argument(spec, A)
    w = eigh(M).eigenvalues
    return float(np.sum(deformed.exp_p(w, beta)))


def upsilon(spec, A):
    """``Tr (K + H^*A^pH)**s`` with ``0**s = 0`` for ``s > 0``."""
    A = check_pd(A)
    H = spec.H
    B = hermitize(spec.K + dagger(H) @ matrix_power(A, spec.p) @ H)
    return psd_trace_power(B, spec.s)


def psi(L, H, p, s, A):
    """``Tr (L + H^*A^pH)**s`` for ``L >= 0`` and arbitrary ``H``."""
    return upsilon(UpsilonSpec(p, s, L, H), A)


def block_embed(L, H, A):
    """Absorb ``L`` into a doubled congruence.

    Returns ``(Hh, Ah)`` with ``Hh = [[L^(1/2), 0], [H, 0]]`` and
    ``Ah = diag(I, A)``, so that ``Hh^* Ah^p Hh = diag(L + H^*A^pH, 0)`` and
    therefore ``psi(L, H, p, s, A) == psi(0, Hh, p, s, Ah)`` for ``s > 0``.
    """
    L = check_psd(L, "L")
    H = as_general(H, "H")
    A = check_pd(A)
    n = L.shape[0]
    dec = eigh(L)
    root = hermitize(dec.reconstruct(np.sqrt(np.clip(dec.eigenvalues, 0.0, None))))
    Hh = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    Hh[:n, :n] = root
    Hh[n:, :n] = H
    Ah = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    Ah[:n, :n] = np.eye(n)
    Ah[n:, n:] = A
    return Hh, Ah


def variational_log_target(spec, A):
    """``qL + qH^* log_p(A) H``, which equals ``log_b(Y)`` exactly."""
    return spec.q * inner_argument(spec, A)


def variational_target(spec, A):
    """``Y = exp_b(qL + qH^* log_p(A) H)``; ``Tr Y == phi(A)``."""
    return matrix_exp_p(variational_log_target(spec, A), spec.beta)


def F_from_log_target(X, M, beta):
    """``Tr X - Tr X^(2-b) (log_b X - M)`` for a precomputed ``M = log_b Y``."""
    dec = eigh(X)
    w = dec.eigenvalues
    if w[0] <= 0:
        raise DomainError("X must be positive definite", offending=float(w[0]))
    V = dec.eigenvectors
    head = np.sum(w - w ** (2.0 - beta) * deformed.log_p(w, beta))
    # Tr X^(2-b) M computed in the eigenbasis of X
    Md = np.real(np.einsum("ij,ik,kj->j", np.conj(V), M, V))
    return float(head + np.sum(w ** (2.0 - beta) * Md))


def F_of(X, A, spec):
    """``F(X, A) = Tr X - Tr X^(2-b) (log_b X - log_b Y)``.

    ``Y`` is recomputed from ``(spec, A)`` on every call; use
    :func:`variational_log_target` with :func:`F_from_log_target` in loops.
    """
    X = check_pd(X, "X")
    return F_from_log_target(X, variational_log_target(spec, A), spec.beta)


def G_of(X, A, spec):
    """Non-linear part of ``F``: ``F = (1 - 1/(b-1)) Tr X + G``."""
    beta = spec.beta
    if deformed.is_natural(beta):
        raise BranchUnavailableError("G is undefined at beta = 1")
    X = check_pd(X, "X")
    A = check_pd(A)
    H, p, n = spec.H, spec.p, spec.n
    Xr = matrix_power(X, 2.0 - beta)
    C = np.eye(n) - dagger(H) @ H + (p - 1.0) * spec.L
    D = dagger(H) @ matrix_power(A, p - 1.0) @ H
    return float(np.real(np.trace(Xr @ C + Xr @ D)) / (beta - 1.0))


def scaling_limit(spec, A):
    """``Tr (H^*A^(p-1)H)**(q/(p-1))``, the limit of ``t^-q phi(tA)``."""
    if deformed.is_natural(spec.p):
        raise BranchUnavailableError("the scaling limit needs p != 1")
    A = check_pd(A)
    H = spec.H
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > MAX_CONDITION:
        raise ConditioningError("H is too close to singular for the scaling limit")
    D = hermitize(dagger(H) @ matrix_power(A, spec.p - 1.0) @ H)
    return psd_trace_power(D, spec.q / (spec.p - 1.0), floor=EIG_FLOOR)


def scaling_limit_defect(spec, A, t):
    """``|t^-q phi(tA) - Tr (H^*A^(p-1)H)**(q/(p-1))|``.

    Tends to zero as ``t -> inf`` for ``p > 1`` and ``t -> 0`` for ``p < 1``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    limit = scaling_limit(spec, A)
    scaled = t ** (-spec.q) * phi_direct(spec, t * np.asarray(A))
    return abs(scaled - limit)
