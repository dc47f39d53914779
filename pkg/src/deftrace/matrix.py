"""Dense Hermitian linear algebra and seeded samplers.

Matrices are plain complex ``numpy`` arrays.  Hermitian inputs are checked at
the boundaries and symmetrised (``(A + A^*)/2``) before decomposition so that
roundoff asymmetry never leaks into ``eigh``.
"""

from typing import Callable, NamedTuple

import numpy as np

from . import deformed
from .errors import DomainError, NumericError

HERMITIAN_TOL = 1e-12
#: Eigenvalues within ``EIG_FLOOR * max|eig|`` of zero count as exact zeros.
EIG_FLOOR = 1e-10


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def hermitize(A):
    A = np.asarray(A, dtype=np.complex128)
    return 0.5 * (A + dagger(A))


def is_hermitian(A, tol=HERMITIAN_TOL):
    A = np.asarray(A)
    scale = 1.0 + np.max(np.abs(A), initial=0.0)
    return bool(np.max(np.abs(A - dagger(A)), initial=0.0) <= tol * scale)


def as_hermitian(A, name="matrix"):
    """Validate and return a symmetrised complex copy of ``A``."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError(f"{name} has non-finite entries")
    if not is_hermitian(A):
        raise ValueError(f"{name} is not Hermitian")
    return hermitize(A)


def as_general(A, name="matrix"):
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError(f"{name} has non-finite entries")
    return A


class SpectralDecomposition(NamedTuple):
    """``A = V diag(w) V^*`` with ``w`` ascending and ``V`` unitary."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values=None):
        w = self.eigenvalues if values is None else values
        V = self.eigenvectors
        return (V * w) @ dagger(V)


def eigh(A, context=None):
    """Eigendecomposition of a Hermitian matrix.

    ``context`` (e.g. the sampler seed) is attached to the raised
    :class:`NumericError` if LAPACK fails to converge.
    """
    A = as_hermitian(A)
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigh did not converge: {exc}", context=context) from exc
    return SpectralDecomposition(w, V)


def apply_scalar(f: Callable, A, context=None):
    """Functional calculus ``f(A) = V diag(f(w)) V^*``.

    ``f`` receives the eigenvalue array.  A :class:`DomainError` raised by
    ``f``, or a non-finite result, is reported with the offending eigenvalue.
    """
    dec = eigh(A, context=context)
    w = dec.eigenvalues
    try:
        fw = np.asarray(f(w))
    except DomainError as exc:
        raise DomainError(
            f"eigenvalue outside the domain of f: {exc}", offending=exc.offending
        ) from exc
    bad = ~np.isfinite(fw)
    if np.any(bad):
        lam = float(w[bad][0])
        raise DomainError(f"f is not finite at eigenvalue {lam!r}", offending=lam)
    return hermitize(dec.reconstruct(fw))


def matrix_power(A, r):
    """``A**r`` for positive definite ``A``."""
    return apply_scalar(lambda w: _checked_power(w, r), A)


def _checked_power(w, r):
    if np.any(w <= 0):
        lam = float(w[w <= 0][0])
        raise DomainError(f"power {r} needs positive eigenvalues, got {lam!r}", offending=lam)
    return w**r


def matrix_log_p(A, p):
    return apply_scalar(lambda w: deformed.log_p(w, p), A)


def matrix_exp_p(M, p):
    """``exp_p`` of a Hermitian matrix; every eigenvalue must be in the domain."""
    dec = eigh(M)
    w = dec.eigenvalues
    ok = deformed.in_exp_domain(w, p)
    if not np.all(ok):
        bad = w[~ok]
        raise DomainError(
            f"eigenvalues {bad.tolist()} outside the exp_p domain for p={p!r}",
            offending=float(bad[0]),
        )
    return hermitize(dec.reconstruct(deformed.exp_p(w, p)))


def matrix_exp(S):
    return apply_scalar(np.exp, S)


def floored_eigenvalues(w, floor=EIG_FLOOR):
    """Snap near-zero eigenvalues of a PSD matrix to exact zeros.

    Raises
    ------
    DomainError
        If an eigenvalue is below ``-floor * max|w|``.
    """
    w = np.asarray(w, dtype=np.float64)
    scale = np.max(np.abs(w), initial=0.0)
    cut = floor * scale
    if np.any(w < -cut):
        lam = float(w[w < -cut][0])
        raise DomainError(f"matrix is not positive semidefinite (eigenvalue {lam!r})", offending=lam)
    return np.where(w <= cut, 0.0, w)


def psd_trace_power(B, s, floor=EIG_FLOOR):
    """``Tr B**s`` for PSD ``B`` using the convention ``0**s = 0`` for ``s > 0``.

    ``s = 0`` returns ``Tr I``.  Negative ``s`` needs ``B`` strictly positive.
    """
    w = floored_eigenvalues(np.linalg.eigvalsh(hermitize(B)), floor)
    if s == 0:
        return float(w.size)
    pos = w > 0
    if s < 0 and not np.all(pos):
        raise DomainError("negative power of a singular matrix", offending=0.0)
    return float(np.sum(w[pos] ** s))


def check_pd(A, name="A"):
    """Validate ``A`` as positive definite and return its Hermitian copy."""
    A = as_hermitian(A, name)
    lam = np.linalg.eigvalsh(A)[0]
    if lam <= 0:
        raise DomainError(f"{name} must be positive definite (min eigenvalue {lam!r})", offending=float(lam))
    return A


def check_psd(A, name="matrix", tol=1e-10):
    A = as_hermitian(A, name)
    w = np.linalg.eigvalsh(A)
    if w[0] < -tol * max(1.0, np.max(np.abs(w))):
        raise DomainError(f"{name} must be positive semidefinite (min eigenvalue {w[0]!r})", offending=float(w[0]))
    return A


def operator_norm(H):
    return float(np.linalg.norm(H, 2))


# --- samplers -------------------------------------------------------------


def _rng(seed):
    return np.random.default_rng(seed)


def _complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_unitary_stack(count, n, rng):
    """Haar unitaries via QR with the phase of ``diag(R)`` divided out."""
    Z = _complex_gaussian(rng, (count, n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[:, None, :]


def random_pd_stack(count, n, rng, spread=10.0):
    """PD matrices with eigenvalues log-uniform on ``[1/spread, spread]``."""
    if spread < 1:
        raise ValueError("spread must be >= 1")
    U = random_unitary_stack(count, n, rng)
    logs = rng.uniform(-np.log(spread), np.log(spread), size=(count, n))
    return hermitize((U * np.exp(logs)[:, None, :]) @ dagger(U))


def random_contraction_stack(count, n, rng, floor=0.0):
    """Gaussian matrices with singular values clamped into ``[floor, 1]``."""
    G = _complex_gaussian(rng, (count, n, n)) * np.sqrt(2.0 / n)
    U, sig, Vh = np.linalg.svd(G)
    sig = np.clip(sig, floor, 1.0)
    return (U * sig[:, None, :]) @ Vh


def random_general_stack(count, n, rng, scale=1.0):
    return scale * _complex_gaussian(rng, (count, n, n))


def random_signed_stack(count, n, sign, rng, scale=1.0):
    """``sign * G G^* / n``; ``sign`` is +1, -1 or 0 (zero matrices)."""
    sign = _parse_sign(sign)
    G = _complex_gaussian(rng, (count, n, n))
    M = hermitize(G @ dagger(G)) * (scale / n)
    return sign * M


def random_hermitian_stack(count, n, rng):
    return hermitize(_complex_gaussian(rng, (count, n, n)))


def _parse_sign(sign):
    if isinstance(sign, str):
        try:
            return {"positive": 1, "negative": -1, "zero": 0, "+": 1, "-": -1, "0": 0}[sign]
        except KeyError:
            raise ValueError(f"unknown sign {sign!r}") from None
    if sign not in (-1, 0, 1):
        raise ValueError(f"sign must be -1, 0 or 1, got {sign!r}")
    return int(sign)


def random_pd(n, seed=None, spread=10.0):
    return random_pd_stack(1, n, _rng(seed), spread)[0]


def random_contraction(n, seed=None, floor=0.0):
    return random_contraction_stack(1, n, _rng(seed), floor)[0]


def random_signed(n, sign, seed=None, scale=1.0):
    return random_signed_stack(1, n, sign, _rng(seed), scale)[0]


def random_hermitian(n, seed=None):
    return random_hermitian_stack(1, n, _rng(seed))[0]


def random_unitary(n, seed=None):
    return random_unitary_stack(1, n, _rng(seed))[0]


# --- serialization --------------------------------------------------------


def matrix_to_json(A):
    """``{"n", "re", "im"}`` with row-major flattened real/imaginary parts."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    return {"n": int(n), "re": A.real.ravel().tolist(), "im": A.imag.ravel().tolist()}


def matrix_from_json(obj):
    n = int(obj["n"])
    re = np.asarray(obj["re"], dtype=np.float64)
    im = np.asarray(obj["im"], dtype=np.float64)
    if re.size != n * n or im.size != n * n:
        raise ValueError(f"matrix JSON with n={n} needs {n * n} entries")
    return (re + 1j * im).reshape(n, n)
