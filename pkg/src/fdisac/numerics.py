"""Dense complex linear algebra and scalar root finding.

Everything here operates on ``numpy`` arrays of dtype ``complex128`` (a
``ComplexMatrix`` is a 2-D array, a ``ComplexVector`` a 1-D array).  The
functions are pure and thread-safe.
"""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np
import scipy.linalg

__all__ = [
    "PIVOT_TOL",
    "HERMITIAN_TOL",
    "SingularMatrixError",
    "BracketError",
    "NotHermitianError",
    "as_matrix",
    "as_vector",
    "matmul",
    "hermitian_transpose",
    "solve_linear",
    "householder_basis",
    "solve_rank1_penalized",
    "max_eigenvalue_hermitian",
    "bisect",
    "dft",
    "idft",
]

#: Relative pivot magnitude below which a matrix is declared singular.
PIVOT_TOL = 1e-14
#: Elementwise tolerance for accepting a matrix as Hermitian.
HERMITIAN_TOL = 1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when Gaussian elimination meets a (near-)zero pivot.

    Attributes
    ----------
    pivot : float
        Magnitude of the smallest pivot encountered.
    scale : float
        Largest absolute entry of the matrix, the reference for ``pivot``.
    """

    def __init__(self, pivot: float, scale: float):
        self.pivot = float(pivot)
        self.scale = float(scale)
        super().__init__(
            f"matrix is singular to working precision: pivot {self.pivot:.3e} "
            f"relative to scale {self.scale:.3e}"
        )


class BracketError(ValueError):
    """Raised when a root-finding bracket has no sign change."""

    def __init__(self, lo: float, hi: float, f_lo: float, f_hi: float):
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi
        super().__init__(
            f"no sign change on [{lo:.6g}, {hi:.6g}] "
            f"(f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e}); widen the bracket"
        )


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex128 array (no copy when already one)."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def as_vector(x) -> np.ndarray:
    """Return ``x`` as a 1-D complex128 array."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit dimension check.

    Raises
    ------
    ValueError
        If ``a.cols != b.rows``.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim == 0 or b.ndim == 0:
        raise ValueError("matmul needs at least 1-D operands")
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def hermitian_transpose(a) -> np.ndarray:
    """Conjugate transpose.  For a 1-D input this is the elementwise conjugate."""
    a = np.asarray(a, dtype=np.complex128)
    return np.conj(a.T)


def solve_linear(a, b) -> np.ndarray:
    """Solve ``A x = b`` by LU factorization with partial pivoting.

    Parameters
    ----------
    a : array_like, shape (n, n)
    b : array_like, shape (n,) or (n, k)

    Returns
    -------
    numpy.ndarray
        Solution with the shape of ``b``.

    Raises
    ------
    SingularMatrixError
        If any pivot magnitude is at most ``PIVOT_TOL`` times the largest
        entry of ``A``.
    """
    a = as_matrix(a)
    b = np.asarray(b, dtype=np.complex128)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"solve_linear needs a square matrix, got {a.shape}")
    if b.shape[0] != n:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, expected {n}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        raise SingularMatrixError(0.0 if scale == 0.0 else np.nan, scale)
    with warnings.catch_warnings():
        # singularity is reported below through SingularMatrixError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    smallest = float(pivots.min())
    if smallest <= PIVOT_TOL * scale:
        raise SingularMatrixError(smallest, scale)
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def householder_basis(u) -> np.ndarray:
    """Unitary matrix whose first column is a unit-modulus multiple of ``u/‖u‖``.

    The remaining columns span the orthogonal complement of ``u``.  Built
    from a single Householder reflector, so it is exactly unitary to
    rounding.
    """
    u = as_vector(u)
    n = u.shape[0]
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise ValueError("householder_basis needs a nonzero vector")
    x = u / norm
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0 + 0.0j
    v = x.copy()
    v[0] += phase  # reflector maps x onto -phase*e1 without cancellation
    v /= np.linalg.norm(v)
    return np.eye(n, dtype=np.complex128) - 2.0 * np.outer(v, v.conj())


def solve_rank1_penalized(c, u, weight: float, b) -> np.ndarray:
    """Solve ``(C + weight·u uᴴ) x = b`` for a possibly enormous ``weight``.

    Forming ``C + weight·u uᴴ`` directly destroys every digit of ``C`` once
    ``weight·‖u‖²`` dwarfs it (the solver uses weights around ``1e25``).
    Instead the system is rotated into a unitary basis ``U = [û, Q]`` where
    the penalty touches a single diagonal entry, and that entry is
    eliminated through a Schur complement.  Only ``C`` itself enters the
    factorization, so the result keeps full relative accuracy.

    Falls back to a plain solve when ``u`` or ``weight`` is zero.
    """
    c = as_matrix(c)
    u = as_vector(u)
    b = np.asarray(b, dtype=np.complex128)
    unorm2 = float(np.vdot(u, u).real)
    if weight == 0.0 or unorm2 == 0.0:
        return solve_linear(c, b)
    basis = householder_basis(u)
    a = basis.conj().T @ c @ basis
    bb = basis.conj().T @ b
    a11 = a[0, 0].real + weight * unorm2
    a21 = a[1:, 0]
    a12 = a[0, 1:]
    schur = a[1:, 1:] - np.outer(a21, a12) / a11
    if schur.shape[0] == 0:
        return basis[:, 0] * (bb[0] / a11)
    z = solve_linear(schur, bb[1:] - a21 * (bb[0] / a11))
    t = (bb[0] - a12 @ z) / a11
    return basis[:, 0] * t + basis[:, 1:] @ z


def _check_hermitian(a: np.ndarray, tol: float) -> None:
    if a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"matrix is not square: {a.shape}")
    dev = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e} > {tol:.1e}")


def max_eigenvalue_hermitian(a, tol: float = HERMITIAN_TOL) -> float:
    """Largest eigenvalue of a Hermitian matrix.

    Uses the LAPACK Hermitian eigenvalue driver, which is exact to rounding
    and has no convergence knob to tune.

    Raises
    ------
    NotHermitianError
        If ``max|A - Aᴴ| > tol``.
    """
    a = as_matrix(a)
    _check_hermitian(a, tol)
    herm = 0.5 * (a + a.conj().T)
    return float(scipy.linalg.eigvalsh(herm, check_finite=False)[-1])


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    *,
    xtol: float | None = None,
    maxiter: int = 400,
    batch: int = 1,
) -> float:
    """Find a root of a monotone scalar function by bisection.

    Stops once ``|f(x)| <= tol`` or the bracket is narrower than ``xtol``
    (defaults to ``tol``).  Works for increasing and decreasing ``f``.

    Parameters
    ----------
    batch : int
        When larger than one, ``f`` must accept and return 1-D arrays and
        each pass evaluates the ``batch - 1`` equally spaced interior points
        of the current bracket at once.  With ``batch = 2**k`` a pass yields
        the same bracket as ``k`` plain halvings, at a fraction of the
        Python overhead.

    Raises
    ------
    BracketError
        If ``f(lo)`` and ``f(hi)`` have the same strict sign.
    """
    if xtol is None:
        xtol = tol
    if batch > 1:
        f_lo, f_hi = (float(v) for v in f(np.array([lo, hi])))
    else:
        f_lo = f(lo)
        f_hi = f(hi)
    if abs(f_lo) <= tol:
        return lo
    if abs(f_hi) <= tol:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(lo, hi, f_lo, f_hi)
    lo_positive = f_lo > 0
    if batch > 1:
        return _multisect(f, lo, hi, tol, xtol, maxiter, batch, lo_positive)
    mid = 0.5 * (lo + hi)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= min(lo, hi) or mid >= max(lo, hi):
            return mid  # bracket collapsed to adjacent floats
        f_mid = f(mid)
        if abs(f_mid) <= tol or abs(hi - lo) <= xtol:
            return mid
        if (f_mid > 0) == lo_positive:
            lo = mid
        else:
            hi = mid
    return mid


def _multisect(f, lo, hi, tol, xtol, maxiter, batch, lo_positive):
    fractions = np.arange(1, batch) / batch
    mid = 0.5 * (lo + hi)
    for _ in range(maxiter):
        points = lo + (hi - lo) * fractions
        values = np.asarray(f(points), dtype=float)
        hit = np.flatnonzero(np.abs(values) <= tol)
        if hit.size:
            return float(points[hit[0]])
        same_as_lo = (values > 0) == lo_positive
        k = int(np.count_nonzero(same_as_lo))  # f is monotone, so these come first
        new_lo = points[k - 1] if k > 0 else lo
        new_hi = points[k] if k < points.size else hi
        mid = 0.5 * (new_lo + new_hi)
        if abs(new_hi - new_lo) <= xtol or (new_lo, new_hi) == (lo, hi):
            return float(mid)
        lo, hi = float(new_lo), float(new_hi)
    return float(mid)


def dft(x, m: int | None = None) -> np.ndarray:
    """``X[k] = Σₙ x[n]·exp(−j2πkn/M)`` along the last axis."""
    x = np.asarray(x, dtype=np.complex128)
    if m is not None and x.shape[-1] != m:
        raise ValueError(f"dft length {m} does not match input length {x.shape[-1]}")
    return np.fft.fft(x, axis=-1)


def idft(spectrum) -> np.ndarray:
    """Inverse of :func:`dft` (including the ``1/M`` factor)."""
    return np.fft.ifft(np.asarray(spectrum, dtype=np.complex128), axis=-1)
