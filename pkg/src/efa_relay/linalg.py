"""
Complex linear-algebra kernels used by the relay optimizers.

Vectors and matrices are plain complex numpy arrays. Vectorization is
column-stacking throughout (``vec(F) == F.reshape(-1, order="F")``), which is
the convention under which ``vec(A X B) = (B^T kron A) vec(X)`` holds.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NotPositiveDefinite

__all__ = [
    "EigenPair",
    "kron",
    "vec",
    "unvec",
    "is_hermitian",
    "cholesky_hermitian",
    "solve_hermitian",
    "dominant_eigenpair",
    "normalize_phase",
]


class EigenPair(NamedTuple):
    value: float
    vector: np.ndarray


def kron(a, b):
    """Kronecker product of two (possibly 1-D) complex arrays."""
    return np.kron(np.asarray(a), np.asarray(b))


def vec(F):
    """Column-stacking vectorization of a matrix."""
    return np.asarray(F).reshape(-1, order="F")


def unvec(f, rows):
    """Inverse of :func:`vec` for a matrix with ``rows`` rows."""
    f = np.asarray(f)
    return f.reshape(rows, f.size // rows, order="F")


def is_hermitian(m, rtol=1e-12):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = np.linalg.norm(m)
    return bool(np.linalg.norm(m - m.conj().T) <= rtol * max(scale, np.finfo(float).tiny))


def cholesky_hermitian(m):
    """
    Factor a Hermitian positive definite matrix as ``m = L^H L``.

    The returned factor is upper triangular, so ``L^H`` is the usual lower
    Cholesky factor.

    Raises
    ------
    NotPositiveDefinite
        If a non-positive pivot is met.
    """
    m = np.asarray(m, dtype=complex)
    try:
        lower = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.isfinite(lower)):
        raise NotPositiveDefinite("non-finite Cholesky factor")
    return lower.conj().T


def solve_hermitian(m, b):
    """Solve ``m x = b`` for Hermitian positive definite ``m``."""
    L = cholesky_hermitian(m)
    # m = L^H L: forward substitution with L^H, back substitution with L
    y = scipy.linalg.solve_triangular(L, b, trans="C", lower=False)
    return scipy.linalg.solve_triangular(L, y, lower=False)


def normalize_phase(v):
    """Rotate ``v`` so that its first non-negligible entry is real and nonnegative."""
    v = np.asarray(v, dtype=complex)
    mags = np.abs(v)
    if mags.size == 0 or mags.max() == 0.0:
        return v
    idx = int(np.argmax(mags > 1e-12 * mags.max()))
    out = v * (np.conj(v[idx]) / mags[idx])
    out[idx] = mags[idx]  # drop the roundoff imaginary part
    return out


def dominant_eigenpair(m, tol=1e-12, max_iters=100_000, seed=0):
    """
    Largest eigenpair of a Hermitian positive semidefinite matrix by power iteration.

    The start vector is drawn from a fixed seed, so results are reproducible.
    Iteration stops once ``||m v - lam v|| <= tol * lam``; the returned value is
    the Rayleigh quotient at the returned unit vector.

    Parameters
    ----------
    m : (n, n) complex array
    tol : float
        Relative eigen-residual tolerance.
    max_iters : int
    seed : int
        Seed of the start vector.

    Returns
    -------
    EigenPair

    Raises
    ------
    NoConvergence
        If the residual bound is not reached in ``max_iters`` iterations.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)

    for _ in range(max_iters):
        w = m @ v
        lam = float(np.real(np.vdot(v, w)))
        resid = np.linalg.norm(w - lam * v)
        if resid <= tol * lam or np.linalg.norm(w) == 0.0:
            return EigenPair(max(lam, 0.0), normalize_phase(v))
        v = w / np.linalg.norm(w)

    raise NoConvergence(f"power iteration did not converge in {max_iters} iterations")
