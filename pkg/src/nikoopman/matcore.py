"""Dense linear-algebra kernels used throughout the package.

Matrices are plain 2-D numpy arrays (float64 real, complex128 complex),
row-major.  The helpers here wrap numpy/scipy LAPACK routines behind the
small set of operations the identification pipeline needs: symmetric
eigendecomposition, PSD cone projection, pseudoinverse, linear solves with
explicit singularity detection, and a spectral-radius estimate that never
touches a nonsymmetric eigensolver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .tolerances import TOL


class NonSquareError(ValueError):
    """A square matrix was required."""


class NotConvergedError(RuntimeError):
    """The underlying eigensolver failed to converge."""


class SingularMatrixError(ValueError):
    """Linear system singular to working precision."""


def _square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.atleast_2d(np.asarray(a))
    if a.shape[0] != a.shape[1]:
        raise NonSquareError(f"{name} must be square, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class SymEig:
    """Spectral decomposition of a symmetric matrix.

    Attributes:
        eigenvalues: Real eigenvalues sorted descending.
        eigenvectors: Orthonormal eigenvectors, one per column, matching
            the eigenvalue order.
        converged: False only if the solver had to stop early.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    converged: bool = True

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def sym_eig(a: np.ndarray) -> SymEig:
    """Full eigendecomposition of a symmetric matrix.

    The input is symmetrized as (a + a')/2 first, so mildly asymmetric
    inputs (round-off level) are accepted.

    Raises:
        NonSquareError: if ``a`` is not square.
        NotConvergedError: if LAPACK fails to converge.
    """
    a = _square(np.asarray(a, dtype=float))
    s = 0.5 * (a + a.T)
    try:
        w, v = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NotConvergedError(f"eigh did not converge: {exc}") from exc
    return SymEig(w[::-1].copy(), v[:, ::-1].copy())


def psd_project(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest positive-semidefinite matrix to ``a``.

    Symmetrizes, clips negative eigenvalues at zero and reassembles.
    """
    e = sym_eig(a)
    clipped = np.maximum(e.eigenvalues, 0.0)
    out = (e.eigenvectors * clipped) @ e.eigenvectors.T
    return 0.5 * (out + out.T)


def pinv(a: np.ndarray, rcond: float = TOL.pinv_rcond) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    Singular values below ``rcond`` times the largest are treated as zero.
    """
    if rcond <= 0:
        raise ValueError(f"rcond must be positive, got {rcond}")
    return np.linalg.pinv(np.atleast_2d(np.asarray(a, dtype=float)), rcond=rcond)


def _lu_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] == 0:  # empty system: solution is the (empty) rhs
        return b.copy()
    with warnings.catch_warnings():
        # our own pivot check below raises instead
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a)
    pivots = np.abs(np.diag(lu))
    a_norm = np.linalg.norm(a, np.inf)
    if pivots.min() < TOL.solve_pivot * max(a_norm, np.finfo(float).tiny):
        raise SingularMatrixError(
            f"matrix singular to working precision (min pivot {pivots.min():.3e})"
        )
    return scipy.linalg.lu_solve((lu, piv), b)


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for real square ``a`` via partial-pivot LU.

    Raises:
        SingularMatrixError: pivot below ``TOL.solve_pivot * ||a||_inf``.
    """
    a = _square(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    return _lu_solve(a, b)


def csolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex counterpart of :func:`solve`."""
    a = _square(np.asarray(a, dtype=complex))
    b = np.asarray(b, dtype=complex)
    return _lu_solve(a, b)


@dataclass(frozen=True)
class SpectralRadius:
    value: float
    converged: bool


def spectral_radius(a: np.ndarray) -> SpectralRadius:
    """Spectral-radius estimate via Gelfand's formula.

    Squares the matrix repeatedly, renormalizing each time and accumulating
    the log of the factored-out norms, until successive estimates
    rho_k = ||a^(2^k)||_F^(1/2^k) agree to ``TOL.gelfand_rel`` (relative) or
    k = 14.  Never raises; inspect ``converged`` instead.
    """
    a = _square(np.asarray(a, dtype=float))
    if a.size == 0:
        return SpectralRadius(0.0, True)
    m = a.copy()
    nrm = float(np.linalg.norm(m, "fro"))
    if nrm == 0.0:
        return SpectralRadius(0.0, True)
    m /= nrm
    log_norm = math.log(nrm)  # log ||a^(2^k)||_F for current k=0
    estimate = math.exp(log_norm)
    for k in range(1, 15):
        m = m @ m
        nrm = float(np.linalg.norm(m, "fro"))
        if nrm == 0.0:
            return SpectralRadius(0.0, True)  # nilpotent
        m /= nrm
        log_norm = 2.0 * log_norm + math.log(nrm)
        new_estimate = math.exp(log_norm / 2.0**k)
        rel = abs(new_estimate - estimate) / max(new_estimate, np.finfo(float).tiny)
        estimate = new_estimate
        if rel < TOL.gelfand_rel:
            return SpectralRadius(estimate, True)
    return SpectralRadius(estimate, False)
