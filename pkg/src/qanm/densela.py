"""Dense real linear algebra and the accuracy metrics used across the package."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

PIVOT_RTOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    """A pivot fell below the relative singularity threshold."""


class ZeroReferenceError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


def _as_matrix(K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValueError("matrix has non-finite entries")
    return K


@dataclass(frozen=True)
class LUFactor:
    """Partial-pivoting LU factorization, reusable across right-hand sides."""

    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def solve(self, F) -> np.ndarray:
        """Solve for one right-hand side or a column block."""
        F = np.asarray(F, dtype=float)
        if F.ndim not in (1, 2) or F.shape[0] != self.n:
            raise ValueError(f"right-hand side has shape {F.shape}, expected ({self.n}, ...)")
        return scipy.linalg.lu_solve((self.lu, self.piv), F, check_finite=False)


def lu_factor(K) -> LUFactor:
    """Factor K, raising SingularMatrixError when a pivot is below
    ``PIVOT_RTOL`` times the largest row magnitude of K."""
    K = _as_matrix(K)
    scale = np.abs(K).max(axis=1).max(initial=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() < PIVOT_RTOL * scale:
        raise SingularMatrixError(
            f"matrix is singular to working precision (min pivot {pivots.min():.3e}, "
            f"row scale {scale:.3e})"
        )
    return LUFactor(lu, piv)


def lu_solve(K, F) -> np.ndarray:
    """Solve K u = F with partial-pivoting LU."""
    K = _as_matrix(K)
    F = np.asarray(F, dtype=float)
    if F.shape != (K.shape[0],):
        raise ValueError(f"dimension mismatch: K is {K.shape}, F is {F.shape}")
    return lu_factor(K).solve(F)


def accuracy(u, u_ref) -> float:
    """Percentage accuracy ``(1 - ||u - u_ref|| / ||u_ref||) * 100``.

    Can be negative when u is far from the reference.
    """
    u = np.asarray(u, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u.shape != u_ref.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {u_ref.shape}")
    ref_norm = np.linalg.norm(u_ref)
    if ref_norm == 0.0:
        raise ZeroReferenceError("reference vector has zero norm")
    return float((1.0 - np.linalg.norm(u - u_ref) / ref_norm) * 100.0)


def path_error(path: Sequence[tuple[float, float]], ref: Sequence[tuple[float, float]],
               atol: float = 1e-12) -> float:
    """RMS relative deviation (in percent) between two paths sampled on the
    same load grid.

    Both arguments are sequences of ``(lam, w)`` pairs; the ``lam`` columns
    must agree to ``atol``.
    """
    path = np.asarray(path, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref, dtype=float).reshape(-1, 2)
    if path.shape != ref.shape or not np.allclose(path[:, 0], ref[:, 0], rtol=0.0, atol=atol):
        raise GridMismatchError("paths are not sampled on the same lambda grid")
    denom = np.sum(ref[:, 1] ** 2)
    if denom == 0.0:
        raise ZeroReferenceError("reference path is identically zero")
    return float(np.sqrt(np.sum((path[:, 1] - ref[:, 1]) ** 2) / denom) * 100.0)
