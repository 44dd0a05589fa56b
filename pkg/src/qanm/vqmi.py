"""Matrix inversion by one VQLS solve of the Kronecker-extended system

    (I_D kron K) vec(X) = vec(I_D)

whose solution stacks the columns of K^-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import vqls
from .qsim import ShotModel


@dataclass(frozen=True)
class ExtendedSystem:
    K_E: np.ndarray
    I_E: np.ndarray
    dim: int


@dataclass
class InversionReport:
    inverse: np.ndarray
    vqls: vqls.VqlsReport
    column_scales: np.ndarray

    def errors(self, K) -> dict[str, float]:
        """Frobenius and entrywise-max relative errors against the exact inverse."""
        exact = np.linalg.inv(np.asarray(K, dtype=float))
        diff = self.inverse - exact
        return {
            "frobenius": float(np.linalg.norm(diff) / np.linalg.norm(exact)),
            "entrywise_max": float(np.max(np.abs(diff)) / np.max(np.abs(exact))),
        }

    def evaluations_to(self, threshold: float) -> int | None:
        """First evaluation (1-based) whose cost fell below ``threshold``."""
        hits = np.flatnonzero(np.asarray(self.vqls.cost_history) < threshold)
        return int(hits[0]) + 1 if hits.size else None


def build_extended(K) -> ExtendedSystem:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {K.shape}")
    d = K.shape[0]
    if d < 1 or d & (d - 1):
        raise ValueError(f"dimension {d} is not a power of two")
    # column stacking: vec(I) lists column 0, then column 1, ...
    return ExtendedSystem(np.kron(np.eye(d), K), np.eye(d).reshape(-1, order="F"), d)


def invert(K, layers: int = 2, maxfev: int = 500, cost_tol: float = 1e-6, seed: int = 0,
           shots: ShotModel | None = None, rhobeg: float = 1.0) -> InversionReport:
    """Approximate K^-1 from a single VQLS run on the extended system.

    The unit-norm VQLS state fixes only the direction of vec(K^-1), and its
    columns carry different norms, so each unstacked column x_j is rescaled
    separately by the least-squares factor of ``K x_j ~ e_j``.
    """
    ext = build_extended(K)
    report = vqls.solve(ext.K_E, ext.I_E, layers=layers, maxfev=maxfev, cost_tol=cost_tol,
                        seed=seed, shots=shots, rhobeg=rhobeg)
    d = ext.dim
    cols = report.solution.reshape(d, d, order="F")
    K = np.asarray(K, dtype=float)
    scales = np.array([vqls.scale_factor(K, np.eye(d)[:, j], cols[:, j])
                       if np.linalg.norm(K @ cols[:, j]) > 0.0 else 0.0 for j in range(d)])
    return InversionReport(cols * scales, report, scales)
