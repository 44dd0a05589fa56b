"""Weighted Jacobi iteration with matrix-vector products estimated row by
row through the ancilla inner-product test.

Each row product ``(M u)_i`` is recovered as ``||m_i|| ||u|| (2 P0 - 1)``,
with ``P0`` estimated under a :class:`~qanm.qsim.ShotModel`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .qsim import ExecutionCounter, ShotModel, hadamard_test_p0_rows, n_qubits_for, sample_probabilities

DEFAULT_OMEGA = 2.0 / 3.0
DIVERGENCE_WINDOW = 5


class ZeroDiagonalError(ValueError):
    pass


class DivergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class JacobiDecomposition:
    M: np.ndarray
    c: np.ndarray
    row_norms: np.ndarray
    normalized_rows: np.ndarray  # zero rows stay zero
    omega: float

    @property
    def dim(self) -> int:
        return self.c.size


@dataclass
class QJacobiReport:
    solution: np.ndarray
    iterations: int
    tol_history: list[float]
    circuit_executions: int = 0
    converged: bool = False
    diverged: bool = False
    iterates: list[np.ndarray] = field(default_factory=list, repr=False)


def decompose(K, F, omega: float = DEFAULT_OMEGA) -> JacobiDecomposition:
    """Split K into its diagonal A and remainder T; return M = -A^-1 T and
    c = A^-1 F together with the row normalization of M."""
    K = np.asarray(K, dtype=float)
    F = np.asarray(F, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or F.shape != (K.shape[0],):
        raise ValueError(f"incompatible shapes K{K.shape}, F{F.shape}")
    if not 0.0 < omega <= 1.0:
        raise ValueError("omega must lie in (0, 1]")
    diag = np.diag(K).copy()
    if np.any(diag == 0.0):
        raise ZeroDiagonalError(f"zero diagonal entry at rows {np.flatnonzero(diag == 0.0).tolist()}")
    T = K - np.diag(diag)
    M = -T / diag[:, None]
    c = F / diag
    row_norms = np.linalg.norm(M, axis=1)
    normalized = np.zeros_like(M)
    nz = row_norms > 0.0
    normalized[nz] = M[nz] / row_norms[nz, None]
    return JacobiDecomposition(M, c, row_norms, normalized, omega)


def quantum_matvec(dec: JacobiDecomposition, u: np.ndarray, shots: ShotModel,
                   counter: ExecutionCounter | None = None) -> np.ndarray:
    """Estimate ``M @ u`` with one ancilla test per nonzero row."""
    out = np.zeros(dec.dim)
    u_norm = np.linalg.norm(u)
    active = np.flatnonzero(dec.row_norms > 0.0)
    if u_norm == 0.0 or active.size == 0:
        return out
    # pad to a power of two for the register; padding does not change inner products
    d = 2 ** n_qubits_for(dec.dim)
    rows = np.zeros((active.size, d))
    rows[:, : dec.dim] = dec.normalized_rows[active]
    u_t = np.zeros(d)
    u_t[: dec.dim] = u / u_norm
    p0 = hadamard_test_p0_rows(rows, u_t)
    p0_hat = sample_probabilities(p0, shots, counter)
    out[active] = dec.row_norms[active] * u_norm * (2.0 * p0_hat - 1.0)
    return out


def _iterate(dec: JacobiDecomposition, matvec, u0, eps_J: float, max_iter: int,
             keep_iterates: bool) -> QJacobiReport:
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    omega = dec.omega
    u = dec.c.copy() if u0 is None else np.asarray(u0, dtype=float).copy()
    tols: list[float] = []
    iterates = [u.copy()] if keep_iterates else []
    rising = 0
    prev_step = np.inf
    report = QJacobiReport(u, 0, tols)
    for k in range(1, max_iter + 1):
        u_new = (1.0 - omega) * u + omega * (matvec(u) + dec.c)
        step = np.linalg.norm(u_new - u)
        base = np.linalg.norm(u)
        tol = step / base if base > 0.0 else step
        tols.append(float(tol))
        u = u_new
        if keep_iterates:
            iterates.append(u.copy())
        rising = rising + 1 if step > prev_step else 0
        prev_step = step
        if rising >= DIVERGENCE_WINDOW and not report.diverged:
            report.diverged = True
            warnings.warn(f"Jacobi increments grew for {rising} consecutive iterations "
                          f"(iteration {k}, |du| = {step:.3e})", DivergenceWarning, stacklevel=3)
        if tol < eps_J:
            report.converged = True
            break
    report.solution = u
    report.iterations = len(tols)
    report.iterates = iterates
    return report


def solve(K, F, u0=None, omega: float = DEFAULT_OMEGA, eps_J: float = 1e-3,
          max_iter: int = 200, shots: ShotModel | None = None,
          keep_iterates: bool = False) -> QJacobiReport:
    """Quantum Jacobi solve of K u = F.

    ``u0`` defaults to ``c = A^-1 F``. Stops when the relative update falls
    below ``eps_J`` or after ``max_iter`` iterations.
    """
    dec = decompose(K, F, omega)
    shots = shots if shots is not None else ShotModel("exact")
    counter = ExecutionCounter()
    report = _iterate(dec, lambda u: quantum_matvec(dec, u, shots, counter), u0,
                      eps_J, max_iter, keep_iterates)
    report.circuit_executions = counter.circuit_executions
    return report


def classical_jacobi_solve(K, F, u0=None, omega: float = DEFAULT_OMEGA, eps_J: float = 1e-3,
                           max_iter: int = 200, keep_iterates: bool = False) -> QJacobiReport:
    """Same iteration as :func:`solve` with exact products ``M @ u``."""
    dec = decompose(K, F, omega)
    return _iterate(dec, lambda u: dec.M @ u, u0, eps_J, max_iter, keep_iterates)
