"""Load-controlled Newton-Raphson baseline.

Each target load is reached by plain Newton iterations
``K(u_k) du = -R(u_k, lam)`` warm-started from the previous converged point.
The Jacobian goes through the same assembly and condensation as the ANM
tangent, so both methods exercise the linear solver identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .anm import LinearSolverHandle, QuadraticProblem, TangentSystem

log = logging.getLogger(__name__)


class NewtonFailure(RuntimeError):
    def __init__(self, message: str, u: np.ndarray, iterations: int):
        super().__init__(message)
        self.u = u
        self.iterations = iterations


@dataclass
class NewtonReport:
    lambdas: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    linear_solves: int = 0
    circuit_executions: int = 0
    failed_at: float | None = None
    message: str = ""

    @property
    def n_steps(self) -> int:
        return len(self.lambdas)

    @property
    def completed(self) -> bool:
        return self.failed_at is None

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.states:
            return np.zeros(0), np.zeros((0, 0))
        return np.array(self.lambdas), np.vstack(self.states)


def nr_solve_at(problem: QuadraticProblem, u_init, lam: float, eps_r: float = 1e-9,
                max_iter: int = 50, solver: LinearSolverHandle | None = None,
                history: list[float] | None = None) -> tuple[np.ndarray, int]:
    """Newton iterations at fixed ``lam`` until ``|R| < eps_r``.

    Returns the converged state and the number of linear solves taken; a
    start point that already satisfies the tolerance costs nothing.
    """
    solver = solver if solver is not None else LinearSolverHandle()
    u = np.array(u_init, dtype=float)
    r = problem.residual(u, lam)
    norm = np.linalg.norm(r)
    if history is not None:
        history.append(norm)
    for k in range(max_iter):
        if norm < eps_r:
            return u, k
        system = TangentSystem(problem.tangent(u, lam), problem.n_primary, solver)
        u = u + system.solve(-r)
        r = problem.residual(u, lam)
        norm = np.linalg.norm(r)
        if history is not None:
            history.append(norm)
        if not np.isfinite(norm):
            raise NewtonFailure(f"residual blew up at lam = {lam:.6g}", u, k + 1)
    if norm < eps_r:
        return u, max_iter
    raise NewtonFailure(f"no convergence at lam = {lam:.6g} after {max_iter} iterations "
                        f"(|R| = {norm:.3e})", u, max_iter)


def uniform_targets(lam_start: float, lam_end: float, n_increments: int) -> np.ndarray:
    if n_increments < 1:
        raise ValueError("need at least one increment")
    return np.linspace(lam_start, lam_end, n_increments + 1)[1:]


def nr_continue(problem: QuadraticProblem, u0, lam0: float, targets, eps_r: float = 1e-9,
                max_iter: int = 50, solver: LinearSolverHandle | None = None) -> NewtonReport:
    """Trace the path through the increasing loads in ``targets``.

    A failure at some target ends the run; the report keeps every point
    converged so far and records where it stopped.
    """
    solver = solver if solver is not None else LinearSolverHandle()
    targets = np.asarray(targets, dtype=float)
    if targets.size and (np.any(np.diff(targets) < 0.0) or targets[0] < lam0):
        raise ValueError("load targets must increase from the start load")
    report = NewtonReport()
    solves0, circ0 = solver.linear_solves, solver.circuit_executions
    u = np.array(u0, dtype=float)
    for lam in targets:
        try:
            u, its = nr_solve_at(problem, u, lam, eps_r, max_iter, solver)
        except (NewtonFailure, np.linalg.LinAlgError) as exc:
            report.failed_at = float(lam)
            report.message = str(exc)
            log.warning("Newton continuation stopped: %s", exc)
            break
        report.lambdas.append(float(lam))
        report.states.append(u.copy())
        report.iterations.append(its)
    report.linear_solves = solver.linear_solves - solves0
    report.circuit_executions = solver.circuit_executions - circ0
    return report


def interpolate_path(lambdas, values, lam_grid, lam0: float | None = None, value0: float | None = None) -> np.ndarray:
    """Piecewise-linear interpolation of ``values(lambdas)`` onto ``lam_grid``,
    optionally anchored at the start point (lam0, value0)."""
    lam = np.asarray(lambdas, dtype=float)
    val = np.asarray(values, dtype=float)
    if lam0 is not None:
        lam = np.concatenate([[lam0], lam])
        val = np.concatenate([[value0], val])
    return np.interp(lam_grid, lam, val)
