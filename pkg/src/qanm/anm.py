"""Asymptotic numerical method: Taylor-series continuation of R(U, lam) = 0.

Problems are given in quadratic form

    R(U, lam) = C + L U + Q(U, U) + lam G + lam B U

so the order-p right-hand sides are exact Cauchy products of lower orders.
Unknowns past ``n_primary`` are auxiliary (local) variables; they are
eliminated by static condensation before every linear solve, and the
arclength condition and step-length estimate only see the primary block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np
from scipy.optimize import brentq

from . import qjacobi, vqls
from .densela import LUFactor, lu_factor
from .qsim import ShotModel

log = logging.getLogger(__name__)

START_RTOL = 1e-6
DEGENERATE_RATIO = 1e-14

SolverKind = Literal["direct", "classical-jacobi", "q-jacobi", "vqls"]
SOLVER_KINDS = ("direct", "classical-jacobi", "q-jacobi", "vqls")


# -- problem ------------------------------------------------------------------

@dataclass
class QuadraticProblem:
    C: np.ndarray
    L: np.ndarray
    Q: Callable[[np.ndarray, np.ndarray], np.ndarray]
    G: np.ndarray
    B: np.ndarray | None = None
    n_primary: int | None = None
    # u -> matrix of v -> 2 Q(u, v); built column by column when omitted
    dQ: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=float)
        self.L = np.asarray(self.L, dtype=float)
        self.G = np.asarray(self.G, dtype=float)
        n = self.C.size
        self.B = np.zeros((n, n)) if self.B is None else np.asarray(self.B, dtype=float)
        if self.L.shape != (n, n) or self.B.shape != (n, n) or self.G.shape != (n,):
            raise ValueError("inconsistent operator shapes")
        if self.n_primary is None:
            self.n_primary = n
        if not 0 < self.n_primary <= n:
            raise ValueError("n_primary must lie in [1, dimension]")

    @property
    def dimension(self) -> int:
        return self.C.size

    def residual(self, u, lam: float) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.C + self.L @ u + self.Q(u, u) + lam * (self.G + self.B @ u)

    def q_tangent(self, u) -> np.ndarray:
        if self.dQ is not None:
            return self.dQ(u)
        eye = np.eye(self.dimension)
        return np.column_stack([2.0 * self.Q(u, eye[:, j]) for j in range(self.dimension)])

    def tangent(self, u, lam: float) -> np.ndarray:
        """Jacobian dR/dU at (u, lam)."""
        return self.L + self.q_tangent(np.asarray(u, dtype=float)) + lam * self.B

    def load_vector(self, u) -> np.ndarray:
        """Effective load ``-dR/dlam`` at u."""
        return -(self.G + self.B @ np.asarray(u, dtype=float))


# -- linear solvers ---------------------------------------------------------

@dataclass
class LinearSolverHandle:
    """Pluggable linear solver with running totals.

    ``kind`` selects which settings are read: ``omega``, ``eps_J``,
    ``max_iter`` for the Jacobi kinds, ``shots`` for both quantum kinds,
    ``layers``, ``maxfev``, ``cost_tol`` and ``seed`` for VQLS.
    """

    kind: SolverKind = "direct"
    omega: float = qjacobi.DEFAULT_OMEGA
    eps_J: float = 1e-3
    max_iter: int = 200
    shots: ShotModel = field(default_factory=lambda: ShotModel("exact"))
    layers: int = 1
    maxfev: int = 500
    cost_tol: float = 1e-6
    seed: int = 0
    linear_solves: int = 0
    circuit_executions: int = 0
    iterations: int = 0

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise ValueError(f"unknown solver kind {self.kind!r}")

    def fresh(self) -> "LinearSolverHandle":
        """Same settings with zeroed totals and a fresh shot stream."""
        return replace(self, shots=ShotModel(self.shots.mode, self.shots.n_s, self.shots.rng_seed),
                       linear_solves=0, circuit_executions=0, iterations=0)

    def prepare(self, K) -> "PreparedSolver":
        K = np.asarray(K, dtype=float)
        return PreparedSolver(self, K, lu_factor(K) if self.kind == "direct" else None)

    def solve(self, K, F) -> np.ndarray:
        return self.prepare(K).solve(F)

    def _solve_iterative(self, K: np.ndarray, F: np.ndarray) -> np.ndarray:
        if self.kind == "classical-jacobi":
            rep = qjacobi.classical_jacobi_solve(K, F, omega=self.omega, eps_J=self.eps_J,
                                                 max_iter=self.max_iter)
        elif self.kind == "q-jacobi":
            rep = qjacobi.solve(K, F, omega=self.omega, eps_J=self.eps_J,
                                max_iter=self.max_iter, shots=self.shots)
        else:
            seed = int(np.random.SeedSequence([self.seed, self.linear_solves]).generate_state(1)[0])
            rep = vqls.solve(K, F, layers=self.layers, maxfev=self.maxfev,
                             cost_tol=self.cost_tol, seed=seed, shots=self.shots,
                             keep_history=False)
            self.iterations += rep.evaluations
            self.circuit_executions += rep.circuit_executions
            return rep.solution
        self.iterations += rep.iterations
        self.circuit_executions += rep.circuit_executions
        return rep.solution


@dataclass
class PreparedSolver:
    handle: LinearSolverHandle
    K: np.ndarray
    lu: LUFactor | None

    def solve(self, F) -> np.ndarray:
        F = np.asarray(F, dtype=float)
        self.handle.linear_solves += 1
        if not np.any(F):
            return np.zeros_like(F)
        if self.lu is not None:
            return self.lu.solve(F)
        return self.handle._solve_iterative(self.K, F)


class TangentSystem:
    """Tangent matrix with its auxiliary block condensed out.

    Each :meth:`solve` costs exactly one call of the linear solver on the
    primary (Schur complement) system.
    """

    def __init__(self, Kt: np.ndarray, n_primary: int, solver: LinearSolverHandle):
        p = n_primary
        self.p = p
        self.full = Kt
        self._Bm = Kt[:p, p:]
        if Kt.shape[0] > p:
            self._aux = lu_factor(Kt[p:, p:])
            self._aux_C = self._aux.solve(Kt[p:, :p])
            self.condensed = Kt[:p, :p] - self._Bm @ self._aux_C
        else:
            self._aux = None
            self.condensed = Kt
        self.solver = solver.prepare(self.condensed)

    def solve(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        p = self.p
        if self._aux is None:
            return self.solver.solve(r)
        y0 = self._aux.solve(r[p:])
        x = self.solver.solve(r[:p] - self._Bm @ y0)
        return np.concatenate([x, y0 - self._aux_C @ x])


# -- series -------------------------------------------------------------------

@dataclass
class TaylorSeries:
    u: np.ndarray  # (N + 1, D), row p holds u_p
    lam: np.ndarray  # (N + 1,)
    n_primary: int

    @property
    def order(self) -> int:
        return self.lam.size - 1

    def primary(self, p: int) -> np.ndarray:
        return self.u[p, : self.n_primary]

    def closure_defects(self) -> np.ndarray:
        """``|u_1|^2 + lam_1^2 - 1`` followed by ``u_p.u_1 + lam_p lam_1`` for p >= 2."""
        x1 = self.primary(1)
        out = [x1 @ x1 + self.lam[1] ** 2 - 1.0]
        out += [self.primary(p) @ x1 + self.lam[p] * self.lam[1] for p in range(2, self.order + 1)]
        return np.array(out)


def eval_series(series: TaylorSeries, a: float) -> tuple[np.ndarray, float]:
    """Horner evaluation of the displacement and load polynomials at ``a``."""
    u = series.u[-1].copy()
    lam = series.lam[-1]
    for p in range(series.order - 1, -1, -1):
        u = u * a + series.u[p]
        lam = lam * a + series.lam[p]
    return u, float(lam)


def expand(problem: QuadraticProblem, u0, lam0: float, N: int, solver: LinearSolverHandle,
           direction: tuple[np.ndarray, float] | None = None) -> TaylorSeries:
    """Taylor coefficients of the branch through (u0, lam0) up to order N.

    The tangent is assembled once; exactly N linear solves are performed.
    ``direction`` is the previous step's (primary u_1, lam_1) and fixes the
    orientation of the new branch.
    """
    if N < 1:
        raise ValueError("series order must be >= 1")
    u0 = np.asarray(u0, dtype=float)
    p_dim = problem.n_primary
    Kt = problem.tangent(u0, lam0)
    system = TangentSystem(Kt, p_dim, solver)

    u_hat = system.solve(problem.load_vector(u0))
    x_hat = u_hat[:p_dim]
    norm_fac = x_hat @ x_hat + 1.0
    lam1 = 1.0 / np.sqrt(norm_fac)
    if direction is not None:
        x_prev, lam_prev = direction
        if lam1 * (x_hat @ x_prev) + lam1 * lam_prev < 0.0:
            lam1 = -lam1

    us = np.zeros((N + 1, problem.dimension))
    lams = np.zeros(N + 1)
    us[0], lams[0] = u0, lam0
    us[1], lams[1] = lam1 * u_hat, lam1
    x1 = us[1, :p_dim]
    for p in range(2, N + 1):
        f_nl = np.zeros(problem.dimension)
        for i in range(1, p):
            f_nl += problem.Q(us[i], us[p - i]) + lams[i] * (problem.B @ us[p - i])
        u_tilde = system.solve(-f_nl)
        lam_p = -(x1 @ u_tilde[:p_dim]) / (lam1 * norm_fac)
        us[p] = lam_p * u_hat + u_tilde
        lams[p] = lam_p
    return TaylorSeries(us, lams, p_dim)


def a_max(series: TaylorSeries, eps_d: float, cap: float | None = None) -> float:
    """Step length ``(eps_d |u_1| / |u_N|)**(1 / (N - 1))`` on the primary block.

    When the last term is negligible (``|u_N| < 1e-14 |u_1|``, e.g. a linear
    problem) the estimate is bounded by ``cap``, by default
    ``10 (1 + |u_0|) / |u_1|``. A vanishing but geometrically decaying
    series keeps its own, smaller estimate.
    """
    N = series.order
    if N < 2:
        raise ValueError("step-length estimate needs N >= 2")
    n1 = np.linalg.norm(series.primary(1))
    nN = np.linalg.norm(series.primary(N))
    if nN >= DEGENERATE_RATIO * n1 and nN > 0.0:
        return float((eps_d * n1 / nN) ** (1.0 / (N - 1)))
    if cap is None:
        cap = 10.0 * (1.0 + np.linalg.norm(series.primary(0))) / n1
    if nN == 0.0:
        return float(cap)
    with np.errstate(over="ignore"):
        estimate = (eps_d * n1 / nN) ** (1.0 / (N - 1))
    return float(min(estimate, cap))


# -- continuation ---------------------------------------------------------------

@dataclass
class Step:
    series: TaylorSeries
    a_max: float
    a: np.ndarray
    u: np.ndarray  # (samples, D)
    lam: np.ndarray
    linear_solves: int
    circuit_executions: int
    start_residual: float


@dataclass
class SolutionPath:
    steps: list[Step] = field(default_factory=list)

    @property
    def linear_solves(self) -> int:
        return sum(s.linear_solves for s in self.steps)

    @property
    def circuit_executions(self) -> int:
        return sum(s.circuit_executions for s in self.steps)

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def samples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stacked (step index, u, lam) over all steps."""
        if not self.steps:
            return np.zeros(0, dtype=int), np.zeros((0, 0)), np.zeros(0)
        idx = np.concatenate([np.full(s.lam.size, k) for k, s in enumerate(self.steps)])
        return idx, np.vstack([s.u for s in self.steps]), np.concatenate([s.lam for s in self.steps])

    def endpoint(self) -> tuple[np.ndarray, float]:
        last = self.steps[-1]
        return last.u[-1], float(last.lam[-1])


class StepFailure(RuntimeError):
    def __init__(self, message: str, path: SolutionPath):
        super().__init__(message)
        self.path = path


class InvalidStartError(ValueError):
    pass


def continue_path(problem: QuadraticProblem, u0, lam0: float, N: int, eps_d: float,
                  solver: LinearSolverHandle, samples_per_step: int = 100,
                  lambda_target: float | None = None, max_steps: int = 100,
                  stop: Callable[[np.ndarray, float], bool] | None = None,
                  check_start: bool = True) -> SolutionPath:
    """Chain ANM steps from (u0, lam0), each restarted from the previous
    ``a_max`` endpoint.

    Stops after ``max_steps``, when lam crosses ``lambda_target`` (the last
    step is cut at the crossing), or when ``stop(u, lam)`` holds at a step end.
    Only the initial point is checked against the equilibrium tolerance;
    later start points inherit whatever error the linear solver left.
    """
    u = np.asarray(u0, dtype=float)
    lam = float(lam0)
    r0 = np.linalg.norm(problem.residual(u, lam))
    if check_start and r0 > START_RTOL * (1.0 + np.linalg.norm(problem.load_vector(u))):
        raise InvalidStartError(f"start point is not an equilibrium (|R| = {r0:.3e})")

    path = SolutionPath()
    direction = None
    for k in range(max_steps):
        solves0, circ0 = solver.linear_solves, solver.circuit_executions
        res = np.linalg.norm(problem.residual(u, lam))
        try:
            series = expand(problem, u, lam, N, solver, direction)
        except Exception as exc:
            raise StepFailure(f"step {k} failed: {exc}", path) from exc
        amax = a_max(series, eps_d)
        a = np.linspace(0.0, amax, samples_per_step)
        pts = [eval_series(series, ai) for ai in a]
        lam_s = np.array([p[1] for p in pts])
        if lambda_target is not None:
            crossed = np.flatnonzero((lam_s - lambda_target) * np.sign(lambda_target - lam0) >= 0.0)
            if crossed.size:
                j = crossed[0]
                a_cut = a[j] if j == 0 else brentq(lambda s: eval_series(series, s)[1] - lambda_target,
                                                   a[j - 1], a[j])
                a = np.linspace(0.0, a_cut, samples_per_step)
                pts = [eval_series(series, ai) for ai in a]
                lam_s = np.array([p[1] for p in pts])
        u_s = np.array([p[0] for p in pts])
        path.steps.append(Step(series, amax, a, u_s, lam_s,
                               solver.linear_solves - solves0,
                               solver.circuit_executions - circ0, float(res)))
        log.debug("step %d: a_max=%.4g lam=%.6g", k, amax, lam_s[-1])
        u, lam = u_s[-1].copy(), float(lam_s[-1])
        direction = (series.primary(1), float(series.lam[1]))
        if lambda_target is not None and (lam - lambda_target) * np.sign(lambda_target - lam0) >= -1e-12:
            break
        if stop is not None and stop(u, lam):
            break
    return path
