"""Experiment drivers shared by the command line and the acceptance tests.

Every driver returns an :class:`ExperimentResult` with scalar metrics and
data tables plus resource totals. Nothing here touches the filesystem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import qjacobi, vqls
from .anm import LinearSolverHandle, StepFailure, continue_path
from .densela import accuracy, lu_solve, path_error
from .newton import interpolate_path, nr_continue, nr_solve_at, uniform_targets
from .problems import (BucklingConfig, FlectionConfig, beam_problem, beam_start, spring_mass_analytic,
                       spring_mass_problem, spring_mass_start)
from .qsim import ShotModel, hadamard_test_p0, sample_probabilities
from .vqmi import invert

REFERENCE_K = np.array([[2.0, -1.0], [-1.0, 2.0]])


def rhs_cases() -> list[np.ndarray]:
    """Eight unit right-hand sides spread evenly around the circle."""
    return [np.array([np.cos(np.pi * j / 4), np.sin(np.pi * j / 4)]) for j in range(8)]


def rep_seed(seed: int, rep: int, *extra: int) -> int:
    return int(np.random.SeedSequence([seed, rep, *extra]).generate_state(1)[0])


@dataclass
class Table:
    header: list[str]
    rows: list[list]


@dataclass
class ExperimentResult:
    kind: str
    metrics: dict[str, float] = field(default_factory=dict)
    tables: dict[str, Table] = field(default_factory=dict)
    linear_solves: int = 0
    circuit_executions: int = 0


def make_solver(kind: str = "direct", n_s: float = 1e8, shot_mode: str = "normal", seed: int = 0,
                eps_J: float = 1e-3, omega: float = qjacobi.DEFAULT_OMEGA, max_iter: int = 200,
                layers: int = 1, maxfev: int = 500) -> LinearSolverHandle:
    shots = ShotModel(shot_mode, int(n_s) if shot_mode != "exact" else 1, seed)
    return LinearSolverHandle(kind, omega=omega, eps_J=eps_J, max_iter=max_iter, shots=shots,
                              layers=layers, maxfev=maxfev, seed=seed)


# -- linear solvers ---------------------------------------------------------------

def solve_linear(solver: str = "q-jacobi", n_s: float = 1e8, shot_mode: str = "normal", reps: int = 10,
                 seed: int = 0, eps_J: float = 1e-3, omega: float = qjacobi.DEFAULT_OMEGA,
                 layers: int = 1, maxfev: int = 500, K=REFERENCE_K) -> ExperimentResult:
    """Mean accuracy over ``reps`` runs for every right-hand side case."""
    if solver not in ("q-jacobi", "vqls", "classical-jacobi"):
        raise ValueError(f"solve-linear needs an iterative solver, got {solver!r}")
    res = ExperimentResult("solve-linear")
    rows = []
    for j, F in enumerate(rhs_cases()):
        ref = lu_solve(K, F)
        accs = []
        for rep in range(reps):
            s = rep_seed(seed, rep, j)
            shots = ShotModel(shot_mode, int(n_s), s)
            if solver == "vqls":
                rep_ = vqls.solve(K, F, layers=layers, maxfev=maxfev, seed=s, shots=shots, keep_history=False)
            elif solver == "q-jacobi":
                rep_ = qjacobi.solve(K, F, omega=omega, eps_J=eps_J, shots=shots)
            else:
                rep_ = qjacobi.classical_jacobi_solve(K, F, omega=omega, eps_J=eps_J)
            res.circuit_executions += rep_.circuit_executions
            res.linear_solves += 1
            accs.append(accuracy(rep_.solution, ref))
        rows.append([j, float(np.mean(accs)), float(np.min(accs)), float(np.std(accs))])
        res.metrics[f"mean_accuracy_F{j}"] = float(np.mean(accs))
    res.metrics["min_mean_accuracy"] = min(r[1] for r in rows)
    res.tables["accuracy"] = Table(["case", "mean_accuracy", "min_accuracy", "std_accuracy"], rows)
    return res


def p0_rms_error(n_s_values, samples: int = 2000, seed: int = 0, p_exact: float | None = None):
    """RMS error of normal-mode P0 estimates and the log-log slope against n_s."""
    if p_exact is None:
        dec = qjacobi.decompose(REFERENCE_K, rhs_cases()[0])
        c = dec.c / np.linalg.norm(dec.c)
        p_exact = hadamard_test_p0(dec.normalized_rows[0], c)
    rms = []
    for i, n in enumerate(n_s_values):
        est = sample_probabilities(np.full(samples, p_exact), ShotModel("normal", int(n), rep_seed(seed, i)))
        rms.append(float(np.sqrt(np.mean((est - p_exact) ** 2))))
    slope = float(np.polyfit(np.log10(n_s_values), np.log10(rms), 1)[0])
    return np.array(rms), slope, p_exact


def shot_sweep(n_s_values=(1e2, 1e4, 1e6, 1e8), reps: int = 30, seed: int = 0, eps_J: float = 1e-4,
               omega: float = qjacobi.DEFAULT_OMEGA, shot_mode: str = "normal") -> ExperimentResult:
    """q-Jacobi on K u = F_0 across shot budgets, against classical Jacobi."""
    F = rhs_cases()[0]
    ref = lu_solve(REFERENCE_K, F)
    res = ExperimentResult("shot-sweep")
    classical = qjacobi.classical_jacobi_solve(REFERENCE_K, F, omega=omega, eps_J=eps_J)
    res.metrics["classical_accuracy"] = accuracy(classical.solution, ref)
    res.metrics["classical_iterations"] = classical.iterations
    rms, slope, _ = p0_rms_error(n_s_values, seed=seed)
    rows = []
    for i, n in enumerate(n_s_values):
        accs, its = [], []
        for rep in range(reps):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", qjacobi.DivergenceWarning)
                r = qjacobi.solve(REFERENCE_K, F, omega=omega, eps_J=eps_J,
                                  shots=ShotModel(shot_mode, int(n), rep_seed(seed, rep, i)))
            accs.append(accuracy(r.solution, ref))
            its.append(r.iterations)
            res.circuit_executions += r.circuit_executions
            res.linear_solves += 1
        rows.append([float(n), float(np.mean(accs)), float(np.mean(its)), rms[i]])
    res.tables["sweep"] = Table(["n_s", "mean_accuracy", "mean_iterations", "p0_rms_error"], rows)
    res.metrics["p0_loglog_slope"] = slope
    res.metrics["accuracy_gap_at_max_shots"] = res.metrics["classical_accuracy"] - rows[-1][1]
    res.metrics["accuracy_strictly_increasing"] = float(all(b[1] > a[1] for a, b in zip(rows, rows[1:])))
    return res


def _executions_to_target_qjacobi(report: qjacobi.QJacobiReport, ref, target: float) -> int | None:
    # two rows per iteration, one circuit each; the starting guess is free
    per_iter = report.circuit_executions / max(report.iterations, 1)
    for k, u in enumerate(report.iterates):
        if accuracy(u, ref) >= target:
            return int(round(k * per_iter))
    return None


def _executions_to_target_vqls(report: vqls.VqlsReport, K, F, ref, target: float, layers: int) -> int | None:
    per_eval = report.circuit_executions / max(report.evaluations, 1)
    for k, theta in enumerate(report.theta_history, start=1):
        if accuracy(vqls.solution_from_theta(theta, K, F, layers), ref) >= target:
            return int(round(k * per_eval))
    return None


def circuit_bench(target: float = 95.0, n_s: float = 1e8, reps: int = 30, seed: int = 0,
                  eps_J: float = 1e-3, layers: int = 1, maxfev: int = 500,
                  shot_mode: str = "normal") -> ExperimentResult:
    """Minimum circuit executions for each solver to first reach ``target`` percent."""
    F = rhs_cases()[0]
    ref = lu_solve(REFERENCE_K, F)
    res = ExperimentResult("circuit-bench")
    rows = []
    for rep in range(reps):
        s = rep_seed(seed, rep)
        qj = qjacobi.solve(REFERENCE_K, F, eps_J=eps_J, shots=ShotModel(shot_mode, int(n_s), s), keep_iterates=True)
        vq = vqls.solve(REFERENCE_K, F, layers=layers, maxfev=maxfev, seed=s,
                        shots=ShotModel(shot_mode, int(n_s), rep_seed(seed, rep, 1)))
        res.circuit_executions += qj.circuit_executions + vq.circuit_executions
        res.linear_solves += 2
        rows.append([rep, _executions_to_target_qjacobi(qj, ref, target),
                     _executions_to_target_vqls(vq, REFERENCE_K, F, ref, target, layers)])
    qj_hits = [r[1] for r in rows if r[1] is not None]
    vq_hits = [r[2] for r in rows if r[2] is not None]
    res.metrics["target_accuracy"] = target
    res.metrics["qjacobi_mean_executions"] = float(np.mean(qj_hits)) if qj_hits else float("nan")
    res.metrics["vqls_mean_executions"] = float(np.mean(vq_hits)) if vq_hits else float("nan")
    res.metrics["qjacobi_misses"] = reps - len(qj_hits)
    res.metrics["vqls_misses"] = reps - len(vq_hits)
    res.metrics["execution_ratio"] = res.metrics["vqls_mean_executions"] / res.metrics["qjacobi_mean_executions"]
    res.tables["executions"] = Table(["rep", "qjacobi_executions", "vqls_executions"], rows)
    return res


# -- spring-mass --------------------------------------------------------------------

def _path_rows(path, columns) -> list[list]:
    rows = []
    for k, step in enumerate(path.steps):
        for a, u, lam in zip(step.a, step.u, step.lam):
            rows.append([k, float(a), float(lam)] + [float(u[i]) for i in columns])
    return rows


def spring_mass_path_error(path) -> float:
    _, U, lam = path.samples()
    w1_ref, _ = spring_mass_analytic(np.maximum(lam, 0.0))
    return path_error(list(zip(lam, U[:, 0])), list(zip(lam, w1_ref)))


def spring_mass(solver: str = "q-jacobi", N: int = 10, eps_d: float = 1e-3, n_s: float = 5e5,
                shot_mode: str = "normal", seed: int = 0, eps_J: float = 1e-3,
                omega: float = qjacobi.DEFAULT_OMEGA, lambda_target: float = 3.0, max_steps: int = 10,
                samples_per_step: int = 100, nr_increments: int = 20, nr_eps_r: float = 1e-6,
                layers: int = 1, maxfev: int = 500) -> ExperimentResult:
    """ANM path from the hanging state up to ``lambda_target`` and a Newton
    baseline with uniform increments, both scored against the closed form."""
    problem = spring_mass_problem()
    u0, lam0 = spring_mass_start()
    handle = make_solver(solver, n_s, shot_mode, seed, eps_J, omega, layers=layers, maxfev=maxfev)
    path = continue_path(problem, u0, lam0, N, eps_d, handle, samples_per_step=samples_per_step,
                         lambda_target=lambda_target, max_steps=max_steps)
    res = ExperimentResult("spring-mass")
    res.tables["path"] = Table(["step", "a", "lambda", "w1", "w2", "l"], _path_rows(path, [0, 1, 2]))
    res.metrics["anm_steps"] = path.n_steps
    res.metrics["anm_path_error"] = spring_mass_path_error(path)
    res.metrics["anm_linear_solves"] = path.linear_solves
    res.metrics["anm_circuit_executions"] = path.circuit_executions
    res.metrics["final_lambda"] = path.endpoint()[1]
    res.metrics["a_max_first_step"] = path.steps[0].a_max

    if nr_increments:
        nr_handle = make_solver(solver, n_s, shot_mode, rep_seed(seed, 1), eps_J, omega,
                                layers=layers, maxfev=maxfev)
        _, U, lam = path.samples()
        report = nr_continue(problem, u0, lam0, uniform_targets(lam0, lam[-1], nr_increments),
                             eps_r=nr_eps_r, solver=nr_handle)
        nr_lam, nr_U = report.as_arrays()
        w1 = interpolate_path(nr_lam, nr_U[:, 0], lam, lam0, u0[0])
        w1_ref, _ = spring_mass_analytic(np.maximum(lam, 0.0))
        res.metrics["nr_steps"] = report.n_steps
        res.metrics["nr_completed"] = float(report.completed)
        res.metrics["nr_path_error"] = path_error(list(zip(lam, w1)), list(zip(lam, w1_ref)))
        res.metrics["nr_linear_solves"] = report.linear_solves
        res.metrics["nr_circuit_executions"] = report.circuit_executions
        res.tables["newton"] = Table(["step", "lambda", "w1", "w2", "iterations"],
                                     [[k, lam_k, float(u[0]), float(u[1]), it] for k, (lam_k, u, it)
                                      in enumerate(zip(report.lambdas, report.states, report.iterations))])
    res.linear_solves = handle.linear_solves
    res.circuit_executions = handle.circuit_executions
    return res


# -- beam --------------------------------------------------------------------------

def flection_reference(problem, lambdas, u0) -> np.ndarray:
    """Direct-solver Newton states at each load in ``lambdas`` (warm-started)."""
    out = []
    u = np.array(u0, dtype=float)
    for lam in lambdas:
        u, _ = nr_solve_at(problem, u, lam, eps_r=1e-9)
        out.append(u.copy())
    return np.array(out)


def beam_flection(solver: str = "q-jacobi", N: int = 8, eps_d: float = 1e-5, n_s: float = 1e8,
                  shot_mode: str = "normal", seed: int = 0, eps_J: float = 1e-4,
                  omega: float = qjacobi.DEFAULT_OMEGA, max_steps: int = 3, samples_per_step: int = 100,
                  max_iter: int = 200_000, n_elements: int = 5) -> ExperimentResult:
    """Half clamped beam under pressure; scored against a Newton reference
    on the same loads."""
    problem, model = beam_problem(FlectionConfig(n_elements=n_elements))
    u0, lam0 = beam_start(problem)
    handle = make_solver(solver, n_s, shot_mode, seed, eps_J, omega, max_iter=max_iter)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", qjacobi.DivergenceWarning)
        path = continue_path(problem, u0, lam0, N, eps_d, handle, samples_per_step=samples_per_step,
                             max_steps=max_steps)
    _, U, lam = path.samples()
    mid = model.length
    w_mid = np.array([model.deflection_at(u, mid) for u in U])
    ref = flection_reference(problem, lam, u0)
    w_ref = np.array([model.deflection_at(u, mid) for u in ref])

    u_end, lam_end = path.endpoint()
    x = np.linspace(0.0, model.length, 61)
    z = np.linspace(-model.height / 2, model.height / 2, 11)
    sigma = model.stress_field(u_end, x, z)
    sigma_ref = model.stress_field(ref[-1], x, z)

    res = ExperimentResult("beam-flection")
    res.tables["path"] = Table(["step", "a", "lambda", "w_mid"] + [f"q{i}" for i in range(model.n_free)],
                               [row for row in _path_rows(path, range(model.n_free))])
    for row, w in zip(res.tables["path"].rows, w_mid):
        row.insert(3, float(w))
    res.tables["stress"] = Table(["x", "z", "sigma", "sigma_ref"],
                                 [[float(xi), float(zj), float(sigma[i, j]), float(sigma_ref[i, j])]
                                  for i, xi in enumerate(x) for j, zj in enumerate(z)])
    res.metrics["dimension"] = problem.n_primary
    res.metrics["anm_steps"] = path.n_steps
    res.metrics["final_lambda"] = lam_end
    res.metrics["final_pressure"] = lam_end * problem.metadata["q0"]
    res.metrics["final_midpoint_deflection"] = float(w_mid[-1])
    res.metrics["midpoint_path_error"] = path_error(list(zip(lam, w_mid)), list(zip(lam, w_ref)))
    res.metrics["stress_max_relative_error"] = float(np.max(np.abs(sigma - sigma_ref)) / np.max(np.abs(sigma_ref)))
    res.metrics["jacobi_iterations"] = handle.iterations
    res.linear_solves = handle.linear_solves
    res.circuit_executions = handle.circuit_executions
    return res


def beam_buckling(N: int = 16, eps_d: float = 1e-8, max_steps: int = 30, nr_increments=(2000, 4500),
                  nr_eps_r: float = 1e-9, solver: str = "direct", samples_per_step: int = 100,
                  seed: int = 0) -> ExperimentResult:
    """Pinned column with a tiny lateral trigger: ANM steps through the
    critical load, load-controlled Newton may step across it."""
    config = BucklingConfig()
    problem, model = beam_problem(config)
    u0, lam0 = beam_start(problem)
    handle = make_solver(solver, shot_mode="exact", seed=seed)
    path = continue_path(problem, u0, lam0, N, eps_d, handle, samples_per_step=samples_per_step,
                         max_steps=max_steps)
    mid = model.length / 2.0
    _, U, lam = path.samples()
    w_mid = np.array([model.deflection_at(u, mid) for u in U])
    u_end, lam_end = path.endpoint()
    w_end = model.deflection_at(u_end, mid)
    p_cr = problem.metadata["critical_load"]

    res = ExperimentResult("beam-buckling")
    res.tables["path"] = Table(["step", "a", "lambda", "w_mid"],
                               [[r[0], r[1], r[2], float(w)] for r, w in zip(_path_rows(path, []), w_mid)])
    res.metrics["critical_load"] = p_cr
    res.metrics["anm_steps"] = path.n_steps
    res.metrics["anm_linear_solves"] = path.linear_solves
    res.metrics["anm_final_lambda"] = lam_end * config.f0
    res.metrics["anm_final_deflection"] = w_end
    res.metrics["plateau_relative_gap"] = abs(lam_end * config.f0 - p_cr) / p_cr

    newton_rows = []
    for n in nr_increments or ():
        report = nr_continue(problem, u0, lam0, uniform_targets(lam0, lam_end, n), eps_r=nr_eps_r)
        w_nr = model.deflection_at(report.states[-1], mid) if report.states else 0.0
        reached = report.lambdas[-1] if report.lambdas else lam0
        newton_rows.append([n, report.linear_solves, float(reached), float(w_nr), abs(w_nr) / abs(w_end)])
        res.metrics[f"nr{n}_linear_solves"] = report.linear_solves
        res.metrics[f"nr{n}_deflection_ratio"] = abs(w_nr) / abs(w_end)
        res.metrics[f"nr{n}_completed"] = float(report.completed)
    res.tables["newton"] = Table(["increments", "linear_solves", "final_lambda", "w_mid", "deflection_ratio"],
                                 newton_rows)
    res.linear_solves = handle.linear_solves + sum(r[1] for r in newton_rows)
    return res


# -- inversion -----------------------------------------------------------------------

def vqmi_experiment(n_s: float = 5e6, shot_mode: str = "normal", layers: int = 2, reps: int = 10,
                    seed: int = 0, maxfev: int = 500, threshold: float = 1e-3, K=REFERENCE_K) -> ExperimentResult:
    res = ExperimentResult("vqmi")
    rows = []
    for rep in range(reps):
        s = rep_seed(seed, rep)
        out = invert(K, layers=layers, maxfev=maxfev, seed=s, shots=ShotModel(shot_mode, int(n_s), s))
        err = out.errors(K)
        hit = out.evaluations_to(threshold)
        rows.append([rep, err["frobenius"], err["entrywise_max"], hit if hit is not None else -1,
                     out.vqls.evaluations] + [float(v) for v in out.inverse.ravel()])
        res.circuit_executions += out.vqls.circuit_executions
        res.linear_solves += 1
    d = np.asarray(K).shape[0]
    res.tables["inversion"] = Table(["rep", "frobenius_error", "entrywise_max_error", "evaluations_to_threshold",
                                     "evaluations"] + [f"x{i}{j}" for i in range(d) for j in range(d)], rows)
    hits = [r[3] for r in rows if r[3] >= 0]
    res.metrics["mean_frobenius_error"] = float(np.mean([r[1] for r in rows]))
    res.metrics["mean_entrywise_max_error"] = float(np.mean([r[2] for r in rows]))
    res.metrics["mean_evaluations_to_threshold"] = float(np.mean(hits)) if hits else float("nan")
    res.metrics["max_evaluations_to_threshold"] = float(np.max(hits)) if hits else float("nan")
    res.metrics["threshold_misses"] = reps - len(hits)
    return res


EXPERIMENTS = {
    "solve-linear": solve_linear,
    "shot-sweep": shot_sweep,
    "circuit-bench": circuit_bench,
    "spring-mass": spring_mass,
    "beam-flection": beam_flection,
    "beam-buckling": beam_buckling,
    "vqmi": vqmi_experiment,
}

__all__ = ["EXPERIMENTS", "ExperimentResult", "StepFailure", "Table", "rhs_cases", "make_solver", "REFERENCE_K"]
