"""Variational quantum linear solver on the statevector emulator.

The trial state comes from a hardware-efficient Ry/CNOT ansatz. The local
cost is evaluated by dense algebra, and each evaluation is charged the
ancilla-test circuits its Pauli (LCU) expansion would need on hardware. The
optimized unit state is rescaled by a least-squares factor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .qsim import CNOT, ExecutionCounter, Ry, ShotModel, n_qubits_for, run_circuit, sample_probability, zero_state

COEF_TOL = 1e-12

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ZeroDenominatorError(ArithmeticError):
    pass


# -- Pauli decomposition ----------------------------------------------------

@dataclass(frozen=True)
class PauliDecomposition:
    terms: tuple[tuple[float, str], ...]
    n_qubits: int

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((2**self.n_qubits,) * 2, dtype=complex)
        for coef, word in self.terms:
            out += coef * pauli_matrix(word)
        return out.real

    def as_dict(self) -> dict[str, float]:
        return {w: c for c, w in self.terms}

    def __len__(self) -> int:
        return len(self.terms)


def pauli_matrix(word: str) -> np.ndarray:
    mat = np.ones((1, 1), dtype=complex)
    for ch in word:
        mat = np.kron(mat, _PAULI[ch])
    return mat


def lcu_term_count(K) -> int:
    """Number of Pauli words with a nonzero coefficient in K (any real K)."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0].bit_length() - 1
    count = 0
    for letters in itertools.product("IXYZ", repeat=n):
        coef = np.sum(pauli_matrix("".join(letters)).conj() * K) / K.shape[0]
        count += abs(coef) > COEF_TOL
    return count


def circuits_per_cost(n_terms: int, n_qubits: int) -> int:
    """Ancilla-test circuits behind one local-cost evaluation.

    Pairs ``l < l'`` of LCU terms give the normalization overlaps; pairs
    ``l <= l'`` times each qubit give the projector overlaps. Every test is
    run twice, for the real and imaginary parts.
    """
    pairs = n_terms * (n_terms - 1) // 2
    projector = n_qubits * n_terms * (n_terms + 1) // 2
    return 2 * (pairs + projector)


def pauli_decompose(K) -> PauliDecomposition:
    """Coefficients ``trace(P K) / 2**n`` over all n-qubit Pauli words.

    Only terms above ``COEF_TOL`` in magnitude are kept.
    """
    K = np.asarray(K, dtype=float)
    d = K.shape[0]
    if K.ndim != 2 or K.shape[1] != d:
        raise ValueError(f"expected a square matrix, got {K.shape}")
    if d < 2 or d & (d - 1):
        raise ValueError(f"dimension {d} is not a power of two; pad the system first")
    if not np.allclose(K, K.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(K).max())):
        raise ValueError("Pauli decomposition with real coefficients needs a symmetric matrix")
    n = d.bit_length() - 1
    terms = []
    for letters in itertools.product("IXYZ", repeat=n):
        word = "".join(letters)
        # Pauli words are Hermitian, so trace(P K) = sum(conj(P) * K)
        coef = np.sum(pauli_matrix(word).conj() * K) / d
        if abs(coef) > COEF_TOL:
            terms.append((float(coef.real), word))
    return PauliDecomposition(tuple(terms), n)


# -- ansatz -------------------------------------------------------------------

@dataclass
class AnsatzConfig:
    """Ry layer followed by ``layers`` repetitions of (CNOT chain, Ry layer)."""

    n_qubits: int
    layers: int = 1
    theta: np.ndarray | None = None

    @property
    def n_params(self) -> int:
        return self.n_qubits * (self.layers + 1)

    def with_theta(self, theta) -> "AnsatzConfig":
        return AnsatzConfig(self.n_qubits, self.layers, np.asarray(theta, dtype=float))


def ansatz_gates(n_qubits: int, layers: int, theta) -> list:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n_qubits * (layers + 1),):
        raise ValueError(f"expected {n_qubits * (layers + 1)} parameters, got {theta.size}")
    gates = [Ry(theta[q], q) for q in range(n_qubits)]
    for layer in range(1, layers + 1):
        gates += [CNOT(q, q + 1) for q in range(n_qubits - 1)]
        gates += [Ry(theta[layer * n_qubits + q], q) for q in range(n_qubits)]
    return gates


def ansatz_state(config: AnsatzConfig):
    if config.theta is None:
        raise ValueError("ansatz config carries no parameters")
    return run_circuit(zero_state(config.n_qubits), ansatz_gates(config.n_qubits, config.layers, config.theta))


def _ansatz_vector(theta, n_qubits: int, layers: int) -> np.ndarray:
    # the Ry/CNOT circuit keeps amplitudes real
    return ansatz_state(AnsatzConfig(n_qubits, layers, theta)).amplitudes.real


# -- cost ---------------------------------------------------------------------

def state_prep_unitary(b: np.ndarray) -> np.ndarray:
    """Real orthogonal U with ``U e0 = b`` (Householder reflection)."""
    b = np.asarray(b, dtype=float)
    b = b / np.linalg.norm(b)
    v = -b.copy()
    v[0] += 1.0
    vv = v @ v
    if vv < 1e-30:
        return np.eye(b.size)
    return np.eye(b.size) - 2.0 * np.outer(v, v) / vv


def _zero_projector_weights(n_qubits: int) -> np.ndarray:
    """Per basis index: (1/n) * number of qubits reading 0."""
    idx = np.arange(2**n_qubits)
    zeros = sum(((idx >> (n_qubits - 1 - j)) & 1) == 0 for j in range(n_qubits))
    return zeros / n_qubits


class LocalCost:
    """Local VQLS cost for a fixed (K, F) pair of power-of-two size."""

    def __init__(self, K, F, layers: int = 1):
        self.K = np.asarray(K, dtype=float)
        self.F = np.asarray(F, dtype=float)
        d = self.K.shape[0]
        if d < 2 or d & (d - 1) or self.F.shape != (d,):
            raise ValueError("LocalCost needs a power-of-two system; use pad_system first")
        if np.linalg.norm(self.F) == 0.0:
            raise ValueError("right-hand side must be nonzero")
        self.n_qubits = d.bit_length() - 1
        self.layers = layers
        self.U = state_prep_unitary(self.F)
        self._w0 = _zero_projector_weights(self.n_qubits)
        self.n_terms = lcu_term_count(self.K)
        self.circuits_per_evaluation = circuits_per_cost(self.n_terms, self.n_qubits)

    def exact(self, theta) -> float:
        u = _ansatz_vector(theta, self.n_qubits, self.layers)
        return self.of_state(u)

    def of_state(self, u: np.ndarray) -> float:
        psi = self.K @ u
        denom = psi @ psi
        if denom <= 1e-300:
            raise ZeroDenominatorError("K|u(theta)> vanishes")
        phi = self.U.T @ psi
        numer = denom - np.sum(self._w0 * phi**2)
        return float(min(1.0, max(0.0, numer / denom)))


def cost(theta, K, F, layers: int = 1, shots: ShotModel | None = None,
         counter: ExecutionCounter | None = None) -> float:
    """C(theta) in [0, 1]; zero exactly when K|u(theta)> is proportional to F.

    ``counter`` is charged the ancilla-test circuits of one evaluation (see
    :func:`circuits_per_cost`). With a sampled shot model the estimate is
    drawn around the exact value.
    """
    lc = LocalCost(K, F, layers)
    if counter is not None:
        counter.add(lc.circuits_per_evaluation)
    return sample_probability(lc.exact(theta), shots or ShotModel("exact"))


# -- solve --------------------------------------------------------------------

def pad_system(K, F) -> tuple[np.ndarray, np.ndarray, int]:
    """Pad to the next power of two with an identity block and zero load."""
    K = np.asarray(K, dtype=float)
    F = np.asarray(F, dtype=float)
    d = K.shape[0]
    size = 2 ** n_qubits_for(d)
    if size == d:
        return K, F, d
    Kp = np.eye(size)
    Kp[:d, :d] = K
    Fp = np.zeros(size)
    Fp[:d] = F
    return Kp, Fp, d


def scale_factor(K, F, u) -> float:
    """Least-squares s minimizing ||F - s K u||."""
    Ku = np.asarray(K) @ u
    return float((F @ Ku) / (Ku @ Ku))


@dataclass
class VqlsReport:
    solution: np.ndarray
    theta_opt: np.ndarray
    cost_history: list[float]
    circuit_executions: int
    scale: float
    converged: bool
    evaluations: int = 0
    theta_history: list[np.ndarray] = field(default_factory=list, repr=False)
    decomposition: PauliDecomposition | None = None


def solution_from_theta(theta, K, F, layers: int = 1) -> np.ndarray:
    """Rescaled solution carried by ``theta`` (padding stripped)."""
    Kp, Fp, d = pad_system(K, F)
    u = _ansatz_vector(theta, Kp.shape[0].bit_length() - 1, layers)
    return scale_factor(Kp, Fp, u) * u[:d]


def solve(K, F, layers: int = 1, maxfev: int = 500, cost_tol: float = 1e-6,
          seed: int = 0, shots: ShotModel | None = None, method: str = "COBYLA",
          rhobeg: float = 1.0, keep_history: bool = True) -> VqlsReport:
    """Minimize the local cost with a derivative-free optimizer.

    Initial angles are uniform in [0, 2 pi) under ``seed``. Optimization
    stops after ``maxfev`` evaluations or once an evaluated cost drops below
    ``cost_tol``.
    """
    Kp, Fp, d = pad_system(K, F)
    lc = LocalCost(Kp, Fp, layers)
    shots = shots if shots is not None else ShotModel("exact")
    counter = ExecutionCounter()
    n_params = lc.n_qubits * (layers + 1)
    theta0 = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, n_params)

    history: list[float] = []
    thetas: list[np.ndarray] = []
    best = {"cost": np.inf, "theta": theta0, "done": False}

    def objective(theta):
        # once the target is met the landscape is frozen so the optimizer
        # winds down without charging further circuits
        if best["done"] or len(history) >= maxfev:
            best["done"] = True
            return best["cost"]
        counter.add(lc.circuits_per_evaluation)
        c = sample_probability(lc.exact(theta), shots)
        history.append(c)
        if keep_history:
            thetas.append(np.array(theta, dtype=float))
        if c < best["cost"]:
            best["cost"], best["theta"] = c, np.array(theta, dtype=float)
        if c < cost_tol:
            best["done"] = True
        return c

    options = {"maxiter": 4 * maxfev}
    if method.upper() == "COBYLA":
        options["rhobeg"] = rhobeg
        options["tol"] = 1e-10
    minimize(objective, theta0, method=method, options=options)

    theta_opt = best["theta"]
    u = _ansatz_vector(theta_opt, lc.n_qubits, layers)
    s = scale_factor(Kp, Fp, u)
    decomposition = None
    if np.allclose(Kp, Kp.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(Kp).max())):
        decomposition = pauli_decompose(Kp)
    return VqlsReport(
        solution=s * u[:d],
        theta_opt=theta_opt,
        cost_history=history,
        circuit_executions=counter.circuit_executions,
        scale=s,
        converged=best["cost"] < cost_tol,
        evaluations=len(history),
        theta_history=thetas,
        decomposition=decomposition,
    )
