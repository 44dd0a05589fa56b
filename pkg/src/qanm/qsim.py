"""Dense statevector emulator: Ry/H/CNOT gates, amplitude encoding, the
ancilla-based inner-product test, and shot-noise models.

Qubit 0 is the most significant bit of the basis index, so a joint register
``|a>|b>`` has amplitudes ``kron(a, b)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

NORM_TOL = 1e-12
UNIT_TOL = 1e-9

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


class DimensionError(ValueError):
    pass


class QuantumState:
    """Immutable register of ``n_qubits`` with unit-norm complex amplitudes."""

    __slots__ = ("_amps",)

    def __init__(self, amplitudes):
        amps = np.array(amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise DimensionError(f"amplitude vector length {amps.size} is not a power of two >= 2")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (sum |a|^2 = {norm2!r})")
        amps.setflags(write=False)
        self._amps = amps

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def n_qubits(self) -> int:
        return self._amps.size.bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self._amps) ** 2

    def marginal_p0(self, qubit: int = 0) -> float:
        """Probability of reading 0 on ``qubit``."""
        n = self.n_qubits
        _check_qubit(qubit, n)
        probs = self.probabilities().reshape(2**qubit, 2, -1)
        return float(probs[:, 0, :].sum())

    def __repr__(self) -> str:
        return f"QuantumState(n_qubits={self.n_qubits}, amplitudes={np.round(self._amps, 6)})"


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise IndexError(f"qubit index {q} out of range for {n}-qubit register")


def n_qubits_for(length: int) -> int:
    """Smallest n with 2**n >= length (at least 1)."""
    return max(1, int(np.ceil(np.log2(length)))) if length > 1 else 1


def amplitude_encode(v) -> QuantumState:
    """Encode ``v / ||v||`` zero-padded to the next power of two."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot amplitude-encode the zero vector")
    n = n_qubits_for(v.size)
    amps = np.zeros(2**n, dtype=complex)
    amps[: v.size] = v / norm
    # renormalize away rounding so the unit-norm invariant holds tightly
    amps /= np.sqrt(np.vdot(amps, amps).real)
    return QuantumState(amps)


# -- gates -------------------------------------------------------------------

def _apply_1q(amps: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    # leading axes of ``amps`` are batch axes
    batch = amps.shape[:-1]
    view = amps.reshape(batch + (2**q, 2, 2 ** (n - q - 1)))
    out = np.einsum("ij,...ajb->...aib", mat, view)
    return out.reshape(amps.shape)


@dataclass(frozen=True)
class Ry:
    theta: float
    qubit: int

    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.theta / 2.0), np.sin(self.theta / 2.0)
        return np.array([[c, -s], [s, c]])

    def act(self, amps: np.ndarray, n: int) -> np.ndarray:
        _check_qubit(self.qubit, n)
        return _apply_1q(amps, self.matrix(), self.qubit, n)


@dataclass(frozen=True)
class H:
    qubit: int

    def act(self, amps: np.ndarray, n: int) -> np.ndarray:
        _check_qubit(self.qubit, n)
        return _apply_1q(amps, _H, self.qubit, n)


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def act(self, amps: np.ndarray, n: int) -> np.ndarray:
        _check_qubit(self.control, n)
        _check_qubit(self.target, n)
        if self.control == self.target:
            raise ValueError("control and target must differ")
        batch = amps.shape[:-1]
        out = amps.reshape(batch + (2,) * n).copy()
        nb = len(batch)
        ctrl = [slice(None)] * (nb + n)
        ctrl[nb + self.control] = 1
        sub = out[tuple(ctrl)]
        # the target axis shifts left by one if it sat after the control axis
        t_axis = nb + self.target - (1 if self.target > self.control else 0)
        out[tuple(ctrl)] = np.flip(sub, axis=t_axis)
        return out.reshape(amps.shape)


Gate = Union[Ry, H, CNOT]


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    return QuantumState(gate.act(state.amplitudes, state.n_qubits))


def run_circuit(state: QuantumState, gates) -> QuantumState:
    amps = state.amplitudes
    n = state.n_qubits
    for g in gates:
        amps = g.act(amps, n)
    return QuantumState(amps)


def zero_state(n_qubits: int) -> QuantumState:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(amps)


# -- inner product via the ancilla test ------------------------------------

def _check_unit_pair(m: np.ndarray, u: np.ndarray) -> None:
    if m.shape[-1] != u.shape[-1]:
        raise DimensionError(f"dimension mismatch: {m.shape[-1]} vs {u.shape[-1]}")
    d = u.shape[-1]
    if d < 1 or d & (d - 1):
        raise DimensionError(f"vector length {d} is not a power of two")
    for name, v in (("m", m), ("u", u)):
        norms = np.linalg.norm(v, axis=-1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ValueError(f"{name} is not unit norm (|{name}| = {norms})")


def hadamard_test_p0(m_norm, u_norm) -> float:
    """Exact P(ancilla = 0) after H on the ancilla of (|0>|m> + |1>|u>)/sqrt(2).

    Equals ``1/2 + <m|u>/2`` for real unit vectors.
    """
    m = np.asarray(m_norm, dtype=float)
    u = np.asarray(u_norm, dtype=float)
    _check_unit_pair(m, u)
    psi = amplitude_encode(np.concatenate([m, u]))
    psi = apply_gate(psi, H(0))
    return psi.marginal_p0(0)


def hadamard_test_p0_rows(rows, u_norm) -> np.ndarray:
    """Batched ``hadamard_test_p0`` for every row of ``rows`` against one
    vector; each row is an independent register."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    u = np.asarray(u_norm, dtype=float)
    _check_unit_pair(rows, u)
    d = u.size
    n = n_qubits_for(2 * d)
    joint = np.empty((rows.shape[0], 2 * d), dtype=complex)
    joint[:, :d] = rows
    joint[:, d:] = u
    joint /= np.sqrt(2.0)
    joint = H(0).act(joint, n)
    return np.sum(np.abs(joint[:, :d]) ** 2, axis=1)


# -- shot noise --------------------------------------------------------------

ShotMode = Literal["exact", "binomial", "normal"]


@dataclass
class ExecutionCounter:
    """One increment = one circuit run with ``n_s`` shots."""

    circuit_executions: int = 0

    def add(self, k: int = 1) -> None:
        if k < 0:
            raise ValueError("counter increments must be non-negative")
        self.circuit_executions += int(k)


@dataclass
class ShotModel:
    """Measurement statistics for estimating a probability from ``n_s`` shots.

    The model owns its random stream; two models built with the same seed
    produce the same sample sequence.
    """

    mode: ShotMode = "exact"
    n_s: int = 1
    rng_seed: int | None = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("exact", "binomial", "normal"):
            raise ValueError(f"unknown shot mode {self.mode!r}")
        self.n_s = int(self.n_s)
        if self.mode != "exact" and self.n_s < 1:
            raise ValueError("n_s must be >= 1 for sampled modes")
        self.rng = np.random.default_rng(self.rng_seed)

    def fork(self, *key: int) -> "ShotModel":
        """Independent model whose seed is derived from this one and ``key``."""
        base = 0 if self.rng_seed is None else self.rng_seed
        seed = int(np.random.SeedSequence([base, *key]).generate_state(1)[0])
        return ShotModel(self.mode, self.n_s, seed)


def sample_probabilities(p_exact, model: ShotModel,
                         counter: ExecutionCounter | None = None) -> np.ndarray:
    """Shot-noise estimates of each probability in ``p_exact``; one circuit
    execution is charged per entry."""
    p = np.asarray(p_exact, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
        raise ValueError(f"invalid probability {p!r}")
    p = np.clip(p, 0.0, 1.0)
    if counter is not None:
        counter.add(p.size)
    if model.mode == "exact":
        return p.copy()
    if model.mode == "binomial":
        return model.rng.binomial(model.n_s, p) / model.n_s
    sigma = np.sqrt(p * (1.0 - p) / model.n_s)
    return np.clip(model.rng.normal(p, sigma), 0.0, 1.0)


def sample_probability(p_exact: float, model: ShotModel,
                       counter: ExecutionCounter | None = None) -> float:
    return float(sample_probabilities(np.array([p_exact]), model, counter)[0])
