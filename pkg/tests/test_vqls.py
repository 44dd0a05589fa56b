import numpy as np
import pytest
from hypothesis import given, strategies as st

from qanm import vqls
from qanm.densela import accuracy, lu_solve
from qanm.qsim import ExecutionCounter, ShotModel
from qanm.vqls import (AnsatzConfig, LocalCost, ZeroDenominatorError, ansatz_state, circuits_per_cost, cost,
                       pad_system, pauli_decompose, scale_factor, state_prep_unitary)

K2 = np.array([[2.0, -1.0], [-1.0, 2.0]])


def test_pauli_examples():
    assert pauli_decompose(K2).as_dict() == {"I": 2.0, "X": -1.0}
    assert pauli_decompose(np.eye(4)).as_dict() == {"II": 1.0}
    assert pauli_decompose(np.diag([1.0, -1.0])).as_dict() == {"Z": 1.0}


def test_pauli_errors():
    with pytest.raises(ValueError):
        pauli_decompose(np.eye(3))
    with pytest.raises(ValueError):
        pauli_decompose([[1.0, 2.0], [0.0, 1.0]])


@given(seed=st.integers(0, 2**31 - 1), n=st.sampled_from([2, 4, 8]))
def test_pauli_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    K = A + A.T
    dec = pauli_decompose(K)
    np.testing.assert_allclose(dec.to_matrix(), K, atol=1e-12)
    assert all(abs(c) > 1e-12 for c, _ in dec.terms)


def test_ansatz_examples():
    zero = ansatz_state(AnsatzConfig(2, 1, np.zeros(4)))
    np.testing.assert_allclose(zero.amplitudes, [1, 0, 0, 0])
    one = ansatz_state(AnsatzConfig(1, 0, [np.pi / 2]))
    np.testing.assert_allclose(one.amplitudes, [np.cos(np.pi / 4), np.sin(np.pi / 4)])
    rand = ansatz_state(AnsatzConfig(2, 1, np.random.default_rng(0).uniform(0, 6, 4)))
    assert np.sum(rand.probabilities()) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ansatz_state(AnsatzConfig(2, 1, np.zeros(3)))
    assert AnsatzConfig(3, 2).n_params == 9


def test_state_prep_maps_e0_to_rhs(rng):
    b = rng.normal(size=8)
    U = state_prep_unitary(b)
    np.testing.assert_allclose(U[:, 0], b / np.linalg.norm(b), atol=1e-14)
    np.testing.assert_allclose(U.T @ U, np.eye(8), atol=1e-13)


def test_cost_zero_at_exact_solution():
    lc = LocalCost(K2, np.array([1.0, 0.0]))
    u = lu_solve(K2, [1.0, 0.0])
    assert lc.of_state(u / np.linalg.norm(u)) == pytest.approx(0.0, abs=1e-14)
    assert cost(np.zeros(1), np.eye(2), np.array([1.0, 0.0]), layers=0) == pytest.approx(0.0, abs=1e-15)


def test_cost_bounds_against_projector_spectrum(rng):
    # the cost is a Rayleigh quotient of a projector-like operator, so it is in [0, 1]
    lc = LocalCost(K2 @ np.diag([1.0, 3.0]), np.array([0.2, 0.9]))
    vals = [lc.exact(t) for t in rng.uniform(0, 2 * np.pi, size=(100, 2))]
    assert min(vals) >= 0.0 and max(vals) <= 1.0


def test_cost_soundness_with_planted_solution(rng):
    for _ in range(10):
        theta = rng.uniform(0, 2 * np.pi, 6)
        u = vqls._ansatz_vector(theta, 2, 2)
        A = rng.normal(size=(4, 4))
        K = A + A.T + 8 * np.eye(4)
        F = K @ u * rng.uniform(0.5, 2.0)
        assert cost(theta, K, F, layers=2) < 1e-12
        cos = (K @ u) @ F / np.linalg.norm(K @ u) / np.linalg.norm(F)
        assert cos > 1 - 1e-8


def test_cost_zero_denominator():
    lc = LocalCost(np.diag([0.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(ZeroDenominatorError):
        lc.of_state(np.array([1.0, 0.0]))


def test_cost_charges_lcu_circuits():
    counter = ExecutionCounter()
    cost(np.zeros(2), K2, np.array([1.0, 0.0]), counter=counter)
    assert counter.circuit_executions == circuits_per_cost(2, 1) == 8


def test_pad_system():
    Kp, Fp, d = pad_system(np.diag([2.0, 3.0, 4.0]), np.ones(3))
    assert d == 3 and Kp.shape == (4, 4) and Kp[3, 3] == 1.0 and Fp[3] == 0.0


def test_scale_factor_is_least_squares(rng):
    K = K2
    F = np.array([1.0, 0.0])
    u = rng.normal(size=2)
    u /= np.linalg.norm(u)
    s = scale_factor(K, F, u)

    def resid(x):
        return np.linalg.norm(F - x * K @ u)

    assert resid(s) < resid(1.01 * s) and resid(s) < resid(0.99 * s)


def test_solve_identity_recovers_rhs():
    F = np.array([0.6, -0.8]) * 3.0
    rep = vqls.solve(np.eye(2), F, seed=4)
    assert rep.converged
    np.testing.assert_allclose(rep.solution, F, atol=1e-2)
    assert rep.scale == pytest.approx(3.0, rel=1e-2)


def test_solve_reference_system_accuracy():
    ref = lu_solve(K2, [1.0, 0.0])
    accs = [accuracy(vqls.solve(K2, [1.0, 0.0], seed=s, shots=ShotModel("normal", 10**8, s)).solution, ref)
            for s in range(5)]
    assert np.mean(accs) > 99.0


def test_solve_pads_non_power_of_two():
    K = np.array([[3.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 3.0]])
    F = np.array([1.0, 2.0, 0.5])
    rep = vqls.solve(K, F, layers=2, seed=1, maxfev=2000)
    assert rep.solution.shape == (3,)
    assert accuracy(rep.solution, lu_solve(K, F)) > 95.0


def test_exact_mode_bit_reproducible():
    a = vqls.solve(K2, [0.3, 0.7], seed=9)
    b = vqls.solve(K2, [0.3, 0.7], seed=9)
    np.testing.assert_array_equal(a.solution, b.solution)
    assert a.cost_history == b.cost_history


def test_report_bookkeeping():
    rep = vqls.solve(K2, [1.0, 0.0], seed=2, maxfev=30, cost_tol=0.0)
    assert rep.evaluations == len(rep.cost_history) <= 30
    assert rep.circuit_executions == 8 * rep.evaluations
    assert np.all(np.isfinite(rep.cost_history)) and np.isfinite(rep.scale)
    assert not rep.converged
