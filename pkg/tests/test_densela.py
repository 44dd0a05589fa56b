import numpy as np
import pytest
from hypothesis import given, strategies as st

from qanm.densela import (GridMismatchError, SingularMatrixError, ZeroReferenceError, accuracy, lu_factor,
                          lu_solve, path_error)


def test_lu_solve_hand_inverse():
    # K^-1 = (1/3) [[2, 1], [1, 2]]
    u = lu_solve([[2.0, -1.0], [-1.0, 2.0]], [1.0, 0.0])
    np.testing.assert_allclose(u, [2 / 3, 1 / 3], atol=1e-14)


def test_lu_solve_identity():
    np.testing.assert_allclose(lu_solve(np.eye(2), [0.3, 0.7]), [0.3, 0.7])


def test_lu_solve_singular():
    with pytest.raises(SingularMatrixError):
        lu_solve([[1.0, 1.0], [1.0, 1.0]], [1.0, 0.0])


def test_lu_solve_zero_matrix_is_singular():
    with pytest.raises(SingularMatrixError):
        lu_solve(np.zeros((3, 3)), np.ones(3))


def test_lu_solve_rejects_bad_shapes():
    with pytest.raises(ValueError):
        lu_solve(np.eye(3), np.ones(2))
    with pytest.raises(ValueError):
        lu_solve(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        lu_solve([[np.nan, 0.0], [0.0, 1.0]], [1.0, 1.0])


def test_factor_reused_for_column_block(rng):
    K = rng.normal(size=(5, 5)) + 5 * np.eye(5)
    F = rng.normal(size=(5, 3))
    np.testing.assert_allclose(K @ lu_factor(K).solve(F), F, atol=1e-12)


@given(n=st.integers(1, 32), seed=st.integers(0, 2**31 - 1))
def test_lu_residual_well_conditioned(n, seed):
    rng = np.random.default_rng(seed)
    Q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
    Q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
    K = Q1 @ np.diag(rng.uniform(1.0, 10.0, n)) @ Q2
    F = rng.normal(size=n)
    u = lu_solve(K, F)
    assert np.linalg.norm(K @ u - F) <= 1e-9 * np.linalg.norm(F)


def test_accuracy_examples():
    ref = np.array([2 / 3, 1 / 3])
    assert accuracy(ref, ref) == 100.0
    assert accuracy(np.zeros(2), ref) == 0.0
    assert accuracy(-ref, ref) == -100.0


def test_accuracy_zero_reference():
    with pytest.raises(ZeroReferenceError):
        accuracy([1.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        accuracy([1.0], [1.0, 0.0])


@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 8))
def test_accuracy_rotation_invariant(seed, n):
    rng = np.random.default_rng(seed)
    u, ref = rng.normal(size=n), rng.normal(size=n)
    R, _ = np.linalg.qr(rng.normal(size=(n, n)))
    assert accuracy(R @ u, R @ ref) == pytest.approx(accuracy(u, ref), abs=1e-9)


def test_path_error_identical_paths():
    lam = np.linspace(0, 1, 11)
    w = lam**2 + 1
    assert path_error(list(zip(lam, w)), list(zip(lam, w))) == 0.0


def test_path_error_constant_offset_is_one_percent():
    lam = np.linspace(0, 3, 50)
    w = 1.0 + np.sin(lam)
    rms = np.sqrt(np.mean(w**2))
    err = path_error(list(zip(lam, w + 0.01 * rms)), list(zip(lam, w)))
    assert err == pytest.approx(1.0, rel=1e-12)


@given(seed=st.integers(0, 2**31 - 1), scale=st.floats(1e-3, 10.0))
def test_path_error_relabeling_and_linear_scaling(seed, scale):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(0, 5, 20))
    w = rng.normal(size=20) + 3.0
    rms = np.sqrt(np.mean(w**2))
    base = path_error(list(zip(lam, w + 0.01 * rms)), list(zip(lam, w)))
    scaled = path_error(list(zip(lam, w + scale * 0.01 * rms)), list(zip(lam, w)))
    assert scaled == pytest.approx(scale * base, rel=1e-9)
    perm = rng.permutation(20)
    shuffled = path_error(list(zip(lam[perm], w[perm] + 0.01 * rms)), list(zip(lam[perm], w[perm])))
    assert shuffled == pytest.approx(base, rel=1e-12)


def test_path_error_errors():
    with pytest.raises(GridMismatchError):
        path_error([(0.0, 1.0), (1.0, 2.0)], [(0.0, 1.0), (1.5, 2.0)])
    with pytest.raises(GridMismatchError):
        path_error([(0.0, 1.0)], [(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(ZeroReferenceError):
        path_error([(0.0, 1.0), (1.0, 2.0)], [(0.0, 0.0), (1.0, 0.0)])
