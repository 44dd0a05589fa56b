import numpy as np
import pytest
from hypothesis import given, strategies as st

from qanm.qsim import ShotModel
from qanm.vqmi import build_extended, invert

REFERENCE_K = np.array([[2.0, -1.0], [-1.0, 2.0]])


def test_extended_system_structure():
    ext = build_extended(REFERENCE_K)
    assert ext.dim == 2
    np.testing.assert_array_equal(ext.K_E[:2, :2], REFERENCE_K)
    np.testing.assert_array_equal(ext.K_E[2:, 2:], REFERENCE_K)
    np.testing.assert_array_equal(ext.K_E[:2, 2:], 0.0)
    np.testing.assert_array_equal(ext.I_E, [1.0, 0.0, 0.0, 1.0])


def test_extended_solution_stacks_inverse_columns():
    ext = build_extended(REFERENCE_K)
    x = np.linalg.solve(ext.K_E, ext.I_E)
    np.testing.assert_allclose(x.reshape(2, 2, order="F"), np.linalg.inv(REFERENCE_K), atol=1e-14)


@given(a=st.floats(0.5, 5.0), b=st.floats(-0.4, 0.4), c=st.floats(0.5, 5.0))
def test_extended_spectrum_repeats_each_eigenvalue(a, b, c):
    K = np.array([[a, b], [b, c]])
    ev = np.linalg.eigvalsh(K)
    ev_e = np.linalg.eigvalsh(build_extended(K).K_E)
    np.testing.assert_allclose(ev_e, np.sort(np.repeat(ev, 2)), rtol=1e-12, atol=1e-12)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        build_extended(np.eye(3))
    with pytest.raises(ValueError):
        build_extended(np.ones((2, 3)))


def test_identity_inverts_to_identity():
    rep = invert(np.eye(2), layers=2, maxfev=800, cost_tol=1e-12, seed=1)
    np.testing.assert_allclose(rep.inverse, np.eye(2), atol=1e-3)
    assert rep.errors(np.eye(2))["frobenius"] < 1e-3


def test_exact_mode_inverse_of_reference_matrix():
    rep = invert(REFERENCE_K, layers=2, maxfev=1500, cost_tol=1e-12, seed=0)
    exact = np.linalg.inv(REFERENCE_K)
    for j in range(2):
        cos = rep.inverse[:, j] @ exact[:, j] / np.linalg.norm(rep.inverse[:, j]) / np.linalg.norm(exact[:, j])
        assert cos > 0.99
    err = rep.errors(REFERENCE_K)
    assert err["frobenius"] < 1e-2 and err["entrywise_max"] < 1e-2
    assert rep.evaluations_to(1e-3) is not None
    assert rep.evaluations_to(0.0) is None


def test_sampled_inversion_is_seed_deterministic():
    a = invert(REFERENCE_K, maxfev=200, seed=4, shots=ShotModel("normal", 10**6, 4))
    b = invert(REFERENCE_K, maxfev=200, seed=4, shots=ShotModel("normal", 10**6, 4))
    np.testing.assert_array_equal(a.inverse, b.inverse)
