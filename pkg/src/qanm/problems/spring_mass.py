"""Ball hanging from a linear spring, pulled sideways by a force lam.

The equilibrium equations are multiplied through by the spring length l,
which is carried as an auxiliary unknown with the constraint
l**2 = w1**2 + w2**2, so that every term is at most bilinear in
U = (w1, w2, l).
"""

from __future__ import annotations

import numpy as np

from ..anm import QuadraticProblem

K_S = 10.0
L0 = 1.0
MG = 1.0


def spring_mass_problem(k_s: float = K_S, l0: float = L0, mg: float = MG) -> QuadraticProblem:
    """Quadratic form of

        k_s (l - l0) w1 - lam l  = 0
        k_s (l - l0) w2 - mg l   = 0
        l**2 - w1**2 - w2**2     = 0

    with w1 and w2 primary and l condensed.
    """
    L = np.array([[-k_s * l0, 0.0, 0.0],
                  [0.0, -k_s * l0, -mg],
                  [0.0, 0.0, 0.0]])
    B = np.zeros((3, 3))
    B[0, 2] = -1.0

    def Q(x, y):
        return np.array([
            0.5 * k_s * (x[2] * y[0] + y[2] * x[0]),
            0.5 * k_s * (x[2] * y[1] + y[2] * x[1]),
            x[2] * y[2] - x[0] * y[0] - x[1] * y[1],
        ])

    def dQ(u):
        w1, w2, l = u
        return np.array([[k_s * l, 0.0, k_s * w1],
                         [0.0, k_s * l, k_s * w2],
                         [-2.0 * w1, -2.0 * w2, 2.0 * l]])

    return QuadraticProblem(C=np.zeros(3), L=L, Q=Q, G=np.zeros(3), B=B, n_primary=2, dQ=dQ,
                            name="spring-mass",
                            metadata={"k_s": k_s, "l0": l0, "mg": mg, "dofs": ["w1", "w2", "l"]})


def spring_mass_residual(w1, w2, lam, k_s: float = K_S, l0: float = L0, mg: float = MG) -> np.ndarray:
    """Force balance on the ball written with the true spring length."""
    l = np.hypot(w1, w2)
    return np.array([k_s * (l - l0) * w1 / l - lam, k_s * (l - l0) * w2 / l - mg])


def spring_mass_analytic(lam, k_s: float = K_S, l0: float = L0, mg: float = MG):
    """Closed-form equilibrium ``(w1, w2)``: the spring aligns with the
    resultant of lam and gravity and stretches by its magnitude over k_s."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0.0):
        raise ValueError("closed form is stated for lam >= 0")
    tension = np.hypot(lam, mg)
    l = l0 + tension / k_s
    return l * lam / tension, l * mg / tension


def spring_mass_start(k_s: float = K_S, l0: float = L0, mg: float = MG) -> tuple[np.ndarray, float]:
    """Hanging equilibrium at lam = 0."""
    w2 = l0 + mg / k_s
    return np.array([0.0, w2, w2]), 0.0
