"""Geometrically nonlinear (von Karman) Euler-Bernoulli beam.

Axial displacement u uses linear Lagrange shape functions and deflection w
uses Hermite cubics, with nodal unknowns (u, w, w'). To keep the residual
quadratic, the membrane force at every membrane Gauss point is an extra
unknown S_g tied to the strain by

    w_g J (u' + w'**2 / 2 - S_g / EA) = 0

while the nodal equations read

    K_bend q + sum_g w_g J (b_g + (g_g . q) g_g) S_g - lam F = 0

with b_g and g_g the rows giving u' and w' at the point. Both blocks come
from one potential, so the tangent is symmetric. The S_g are condensed out
before each linear solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..anm import QuadraticProblem

LENGTH = 30.0
WIDTH = 1.0
HEIGHT = 1.0
YOUNG = 3.0e5
PRESSURE = 100.0
TRIGGER_RATIO = 1e-7

DOFS_PER_NODE = 3  # u, w, w'


class BeamConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BucklingConfig:
    """Pinned-pinned column loaded by lam f0 at the free axial end plus a
    lateral load lam f0 * trigger at midspan."""

    f0: float = 1.0
    trigger: float = TRIGGER_RATIO
    n_elements: int = 10
    support: Literal["simply-supported"] = "simply-supported"


@dataclass(frozen=True)
class FlectionConfig:
    """Clamped-clamped beam under uniform pressure q0, modelled on the left
    half with symmetry conditions at midspan."""

    q0: float = PRESSURE
    n_elements: int = 5


def _hermite(s: float, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hermite cubic values and first/second x-derivatives at s in [0, 1]."""
    n = np.array([1 - 3 * s**2 + 2 * s**3, h * (s - 2 * s**2 + s**3),
                  3 * s**2 - 2 * s**3, h * (-s**2 + s**3)])
    dn = np.array([-6 * s + 6 * s**2, h * (1 - 4 * s + 3 * s**2),
                   6 * s - 6 * s**2, h * (-2 * s + 3 * s**2)]) / h
    ddn = np.array([-6 + 12 * s, h * (-4 + 6 * s), 6 - 12 * s, h * (-2 + 6 * s)]) / h**2
    return n, dn, ddn


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    xi, w = np.polynomial.legendre.leggauss(n)
    return (xi + 1.0) / 2.0, w / 2.0


@dataclass
class BeamModel:
    """Mesh and section data with the Gauss-point operators."""

    n_elements: int
    length: float
    fixed: dict[int, list[str]]  # node -> constrained components among "u", "w", "t"
    E: float = YOUNG
    width: float = WIDTH
    height: float = HEIGHT
    membrane_points: int = 2
    bending_points: int = 3
    nonlinear: bool = True
    # filled in __post_init__
    x_nodes: np.ndarray = field(init=False)
    free: np.ndarray = field(init=False)
    Bm: np.ndarray = field(init=False, repr=False)
    Gm: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    K_bend: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_elements < 1:
            raise BeamConfigError("need at least one element")
        self.x_nodes = np.linspace(0.0, self.length, self.n_elements + 1)
        n_full = DOFS_PER_NODE * (self.n_elements + 1)
        mask = np.ones(n_full, dtype=bool)
        comp = {"u": 0, "w": 1, "t": 2}
        for node, names in self.fixed.items():
            for c in names:
                mask[DOFS_PER_NODE * node + comp[c]] = False
        self.free = np.flatnonzero(mask)
        self._assemble()

    # -- section ----------------------------------------------------------
    @property
    def EA(self) -> float:
        return self.E * self.width * self.height

    @property
    def EI(self) -> float:
        return self.E * self.width * self.height**3 / 12.0

    @property
    def n_full(self) -> int:
        return DOFS_PER_NODE * (self.n_elements + 1)

    @property
    def n_free(self) -> int:
        return self.free.size

    @property
    def n_gauss(self) -> int:
        return self.weights.size

    @property
    def element_length(self) -> float:
        return self.length / self.n_elements

    def element_dofs(self, e: int) -> np.ndarray:
        return np.arange(DOFS_PER_NODE * e, DOFS_PER_NODE * (e + 2))

    # -- assembly -----------------------------------------------------------
    def _rows(self, e: int, s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Full-length rows mapping nodal DOFs to u', w, w' and w'' at (e, s)."""
        h = self.element_length
        dofs = self.element_dofs(e)
        n, dn, ddn = _hermite(s, h)
        du = np.zeros(self.n_full)
        du[dofs[[0, 3]]] = [-1.0 / h, 1.0 / h]
        rows = []
        for vals in (n, dn, ddn):
            r = np.zeros(self.n_full)
            r[dofs[[1, 2, 4, 5]]] = vals
            rows.append(r)
        return du, rows[0], rows[1], rows[2]

    def _assemble(self) -> None:
        h = self.element_length
        sm, wm = _gauss01(self.membrane_points)
        sb, wb = _gauss01(self.bending_points)
        Bm, Gm, W = [], [], []
        K = np.zeros((self.n_full, self.n_full))
        for e in range(self.n_elements):
            for s, w in zip(sm, wm):
                du, _, dw, _ = self._rows(e, s)
                Bm.append(du)
                Gm.append(dw)
                W.append(w * h)
            for s, w in zip(sb, wb):
                _, _, _, ddw = self._rows(e, s)
                K += w * h * self.EI * np.outer(ddw, ddw)
        self.Bm = np.array(Bm)[:, self.free]
        self.Gm = np.array(Gm)[:, self.free]
        self.weights = np.array(W)
        self.K_bend = K[np.ix_(self.free, self.free)]

    def distributed_load(self, q: float) -> np.ndarray:
        """Consistent nodal forces of a uniform transverse load q (free DOFs)."""
        h = self.element_length
        sg, wg = _gauss01(3)
        F = np.zeros(self.n_full)
        for e in range(self.n_elements):
            for s, w in zip(sg, wg):
                _, nw, _, _ = self._rows(e, s)
                F += w * h * q * nw
        return F[self.free]

    def point_load(self, x: float, component: Literal["u", "w"], value: float) -> np.ndarray:
        node = int(np.argmin(np.abs(self.x_nodes - x)))
        if not np.isclose(self.x_nodes[node], x):
            raise BeamConfigError(f"no node at x = {x}")
        F = np.zeros(self.n_full)
        F[DOFS_PER_NODE * node + {"u": 0, "w": 1}[component]] = value
        return F[self.free]

    # -- state helpers --------------------------------------------------------
    def expand_dofs(self, q) -> np.ndarray:
        """Free nodal DOFs (or a full unknown vector) to all nodal DOFs."""
        full = np.zeros(self.n_full)
        full[self.free] = np.asarray(q)[: self.n_free]
        return full

    def nodal(self, q, component: Literal["u", "w", "t"]) -> np.ndarray:
        return self.expand_dofs(q)[{"u": 0, "w": 1, "t": 2}[component]::DOFS_PER_NODE]

    def deflection_at(self, q, x: float) -> float:
        node = int(np.argmin(np.abs(self.x_nodes - x)))
        if not np.isclose(self.x_nodes[node], x):
            raise BeamConfigError(f"no node at x = {x}")
        return float(self.nodal(q, "w")[node])

    def membrane_strain(self, q) -> np.ndarray:
        """u' + w'**2 / 2 at the membrane Gauss points."""
        q = np.asarray(q)[: self.n_free]
        return self.Bm @ q + 0.5 * (self.Gm @ q) ** 2

    def equilibrium_stresses(self, q) -> np.ndarray:
        """Membrane forces consistent with the displacements."""
        return self.EA * self.membrane_strain(q)

    def internal_force(self, q) -> np.ndarray:
        """Displacement-based internal force vector (no auxiliary unknowns)."""
        q = np.asarray(q, dtype=float)
        N = self.equilibrium_stresses(q)
        theta = self.Gm @ q
        return self.K_bend @ q + (self.Bm + theta[:, None] * self.Gm).T @ (self.weights * N)

    def stress_field(self, q, x, z) -> np.ndarray:
        """sigma_xx = E (u' + w'**2 / 2 - z w'') on the grid x (rows) by z (cols)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        tol = 1e-12 * self.length
        if np.any(x < -tol) or np.any(x > self.length + tol):
            raise ValueError("x outside the beam")
        if np.any(np.abs(z) > self.height / 2.0 + 1e-12):
            raise ValueError("z outside the section")
        full = self.expand_dofs(q)
        h = self.element_length
        out = np.empty((x.size, z.size))
        for i, xi in enumerate(x):
            e = min(int(np.clip(xi, 0.0, self.length) // h), self.n_elements - 1)
            s = np.clip((xi - self.x_nodes[e]) / h, 0.0, 1.0)
            du, _, dw, ddw = self._rows(e, s)
            eps0 = du @ full + 0.5 * (dw @ full) ** 2
            out[i] = self.E * (eps0 - z * (ddw @ full))
        return out

    # -- quadratic form -------------------------------------------------------
    def quadratic_problem(self, load: np.ndarray, name: str = "beam", metadata: dict | None = None) -> QuadraticProblem:
        nq, ng = self.n_free, self.n_gauss
        W, Bm, Gm = self.weights, self.Bm, self.Gm
        L = np.zeros((nq + ng, nq + ng))
        L[:nq, :nq] = self.K_bend
        L[:nq, nq:] = Bm.T * W
        L[nq:, :nq] = W[:, None] * Bm
        L[nq:, nq:] = -np.diag(W / self.EA)
        G = np.concatenate([-np.asarray(load, dtype=float), np.zeros(ng)])
        scale = 1.0 if self.nonlinear else 0.0

        def Q(x, y):
            gx, gy = Gm @ x[:nq], Gm @ y[:nq]
            f = Gm.T @ (W * 0.5 * (gx * y[nq:] + gy * x[nq:]))
            return scale * np.concatenate([f, W * 0.5 * gx * gy])

        def dQ(u):
            gu = Gm @ u[:nq]
            out = np.zeros((nq + ng, nq + ng))
            out[:nq, :nq] = Gm.T @ ((W * u[nq:])[:, None] * Gm)
            out[:nq, nq:] = Gm.T * (W * gu)
            out[nq:, :nq] = (W * gu)[:, None] * Gm
            return scale * out

        meta = {"n_free": nq, "n_gauss": ng, "EI": self.EI, "EA": self.EA}
        meta.update(metadata or {})
        return QuadraticProblem(C=np.zeros(nq + ng), L=L, Q=Q, G=G, n_primary=nq, dQ=dQ,
                                name=name, metadata=meta)


def flection_model(config: FlectionConfig = FlectionConfig(), nonlinear: bool = True) -> BeamModel:
    n = config.n_elements
    return BeamModel(n, LENGTH / 2.0, fixed={0: ["u", "w", "t"], n: ["u", "t"]}, nonlinear=nonlinear)


def buckling_model(config: BucklingConfig = BucklingConfig(), nonlinear: bool = True) -> BeamModel:
    n = config.n_elements
    if n % 2:
        raise BeamConfigError("buckling mesh needs an even element count for the midspan node")
    return BeamModel(n, LENGTH, fixed={0: ["u", "w"], n: ["w"]}, nonlinear=nonlinear)


def beam_problem(config: FlectionConfig | BucklingConfig | str = "flection",
                 nonlinear: bool = True) -> tuple[QuadraticProblem, BeamModel]:
    """Quadratic problem and its FE model for the flection or buckling case."""
    if isinstance(config, str):
        config = {"flection": FlectionConfig, "buckling": BucklingConfig}.get(config, lambda: None)()
    if isinstance(config, FlectionConfig):
        model = flection_model(config, nonlinear)
        load = model.distributed_load(config.q0)
        meta = {"case": "flection", "q0": config.q0, "midpoint": model.length}
    elif isinstance(config, BucklingConfig):
        if config.support != "simply-supported":
            raise BeamConfigError(f"unsupported support type {config.support!r}")
        model = buckling_model(config, nonlinear)
        load = (model.point_load(model.length, "u", -config.f0)
                + model.point_load(model.length / 2.0, "w", config.f0 * config.trigger))
        meta = {"case": "buckling", "f0": config.f0, "trigger": config.trigger,
                "midpoint": model.length / 2.0,
                "critical_load": np.pi**2 * model.EI / model.length**2}
    else:
        raise BeamConfigError(f"unknown beam configuration {config!r}")
    problem = model.quadratic_problem(load, name=f"beam-{meta['case']}", metadata=meta)
    return problem, model


def beam_start(problem: QuadraticProblem) -> tuple[np.ndarray, float]:
    """Unloaded reference state."""
    return np.zeros(problem.dimension), 0.0


def critical_load(EI: float = YOUNG * WIDTH * HEIGHT**3 / 12.0, length: float = LENGTH, mu: float = 1.0) -> float:
    """Euler load pi**2 EI / (mu L)**2."""
    return np.pi**2 * EI / (mu * length) ** 2
