"""Estimator-style front end.

The controllers follow the scikit-learn conventions: constructor arguments are
stored verbatim (so ``get_params``/``set_params`` and ``clone`` work), ``fit``
assembles everything that does not depend on the initial state, and
``predict`` maps a batch of initial states (rows of modal coefficients) to
their steering controls, one row of time samples per state.

>>> ctl = HUMController(alpha=0.6, nt=201).fit()
>>> ctl.predict([[1.0, 0.5] + [0.0] * 18]).shape
(1, 201)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from frachum._validation import (
    check_initial_states,
    check_is_fitted,
    check_positive,
    check_positive_int,
)
from frachum.energy import (
    build_constraint_map,
    minimum_norm_oracle,
    penalized_solve,
    penalty_operators,
)
from frachum.fracops import TimeGrid
from frachum.hum import HUMProblem, assemble_gramian, check_eec, solve_hum, target_norm
from frachum.mlf import FracOrder
from frachum.solver import ControlSignal
from frachum.spectral import (
    Region,
    SpectralBasis,
    ZoneActuator,
    build_target,
)

__all__ = ["HUMController", "MinimumEnergyOracle", "PenalizedController"]


class _ProblemEstimator(BaseEstimator):
    """Shared parameters: the fractional system, the target and the time grid."""

    def __init__(
        self,
        alpha=0.6,
        T=1.0,
        nt=1001,
        length=1.0,
        n_modes=20,
        nx=None,
        actuator=None,
        region=((0.2, 0.5),),
        ambient_dim=5,
        g_dim=2,
        seed_vectors=None,
    ):
        self.alpha = alpha
        self.T = T
        self.nt = nt
        self.length = length
        self.n_modes = n_modes
        self.nx = nx
        self.actuator = actuator
        self.region = region
        self.ambient_dim = ambient_dim
        self.g_dim = g_dim
        self.seed_vectors = seed_vectors

    def _build_problem(self) -> HUMProblem:
        basis = SpectralBasis(
            check_positive("length", self.length),
            check_positive_int("n_modes", self.n_modes),
            self.nx,
        )
        grid = TimeGrid(check_positive("T", self.T), check_positive_int("nt", self.nt, 2))
        act = ZoneActuator(0.1, 0.4) if self.actuator is None else self.actuator
        region = self.region if isinstance(self.region, Region) else Region(tuple(self.region))
        target = build_target(region, basis, self.ambient_dim, self.g_dim, self.seed_vectors)
        return HUMProblem(basis, act, target, FracOrder(self.alpha), grid)

    def _states(self, Y0):
        check_is_fitted(self, "problem_")
        arr = check_initial_states(Y0, self.problem_.basis.N)
        return [self.problem_.basis.field(row) for row in arr]

    def residuals(self, Y0) -> np.ndarray:
        """Steering residual of the predicted control relative to ``||chi_omega psi_1(T)||``."""
        out = []
        grid = self.problem_.grid
        for y0, u in zip(self._states(Y0), self.predict(Y0)):
            res = check_eec(y0, ControlSignal(grid, u), self.problem_)
            out.append(res / max(target_norm(y0, self.problem_), 1e-300))
        return np.array(out)


class HUMController(_ProblemEstimator):
    """Minimum-energy steering controls by the Hilbert Uniqueness Method.

    ``fit`` assembles the Gramian and checks its conditioning; ``transform``
    returns the dual variables ``phi0`` and ``predict`` the controls.
    """

    def __init__(
        self,
        alpha=0.6,
        T=1.0,
        nt=1001,
        length=1.0,
        n_modes=20,
        nx=None,
        actuator=None,
        region=((0.2, 0.5),),
        ambient_dim=5,
        g_dim=2,
        seed_vectors=None,
        ridge=False,
    ):
        super().__init__(
            alpha, T, nt, length, n_modes, nx, actuator, region, ambient_dim, g_dim, seed_vectors
        )
        self.ridge = ridge

    def fit(self, X=None, y=None):
        self.problem_ = self._build_problem()
        self.gramian_, _ = assemble_gramian(self.problem_)
        if self.gramian_.size:
            ev = np.linalg.eigvalsh(self.gramian_)
            self.condition_estimate_ = float(ev[-1] / ev[0]) if ev[0] > 0 else float("inf")
        else:
            self.condition_estimate_ = 1.0
        return self

    def _solutions(self, Y0):
        return [solve_hum(self.problem_, y0, ridge=self.ridge) for y0 in self._states(Y0)]

    def transform(self, Y0) -> np.ndarray:
        return np.array([s.phi0 for s in self._solutions(Y0)]).reshape(-1, self.problem_.polar_dim)

    def predict(self, Y0) -> np.ndarray:
        return np.array([s.control.values for s in self._solutions(Y0)])


class MinimumEnergyOracle(_ProblemEstimator):
    """Least-energy admissible controls from the explicit constraint map (no Gramian)."""

    def fit(self, X=None, y=None):
        self.problem_ = self._build_problem()
        return self

    def predict(self, Y0) -> np.ndarray:
        grid = self.problem_.grid
        rows = []
        for y0 in self._states(Y0):
            cmap = build_constraint_map(self.problem_, y0)
            rows.append(minimum_norm_oracle(cmap, grid).values)
        return np.array(rows)


class PenalizedController(_ProblemEstimator):
    """Controls minimizing the penalized functional for a fixed ``epsilon``."""

    def __init__(
        self,
        alpha=0.6,
        T=1.0,
        nt=1001,
        length=1.0,
        n_modes=20,
        nx=None,
        actuator=None,
        region=((0.2, 0.5),),
        ambient_dim=5,
        g_dim=2,
        seed_vectors=None,
        epsilon=1e-6,
    ):
        super().__init__(
            alpha, T, nt, length, n_modes, nx, actuator, region, ambient_dim, g_dim, seed_vectors
        )
        self.epsilon = epsilon

    def fit(self, X=None, y=None):
        check_positive("epsilon", self.epsilon)
        self.problem_ = self._build_problem()
        self.operators_ = penalty_operators(self.problem_)
        return self

    def predict(self, Y0) -> np.ndarray:
        its = [
            penalized_solve(self.problem_, self.epsilon, y0, self.operators_)
            for y0 in self._states(Y0)
        ]
        return np.array([it.u_eps.values for it in its])
