r"""Hilbert Uniqueness Method for exact enlarged controllability.

Given polar coordinates :math:`\varphi_0` (a function on :math:`\omega` orthogonal
to :math:`G`), the adjoint state is :math:`\varphi(t) = k(T-t)\chi_\omega^*\varphi_0`
and the candidate control is its observation through the actuator,
:math:`u_{\varphi_0} = B^*\varphi`. The Gramian

.. math::

    \Lambda_{jk} = \int_0^T u_{q_j}(t)\,u_{q_k}(t)\,dt

over the polar basis :math:`(q_k)` is symmetric positive semidefinite, and
solving :math:`\Lambda\varphi_0 = -P\psi_1(T)` (with :math:`\psi_1` the free
solution) gives the minimum-energy control steering :math:`\chi_\omega y(T)`
into :math:`G`.

Everything is discretized consistently: observations are the discrete adjoint
of the product-trapezoid input-to-state map, and the time integral uses
trapezoid weights, so :math:`\Lambda = A\,\Omega^{-1}A^T` for the constraint
matrix ``A`` and the steering identity holds to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from frachum.errors import GridMismatchError, IllPosedError
from frachum.fracops import TimeGrid
from frachum.mlf import FracOrder
from frachum.solver import ControlSignal, forward_solve, free_solution, modal_weights
from frachum.spectral import (
    Actuator,
    Region,
    SpectralBasis,
    SpectralField,
    TargetSubspace,
    actuator_coefficients,
    restrict,
)

__all__ = [
    "HUMProblem",
    "HUMSolution",
    "assemble_gramian",
    "check_eec",
    "observation_signal",
    "solve_hum",
    "target_norm",
]

ILL_POSED_RTOL = 1e-12
RIDGE_FRACTION = 1e-10


@dataclass(frozen=True, eq=False)
class HUMProblem:
    """The data of a controllability problem, except the initial state.

    The initial state enters only the right-hand side, so one problem (and
    its Gramian) serves any number of initial states.
    """

    basis: SpectralBasis
    actuator: Actuator
    target: TargetSubspace
    alpha: FracOrder
    grid: TimeGrid

    def __post_init__(self):
        if not isinstance(self.alpha, FracOrder):
            object.__setattr__(self, "alpha", FracOrder(self.alpha))
        if self.target.grid.basis != self.basis:
            raise GridMismatchError("target subspace was built on a different basis")
        # validates the actuator against the basis once
        _ = self.actuator_coefficients

    @property
    def region(self) -> Region:
        return self.target.region

    @property
    def T(self) -> float:
        return self.grid.T

    @property
    def polar_dim(self) -> int:
        return self.target.polar_dim

    @property
    def is_trivial(self) -> bool:
        """True when ``G`` fills the ambient space, so every state is admissible."""
        return self.target.polar_dim == 0

    @cached_property
    def actuator_coefficients(self) -> np.ndarray:
        b = actuator_coefficients(self.actuator, self.basis)
        b.setflags(write=False)
        return b

    @cached_property
    def constraint_matrix(self) -> np.ndarray:
        """``A[k, j]``: polar coordinate ``k`` of ``H`` applied to the hat at node ``j``."""
        w = modal_weights(self.alpha, self.basis, self.grid)
        a = (self.target.polar_coefficients * self.actuator_coefficients) @ w.terminal
        a.setflags(write=False)
        return a

    @cached_property
    def modal_scale(self) -> float:
        """Largest single-mode observation energy ``max_n b_n^2 int k_n^2``, the Gramian's natural scale."""
        w = modal_weights(self.alpha, self.basis, self.grid).terminal
        b = self.actuator_coefficients
        return float(np.max(b**2 * np.sum(w**2 / self.grid.trapezoid_weights, axis=1)))

    def free_terminal(self, y0: SpectralField) -> SpectralField:
        r"""The uncontrolled state :math:`\psi_1(T)`."""
        self.check_state(y0)
        return SpectralField(self.basis, free_solution(y0, self.alpha, self.T)[0])

    def check_state(self, y0: SpectralField) -> None:
        if y0.basis != self.basis:
            raise GridMismatchError("initial state lives on a different basis")


@dataclass(frozen=True, eq=False)
class HUMSolution:
    """Result of :func:`solve_hum`."""

    phi0: np.ndarray = field(repr=False)
    gramian: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    control: ControlSignal = field(repr=False)
    residual: float
    condition_estimate: float
    target_norm: float
    ridge: float = 0.0

    @property
    def energy(self) -> float:
        return self.control.energy()


def observation_signal(phi0, problem: HUMProblem) -> ControlSignal:
    r"""Control :math:`u_{\varphi_0} = B^*\varphi` observed from the adjoint state.

    For a zone actuator this is :math:`\langle f, \varphi(\cdot,t)\rangle_{L^2(D)}`,
    for a pointwise one :math:`\varphi(b, t)`, both averaged against the hat
    function of each node (which keeps the value at ``t = T`` finite).
    """
    phi0 = _polar_vector(phi0, problem)
    grid = problem.grid
    if problem.is_trivial:
        return ControlSignal.zeros(grid)
    return ControlSignal(grid, (phi0 @ problem.constraint_matrix) / grid.trapezoid_weights)


def _polar_vector(phi0, problem: HUMProblem) -> np.ndarray:
    phi0 = np.asarray(phi0, dtype=float).reshape(-1)
    if phi0.size != problem.polar_dim:
        raise GridMismatchError(
            f"phi0 has {phi0.size} coordinates, polar dimension is {problem.polar_dim}"
        )
    return phi0


def assemble_gramian(problem: HUMProblem, y0: SpectralField | None = None):
    r"""Gramian :math:`\Lambda` and right-hand side :math:`-P\psi_1(T)`.

    ``rhs`` is zero when ``y0`` is omitted. Returns ``(gramian, rhs)``.
    """
    p = problem.polar_dim
    rhs = np.zeros(p)
    if y0 is not None:
        rhs = -problem.target.polar_coordinates(problem.free_terminal(y0))
    if p == 0:
        return np.zeros((0, 0)), rhs
    a = problem.constraint_matrix
    g = (a / problem.grid.trapezoid_weights) @ a.T
    g = 0.5 * (g + g.T)
    return g, rhs


def check_eec(y0: SpectralField, u: ControlSignal, problem: HUMProblem) -> float:
    r"""Norm of the polar component of :math:`\chi_\omega y(T; u)` in :math:`L^2(\omega)`."""
    problem.check_state(y0)
    if u.grid != problem.grid:
        raise GridMismatchError("control grid differs from the problem grid")
    if problem.is_trivial:
        return 0.0
    y_t, _ = forward_solve(y0, u, problem.actuator, problem.alpha)
    return float(np.linalg.norm(problem.target.polar_coordinates(y_t)))


def target_norm(y0: SpectralField, problem: HUMProblem) -> float:
    r""":math:`\|\chi_\omega\psi_1(T)\|_{L^2(\omega)}`, the scale steering residuals are measured against."""
    return restrict(problem.free_terminal(y0), problem.target.grid).norm()


def solve_hum(problem: HUMProblem, y0: SpectralField, *, ridge: bool = False) -> HUMSolution:
    """Solve the Gramian system and synthesize the steering control.

    Raises :class:`IllPosedError` when the smallest Gramian eigenvalue is
    below ``1e-12`` times the larger of the largest eigenvalue and the modal
    scale, so a polar space the actuator cannot see at all is caught too;
    the error carries that ratio as its condition estimate.
    With ``ridge`` the diagonal is shifted by ``1e-10`` times the larger of
    the trace and the modal scale instead. A zero right-hand side returns the
    zero control without factorizing.
    """
    gram, rhs = assemble_gramian(problem, y0)
    scale = target_norm(y0, problem)
    p = problem.polar_dim
    if p == 0 or not np.any(rhs):
        phi0 = np.zeros(p)
        u = ControlSignal.zeros(problem.grid)
        cond = _condition(gram) if p else 1.0
        return HUMSolution(phi0, gram, rhs, u, check_eec(y0, u, problem), cond, scale)
    evals = linalg.eigvalsh(gram)
    lo, hi = float(evals[0]), float(evals[-1])
    shift = 0.0
    ref = max(hi, problem.modal_scale)
    if lo < ILL_POSED_RTOL * ref:
        if not ridge:
            cond = ref / lo if lo > 0 else math.inf
            raise IllPosedError(
                f"Gramian is numerically singular (eigenvalues {lo:.3e} .. {hi:.3e}); "
                "the actuator cannot observe every polar direction at this resolution",
                cond,
            )
        shift = RIDGE_FRACTION * max(float(np.trace(gram)), problem.modal_scale)
    mat = gram + shift * np.eye(p)
    phi0 = linalg.cho_solve(linalg.cho_factor(mat), rhs)
    u = observation_signal(phi0, problem)
    cond = (hi + shift) / (lo + shift) if lo + shift > 0 else math.inf
    return HUMSolution(phi0, gram, rhs, u, check_eec(y0, u, problem), cond, scale, shift)


def _condition(gram: np.ndarray) -> float:
    evals = linalg.eigvalsh(gram)
    return float(evals[-1] / evals[0]) if evals[0] > 0 else math.inf

