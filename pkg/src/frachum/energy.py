r"""Minimum-energy certification and the penalization scheme.

Three independent routes to the minimum-energy control:

* :func:`build_constraint_map` applies :func:`frachum.solver.apply_H` to every
  hat control and records the polar coordinates of the terminal state, giving
  the affine admissible set ``{u : A u + offset = 0}``.
* :func:`minimum_norm_oracle` solves that constraint for the smallest discrete
  energy :math:`\tfrac12\int u^2` with an SVD-based weighted pseudoinverse.
* :func:`penalized_solve` keeps the state as an unknown, replaces the state
  equation by the quadratic penalty

  .. math::

      J_\epsilon(u, z) = \tfrac12\int_0^T u^2\,dt
          + \tfrac{1}{2\epsilon}\int_Q ({}_0D^\alpha_t z - Az - Bu)^2\,dQ,

  and imposes only the terminal condition. The state is split as
  ``z = psi_1 + w`` with ``psi_1`` the free mild solution. The discrete
  operator :math:`D^\alpha_h - A` is the inverse of the product-trapezoid
  mild convolution, so a zero residual means an exact discrete mild solution
  and the penalized minimizers converge to the HUM control as
  :math:`\epsilon \to 0`. The quadratic problem is solved in closed form
  through its KKT conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from frachum.errors import DomainError, IllPosedError, InfeasibleError
from frachum.fracops import TimeGrid
from frachum.hum import HUMProblem
from frachum.solver import (
    ControlSignal,
    ModalWeights,
    Trajectory,
    apply_H,
    free_solution,
    modal_weights,
)
from frachum.spectral import SpectralField, TargetSubspace

__all__ = [
    "ConstraintMap",
    "PenalizedIterate",
    "adjoint_diagnostics",
    "build_constraint_map",
    "constraint_kernel",
    "minimum_norm_oracle",
    "penalized_solve",
    "penalty_operators",
    "penalty_residual",
]

FEASIBILITY_RTOL = 1e-8
ORACLE_RTOL = 1e-12
DEFAULT_EPSILONS = (1e-2, 1e-4, 1e-6)


@dataclass(frozen=True, eq=False)
class ConstraintMap:
    """Affine map from control samples to polar coordinates of ``chi_omega y(T)``.

    ``scale`` is a reference size for squared singular values of the
    weighted map; directions below ``1e-12 * scale`` count as unreachable.
    Without it the largest singular value sets the scale.
    """

    matrix: np.ndarray = field(repr=False)
    offset: np.ndarray = field(repr=False)
    scale: float | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        o = np.array(self.offset, dtype=float).reshape(-1)
        if m.ndim != 2 or m.shape[0] != o.size:
            raise DomainError(f"matrix {m.shape} and offset {o.shape} disagree")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(o))):
            raise DomainError("constraint map must be finite")
        m.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", o)

    def __call__(self, u) -> np.ndarray:
        values = u.values if isinstance(u, ControlSignal) else np.asarray(u, dtype=float)
        return self.matrix @ values + self.offset


def build_constraint_map(problem: HUMProblem, y0: SpectralField) -> ConstraintMap:
    """Column ``j`` is the polar part of ``H`` applied to the hat control at node ``j``."""
    grid = problem.grid
    target = problem.target
    cols = np.empty((target.polar_dim, grid.nt))
    hat = np.zeros(grid.nt)
    for j in range(grid.nt):
        hat[j] = 1.0
        y = apply_H(ControlSignal(grid, hat), problem.actuator, problem.alpha, basis=problem.basis)
        cols[:, j] = target.polar_coordinates(y)
        hat[j] = 0.0
    offset = target.polar_coordinates(problem.free_terminal(y0))
    return ConstraintMap(cols, offset, problem.modal_scale)


def minimum_norm_oracle(cmap: ConstraintMap, grid: TimeGrid) -> ControlSignal:
    r"""Least-energy control with ``A u + offset = 0`` under the trapezoid weights.

    With :math:`\Omega` the weight matrix, ``v = Omega^{1/2} u`` solves the
    minimum-Euclidean-norm problem for ``A Omega^{-1/2}``, found by SVD with
    singular values below ``1e-6 * sqrt(scale)`` discarded. Raises
    :class:`InfeasibleError` when the remaining range misses ``-offset``.
    """
    if cmap.matrix.shape[1] != grid.nt:
        raise DomainError("constraint map and grid disagree on the number of nodes")
    if not np.any(cmap.offset):
        return ControlSignal.zeros(grid)
    sw = np.sqrt(grid.trapezoid_weights)
    a = cmap.matrix / sw
    uu, sv, vt = linalg.svd(a, full_matrices=False)
    ref = max(float(sv[0]) ** 2 if sv.size else 0.0, cmap.scale or 0.0)
    keep = sv > math.sqrt(ORACLE_RTOL * ref)
    coef = (uu[:, keep].T @ -cmap.offset) / sv[keep]
    v = vt[keep].T @ coef
    miss = np.linalg.norm(a @ v + cmap.offset)
    if miss > FEASIBILITY_RTOL * np.linalg.norm(cmap.offset):
        raise InfeasibleError(
            f"offset is not in the range of the constraint map (miss {miss:.3e})"
        )
    return ControlSignal(grid, v / sw)


def constraint_kernel(cmap: ConstraintMap, grid: TimeGrid) -> np.ndarray:
    """Columns spanning ``{du : A du = 0}``, orthonormal in the trapezoid inner product."""
    sw = np.sqrt(grid.trapezoid_weights)
    return linalg.null_space(cmap.matrix / sw) / sw[:, None]


# {{{ penalization


@dataclass(frozen=True, eq=False)
class PenaltyOperators:
    r"""Discrete residual of the modal state equation :math:`D^\alpha w - \lambda_n w = b_n u`.

    The discrete operator :math:`D^\alpha_h - \lambda_n` is defined as the
    inverse of the product-trapezoid mild convolution on nodes ``1..nt-1``:
    ``source[n]`` recovers the input ``f`` that produces ``w_n`` through the
    mild formula, and the residual is ``source - b_n u``. A pair with zero
    residual is exactly a discrete mild solution.
    """

    grid: TimeGrid
    weights: ModalWeights = field(repr=False)
    b: np.ndarray = field(repr=False)

    def forward(self, f: np.ndarray) -> np.ndarray:
        """Mild response ``(nt, N)`` to per-mode sources ``f`` of shape ``(N, nt)``."""
        nt = self.grid.nt
        out = np.zeros((nt, f.shape[0]))
        for n in range(f.shape[0]):
            out[:, n] = self.weights.e[n] * f[n, 0]
            out[1:, n] += np.convolve(self.weights.d[n], f[n, 1:])[: nt - 1]
        return out

    def residual(self, w: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Residual on nodes ``1..nt-1`` for controlled parts ``w`` of shape ``(nt, N)``."""
        nt = self.grid.nt
        out = np.empty((w.shape[1], nt - 1))
        for n in range(w.shape[1]):
            k = linalg.toeplitz(self.weights.d[n, : nt - 1], np.zeros(nt - 1))
            rhs = w[1:, n] - self.b[n] * self.weights.e[n, 1:] * u[0]
            out[n] = linalg.solve_triangular(k, rhs, lower=True) - self.b[n] * u[1:]
        return out


def penalty_operators(problem: HUMProblem) -> PenaltyOperators:
    w = modal_weights(problem.alpha, problem.basis, problem.grid)
    return PenaltyOperators(problem.grid, w, np.asarray(problem.actuator_coefficients))


@dataclass(frozen=True, eq=False)
class PenalizedIterate:
    """Minimizer of the penalized functional for one ``epsilon``.

    ``p_eps`` holds the adjoint state ``-(residual)/epsilon`` at nodes
    ``1..nt-1``, shape ``(nt - 1, N)``. ``terminal_adjoint`` holds the polar
    coordinates of its terminal datum on ``omega``.
    """

    epsilon: float
    u_eps: ControlSignal = field(repr=False)
    z_eps: Trajectory = field(repr=False)
    p_eps: np.ndarray = field(repr=False)
    terminal_adjoint: np.ndarray = field(repr=False)
    objective: float
    penalty_residual: float
    terminal_residual: float
    coercivity: float
    condition_estimate: float

    @property
    def energy(self) -> float:
        return self.u_eps.energy()


def _state_trajectory(problem: HUMProblem, y0: SpectralField, w: np.ndarray) -> Trajectory:
    grid, basis = problem.grid, problem.basis
    a = problem.alpha.alpha
    t = grid.nodes
    coef = np.zeros((grid.nt, basis.N))
    coef[1:] = free_solution(y0, a, t[1:]) + w[1:]
    if a == 1.0:
        coef[0] = y0.coefficients + w[0]
        return Trajectory(grid, basis, coef, coef.copy(), None)
    coef[0] = np.nan
    scaled = np.empty_like(coef)
    scaled[1:] = coef[1:] * t[1:, None] ** (1.0 - a)
    scaled[0] = y0.coefficients / math.gamma(a)
    return Trajectory(grid, basis, coef, scaled, 0)


def penalty_residual(problem: HUMProblem, z: Trajectory, u: ControlSignal, y0: SpectralField,
                     operators: PenaltyOperators | None = None) -> float:
    r"""Discrete :math:`\|{}_0D^\alpha_t z - Az - Bu\|_{L^2(Q)}` for a state trajectory ``z``."""
    ops = penalty_operators(problem) if operators is None else operators
    t = problem.grid.nodes
    w = np.zeros_like(z.coefficients)
    w[1:] = z.coefficients[1:] - free_solution(y0, problem.alpha, t[1:])
    r = ops.residual(w, u.values)
    return math.sqrt(float(np.sum(problem.grid.trapezoid_weights[1:] * r**2)))


def penalized_solve(
    problem: HUMProblem,
    epsilon: float,
    y0: SpectralField,
    operators: PenaltyOperators | None = None,
) -> PenalizedIterate:
    r"""Exact minimizer of :math:`J_\epsilon` under the terminal condition ``P z(T) = 0``.

    With residual ``v_n`` as unknown, ``w_n = b_n K_n u + K_n v_n``, the
    terminal condition reads ``A u + sum_n c_n k_n . v_n + offset = 0`` and the
    KKT system collapses to ``(Lambda + eps * C diag(kappa) C^T) mu = offset``.
    """
    eps = float(epsilon)
    if not (math.isfinite(eps) and eps > 0.0):
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    ops = penalty_operators(problem) if operators is None else operators
    grid = problem.grid
    nt = grid.nt
    om = grid.trapezoid_weights
    om1 = om[1:]
    target = problem.target
    c = target.polar_coefficients  # (p, N)
    offset = target.polar_coordinates(problem.free_terminal(y0))
    a_mild = problem.constraint_matrix

    # k_n: weights of the source samples 1..nt-1 in w_n(T)
    k = ops.weights.terminal[:, 1:]
    kappa = np.sum(k**2 / om1, axis=1)
    s = (a_mild / om) @ a_mild.T + eps * (c * kappa) @ c.T
    s = 0.5 * (s + s.T)
    if target.polar_dim:
        evals = linalg.eigvalsh(s)
        cond = float(evals[-1] / evals[0]) if evals[0] > 0 else math.inf
        if not evals[0] > 1e-14 * evals[-1]:
            raise IllPosedError("penalized normal equations are numerically singular", cond)
        mu = linalg.cho_solve(linalg.cho_factor(s), offset)
    else:
        cond, mu = 1.0, np.zeros(0)

    u = -(a_mild.T @ mu) / om
    v = -eps * (k / om1) * (c.T @ mu)[:, None]  # residual, (N, nt-1)
    src = np.zeros((problem.basis.N, nt))
    src[:, 0] = ops.b * u[0]
    src[:, 1:] = ops.b[:, None] * u[None, 1:] + v
    w = ops.forward(src)
    z = _state_trajectory(problem, y0, w)

    u_sig = ControlSignal(grid, u)
    pen = float(np.sum(om1 * v**2))
    objective = u_sig.energy() + pen / (2.0 * eps)
    p = -(v / eps).T
    obs = p @ ops.b
    tnorm = float(np.linalg.norm(mu))
    coercivity = float(np.sum(om1 * obs**2)) / tnorm**2 if tnorm > 0 else math.inf
    term_res = float(np.linalg.norm(target.polar_coordinates(SpectralField(problem.basis, z.coefficients[-1]))))
    return PenalizedIterate(
        eps, u_sig, z, p, mu.copy(), objective, math.sqrt(pen), term_res, coercivity, cond
    )


def adjoint_diagnostics(iterate: PenalizedIterate, target: TargetSubspace, eta_terminal=None, seed: int = 0) -> dict:
    r"""Orthogonality checks on the terminal adjoint state.

    ``g_ratio`` is :math:`\|P_G\chi_\omega p_\epsilon(T)\| / \|\chi_\omega p_\epsilon(T)\|`
    for the terminal datum, ``last_node_ratio`` the same quantity for the
    adjoint state at the last grid node before ``T``. ``pairings`` are
    :math:`\langle\eta(T), p_\epsilon(T)\rangle_{L^2(\omega)}` for terminal values
    ``eta_terminal`` in ``G`` (rows of coordinates on the ``G`` basis; ten
    random ones by default).
    """
    grid = target.grid
    p_t = iterate.terminal_adjoint @ target.polar_basis if target.polar_dim else np.zeros(grid.size)
    p_norm = grid.norm(p_t)
    if target.g_dim:
        g_part = np.linalg.norm((target.g_basis * grid.weights) @ p_t)
    else:
        g_part = 0.0
    ratio = g_part / p_norm if p_norm > 0 else 0.0

    last = iterate.p_eps[-1] @ grid.modes
    last_norm = grid.norm(last)
    last_g = np.linalg.norm((target.g_basis * grid.weights) @ last) if target.g_dim else 0.0
    last_ratio = last_g / last_norm if last_norm > 0 else 0.0

    if eta_terminal is None:
        rng = np.random.default_rng(seed)
        eta_terminal = rng.standard_normal((10, target.g_dim))
    eta = np.atleast_2d(np.asarray(eta_terminal, dtype=float)).reshape(-1, target.g_dim)
    pairings = [grid.inner(e @ target.g_basis, p_t) for e in eta] if target.g_dim else []
    return {
        "epsilon": iterate.epsilon,
        "g_ratio": float(ratio),
        "last_node_ratio": float(last_ratio),
        "terminal_norm": float(p_norm),
        "pairings": [float(x) for x in pairings],
        "coercivity": float(iterate.coercivity),
    }


# }}}
