r"""Mild solutions in spectral coordinates and the input-to-state operator.

Each mode evolves independently. With :math:`k_n(\tau) = \tau^{\alpha-1}E_{\alpha,\alpha}(\lambda_n\tau^\alpha)`,

.. math::

    y_n(t) = k_n(t)\,y_{0,n} + b_n \int_0^t k_n(t-s)\,u(s)\,ds .

Controls are piecewise linear between grid nodes and the convolution is
integrated exactly against the singular kernel, using the first two
antiderivatives of :math:`k_n` (:func:`frachum.mlf.kernel_primitives`). The
resulting weights are Toeplitz in the node offset, so one set of weights per
mode serves the whole trajectory.

:func:`apply_Hstar` is the exact adjoint of :func:`apply_H` with respect to the
trapezoid inner product on controls; its value at a node is the hat-weighted
average of the adjoint kernel, which stays finite at the singular end ``t = T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from frachum.errors import DomainError, GridMismatchError
from frachum.fracops import Signal, TimeGrid
from frachum.mlf import FracOrder, _as_alpha, kernel_primitives, kernel_values
from frachum.spectral import (
    Actuator,
    SpectralBasis,
    SpectralField,
    TargetSubspace,
    actuator_coefficients,
)

__all__ = [
    "ControlSignal",
    "ModalWeights",
    "Trajectory",
    "apply_H",
    "apply_Hstar",
    "backward_solve",
    "forward_solve",
    "free_solution",
    "modal_weights",
]


class ControlSignal(Signal):
    """A scalar control sampled on a time grid (one actuator)."""

    @classmethod
    def zeros(cls, grid: TimeGrid) -> ControlSignal:
        return cls(grid, np.zeros(grid.nt))

    def energy(self) -> float:
        r"""Discrete :math:`\tfrac12\int_0^T u^2\,dt` with trapezoid weights."""
        return 0.5 * float(np.sum(self.grid.trapezoid_weights * self.values**2))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.grid.trapezoid_weights * self.values**2)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Modal coefficients at every node of ``grid``, shape ``(nt, N)``.

    For ``alpha < 1`` one end of the grid may be singular (``t = 0`` for the
    free forward solution, ``t = T`` for the backward solution). That row of
    :attr:`coefficients` holds NaN and :attr:`singular_node` names it;
    :attr:`scaled` holds the finite values multiplied by
    ``dist**(1 - alpha)``, ``dist`` being the distance to the singular end.
    """

    grid: TimeGrid
    basis: SpectralBasis
    coefficients: np.ndarray = field(repr=False)
    scaled: np.ndarray = field(repr=False)
    singular_node: int | None = None

    def __post_init__(self):
        shape = (self.grid.nt, self.basis.N)
        for name in ("coefficients", "scaled"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise GridMismatchError(f"{name} has shape {a.shape}, expected {shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        keep = np.ones(self.grid.nt, dtype=bool)
        if self.singular_node is not None:
            keep[self.singular_node] = False
        if not np.all(np.isfinite(self.coefficients[keep])):
            raise DomainError("trajectory has non-finite values at regular nodes")

    def state(self, i: int) -> SpectralField:
        i = range(self.grid.nt)[i]
        if i == self.singular_node:
            raise DomainError(f"node {i} is singular; use the scaled values there")
        return SpectralField(self.basis, self.coefficients[i])

    @property
    def states(self) -> tuple[SpectralField | None, ...]:
        """One field per node, ``None`` at the singular node."""
        return tuple(
            None if i == self.singular_node else self.state(i) for i in range(self.grid.nt)
        )

    def mode(self, n: int) -> np.ndarray:
        """Coefficient curve of mode ``n`` (1-based)."""
        return self.coefficients[:, n - 1]


# {{{ convolution weights


@dataclass(frozen=True, eq=False)
class ModalWeights:
    r"""Product-trapezoid weights of the modal convolutions on a grid.

    ``d[n, m]`` integrates :math:`k_n` against the hat function centred at offset
    ``m*h`` (a half hat for ``m = 0``) and ``e[n, m]`` against the half hat at the
    far end ``t_0`` seen from ``t_m``. Then

    .. math::

        \int_0^{t_i} k_n(t_i - s)u(s)\,ds = e_{n,i}u_0 + \sum_{j=1}^{i} d_{n,i-j}u_j .
    """

    alpha: float
    grid: TimeGrid
    d: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)

    @property
    def terminal(self) -> np.ndarray:
        """``W[n, j]``: weight of ``u_j`` in the convolution evaluated at ``T``."""
        nt = self.grid.nt
        w = self.d[:, nt - 1 - np.arange(nt)].copy()
        w[:, 0] = self.e[:, nt - 1]
        return w

    def convolve(self, u: np.ndarray) -> np.ndarray:
        """Convolution at every node for every mode, shape ``(nt, N)``."""
        nt = self.grid.nt
        out = np.empty((nt, self.d.shape[0]))
        for n in range(self.d.shape[0]):
            out[:, n] = self.e[n] * u[0]
            out[1:, n] += np.convolve(self.d[n], u[1:])[: nt - 1]
        return out


def _weights(alpha: float, lam: np.ndarray, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    h, nt = grid.h, grid.nt
    tau = h * np.arange(nt + 1)
    d = np.empty((lam.size, nt))
    e = np.zeros((lam.size, nt))
    for n, lm in enumerate(lam):
        k1, k2 = kernel_primitives(alpha, lm, tau)
        d[n, 0] = k2[1] / h
        d[n, 1:] = (k2[2:] - 2.0 * k2[1:-1] + k2[:-2])[: nt - 1] / h
        e[n, 1:] = k1[1:nt] - (k2[1:nt] - k2[: nt - 1]) / h
    return d, e


@lru_cache(maxsize=32)
def _cached_weights(alpha: float, lam: tuple[float, ...], grid: TimeGrid) -> ModalWeights:
    d, e = _weights(alpha, np.asarray(lam), grid)
    d.setflags(write=False)
    e.setflags(write=False)
    return ModalWeights(alpha, grid, d, e)


def modal_weights(alpha, basis: SpectralBasis, grid: TimeGrid) -> ModalWeights:
    """Cached convolution weights for every mode of ``basis`` on ``grid``."""
    return _cached_weights(_as_alpha(alpha), tuple(basis.eigenvalues.tolist()), grid)


# }}}


def _resolve_grid(grid: TimeGrid, T) -> None:
    if T is None:
        return
    if isinstance(T, TimeGrid):
        if T != grid:
            raise GridMismatchError(f"control grid {grid} differs from {T}")
        return
    T = float(T)
    if not T > 0.0:
        raise DomainError(f"horizon T must be positive, got {T!r}")
    if abs(T - grid.T) > 1e-12 * max(1.0, T):
        raise GridMismatchError(f"control grid ends at {grid.T}, horizon is {T}")


def free_solution(y0: SpectralField, alpha, t) -> np.ndarray:
    r"""Uncontrolled modal coefficients :math:`k_n(t)y_{0,n}` at times ``t > 0``, shape ``(len(t), N)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise DomainError("the free solution is evaluated at t > 0 only")
    a = _as_alpha(alpha)
    out = np.empty((t.size, y0.basis.N))
    for n, lm in enumerate(y0.basis.eigenvalues):
        out[:, n] = kernel_values(a, lm, t) * y0.coefficients[n]
    return out


def apply_H(
    u: ControlSignal, act: Actuator, alpha, T=None, *, basis: SpectralBasis
) -> SpectralField:
    r"""Control-to-state map :math:`Hu = \int_0^T k(T-s)Bu(s)\,ds` at the horizon."""
    _resolve_grid(u.grid, T)
    b = actuator_coefficients(act, basis)
    w = modal_weights(alpha, basis, u.grid)
    return SpectralField(basis, b * (w.terminal @ u.values))


def apply_Hstar(
    v: SpectralField, act: Actuator, alpha, grid: TimeGrid, *, pointwise: bool = False
) -> ControlSignal:
    r"""Adjoint :math:`(H^*v)(s) = \sum_n b_n k_n(T-s) v_n`.

    By default the exact discrete adjoint of :func:`apply_H` under the trapezoid
    inner product is returned. ``pointwise=True`` samples the kernel at the
    nodes instead; for ``alpha < 1`` the singular value at ``s = T`` is then
    replaced by linear extrapolation from the two preceding nodes.
    """
    basis = v.basis
    b = actuator_coefficients(act, basis)
    bv = b * v.coefficients
    a = _as_alpha(alpha)
    if not pointwise:
        w = modal_weights(a, basis, grid)
        return ControlSignal(grid, (bv @ w.terminal) / grid.trapezoid_weights)
    tau = grid.T - grid.nodes
    vals = np.empty(grid.nt)
    if a == 1.0:
        vals[:] = bv @ np.exp(np.outer(basis.eigenvalues, tau))
    else:
        ker = np.array([kernel_values(a, lm, tau[:-1]) for lm in basis.eigenvalues])
        vals[:-1] = bv @ ker
        vals[-1] = 2.0 * vals[-2] - vals[-3] if grid.nt >= 3 else vals[-2]
    return ControlSignal(grid, vals)


def forward_solve(
    y0: SpectralField, u: ControlSignal, act: Actuator, alpha, T=None
) -> tuple[SpectralField, Trajectory]:
    """State at the horizon and the full trajectory for initial datum ``y0`` and control ``u``."""
    _resolve_grid(u.grid, T)
    a = _as_alpha(alpha)
    grid, basis = u.grid, y0.basis
    b = actuator_coefficients(act, basis)
    w = modal_weights(a, basis, grid)
    t = grid.nodes
    forced = w.convolve(u.values) * b
    coef = np.empty((grid.nt, basis.N))
    coef[1:] = free_solution(y0, a, t[1:]) + forced[1:]
    if a == 1.0:
        coef[0] = y0.coefficients
        scaled = coef.copy()
        singular = None
    else:
        coef[0] = np.nan
        scaled = np.empty_like(coef)
        scaled[1:] = coef[1:] * t[1:, None] ** (1.0 - a)
        scaled[0] = y0.coefficients / FracOrder(a).gamma_alpha
        singular = 0
    terminal = SpectralField(basis, coef[-1])
    return terminal, Trajectory(grid, basis, coef, scaled, singular)


def backward_solve(phi0, target: TargetSubspace, alpha, grid: TimeGrid) -> Trajectory:
    r"""Adjoint trajectory :math:`\varphi(t) = k(T-t)\chi_\omega^*\varphi_0` for polar coordinates ``phi0``.

    The node ``t = T`` is singular for ``alpha < 1`` and is flagged.
    """
    phi0 = np.asarray(phi0, dtype=float).reshape(-1)
    if phi0.size != target.polar_dim:
        raise GridMismatchError(
            f"phi0 has {phi0.size} coordinates, polar dimension is {target.polar_dim}"
        )
    a = _as_alpha(alpha)
    basis = target.grid.basis
    c = phi0 @ target.polar_coefficients
    tau = grid.T - grid.nodes
    coef = np.empty((grid.nt, basis.N))
    scaled = np.empty_like(coef)
    if a == 1.0:
        coef[:] = np.exp(np.outer(tau, basis.eigenvalues)) * c
        scaled[:] = coef
        singular = None
    else:
        ker = np.array([kernel_values(a, lm, tau[:-1]) for lm in basis.eigenvalues]).T
        coef[:-1] = ker * c
        coef[-1] = np.nan
        scaled[:-1] = coef[:-1] * tau[:-1, None] ** (1.0 - a)
        scaled[-1] = c / FracOrder(a).gamma_alpha
        singular = grid.nt - 1
    return Trajectory(grid, basis, coef, scaled, singular)
