r"""Riemann-Liouville operators on uniform time grids.

The left integral

.. math::

    ({}_0I_t^\beta s)(t) = \frac{1}{\Gamma(\beta)} \int_0^t (t-\sigma)^{\beta-1} s(\sigma)\,d\sigma

is discretized by the product trapezoid rule: ``s`` is replaced by its
piecewise-linear interpolant, which is then integrated exactly against the
weakly singular kernel. The derivative follows the definition
:math:`{}_0D_t^\alpha = \partial_t\,{}_0I_t^{1-\alpha}` and differentiates the
discrete integral with second-order finite differences.

Signals that behave like :math:`t^\gamma` near the origin (for instance the
:math:`t^{\alpha-1}` profile of a mild solution) can be integrated with
``weight_exponent=gamma``: the quotient :math:`s(t)/t^\gamma` is then treated as
piecewise linear and the weights come from incomplete beta functions, so the
singular factor is integrated without interpolation error. Node 0 is ignored
in that mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from frachum.errors import DomainError, GridMismatchError

__all__ = [
    "Signal",
    "TimeGrid",
    "reflect",
    "right_rl_integral",
    "rl_derivative",
    "rl_integral",
    "rl_integral_matrix",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i*h`` on ``[0, T]`` with ``nt`` nodes."""

    T: float
    nt: int

    def __post_init__(self):
        T = float(self.T)
        if not (math.isfinite(T) and T > 0.0):
            raise DomainError(f"horizon T must be positive, got {self.T!r}")
        if int(self.nt) != self.nt or self.nt < 2:
            raise DomainError(f"nt must be an integer >= 2, got {self.nt!r}")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def h(self) -> float:
        return self.T / (self.nt - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(self.nt)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights of the composite trapezoid rule on the nodes."""
        w = np.full(self.nt, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


@dataclass(frozen=True)
class Signal:
    """A real function sampled on every node of a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.nt,):
            raise GridMismatchError(
                f"signal has shape {v.shape}, grid expects ({self.grid.nt},)"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("signal values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: TimeGrid, fn) -> Signal:
        return cls(grid, fn(grid.nodes))

    def __len__(self) -> int:
        return self.grid.nt


def _check_order(order) -> float:
    b = float(order)
    if not (math.isfinite(b) and 0.0 < b <= 1.0):
        raise DomainError(f"order must lie in (0,1], got {order!r}")
    return b


def _check_exponent(gamma: float) -> float:
    g = float(gamma)
    if not (math.isfinite(g) and g > -1.0):
        raise DomainError(f"weight_exponent must be finite and > -1, got {gamma!r}")
    return g


# {{{ weights


def _second_difference(p: float, m: np.ndarray) -> np.ndarray:
    """``(m+1)^p - 2 m^p + (m-1)^p`` for ``m >= 1`` without cancellation."""
    inv = 1.0 / m
    return m**p * (np.expm1(p * np.log1p(inv)) + np.expm1(p * np.log1p(-inv)))


def _product_trapezoid_unit(beta: float, n: int) -> np.ndarray:
    """Lower-triangular weights on the unit-step grid (``h = 1``)."""
    p = beta + 1.0
    i = np.arange(n)
    m = i[:, None] - i[None, :]
    w = np.zeros((n, n))
    lower = m >= 1
    # (m-1)^p vanishes at m = 1; log1p(-1) is -inf and expm1 maps it to -1
    with np.errstate(divide="ignore"):
        w[lower] = _second_difference(p, m[lower].astype(float))
    # left end: (i-1)^p - (i-1-beta) i^p/i, written as i^p [(1-x)^p - 1 + p x]
    ii = i[1:].astype(float)
    x = 1.0 / ii
    with np.errstate(divide="ignore"):
        w[1:, 0] = ii**p * (np.expm1(p * np.log1p(-x)) + p * x)
    w[i, i] = 1.0
    w[0, 0] = 0.0
    return w / math.gamma(beta + 2.0)


def _row_increments(a: float, b: float, x: np.ndarray, cell: np.ndarray) -> np.ndarray:
    """Increments of ``I_x(a,b)`` between consecutive entries of ``x``, kept at ``cell``.

    Values at or above 1/2 are carried as complements ``I_{1-x}(b,a)`` so that
    increments near ``x = 1`` do not cancel.
    """
    hi = x >= 0.5
    v = np.where(hi, 0.0, special.betainc(a, b, np.where(hi, 0.0, x)))
    c = np.where(hi, special.betainc(b, a, np.where(hi, 1.0 - x, 1.0)), 0.0)
    lo0, hi0 = ~hi[:-1], hi[:-1]
    lo1, hi1 = ~hi[1:], hi[1:]
    d = np.empty(x.size - 1)
    both_lo = lo0 & lo1
    both_hi = hi0 & hi1
    cross = lo0 & hi1
    d[both_lo] = v[1:][both_lo] - v[:-1][both_lo]
    d[both_hi] = c[:-1][both_hi] - c[1:][both_hi]
    d[cross] = (1.0 - c[1:][cross]) - v[:-1][cross]
    return d[cell]


def _weighted_unit(beta: float, gamma: float, n: int) -> np.ndarray:
    """Unit-step weights for ``s = t^gamma g`` with ``g`` piecewise linear."""
    # all points k/i, 0 <= k <= i, rows i >= 1 laid out consecutively
    rows, ks = np.tril_indices(n)
    keep = rows >= 1
    rows, ks = rows[keep], ks[keep]
    x = ks / rows.astype(float)
    # a cell joins two consecutive points of the same row
    cell = rows[:-1] == rows[1:]
    i_idx, k_idx = rows[:-1][cell], ks[:-1][cell]
    ti = i_idx.astype(float)
    m0 = ti ** (beta + gamma) * special.beta(gamma + 1.0, beta)
    m0 = m0 * _row_increments(gamma + 1.0, beta, x, cell)
    m1 = ti ** (beta + gamma + 1.0) * special.beta(gamma + 2.0, beta)
    m1 = m1 * _row_increments(gamma + 2.0, beta, x, cell)
    wg = np.zeros((n, n))
    # index pairs are distinct within each assignment, so plain fancy indexing is safe
    wg[i_idx, k_idx] = (k_idx + 1) * m0 - m1
    wg[i_idx, k_idx + 1] += m1 - k_idx * m0
    wg /= math.gamma(beta)
    # g_0 is extrapolated linearly from g_1, g_2 (held constant if n < 3)
    if n >= 3:
        wg[:, 1] += 2.0 * wg[:, 0]
        wg[:, 2] -= wg[:, 0]
    else:
        wg[:, 1] += wg[:, 0]
    wg[:, 0] = 0.0
    j = np.arange(1, n, dtype=float)
    wg[:, 1:] /= j**gamma
    return wg


@lru_cache(maxsize=64)
def _unit_matrix(beta: float, n: int, gamma: float) -> np.ndarray:
    w = _product_trapezoid_unit(beta, n) if gamma == 0.0 else _weighted_unit(beta, gamma, n)
    w.setflags(write=False)
    return w


def rl_integral_matrix(order, grid: TimeGrid, weight_exponent: float = 0.0) -> np.ndarray:
    """Matrix ``W`` with ``(W @ s)[i]`` the product-trapezoid value of ``0I^order s`` at ``t_i``."""
    b = _check_order(order)
    g = _check_exponent(weight_exponent)
    return grid.h**b * _unit_matrix(b, grid.nt, g)


# }}}


def rl_integral(order, s: Signal, weight_exponent: float = 0.0) -> Signal:
    """Left Riemann-Liouville integral of ``s`` at every grid node.

    >>> g = TimeGrid(1.0, 5)
    >>> rl_integral(1.0, Signal(g, np.ones(5))).values
    array([0.  , 0.25, 0.5 , 0.75, 1.  ])
    """
    w = rl_integral_matrix(order, s.grid, weight_exponent)
    return Signal(s.grid, w @ s.values)


def right_rl_integral(order, s: Signal, weight_exponent: float = 0.0) -> Signal:
    r"""Right integral :math:`\frac{1}{\Gamma(\beta)}\int_t^T (\sigma-t)^{\beta-1}s(\sigma)d\sigma`.

    The weights are those of :func:`rl_integral` with the node index measured
    from ``T``; ``weight_exponent`` then refers to a :math:`(T-t)^\gamma` factor.
    """
    w = rl_integral_matrix(order, s.grid, weight_exponent)[::-1, ::-1]
    return Signal(s.grid, w @ s.values)


def reflect(s: Signal) -> Signal:
    """Time reversal ``(Qs)(t) = s(T - t)`` on the grid."""
    return Signal(s.grid, s.values[::-1])


def rl_derivative(order, s: Signal, weight_exponent: float = 0.0) -> Signal:
    """Discrete ``0D^order s = d/dt 0I^(1-order) s``.

    Central differences in the interior, second-order one-sided differences at
    both ends. The value at node 0 resolves a derivative that is generically
    unbounded there and should not be used for pointwise comparisons.
    """
    a = _check_order(order)
    if a == 1.0:
        inner = s.values
    else:
        inner = rl_integral(1.0 - a, s, weight_exponent).values
    if weight_exponent != 0.0 and a < 1.0:
        # node 0 carries no sample in weighted mode; difference from node 1 on
        d = np.empty_like(inner)
        d[1:] = _gradient(inner[1:], s.grid.h)
        d[0] = d[1]
        return Signal(s.grid, d)
    return Signal(s.grid, _gradient(inner, s.grid.h))


def _gradient(v: np.ndarray, h: float) -> np.ndarray:
    if v.size < 2:
        return np.zeros_like(v)
    return np.gradient(v, h, edge_order=2 if v.size >= 3 else 1)
