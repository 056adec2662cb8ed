r"""Spatial discretization: Dirichlet eigenbasis, regions, actuators and targets.

The diffusion operator is the 1-D Dirichlet Laplacian on :math:`\Omega = (0, L)`
with eigenpairs

.. math::

    \lambda_n = -(n\pi/L)^2, \qquad e_n(x) = \sqrt{2/L}\,\sin(n\pi x/L).

States are :class:`SpectralField` coefficient vectors on the first ``N`` modes.
Functions on a subregion :math:`\omega` are sampled on the nodes of a composite
Simpson rule (:class:`RegionGrid`), and :func:`restrict` / :func:`extend` are
exact adjoints under that discrete :math:`L^2(\omega)` inner product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from frachum.errors import (
    DegenerateActuatorError,
    DomainError,
    GridMismatchError,
    RankDeficiencyError,
)

__all__ = [
    "PointActuator",
    "Region",
    "RegionFunction",
    "RegionGrid",
    "SpectralBasis",
    "SpectralField",
    "TargetSubspace",
    "ZoneActuator",
    "actuator_coefficients",
    "build_target",
    "extend",
    "project",
    "restrict",
]

_DEGENERATE_TOL = 1e-12
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SpectralBasis:
    """First ``N`` Dirichlet eigenpairs on ``(0, L)`` and the spatial resolution ``nx``.

    ``nx`` is the number of Simpson nodes across the whole domain; a region of
    length ``l`` receives about ``nx * l / L`` of them. The default ``20 N + 1``
    keeps the discrete Gram matrix of the modes at the identity to rounding.
    Subclasses may override :attr:`eigenvalues` and :meth:`evaluate` (and
    :meth:`profile_integrals`) to plug in other self-adjoint eigenpairs.
    """

    L: float = 1.0
    N: int = 20
    nx: int | None = None

    def __post_init__(self):
        L = float(self.L)
        if not (math.isfinite(L) and L > 0.0):
            raise DomainError(f"domain length L must be positive, got {self.L!r}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"mode count N must be an integer >= 1, got {self.N!r}")
        nx = 20 * int(self.N) + 1 if self.nx is None else self.nx
        if int(nx) != nx or nx < 3:
            raise DomainError(f"nx must be an integer >= 3, got {self.nx!r}")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "nx", int(nx))

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(1, self.N + 1) * (math.pi / self.L)

    @property
    def eigenvalues(self) -> np.ndarray:
        return -self.wavenumbers**2

    def evaluate(self, x) -> np.ndarray:
        """Mode values ``e_n(x)`` as an ``(N, len(x))`` array."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return math.sqrt(2.0 / self.L) * np.sin(np.outer(self.wavenumbers, x))

    def profile_integrals(self, x0: float, x1: float, p: float, q: float) -> np.ndarray:
        r"""Exact :math:`\int_{x_0}^{x_1} (p + q x)\,e_n(x)\,dx` for every mode."""
        k = self.wavenumbers

        def anti(x):
            return -(p + q * x) * np.cos(k * x) / k + q * np.sin(k * x) / k**2

        return math.sqrt(2.0 / self.L) * (anti(x1) - anti(x0))

    def field(self, coefficients) -> SpectralField:
        return SpectralField(self, coefficients)

    def zero(self) -> SpectralField:
        return SpectralField(self, np.zeros(self.N))

    def mode(self, n: int) -> SpectralField:
        """The eigenfunction ``e_n`` (1-based) as a field."""
        if not 1 <= n <= self.N:
            raise DomainError(f"mode index must lie in 1..{self.N}, got {n}")
        c = np.zeros(self.N)
        c[n - 1] = 1.0
        return SpectralField(self, c)


@dataclass(frozen=True)
class SpectralField:
    """A state on ``Omega`` given by its coefficients on ``basis``."""

    basis: SpectralBasis
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (self.basis.N,):
            raise GridMismatchError(
                f"field has {c.shape} coefficients, basis has {self.basis.N} modes"
            )
        if not np.all(np.isfinite(c)):
            raise DomainError("field coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def evaluate(self, x) -> np.ndarray:
        return self.coefficients @ self.basis.evaluate(x)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def _other(self, other: SpectralField) -> np.ndarray:
        if other.basis != self.basis:
            raise GridMismatchError("fields live on different bases")
        return other.coefficients

    def __add__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.basis, self.coefficients + self._other(other))

    def __sub__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.basis, self.coefficients - self._other(other))

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField(self.basis, float(scalar) * self.coefficients)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Region:
    """A finite union of disjoint closed intervals, stored sorted."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        if not ivs:
            raise DomainError("region needs at least one interval")
        for a, b in ivs:
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise DomainError(f"interval ({a}, {b}) is empty or not finite")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 <= b0:
                raise DomainError(f"intervals overlap or touch at {a1}")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def interval(cls, a: float, b: float) -> Region:
        return cls(((a, b),))

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def check_within(self, L: float) -> None:
        lo, hi = self.intervals[0][0], self.intervals[-1][1]
        if lo < 0.0 or hi > L:
            raise DomainError(f"region [{lo}, {hi}] leaves the domain [0, {L}]")


@dataclass(frozen=True, eq=False)
class RegionGrid:
    """Composite Simpson nodes and weights on a region, tied to a basis."""

    basis: SpectralBasis
    region: Region
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, basis: SpectralBasis, region: Region) -> RegionGrid:
        region.check_within(basis.L)
        xs, ws = [], []
        for a, b in region.intervals:
            m = max(2, int(math.ceil((basis.nx - 1) * (b - a) / basis.L)))
            m += m % 2
            x = np.linspace(a, b, m + 1)
            w = np.full(m + 1, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            xs.append(x)
            ws.append(w * (b - a) / (3.0 * m))
        nodes, weights = np.concatenate(xs), np.concatenate(ws)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        return cls(basis, region, nodes, weights)

    @cached_property
    def modes(self) -> np.ndarray:
        """Restricted eigenfunctions, ``(N, K)`` with ``K`` region nodes."""
        m = self.basis.evaluate(self.nodes)
        m.setflags(write=False)
        return m

    @property
    def size(self) -> int:
        return self.nodes.size

    def inner(self, u, v) -> float:
        return float(np.sum(self.weights * np.asarray(u) * np.asarray(v)))

    def norm(self, u) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def gram(self, rows) -> np.ndarray:
        """Discrete Gram matrix of the sampled functions in ``rows``."""
        rows = np.atleast_2d(rows)
        return (rows * self.weights) @ rows.T


@dataclass(frozen=True, eq=False)
class RegionFunction:
    """A function on a region, sampled at the nodes of a :class:`RegionGrid`."""

    grid: RegionGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise GridMismatchError(f"expected {self.grid.size} samples, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return self.grid.norm(self.values)


def _region_grid(basis: SpectralBasis, region: Region | RegionGrid) -> RegionGrid:
    if isinstance(region, RegionGrid):
        if region.basis != basis:
            raise GridMismatchError("region grid was built for a different basis")
        return region
    return _cached_grid(basis, region)


@lru_cache(maxsize=128)
def _cached_grid(basis: SpectralBasis, region: Region) -> RegionGrid:
    return RegionGrid.build(basis, region)


def restrict(y: SpectralField, region: Region | RegionGrid) -> RegionFunction:
    """Pointwise values of ``y`` on the quadrature nodes of ``region``."""
    grid = _region_grid(y.basis, region)
    return RegionFunction(grid, y.coefficients @ grid.modes)


def extend(v: RegionFunction) -> SpectralField:
    r"""Zero extension to :math:`\Omega` followed by projection on the modes.

    ``c_n = \int_\omega v e_n`` by the region's Simpson rule, so that
    ``<restrict(y), v>_omega == <y, extend(v)>`` holds to rounding.
    """
    g = v.grid
    return SpectralField(g.basis, g.modes @ (g.weights * v.values))


def project(v: RegionFunction) -> RegionFunction:
    """Discrete :math:`L^2(\\omega)` projection onto the span of the restricted modes."""
    g = v.grid
    # least squares on the weighted samples avoids squaring the Gram condition number
    sw = np.sqrt(g.weights)
    coef = np.linalg.lstsq((g.modes * sw).T, sw * v.values, rcond=None)[0]
    return RegionFunction(g, coef @ g.modes)


# {{{ actuators


@dataclass(frozen=True)
class ZoneActuator:
    """Control distributed over ``[start, stop]`` with spatial profile ``f``.

    ``profile`` is either a constant or a table ``(xs, fs)`` interpolated
    linearly (and held constant outside the listed abscissae).
    """

    start: float
    stop: float
    profile: float | tuple[tuple[float, ...], tuple[float, ...]] = 1.0

    def __post_init__(self):
        a, b = float(self.start), float(self.stop)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise DomainError(f"actuator support ({self.start}, {self.stop}) is empty")
        object.__setattr__(self, "start", a)
        object.__setattr__(self, "stop", b)
        p = self.profile
        if isinstance(p, tuple) and len(p) == 2 and not np.isscalar(p[0]):
            xs = tuple(float(x) for x in p[0])
            fs = tuple(float(f) for f in p[1])
            if len(xs) != len(fs) or len(xs) < 2:
                raise DomainError("profile table needs matching xs, fs of length >= 2")
            if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
                raise DomainError("profile abscissae must increase strictly")
            if not all(map(math.isfinite, xs + fs)):
                raise DomainError("profile table must be finite")
            object.__setattr__(self, "profile", (xs, fs))
        else:
            c = float(p)
            if not math.isfinite(c):
                raise DomainError("profile constant must be finite")
            object.__setattr__(self, "profile", c)

    @property
    def region(self) -> Region:
        return Region.interval(self.start, self.stop)

    def profile_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if isinstance(self.profile, float):
            return np.full_like(x, self.profile)
        xs, fs = self.profile
        return np.interp(x, xs, fs)

    def _pieces(self):
        """Linear pieces ``(x0, x1, p, q)`` with ``f = p + q x`` on ``[x0, x1]``."""
        if isinstance(self.profile, float):
            return [(self.start, self.stop, self.profile, 0.0)]
        xs = np.asarray(self.profile[0])
        inner = xs[(xs > self.start) & (xs < self.stop)]
        bps = np.concatenate([[self.start], inner, [self.stop]])
        out = []
        for x0, x1 in zip(bps[:-1], bps[1:]):
            f0, f1 = self.profile_values(np.array([x0, x1]))
            q = (f1 - f0) / (x1 - x0)
            out.append((float(x0), float(x1), float(f0 - q * x0), float(q)))
        return out


@dataclass(frozen=True)
class PointActuator:
    """Control injected at the single point ``location`` (a Dirac mass)."""

    location: float

    def __post_init__(self):
        b = float(self.location)
        if not math.isfinite(b):
            raise DomainError("actuator location must be finite")
        object.__setattr__(self, "location", b)


Actuator = ZoneActuator | PointActuator


def actuator_coefficients(act: Actuator, basis: SpectralBasis) -> np.ndarray:
    """Spectral coordinates ``b_n`` of the control operator applied to a unit input.

    Zone actuators integrate their (piecewise-linear) profile against each
    mode in closed form; pointwise actuators evaluate the modes at the point.
    """
    if isinstance(act, ZoneActuator):
        act.region.check_within(basis.L)
        b = np.zeros(basis.N)
        for x0, x1, p, q in act._pieces():
            b += basis.profile_integrals(x0, x1, p, q)
    elif isinstance(act, PointActuator):
        if not 0.0 < act.location < basis.L:
            raise DomainError(f"actuator location must lie in (0, {basis.L})")
        b = basis.evaluate([act.location])[:, 0]
    else:
        raise TypeError(f"unknown actuator {act!r}")
    if np.max(np.abs(b)) <= _DEGENERATE_TOL:
        raise DegenerateActuatorError(
            f"actuator {act!r} excites none of the first {basis.N} modes"
        )
    return b


# }}}


# {{{ target subspace


@dataclass(frozen=True, eq=False)
class TargetSubspace:
    """Orthonormal bases of ``G`` and of its complement inside an ambient subspace.

    Both bases are sampled on ``grid`` (rows are functions). The complement is
    identified with the polar set of ``G`` through the ``L^2(omega)`` pairing.
    """

    grid: RegionGrid
    g_basis: np.ndarray = field(repr=False)
    polar_basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = self.grid.size
        for name in ("g_basis", "polar_basis"):
            a = np.array(getattr(self, name), dtype=float).reshape(-1, k)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def region(self) -> Region:
        return self.grid.region

    @property
    def g_dim(self) -> int:
        return self.g_basis.shape[0]

    @property
    def polar_dim(self) -> int:
        return self.polar_basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.g_dim + self.polar_dim

    @cached_property
    def polar_coefficients(self) -> np.ndarray:
        """``P[k, n] = <e_n, q_k>_omega``: row ``k`` is ``extend(q_k)``."""
        p = (self.polar_basis * self.grid.weights) @ self.grid.modes.T
        p.setflags(write=False)
        return p

    @cached_property
    def g_coefficients(self) -> np.ndarray:
        p = (self.g_basis * self.grid.weights) @ self.grid.modes.T
        p.setflags(write=False)
        return p

    def polar_coordinates(self, y: SpectralField) -> np.ndarray:
        """Coordinates of the polar component of ``restrict(y)``."""
        return self.polar_coefficients @ y.coefficients

    def g_coordinates(self, y: SpectralField) -> np.ndarray:
        return self.g_coefficients @ y.coefficients


def _orthonormalize(grid: RegionGrid, vectors: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt with one reorthogonalization pass."""
    out = []
    for v in vectors:
        v = np.array(v, dtype=float)
        v0 = grid.norm(v)
        if v0 == 0.0:
            raise RankDeficiencyError("seed vector vanishes on the region")
        for _ in range(2):
            for q in out:
                v = v - grid.inner(q, v) * q
        nv = grid.norm(v)
        if nv < _RANK_TOL * v0:
            raise RankDeficiencyError(
                f"seed vector {len(out)} depends on its predecessors "
                f"(relative residual norm {nv / v0:.3e})"
            )
        out.append(v / nv)
    return np.array(out).reshape(len(out), grid.size)


def build_target(
    region: Region | RegionGrid,
    basis: SpectralBasis,
    ambient_dim: int,
    g_dim: int,
    seed_vectors=None,
) -> TargetSubspace:
    """Realize ``G`` and its complement inside an ambient subspace of ``L^2(omega)``.

    The ambient subspace is spanned by the first ``ambient_dim`` restricted
    eigenmodes, or by ``seed_vectors`` (rows sampled on the region grid, or
    callables of ``x``). After orthonormalization the first ``g_dim`` vectors
    span ``G`` and the remaining ones its complement.
    """
    grid = _region_grid(basis, region)
    if int(ambient_dim) != ambient_dim or int(g_dim) != g_dim:
        raise DomainError("ambient_dim and g_dim must be integers")
    if not 0 <= g_dim <= ambient_dim:
        raise DomainError(f"need 0 <= g_dim <= ambient_dim, got {g_dim}, {ambient_dim}")
    if seed_vectors is None:
        if ambient_dim > basis.N:
            raise DomainError(f"ambient_dim {ambient_dim} exceeds the mode count {basis.N}")
        seeds = grid.modes[:ambient_dim]
    else:
        rows = [s(grid.nodes) if callable(s) else s for s in seed_vectors]
        seeds = np.array(rows, dtype=float).reshape(-1, grid.size)
        if seeds.shape[0] != ambient_dim:
            raise DomainError(f"expected {ambient_dim} seed vectors, got {seeds.shape[0]}")
    q = _orthonormalize(grid, seeds)
    return TargetSubspace(grid, q[:g_dim], q[g_dim:])


# }}}
