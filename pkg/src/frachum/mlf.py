r"""Mittag-Leffler function, the M-Wright density and the modal kernel multipliers.

The two-parameter Mittag-Leffler function

.. math::

    E_{\alpha,\beta}(z) = \sum_{k \ge 0} \frac{z^k}{\Gamma(\alpha k + \beta)}

diagonalizes the fractional solution operator on every eigenmode: a mode with
eigenvalue :math:`\lambda \le 0` evolves as :math:`t^{\alpha-1}E_{\alpha,\alpha}(\lambda t^\alpha)`.

Evaluation strategy for real arguments and :math:`0 < \alpha < 1`:

* :math:`|z| \le 1` or :math:`z > 0`: power series, terms formed in log space;
* :math:`z < -1`: the real-line integral representation (valid for
  :math:`\beta < 1 + \alpha`), integrated with a vectorized tanh-sinh rule split
  at the peak of the rational factor; larger :math:`\beta` are reached through
  :math:`E_{\alpha,\beta+\alpha}(z) = (E_{\alpha,\beta}(z) - 1/\Gamma(\beta)) / z`.

:math:`\alpha = 1` uses closed forms for :math:`\beta \in \{1, 2, 3\}`; other orders
of at least one fall back to an arbitrary-precision series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

from frachum.errors import ConvergenceError, DomainError

__all__ = [
    "FracOrder",
    "kernel_multiplier",
    "kernel_primitives",
    "kernel_values",
    "mittag_leffler",
    "mittag_leffler_array",
    "wright_density",
]

_SERIES_RADIUS = 1.0
_ASYM_RADIUS = 20.0
_ASYM_TERMS = 60
# exp(-CUTOFF) bounds the neglected tail of the integral representation
_DECAY_CUTOFF = 45.0
_WRIGHT_REL_TOL = 1e-15
_WRIGHT_MAX_TERMS = 10_000
_WRIGHT_UNDERFLOW = 100.0


@dataclass(frozen=True)
class FracOrder:
    """Fractional order :math:`\\alpha \\in (0, 1]`; ``1.0`` selects the classical heat limit."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or not 0.0 < a <= 1.0:
            raise DomainError(f"alpha must lie in (0,1], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def is_classical(self) -> bool:
        return self.alpha == 1.0

    @property
    def gamma_alpha(self) -> float:
        return math.gamma(self.alpha)

    def __float__(self) -> float:
        return self.alpha


def _as_alpha(alpha) -> float:
    if isinstance(alpha, FracOrder):
        return alpha.alpha
    return FracOrder(alpha).alpha


# {{{ Mittag-Leffler


def _check_ml_args(alpha: float, beta: float) -> None:
    if not (math.isfinite(alpha) and 0.0 < alpha < 2.0):
        raise DomainError(f"alpha must lie in (0,2), got {alpha!r}")
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be positive, got {beta!r}")


def _ml_series(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """Power series, summed until every term drops below 1e-17 of the running max."""
    out = np.zeros_like(z)
    if z.size == 0:
        return out
    absz = np.abs(z)
    neg = z < 0
    logz = np.log(np.where(absz > 0, absz, 1.0))
    total = np.zeros_like(z)
    biggest = np.zeros_like(z)
    k = 0
    block = 64
    active = np.ones(z.shape, dtype=bool)
    while np.any(active):
        ks = np.arange(k, k + block, dtype=float)
        lrg = -special.gammaln(alpha * ks + beta)
        logterm = ks[None, :] * logz[:, None] + lrg[None, :]
        term = np.exp(logterm)
        if k == 0:
            term[:, 0] = 1.0 / special.gamma(beta)
        term[absz == 0, 1:] = 0.0
        sign = np.where(neg[:, None] & (ks[None, :] % 2 == 1), -1.0, 1.0)
        # fixed-order reduction keeps results independent of the block layout
        for col in range(block):
            total = total + sign[:, col] * term[:, col]
        biggest = np.maximum(biggest, term.max(axis=1))
        # terms are eventually decreasing once alpha*k + beta passes |z|^(1/alpha)
        tail_small = term[:, -1] <= 1e-17 * np.maximum(biggest, np.abs(total))
        decreasing = term[:, -1] <= term[:, -2]
        active = ~(tail_small & decreasing)
        k += block
        if k > 200_000:
            raise ConvergenceError("Mittag-Leffler series did not converge")
    out[:] = total
    return out


@lru_cache(maxsize=16)
def _tanh_sinh_rule(step: float = 1.0 / 24.0, tmax: float = 3.6):
    t = np.arange(-tmax, tmax + 0.5 * step, step)
    u = 0.5 * np.pi * np.sinh(t)
    # s = (1 - tanh u) / 2, computed without cancellation on either side
    s = 1.0 / (1.0 + np.exp(2.0 * u))
    one_minus_s = 1.0 / (1.0 + np.exp(-2.0 * u))
    w = 2.0 * s * one_minus_s * 0.5 * np.pi * np.cosh(t) * step
    return one_minus_s, s, w


def _tanh_sinh(f, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Integrate ``f`` over ``[a_i, b_i]`` for every row ``i`` at once.

    ``f`` receives a ``(rows, nodes)`` array of abscissae.
    """
    frac_a, frac_b, w = _tanh_sinh_rule()
    width = (b - a)[:, None]
    left = frac_a[None, :] <= 0.5
    x = np.where(left, a[:, None] + width * frac_a[None, :], b[:, None] - width * frac_b[None, :])
    vals = f(x)
    return np.sum(vals * w[None, :], axis=1) * (b - a)


def _ml_integral(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """Real-line representation for ``z < 0`` and ``0 < beta < 1 + alpha``."""
    c = -z
    sa = math.sin(math.pi * (1.0 - beta))
    sb = math.sin(math.pi * (1.0 - beta + alpha))
    ca = math.cos(math.pi * alpha)
    expo = (1.0 - beta) / alpha
    pref = 1.0 / (alpha * math.pi)

    def kern(chi, zz):
        zz = zz[:, None]
        num = chi * sa - zz * sb
        den = chi * chi - 2.0 * chi * zz * ca + zz * zz
        with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
            val = pref * np.power(chi, expo) * np.exp(-np.power(chi, 1.0 / alpha)) * num / den
        return np.where(chi > 0, val, 0.0)

    xmax = _DECAY_CUTOFF**alpha
    result = np.zeros_like(z)
    inner = c < xmax
    # piece below the peak of the rational factor
    upper = np.where(inner, c, xmax)
    result += _tanh_sinh(lambda chi: kern(chi, z), np.zeros_like(z), upper)
    if np.any(inner):
        zi = z[inner]
        result[inner] += _tanh_sinh(lambda chi: kern(chi, zi), c[inner], np.full(zi.shape, xmax))
    return result


def _ml_asymptotic(alpha: float, beta: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Algebraic expansion ``-sum_k z^-k / Gamma(beta - alpha k)`` for large negative ``z``.

    Returns the values and a mask of arguments where two consecutive terms fell
    below 1e-17 of the partial sum before the expansion started to diverge.
    """
    ks = np.arange(1, _ASYM_TERMS + 1, dtype=float)
    coef = special.rgamma(beta - alpha * ks)
    terms = -coef[None, :] * np.power(z[:, None], -ks[None, :])
    partial = np.cumsum(terms, axis=1)
    small = np.abs(terms) <= 1e-17 * np.abs(partial)
    both = small[:, 1:] & small[:, :-1]
    ok = np.any(both, axis=1)
    stop = np.argmax(both, axis=1) + 1
    values = partial[np.arange(z.size), stop]
    return values, ok


def _ml_negative(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    """``z < -1`` with ``0 < alpha < 1``; reduce ``beta`` below ``1 + alpha`` first."""
    out = np.empty_like(z)
    far = np.zeros(z.shape, dtype=bool)
    cand = z <= -_ASYM_RADIUS
    if np.any(cand):
        vals, ok = _ml_asymptotic(alpha, beta, z[cand])
        idx = np.flatnonzero(cand)[ok]
        out[idx] = vals[ok]
        far[idx] = True
    near = ~far
    if np.any(near):
        out[near] = _ml_reduced_integral(alpha, beta, z[near])
    return out


def _ml_reduced_integral(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    m = 0
    base = beta
    while base >= 1.0 + alpha:
        base -= alpha
        m += 1
    val = _ml_integral(alpha, base, z)
    b = base
    for _ in range(m):
        val = (val - 1.0 / special.gamma(b)) / z
        b += alpha
    return val


def _ml_classical(beta: float, z: np.ndarray) -> np.ndarray | None:
    """Closed forms of ``E_{1,beta}`` for integer ``beta`` in ``{1,2,3}``."""
    if beta == 1.0:
        return np.exp(z)
    small = np.abs(z) < 0.5
    out = np.empty_like(z)
    zs = z[~small]
    if beta == 2.0:
        out[~small] = np.expm1(zs) / zs
    elif beta == 3.0:
        out[~small] = (np.expm1(zs) - zs) / (zs * zs)
    else:
        return None
    out[small] = _ml_series(1.0, beta, z[small])
    return out


def _ml_mpmath(alpha: float, beta: float, z: float) -> float:
    # digits lost to cancellation are about |z|^(1/alpha) / ln(10)
    lost = abs(z) ** (1.0 / alpha) / math.log(10.0) if z < 0 else 0.0
    with mpmath.workdps(int(30 + lost)):
        zz = mpmath.mpf(z)
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = zz**k * mpmath.rgamma(alpha * k + beta)
            total += term
            if k > 10 and abs(term) < mpmath.mpf(10) ** (-25) * max(abs(total), mpmath.mpf(10) ** (-300)):
                break
            k += 1
            if k > 100_000:
                raise ConvergenceError("Mittag-Leffler series did not converge")
        return float(total)


def mittag_leffler_array(alpha: float, beta: float, z) -> np.ndarray:
    """Vectorized :func:`mittag_leffler` over an array of real arguments."""
    alpha = float(alpha)
    beta = float(beta)
    _check_ml_args(alpha, beta)
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.ravel()
    if not np.all(np.isfinite(z)):
        raise DomainError("Mittag-Leffler argument must be finite")
    out = np.empty_like(z)

    if alpha == 1.0:
        closed = _ml_classical(beta, z)
        if closed is not None:
            return closed.reshape(shape)
    if alpha >= 1.0:
        out[:] = [_ml_mpmath(alpha, beta, zi) for zi in z]
        return out.reshape(shape)

    series = (np.abs(z) <= _SERIES_RADIUS) | (z > 0)
    out[series] = _ml_series(alpha, beta, z[series])
    if np.any(~series):
        out[~series] = _ml_negative(alpha, beta, z[~series])
    return out.reshape(shape)


def mittag_leffler(alpha: float, beta: float, z: float) -> float:
    """Two-parameter Mittag-Leffler function :math:`E_{\\alpha,\\beta}(z)` for real ``z``.

    >>> round(mittag_leffler(1.0, 1.0, 1.0), 12)
    2.718281828459
    """
    return float(mittag_leffler_array(alpha, beta, np.array([float(z)]))[0])


# }}}


# {{{ M-Wright density


def _wright_terms_float(alpha: float, theta: float):
    n = np.arange(1, _WRIGHT_MAX_TERMS + 1, dtype=float)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        logmag = (n - 1) * math.log(theta) + special.gammaln(alpha * n) - special.gammaln(n)
    return n, logmag


def wright_density(alpha, theta: float) -> float:
    return _wright_density(_as_alpha(alpha), float(theta))


@lru_cache(maxsize=1 << 16)
def _wright_density(a: float, theta: float) -> float:
    r"""Probability density :math:`\phi_\alpha(\theta)` of the subordination integral.

    Summed from the alternating series

    .. math::

        \phi_\alpha(\theta) = \frac{1}{\pi}\sum_{n\ge1} (-1)^{n-1}
            \frac{\theta^{n-1}\Gamma(n\alpha)}{(n-1)!}\sin(n\pi\alpha),

    which is the rescaling :math:`\alpha^{-1}\theta^{-1-1/\alpha}\varphi_\alpha(\theta^{-1/\alpha})`
    of the one-sided stable density :math:`\varphi_\alpha`. The working precision
    is raised above double whenever the largest term would swamp the sum.
    Far in the tail, where the density is below ``1e-40``, zero is returned.
    """
    if a >= 1.0:
        raise DomainError("wright_density is a point mass at alpha = 1")
    if not (math.isfinite(theta) and theta > 0.0):
        raise DomainError(f"theta must be positive, got {theta!r}")
    # far tail: phi ~ c Y^(a - 1/2) exp(-Y) < 1e-40, flushed to zero
    y = (1.0 - a) * (a**a * theta) ** (1.0 / (1.0 - a))
    if y > _WRIGHT_UNDERFLOW:
        return 0.0

    n, logmag = _wright_terms_float(a, theta)
    peak = float(np.max(logmag))
    if peak < math.log(1e3):
        s = np.sin(n * math.pi * a)
        signs = np.where(n % 2 == 1, 1.0, -1.0)
        terms = signs * np.exp(logmag) * s
        total = 0.0
        for i, t in enumerate(terms):
            total += t
            if i > 2 and abs(t) <= _WRIGHT_REL_TOL * abs(total) and np.exp(logmag[i]) <= _WRIGHT_REL_TOL * abs(total):
                return max(total / math.pi, 0.0)
        raise ConvergenceError(f"M-Wright series did not converge at theta={theta}")

    # the result is roughly exp(-peak), so twice the peak in digits is enough
    dps = int(25 + 2.0 * peak / math.log(10.0))
    with mpmath.workdps(dps):
        th = mpmath.mpf(theta)
        al = mpmath.mpf(a)
        total = mpmath.mpf(0)
        tol = mpmath.mpf(_WRIGHT_REL_TOL)
        for k in range(1, _WRIGHT_MAX_TERMS + 1):
            mag = th ** (k - 1) * mpmath.gamma(al * k) / mpmath.factorial(k - 1)
            term = mag * mpmath.sinpi(al * k)
            total += term if k % 2 == 1 else -term
            if k > 2 and mag <= tol * abs(total) and mpmath.log(mag) < peak:
                return max(float(total / mpmath.pi), 0.0)
    raise ConvergenceError(f"M-Wright series did not converge at theta={theta}")


# }}}


# {{{ kernels


def kernel_values(alpha, lam, tau) -> np.ndarray:
    r"""Evaluate :math:`\tau^{\alpha-1}E_{\alpha,\alpha}(\lambda\tau^\alpha)` on an array of ``tau > 0``."""
    a = _as_alpha(alpha)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("kernel is singular at tau = 0; pass tau > 0")
    if a == 1.0:
        return np.exp(lam * tau)
    return tau ** (a - 1.0) * mittag_leffler_array(a, a, lam * tau**a)


def kernel_multiplier(alpha, lam: float, t: float) -> float:
    """Scalar action of the fractional solution operator on a mode with eigenvalue ``lam``."""
    if not float(t) > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    if lam > 0:
        raise DomainError(f"eigenvalue must be non-positive, got {lam!r}")
    return float(kernel_values(alpha, lam, np.array([float(t)]))[0])


def kernel_primitives(alpha, lam: float, tau) -> tuple[np.ndarray, np.ndarray]:
    r"""First and second antiderivatives of the modal kernel, vanishing at ``tau = 0``.

    .. math::

        K_1(\tau) = \tau^{\alpha}E_{\alpha,\alpha+1}(\lambda\tau^\alpha), \qquad
        K_2(\tau) = \tau^{\alpha+1}E_{\alpha,\alpha+2}(\lambda\tau^\alpha).
    """
    a = _as_alpha(alpha)
    tau = np.asarray(tau, dtype=float)
    pos = tau > 0
    k1 = np.zeros_like(tau)
    k2 = np.zeros_like(tau)
    tp = tau[pos]
    z = lam * tp**a
    k1[pos] = tp**a * mittag_leffler_array(a, a + 1.0, z)
    k2[pos] = tp ** (a + 1.0) * mittag_leffler_array(a, a + 2.0, z)
    return k1, k2


# }}}
