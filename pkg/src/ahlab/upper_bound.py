"""Test-function machinery behind the sharp bound ``lambda_{1,p} <= (n/p)^p``.

The test functions are ``rho**s * phi(rho)`` with ``rho = 2 exp(-d)`` the
special defining function of the ball whose boundary metric is the unit
sphere, and ``phi`` a two-parameter piecewise-linear cutoff. In these
coordinates the hyperbolic metric is ``rho**-2 (d rho^2 + (1 - rho^2/4)^2 g_S)``,
so every integral is one-dimensional in ``rho`` times ``Vol(S^n)``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .extrapolation import ExtrapolationError, extrapolate
from .quadrature import QuadratureSpec, integrate

RHO_MAX = 2.0  # rho at the origin of the ball


@dataclass(frozen=True)
class CutoffParams:
    eps: float
    delta: float
    rho0: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.eps < self.rho0):
            raise ValueError(f"eps must lie in (0, rho0={self.rho0}), got {self.eps}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def lower(self):
        return self.eps * self.delta / (1.0 + self.delta)

    @property
    def slope(self):
        return (1.0 + self.delta) / self.eps


@dataclass(frozen=True)
class RayleighParams:
    n: int
    p: float
    s: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        lo, hi = admissible_interval(self.n, self.p)
        if not (lo < self.s < hi):
            raise ValueError(f"s={self.s} outside the open interval ({lo}, {hi})")


@dataclass(frozen=True)
class RayleighReport:
    numerator: float
    denominator: float
    quotient: float
    quadrature_error_estimate: float
    converged: bool = True


@dataclass(frozen=True)
class LimitReport:
    value: float
    error_estimate: float
    eps_values: tuple
    inner_limits: tuple
    inner_errors: tuple


def admissible_interval(n, p):
    return (n - p) / p, n / p


def sphere_volume(n):
    """Volume of the unit round ``S^n``."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def cutoff_phi(rho, params):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("cutoff is defined for rho > 0")
    val = np.clip(params.slope * (rho - params.lower), 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def normal_form_density(rho, n):
    """``sqrt(det g_rho / det g_0)`` for the hyperbolic normal form."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0) or np.any(rho > 1.0):
        raise ValueError("normal form density is tabulated for 0 < rho <= 1")
    val = (1.0 - rho * rho / 4.0) ** n
    return float(val) if val.ndim == 0 else val


def _density(rho, n):
    # unchecked variant valid on the whole ball, 0 < rho < 2
    return (1.0 - rho * rho / 4.0) ** n


def _log_integral(g, a, b, quad):
    """``int_a^b g(rho) d rho`` computed in the variable ``x = log rho``."""
    return integrate(lambda x: g(np.exp(x)) * np.exp(x), math.log(a), math.log(b), quad)


def rayleigh_q(params, cutoff, quad=None):
    """Numerator, denominator and quotient for the test function ``rho^s phi``.

    Both integrals run over the whole ball, ``0 < rho < 2``, split at the
    cutoff breakpoints and at ``rho0``. The region ``rho >= rho0`` is where
    the cutoff is identically one.
    """
    quad = quad or QuadratureSpec()
    n, p, s = params.n, params.p, params.s
    a, eps, rho0 = cutoff.lower, cutoff.eps, cutoff.rho0
    k = cutoff.slope
    vol = sphere_volume(n)

    def dens(rho):
        return rho ** (-n - 1.0) * _density(rho, n)

    # |grad(rho^s phi)|_{g+} = rho |d/drho (rho^s phi)| since |grad rho|^2 = rho^2
    def num_ramp(rho):
        return (rho ** s * k * np.abs((s + 1.0) * rho - s * a)) ** p * dens(rho)

    def den_ramp(rho):
        return (rho ** s * k * (rho - a)) ** p * dens(rho)

    def num_flat(rho):
        return abs(s) ** p * rho ** (p * s) * dens(rho)

    def den_flat(rho):
        return rho ** (p * s) * dens(rho)

    pieces = []
    for lo, hi, fn, fd in ((a, eps, num_ramp, den_ramp),
                           (eps, rho0, num_flat, den_flat)):
        pieces.append((_log_integral(fn, lo, hi, quad), _log_integral(fd, lo, hi, quad)))
    # interior {rho >= rho0}; the density vanishes smoothly at rho = 2
    pieces.append((integrate(num_flat, rho0, RHO_MAX, quad), integrate(den_flat, rho0, RHO_MAX, quad)))

    N = vol * sum(pn[0] for pn, _ in pieces)
    D = vol * sum(pd[0] for _, pd in pieces)
    err_N = vol * sum(pn[1] for pn, _ in pieces)
    err_D = vol * sum(pd[1] for _, pd in pieces)
    q = N / D
    err = abs(q) * (err_N / abs(N) + err_D / abs(D))
    converged = err_N <= 1e-6 * abs(N) and err_D <= 1e-6 * abs(D)
    return RayleighReport(N, D, q, err, converged)


def closed_form_F(params_or_n, p=None, s=None):
    """``|s|^p (s + 1 - n/p) + (1 + s)^p (n/p - s)`` on the closed interval."""
    if p is None:
        n, p, s = params_or_n.n, params_or_n.p, params_or_n.s
    else:
        n = params_or_n
    lo, hi = admissible_interval(n, p)
    tol = 1e-12 * max(1.0, abs(hi))
    if not (lo - tol <= s <= hi + tol):
        raise ValueError(f"s={s} outside [{lo}, {hi}]")
    # (1 + 2s + s^2)^(p/2) taken as the perfect square (1+s)^p, 1+s > 0 here
    return abs(s) ** p * (s + 1.0 - n / p) + (1.0 + s) ** p * (n / p - s)


def sharp_upper_bound(n, p, kappa=1.0):
    if n < 1 or not p > 1 or not kappa > 0:
        raise ValueError("need n >= 1, p > 1, kappa > 0")
    return (n * kappa / p) ** p


def _eps_exponents(n, p, s, count):
    m = n - p * s
    exps = sorted({round(j * m + 2 * i, 12) for j in range(0, 5) for i in range(0, 4)} - {0.0})
    return exps[:count]


def _delta_exponents(n, p, s, count):
    g = p + p * s - n
    exps = sorted({round(j + g * i, 12) for j in range(0, 5) for i in range(0, 2)} - {0.0})
    return exps[:count]


def delta_limit(params, eps, deltas=None, quad=None):
    """Extrapolate ``q_p(eps, delta, s)`` to ``delta -> 0`` at fixed ``eps``."""
    if deltas is None:
        deltas = [2.0 ** -j for j in range(4, 13)]
    vals = [rayleigh_q(params, CutoffParams(eps, d), quad).quotient for d in deltas]
    exps = _delta_exponents(params.n, params.p, params.s, 5)
    return extrapolate(deltas, vals, exps), vals


def iterated_limit(params, eps_values=None, deltas=None, quad=None, tol=None):
    """``lim_{eps->0} lim_{delta->0} q_p`` by two nested extrapolations.

    The inner limit in ``delta`` uses error exponents built from ``1`` and
    ``p + ps - n``; the outer limit in ``eps`` uses ``n - ps`` and ``2``
    (the normal form has no first-order term). Raises
    :class:`ExtrapolationError` when the outer error estimate exceeds ``tol``.
    """
    if eps_values is None:
        eps_values = [2.0 ** -i for i in range(2, 9)]
    inner, inner_err = [], []
    for eps in eps_values:
        (lim, err), _ = delta_limit(params, eps, deltas, quad)
        inner.append(lim)
        inner_err.append(err)
    exps = _eps_exponents(params.n, params.p, params.s, 4)
    value, err = extrapolate(eps_values, inner, exps)
    err = max(err, max(inner_err))
    if tol is not None and not err <= tol:
        raise ExtrapolationError(
            f"eps-extrapolation did not settle (error estimate {err:.3g} > {tol:.3g})",
            eps_values, inner)
    return LimitReport(value, err, tuple(eps_values), tuple(inner), tuple(inner_err))
