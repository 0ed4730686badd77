"""First p-Dirichlet eigenvalues of geodesic balls in ``H^{n+1}(-kappa^2)``.

For a radial profile ``f(t)`` on a ball of radius ``R`` the p-Rayleigh
quotient reduces to

    int_0^R |f'|^p w dt / int_0^R |f|^p w dt,   w(t) = (sinh(kappa t) / kappa)^n,

after the sphere volume cancels. We discretise with continuous piecewise
linear elements on a uniform mesh (``f(R) = 0``, ``f(0)`` free, which is the
natural condition ``f'(0) = 0``). The discrete quotient is a Rayleigh-Ritz
restriction, so it bounds the continuum eigenvalue from above.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

from . import kernels
from .quadrature import QuadratureSpec, integrate
from .upper_bound import sharp_upper_bound

_GL_W = np.polynomial.legendre.leggauss(8)
_GL_Q = np.polynomial.legendre.leggauss(4)
BOUND_SLACK = 1e-2
MCKEAN_TOL = 1e-8


class ConvergenceError(RuntimeError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class BoundViolation(RuntimeError):
    pass


class ScanError(RuntimeError):
    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class RadialProblem:
    n: int
    p: float
    kappa: float = 1.0
    R: float = 1.0
    mesh: int = 1000

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.R > 0.0:
            raise ValueError(f"R must be positive, got {self.R}")
        if int(self.mesh) != self.mesh or self.mesh < 100:
            raise ValueError(f"mesh must be an integer >= 100, got {self.mesh}")

    def replace(self, **kw):
        d = dict(n=self.n, p=self.p, kappa=self.kappa, R=self.R, mesh=self.mesh)
        d.update(kw)
        return RadialProblem(**d)


@dataclass
class EigenResult:
    lam: float
    residual: float
    iterations: int
    t: np.ndarray = field(repr=False)
    eigenfunction: np.ndarray = field(repr=False)
    problem: RadialProblem = None
    lower_bound: float = float("nan")
    upper_bound: float = float("nan")


def weight(t, n, kappa, R):
    """``(sinh(kappa t) / sinh(kappa R))^n``: the radial weight rescaled to 1 at ``R``."""
    t = np.asarray(t, dtype=float)
    x, X = kappa * t, kappa * R
    ratio = np.exp(x - X) * (-np.expm1(-2 * x)) / (-np.expm1(-2 * X))
    return ratio ** n


@dataclass(frozen=True)
class _Mesh:
    t: np.ndarray
    inv_h: float
    W: np.ndarray
    wq: np.ndarray
    xi: np.ndarray


def discretize(prob):
    M = int(prob.mesh)
    t = np.linspace(0.0, prob.R, M + 1)
    h = prob.R / M
    left = t[:-1]

    def element_quad(rule):
        x, w = rule
        xi = 0.5 * (x + 1.0)
        pts = left[:, None] + h * xi[None, :]
        return xi, 0.5 * h * w[None, :] * weight(pts, prob.n, prob.kappa, prob.R)

    _, wW = element_quad(_GL_W)
    xi, wq = element_quad(_GL_Q)
    return _Mesh(t, 1.0 / h, np.ascontiguousarray(wW.sum(axis=1)), np.ascontiguousarray(wq), xi)


def discrete_quotient(prob, f, mesh=None):
    mesh = mesh or discretize(prob)
    N, D, _, _ = kernels.energy_grad(np.ascontiguousarray(f, dtype=float), float(prob.p),
                                     mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
    return N / D


def mckean_bound(n, p, kappa=1.0):
    return sharp_upper_bound(n, p, kappa)


def _bessel_root(nu):
    # first positive zero of J_nu, bracketed between nu and nu + pi + 2
    lo = max(nu, 1e-6) + 1e-9
    grid = np.linspace(lo, nu + 2 * math.pi + 4, 400)
    vals = jv(nu, grid)
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0]
    return brentq(lambda x: jv(nu, x), grid[idx], grid[idx + 1], xtol=1e-15)


def comparison_upper_bound(prob):
    """A continuum upper bound on the ball eigenvalue.

    For ``p = 2``, writing ``f = w^{-1/2} v`` turns the quotient into a
    Schrodinger form with potential ``(n/2)^2 + (n/2)(n/2 - 1)/sinh^2``; comparing
    with ``1/t^2`` (``n >= 2``) or dropping the negative term (``n = 1``) gives
    ``(n kappa/2)^2 + j^2/R^2`` with ``j`` the first zero of ``J_{(n-1)/2}``
    (``j = pi`` when ``n = 1``). For other ``p`` the bound is the quotient of
    ``cos(pi t / 2R)``.
    """
    n, p, kappa, R = prob.n, prob.p, prob.kappa, prob.R
    if p == 2.0:
        j = math.pi if n == 1 else _bessel_root((n - 1) / 2)
        return (n * kappa / 2) ** 2 + (j / R) ** 2
    k = math.pi / (2 * R)
    spec = QuadratureSpec(rtol=1e-10)
    num, _ = integrate(lambda t: np.abs(k * np.sin(k * t)) ** p * weight(t, n, kappa, R), 0.0, R, spec)
    den, _ = integrate(lambda t: np.abs(np.cos(k * t)) ** p * weight(t, n, kappa, R), 0.0, R, spec)
    return num / den


def _residual(gN, gD, lam):
    r = gN[:-1] - lam * gD[:-1]
    return float(np.max(np.abs(r)) / max(np.max(np.abs(gN[:-1])), 1e-300))


def _inverse_iteration(prob, mesh, shift, max_iter=2000, tol=1e-13):
    t = mesh.t
    Kd, Ko, Md, Mo = kernels.assemble(np.ones_like(t), 2.0, mesh.inv_h, mesh.W, mesh.wq, mesh.xi, 0.0)
    Kd, Ko, Md, Mo = Kd[:-1], Ko[:-1], Md[:-1], Mo[:-1]
    Ad = np.ascontiguousarray(Kd - shift * Md)
    Ao = np.ascontiguousarray(Ko - shift * Mo)
    f = np.cos(0.5 * math.pi * t[:-1] / prob.R)
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        x, piv = kernels.tridiag_solve(Ad, Ao, kernels.tridiag_matvec(Md, Mo, f))
        if not piv > 0:
            raise ConvergenceError("shifted operator is not positive definite", last=f)
        f = x / np.max(np.abs(x))
        lam = (f @ kernels.tridiag_matvec(Kd, Ko, f)) / (f @ kernels.tridiag_matvec(Md, Mo, f))
        change = abs(lam - lam_old)
        # rounding noise can keep the quotient jittering just above tol
        if change <= tol * lam or (it > 50 and change <= 1e3 * tol * lam):
            return np.append(f, 0.0), it
        lam_old = lam
    raise ConvergenceError(f"inverse iteration stalled after {max_iter} steps", last=np.append(f, 0.0))


def _descent(prob, mesh, f, shift, max_iter=5000, rtol=1e-10, window=10, floor=1e-40):
    """Preconditioned descent on ``log N - log D`` with Armijo backtracking.

    The search direction solves the frozen-coefficient linearisation
    ``(p-1)(K(f) - shift M(f)) d = -(K f - lam M f)``; for ``p = 2`` a unit step
    is one step of shifted inverse iteration.
    """
    p = float(prob.p)
    args = (mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
    N, D, gN, gD = kernels.energy_grad(f, p, *args)
    J = math.log(N) - math.log(D)
    history = []
    for it in range(1, max_iter + 1):
        lam = N / D
        grad = (gN / N - gD / D)[:-1]
        r = (gN - lam * gD)[:-1] / p
        Kd, Ko, Md, Mo = kernels.assemble(f, p, *args[:3], mesh.xi, floor)
        d = None
        for s in (shift, 0.0):
            Ad = np.ascontiguousarray(Kd[:-1] - s * Md[:-1])
            Ao = np.ascontiguousarray(Ko[:-1] - s * Mo[:-1])
            x, piv = kernels.tridiag_solve(Ad, Ao, -r / (p - 1.0))
            if piv > 0 and np.all(np.isfinite(x)) and grad @ x < 0:
                d = x
                break
        if d is None:
            d = -grad / np.max(np.abs(grad)) * np.max(np.abs(f))
        slope = grad @ d
        alpha = 1.0
        while True:
            trial = f.copy()
            trial[:-1] += alpha * d
            Nt, Dt, gNt, gDt = kernels.energy_grad(trial, p, *args)
            Jt = math.log(Nt) - math.log(Dt)
            if Jt <= J + 1e-4 * alpha * slope or alpha < 1e-12:
                break
            alpha *= 0.5
        scale = np.max(np.abs(trial))
        f = trial / scale
        N, D = Nt / scale ** p, Dt / scale ** p
        gN, gD = gNt / scale ** (p - 1), gDt / scale ** (p - 1)
        change = abs(Jt - J)
        J = Jt
        history.append(change)
        if len(history) >= window and max(history[-window:]) <= rtol:
            return f, it
    raise ConvergenceError(f"descent did not settle in {max_iter} iterations", last=f)


def ball_first_eigenvalue(prob, check_bounds=True):
    """Smallest p-Dirichlet eigenvalue of the geodesic ball of radius ``prob.R``."""
    mesh = discretize(prob)
    lower = mckean_bound(prob.n, prob.p, prob.kappa)
    shift2 = mckean_bound(prob.n, 2.0, prob.kappa)
    f, its = _inverse_iteration(prob, mesh, shift2)
    if prob.p != 2.0:
        f, more = _descent(prob, mesh, f, lower)
        its += more
    f = np.abs(f)
    f /= np.max(f)
    N, D, gN, gD = kernels.energy_grad(f, float(prob.p), mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
    lam = N / D
    res = EigenResult(lam, _residual(gN, gD, lam), its, mesh.t, f, prob, lower,
                      comparison_upper_bound(prob))
    if check_bounds:
        if lam < lower - MCKEAN_TOL:
            raise BoundViolation(f"lambda={lam} below the McKean bound {lower}")
        if lam > res.upper_bound * (1 + BOUND_SLACK):
            raise BoundViolation(f"lambda={lam} above the comparison bound {res.upper_bound}")
    return res


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


@dataclass
class ScanReport:
    results: list
    decreasing: bool
    final_gap: float
    empirical_rate: float


def monotonicity_scan(n, p, kappa, radii, mesh=1000, workers=1):
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    results = []
    for R in radii:
        try:
            results.append(ball_first_eigenvalue(RadialProblem(n, p, kappa, R, mesh)))
        except (ConvergenceError, BoundViolation) as exc:
            raise ScanError(f"solve failed at R={R}: {exc}", results) from exc
    lams = [r.lam for r in results]
    decreasing = all(b < a for a, b in zip(lams, lams[1:]))
    gaps = [lam - mckean_bound(n, p, kappa) for lam in lams]
    rate = float("nan")
    if len(radii) >= 2 and gaps[-1] > 0 and gaps[-2] > 0:
        rate = math.log(gaps[-2] / gaps[-1]) / math.log(radii[-1] / radii[-2])
    return ScanReport(results, decreasing, gaps[-1], rate)


@dataclass
class ScalingReport:
    lam_scaled: float
    lam_unit: float
    ratio: float
    expected_ratio: float
    rel_error: float


def scaling_check(prob):
    """Compare ``lambda(kappa, R)`` with ``kappa^p lambda(1, kappa R)``."""
    a = ball_first_eigenvalue(prob).lam
    b = ball_first_eigenvalue(prob.replace(kappa=1.0, R=prob.kappa * prob.R)).lam
    expected = prob.kappa ** prob.p
    ratio = a / b
    return ScalingReport(a, b, ratio, expected, abs(ratio - expected) / expected)


@dataclass
class SandwichReport:
    lower: float
    limit: float
    upper: float
    radii: tuple
    lams: tuple
    empirical_rate: float
    spread: float

    def agrees(self, tol=5e-2):
        return self.spread <= tol


def sandwich_report(n, p, kappa=1.0, radii=(10.0, 20.0, 40.0), points_per_unit=100, workers=1):
    """McKean lower bound, large-ball limit and the sharp upper bound side by side.

    The limit is extrapolated from three radii in geometric progression
    assuming ``lambda(R) = L + c R^-a`` with ``a`` fitted from the data.
    """
    radii = tuple(float(r) for r in radii)
    probs = [RadialProblem(n, p, kappa, R, max(100, int(points_per_unit * R))) for R in radii]
    lams = tuple(r.lam for r in _map(ball_first_eigenvalue, probs, workers))
    l1, l2, l3 = lams[-3:]
    q = radii[-1] / radii[-2]
    rate = float("nan")
    limit = l3
    if (l1 - l2) > 0 and (l2 - l3) > 0:
        rate = math.log((l1 - l2) / (l2 - l3)) / math.log(q)
        limit = l3 - (l2 - l3) / (q ** rate - 1.0)
    lower = mckean_bound(n, p, kappa)
    upper = sharp_upper_bound(n, p, kappa)
    spread = max(lower, limit, upper) - min(lower, limit, upper)
    return SandwichReport(lower, limit, upper, radii, lams, rate, spread)
