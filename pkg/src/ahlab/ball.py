"""Exact differential geometry of the Poincare ball model of hyperbolic space.

Everything here is expressed in Cartesian ball coordinates ``y`` with the
metric ``g_H = lam(y)**2 * delta`` where ``lam(y) = 2 / (1 - |y|**2)``.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

BOUNDARY_GUARD = 1e-12


class UnsupportedError(ValueError):
    """Requested configuration has no exact reduction implemented."""


@dataclass(frozen=True)
class BallPoint:
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size < 2:
            raise ValueError("ball points need ambient dimension >= 2")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coordinates")
        if np.linalg.norm(c) >= 1.0 - BOUNDARY_GUARD:
            raise ValueError(f"|y| = {np.linalg.norm(c)!r} is not inside the open unit ball")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self):
        return self.coords.size

    @property
    def norm(self):
        return float(np.linalg.norm(self.coords))

    def __repr__(self):
        return f"BallPoint({self.coords.tolist()!r})"


def as_point(y):
    return y if isinstance(y, BallPoint) else BallPoint(y)


def _coords(y):
    return as_point(y).coords


@dataclass(frozen=True)
class SymBilinearForm:
    """Symmetric 2-tensor components; symmetrised on construction."""

    comps: np.ndarray
    frame_tag: str = "cartesian"

    def __post_init__(self):
        a = np.array(self.comps, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("components must form a square matrix")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "comps", a)
        if self.frame_tag not in ("cartesian", "orthonormal-at-point"):
            raise ValueError(f"unknown frame tag {self.frame_tag!r}")

    def __sub__(self, other):
        return SymBilinearForm(self.comps - other.comps, self.frame_tag)

    def __add__(self, other):
        return SymBilinearForm(self.comps + other.comps, self.frame_tag)

    def scaled(self, c):
        return SymBilinearForm(c * self.comps, self.frame_tag)

    def frobenius(self):
        return float(np.linalg.norm(self.comps))

    def trace_against(self, inverse_metric):
        return float(np.sum(inverse_metric * self.comps))

    def __call__(self, v, w):
        return float(v @ self.comps @ w)


# ---------------------------------------------------------------- scalar fields


class ScalarField:
    """Scalar function on the ball with Euclidean partials up to order two.

    When ``grad`` and ``hess`` are both supplied the field is in exact mode;
    otherwise derivatives come from central differences with step ``step``
    (optionally improved by one Richardson step-halving).
    """

    def __init__(self, func, grad=None, hess=None, *, step=1e-4, richardson=False, name=None):
        self.func = func
        self._grad = grad
        self._hess = hess
        self.step = step
        self.richardson = richardson
        self.name = name or getattr(func, "__name__", "field")

    @property
    def derivative_mode(self):
        if self._grad is not None and self._hess is not None:
            return "exact"
        return "central-difference"

    def finite_difference(self, step=1e-4, richardson=False):
        return ScalarField(self.func, step=step, richardson=richardson, name=self.name)

    def __call__(self, y):
        return float(self.func(_coords(y)))

    value = __call__

    def _fd_grad(self, y, h):
        n = y.size
        g = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            g[i] = (self.func(y + e) - self.func(y - e)) / (2 * h)
        return g

    def _fd_hess(self, y, h):
        n = y.size
        H = np.empty((n, n))
        f0 = self.func(y)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = h
            H[i, i] = (self.func(y + ei) - 2 * f0 + self.func(y - ei)) / h ** 2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = h
                v = (self.func(y + ei + ej) - self.func(y + ei - ej)
                     - self.func(y - ei + ej) + self.func(y - ei - ej)) / (4 * h * h)
                H[i, j] = H[j, i] = v
        return H

    def gradient(self, y):
        y = _coords(y)
        if self._grad is not None:
            return np.asarray(self._grad(y), dtype=float)
        g = self._fd_grad(y, self.step)
        if self.richardson:
            g = (4 * self._fd_grad(y, self.step / 2) - g) / 3
        return g

    def hessian(self, y):
        y = _coords(y)
        if self._hess is not None:
            H = np.asarray(self._hess(y), dtype=float)
        else:
            H = self._fd_hess(y, self.step)
            if self.richardson:
                H = (4 * self._fd_hess(y, self.step / 2) - H) / 3
        return H

    def partial(self, y, axis):
        return float(self.gradient(y)[axis])

    def partial2(self, y, i, j):
        return float(self.hessian(y)[i, j])


def constant_field(c):
    return ScalarField(lambda y: c, lambda y: np.zeros_like(y), lambda y: np.zeros((y.size, y.size)),
                       name="constant")


def squared_norm_field():
    return ScalarField(lambda y: float(y @ y), lambda y: 2 * y, lambda y: 2 * np.eye(y.size),
                       name="squared_norm")


# ------------------------------------------------------------------ the metric


def conformal_factor(y):
    y = _coords(y)
    return 2.0 / (1.0 - y @ y)


def metric(y):
    """Cartesian components of ``g_H`` at ``y``."""
    y = _coords(y)
    return SymBilinearForm(conformal_factor(y) ** 2 * np.eye(y.size))


def log_factor_gradient(y):
    """Euclidean gradient of ``sigma = log lam``."""
    y = _coords(y)
    return 2.0 * y / (1.0 - y @ y)


def log_factor_hessian(y):
    y = _coords(y)
    s = 1.0 - y @ y
    return 2.0 * np.eye(y.size) / s + 4.0 * np.outer(y, y) / s ** 2


def hyperbolic_distance(x, y):
    x, y = _coords(x), _coords(y)
    if x.size != y.size:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    d2 = float((x - y) @ (x - y))
    arg = 1.0 + 2.0 * d2 / ((1.0 - x @ x) * (1.0 - y @ y))
    return math.acosh(max(arg, 1.0))


def christoffel_contraction(grad_f, y):
    """``Gamma^k_ij d_k f`` for the conformal metric, as a matrix in (i, j)."""
    s = log_factor_gradient(y)
    return np.outer(grad_f, s) + np.outer(s, grad_f) - (s @ grad_f) * np.eye(s.size)


def covariant_hessian(f, y):
    """Hessian of ``f`` with respect to ``g_H``, Cartesian components."""
    y = _coords(y)
    H = f.hessian(y) - christoffel_contraction(f.gradient(y), y)
    return SymBilinearForm(H)


def laplacian(f, y):
    y = _coords(y)
    return float(np.trace(covariant_hessian(f, y).comps)) / conformal_factor(y) ** 2


def gradient_norm_sq(f, y):
    """``|grad f|^2`` measured in ``g_H``."""
    y = _coords(y)
    g = f.gradient(y)
    return float(g @ g) / conformal_factor(y) ** 2


# --------------------------------------------------------- defining functions


class DefiningFunctionKind(enum.Enum):
    R1 = "r1"
    R2 = "r2"
    RHO = "rho"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def defining_value(kind, y):
    kind = DefiningFunctionKind.parse(kind)
    t = as_point(y).norm
    if kind is DefiningFunctionKind.R1:
        return 1.0 - t
    r2 = (1.0 - t) / (1.0 + t)
    return r2 if kind is DefiningFunctionKind.R2 else 2.0 * r2


def defining_gradient(kind, y):
    """Euclidean gradient; these functions are radial with a cone point at 0."""
    kind = DefiningFunctionKind.parse(kind)
    y = _coords(y)
    t = float(np.linalg.norm(y))
    if t == 0.0:
        raise ValueError("defining functions are not differentiable at the origin")
    unit = y / t
    if kind is DefiningFunctionKind.R1:
        return -unit
    d = -2.0 / (1.0 + t) ** 2
    return (d if kind is DefiningFunctionKind.R2 else 2.0 * d) * unit


def _radial_speed(kind, t):
    if kind is DefiningFunctionKind.R1:
        return 1.0
    d = 2.0 / (1.0 + t) ** 2
    return d if kind is DefiningFunctionKind.R2 else 2.0 * d


def special_check(kind, y):
    """``|dr|^2`` measured in the compactified metric ``r^2 g_H``."""
    kind = DefiningFunctionKind.parse(kind)
    t = as_point(y).norm
    r = defining_value(kind, y)
    lam = 2.0 / (1.0 - t * t)
    return (_radial_speed(kind, t) / (r * lam)) ** 2


# -------------------------------------------------------- Lee eigenfunctions


class LeeEigenfunction:
    """``u = cosh d(base, .)``, which solves ``Delta u = (n+1) u`` on the ball.

    Uses the closed form ``1 + 2|y-p|^2 / ((1-|y|^2)(1-|p|^2))`` and its exact
    Euclidean derivatives.
    """

    def __init__(self, base):
        self.base = as_point(base)

    @property
    def dim(self):
        return self.base.dim

    def _parts(self, y):
        p = self.base.coords
        c = 2.0 / (1.0 - p @ p)
        diff = y - p
        A = float(diff @ diff)
        B = 1.0 - float(y @ y)
        return c, diff, A, B

    def value(self, y):
        y = _coords(y)
        c, _, A, B = self._parts(y)
        return 1.0 + c * A / B

    __call__ = value

    def gradient(self, y):
        y = _coords(y)
        c, diff, A, B = self._parts(y)
        return c * (2.0 * diff / B + 2.0 * A * y / B ** 2)

    def hessian(self, y):
        y = _coords(y)
        c, diff, A, B = self._parts(y)
        n = y.size
        return c * ((2.0 / B + 2.0 * A / B ** 2) * np.eye(n)
                    + 4.0 * (np.outer(diff, y) + np.outer(y, diff)) / B ** 2
                    + 8.0 * A * np.outer(y, y) / B ** 3)

    @property
    def field(self):
        return ScalarField(self.value, self.gradient, self.hessian, name="lee")


def _as_field(f):
    return f.field if isinstance(f, LeeEigenfunction) else f


def lee_value(u, y):
    return u.value(y)


def lee_residual(u, y):
    y = _coords(y)
    return laplacian(u.field, y) - y.size * u.value(y)


def trace_free_hessian(u, y):
    """``b(u) = Hess_{g_H} u - u g_H`` (for a Lee eigenfunction this is trace free)."""
    y = _coords(y)
    f = _as_field(u)
    lam2 = conformal_factor(y) ** 2
    return SymBilinearForm(covariant_hessian(f, y).comps - f(y) * lam2 * np.eye(y.size))


def tensor_norm(form, y):
    """Norm of a covariant 2-tensor in ``g_H``."""
    return form.frobenius() / conformal_factor(y) ** 2


# ------------------------------------------------- compactification by 1/u


@dataclass
class RoundnessReport:
    thetas: np.ndarray
    max_metric_deviation: float
    max_scalar_deviation_identity: float
    max_scalar_deviation_ricci: float
    max_einstein_norm: float
    max_hessian_side_norm: float
    max_identity_gap: float
    scalar_target: float

    def passed(self, metric_tol=1e-8, tensor_tol=1e-6):
        return (self.max_metric_deviation <= metric_tol
                and self.max_einstein_norm <= tensor_tol
                and self.max_hessian_side_norm <= tensor_tol
                and self.max_scalar_deviation_identity <= tensor_tol * self.scalar_target
                and self.max_scalar_deviation_ricci <= tensor_tol * self.scalar_target)


def compactified_ricci(u, y):
    """Ricci tensor of ``u**-2 g_H`` (conformally flat: ``exp(2w) delta``).

    Uses the Euclidean conformal-change formula with ``w = log(lam / u)`` so
    the result does not presuppose the Einstein property of ``g_H``.
    """
    y = _coords(y)
    N = y.size
    val, g, H = u.value(y), u.gradient(y), u.hessian(y)
    dw = log_factor_gradient(y) - g / val
    ddw = log_factor_hessian(y) - H / val + np.outer(g, g) / val ** 2
    ric = -(N - 2) * (ddw - np.outer(dw, dw)) - (np.trace(ddw) + (N - 2) * dw @ dw) * np.eye(N)
    return ric, math.exp(2 * math.log(conformal_factor(y) / val))


def compactified_roundness_check(u, thetas=None, directions=None):
    """Check that ``u**-2 g_H`` is the round hemisphere for an origin-based ``u``.

    Samples the polar angle ``theta`` (with ``sin theta = tanh d``) along each
    unit direction and measures the radial and spherical metric components
    against ``d theta^2 + sin^2 theta g_S``. Scalar curvature is compared with
    ``n(n+1)`` both through ``n(n+1)(u^2 - |grad u|^2)`` and through the trace
    of the conformally transformed Ricci tensor.
    """
    if not isinstance(u, LeeEigenfunction):
        raise TypeError("expected a LeeEigenfunction")
    if u.base.norm != 0.0:
        raise UnsupportedError("roundness check is implemented for origin-based eigenfunctions only")
    N = u.dim
    n = N - 1
    if thetas is None:
        thetas = (np.arange(100) + 0.5) * (0.5 * np.pi / 100)
    thetas = np.asarray(thetas, dtype=float)
    if directions is None:
        directions = [np.eye(N)[0]]
    target = float(n * (n + 1))

    metric_dev = scal_id = scal_ric = e_norm = b_norm = gap = 0.0
    for e in directions:
        e = np.asarray(e, dtype=float)
        e = e / np.linalg.norm(e)
        for th in thetas:
            d = math.atanh(math.sin(th))
            t = math.tanh(d / 2)
            y = t * e
            uu = u.value(y)
            lam = conformal_factor(y)
            dt_dtheta = 0.5 / math.cosh(d / 2) ** 2 / math.cos(th)
            g_thth = (lam / uu) ** 2 * dt_dtheta ** 2
            g_sph = (lam * t / uu) ** 2
            metric_dev = max(metric_dev, abs(g_thth - 1.0), abs(g_sph - math.sin(th) ** 2))

            grad_sq = gradient_norm_sq(u.field, y)
            scal_id = max(scal_id, abs(target * (uu ** 2 - grad_sq) - target))

            ric, conf = compactified_ricci(u, y)
            R = np.trace(ric) / conf
            scal_ric = max(scal_ric, abs(R - target))
            E = ric - (R / N) * conf * np.eye(N)
            rhs = (n - 1) * trace_free_hessian(u, y).comps / uu
            # norms measured in g_u = conf * delta
            e_norm = max(e_norm, np.linalg.norm(E) / conf)
            b_norm = max(b_norm, np.linalg.norm(rhs) / conf)
            gap = max(gap, np.linalg.norm(E - rhs) / conf)
    return RoundnessReport(thetas, metric_dev, scal_id, scal_ric, e_norm, b_norm, gap, target)
