"""Immersed submanifolds of the Poincare ball and their conformal geometry.

Both ``g_H = lam^2 delta`` and its compactification ``r^2 g_H`` are conformally
flat, so every extrinsic quantity reduces to the Euclidean jet of the
immersion plus the gradient of a log conformal factor. Normals are kept as
Euclidean unit vectors ``nu``; the metric-unit normal is ``nu / phi``.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ball import (BallPoint, DefiningFunctionKind, LeeEigenfunction, SymBilinearForm,
                   UnsupportedError, as_point, conformal_factor, defining_gradient,
                   defining_value, log_factor_gradient, trace_free_hessian)
from .extrapolation import extrapolate

RANK_TOL = 1e-8
PATH_TAUS = tuple(1.0 - 2.0 ** -j for j in range(3, 11))


class RankDeficiencyError(ValueError):
    pass


# ------------------------------------------------------------------ immersions


def _rational_jet(P, dP, d2P, q, dq, d2q):
    """Value, Jacobian and second partials of ``P / q`` (vector over scalar)."""
    y = P / q
    J = (dP - np.outer(y, dq)) / q
    S = (d2P - np.einsum("ia,b->iab", J, dq) - np.einsum("ib,a->iab", J, dq)
         - np.einsum("i,ab->iab", y, d2q)) / q
    return y, J, S


@dataclass(frozen=True)
class Immersion:
    """Chart map into the ball with exact first and second derivatives.

    ``jet(x)`` returns ``(y, J, S)`` with ``J[i, a] = d_a y_i`` and
    ``S[i, a, b] = d_a d_b y_i``. ``implicit`` vanishes exactly on the image
    and ``path(direction, tau)`` reaches the ideal boundary as ``tau -> 1``.
    """

    name: str
    k_plus_1: int
    ambient_dim: int
    jet: object = field(repr=False)
    implicit: object = field(default=None, repr=False)
    path: object = field(default=None, repr=False)
    chart_radius: float = 1.0

    @property
    def chart_dim(self):
        return self.k_plus_1

    @property
    def codim(self):
        return self.ambient_dim - self.k_plus_1

    def map(self, x):
        return BallPoint(self.jet(np.asarray(x, dtype=float))[0])

    def jacobian(self, x):
        return self.jet(np.asarray(x, dtype=float))[1]

    def second_derivs(self, x):
        return self.jet(np.asarray(x, dtype=float))[2]

    def contains(self, y, tol=1e-10):
        if self.implicit is None:
            raise UnsupportedError(f"{self.name}: no implicit description of the image")
        return abs(self.implicit(as_point(y).coords)) <= tol

    def boundary_path(self, direction, taus=PATH_TAUS):
        if self.path is None:
            raise UnsupportedError(f"{self.name}: image does not reach the boundary in this chart")
        e = np.asarray(direction, dtype=float)
        e = e / np.linalg.norm(e)
        return [self.path(e, t) for t in taus]


def totally_geodesic(n, k):
    """``H^{k+1}`` as the coordinate slice ``y = (x, 0)`` of ``H^{n+1}``."""
    N, m = n + 1, k + 1
    if not 1 <= m < N:
        raise ValueError(f"need 1 <= k+1 < n+1, got k={k}, n={n}")

    def jet(x):
        y = np.zeros(N)
        y[:m] = x
        J = np.zeros((N, m))
        J[:m] = np.eye(m)
        return y, J, np.zeros((N, m, m))

    return Immersion(f"totally-geodesic(k={k})", m, N, jet,
                     implicit=lambda y: float(np.linalg.norm(y[m:])),
                     path=lambda e, t: t * e)


def equidistant(n, t):
    """Hypersurface at signed distance ``t`` from the slice ``y_{n+1} = 0``."""
    N = n + 1
    c, s = math.cosh(t), math.sinh(t)

    def jet(x):
        xx = float(x @ x)
        P = np.append(2 * c * x, s * (1 - xx))
        dP = np.vstack([2 * c * np.eye(n), -2 * s * x[None, :]])
        d2P = np.zeros((N, n, n))
        d2P[-1] = -2 * s * np.eye(n)
        q = (1 + c) + (c - 1) * xx
        return _rational_jet(P, dP, d2P, q, 2 * (c - 1) * x, 2 * (c - 1) * np.eye(n))

    def implicit(y):
        # sinh(distance to the slice) = 2 y_N / (1 - |y|^2)
        return 2 * y[-1] / (1 - y @ y) - s

    return Immersion(f"equidistant(t={t:g})", n, N, jet, implicit=implicit,
                     path=lambda e, tau: tau * e)


def horosphere(n):
    """Euclidean sphere of radius 1/2 tangent to the boundary at ``e_{n+1}``."""
    N = n + 1

    def jet(x):
        xx = float(x @ x)
        P = np.append(2 * x, xx)
        dP = np.vstack([2 * np.eye(n), 2 * x[None, :]])
        d2P = np.zeros((N, n, n))
        d2P[-1] = 2 * np.eye(n)
        return _rational_jet(P, dP, d2P, xx + 4, 2 * x, 2 * np.eye(n))

    def implicit(y):
        c = np.zeros(N)
        c[-1] = 0.5
        return float(np.linalg.norm(y - c)) - 0.5

    # |map(x)|^2 = |x|^2 / (|x|^2 + 4), so tau is the Euclidean radius reached
    return Immersion("horosphere", n, N, jet, implicit=implicit,
                     path=lambda e, tau: 2 * tau / math.sqrt(1 - tau * tau) * e,
                     chart_radius=math.inf)


def quadric_graph(n, coeffs=None):
    """Graph ``y_{n+1} = sum_i a_i x_i^2`` over ``|x| < 0.6``; not umbilic."""
    N = n + 1
    a = np.asarray(coeffs if coeffs is not None else [0.3 * (-0.5) ** i for i in range(n)], float)
    if a.size != n:
        raise ValueError(f"need {n} coefficients")

    def jet(x):
        y = np.append(x, a @ (x * x))
        J = np.vstack([np.eye(n), 2 * (a * x)[None, :]])
        S = np.zeros((N, n, n))
        S[-1] = 2 * np.diag(a)
        return y, J, S

    return Immersion("quadric-graph", n, N, jet,
                     implicit=lambda y: float(y[-1] - a @ (y[:-1] ** 2)), chart_radius=0.6)


# --------------------------------------------------------------------- catalog


@dataclass(frozen=True)
class CatalogEntry:
    kind: str
    params: dict
    immersion: Immersion
    expected: dict

    def __post_init__(self):
        e = self.expected
        if "C" in e and "sec_limit" in e:
            m = self.immersion.k_plus_1
            if abs(e["sec_limit"] + (1 - (e["C"] / m) ** 2)) > 1e-12:
                raise ValueError(f"{self.kind}: expected values violate sec = -(1 - C^2/(k+1)^2)")


def catalog(kind, n=2, **params):
    """Named example submanifolds with their exact invariants."""
    kind = str(kind).lower().replace("_", "-")
    if kind in ("totally-geodesic", "plane"):
        k = int(params.get("k", n - 1))
        imm = totally_geodesic(n, k)
        exp = dict(mean_curvature_norm=0.0, C=0.0, proj_limit=0.0, sec_limit=-1.0)
        return CatalogEntry("totally-geodesic", dict(n=n, k=k), imm, exp)
    if kind == "equidistant":
        t = float(params.get("t", 0.3))
        th = math.tanh(t)
        exp = dict(mean_curvature_norm=n * th, C=n * th, proj_limit=th,
                   sec_limit=-(1 - th * th))
        return CatalogEntry("equidistant", dict(n=n, t=t), equidistant(n, t), exp)
    if kind == "horosphere":
        exp = dict(mean_curvature_norm=float(n), C=float(n), proj_limit=1.0, sec_limit=0.0)
        return CatalogEntry("horosphere", dict(n=n), horosphere(n), exp)
    if kind in ("graph", "quadric-graph"):
        coeffs = params.get("coeffs")
        return CatalogEntry("quadric-graph", dict(n=n), quadric_graph(n, coeffs), {})
    if kind == "catenoid":
        raise UnsupportedError("catenoids need an external profile ODE and are not provided")
    raise ValueError(f"unknown catalog kind {kind!r}")


def parse_chart_spec(text):
    """Build a catalog entry from ``key = value`` lines (``kind`` is required).

    Blank lines and ``#`` comments are ignored.
    """
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        vals[key.lower()] = val
    if "kind" not in vals:
        raise ValueError("chart spec needs a 'kind' line")
    kind = vals.pop("kind")
    n = int(vals.pop("n", 2))
    params = {}
    for key, val in vals.items():
        if key == "k":
            params[key] = int(val)
        elif key == "coeffs":
            params[key] = [float(v) for v in val.split(",")]
        else:
            params[key] = float(val)
    return catalog(kind, n=n, **params)


# ------------------------------------------------------------------ samples


@dataclass(frozen=True)
class SubmanifoldSample:
    chart_pt: np.ndarray
    point: BallPoint
    tangent_frame: np.ndarray  # (N, k+1) coordinate tangent vectors
    normal_frame: np.ndarray  # (N, n-k) g_H-unit normals
    euclid_normals: np.ndarray = field(repr=False)
    second_derivs: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)  # (k+1, k+1, n-k)
    H: np.ndarray = field(repr=False)

    @property
    def k_plus_1(self):
        return self.h.shape[0]

    @property
    def h_inv(self):
        return np.linalg.inv(self.h)

    @property
    def traceless_B(self):
        m = self.k_plus_1
        return self.B - np.einsum("ab,c->abc", self.h, self.H / m)

    @property
    def mean_curvature_norm(self):
        return float(np.linalg.norm(self.H))

    @property
    def B_norm_sq(self):
        hi = self.h_inv
        return float(np.einsum("ac,bd,abk,cdk->", hi, hi, self.B, self.B))

    def flip_normal(self, idx):
        """Same sample with normal ``idx`` reversed."""
        sign = np.ones(self.euclid_normals.shape[1])
        sign[idx] = -1.0
        return replace(self, normal_frame=self.normal_frame * sign,
                       euclid_normals=self.euclid_normals * sign,
                       B=self.B * sign, H=self.H * sign)


def _second_form(J, S, nus, phi, dlogphi):
    """Components ``B_ab^c`` in the metric ``phi^2 delta`` against unit normals ``nus / phi``."""
    JJ = J.T @ J
    return phi * (np.einsum("iab,ic->abc", S, nus) - np.einsum("ab,c->abc", JJ, dlogphi @ nus))


def _normal_frame(J, y):
    Q, _ = np.linalg.qr(J, mode="complete")
    nus = Q[:, J.shape[1]:].copy()
    t = float(np.linalg.norm(y))
    radial = -y / t if t > 0 else None  # every defining function increases inward
    for c in range(nus.shape[1]):
        v = nus[:, c]
        s = radial @ v if radial is not None else 0.0
        if abs(s) <= 1e-14:
            s = v[np.argmax(np.abs(v))]
        if s < 0:
            nus[:, c] = -v
    return nus


def sample_geometry(imm, chart_pt):
    x = np.asarray(chart_pt, dtype=float)
    y, J, S = imm.jet(x)
    point = BallPoint(y)
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= RANK_TOL:
        raise RankDeficiencyError(f"{imm.name}: Jacobian rank deficient at chart point {x.tolist()}")
    lam = conformal_factor(point)
    nus = _normal_frame(J, y)
    h = lam * lam * (J.T @ J)
    B = _second_form(J, S, nus, lam, log_factor_gradient(point))
    H = np.einsum("ab,abc->c", np.linalg.inv(h), B)
    return SubmanifoldSample(x, point, J, nus / lam, nus, S, h, B, H)


def sample_many(imm, chart_pts, workers=1):
    pts = [np.asarray(p, dtype=float) for p in chart_pts]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda p: sample_geometry(imm, p), pts))
    return [sample_geometry(imm, p) for p in pts]


def interior_samples(imm, count=3):
    """Deterministic chart points away from the origin (defining functions have a cone point there)."""
    m = imm.k_plus_1
    rad = min(imm.chart_radius, 1.0)
    out = []
    for i in range(count):
        v = np.array([math.cos(1.3 * i + 0.4 * j + 0.2) for j in range(m)])
        out.append((0.25 + 0.2 * i) * rad * v / np.linalg.norm(v))
    return out


# ------------------------------------------------------ compactified quantities


@dataclass(frozen=True)
class _Barred:
    r: float
    h: np.ndarray
    B: np.ndarray
    mu_r: np.ndarray  # dr(unit normal of r^2 g_H) = cos of the boundary angles


def _barred(sample, kind):
    kind = DefiningFunctionKind.parse(kind)
    y = sample.point
    r = defining_value(kind, y)
    dr = defining_gradient(kind, y)
    lam = conformal_factor(y)
    phi = r * lam
    dlog = log_factor_gradient(y) + dr / r
    J, nus = sample.tangent_frame, sample.euclid_normals
    B = _second_form(J, sample.second_derivs, nus, phi, dlog)
    return _Barred(r, r * r * sample.h, B, (dr @ nus) / phi)


def conformal_2ff_residual(sample, r="r2"):
    """Max defect of ``B = Bbar / r + mubar(r) hbar / r^2`` componentwise."""
    bar = _barred(sample, r)
    rhs = bar.B / bar.r + np.einsum("ab,c->abc", bar.h, bar.mu_r) / bar.r ** 2
    return float(np.max(np.abs(sample.B - rhs)))


def traceless_conformal_identity(sample, r="r2", q=None):
    """Defect of ``|B0|_h^q dv_h = r^(q-k-1) |B0bar|_hbar^q dv_hbar`` at one sample."""
    m = sample.k_plus_1
    q = float(m if q is None else q)
    if q < m:
        raise ValueError(f"q must be at least k+1 = {m}")
    bar = _barred(sample, r)

    def norm_and_density(h, B):
        hi = np.linalg.inv(h)
        B0 = B - np.einsum("ab,c->abc", h, np.einsum("ab,abc->c", hi, B) / m)
        return math.sqrt(max(np.einsum("ac,bd,abk,cdk->", hi, hi, B0, B0), 0.0)), math.sqrt(np.linalg.det(h))

    a, va = norm_and_density(sample.h, sample.B)
    b, vb = norm_and_density(bar.h, bar.B)
    return abs(a ** q * va - bar.r ** (q - m) * b ** q * vb)


# -------------------------------------------------------- boundary behaviour


def _limit(rs, vals):
    return extrapolate(rs, vals, [1.0, 2.0, 3.0, 4.0])


@dataclass
class AngleReport:
    r_values: list
    cos_angles: list  # per path point, one entry per normal
    proj_sq: list
    cos_limits: list
    proj_sq_limit: float
    proj_sq_error: float
    mean_curvature_ratio: list  # H^c / (k+1) at the innermost point
    non_oblique_angle: float


def boundary_angles(imm, path, r="r2"):
    """Boundary angles ``cos Theta_c = mubar_c(r)`` along a path and their limits."""
    if len(path) < 4:
        raise ValueError("need at least 4 path points to extrapolate")
    samples = [sample_geometry(imm, x) for x in path]
    bars = [_barred(s, r) for s in samples]
    rs = [b.r for b in bars]
    cosines = [b.mu_r for b in bars]
    proj = [float(c @ c) for c in cosines]
    cos_lim = [_limit(rs, [c[i] for c in cosines])[0] for i in range(imm.codim)]
    p_lim, p_err = _limit(rs, proj)
    m = imm.k_plus_1
    return AngleReport(rs, [c.tolist() for c in cosines], proj, cos_lim, p_lim, p_err,
                       (samples[-1].H / m).tolist(),
                       math.acos(min(1.0, math.sqrt(max(p_lim, 0.0)))))


@dataclass
class SectionalReport:
    r_values: list
    values: list
    limit: float
    error: float
    C_hat: float
    predicted: float

    @property
    def consistency_gap(self):
        return abs(self.limit - self.predicted)


def sectional_curvature(sample, a=0, b=1):
    """Intrinsic sectional curvature of the coordinate plane ``(a, b)`` by the Gauss equation."""
    h, B = sample.h, sample.B
    area = h[a, a] * h[b, b] - h[a, b] ** 2
    if area <= 1e-14 * h[a, a] * h[b, b]:
        raise ValueError("degenerate plane")
    return -1.0 + (B[a, a] @ B[b, b] - B[a, b] @ B[a, b]) / area


def asymptotic_sectional(imm, path, plane=(0, 1), r="r2"):
    a, b = plane
    if imm.k_plus_1 < 2 or a == b:
        raise ValueError("need two distinct tangent directions")
    samples = [sample_geometry(imm, x) for x in path]
    rs = [defining_value(r, s.point) for s in samples]
    vals = [sectional_curvature(s, a, b) for s in samples]
    lim, err = _limit(rs, vals)
    angles = boundary_angles(imm, path, r)
    m = imm.k_plus_1
    C_hat = m * math.sqrt(max(angles.proj_sq_limit, 0.0))
    return SectionalReport(rs, vals, lim, err, C_hat, -(1 - (C_hat / m) ** 2))


# ---------------------------------------------------------- Lee restriction


@dataclass(frozen=True)
class AmbientHessianField:
    """Provider of ``b(u)/u`` in Cartesian components."""

    provider: object = field(repr=False)
    tag: str = "hyperbolic-exact"
    lee_derived: bool = True

    def __post_init__(self):
        if self.tag not in ("hyperbolic-exact", "synthetic"):
            raise ValueError(f"unknown tag {self.tag!r}")

    def __call__(self, y):
        return self.provider(as_point(y))


def hyperbolic_exact_field(u):
    """``b(u)/u`` computed from the eigenfunction itself (zero in hyperbolic space)."""
    return AmbientHessianField(lambda y: trace_free_hessian(u, y).scaled(1.0 / u.value(y)))


def synthetic_field(c, lee_derived=False):
    """``b(u)/u = c g_H``: every unit normal sees ``c``."""
    return AmbientHessianField(lambda y: SymBilinearForm(c * conformal_factor(y) ** 2 * np.eye(y.dim)),
                               tag="synthetic", lee_derived=lee_derived)


def _restricted_u(u, sample):
    y = sample.point
    g = u.gradient(y)
    return u.value(y), sample.tangent_frame.T @ g, sample.normal_frame.T @ g


def _intrinsic_laplacian(imm, u, x, step=1e-3):
    """``(1/sqrt h) d_a (sqrt h h^ab d_b u)`` with fourth-order central differences."""
    def flux(z):
        _, J, _ = imm.jet(z)
        y = BallPoint(imm.jet(z)[0])
        lam = conformal_factor(y)
        h = lam * lam * (J.T @ J)
        du = J.T @ u.gradient(y)
        return math.sqrt(np.linalg.det(h)) * np.linalg.solve(h, du), math.sqrt(np.linalg.det(h))

    m = imm.k_plus_1
    div = 0.0
    for a in range(m):
        e = np.zeros(m)
        e[a] = step
        f = [flux(x + c * e)[0][a] for c in (-2, -1, 1, 2)]
        div += (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * step)
    return div / flux(x)[1]


@dataclass
class LeeRestrictionReport:
    u_hat: list
    laplacian_intrinsic: list
    laplacian_restricted: list
    normal_trace: list
    max_discrepancy: float
    beta: float


def restricted_lee(imm, u, fld, samples):
    """Laplacian of ``u`` restricted to the submanifold, intrinsically and by restriction.

    The restriction formula is ``(k+1) u + H^c u_c - T`` where ``T`` is the
    normal trace of ``b(u)`` supplied by ``fld``; ``beta`` is ``max T / u``.
    """
    if imm.implicit is not None and imm.contains(u.base):
        raise ValueError("base point of the eigenfunction lies on the submanifold")
    m = imm.k_plus_1
    uh, lap_a, lap_b, trace = [], [], [], []
    for x in samples:
        s = sample_geometry(imm, x)
        val, _, du_n = _restricted_u(u, s)
        form = fld(s.point)
        T = val * sum(form(v, v) for v in s.normal_frame.T)
        uh.append(val)
        trace.append(T)
        lap_a.append(_intrinsic_laplacian(imm, u, s.chart_pt))
        lap_b.append(m * val + s.H @ du_n - T)
    beta = max(T / v for T, v in zip(trace, uh))
    if fld.lee_derived and beta < -1e-8:
        raise ValueError(f"Lee-derived field produced negative beta {beta}")
    disc = max(abs(a - b) for a, b in zip(lap_a, lap_b))
    return LeeRestrictionReport(uh, lap_a, lap_b, trace, disc, beta)


@dataclass
class BartaReport:
    s: float
    quotients: list
    lower_bound: float
    passed: bool
    optimal_s: float
    optimal_value: float


def barta_certificate(imm, u, s, alpha=0.0, beta=0.0, samples=None, method="restriction", fld=None):
    """Barta quotient ``-Delta(u^-s)/u^-s`` on the submanifold against ``s(k - s - alpha - beta)``."""
    if not s > 0:
        raise ValueError("s must be positive")
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    samples = interior_samples(imm) if samples is None else samples
    if len(samples) == 0:
        raise ValueError("no samples")
    fld = fld or hyperbolic_exact_field(u)
    k = imm.k_plus_1 - 1
    quotients = []
    for x in samples:
        smp = sample_geometry(imm, x)
        val, du_t, du_n = _restricted_u(u, smp)
        if val <= 0:
            raise ValueError("restricted eigenfunction must be positive")
        if method == "restriction":
            T = val * sum(fld(smp.point)(v, v) for v in smp.normal_frame.T)
            lap = (k + 1) * val + smp.H @ du_n - T
        elif method == "intrinsic":
            lap = _intrinsic_laplacian(imm, u, smp.chart_pt)
        else:
            raise ValueError(f"unknown method {method!r}")
        grad_sq = du_t @ np.linalg.solve(smp.h, du_t)
        quotients.append(s * lap / val - s * (s + 1) * grad_sq / val ** 2)
    bound = s * (k - s - alpha - beta)
    s_opt = (k - alpha - beta) / 2
    return BartaReport(s, quotients, bound, min(quotients) >= bound - 1e-8, s_opt, s_opt ** 2)


@dataclass
class EquidistantSandwich:
    t: list
    alpha: list
    certificate: list
    eigenvalue: list

    @property
    def holds(self):
        return all(c <= e + 1e-12 for c, e in zip(self.certificate, self.eigenvalue))


def equidistant_sandwich(n, t_values, samples=3):
    """``((k - alpha)/2)^2`` against ``((n-1)/2)^2 sech^2 t`` with ``alpha`` measured on samples."""
    alphas, certs, eigs, ts = [], [], [], []
    for t in t_values:
        if not n * math.tanh(t) < n - 1:
            raise ValueError(f"t={t} violates n tanh t < n - 1")
        imm = equidistant(n, t)
        a = max(sample_geometry(imm, x).mean_curvature_norm for x in interior_samples(imm, samples))
        ts.append(float(t))
        alphas.append(a)
        certs.append(((n - 1 - a) / 2) ** 2)
        eigs.append(((n - 1) / 2) ** 2 / math.cosh(t) ** 2)
    return EquidistantSandwich(ts, alphas, certs, eigs)


# ------------------------------------------------------------------ stability


@dataclass(frozen=True)
class Bump:
    center: tuple
    radius: float

    def value_grad(self, x):
        c = np.asarray(self.center, dtype=float)
        d = (x - c) / self.radius
        s2 = float(d @ d)
        if s2 >= 1.0:
            return 0.0, np.zeros_like(x)
        w = 1.0 - s2
        return w ** 3, -6.0 * w * w * d / self.radius


@dataclass
class StabilityReport:
    q_values: list
    max_B_sq: float
    threshold: float
    applies: bool
    all_nonnegative: bool

    @property
    def consistent(self):
        return self.all_nonnegative or not self.applies


def stability_check(imm, beta_hat=0.0, bumps=None, order=16, B_sq_override=None):
    """Evaluate ``Q(f) = int |grad f|^2 - (|B|^2 - n) f^2`` for bump test functions.

    ``B_sq_override`` replaces ``|B|^2`` by a chart function (negative controls).
    """
    if imm.codim != 1:
        raise ValueError("stability form is defined for hypersurfaces")
    n = imm.k_plus_1
    if bumps is None:
        bumps = [Bump(tuple(np.full(n, 0.1)), 0.3), Bump(tuple(np.zeros(n)), 0.5),
                 Bump(tuple(np.r_[0.3, np.zeros(n - 1)]), 0.2)]
    xg, wg = np.polynomial.legendre.leggauss(order)
    grids = np.meshgrid(*([xg] * n), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack(np.meshgrid(*([wg] * n), indexing="ij")), axis=0).ravel()
    qs, bmax = [], 0.0
    for bump in bumps:
        c = np.asarray(bump.center, dtype=float)
        total = 0.0
        for node, w in zip(nodes, weights):
            x = c + bump.radius * node
            f, df = bump.value_grad(x)
            if f == 0.0:
                continue
            smp = sample_geometry(imm, x)
            B2 = smp.B_norm_sq if B_sq_override is None else float(B_sq_override(x))
            bmax = max(bmax, B2)
            dens = math.sqrt(np.linalg.det(smp.h))
            total += w * bump.radius ** n * dens * (df @ np.linalg.solve(smp.h, df) - (B2 - n) * f * f)
        qs.append(float(total))
    threshold = (n - 1 - beta_hat) ** 2 / 4 + n
    return StabilityReport(qs, float(bmax), threshold, bool(bmax <= threshold), bool(min(qs) >= 0.0))
