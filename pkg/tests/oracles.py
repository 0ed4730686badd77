"""Independent reference computations used to freeze expected values.

Nothing here imports the package: each oracle takes a different route to
the same number (series, ODE shooting, closed forms).
"""
import math

from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def bessel_j0(x, terms=60):
    return sum((-1) ** k * (x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def bessel_j0_first_root(lo=2.0, hi=3.0, tol=1e-15):
    flo = bessel_j0(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = bessel_j0(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def h3_ball_eigenvalue(R):
    # f = g / sinh t turns the radial equation into g'' + (lam - 1) g = 0
    return 1.0 + (math.pi / R) ** 2


def _first_zero(lam, n, p, kappa=1.0, t_end=10.0):
    """Shoot ``(w |f'|^(p-2) f')' = -lam w |f|^(p-2) f`` from the regular centre."""
    def w(t):
        return (math.sinh(kappa * t) / kappa) ** n

    t0 = 1e-4
    phi0 = -lam * t0 ** (n + 1) / (n + 1)

    def rhs(t, z):
        f, phi = z
        mag = abs(phi / w(t)) ** (1 / (p - 1))
        return [-mag if phi < 0 else mag, -lam * w(t) * abs(f) ** (p - 2) * f]

    def hit(t, z):
        return z[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (t0, t_end), [1.0, phi0], events=hit, rtol=1e-12, atol=1e-14,
                    method="DOP853")
    return sol.t_events[0][0] if sol.t_events[0].size else math.inf


def shooting_eigenvalue(n, p, R, kappa=1.0):
    lo = (n * kappa / p) ** p + 1e-6
    return brentq(lambda lam: _first_zero(lam, n, p, kappa) - R, lo, 200.0, xtol=1e-13)


def F_two_two(s):
    return 1.0 + s - s * s
