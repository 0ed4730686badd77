"""Pure numpy versions of the radial-solver kernels.

Mesh conventions shared with ``_kernels.pyx``: ``f`` holds all ``M + 1``
nodal values (the last one is the Dirichlet node), ``W[e]`` is the weight
integral over element ``e``, ``wq[e, q]`` are the weighted quadrature
weights at the reference points ``xi[q]`` of element ``e``.
"""
import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import solveh_banded


def _element_values(f, xi):
    return f[:-1, None] * (1.0 - xi)[None, :] + f[1:, None] * xi[None, :]


def energy_grad(f, p, inv_h, W, wq, xi):
    """Return ``N, D, dN/df, dD/df`` for the discrete p-Rayleigh quotient."""
    g = (f[1:] - f[:-1]) * inv_h
    ag = np.abs(g)
    N = float(np.dot(W, ag ** p))
    fq = _element_values(f, xi)
    afq = np.abs(fq)
    D = float(np.sum(wq * afq ** p))

    flux = p * W * ag ** (p - 1) * np.sign(g) * inv_h
    gN = np.zeros_like(f)
    gN[:-1] -= flux
    gN[1:] += flux

    src = p * wq * afq ** (p - 1) * np.sign(fq)
    gD = np.zeros_like(f)
    gD[:-1] += src @ (1.0 - xi)
    gD[1:] += src @ xi
    return N, D, gN, gD


def assemble(f, p, inv_h, W, wq, xi, floor):
    """Frozen-coefficient stiffness and mass matrices (tridiagonal).

    Coefficients ``|f'|^(p-2)`` and ``|f|^(p-2)`` are floored at ``floor``
    times their maxima so the matrices stay finite for any ``p > 1``.
    Returns ``(Kd, Ko, Md, Mo)``: diagonals of length ``M + 1`` and
    off-diagonals of length ``M``.
    """
    g = np.abs((f[1:] - f[:-1]) * inv_h)
    fq = np.abs(_element_values(f, xi))
    if p == 2.0:
        a = np.ones_like(g)
        b = np.ones_like(fq)
    else:
        a = np.maximum(g, floor * g.max()) ** (p - 2.0)
        b = np.maximum(fq, floor * fq.max()) ** (p - 2.0)
    k = W * a * inv_h * inv_h
    Kd = np.zeros_like(f)
    Kd[:-1] += k
    Kd[1:] += k
    Ko = -k
    wb = wq * b
    Md = np.zeros_like(f)
    Md[:-1] += wb @ ((1.0 - xi) ** 2)
    Md[1:] += wb @ (xi ** 2)
    Mo = wb @ (xi * (1.0 - xi))
    return Kd, Ko, Md, Mo


def tridiag_solve(diag, off, rhs):
    """Solve a symmetric positive definite tridiagonal system.

    Returns ``(x, min_pivot)``; ``min_pivot <= 0`` flags a matrix that is
    not positive definite (the compiled kernel reports the true smallest
    pivot, this fallback only its sign).
    """
    ab = np.empty((2, diag.size))
    ab[0, 0] = 0.0
    ab[0, 1:] = off
    ab[1] = diag
    try:
        x = solveh_banded(ab, rhs, check_finite=False)
    except LinAlgError:
        return np.full(diag.size, np.nan), -1.0
    return x, 1.0


def tridiag_matvec(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y
