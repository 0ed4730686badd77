import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab import _kernels_py, kernels, radial

backends = kernels.backends()
needs_compiled = pytest.mark.skipif("cython" not in backends, reason="extension not built")


def mesh_and_profile(M, p, seed):
    prob = radial.RadialProblem(2, p, 1.0, 3.0, M)
    mesh = radial.discretize(prob)
    rng = np.random.default_rng(seed)
    f = np.cos(0.5 * np.pi * mesh.t / prob.R) + 0.1 * rng.standard_normal(M + 1)
    f[-1] = 0.0
    return mesh, f


@needs_compiled
@given(st.integers(100, 400), st.sampled_from([1.2, 1.5, 2.0, 2.5, 3.0, 4.0]), st.integers(0, 1000))
def test_energy_grad_backends_agree(M, p, seed):
    mesh, f = mesh_and_profile(M, p, seed)
    a = backends["cython"].energy_grad(f, p, mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
    b = _kernels_py.energy_grad(f, p, mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    assert a[1] == pytest.approx(b[1], rel=1e-12)
    for x, y in zip(a[2:], b[2:]):
        assert np.allclose(x, y, rtol=1e-11, atol=1e-13 * np.max(np.abs(y)))


@needs_compiled
@given(st.integers(100, 400), st.sampled_from([1.5, 2.0, 3.0]), st.integers(0, 1000))
def test_assemble_backends_agree(M, p, seed):
    mesh, f = mesh_and_profile(M, p, seed)
    a = backends["cython"].assemble(f, p, mesh.inv_h, mesh.W, mesh.wq, mesh.xi, 1e-6)
    b = _kernels_py.assemble(f, p, mesh.inv_h, mesh.W, mesh.wq, mesh.xi, 1e-6)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-11, atol=1e-14 * np.max(np.abs(y)))


@needs_compiled
@given(st.integers(2, 200), st.integers(0, 1000))
def test_tridiagonal_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    off = rng.uniform(-1, 1, n - 1)
    diag = np.abs(np.r_[off, 0]) + np.abs(np.r_[0, off]) + rng.uniform(0.1, 1.0, n)
    rhs = rng.standard_normal(n)
    xa, pa = backends["cython"].tridiag_solve(diag, off, rhs)
    xb, pb = _kernels_py.tridiag_solve(diag, off, rhs)
    assert pa > 0 and pb > 0
    assert np.allclose(xa, xb, rtol=1e-10, atol=1e-12)
    assert np.allclose(_kernels_py.tridiag_matvec(diag, off, xa), rhs, atol=1e-10)
    assert np.allclose(backends["cython"].tridiag_matvec(diag, off, xa), rhs, atol=1e-10)


@pytest.mark.parametrize("name", sorted(backends))
def test_indefinite_system_flagged(name):
    diag = np.array([1.0, -1.0, 1.0])
    off = np.array([0.1, 0.1])
    _, piv = backends[name].tridiag_solve(diag, off, np.ones(3))
    assert piv <= 0


@pytest.mark.parametrize("name", sorted(backends))
def test_energy_gradient_matches_finite_difference(name):
    mesh, f = mesh_and_profile(120, 2.5, 3)
    mod = backends[name]
    N, D, gN, gD = mod.energy_grad(f, 2.5, mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
    for i in (0, 17, 60, 119):
        e = np.zeros_like(f)
        e[i] = 1e-6
        Np, Dp, _, _ = mod.energy_grad(f + e, 2.5, mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
        Nm, Dm, _, _ = mod.energy_grad(f - e, 2.5, mesh.inv_h, mesh.W, mesh.wq, mesh.xi)
        assert (Np - Nm) / 2e-6 == pytest.approx(gN[i], rel=1e-5, abs=1e-9 * N)
        assert (Dp - Dm) / 2e-6 == pytest.approx(gD[i], rel=1e-5, abs=1e-9 * D)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


def _solve_in_subprocess(env_flag):
    import os
    import subprocess
    import sys
    env = dict(os.environ)
    env.pop("AHLAB_PURE_PYTHON", None)
    if env_flag:
        env["AHLAB_PURE_PYTHON"] = "1"
    code = ("from ahlab import BACKEND, radial;"
            "r = radial.ball_first_eigenvalue(radial.RadialProblem(2, 3.0, 1.0, 2.0, 300));"
            "print(BACKEND, repr(r.lam))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, lam = out.stdout.split()
    return name, float(lam)


def test_pure_python_fallback_selected_at_import():
    name, lam_py = _solve_in_subprocess(True)
    assert name == "python"
    default, lam_default = _solve_in_subprocess(False)
    assert default in ("cython", "python")
    assert lam_default == pytest.approx(lam_py, rel=1e-10)
