"""Compiled vs numpy radial-solver kernels, plus an end-to-end eigenvalue solve.

    python benchmarks/bench_kernels.py --sizes 1000 10000 --repeat 20
"""
import argparse
import timeit
from contextlib import contextmanager

import numpy as np

from ahlab import kernels, radial

KERNELS = ("energy_grad", "assemble", "tridiag_solve", "tridiag_matvec")


@contextmanager
def use_backend(mod):
    saved = {name: getattr(kernels, name) for name in KERNELS}
    for name in KERNELS:
        setattr(kernels, name, getattr(mod, name))
    try:
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def kernel_calls(mod, M, p):
    prob = radial.RadialProblem(2, p, 1.0, 4.0, M)
    mesh = radial.discretize(prob)
    f = np.cos(0.5 * np.pi * mesh.t / prob.R)
    Kd, Ko, Md, Mo = mod.assemble(f, p, mesh.inv_h, mesh.W, mesh.wq, mesh.xi, 1e-40)
    rhs = np.ones(M)
    return {
        "energy_grad": lambda: mod.energy_grad(f, p, mesh.inv_h, mesh.W, mesh.wq, mesh.xi),
        "assemble": lambda: mod.assemble(f, p, mesh.inv_h, mesh.W, mesh.wq, mesh.xi, 1e-40),
        "tridiag_solve": lambda: mod.tridiag_solve(Kd[:-1].copy(), Ko[:-1].copy(), rhs),
        "tridiag_matvec": lambda: mod.tridiag_matvec(Kd, Ko, f),
    }


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000])
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    mods = kernels.backends()
    if "cython" not in mods:
        print("compiled extension not built; only the numpy backend is available")
    names = sorted(mods)
    print(f"{'kernel':<16}{'M':>8}" + "".join(f"{n + ' [us]':>16}" for n in names) + f"{'speedup':>10}")
    for M in args.sizes:
        calls = {n: kernel_calls(mods[n], M, args.p) for n in names}
        for k in KERNELS:
            t = {n: best_of(calls[n][k], args.repeat) * 1e6 for n in names}
            ratio = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{k:<16}{M:>8}" + "".join(f"{t[n]:>16.1f}" for n in names) + f"{ratio:>10.2f}")
    for M in args.sizes:
        prob = radial.RadialProblem(2, args.p, 1.0, 4.0, M)
        t = {}
        for n in names:
            with use_backend(mods[n]):
                t[n] = best_of(lambda: radial.ball_first_eigenvalue(prob), max(1, args.repeat // 10)) * 1e3
        ratio = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{'solve p=%g' % args.p:<16}{M:>8}" + "".join(f"{t[n] * 1e3:>16.0f}" for n in names)
              + f"{ratio:>10.2f}")


if __name__ == "__main__":
    main()
