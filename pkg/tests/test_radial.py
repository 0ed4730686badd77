import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab import radial
from ahlab.radial import RadialProblem, ball_first_eigenvalue
from oracles import bessel_j0_first_root, h3_ball_eigenvalue, shooting_eigenvalue

J0_SQ = 5.783185962946788  # bessel_j0_first_root() ** 2
SHOOTING = {  # shooting_eigenvalue(n, p, R)
    (2, 3.0, 2.0): 3.451818111931731,
    (2, 1.5, 2.0): 3.1404013318236723,
    (3, 4.0, 1.0): 68.50698141037583,
}


def test_problem_validation():
    for kw in [dict(n=0, p=2), dict(n=2, p=1.0), dict(n=2, p=2, kappa=0), dict(n=2, p=2, R=-1),
               dict(n=2, p=2, mesh=50)]:
        with pytest.raises(ValueError):
            RadialProblem(**kw)


@pytest.mark.parametrize("R", [1.0, 2.0, 4.0, math.pi, 8.0])
def test_h3_closed_form(R):
    res = ball_first_eigenvalue(RadialProblem(2, 2.0, 1.0, R, 1000))
    exact = h3_ball_eigenvalue(R)
    assert abs(res.lam - exact) / exact <= 1e-3
    assert res.lower_bound <= res.lam <= res.upper_bound * (1 + radial.BOUND_SLACK)


def test_euclidean_disk_limit():
    assert bessel_j0_first_root() ** 2 == pytest.approx(J0_SQ, rel=1e-14)
    res = ball_first_eigenvalue(RadialProblem(1, 2.0, 1.0, 0.1, 1000))
    assert res.lam * 0.01 == pytest.approx(J0_SQ, rel=1e-2)


@pytest.mark.parametrize("key", sorted(SHOOTING))
def test_p_laplacian_against_shooting(key):
    n, p, R = key
    res = ball_first_eigenvalue(RadialProblem(n, p, 1.0, R, 2000))
    assert res.lam == pytest.approx(SHOOTING[key], rel=1e-4)


@pytest.mark.slow
def test_shooting_oracle_reproduces_frozen_values():
    for (n, p, R), val in SHOOTING.items():
        assert shooting_eigenvalue(n, p, R) == pytest.approx(val, rel=1e-9)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_eigenfunction_shape_and_consistency(p):
    prob = RadialProblem(2, p, 1.0, 3.0, 400)
    res = ball_first_eigenvalue(prob)
    f = res.eigenfunction
    assert f[-1] == 0.0 and np.all(f[:-1] > 0)
    assert np.max(f) == pytest.approx(1.0)
    assert radial.discrete_quotient(prob, f) == pytest.approx(res.lam, rel=1e-10)
    # regular centre: the profile is flat at t = 0
    assert abs(f[1] - f[0]) <= 1e-3


def test_second_order_convergence():
    errs = [abs(ball_first_eigenvalue(RadialProblem(2, 2.0, 1.0, 2.0, M)).lam - h3_ball_eigenvalue(2.0))
            for M in (500, 1000)]
    assert errs[1] <= 0.5 * errs[0]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_refinement_lowers_eigenvalue(p):
    lams = [ball_first_eigenvalue(RadialProblem(2, p, 1.0, 2.0, M)).lam for M in (200, 400, 800)]
    assert lams[0] > lams[1] > lams[2]


@given(st.sampled_from([1, 2, 3]), st.sampled_from([1.5, 2.0, 2.5, 3.0]), st.floats(0.3, 3.0),
       st.floats(0.5, 6.0))
def test_mckean_bound_holds(n, p, kappa, R):
    res = ball_first_eigenvalue(RadialProblem(n, p, kappa, R, 200))
    assert res.lam >= (n * kappa / p) ** p - 1e-8


@given(st.sampled_from([1, 2, 3]), st.sampled_from([1.5, 2.0, 3.0]), st.floats(0.25, 4.0))
def test_scaling_law(n, p, kappa):
    rep = radial.scaling_check(RadialProblem(n, p, kappa, 1.0, 200))
    assert rep.rel_error <= 1e-6


def test_scaling_examples():
    assert radial.scaling_check(RadialProblem(2, 2.0, 2.0, 1.0, 500)).ratio == pytest.approx(4.0, rel=1e-10)
    assert radial.scaling_check(RadialProblem(2, 3.0, 1.0, 1.0, 500)).rel_error <= 1e-12
    assert radial.scaling_check(RadialProblem(2, 3.0, 0.5, 1.0, 500)).ratio == pytest.approx(0.125, rel=1e-6)


def test_monotonicity_scan():
    rep = radial.monotonicity_scan(2, 2.0, 1.0, [1, 2, 4, 8], mesh=1000)
    for R, r in zip([1, 2, 4, 8], rep.results):
        assert r.lam == pytest.approx(h3_ball_eigenvalue(R), rel=1e-3)
    assert rep.decreasing
    assert rep.results[-1].lam - 1.0 <= 0.16
    assert rep.empirical_rate == pytest.approx(2.0, abs=0.1)


def test_scan_requires_increasing_radii():
    with pytest.raises(ValueError):
        radial.monotonicity_scan(2, 2.0, 1.0, [2, 1])


def test_scan_failure_keeps_partial_results(monkeypatch):
    real = radial.ball_first_eigenvalue

    def flaky(prob, **kw):
        if prob.R > 3:
            raise radial.ConvergenceError("forced", last=None)
        return real(prob, **kw)

    monkeypatch.setattr(radial, "ball_first_eigenvalue", flaky)
    with pytest.raises(radial.ScanError) as info:
        radial.monotonicity_scan(2, 2.0, 1.0, [1, 2, 4])
    assert len(info.value.partial) == 2


def test_descent_nonconvergence_carries_iterate():
    prob = RadialProblem(2, 3.0, 1.0, 2.0, 200)
    mesh = radial.discretize(prob)
    f, _ = radial._inverse_iteration(prob, mesh, 1.0)
    with pytest.raises(radial.ConvergenceError) as info:
        radial._descent(prob, mesh, f, (2 / 3) ** 3, max_iter=2)
    assert info.value.last is not None and info.value.last.shape == f.shape


@pytest.mark.parametrize("n, p, target", [(2, 2.0, 1.0), (3, 2.0, 2.25), (2, 3.0, (2 / 3) ** 3)])
def test_sandwich(n, p, target):
    rep = radial.sandwich_report(n, p)
    assert rep.lower == pytest.approx(target) and rep.upper == pytest.approx(target)
    assert rep.limit == pytest.approx(target, abs=5e-2)
    assert rep.agrees()


def test_weight_is_normalised_and_overflow_safe():
    assert radial.weight(50.0, 3, 20.0, 50.0) == pytest.approx(1.0)
    assert np.isfinite(radial.weight(np.linspace(0, 400, 5), 4, 1.0, 400.0)).all()
