import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab import ball
from ahlab import submanifold as sm
from ahlab.ball import UnsupportedError

chart_points = (st.tuples(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4)).map(np.array)
                .filter(lambda x: np.linalg.norm(x) > 0.05))  # graph passes through the origin


@pytest.mark.parametrize("n, k", [(2, 1), (3, 2), (3, 1), (4, 3)])
def test_totally_geodesic_has_vanishing_form(n, k):
    imm = sm.totally_geodesic(n, k)
    for x in sm.interior_samples(imm):
        s = sm.sample_geometry(imm, x)
        assert np.max(np.abs(s.B)) <= 1e-12
        assert s.mean_curvature_norm <= 1e-12


@pytest.mark.parametrize("n, t", [(2, 0.3), (3, 0.1), (3, 0.5)])
def test_equidistant_mean_curvature(n, t):
    entry = sm.catalog("equidistant", n=n, t=t)
    for x in sm.interior_samples(entry.immersion):
        s = sm.sample_geometry(entry.immersion, x)
        assert s.mean_curvature_norm == pytest.approx(n * math.tanh(t), rel=1e-12)
        assert entry.immersion.contains(s.point)


def test_horosphere_mean_curvature():
    for n in (2, 3):
        imm = sm.horosphere(n)
        for x in sm.interior_samples(imm):
            s = sm.sample_geometry(imm, x)
            assert s.mean_curvature_norm == pytest.approx(n, rel=1e-10)
            assert np.max(np.abs(s.traceless_B)) <= 1e-10


def test_catalog_rejects_unknown_and_catenoid():
    with pytest.raises(UnsupportedError):
        sm.catalog("catenoid")
    with pytest.raises(ValueError):
        sm.catalog("torus")
    with pytest.raises(ValueError):
        sm.totally_geodesic(2, 2)


def test_catalog_entry_consistency_check():
    entry = sm.catalog("equidistant", n=2, t=0.4)
    bad = dict(entry.expected, sec_limit=0.0)
    with pytest.raises(ValueError):
        sm.CatalogEntry(entry.kind, entry.params, entry.immersion, bad)


def test_parse_chart_spec():
    entry = sm.parse_chart_spec("# hypersurface\nkind = equidistant\nn = 3\nt = 0.2\n")
    assert entry.kind == "equidistant" and entry.params == dict(n=3, t=0.2)
    g = sm.parse_chart_spec("kind = graph\ncoeffs = 0.1, 0.2\n")
    assert g.immersion.chart_dim == 2
    with pytest.raises(ValueError):
        sm.parse_chart_spec("n = 2\n")
    with pytest.raises(ValueError):
        sm.parse_chart_spec("kind equidistant\n")


def test_rank_deficiency_is_reported():
    flat = sm.Immersion("collapsed", 2, 3,
                        lambda x: (np.array([x[0], x[0], 0.0]) * 0.1,
                                   np.array([[0.1, 0.0], [0.1, 0.0], [0.0, 0.0]]),
                                   np.zeros((3, 2, 2))))
    with pytest.raises(sm.RankDeficiencyError):
        sm.sample_geometry(flat, np.array([0.1, 0.1]))


@given(chart_points, st.sampled_from(["r2", "rho"]))
def test_conformal_second_form_law(x, r):
    imm = sm.quadric_graph(2)
    s = sm.sample_geometry(imm, x)
    assert sm.conformal_2ff_residual(s, r) <= 1e-10


@given(chart_points, st.sampled_from(["r2", "rho"]))
def test_traceless_conformal_invariance(x, r):
    imm = sm.quadric_graph(2)
    assert sm.traceless_conformal_identity(sm.sample_geometry(imm, x), r) <= 1e-10


def test_traceless_rejects_small_exponent():
    s = sm.sample_geometry(sm.quadric_graph(2), np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        sm.traceless_conformal_identity(s, "r2", q=1)


@given(chart_points)
def test_normal_flip_invariance(x):
    imm = sm.equidistant(3, 0.4)
    s = sm.sample_geometry(imm, np.r_[x, 0.1])
    f = s.flip_normal(0)
    assert f.mean_curvature_norm == pytest.approx(s.mean_curvature_norm, rel=1e-13)
    assert f.B_norm_sq == pytest.approx(s.B_norm_sq, rel=1e-13)
    assert sm.sectional_curvature(f) == pytest.approx(sm.sectional_curvature(s), abs=1e-13)
    assert np.allclose(f.H, -s.H)


@pytest.mark.parametrize("n, t", [(2, 0.3), (3, 0.5)])
def test_equidistant_boundary_angle(n, t):
    imm = sm.equidistant(n, t)
    rep = sm.boundary_angles(imm, imm.boundary_path(np.r_[1.0, np.zeros(n - 1)]))
    assert rep.proj_sq_limit == pytest.approx(math.tanh(t) ** 2, abs=1e-6)
    assert abs(rep.cos_limits[0]) == pytest.approx(math.tanh(t), abs=1e-6)


def test_horosphere_tangent_at_infinity():
    imm = sm.horosphere(2)
    rep = sm.boundary_angles(imm, imm.boundary_path(np.array([1.0, 0.0])))
    assert rep.proj_sq_limit == pytest.approx(1.0, abs=1e-6)


def test_boundary_angles_need_four_points():
    imm = sm.equidistant(2, 0.3)
    with pytest.raises(ValueError):
        sm.boundary_angles(imm, imm.boundary_path(np.array([1.0, 0.0]), taus=(0.5, 0.7, 0.9)))


@pytest.mark.parametrize("t", [0.2, 0.6])
def test_asymptotic_sectional_curvature(t):
    imm = sm.equidistant(3, t)
    rep = sm.asymptotic_sectional(imm, imm.boundary_path(np.array([1.0, 0.0, 0.0])))
    assert rep.limit == pytest.approx(-(1 - math.tanh(t) ** 2), abs=1e-6)
    assert rep.consistency_gap <= 1e-6


def test_lee_restriction_on_totally_geodesic_and_graph():
    u = ball.LeeEigenfunction([0.0, 0.0, -0.3])
    for imm in (sm.totally_geodesic(2, 1), sm.quadric_graph(2)):
        rep = sm.restricted_lee(imm, u, sm.hyperbolic_exact_field(u), sm.interior_samples(imm))
        assert rep.max_discrepancy <= 1e-6 * max(rep.u_hat)
        assert abs(rep.beta) <= 1e-10


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_synthetic_field_beta(c):
    imm = sm.totally_geodesic(3, 1)
    u = ball.LeeEigenfunction([0.0, 0.0, 0.0, -0.3])
    rep = sm.restricted_lee(imm, u, sm.synthetic_field(c), sm.interior_samples(imm))
    assert rep.beta == pytest.approx(c * 2, rel=1e-10)


def test_lee_restriction_guards():
    imm = sm.totally_geodesic(2, 1)
    on = ball.LeeEigenfunction([0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        sm.restricted_lee(imm, on, sm.hyperbolic_exact_field(on), sm.interior_samples(imm))
    u = ball.LeeEigenfunction([0.0, 0.0, -0.3])
    with pytest.raises(ValueError):
        sm.restricted_lee(imm, u, sm.synthetic_field(-1.0, lee_derived=True), sm.interior_samples(imm))
    with pytest.raises(ValueError):
        sm.AmbientHessianField(lambda y: None, tag="mystery")


@pytest.mark.parametrize("n, k", [(2, 1), (3, 2), (4, 3)])
@pytest.mark.parametrize("method", ["restriction", "intrinsic"])
def test_barta_certificate_totally_geodesic(n, k, method):
    imm = sm.totally_geodesic(n, k)
    u = ball.LeeEigenfunction(np.r_[np.zeros(n), -0.3])
    rep = sm.barta_certificate(imm, u, k / 2, method=method)
    assert rep.passed
    assert rep.optimal_value == pytest.approx((k / 2) ** 2)


def test_barta_argument_checks():
    imm = sm.totally_geodesic(2, 1)
    u = ball.LeeEigenfunction([0.0, 0.0, -0.3])
    with pytest.raises(ValueError):
        sm.barta_certificate(imm, u, 0.0)
    with pytest.raises(ValueError):
        sm.barta_certificate(imm, u, 0.5, alpha=-1)
    with pytest.raises(ValueError):
        sm.barta_certificate(imm, u, 0.5, method="guess")


def test_equidistant_sandwich():
    rep = sm.equidistant_sandwich(3, [0.05, 0.2, 0.4])
    assert rep.holds
    assert rep.alpha[1] == pytest.approx(3 * math.tanh(0.2), rel=1e-12)
    with pytest.raises(ValueError):
        sm.equidistant_sandwich(2, [1.0])


def test_stability_positive_cases():
    for imm in (sm.totally_geodesic(3, 2), sm.equidistant(3, 0.2)):
        rep = sm.stability_check(imm, order=10)
        assert rep.applies and rep.all_nonnegative and rep.consistent


def test_stability_negative_control():
    imm = sm.totally_geodesic(3, 2)
    rep = sm.stability_check(imm, order=10, B_sq_override=lambda x: 100.0)
    assert not rep.applies
    assert min(rep.q_values) < 0
    assert rep.consistent


def test_stability_requires_hypersurface():
    with pytest.raises(ValueError):
        sm.stability_check(sm.totally_geodesic(3, 1))
