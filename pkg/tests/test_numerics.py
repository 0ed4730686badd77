import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahlab.extrapolation import ExtrapolationError, extrapolate, fit_limit, richardson_table
from ahlab.quadrature import QuadratureSpec, integrate, integrate_pieces


def test_spec_rejects_small_rules():
    with pytest.raises(ValueError):
        QuadratureSpec(nodes=32)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=12), st.floats(-2, 0), st.floats(0.1, 2))
def test_polynomials_exact(coeffs, a, b):
    p = np.polynomial.Polynomial(coeffs)
    val, _ = integrate(p, a, b)
    P = p.integ()
    assert val == pytest.approx(P(b) - P(a), abs=1e-12 * (1 + abs(P(b) - P(a))))


def test_reversed_and_empty_intervals():
    assert integrate(np.cos, 1.0, 1.0) == (0.0, 0.0)
    v, _ = integrate(np.cos, 1.0, 0.0)
    assert v == pytest.approx(-math.sin(1.0), rel=1e-14)


def test_kink_handled_by_breakpoints():
    f = lambda x: np.abs(x - 0.3)
    v, _ = integrate_pieces(f, [0.0, 0.3, 1.0])
    assert v == pytest.approx(0.5 * 0.09 + 0.5 * 0.49, rel=1e-14)


def test_endpoint_singularity_adaptive():
    v, err = integrate(lambda x: x ** -0.5, 0.0, 1.0, QuadratureSpec(rtol=1e-10))
    assert v == pytest.approx(2.0, rel=1e-8)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_extrapolation_recovers_exact_models(L, c1, c2):
    h = 2.0 ** -np.arange(2, 9)
    v = L + c1 * h + c2 * h ** 2.5
    lim, err = extrapolate(h, v, [1.0, 2.5])
    assert lim == pytest.approx(L, abs=1e-8 * (1 + abs(c1) + abs(c2)))


def test_resonant_exponents_use_log_term():
    h = 2.0 ** -np.arange(2, 10)
    v = 1.0 + 0.5 * h + 0.3 * h * np.log(h)
    assert fit_limit(h, v, [1.0, 1.0]) == pytest.approx(1.0, abs=1e-10)


def test_nonfinite_sequence_raises():
    with pytest.raises(ExtrapolationError) as info:
        extrapolate([0.5, 0.25, 0.125], [1.0, np.nan, 1.0], [1.0])
    assert info.value.values is not None


def test_richardson_table_second_order():
    h = np.array([0.1, 0.05, 0.025])
    v = 3.0 + 2 * h ** 2 + h ** 3
    assert richardson_table(2.0, v, order=2) == pytest.approx(3.0, abs=1e-12)
