import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphere_entropy import Explicit, Geometric, PolynomialDecay, PositivityError
from sphere_entropy.harmonics import harmonic_dim
from sphere_entropy.rkhs import embedding_norms, log_det_terms, log_det_Tm


def test_norm_examples():
    n = embedding_norms(Geometric(1.0, 0.5), 1)
    assert n.kappa_sq == pytest.approx(2.0, rel=1e-15)
    assert n.kappa_m_sq == 1.5
    assert n.kappa_s_m_sq <= 0.5 + 1e-16
    n = embedding_norms(Explicit((1.0,)), 0)
    assert (n.kappa_sq, n.kappa_m_sq, n.kappa_s_m_sq) == (1.0, 1.0, 0.0)
    assert n.kappa == n.kappa_m == 1.0


@pytest.mark.parametrize("theta", [0.25, 0.5, 0.9])
def test_decomposition_and_geometric_tail(theta):
    g = Geometric(1.0, theta)
    for m in range(51):
        n = embedding_norms(g, m)
        assert n.kappa_sq == pytest.approx(n.kappa_m_sq + n.kappa_s_m_sq, rel=1e-12)
        assert n.kappa_sq == pytest.approx(1 / (1 - theta), rel=1e-12)
        assert n.kappa_s_m_sq <= theta ** (m + 1) / (1 - theta) * (1 + 1e-15)
        assert min(n.kappa_sq, n.kappa_m_sq, n.kappa_s_m_sq) >= 0


def test_polynomial_norms_are_refined_to_tolerance():
    p = PolynomialDecay(c1=1, beta=1, c2=1, rho=3, d=2)
    true_total = 1.0 + 1.2020569031595942  # a_0 = 1, then zeta(3)
    n = embedding_norms(p, 3, tol=1e-9)
    assert n.kappa_m_sq == pytest.approx(1 + 1 + 1 / 8 + 1 / 27, rel=1e-15)
    assert n.kappa_sq >= true_total - 1e-15
    assert n.kappa_sq - n.radius <= true_total + 1e-15
    assert n.radius <= 1e-9


def test_log_det_examples():
    g = Geometric(1.0, 0.5)
    assert log_det_Tm(g, 2, 0) == 0.0
    assert log_det_Tm(Geometric(3.0, 0.5), 4, 0) == pytest.approx(math.log(3.0))
    assert log_det_Tm(g, 2, 1) == pytest.approx(3 * math.log(0.5 / 3), rel=1e-14)
    assert log_det_Tm(g, 2, 1) == pytest.approx(-5.375278, abs=1e-6)
    with pytest.raises(PositivityError):
        log_det_Tm(Explicit((1.0, 0.0, 0.5)), 2, 1)


def test_log_det_large_m_stays_finite():
    # the product form would overflow: tau^tau for tau ~ 10^4
    v = log_det_Tm(Geometric(1.0, 0.5), 5, 40)
    assert math.isfinite(v) and v < 0


@settings(max_examples=40, deadline=None)
@given(
    theta=st.floats(0.05, 0.95),
    a0=st.floats(0.1, 10.0),
    d=st.integers(2, 6),
    m=st.integers(1, 60),
)
def test_log_det_additivity(theta, a0, d, m):
    g = Geometric(a0, theta)
    step = log_det_Tm(g, d, m) - log_det_Tm(g, d, m - 1)
    tau = harmonic_dim(d, m)
    expected = tau * (math.log(a0) + m * math.log(theta) - math.log(tau))
    assert step == pytest.approx(expected, rel=1e-10, abs=1e-10)
    assert log_det_terms(g, d, m)[-1] == pytest.approx(expected, rel=1e-12, abs=1e-12)
