import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphere_entropy import DomainError, Explicit, Geometric, PolynomialDecay, PositivityError
from sphere_entropy.bounds import (
    BoundEnvelope,
    EnvelopeRow,
    asymptotic_constants_geometric,
    asymptotic_constants_harmonic,
    delta_threshold,
    delta_threshold_residuals,
    envelope,
    estimate_asymptotic_constant,
    lower_critical_point,
    lower_ln_covering,
    m_selector_geometric,
    m_selector_harmonic,
    refined_constants,
    sharper_upper_constant,
    upper_ln_covering,
)
from sphere_entropy.harmonics import cumulative_dim
from sphere_entropy.rkhs import log_det_Tm

E1 = math.exp(-1)
GRID = list(np.geomspace(1e-1, 1e-8, 25))


# -- finite-eps bounds -------------------------------------------------------


def test_upper_examples():
    assert upper_ln_covering(Geometric(1.0, 0.5), 2, 4.1) == (0.0, -1)
    value, m = upper_ln_covering(Explicit((1.0,)), 2, 0.1)
    assert m == 0 and value == pytest.approx(math.log(41), rel=1e-15)


def test_upper_uses_feasible_truncation():
    g = Geometric(1.0, 0.5)
    for eps in (0.3, 1e-3, 1e-7):
        value, m = upper_ln_covering(g, 3, eps)
        assert g.tail_sum(m) <= eps * eps / 4
        assert value == pytest.approx(
            cumulative_dim(3, m) * math.log1p(4 * math.sqrt(g.partial_sum(m)) / eps)
        )


def test_lower_examples():
    g = Geometric(1.0, 0.5)
    assert lower_ln_covering(g, 2, 1.0) == (0.0, 0)
    value, m = lower_ln_covering(g, 2, 0.01)
    assert value >= math.log(100)
    assert value == pytest.approx(0.5 * log_det_Tm(g, 2, m) + cumulative_dim(2, m) * math.log(100))


def test_lower_is_max_over_truncations():
    g = Geometric(2.0, 0.3)
    eps = 1e-4
    value, _ = lower_ln_covering(g, 3, eps)
    direct = max(0.5 * log_det_Tm(g, 3, m) + cumulative_dim(3, m) * math.log(1 / eps) for m in range(80))
    assert value == pytest.approx(direct, rel=1e-12)


def test_lower_clamps_and_stops_at_zero_coefficient():
    assert lower_ln_covering(Geometric(0.01, 0.5), 2, 0.9) == (0.0, -1)
    value, m = lower_ln_covering(Explicit((1.0, 0.5, 0.0, 0.5)), 2, 1e-3)
    assert m <= 1 and value > 0
    with pytest.raises(PositivityError):
        lower_ln_covering(Explicit((0.0, 1.0)), 2, 0.1)


def test_lower_polynomial_scan_reaches_maximizer():
    p = PolynomialDecay(c1=1, beta=1, c2=1, rho=3, d=2)
    value, m = lower_ln_covering(p, 2, 1e-4)
    neighbours = [0.5 * log_det_Tm(p, 2, j) + cumulative_dim(2, j) * math.log(1e4) for j in (m - 1, m + 1)]
    assert value >= max(neighbours)


@settings(max_examples=40, deadline=None)
@given(
    theta=st.floats(0.1, 0.9),
    a0=st.floats(0.2, 5.0),
    d=st.integers(2, 4),
    log_eps=st.floats(-14.0, 0.0),
)
def test_sandwich_property(theta, a0, d, log_eps):
    g = Geometric(a0, theta)
    eps = math.exp(log_eps)
    lo, _ = lower_ln_covering(g, d, eps)
    up, _ = upper_ln_covering(g, d, eps)
    assert 0.0 <= lo <= up


@pytest.mark.parametrize("d", [2, 3])
def test_envelope_monotone_and_sandwiched(d):
    env = envelope(Geometric(1.0, 0.5), d, GRID)
    assert len(env.rows) == 25 and env.regime == "geometric"
    lows = [r.lower_ln_cov for r in env.rows]
    ups = [r.upper_ln_cov for r in env.rows]
    assert all(lo <= up for lo, up in zip(lows, ups))
    assert all(b >= a for a, b in zip(lows, lows[1:]))
    assert all(b >= a for a, b in zip(ups, ups[1:]))
    assert max(max(r.m_lower, r.m_upper) for r in env.rows) <= 64


def test_envelope_parallel_matches_serial():
    p = PolynomialDecay(c1=1, beta=1, c2=1, rho=3, d=2)
    grid = list(np.geomspace(0.1, 1e-3, 8))
    assert envelope(p, 2, grid).rows == envelope(p, 2, grid, workers=4).rows


def test_envelope_edge_cases():
    env = envelope(Geometric(1.0, 0.5), 2, [1.0])
    assert env.rows[0].lower_ln_cov == 0.0
    with pytest.raises(DomainError):
        envelope(Geometric(1.0, 0.5), 2, [1e-3, 1e-2])
    with pytest.raises(DomainError):
        envelope(Geometric(1.0, 0.5), 2, [])


def test_estimate_constant_on_synthetic_envelope():
    rows = [
        EnvelopeRow(eps=e, lower_ln_cov=3.0 * e**-1, upper_ln_cov=5.0 * e**-1, m_lower=0, m_upper=0,
                    normalized_lower=3.0, normalized_upper=5.0, rate_lower=e**-1, rate_upper=e**-1)
        for e in (0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625)
    ]
    env = BoundEnvelope(rows=rows)
    assert estimate_asymptotic_constant(env, "lower") == pytest.approx((3.0, 0.0))
    assert estimate_asymptotic_constant(env, "upper") == pytest.approx((5.0, 0.0))
    with pytest.raises(DomainError):
        estimate_asymptotic_constant(BoundEnvelope(rows=rows[:1]), "upper")
    with pytest.raises(DomainError):
        estimate_asymptotic_constant(env, "middle")


def test_estimate_constant_band_for_half_ratio():
    env = envelope(Geometric(1.0, 0.5), 2, GRID)
    c = asymptotic_constants_geometric(2, 0.5, 0.5)
    for which in ("lower", "upper"):
        slope, resid = estimate_asymptotic_constant(env, which)
        assert c.lower_const <= slope <= 1.5 * c.upper_const
        assert resid < 0.1


# -- selectors ---------------------------------------------------------------


def _geometric_bracket(m, eps, a0, theta):
    return math.sqrt(theta ** (m + 1) * a0 / (1 - theta)) <= eps / 2 < math.sqrt(theta**m * a0 / (1 - theta))


def test_geometric_selector_examples():
    theta = 0.25
    eps = 2 * math.sqrt(theta**2.5 / (1 - theta))
    assert m_selector_geometric(eps, 1.0, theta) == 2
    assert m_selector_geometric(2 * math.sqrt(2.0) * (1 - 1e-12), 1.0, 0.5) == 0
    m = m_selector_geometric(1e-6, 1.0, 0.5)
    assert m == next(j for j in range(200) if _geometric_bracket(j, 1e-6, 1.0, 0.5))
    # leading term 2 ln(1/eps)/ln(1/theta) plus the offset ln(4 a0/(1-theta))/ln(1/theta) = 3
    assert m == math.ceil((2 * math.log(1e6) + math.log(8)) / math.log(2)) - 1
    with pytest.raises(DomainError):
        m_selector_geometric(3.0, 1.0, 0.5)


def test_geometric_selector_tie_picks_smaller():
    theta = 0.5
    eps = 2 * math.sqrt(theta**4 / (1 - theta))  # eps/2 equals the m = 3 left edge
    m = m_selector_geometric(eps, 1.0, theta)
    assert _geometric_bracket(m, eps, 1.0, theta)
    assert m == 3


def test_harmonic_selector_examples():
    q = 2.0
    eps = 2 * math.sqrt(1.0 / q * 7.3**-q)
    assert m_selector_harmonic(eps, 1.0, 1.0, 2) == 7
    m = m_selector_harmonic(1e-4, 1.0, 1.0, 2)
    assert abs(m - math.sqrt(2.0) * 1e4) <= 2
    with pytest.raises(DomainError):
        m_selector_harmonic(10.0, 1.0, 1.0, 2)


@settings(max_examples=80, deadline=None)
@given(
    log_eps=st.floats(-30.0, 0.0),
    a0=st.floats(0.1, 10.0),
    theta=st.floats(0.01, 0.99),
)
def test_geometric_selector_resubstitutes(log_eps, a0, theta):
    eps = math.exp(log_eps)
    if not eps / 2 < math.sqrt(a0 / (1 - theta)):
        return
    m = m_selector_geometric(eps, a0, theta)
    assert _geometric_bracket(m, eps, a0, theta)


@settings(max_examples=80, deadline=None)
@given(
    log_eps=st.floats(-12.0, -0.5),
    c1=st.floats(0.1, 10.0),
    beta=st.floats(0.2, 4.0),
    d=st.integers(2, 5),
)
def test_harmonic_selector_resubstitutes(log_eps, c1, beta, d):
    eps = math.exp(log_eps)
    q = beta + d - 1
    if not eps / 2 < math.sqrt(c1 / q):
        return
    m = m_selector_harmonic(eps, c1, beta, d)
    assert m >= 1
    assert math.sqrt(c1 / q * (m + 1) ** -q) <= eps / 2 < math.sqrt(c1 / q * m**-q)


# -- constants ---------------------------------------------------------------


def test_geometric_constants():
    c = asymptotic_constants_geometric(2, E1, E1)
    assert c.lower_const == pytest.approx(2 / 27, abs=1e-12)
    assert c.upper_const == pytest.approx(8, abs=1e-12)
    assert asymptotic_constants_geometric(2, 0.5, 0.5).upper_const == pytest.approx(16 / (2 * math.log(2) ** 2))
    with pytest.raises(DomainError):
        asymptotic_constants_geometric(2, 0.3, 0.5)


def test_lower_constant_limit_delta_to_one():
    # ln(1/delta) -> 0: lower -> 16 / (2 * 1 * 27)
    fact, d = 2, 2
    limit = (2 * d) ** d / (fact * (d - 1) ** d * (d + 1) ** (d + 1))
    assert limit == pytest.approx(8 / 27)
    theta = delta = 1 - 1e-9
    assert asymptotic_constants_geometric(d, theta, delta).lower_const == pytest.approx(8 / 27, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(d=st.integers(2, 8), theta=st.floats(0.01, 0.99), frac=st.floats(0.01, 1.0))
def test_lower_constant_below_upper(d, theta, frac):
    c = asymptotic_constants_geometric(d, theta, theta * frac)
    assert c.lower_const <= c.upper_const
    r = refined_constants(d, theta, theta * frac)
    assert r.upper_const == pytest.approx(c.upper_const / 2, rel=1e-14)


def test_harmonic_constants():
    c = asymptotic_constants_harmonic(2, c1=1, beta=1, c2=2, rho=3, a0=1)
    assert c.upper_const == pytest.approx(4, abs=1e-12)
    assert c.lower_const == pytest.approx(2 / math.e, abs=1e-12)
    tiny = asymptotic_constants_harmonic(2, c1=1, beta=1, c2=1e-300, rho=3, a0=4)
    assert tiny.lower_const == pytest.approx(math.log(2), rel=1e-9)
    assert "2*4" in c.lower_rate_descriptor


def test_refined_constants():
    r = refined_constants(2, E1, E1)
    assert r.upper_const == pytest.approx(4, abs=1e-12)
    assert r.lower_const == pytest.approx(4 / 27, abs=1e-12)
    assert "sqrt(1-" in r.rate_descriptor and "/eps)]^3" in r.lower_rate_descriptor
    assert r.notes  # a0 (d-1)!/4 < 1
    assert not refined_constants(3, 0.5, 0.5, a0=4).notes


def test_sharper_upper_constant():
    theta, d = 0.5, 2
    direct = 8 * math.log(2 * math.e / math.sqrt(0.5)) ** 3 / (2 * math.log(2) ** 2)
    via_logs = math.exp(
        3 * math.log(2) + 3 * math.log(1 + math.log(2) + 0.5 * math.log(2)) - math.log(2) - 2 * math.log(math.log(2))
    )
    assert sharper_upper_constant(d, theta) == pytest.approx(direct, rel=1e-12)
    assert sharper_upper_constant(d, theta) == pytest.approx(via_logs, rel=1e-12)
    assert sharper_upper_constant(2, 1e-200) < 1e-2
    shift = math.log(2 * math.e / math.sqrt(1 - theta)) ** 3
    assert sharper_upper_constant(d, theta) >= refined_constants(d, theta, theta).upper_const * shift * (1 - 1e-14)


@pytest.mark.parametrize("theta,d", [(0.5, 2), (0.1, 3), (0.9, 5), (E1, 2)])
def test_delta_threshold_consistency(theta, d):
    res = delta_threshold_residuals(theta, d)
    assert res["power inside log"] < 1e-9
    thr = delta_threshold(theta, d)
    assert thr.value == pytest.approx(theta**thr.exponent)
    lower = (
        2 ** (d + 1) * d**d
        / (math.factorial(d) * (d + math.log(1 / thr.value) - 1) ** d * (d + 1) ** (d + 1))
    )
    assert lower == pytest.approx(sharper_upper_constant(d, theta), rel=1e-9)


def test_delta_threshold_flags_invalid():
    thr = delta_threshold(0.5, 2)
    assert not thr.valid and thr.warning
    assert delta_threshold(1 - 1e-6, 2).exponent < -1e5


def test_critical_point_substitution():
    eps, d, delta = 1e-4, 2, 0.5
    expected = -2 / (3 * (2 + math.log(2) - 1)) * math.log(4e-8)
    assert lower_critical_point(eps, d, delta) == pytest.approx(expected, rel=1e-14)


def test_selector_asymptotics():
    # m(eps) ln(1/theta) / (2 ln(1/eps)) -> 1
    for eps in (1e-20, 1e-100):
        m = m_selector_geometric(eps, 1.0, 0.5)
        assert m * math.log(2) / (2 * math.log(1 / eps)) == pytest.approx(1, abs=0.05)
    m = m_selector_harmonic(1e-8, 1.0, 1.0, 2)
    assert m / (math.sqrt(2.0) * 1e8) == pytest.approx(1, rel=1e-6)
