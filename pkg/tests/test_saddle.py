import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permcycles.exact import compute_h, moment_sequence, tilted_coefficient
from permcycles.saddle import (
    AsymptoticMoments,
    DeltaSpec,
    NonAdmissibleWarning,
    NonDivergentModelError,
    RegimeError,
    asymptotic_coefficient,
    asymptotic_moments,
    check_admissibility,
    check_technical_condition,
    closed_form_algebraic,
    closed_form_subexp,
    eta_derivatives,
    large_deviation_estimate,
    radius_expansion,
    remainder_on_arc,
    saddle_exponent,
    solve_saddle,
)
from permcycles.weights import PowerTail, a_of, algebraic, b_of, derivs, ewens, explicit, log_a, subexponential

PARAMETRIC = [algebraic(1.0, 1.0), algebraic(0.5, 1.0), algebraic(2.0, 3.0), subexponential(1.0),
              subexponential(2.0), ewens(1.0), ewens(0.5)]
TAILED = explicit([1.0, 1.0], tail=PowerTail(1.0, 1.0), n_series=4096)


def test_solve_algebraic_quadratic():
    sp = solve_saddle(algebraic(1.0, 1.0), 100.0)
    assert sp.r == pytest.approx((201 - math.sqrt(401)) / 200, rel=1e-14)


def test_small_x_gives_small_r():
    rs = [solve_saddle(m, 1e-9, with_eta=False).r for m in (algebraic(1, 1), ewens(1), subexponential(1))]
    assert max(rs) < 1e-8


@pytest.mark.parametrize("x", [1e2, 1e4, 1e6, 1e9, 1e12])
@pytest.mark.parametrize("model", PARAMETRIC + [TAILED], ids=str)
def test_residual_and_b_identity(model, x):
    if model is TAILED and x > 1e6:
        pytest.skip("truncated series saturates")
    sp = solve_saddle(model, x)
    assert sp.residual <= 1e-12
    assert abs(math.exp(log_a(model, sp.r, sp.gap)) / x - 1) <= 1e-12
    assert sp.b_at_r > 0 and sp.eta1 < 0
    assert sp.b_at_r * (-sp.eta1) == pytest.approx(x, rel=1e-12)
    assert sp.eta1_fd == pytest.approx(sp.eta1, rel=1e-6)


def test_subexp_residual_at_million():
    assert solve_saddle(subexponential(1.0), 1e6).residual <= 1e-12


def test_b_matches_direct_evaluation():
    m = algebraic(2.0, 1.0)
    sp = solve_saddle(m, 1e3)
    assert sp.b_at_r == pytest.approx(b_of(m, sp.r), rel=1e-10)
    assert a_of(m, sp.r) == pytest.approx(1e3, rel=1e-12)


def test_eta1_algebraic_scale():
    # n eta_1(n) ~ -sqrt(n)/2 for theta_k = k
    n = 1e4
    assert n * eta_derivatives(algebraic(1.0, 1.0), n)[0] == pytest.approx(-50.0, rel=0.1)


def test_higher_eta_closed_form():
    # (1-t)^-1: log r_{e^s x} ~ -c e^{-s/2} with c = x^-1/2, so eta_k ~ -c / 2^k
    x = 1e8
    sp = solve_saddle(algebraic(1.0, 1.0), x)
    c = 1 / math.sqrt(x)
    expected = [-c / 2**k for k in range(1, 5)]
    assert sp.eta == pytest.approx(expected, rel=1e-4)


def test_non_divergent_model_rejected():
    with pytest.raises(NonDivergentModelError):
        solve_saddle(explicit([1.0, 2.0, 3.0]), 1e3)
    assert solve_saddle(explicit([1.0, 2.0, 3.0]), 2.0, with_eta=False).residual <= 1e-12


def test_h_asymptotics_algebraic():
    m = algebraic(1.0, 1.0)
    table = compute_h(m, 10_000)
    gaps = [abs(asymptotic_coefficient(m, n) - table.log_h[n]) / math.sqrt(n) for n in (100, 1000, 10_000)]
    assert gaps[-1] <= 0.1
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("s", [-0.5, 0.5])
def test_tilted_coefficient_asymptotics(s):
    m = algebraic(1.0, 1.0)
    n = 10_000
    gap = abs(asymptotic_coefficient(m, n, s) - tilted_coefficient(m, n, s)) / math.sqrt(n)
    assert gap <= 0.1


def test_ewens_flagged():
    with pytest.warns(NonAdmissibleWarning):
        v = asymptotic_coefficient(ewens(1.0), 500)
    assert math.isfinite(v)


def test_asymptotic_moments_algebraic():
    m = algebraic(1.0, 1.0)
    mean, var = moment_sequence(m, 10_000)
    a = asymptotic_moments(m, 10_000)
    assert a.mu == pytest.approx(mean[10_000], rel=0.1)
    assert a.sigma2 == pytest.approx(var[10_000], rel=0.1)
    assert a.valid and a.xi >= a.mu


def test_asymptotic_moments_beta_two_trend():
    m = algebraic(2.0, 1.0)
    ratios = [asymptotic_moments(m, n).mu / n ** (2 / 3) for n in (1e4, 1e6, 1e8, 1e10)]
    target = 2 ** (-2 / 3)
    errs = [abs(r - target) for r in ratios]
    assert errs == sorted(errs, reverse=True) and errs[-1] < 1e-3


def test_subexp_mean_trend():
    m = subexponential(1.0)
    ratios = [asymptotic_moments(m, n).mu * math.log(n) ** 2 / n for n in (1e4, 1e5, 1e6)]
    assert ratios[0] > ratios[1] > ratios[2] > 1


def test_not_yet_valid_reported():
    # g(r) >= a(r)^2 / b(r) for nonnegative weights, so sigma^2 <= 0 only shows up
    # through rounding; the flag is exercised directly
    assert asymptotic_moments(ewens(1.0), 3).valid
    a = AsymptoticMoments(3, 1.0, -0.2, 2.0)
    assert not a.valid
    with pytest.raises(RegimeError):
        _ = a.sigma


def test_closed_form_algebraic_examples():
    c = closed_form_algebraic(1.0, 1.0, 1e4)
    assert (c.mu, c.sigma2) == pytest.approx((100.0, 50.0))
    # gamma enters both constants
    c2 = closed_form_algebraic(1.0, 2.0, 1e4)
    assert c2.mu == pytest.approx(math.sqrt(2) * 100)
    assert c2.sigma2 == pytest.approx(math.sqrt(2) * 50)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_closed_form_matches_generic(beta, gamma):
    gen = asymptotic_moments(algebraic(beta, gamma), 1e6)
    cf = closed_form_algebraic(beta, gamma, 1e6)
    assert gen.mu == pytest.approx(cf.mu, rel=0.05)
    assert gen.sigma2 == pytest.approx(cf.sigma2, rel=0.05)


def test_closed_form_subexp_structure():
    n = math.exp(100)
    c = closed_form_subexp(1.0, n)
    assert c.sigma2 / c.mu == pytest.approx(3.0 / 100)
    assert set(c.details) >= {"g_refined", "n_eta1_refined", "f_leading", "f_refined"}
    with pytest.raises(ValueError):
        closed_form_subexp(1.0, 2)


@pytest.mark.parametrize("beta", [1.0, 2.0])
def test_subexp_variance_constant_of_generic_path(beta):
    # sigma^2 (log n)^(2+1/beta) / n approaches (beta+1)/beta^2 along the generic path
    vals = []
    for L in (100.0, 300.0, 600.0):
        a = asymptotic_moments(subexponential(beta), math.exp(L), points=3)
        vals.append(a.sigma2 * L ** (2 + 1 / beta) / math.exp(L))
    target = (beta + 1) / beta**2
    errs = [abs(v - target) for v in vals]
    assert errs[0] > errs[1] > errs[2]
    assert abs(vals[-1] - target) < abs(vals[-1] - (2 + 1 / beta))


@pytest.mark.parametrize("beta", [1.0, 2.0])
def test_radius_expansion_gap(beta):
    n = 1e8
    L = math.log(n)
    f = saddle_exponent(subexponential(beta), n)
    lead, refined = radius_expansion(beta, n)
    assert abs(f - lead) <= 2 * L ** (-1 / beta) + 2 * (1 + 1 / beta) * math.log(L) / L
    assert abs(f - refined) < abs(f - lead)


def test_remainder_quadrature_matches_direct():
    m = algebraic(1.0, 1.0)
    r, gap, phi = 0.9, 0.1, 0.05
    z = r * np.exp(1j * phi)
    g, g1, g2, _ = derivs(m, np.array([r, z]))
    a = r * g1[0].real
    b = a + r * r * g2[0].real
    direct = g[1] - g[0] - 1j * phi * a + phi**2 * b / 2
    assert remainder_on_arc(m, r, gap, phi) == pytest.approx(direct, rel=1e-8)


def test_admissibility_examples():
    rep = check_admissibility(algebraic(1.0, 1.0), "power:1.4")
    assert rep.passed
    rep = check_admissibility(subexponential(1.0), DeltaSpec("exp_decay", 0.4))
    assert rep.passed
    rep = check_admissibility(ewens(1.0), "power:1.4")
    assert not rep.passed and "width" in rep.failed()


@pytest.mark.parametrize("alpha", [1.0, 1.4, 2.0, 3.0])
def test_ewens_width_fails_for_powers_at_least_one(alpha):
    assert "width" in check_admissibility(ewens(1.0), DeltaSpec("power", alpha)).failed()


def test_ewens_fails_for_small_powers_too():
    # with alpha < 1 the arc is too wide for the cubic remainder instead
    assert check_admissibility(ewens(1.0), DeltaSpec("power", 0.6)).failed() == ["approximation"]


def test_algebraic_outside_alpha_window():
    # delta = (1-t)^2 is too narrow for beta = 1: the width condition breaks
    assert "width" in check_admissibility(algebraic(1.0, 1.0), "power:2.0").failed()


def test_bounded_model_fails_divergence():
    rep = check_admissibility(explicit([1.0, 2.0, 3.0]), "power:1.4")
    assert "divergence" in rep.failed()


def test_report_rows_reproducible():
    a = check_admissibility(algebraic(1.0, 1.0), "power:1.4")
    b = check_admissibility(algebraic(1.0, 1.0), "power:1.4", r_grid=a.r_grid, phi_grid=a.phi_grid)
    assert list(a.rows()) == list(b.rows())
    assert {row[0] for row in a.rows()} == {"approximation", "divergence", "width", "monotonicity"}


def test_delta_spec_parse():
    assert DeltaSpec.parse("power:1.4") == DeltaSpec("power", 1.4)
    assert str(DeltaSpec.parse("exp_decay:0.4")) == "exp_decay:0.4"
    with pytest.raises(ValueError):
        DeltaSpec.parse("linear:2")


@pytest.mark.parametrize("model", [algebraic(1.0, 1.0), algebraic(2.0, 1.0), subexponential(1.0)], ids=str)
def test_technical_condition_passes(model):
    rep = check_technical_condition(model)
    assert rep.applicable and rep.passed


def test_technical_condition_not_applicable():
    rep = check_technical_condition(explicit([1.0, 2.0]))
    assert not rep.applicable and "not applicable" in rep.message


def test_large_deviation_estimate():
    m = algebraic(1.0, 1.0)
    est = large_deviation_estimate(m, 10**6, 0.0, 3.0)
    assert est.estimate == 1.0 and est.prefactor == pytest.approx(8 / 9)
    est = large_deviation_estimate(m, 10**6, 1.0, 3.0)
    assert est.log_estimate == pytest.approx(-0.5)
    assert est.tilt == pytest.approx(1.0, abs=0.1)
    with pytest.raises(RegimeError):
        large_deviation_estimate(m, 1600, 2.0, 3.0)
    assert not large_deviation_estimate(m, 1600, 2.0, 3.0, strict=False).regime_valid


def test_ldp_scale_shrinks_like_power():
    m = algebraic(1.0, 1.0)
    d = [large_deviation_estimate(m, n, 2.0, 3.0, strict=False).delta_scale for n in (100, 1000, 10_000)]
    assert d[0] > d[1] > d[2]
    # sigma^-1 ~ n^-1/4 for beta = 1
    slopes = np.diff(np.log(d)) / math.log(10)
    assert np.allclose(slopes, -0.25, atol=0.05)


@given(st.sampled_from(PARAMETRIC), st.floats(1.0, 1e10))
def test_saddle_properties(model, x):
    sp = solve_saddle(model, x, with_eta=False)
    assert 0 < sp.r < 1 and sp.residual <= 1e-12
    assert sp.b_at_r * (-sp.eta1) == pytest.approx(x, rel=1e-12)


@given(st.sampled_from(PARAMETRIC), st.floats(1.0, 1e8), st.floats(1.01, 10.0))
def test_saddle_monotone_in_x(model, x, factor):
    assert solve_saddle(model, x, with_eta=False).r < solve_saddle(model, x * factor, with_eta=False).r
