import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permcycles.weights import (
    DomainError,
    PowerTail,
    a_of,
    algebraic,
    b_of,
    eval_derivs,
    eval_g,
    ewens,
    explicit,
    from_descriptor,
    log_a,
    log_b,
    log_g,
    remainder_scale,
    subexponential,
    tail_bound,
    theta,
    tilt,
    to_descriptor,
)

MODELS = [ewens(1.0), ewens(2.5), algebraic(1.0, 1.0), algebraic(0.5, 2.0), algebraic(2.0, 1.0),
          subexponential(1.0), subexponential(2.0), explicit([float(k) for k in range(1, 60)])]


def test_eval_g_closed_forms():
    assert eval_g(algebraic(1, 1), 0.5) == pytest.approx(2.0, rel=1e-15)
    assert eval_g(ewens(1), 0.5) == pytest.approx(math.log(2), rel=1e-15)


def test_eval_g_explicit_partial_sum():
    # sum_{k<=50} t^k at t = 1/2 is 1 - 2^-50
    assert eval_g(explicit(list(range(1, 51))), 0.5) == pytest.approx(1 - 2.0**-50, rel=1e-14)


def test_eval_g_complex_on_circle():
    z = 0.7 * np.exp(1j * 0.3)
    assert eval_g(algebraic(1, 1), z) == pytest.approx(1 / (1 - z), rel=1e-14)
    assert eval_g(ewens(1), z) == pytest.approx(-np.log(1 - z), rel=1e-14)
    ex = explicit([1.0] * 400)  # -log(1-z) up to a negligible tail
    assert eval_g(ex, z) == pytest.approx(-np.log(1 - z), rel=1e-12)


def test_domain_and_overflow():
    with pytest.raises(DomainError):
        eval_g(ewens(1), 1.0)
    with pytest.raises(DomainError):
        eval_g(algebraic(1, 1), 1.2j)
    with pytest.raises(OverflowError):
        eval_g(subexponential(1.0), 1 - 1e-3)
    assert log_g(subexponential(1.0), 1 - 1e-3) == pytest.approx(1000.0)


def test_eval_derivs_examples():
    assert eval_derivs(algebraic(1, 1), 0.0) == pytest.approx((1, 1, 2, 6))
    assert eval_derivs(ewens(1), 0.5) == pytest.approx((math.log(2), 2, 4, 16))
    g, g1, _, _ = eval_derivs(subexponential(1.0), 0.5)
    assert g == pytest.approx(math.e**2, rel=1e-14)
    assert g1 == pytest.approx(4 * math.e**2, rel=1e-14)
    with pytest.raises(DomainError):
        eval_derivs(ewens(1), 1.0)


def test_explicit_derivs_at_zero():
    assert eval_derivs(explicit([1.0, 2.0, 3.0]), 0.0) == pytest.approx((0, 1, 2, 6))


def test_a_b_and_remainder_examples():
    assert a_of(algebraic(1, 1), 0.5) == pytest.approx(2.0)
    assert b_of(ewens(1), 0.5) == pytest.approx(2.0)
    for m in MODELS:
        assert a_of(m, 0.0) == 0 and b_of(m, 0.0) == 0
        assert remainder_scale(m, 0.0) == 0
    assert remainder_scale(algebraic(1, 1), 0.9) == pytest.approx(48690, rel=1e-12)


def test_ewens_remainder_grows_like_cube():
    gaps = 2.0 ** -np.arange(4, 16)
    scaled = [remainder_scale(ewens(1), 1 - w, w) * w**3 for w in gaps]
    # (r^2 + r) + O(w) with the leading constant 2
    assert scaled[-1] == pytest.approx(2.0, rel=1e-3)
    assert np.all(np.diff(np.abs(np.array(scaled) - 2)) < 0)


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_a_and_b_strictly_increase(model):
    r = np.linspace(0, 0.9, 300)
    a = [a_of(model, x) for x in r]
    b = [b_of(model, x) for x in r]
    assert np.all(np.diff(a) > 0) and np.all(np.diff(b) > 0)
    # towards rho in log form, where the sub-exponential values overflow
    gaps = 2.0 ** -np.arange(4, 30)
    la = [log_a(model, 1 - w, w) for w in gaps]
    lb = [log_b(model, 1 - w, w) for w in gaps]
    assert np.all(np.diff(la) > 0) and np.all(np.diff(lb) > 0)


@given(st.sampled_from(MODELS), st.floats(0.01, 0.95))
def test_derivs_match_finite_differences(model, r):
    h = 1e-4 * (1 - r) ** 2
    vals = [eval_derivs(model, r + j * h) for j in (-2, -1, 0, 1, 2)]
    for d in range(3):
        fd = (vals[0][d] - 8 * vals[1][d] + 8 * vals[3][d] - vals[4][d]) / (12 * h)
        assert fd == pytest.approx(vals[2][d + 1], rel=1e-6)


@given(st.sampled_from(MODELS), st.floats(-3, 3), st.floats(0.0, 0.99))
def test_tilt_scales_g(model, s, r):
    assert eval_g(tilt(model, s), r) == pytest.approx(math.exp(-s) * eval_g(model, r), rel=1e-12, abs=1e-300)


def test_tilt_examples():
    m = ewens(1.0)
    assert tilt(m, 0.0) == m
    assert tilt(m, math.log(2)).theta0 == pytest.approx(0.5)
    assert tilt(explicit([1, 2, 3]), -math.log(3)).theta == pytest.approx((3, 6, 9))


@given(st.floats(0.05, 0.95))
def test_explicit_truncation_error_shrinks(r):
    errs = [abs(eval_g(explicit([1.0] * N), r) + math.log1p(-r)) for N in (50, 100, 200, 400)]
    # monotone until the error reaches rounding level
    assert all(b <= a for a, b in zip(errs, errs[1:]) if a > 1e-13)
    assert errs[-1] <= tail_bound(explicit([1.0] * 400), r) * (1 + 1e-9) + 1e-14 * abs(math.log1p(-r))


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_theta_matches_series(model):
    # g(r) - g(0) = sum theta_k r^k / k for the parametric closed forms
    th = theta(model, 3000)
    k = np.arange(1, 3001)
    r = 0.6
    series = float(np.sum(th[1:] / k * r**k))
    g0 = eval_derivs(model, 0.0)[0]
    assert series == pytest.approx(eval_g(model, r) - g0, rel=1e-10)


def test_theta_k_equals_k_for_algebraic_one():
    assert np.allclose(theta(algebraic(1, 1), 20)[1:], np.arange(1, 21), rtol=1e-13)


def test_power_tail_and_log_a_consistency():
    m = explicit([1.0, 1.0], tail=PowerTail(1.0, 1.0), n_series=4000)
    assert m.truncation == 4000
    for r in (0.3, 0.9, 0.999):
        assert math.exp(log_a(m, r)) == pytest.approx(a_of(m, r), rel=1e-10)


def test_descriptor_round_trip(tmp_path):
    for desc in ({"kind": "algebraic", "beta": 2.0, "gamma": 1.0}, {"kind": "subexp", "beta": 1.0},
                 {"kind": "ewens", "theta": 1.0}, {"kind": "explicit", "theta": [1, 2, 3], "radius": 1.0}):
        m = from_descriptor(desc)
        assert from_descriptor(to_descriptor(m)) == m
        assert from_descriptor(json.dumps(desc)) == m
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"kind": "ewens", "theta": 2.0}))
    assert from_descriptor(str(p)) == ewens(2.0)


@pytest.mark.parametrize("bad", [{"kind": "ewens", "theta": -1}, {"kind": "algebraic", "beta": 1, "colour": 2},
                                 {"kind": "explicit", "theta": [1, -2]}, {"kind": "nope"}])
def test_descriptor_rejects(bad):
    with pytest.raises((ValueError, KeyError)):
        from_descriptor(bad)
