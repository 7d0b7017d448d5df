import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from permcycles.exact import (
    ConsistencyError,
    brute_force,
    class_size,
    compute_h,
    cycle_count_distribution,
    cycle_type_probabilities,
    exact_moments,
    mgf_exact,
    moment_sequence,
    partitions,
    tilted_coefficient,
)
from permcycles.weights import PowerTail, algebraic, ewens, explicit, subexponential

THETA_K = explicit([float(k) for k in range(1, 201)])
MODELS = [ewens(1.0), ewens(2.0), THETA_K, algebraic(1.0, 1.0), algebraic(2.0, 0.5), subexponential(1.0),
          explicit([0.0, 1.0, 0.5, 2.0]), explicit([1.0], tail=PowerTail(0.5, 0.5), n_series=300)]


def stirling1(n):
    """Unsigned Stirling numbers of the first kind c(n, k), exact."""
    c = [[0] * (n + 1) for _ in range(n + 1)]
    c[0][0] = 1
    for m in range(1, n + 1):
        for k in range(1, m + 1):
            c[m][k] = c[m - 1][k - 1] + (m - 1) * c[m - 1][k]
    return c[n]


def test_compute_h_examples():
    assert np.allclose(np.exp(compute_h(ewens(1.0), 5).log_h), 1.0, rtol=1e-14)
    h = np.exp(compute_h(THETA_K, 3).log_h)
    assert h[1:] == pytest.approx([1.0, 1.5, 13 / 6], rel=1e-14)
    assert np.exp(compute_h(ewens(2.0), 4).log_h) == pytest.approx([1, 2, 3, 4, 5], rel=1e-14)


def test_recurrence_residual():
    for m in MODELS:
        assert compute_h(m, 300).check_recurrence() <= 1e-10


def test_ewens_closed_forms():
    for t0 in (1.0, 2.0):
        table = compute_h(ewens(t0), 100)
        mean, _ = moment_sequence(ewens(t0), 100, table)
        for n in (1, 7, 50, 100):
            log_ref = sum(math.log(t0 + j) for j in range(n)) - math.lgamma(n + 1)
            assert table.log_h[n] == pytest.approx(log_ref, rel=1e-12, abs=1e-12)
            assert mean[n] == pytest.approx(sum(t0 / (t0 + j) for j in range(n)), rel=1e-12)


def test_tilted_coefficient_examples():
    assert tilted_coefficient(THETA_K, 7, 0.0) == pytest.approx(compute_h(THETA_K, 7).log_h[7], rel=1e-15)
    assert tilted_coefficient(ewens(1.0), 1, 0.7) == pytest.approx(-0.7, rel=1e-14)
    assert math.exp(tilted_coefficient(THETA_K, 2, math.log(2))) == pytest.approx(0.625, rel=1e-14)


def test_distribution_examples():
    for m in MODELS[:6]:
        assert cycle_count_distribution(m, 1).prob == pytest.approx([0.0, 1.0])
    d = cycle_count_distribution(ewens(1.0), 4)
    assert d.prob[2] == pytest.approx(11 / 24, rel=1e-14)
    d = cycle_count_distribution(THETA_K, 2)
    assert d.prob[1:] == pytest.approx([2 / 3, 1 / 3], rel=1e-14)
    assert exact_moments(d) == pytest.approx((4 / 3, 2 / 9), rel=1e-14)


def test_stirling_distribution():
    n = 25
    c = stirling1(n)
    ref = [Fraction(v, math.factorial(n)) for v in c]
    d = cycle_count_distribution(ewens(1.0), n)
    assert d.prob == pytest.approx([float(v) for v in ref], rel=1e-12, abs=1e-300)


def test_moments_examples():
    assert exact_moments(cycle_count_distribution(ewens(3.0), 1)) == pytest.approx((1.0, 0.0))
    assert exact_moments(cycle_count_distribution(ewens(1.0), 3))[0] == pytest.approx(11 / 6, rel=1e-14)


def test_truncated_rows_are_exact():
    full = cycle_count_distribution(THETA_K, 120)
    part = cycle_count_distribution(THETA_K, 120, k_max=30)
    assert part.log_mass == pytest.approx(full.log_mass[:31], rel=1e-12)
    assert not part.complete and part.missing_mass() > 0
    with pytest.raises(ValueError):
        exact_moments(part)


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_moment_sequence_matches_pmf(model):
    mean, var = moment_sequence(model, 150)
    for n in (5, 60, 150):
        d = cycle_count_distribution(model, n)
        assert (mean[n], var[n]) == pytest.approx(exact_moments(d), rel=1e-10)


def test_zero_support_model():
    # theta_1 = 0: odd sizes need a cycle of length >= 3
    m = explicit([0.0, 1.0])
    h = compute_h(m, 5).log_h
    assert h[1] == -math.inf and h[3] == -math.inf and math.isfinite(h[4])


@pytest.mark.parametrize("model", [ewens(1.0), ewens(2.0), explicit(list(range(1, 10))), algebraic(1.0, 1.0),
                                   subexponential(0.5), explicit([0.0, 1.0, 0.5, 2.0])], ids=str)
def test_brute_force_oracle(model):
    table = compute_h(model, 9)
    for n in range(10):
        h, ref = brute_force(model, n)
        d = cycle_count_distribution(model, n, table=table)
        if h == 0:
            assert table.log_h[n] == -math.inf
            continue
        assert table.log_h[n] == pytest.approx(ref.log_h, abs=1e-10)
        fin = np.isfinite(ref.log_mass)
        assert np.array_equal(fin, np.isfinite(d.log_mass))
        assert d.log_mass[fin] == pytest.approx(ref.log_mass[fin], abs=1e-10)


def test_brute_force_edge_cases():
    h, d = brute_force(ewens(2.0), 0)
    assert h == 1.0 and d.prob == pytest.approx([1.0])
    assert brute_force(THETA_K, 3)[0] == pytest.approx(13 / 6, rel=1e-15)
    with pytest.raises(ValueError):
        brute_force(ewens(1.0), 10)


def test_partitions_and_class_sizes():
    counts = [sum(1 for _ in partitions(n)) for n in range(10)]
    assert counts == [1, 1, 2, 3, 5, 7, 11, 15, 22, 30]
    for n in range(1, 8):
        assert sum(class_size(p) for p in partitions(n)) == math.factorial(n)
    probs = cycle_type_probabilities(ewens(1.0), 4)
    assert probs[((1, 2), (2, 1))] == pytest.approx(6 / 24)


def test_mgf_examples():
    assert mgf_exact(THETA_K, 30, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert mgf_exact(algebraic(2.0, 1.0), 1, 0.4) == pytest.approx(math.exp(-0.4), rel=1e-12)
    assert mgf_exact(ewens(1.0), 2, 1.0) == pytest.approx((math.exp(-1) + math.exp(-2)) / 2, rel=1e-12)


def test_mgf_detects_corrupted_pmf():
    d = cycle_count_distribution(THETA_K, 10)
    bad = type(d)(d.n, d.log_mass + np.linspace(0, 1e-6, d.log_mass.size), d.log_h)
    with pytest.raises(ConsistencyError):
        mgf_exact(THETA_K, 10, 1.0, dist=bad)


@given(st.sampled_from(MODELS), st.integers(1, 120), st.sampled_from([-1.0, -0.1, 0.0, 0.1, 1.0]))
def test_mgf_identity(model, n, s):
    assume(compute_h(model, n).log_h[n] > -np.inf)
    assert mgf_exact(model, n, s) > 0


@given(st.sampled_from(MODELS), st.integers(0, 150))
def test_pmf_normalised(model, n):
    d = cycle_count_distribution(model, n)
    if n >= 1:
        assert d.prob[0] == 0
    assert abs(d.prob.sum() - 1) <= 1e-9
    assert np.all(d.prob >= 0)
