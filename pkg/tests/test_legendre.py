import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from legmoments.legendre import (
    LegendreTable,
    build_legendre,
    coeffs_csv,
    evaluate,
    gram_check,
    gram_matrix,
    recurrence_coeffs,
    verify_binomial_lower,
    verify_binomial_upper,
    verify_sigma_bounds,
)


def test_degree_zero():
    p = build_legendre(0)
    assert p.rational_coeffs == (Fraction(1),)
    assert p.sigma_sq == Fraction(1, 2)


def test_degree_one():
    p = build_legendre(1)
    assert p.rational_coeffs == (0, 1)
    assert p.sigma_sq == Fraction(3, 2)
    assert p.sigma_sq >= 1


def test_degree_two():
    p = build_legendre(2)
    assert p.rational_coeffs == (Fraction(-1, 2), 0, Fraction(3, 2))
    assert p.sigma_sq == Fraction(25, 4)
    assert p.sigma_sq >= 4


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        build_legendre(-1)


@pytest.mark.parametrize("k", range(51))
def test_closed_form_matches_recurrence(k):
    rec = recurrence_coeffs(50)[k]
    assert build_legendre(k).rational_coeffs == rec


def test_parity_and_unit_value():
    for k in range(51):
        p = build_legendre(k)
        assert all(n == 0 for j, n in enumerate(p.numerators) if (k - j) % 2)
        assert sum(p.rational_coeffs) == 1


def test_sigma_strictly_increasing():
    s = [build_legendre(k).sigma_sq for k in range(1, 80)]
    assert all(a < b for a, b in zip(s, s[1:]))
    assert all(x / 4 ** (k - 1) >= 1 for k, x in enumerate(s, start=1))


def test_evaluate_examples():
    assert evaluate(build_legendre(5), 1.0) == pytest.approx(math.sqrt(11 / 2), rel=1e-15)
    assert evaluate(build_legendre(4), 0.0) == pytest.approx(math.sqrt(9 / 2) * 3 / 8, rel=1e-15)
    assert evaluate(build_legendre(3), 0.0) == 0.0


def test_evaluate_rejects_outside_interval():
    with pytest.raises(ValueError):
        evaluate(build_legendre(2), 1.5)


@pytest.mark.parametrize("k", [0, 1, 7, 20, 45])
def test_evaluate_against_mpmath(k):
    xs = np.linspace(-1, 1, 41)
    got = evaluate(build_legendre(k), xs)
    with mpmath.workdps(40):
        want = [float(mpmath.legendre(k, x) * mpmath.sqrt(mpmath.mpf(2 * k + 1) / 2)) for x in xs]
    np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 40), x=st.floats(-1, 1))
def test_evaluate_parity(k, x):
    p = build_legendre(k)
    a, b = evaluate(p, -x), evaluate(p, x)
    assert a == pytest.approx((-1) ** k * b, rel=1e-12, abs=1e-300)


def test_binomial_upper_examples():
    res = dict(verify_binomial_upper(100))
    assert res[1] and res[4] and res[100]
    assert math.comb(8, 4) ** 4 * 4 == 96_040_000 <= 4**16


def test_binomial_lower_examples():
    res = dict(verify_binomial_lower(50))
    assert res[1] and res[2] and res[50]
    # equality at n = 1
    assert math.comb(2, 1) ** 2 * 4 == 4**2


def test_sigma_bounds():
    res = {k: (lo, up) for k, lo, up in verify_sigma_bounds(30)}
    assert res[1] == (True, True)
    assert res[2] == (True, True)
    assert res[30] == (True, True)


def test_gram_small():
    assert gram_matrix(0) == [[2]]
    assert gram_check(0)
    assert gram_check(5)


def test_gram_25():
    assert gram_check(25)


def test_table():
    t = LegendreTable(6)
    assert len(t) == 7 and t[2].sigma_sq == Fraction(25, 4)
    with pytest.raises(ValueError):
        t.require(7)


def test_coeffs_csv():
    lines = coeffs_csv(2).splitlines()
    assert lines[0] == "k,j,numerator,denominator_log2,sigma_sq_num,sigma_sq_den"
    assert "2,0,-1,1,25,4" in lines
    assert len(coeffs_csv(0).splitlines()) == 2
    assert len(coeffs_csv(60).splitlines()) == 1 + 961
    with pytest.raises(ValueError):
        coeffs_csv(201)
