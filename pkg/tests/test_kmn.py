import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.core.errors import InvalidInputError
from app.services.kmn import (
    central_binomial_terms,
    construct_h,
    dyadic_window,
    h1_norm_quadrature,
    h_coeffs,
    kmn_basic_bounds,
    kmn_bounds,
    kmn_formula_bounds,
    kmn_lower_hankel,
    kmn_upper,
    q_at_one,
    u_coeffs,
)


def test_central_binomial_terms():
    expected = [math.comb(2 * l, l) / 4 ** l for l in range(10)]
    np.testing.assert_allclose(central_binomial_terms(10), expected, rtol=1e-15)


def test_u_coeffs_blocks():
    u = u_coeffs(2, 7)
    np.testing.assert_allclose(u * math.sqrt(3), [1, 1, 1, 0.5, 0.5, 0.5, 0.375])


def test_h_has_unit_coefficients_on_band():
    for m, n in [(0, 0), (0, 5), (3, 9), (7, 40)]:
        construction = construct_h(m, n)
        h = h_coeffs(construction.g)
        np.testing.assert_allclose(h[m:n + 1], 1.0, atol=1e-12)


def test_h1_norm_matches_quadrature():
    construction = construct_h(2, 11)
    assert h1_norm_quadrature(construction.g) == pytest.approx(construction.h1_norm, rel=1e-9)


def test_dyadic_window():
    assert dyadic_window(0, 0) == (0, 0)
    assert dyadic_window(0, 1) == (0, 0)
    assert dyadic_window(3, 9) == (1, 4)
    assert dyadic_window(8, 16) == (3, 4)


def test_formula_bounds_at_origin():
    bounds = kmn_formula_bounds(0, 0)
    assert bounds.lower_formula == 1.0
    assert bounds.upper_formula == pytest.approx(1.0)


def test_basic_bounds():
    b1, b2, b3 = kmn_basic_bounds(0, 1)
    assert b1 == pytest.approx(4 / math.pi, rel=1e-8)
    assert b2 == pytest.approx(1.5)
    assert b3 == pytest.approx(math.sqrt(2))
    assert kmn_basic_bounds(1, 4)[0] is None


def test_lower_hankel_small_case():
    q1, norm, lower = kmn_lower_hankel(0, 1)
    assert q1 == pytest.approx(1.5)
    assert norm == pytest.approx((1 + math.sqrt(2)) / 2)
    assert lower == pytest.approx(3 / (1 + math.sqrt(2)))


def test_lower_hankel_truncation_does_not_change_norm():
    _, exact, _ = kmn_lower_hankel(3, 10)
    _, padded, _ = kmn_lower_hankel(3, 10, trunc=44)
    assert padded == pytest.approx(exact, rel=1e-12)
    with pytest.raises(InvalidInputError):
        kmn_lower_hankel(3, 10, trunc=5)


def test_band_validation():
    with pytest.raises(InvalidInputError):
        kmn_bounds(5, 2)
    with pytest.raises(InvalidInputError):
        kmn_upper(-1, 2)


@hyp_settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=120), st.integers(min_value=0, max_value=120))
def test_sandwich(a, b):
    m, n = min(a, b), max(a, b)
    bounds = kmn_bounds(m, n)
    assert bounds.lower() <= bounds.upper() + 1e-9
    assert bounds.lower_hankel <= bounds.upper_constructive + 1e-9
    assert bounds.lower_hankel_certified <= bounds.lower_hankel + 1e-12
    assert bounds.upper() <= kmn_upper(m, n) + 1e-12
    assert kmn_upper(m, n) == pytest.approx(
        min(bounds.upper_formula, bounds.upper_basic2, bounds.upper_basic3, bounds.upper_constructive)
    )


def test_constructive_bound_grows_like_log():
    values = [kmn_bounds(0, n, with_hankel=False).upper_constructive for n in (15, 255, 4095)]
    steps = np.diff(values)
    assert steps[0] == pytest.approx(steps[1], rel=0.05)
    assert steps[0] == pytest.approx(4 * math.log(2) / math.pi, rel=0.05)


# --- Full grid sweeps ---

GRID_N = 512


@pytest.mark.parametrize("n", [0, 1, 2, 7, 63, 512])
def test_diagonal_constant_is_one(n):
    bounds = kmn_formula_bounds(n, n)
    assert bounds.lower_formula == 1.0
    assert bounds.upper_formula == 1.0
    assert construct_h(n, n).h1_norm == pytest.approx(1.0, abs=1e-12)
    assert kmn_upper(n, n) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.slow
def test_constructive_norm_within_formula_on_full_grid():
    for n in range(GRID_N + 1):
        for m in range(n + 1):
            formula = kmn_formula_bounds(m, n)
            _, b2, b3 = kmn_basic_bounds(m, n)
            h1 = construct_h(m, n).h1_norm
            assert h1 <= formula.upper_formula + 1e-9, (m, n)
            assert formula.lower_formula <= min(formula.upper_formula, b2, b3, h1) + 1e-9, (m, n)


@pytest.mark.slow
def test_harmonic_sum_dominates_log_on_full_grid():
    for n in range(GRID_N + 1):
        for m in range(n + 1):
            assert q_at_one(m, n) >= math.log((n + 2) / (m + 1)), (m, n)


@pytest.mark.slow
def test_hankel_sandwich_across_grid():
    for n in range(0, GRID_N + 1, 32):
        for m in sorted(set(range(0, n + 1, 32)) | {n}):
            bounds = kmn_bounds(m, n)
            assert bounds.lower() <= bounds.upper() + 1e-9, (m, n)
            assert bounds.lower_hankel <= bounds.upper_constructive + 1e-9, (m, n)
            assert bounds.q1 == q_at_one(m, n)
