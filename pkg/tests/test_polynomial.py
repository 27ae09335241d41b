import json
import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.core.errors import DataError, InvalidInputError
from app.services.polynomial import (
    MultiPoly,
    band_limits,
    band_limits_wrt,
    certificate_factor,
    coeff_l1,
    homogeneous_dim,
    load_poly,
    parse_poly_text,
    poly_from_json,
    poly_to_json,
    radial_derivative,
    random_poly,
    sup_norm,
)
from tests.conftest import torus_points


# --- Construction and arithmetic ---

def test_zero_coefficients_are_pruned():
    p = MultiPoly(2, {(1, 0): 1.0, (0, 1): 0.0, (0, 0): 2.0})
    assert len(p) == 2
    assert p.coeff((0, 1)) == 0
    q = p - MultiPoly.monomial((1, 0))
    assert q == MultiPoly.constant(2, 2.0)


def test_invalid_multi_index_rejected():
    with pytest.raises(InvalidInputError):
        MultiPoly(2, {(1,): 1.0})
    with pytest.raises(InvalidInputError):
        MultiPoly(2, {(1, -1): 1.0})
    with pytest.raises(InvalidInputError):
        MultiPoly(1, {(1,): float("nan")})


def test_square_of_sum():
    z0, z1 = MultiPoly.variable(2, 0), MultiPoly.variable(2, 1)
    p = (z0 + z1) * (z0 + z1)
    assert p.coeffs == {(2, 0): 1, (1, 1): 2, (0, 2): 1}
    assert p.is_homogeneous()
    assert p.degree == 2
    assert p.axis_degrees() == (2, 2)


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        MultiPoly.variable(2, 0) + MultiPoly.variable(3, 0)


def test_zero_polynomial_degree_and_band():
    zero = MultiPoly.zero(3)
    assert zero.degree == 0
    assert zero.is_zero()
    with pytest.raises(InvalidInputError):
        band_limits(zero)


def test_partial_and_radial_derivative():
    p = MultiPoly(2, {(2, 1): 3.0, (0, 1): 1.0, (1, 0): 5.0})
    assert p.partial(0).coeffs == {(1, 1): 6.0, (0, 0): 5.0}
    assert radial_derivative(p).coeffs == {(2, 1): 9.0, (0, 1): 1.0, (1, 0): 5.0}
    with pytest.raises(InvalidInputError):
        p.partial(2)


def test_band_limits():
    p = MultiPoly(2, {(3, 1): 1.0, (1, 1): 2.0})
    assert band_limits(p) == (2, 4)
    assert band_limits_wrt(p, 0) == (1, 3)
    assert band_limits_wrt(p, 1) == (1, 1)


def test_dilate_and_evaluate(rng):
    p = random_poly(2, 3, rng)
    z = np.array([0.3 + 0.2j, -0.5j])
    assert p.dilate(0.5).evaluate(z) == pytest.approx(p.evaluate(0.5 * z))
    points = torus_points(2, 5, rng)
    np.testing.assert_allclose(p.evaluate_many(points), [p.evaluate(x) for x in points])


def test_homogeneous_dim_and_coeff_l1():
    assert homogeneous_dim(3, 2) == 10
    assert homogeneous_dim(1, 5) == 6
    assert coeff_l1(MultiPoly(1, {(0,): 3, (2,): -4j})) == pytest.approx(7.0)


def test_random_poly_homogeneous(rng):
    p = random_poly(3, 4, rng, homogeneous=True)
    assert p.is_homogeneous()
    assert len(p) == math.comb(4 + 2, 2)


# --- Supremum norm ---

def test_monomial_sup_norm_is_exact():
    estimate = sup_norm(MultiPoly.monomial((2, 3), -3.0))
    assert estimate.method == "exact"
    assert estimate.certified_upper == pytest.approx(3.0)
    assert estimate.grid_max == estimate.certified_upper


def test_one_plus_z():
    estimate = sup_norm(MultiPoly(1, {(0,): 1.0, (1,): 1.0}))
    assert estimate.grid_max == pytest.approx(2.0)
    assert 2.0 <= estimate.certified_upper <= 2.0 * 1.001


def test_certificate_factor():
    assert certificate_factor([0, 0], 16) == 1.0
    assert certificate_factor([3], 64) == pytest.approx(1.0 / math.sqrt(1.0 - 0.5 * (3 * math.pi / 64) ** 2))
    assert math.isinf(certificate_factor([10], 4))


def test_grid_precondition():
    with pytest.raises(InvalidInputError):
        sup_norm(MultiPoly.monomial((5,)) + 1, points_per_axis=8)


def test_refinement_never_loosens(rng):
    p = random_poly(2, 3, rng)
    coarse = sup_norm(p, 64, refine=False)
    refined = sup_norm(p, 64, refine=True)
    assert refined.certified_upper <= coarse.certified_upper
    assert refined.grid_max == coarse.grid_max


def test_varopoulos_sup_norm(varopoulos):
    estimate = sup_norm(varopoulos, 1024)
    assert estimate.grid_max == pytest.approx(5.0, abs=1e-12)
    assert 5.0 <= estimate.certified_upper <= 5.001


def test_large_three_variable_grid(rng):
    p = random_poly(3, 24, rng)
    estimate = sup_norm(p)
    assert estimate.grid_points_per_axis ** 3 > 2 ** 23
    values = np.abs(p.evaluate_many(torus_points(3, 200, rng)))
    assert estimate.grid_max <= estimate.certified_upper < math.inf
    assert values.max() <= estimate.certified_upper * (1 + 1e-12)
    assert estimate.grid_max <= coeff_l1(p) * (1 + 1e-12)


def test_sliced_grid_matches_single_fft(rng, monkeypatch):
    import app.services.polynomial as polynomial

    p = random_poly(3, 4, rng)
    whole = sup_norm(p, 64)
    monkeypatch.setattr(polynomial, "CHUNK_VALUES", 64 ** 2)
    sliced = sup_norm(p, 64)
    assert sliced.grid_max == pytest.approx(whole.grid_max, rel=1e-12)
    assert sliced.certified_upper == pytest.approx(whole.certified_upper, rel=1e-12)


@hyp_settings(max_examples=30, deadline=None)
@given(
    dim=st.integers(min_value=1, max_value=3),
    degree=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_certificate_dominates_random_points(dim, degree, seed):
    rng = np.random.default_rng(seed)
    p = random_poly(dim, degree, rng)
    estimate = sup_norm(p)
    values = np.abs(p.evaluate_many(torus_points(dim, 200, rng)))
    assert estimate.grid_max <= estimate.certified_upper
    assert values.max() <= estimate.certified_upper * (1 + 1e-12)
    # the all-ones point is always on the grid
    assert abs(p.evaluate(np.ones(dim))) <= estimate.grid_max * (1 + 1e-12)


# --- Formats ---

def test_parse_poly_text():
    p = parse_poly_text("# comment\n1 0  2.0 0\n\n0 1  0 -1  # trailing\n1 0  1 0\n")
    assert p.dim == 2
    assert p.coeffs == {(1, 0): 3.0, (0, 1): -1j}


@pytest.mark.parametrize("text", ["1 0 2.0\n0 1 0 1\n", "1 x 1 0\n", "-1 0 1 0\n", "# only comments\n"])
def test_parse_poly_text_errors(text):
    with pytest.raises(DataError):
        parse_poly_text(text)


def test_poly_json(tmp_path, varopoulos):
    payload = poly_to_json(varopoulos)
    assert payload["dim"] == 3
    path = tmp_path / "p.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    assert load_poly(path) == varopoulos
    with pytest.raises(DataError):
        poly_from_json({"terms": []})
    with pytest.raises(DataError):
        load_poly(tmp_path / "missing.txt")
