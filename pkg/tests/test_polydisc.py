import math

import numpy as np
import pytest

from app.constants import REMARK_C3_BOUND, REMARK_C3_VALUE, REMARK_CHAIN
from app.core.errors import InvalidInputError
from app.services.operators import eval_poly_tuple, operator_norm, random_commuting_tuple
from app.services.polydisc import (
    besov_d_bound,
    cdn_bounds,
    cdn_pipeline,
    chain_constants,
    counterexample_gallery,
    gallery_rows,
    monomial_shift_bound,
    monomial_shift_sequence,
    sa_log_bound,
    sa_upper_band,
    split,
    varopoulos_poly,
    varopoulos_tuple,
)
from app.services.polynomial import MultiPoly, band_limits_wrt, random_poly, sup_norm
from tests.conftest import torus_points


def _by_name(reports):
    return {r.name: r for r in reports}


# --- Splitting ---

def test_chain_constants():
    assert chain_constants(3) == [6.0, 42.0, 49.0]
    assert chain_constants(1) == [1.0]
    assert chain_constants(2, kernel_l1=2.0) == [2.0, 3.0]


def test_split_monomial_stays_on_first_axis():
    p = MultiPoly.monomial((6, 0, 0))
    result = split(p, 6, 6)
    assert result.parts[0] == p
    assert result.parts[1].is_zero() and result.parts[2].is_zero()
    assert result.cutoff == 1


def test_split_with_zero_lower_band(rng):
    p = random_poly(3, 4, rng)
    result = split(p)
    assert result.cutoff == 0
    assert result.bands_ok


@pytest.mark.parametrize("seed", [0, 1])
def test_split_random_homogeneous(seed):
    rng = np.random.default_rng(seed)
    p = random_poly(3, 12, rng, homogeneous=True)
    p = p.scale(1.0 / sup_norm(p).certified_upper)
    result = split(p)
    scale = max(abs(c) for c in p.coeffs.values())
    assert result.coefficient_deviation <= 1e-12 * scale
    assert result.residual_deviation <= 1e-12 * scale
    assert result.bands_ok
    assert result.cutoff == 2
    for factor, bound in zip(result.sup_norm_factors, chain_constants(3)):
        assert factor <= bound
    for j, part in enumerate(result.parts):
        if not part.is_zero():
            lo, hi = band_limits_wrt(part, j)
            assert 2 <= lo and hi <= 12


@pytest.mark.slow
@pytest.mark.parametrize("degree", [6, 12, 24, 48])
def test_split_factors_over_seeds(degree, record_property):
    chain = chain_constants(3)
    worst = [0.0, 0.0, 0.0]
    for seed in range(50):
        rng = np.random.default_rng(seed)
        p = random_poly(3, degree, rng, homogeneous=True)
        p = p.scale(1.0 / sup_norm(p).certified_upper)
        result = split(p)
        scale = max(abs(c) for c in p.coeffs.values())
        assert result.coefficient_deviation <= 1e-12 * scale, seed
        assert result.residual_deviation <= 1e-12 * scale, seed
        assert result.bands_ok, seed
        for j, factor in enumerate(result.sup_norm_factors):
            assert factor <= chain[j], (seed, j, factor)
            worst[j] = max(worst[j], factor)
    record_property("worst_factors", worst)
    record_property("stated_chain", list(REMARK_CHAIN))


def test_split_rejects_wrong_band():
    with pytest.raises(InvalidInputError):
        split(MultiPoly.monomial((1, 2, 0)), 4, 6)


# --- Schur-Agler bounds ---

def test_sa_log_bound_base_cases():
    assert sa_log_bound(1, 10) == 1.0
    assert sa_log_bound(2, 10) == 1.0
    assert sa_log_bound(3, 10) > 1.0


def test_sa_upper_band_small_dimensions(rng):
    assert sa_upper_band(random_poly(2, 3, rng)).value == 1.0


def test_sa_upper_band_on_dense_three_variable_polynomial(rng):
    p = random_poly(3, 14, rng)
    report = sa_upper_band(p)
    assert report.certified
    assert 1.0 <= report.value < math.inf
    assert report.details["band"] == [0, 14]


def test_pipeline_soundness_on_gallery_and_random_tuples(rng):
    p = varopoulos_poly()
    bound = sa_upper_band(p).value * sup_norm(p, 256).certified_upper
    assert operator_norm(eval_poly_tuple(p, varopoulos_tuple()).value) <= bound * (1 + 1e-4)
    for seed in range(4):
        T = random_commuting_tuple(3, 5, seed, "single-generator")
        q = random_poly(3, 4, rng, homogeneous=True)
        bound = sa_upper_band(q).value * sup_norm(q).certified_upper
        assert operator_norm(eval_poly_tuple(q, T).value) <= bound * (1 + 1e-4)


def test_cdn_bounds_small_dimensions():
    reports = _by_name(cdn_bounds(3, 2))
    assert reports["trivial"].value == pytest.approx(math.sqrt(10))
    assert _by_name(cdn_bounds(2, 5))["von_neumann_ando"].value == 1.0
    assert _by_name(cdn_bounds(1, 5))["von_neumann_ando"].best
    with pytest.raises(InvalidInputError):
        cdn_bounds(3, 0)


def test_cdn_pipeline_below_remark_constant():
    assert REMARK_C3_VALUE <= REMARK_C3_BOUND
    worst = max(cdn_pipeline(3, n) for n in range(1, 513))
    assert worst <= REMARK_C3_BOUND


def test_remark_bound_is_not_certified():
    remark = _by_name(cdn_bounds(3, 12))["remark"]
    assert not remark.certified
    assert remark.value == pytest.approx(REMARK_C3_VALUE)


def test_dixon_does_not_overflow():
    dixon = _by_name(cdn_bounds(4, 2000))["dixon"]
    assert math.isinf(dixon.value)


@pytest.mark.parametrize("d", [4, 5])
def test_pipeline_grows_like_power_of_log(d):
    ratios = [cdn_pipeline(d, n) / math.log(n + 1) ** (d - 3) for n in (8, 64, 512)]
    assert max(ratios) <= 10 * min(ratios)


@pytest.mark.parametrize("d", [4, 5])
def test_pipeline_log_constant_is_bounded(d):
    # kmn_upper never exceeds log(ratio)/pi + 2, and (n+1)/(n // 2d + 1) < 4d
    outer = sum(chain_constants(d)) * (math.log(4 * d) / math.pi + 2)
    for n in range(1, 513):
        constant = _by_name(cdn_bounds(d, n))["pipeline"].details["log_constant"]
        assert constant <= outer * (1 / math.pi + 2 / math.log(n + 1)) ** (d - 3), n


def test_monomial_shift_bound():
    p = MultiPoly(3, {(1, 0, 2): 1.0, (0, 1, 1): -0.5})
    values = [monomial_shift_bound(p, m).value for m in range(0, 200, 10)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    norm = sup_norm(p).certified_upper
    assert values[-1] == pytest.approx(norm, rel=0.01)
    assert monomial_shift_bound(MultiPoly.constant(3, 1.0), 7).value == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        monomial_shift_bound(MultiPoly.constant(2, 1.0), 1)


def test_monomial_shift_sequence():
    p = MultiPoly(3, {(1, 0, 2): 1.0, (0, 1, 1): -0.5})
    sequence = monomial_shift_sequence(p, range(0, 200, 10))
    assert [r.details["m"] for r in sequence] == list(range(0, 200, 10))
    assert [r.value for r in sequence] == pytest.approx([monomial_shift_bound(p, m).value for m in range(0, 200, 10)])
    assert sequence[0].value == pytest.approx(math.sqrt(3) * sequence[0].details["sup_norm"])
    with pytest.raises(InvalidInputError):
        monomial_shift_sequence(p, [3, -1])


def test_besov_d_bound():
    constant = besov_d_bound(MultiPoly.constant(3, 2.0))
    assert constant.details["besov_norm"] == pytest.approx(2.0)
    assert constant.value == pytest.approx(2.0)
    linear = besov_d_bound(MultiPoly.variable(3, 0))
    assert linear.details["besov_norm"] == pytest.approx(0.5, abs=1e-10)
    high = besov_d_bound(MultiPoly.monomial((16, 0, 0)))
    assert [level["level"] for level in high.details["levels"]] == [4]
    with pytest.raises(InvalidInputError):
        besov_d_bound(MultiPoly.variable(2, 0))


# --- Gallery ---

def test_gallery_tuple():
    T = varopoulos_tuple()
    assert T.max_commutator() == 0.0
    assert max(T.norms()) <= 1 + 1e-12
    value = eval_poly_tuple(varopoulos_poly(), T).value
    e0 = np.zeros(5)
    e0[0] = 1.0
    np.testing.assert_allclose(value @ e0, 3 * math.sqrt(3) * np.eye(5)[4], atol=1e-12)


def test_gallery_rows():
    (row,) = gallery_rows(counterexample_gallery(1024))
    assert abs(row.norm - 3 * math.sqrt(3)) <= 1e-9
    assert row.certified_sup <= 5.001
    assert row.ratio >= 1.039


def test_gallery_polynomial_coarse_torus_scan(varopoulos, rng):
    # three nested loops over a coarse grid, independent of the FFT path
    angles = np.exp(2j * np.pi * np.arange(24) / 24)
    best = 0.0
    for a in angles:
        for b in angles:
            for c in angles:
                best = max(best, abs(varopoulos.evaluate([a, b, c])))
    assert best == pytest.approx(5.0)
    assert np.abs(varopoulos.evaluate_many(torus_points(3, 5000, rng))).max() <= 5.0 + 1e-12
