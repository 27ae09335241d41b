"""
Besov-type norms of polynomials: the dyadic sum over W_n blocks, the radial
integral with logarithmic weight, the Bernstein inequalities, and the
functional calculus for operator-coefficient polynomials.
"""
import logging
import math
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
import scipy.special
from pydantic import BaseModel, Field

from app.constants import BESOV_S_MAX, CHECK_RTOL, GAUSS_PANEL_NODES
from app.core.config import settings
from app.core.errors import InvalidInputError, InvariantViolation, TupleInvariantError
from app.core.parallel import ordered_map
from app.services.kernels import convolve, dyadic_levels, dyadic_w
from app.services.kmn import kmn_upper
from app.services.operators import (
    OpPoly,
    as_matrix,
    commutator_norm,
    eval_oppoly,
    operator_norm,
    oppoly_sup_norm,
)
from app.services.polynomial import (
    MultiPoly,
    certificate_factor,
    default_grid_points,
    radial_derivative,
    sup_norm,
)

logger = logging.getLogger(__name__)

NODE_CHUNK = 256


class BesovReport(BaseModel):
    a: float = Field(description="Exponent of the logarithmic weight.")
    dyadic_terms: list[tuple[int, float]] = Field(description="(n, (n+1)^a * certified ||f * W_n||).")
    dyadic_sum: float
    integral_value: Optional[float] = Field(default=None, description="|f(0)| + int ||(Rf)_r|| log(1/(1-r))^a dr.")
    ratio: Optional[float] = Field(default=None, description="integral_value / dyadic_sum.")


def dyadic_parts(f: MultiPoly) -> list[tuple[int, MultiPoly]]:
    return [(n, convolve(f, dyadic_w(n), "total")) for n in dyadic_levels(f.degree)]


def dyadic_besov(f: MultiPoly, a: float) -> BesovReport:
    if a < 0:
        raise InvalidInputError(f"Besov exponent must be >= 0, got {a}")
    terms = []
    for n, part in dyadic_parts(f):
        value = 0.0 if part.is_zero() else (n + 1) ** a * sup_norm(part).certified_upper
        terms.append((n, value))
    return BesovReport(a=a, dyadic_terms=terms, dyadic_sum=math.fsum(v for _, v in terms))


# --- Radial quadrature ---

@lru_cache(maxsize=32)
def log_weight_nodes(quad: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodes s and weights for int_0^inf g(s) ds truncated at BESOV_S_MAX, composite
    Gauss-Legendre with GAUSS_PANEL_NODES per panel. Used with r = 1 - e^{-s}.
    """
    if quad < 256:
        raise InvalidInputError(f"quad must be at least 256, got {quad}")
    panels = quad // GAUSS_PANEL_NODES
    x, w = scipy.special.roots_legendre(GAUSS_PANEL_NODES)
    width = BESOV_S_MAX / panels
    left = np.arange(panels) * width
    nodes = (left[:, None] + 0.5 * width * (x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * w, panels)
    return nodes, weights


def _graded_grid(D: MultiPoly, points: int) -> tuple[np.ndarray, np.ndarray]:
    """Torus grid values of each homogeneous part of D, stacked as (degree, flattened grid)."""
    degrees = D.axis_degrees()
    shape = tuple(points if n > 0 else 1 for n in degrees)
    active = [i + 1 for i, n in enumerate(degrees) if n > 0]
    graded = sorted({sum(a) for a in D.coeffs})
    stacked = np.zeros((len(graded),) + shape, dtype=complex)
    position = {k: i for i, k in enumerate(graded)}
    for alpha, c in D.coeffs.items():
        stacked[(position[sum(alpha)],) + alpha] += c
    if active:
        stacked = np.fft.ifftn(stacked, axes=active) * float(points) ** len(active)
    return np.asarray(graded), stacked.reshape(len(graded), -1)


def dilated_sup_norms(D: MultiPoly, radii: np.ndarray) -> np.ndarray:
    """Certified ||D_r||_inf for every r in `radii`."""
    radii = np.asarray(radii, dtype=float)
    if D.is_zero():
        return np.zeros_like(radii)
    if len(D) == 1:
        (alpha, c), = D.coeffs.items()
        return abs(c) * radii ** sum(alpha)
    if D.is_homogeneous():
        return sup_norm(D).certified_upper * radii ** D.degree
    points = default_grid_points(D)
    factor = certificate_factor(D.axis_degrees(), points)
    degrees, grid = _graded_grid(D, points)

    def chunk(start: int) -> np.ndarray:
        powers = radii[start:start + NODE_CHUNK, None] ** degrees[None, :]
        return np.abs(powers @ grid).max(axis=1)

    parts = ordered_map(chunk, range(0, len(radii), NODE_CHUNK))
    return factor * np.concatenate(parts)


def integral_besov(f: MultiPoly, a: float, quad: int | None = None) -> float:
    """
    |f(0)| + int_0^1 ||(Rf)_r||_inf log(1/(1-r))^a dr, with f' in place of Rf in
    one variable. The substitution r = 1 - e^{-s} turns the weight into s^a e^{-s}.
    """
    if a < 0:
        raise InvalidInputError(f"Besov exponent must be >= 0, got {a}")
    quad = settings.BESOV_QUAD_NODES if quad is None else quad
    s, w = log_weight_nodes(quad)
    D = f.partial(0) if f.dim == 1 else radial_derivative(f)
    constant = abs(f.coeff((0,) * f.dim))
    if D.is_zero():
        return constant
    r = -np.expm1(-s)
    integrand = dilated_sup_norms(D, r) * s ** a * np.exp(-s)
    return constant + math.fsum(w * integrand)


def besov_report(f: MultiPoly, a: float, quad: int | None = None) -> BesovReport:
    report = dyadic_besov(f, a)
    report.integral_value = integral_besov(f, a, quad)
    if report.dyadic_sum > 0:
        report.ratio = report.integral_value / report.dyadic_sum
    logger.info(f"Besov a={a}: dyadic={report.dyadic_sum:.6g}, integral={report.integral_value:.6g}")
    return report


def integral_asympt_ratio(N: int, a: float, quad: int | None = None) -> float:
    """N int_0^1 r^N log(1/(1-r))^a dr divided by log(N+1)^a."""
    if N < 1:
        raise InvalidInputError(f"N must be >= 1, got {N}")
    quad = settings.BESOV_QUAD_NODES if quad is None else quad
    s, w = log_weight_nodes(quad)
    r = -np.expm1(-s)
    value = N * math.fsum(w * r ** N * s ** a * np.exp(-s))
    return value if a == 0 else value / math.log(N + 1) ** a


def asympt_closed_form_a1(N: int) -> float:
    """N int_0^1 r^N log(1/(1-r)) dr = N H_{N+1} / (N+1)."""
    harmonic = math.fsum(1.0 / k for k in range(1, N + 2))
    return N * harmonic / (N + 1)


# --- Bernstein inequalities ---

class BernsteinReport(BaseModel):
    a1: Optional[bool] = Field(default=None, description="||f|| <= r^{-n} ||f_r|| (support in [0, n]).")
    a2: Optional[bool] = Field(default=None, description="||f'|| <= n ||f|| (support in [0, n]).")
    b1: Optional[bool] = Field(default=None, description="||f_r|| <= r^n ||f|| (support in [n, inf)).")
    b2: Optional[bool] = Field(default=None, description="n ||f|| <= ||f'|| (support in [n, inf)).")

    def all_hold(self) -> bool:
        return all(v is not False for v in (self.a1, self.a2, self.b1, self.b2))


def _holds(lhs: MultiPoly, rhs: MultiPoly, lhs_scale: float = 1.0, rhs_scale: float = 1.0) -> bool:
    left = lhs_scale * sup_norm(lhs).grid_max
    right = rhs_scale * sup_norm(rhs).certified_upper
    return left <= right * (1.0 + CHECK_RTOL) + 1e-300


def bernstein_check(f: MultiPoly, n: int, r: float) -> BernsteinReport:
    if f.dim != 1:
        raise InvalidInputError(f"bernstein_check needs a one-variable polynomial, got dim={f.dim}")
    if n < 0 or not 0.0 < r <= 1.0:
        raise InvalidInputError(f"bernstein_check needs n >= 0 and 0 < r <= 1, got n={n}, r={r}")
    low = min((a[0] for a in f.coeffs), default=0)
    analytic_below = f.degree <= n
    analytic_above = low >= n
    if not (analytic_below or analytic_above):
        raise InvalidInputError(f"Support [{low}, {f.degree}] is neither inside [0, {n}] nor inside [{n}, inf)")
    report = BernsteinReport()
    f_r, f_prime = f.dilate(r), f.partial(0)
    if analytic_below:
        report.a1 = _holds(f, f_r, rhs_scale=r ** (-n))
        report.a2 = _holds(f_prime, f, rhs_scale=n)
    if analytic_above:
        report.b1 = _holds(f_r, f, rhs_scale=r ** n)
        report.b2 = _holds(f, f_prime, lhs_scale=n)
    return report


# --- Functional calculus ---

class FunctionalCalculus(NamedTuple):
    value: np.ndarray
    bound: float
    besov_norm: float
    constant: float


def oppoly_besov_norm(P: OpPoly, quad: int = 256) -> float:
    """||A_0|| + int_0^1 sup_{|z|=1} ||p'(rz)|| dr."""
    s, w = log_weight_nodes(quad)
    head = operator_norm(P.coeff(0))
    if P.n == 0:
        return head
    low = max(P.m, 1)
    derivative = OpPoly(low - 1, P.n - 1, tuple(k * P.coeff(k) for k in range(low, P.n + 1)))
    r = -np.expm1(-s)
    sups = [oppoly_sup_norm(derivative.restrict({k: rv ** k for k in range(low - 1, P.n)})).certified_upper for rv in r]
    return head + math.fsum(w * np.asarray(sups) * np.exp(-s))


def besov_functional_calculus(P: OpPoly, T, tol: float | None = None, quad: int = 256) -> FunctionalCalculus:
    """
    f(T) = sum_n (f * W_n)(T) for coefficients commuting with T. The bound is
    sum_n K_up(band_n) * certified ||f * W_n||; `constant` is its ratio to the
    B^0_{inf,1}-type norm.
    """
    T = as_matrix(T, "T")
    tol = settings.COMMUTE_TOL if tol is None else tol
    norm = operator_norm(T)
    if norm > 1.0 + settings.CONTRACTION_TOL:
        raise TupleInvariantError(f"T is not a contraction: norm {norm:.15g}")
    for i, A in enumerate(P.coeff_mats):
        value = commutator_norm(T, A)
        if value > tol:
            raise TupleInvariantError(f"T does not commute with A_{P.m + i}: {value:.3e}", pair=(P.m + i,))

    value = np.zeros((P.size, P.size), dtype=complex)
    bound = 0.0
    for n in dyadic_levels(P.n):
        W = dyadic_w(n)
        band = [k for k in range(P.m, P.n + 1) if W[k] != 0 and np.any(P.coeff(k))]
        if not band:
            continue
        part = P.restrict({k: W[k] for k in band})
        value += eval_oppoly(part, T)
        bound += kmn_upper(band[0], band[-1]) * oppoly_sup_norm(part).certified_upper

    value_norm = operator_norm(value)
    if value_norm > bound * (1.0 + 1e-9) + 1e-12:
        raise InvariantViolation(f"||f(T)|| = {value_norm:.12g} exceeds the dyadic bound {bound:.12g}")
    besov = oppoly_besov_norm(P, quad)
    constant = bound / besov if besov > 0 else 0.0
    logger.info(f"Functional calculus: ||f(T)||={value_norm:.6g}, bound={bound:.6g}, constant={constant:.4f}")
    return FunctionalCalculus(value, bound, besov, constant)
