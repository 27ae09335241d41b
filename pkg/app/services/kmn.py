"""
Brackets for K(m, n), the best constant in von Neumann's inequality for
(m, n)-band-limited polynomials with commuting operator coefficients.

The exact value is an infinite-dimensional extremal problem; this module only
produces certified lower and upper bounds:

- closed-form sandwich: max(1, log((n+2)/(m+1))/pi) <= K <= log((n+1)/(m+1))/pi + min((n+1)/(m+1), 2)
- elementary upper bounds: Dirichlet kernel (m = 0), dyadic kernels, sqrt((n+1)/(m+1))
- constructive upper bound ||h||_{H^1} for h = g^2, g a truncated square-root profile
- duality lower bound q(1) / ||H_q|| with q(z) = sum_{k=m}^n z^k / (k+1)
"""
import logging
import math
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, Field

from app.constants import DYADIC_L1, HILBERT_NORM
from app.core.errors import InvalidInputError, InvariantViolation
from app.services.hankel import HankelSpec, hankel_matrix
from app.services.kernels import analytic_profile, band_indicator, l1_norm
from app.services.operators import operator_norm

logger = logging.getLogger(__name__)

SANDWICH_TOL = 1e-9


def _check_band(m: int, n: int) -> None:
    if not 0 <= m <= n:
        raise InvalidInputError(f"Band needs 0 <= m <= n, got ({m}, {n})")


# --- Square-root profile ---

def central_binomial_terms(count: int) -> np.ndarray:
    """4^{-l} C(2l, l) for l = 0..count-1 by c_{l+1} = c_l (2l+1)/(2l+2)."""
    out = np.empty(count)
    c = 1.0
    for l in range(count):
        out[l] = c
        c *= (2 * l + 1) / (2 * l + 2)
    return out


def u_coeffs(m: int, count: int) -> np.ndarray:
    """Coefficients (m+1)^{-1/2} 4^{-l} C(2l, l), l = floor(j / (m+1)), j < count."""
    if m < 0 or count < 1:
        raise InvalidInputError(f"u_coeffs needs m >= 0 and count >= 1, got m={m}, count={count}")
    blocks = central_binomial_terms((count - 1) // (m + 1) + 1)
    return np.repeat(blocks, m + 1)[:count] / math.sqrt(m + 1)


class HConstruction(NamedTuple):
    g: np.ndarray
    h1_norm: float
    h1_norm_closed_form: float


def construct_h(m: int, n: int) -> HConstruction:
    """
    g = truncation of u to degree n and h = g^2, so ||h||_{H^1} = ||g||_{H^2}^2
    and h has coefficient 1 on [m, n].
    """
    _check_band(m, n)
    g = u_coeffs(m, n + 1)
    h1 = math.fsum(g * g)
    k, r = divmod(n + 1, m + 1)
    c = central_binomial_terms(k + 1)
    closed = math.fsum(c[:k] ** 2) + (r / (m + 1)) * c[k] ** 2
    if abs(h1 - closed) > 1e-12 * max(1.0, h1):
        raise InvariantViolation(f"||h||_H1 for ({m}, {n}): coefficient sum {h1} vs closed form {closed}")
    return HConstruction(g, h1, closed)


def h_coeffs(g: np.ndarray) -> np.ndarray:
    return np.convolve(g, g)


def h1_norm_quadrature(g: np.ndarray) -> float:
    """Circle-quadrature value of ||g^2||_{H^1}, independent of the coefficient formula."""
    return l1_norm(analytic_profile(h_coeffs(g)))


# --- Closed-form bounds ---

class KmnBounds(BaseModel):
    m: int
    n: int
    lower_formula: float = Field(description="max(1, log((n+2)/(m+1))/pi).")
    upper_formula: float = Field(description="log((n+1)/(m+1))/pi + min((n+1)/(m+1), 2).")
    upper_basic1: Optional[float] = Field(default=None, description="||Dirichlet kernel||_H1, only for m = 0.")
    upper_basic2: Optional[float] = Field(default=None, description="1.5 (b - a + 1) from dyadic kernels.")
    upper_basic3: Optional[float] = Field(default=None, description="sqrt((n+1)/(m+1)).")
    q1: Optional[float] = Field(default=None, description="sum_{k=m}^n 1/(k+1).")
    hankel_norm: Optional[float] = Field(default=None, description="Norm of the Hankel matrix of q.")
    lower_hankel: Optional[float] = Field(default=None, description="q(1) / ||H_q||.")
    lower_hankel_certified: Optional[float] = Field(default=None, description="q(1) / pi.")
    upper_constructive: Optional[float] = Field(default=None, description="||h||_H1 of the explicit h.")
    duality_gap: Optional[float] = Field(default=None, description="upper_constructive - lower_hankel.")

    def lower(self) -> float:
        return max(v for v in (self.lower_formula, self.lower_hankel) if v is not None)

    def upper(self) -> float:
        candidates = (
            self.upper_formula, self.upper_basic1, self.upper_basic2,
            self.upper_basic3, self.upper_constructive,
        )
        return min(v for v in candidates if v is not None)


def kmn_formula_bounds(m: int, n: int) -> KmnBounds:
    _check_band(m, n)
    ratio = (n + 1) / (m + 1)
    lower = max(1.0, math.log((n + 2) / (m + 1)) / math.pi)
    upper = math.log(ratio) / math.pi + min(ratio, 2.0)
    return KmnBounds(m=m, n=n, lower_formula=lower, upper_formula=upper)


def dyadic_window(m: int, n: int) -> tuple[int, int]:
    """Smallest [a, b] with 2^a <= m (a = 0 when m = 0) and n <= 2^b."""
    a = m.bit_length() - 1 if m > 0 else 0
    b = (n - 1).bit_length() if n > 0 else 0
    return a, b


def kmn_basic_bounds(m: int, n: int) -> tuple[Optional[float], float, float]:
    _check_band(m, n)
    b1 = l1_norm(band_indicator(0, n)) if m == 0 else None
    a, b = dyadic_window(m, n)
    b2 = DYADIC_L1 * (b - a + 1)
    b3 = math.sqrt((n + 1) / (m + 1))
    return b1, b2, b3


# --- Duality lower bound ---

def q_at_one(m: int, n: int) -> float:
    """q(1) = sum_{k=m}^n 1/(k+1), summed exactly."""
    _check_band(m, n)
    return math.fsum(1.0 / (k + 1) for k in range(m, n + 1))


def kmn_lower_hankel(m: int, n: int, trunc: int | None = None) -> tuple[float, float, float]:
    """
    (q(1), ||H_q||, q(1)/||H_q||) for q(z) = sum_{k=m}^n z^k/(k+1). Entries of H_q
    vanish beyond index n, so trunc = n + 1 already gives the exact norm.
    """
    _check_band(m, n)
    trunc = n + 1 if trunc is None else trunc
    if trunc < n + 1:
        raise InvalidInputError(f"trunc={trunc} is below n + 1 = {n + 1}")
    symbol = np.zeros(n + 1)
    symbol[m:] = 1.0 / np.arange(m + 1, n + 2)
    q1 = q_at_one(m, n)
    norm = operator_norm(hankel_matrix(HankelSpec(symbol, trunc)))
    return q1, norm, q1 / norm


# --- Aggregation ---

def kmn_bounds(m: int, n: int, trunc: int | None = None, with_hankel: bool = True) -> KmnBounds:
    bounds = kmn_formula_bounds(m, n)
    b1, b2, b3 = kmn_basic_bounds(m, n)
    construction = construct_h(m, n)
    bounds.upper_basic1, bounds.upper_basic2, bounds.upper_basic3 = b1, b2, b3
    bounds.upper_constructive = construction.h1_norm
    if with_hankel:
        q1, norm, lower = kmn_lower_hankel(m, n, trunc)
        bounds.q1, bounds.hankel_norm, bounds.lower_hankel = q1, norm, lower
        bounds.lower_hankel_certified = q1 / HILBERT_NORM
        bounds.duality_gap = construction.h1_norm - lower
    if bounds.lower() > bounds.upper() + SANDWICH_TOL:
        raise InvariantViolation(f"K({m}, {n}) sandwich fails: lower {bounds.lower():.12g} > upper {bounds.upper():.12g}")
    return bounds


@lru_cache(maxsize=65536)
def kmn_upper(m: int, n: int) -> float:
    """Best certified upper bound on K(m, n); the quadrature-based Dirichlet bound is left out."""
    _check_band(m, n)
    _, b2, b3 = kmn_basic_bounds(m, n)
    return min(kmn_formula_bounds(m, n).upper_formula, b2, b3, construct_h(m, n).h1_norm)
