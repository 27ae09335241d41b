"""
Hankel matrices, the 2x2 block contraction criterion and Foguel-Hankel tuples.

A Foguel-Hankel operator has the block form

    T_j = [[r_j V, 0], [H_j, r_j W]]

with V the shift, W its adjoint and H_j a Hankel matrix, so that H_j V = W H_j.
On finite sections V is the truncated shift S and W = S^T; once the truncation
exceeds the symbol degree the intertwining, and hence commutation, is exact.
"""
import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field

from app.constants import CRITERION_TOL
from app.core.errors import DataError, InvalidInputError
from app.services.operators import MatTuple, eval_poly_tuple, operator_norm
from app.services.polynomial import MultiPoly, sup_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HankelSpec:
    symbol_coeffs: np.ndarray
    trunc: int

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.symbol_coeffs, dtype=complex))
        nonzero = np.flatnonzero(coeffs)
        coeffs = coeffs[: nonzero[-1] + 1] if nonzero.size else coeffs[:0]
        if self.trunc < max(len(coeffs), 1):
            raise InvalidInputError(f"trunc={self.trunc} is shorter than the symbol ({len(coeffs)} coefficients)")
        object.__setattr__(self, "symbol_coeffs", coeffs)

    @property
    def degree(self) -> int:
        """Degree of the symbol; -1 for the zero symbol."""
        return len(self.symbol_coeffs) - 1


def hankel_matrix(spec: HankelSpec) -> np.ndarray:
    """trunc x trunc matrix with M[i, j] = conj(c[i + j])."""
    N = spec.trunc
    padded = np.zeros(2 * N - 1, dtype=complex)
    padded[: len(spec.symbol_coeffs)] = np.conj(spec.symbol_coeffs)
    return scipy.linalg.hankel(padded[:N], padded[N - 1:])


def hilbert_matrix_norm(trunc: int) -> float:
    """Norm of the trunc x trunc Hilbert matrix 1/(i+j+1); increases to pi."""
    return operator_norm(scipy.linalg.hilbert(trunc))


def shift_matrix(size: int) -> np.ndarray:
    """Truncated unilateral shift, S e_k = e_{k+1}."""
    return np.eye(size, k=-1, dtype=complex)


def cyclic_shift(size: int) -> np.ndarray:
    return np.roll(np.eye(size, dtype=complex), 1, axis=0)


def intertwining_defect(spec: HankelSpec, window: int | None = None) -> float:
    """|| H S - S^T H || restricted to the leading `window` coordinates."""
    H = hankel_matrix(spec)
    S = shift_matrix(spec.trunc)
    defect = H @ S - S.T @ H
    if window is not None:
        defect = defect[:window, :window]
    return operator_norm(defect)


# --- 2x2 criterion ---

def two_by_two_criterion(r: float, H) -> bool:
    """[[rV, 0], [H, rW]] is a contraction iff r^2 + ||H|| <= 1."""
    if not 0.0 <= r <= 1.0:
        raise InvalidInputError(f"r must lie in [0, 1], got {r}")
    return r * r + operator_norm(H) <= 1.0 + CRITERION_TOL


def two_by_two_block(r: float, H) -> np.ndarray:
    """Block with V = W = the cyclic shift, which is both an isometry and a co-isometry."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidInputError(f"H must be square, got shape {H.shape}")
    C = cyclic_shift(H.shape[0])
    return np.block([[r * C, np.zeros_like(H)], [H, r * C]])


def svd_contraction_test(r: float, H, tol: float = 1e-8) -> bool:
    return operator_norm(two_by_two_block(r, H)) <= 1.0 + tol


# --- Foguel-Hankel tuples ---

@dataclass(frozen=True, eq=False)
class FoguelTuple:
    symbols: tuple[HankelSpec, ...]
    radii: tuple[float, ...]
    trunc: int
    hankels: tuple[np.ndarray, ...]
    tuple_: MatTuple
    exactness_degree: int

    @property
    def d(self) -> int:
        return len(self.symbols)

    def window(self) -> np.ndarray:
        w = self.exactness_degree
        return np.concatenate([np.arange(w), self.trunc + np.arange(w)])

    def compress(self, M: np.ndarray) -> np.ndarray:
        idx = self.window()
        return M[np.ix_(idx, idx)]

    def commutator_norms(self, windowed: bool = True) -> dict[tuple[int, int], float]:
        mats = self.tuple_.mats
        out = {}
        for i in range(self.d):
            for j in range(i + 1, self.d):
                C = mats[i] @ mats[j] - mats[j] @ mats[i]
                out[(i, j)] = operator_norm(self.compress(C) if windowed else C)
        return out


def foguel_trunc(poly_degree: int, symbol_degree: int) -> int:
    """Truncation keeping every product of poly_degree shifts and one Hankel factor exact."""
    return 2 * poly_degree + max(symbol_degree, 0) + 2


def foguel_tuple(symbols: Sequence[Sequence[complex]], radii: Sequence[float], trunc: int) -> FoguelTuple:
    if len(symbols) != len(radii) or not symbols:
        raise InvalidInputError(f"Need one radius per symbol, got {len(symbols)} symbols and {len(radii)} radii")
    specs = tuple(HankelSpec(np.asarray(c, dtype=complex), trunc) for c in symbols)
    hankels = tuple(hankel_matrix(s) for s in specs)
    for j, (r, H) in enumerate(zip(radii, hankels)):
        if not two_by_two_criterion(float(r), H):
            raise InvalidInputError(
                f"T_{j} is not a contraction: r^2 + ||H|| = {r * r + operator_norm(H):.12g} > 1"
            )
    max_degree = max(s.degree for s in specs)
    exactness = trunc - max_degree - 1
    if exactness < 1:
        raise InvalidInputError(f"trunc={trunc} leaves no exact window for symbols of degree {max_degree}")

    S = shift_matrix(trunc)
    zero = np.zeros((trunc, trunc), dtype=complex)
    mats = tuple(np.block([[r * S, zero], [H, r * S.T]]) for r, H in zip(radii, hankels))
    tuple_ = MatTuple(mats, contraction_tol=1e-8, commute_tol=1e-12)
    logger.debug(f"Foguel tuple: d={len(mats)}, trunc={trunc}, exactness_degree={exactness}")
    return FoguelTuple(specs, tuple(float(r) for r in radii), trunc, hankels, tuple_, exactness)


def foguel_from_json(payload: Mapping, trunc: int | None = None) -> FoguelTuple:
    try:
        real = [list(map(float, c)) for c in payload["symbols"]]
        imag = payload.get("symbols_im") or [[0.0] * len(c) for c in real]
        symbols = [np.asarray(re) + 1j * np.asarray(list(map(float, im))) for re, im in zip(real, imag)]
        radii = [float(r) for r in payload["radii"]]
        trunc = int(trunc or payload["trunc"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"Malformed Foguel tuple JSON: {e}") from e
    return foguel_tuple(symbols, radii, trunc)


# --- Block functional calculus ---

def _shift_tuple(F: FoguelTuple, transpose: bool = False) -> MatTuple:
    S = shift_matrix(F.trunc)
    if transpose:
        S = S.T
    return MatTuple(tuple(r * S for r in F.radii), validate=False)


def derivative_corner(p: MultiPoly, F: FoguelTuple) -> np.ndarray:
    """sum_j H_j (d p / d z_j)(r V)."""
    V = _shift_tuple(F)
    corner = np.zeros((F.trunc, F.trunc), dtype=complex)
    for j, H in enumerate(F.hankels):
        corner += H @ eval_poly_tuple(p.partial(j), V).value
    return corner


def block_formula_eval(p: MultiPoly, F: FoguelTuple) -> np.ndarray:
    """p(T) = [[p(rV), 0], [sum_j H_j d_j p(rV), p(rW)]]."""
    if p.dim != F.d:
        raise InvalidInputError(f"Polynomial in {p.dim} variables on a {F.d}-tuple")
    if p.degree > F.exactness_degree:
        raise InvalidInputError(f"degree {p.degree} exceeds the exactness degree {F.exactness_degree}")
    upper = eval_poly_tuple(p, _shift_tuple(F)).value
    lower = eval_poly_tuple(p, _shift_tuple(F, transpose=True)).value
    zero = np.zeros_like(upper)
    return np.block([[upper, zero], [derivative_corner(p, F), lower]])


class FoguelReport(BaseModel):
    ratio: float = Field(description="||p(T)|| on the exactness window over certified ||p||.")
    ratio_full: float = Field(description="Same ratio on the full finite section (diagnostic).")
    bound: float = Field(description="Bound the ratio must respect.")
    sup_norm: float = Field(description="Certified sup norm of p on the torus.")
    corner_norm: float = Field(description="||sum_j H_j d_j p(rV)||.")
    corner_bound: float = Field(description="d * certified ||p||.")
    schwarz_pick: list[tuple[float, float]] = Field(
        description="Per axis: (||d_j p(rV)||, ||p|| / (1 - r_j^2)); bound is inf when r_j = 1."
    )
    window_commutator: float = Field(description="Largest commutator norm on the exactness window.")
    full_commutator: float = Field(description="Largest commutator norm on the full section.")


def verify_foguel_vn(p: MultiPoly, F: FoguelTuple, equal_shifts: bool = True) -> FoguelReport:
    """
    Compare ||p(T)|| with ||p||_inf for a Foguel-Hankel tuple. With V_j = W_j^*
    all equal the bound is 1; for general isometries it is d + 1.
    """
    value = block_formula_eval(p, F)
    estimate = sup_norm(p)
    norm = estimate.certified_upper
    if norm == 0.0:
        raise InvalidInputError("verify_foguel_vn needs a non-zero polynomial")
    V = _shift_tuple(F)
    pick = []
    for j, r in enumerate(F.radii):
        derivative = operator_norm(eval_poly_tuple(p.partial(j), V).value)
        pick.append((derivative, norm / (1.0 - r * r) if r < 1.0 else math.inf))
    report = FoguelReport(
        ratio=operator_norm(F.compress(value)) / norm,
        ratio_full=operator_norm(value) / norm,
        bound=1.0 if equal_shifts else F.d + 1.0,
        sup_norm=norm,
        corner_norm=operator_norm(derivative_corner(p, F)),
        corner_bound=F.d * norm,
        schwarz_pick=pick,
        window_commutator=max(F.commutator_norms(windowed=True).values(), default=0.0),
        full_commutator=max(F.commutator_norms(windowed=False).values(), default=0.0),
    )
    logger.debug(f"verify_foguel_vn: ratio={report.ratio:.9f}, corner={report.corner_norm:.6g}")
    return report


def derivative_corner_norm(p: MultiPoly, F: FoguelTuple) -> float:
    return operator_norm(derivative_corner(p, F))
