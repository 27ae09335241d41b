"""
Finite-dimensional contractions, commuting tuples and operator-coefficient polynomials.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from app.core.config import settings
from app.core.errors import DataError, InvalidInputError, TupleInvariantError
from app.services.polynomial import MultiPoly, SupNormEstimate, certificate_factor

logger = logging.getLogger(__name__)


# --- Norms ---

def as_matrix(M, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be two-dimensional, got shape {M.shape}")
    if max(M.shape, default=0) > settings.MAX_MATRIX_DIM:
        raise InvalidInputError(f"{name} of shape {M.shape} exceeds the dimension cap {settings.MAX_MATRIX_DIM}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def operator_norm(M) -> float:
    """Largest singular value."""
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(M)[0])


def power_iteration_norm(M, iterations: int = 200, seed: int = 0) -> float:
    """Power iteration on M*M; only a cross-check for `operator_norm`."""
    M = as_matrix(M)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    x /= np.linalg.norm(x)
    value = 0.0
    for _ in range(iterations):
        y = M.conj().T @ (M @ x)
        value = float(np.linalg.norm(y))
        if value == 0.0:
            return 0.0
        x = y / value
    return math.sqrt(value)


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    return operator_norm(A @ B - B @ A)


def matrix_power_table(T: np.ndarray, top: int) -> list[np.ndarray]:
    powers = [np.eye(T.shape[0], dtype=complex)]
    for _ in range(top):
        powers.append(powers[-1] @ T)
    return powers


# --- Tuples ---

@dataclass(frozen=True, eq=False)
class MatTuple:
    """
    d square matrices of equal size forming a commuting family of contractions,
    up to `contraction_tol` and `commute_tol`.
    """
    mats: tuple[np.ndarray, ...]
    contraction_tol: float = field(default_factory=lambda: settings.CONTRACTION_TOL)
    commute_tol: float = field(default_factory=lambda: settings.COMMUTE_TOL)
    validate: bool = True

    def __post_init__(self):
        mats = tuple(as_matrix(M, f"T_{j}") for j, M in enumerate(self.mats))
        if not mats:
            raise InvalidInputError("A tuple needs at least one matrix")
        size = mats[0].shape[0]
        for j, M in enumerate(mats):
            if M.shape != (size, size):
                raise InvalidInputError(f"T_{j} has shape {M.shape}, expected ({size}, {size})")
        object.__setattr__(self, "mats", mats)
        if self.validate:
            self.check()

    @property
    def d(self) -> int:
        return len(self.mats)

    @property
    def size(self) -> int:
        return self.mats[0].shape[0]

    def norms(self) -> list[float]:
        return [operator_norm(M) for M in self.mats]

    def commutator_norms(self) -> dict[tuple[int, int], float]:
        return {
            (i, j): commutator_norm(self.mats[i], self.mats[j])
            for i in range(self.d) for j in range(i + 1, self.d)
        }

    def max_commutator(self) -> float:
        return max(self.commutator_norms().values(), default=0.0)

    def check(self) -> None:
        for j, norm in enumerate(self.norms()):
            if norm > 1.0 + self.contraction_tol:
                raise TupleInvariantError(f"T_{j} is not a contraction: norm {norm:.15g}", pair=(j,))
        for (i, j), value in self.commutator_norms().items():
            if value > self.commute_tol:
                raise TupleInvariantError(f"T_{i} and T_{j} do not commute: {value:.3e}", pair=(i, j))


class TupleEvaluation(NamedTuple):
    value: np.ndarray
    uncertainty: float


def eval_poly_tuple(p: MultiPoly, T: MatTuple) -> TupleEvaluation:
    """
    p(T) = sum_alpha c_alpha T_1^{alpha_1} ... T_d^{alpha_d}, axis 0 powers leftmost.

    The uncertainty sum |c_alpha| * max commutator * degree^2 bounds the effect of
    the evaluation order when the tuple only commutes up to rounding.
    """
    if p.dim != T.d:
        raise InvalidInputError(f"Polynomial in {p.dim} variables evaluated on a {T.d}-tuple")
    tables = [matrix_power_table(M, p.degree_in(j)) for j, M in enumerate(T.mats)]
    out = np.zeros((T.size, T.size), dtype=complex)
    for alpha, c in p.coeffs.items():
        term = tables[0][alpha[0]]
        for j in range(1, T.d):
            if alpha[j]:
                term = term @ tables[j][alpha[j]]
        out += c * term
    uncertainty = 0.0
    if T.d > 1 and not p.is_zero():
        uncertainty = sum(abs(c) for c in p.coeffs.values()) * T.max_commutator() * p.degree ** 2
    return TupleEvaluation(out, uncertainty)


def random_contraction(size: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    G = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return norm * G / operator_norm(G)


def _random_tuple_mats(d: int, size: int, rng: np.random.Generator, scheme: str) -> list[np.ndarray]:
    if scheme == "diagonal":
        radii = np.sqrt(rng.uniform(0.0, 1.0, (d, size)))
        angles = rng.uniform(0.0, 2 * np.pi, (d, size))
        return [np.diag(radii[j] * np.exp(1j * angles[j])) for j in range(d)]
    if scheme == "single-generator":
        S = random_contraction(size, rng)
        mats = []
        for _ in range(d):
            degree = int(rng.integers(1, 4))
            coeffs = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
            Q = np.zeros((size, size), dtype=complex)
            for c in coeffs[::-1]:
                Q = Q @ S + c * np.eye(size)
            norm = operator_norm(Q)
            mats.append(Q / norm if norm > 0 else Q)
        return mats
    if scheme == "direct-sum":
        if size == 1:
            return _random_tuple_mats(d, 1, rng, "diagonal")
        left = size // 2
        first = _random_tuple_mats(d, left, rng, "diagonal")
        second = _random_tuple_mats(d, size - left, rng, "single-generator")
        return [scipy.linalg.block_diag(a, b) for a, b in zip(first, second)]
    raise InvalidInputError(f"Unknown tuple scheme {scheme!r}")


def random_commuting_tuple(d: int, size: int, seed: int, scheme: str = "single-generator") -> MatTuple:
    """Exactly commuting random contractions (no approximate triangularization)."""
    if d < 1 or size < 1:
        raise InvalidInputError(f"random_commuting_tuple needs d >= 1 and size >= 1, got d={d}, size={size}")
    rng = np.random.default_rng(seed)
    return MatTuple(tuple(_random_tuple_mats(d, size, rng, scheme)))


def power_bound_estimate(T, max_power: int = 64) -> float:
    """max_{0 <= k <= max_power} ||T^k||, a diagnostic for power-boundedness."""
    T = as_matrix(T)
    best, P = 1.0, np.eye(T.shape[0], dtype=complex)
    for _ in range(max_power):
        P = P @ T
        best = max(best, operator_norm(P))
    return best


# --- Operator-coefficient polynomials ---

@dataclass(frozen=True, eq=False)
class OpPoly:
    """p(z) = sum_{k=m}^{n} A_k z^k with square coefficients of equal size."""
    m: int
    n: int
    coeff_mats: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise InvalidInputError(f"OpPoly band needs 0 <= m <= n, got ({self.m}, {self.n})")
        mats = tuple(as_matrix(A, f"A_{self.m + i}") for i, A in enumerate(self.coeff_mats))
        if len(mats) != self.n - self.m + 1:
            raise InvalidInputError(f"Band [{self.m}, {self.n}] needs {self.n - self.m + 1} coefficients, got {len(mats)}")
        size = mats[0].shape[0]
        for i, A in enumerate(mats):
            if A.shape != (size, size):
                raise InvalidInputError(f"A_{self.m + i} has shape {A.shape}, expected ({size}, {size})")
        object.__setattr__(self, "coeff_mats", mats)

    @classmethod
    def from_scalars(cls, coeffs: Sequence[complex], size: int, m: int = 0) -> "OpPoly":
        eye = np.eye(size, dtype=complex)
        return cls(m, m + len(coeffs) - 1, tuple(c * eye for c in coeffs))

    @property
    def size(self) -> int:
        return self.coeff_mats[0].shape[0]

    @property
    def band(self) -> tuple[int, int]:
        return self.m, self.n

    def coeff(self, k: int) -> np.ndarray:
        if self.m <= k <= self.n:
            return self.coeff_mats[k - self.m]
        return np.zeros((self.size, self.size), dtype=complex)

    def at(self, z: complex) -> np.ndarray:
        return sum(A * z ** (self.m + i) for i, A in enumerate(self.coeff_mats))

    def restrict(self, weights: Mapping[int, float]) -> "OpPoly":
        """Multiply A_k by weights[k] (missing weights are 0)."""
        return OpPoly(self.m, self.n, tuple(A * weights.get(self.m + i, 0.0) for i, A in enumerate(self.coeff_mats)))


def eval_oppoly(P: OpPoly, T) -> np.ndarray:
    """sum_k A_k T^k by Horner's rule on the right, then times T^m."""
    T = as_matrix(T, "T")
    if T.shape != (P.size, P.size):
        raise InvalidInputError(f"T has shape {T.shape}, coefficients are {P.size}x{P.size}")
    acc = P.coeff_mats[-1].copy()
    for A in reversed(P.coeff_mats[:-1]):
        acc = acc @ T + A
    if P.m:
        acc = acc @ np.linalg.matrix_power(T, P.m)
    return acc


def circle_values(P: OpPoly, points: int) -> np.ndarray:
    """z^{-m} p(z) at the `points`-th roots of unity, stacked along axis 0."""
    stacked = np.zeros((points, P.size, P.size), dtype=complex)
    stacked[: len(P.coeff_mats)] = np.stack(P.coeff_mats)
    return np.fft.ifft(stacked, axis=0) * points


def oppoly_sup_norm(P: OpPoly, points: int | None = None) -> SupNormEstimate:
    """
    sup_{|z|=1} ||p(z)|| on a circle grid. Every matrix entry of z^{-m} p(z) is a
    trigonometric polynomial of degree n - m, so the scalar certificate applies.
    """
    width = P.n - P.m
    if points is None:
        points = max(settings.CIRCLE_GRID_POINTS, settings.GRID_OVERSAMPLING * width, 4 * (width + 1))
    if points < 4 * (width + 1):
        raise InvalidInputError(f"points={points} is below 4*(n-m+1)={4 * (width + 1)}")
    norms = np.linalg.norm(circle_values(P, points), ord=2, axis=(1, 2))
    grid_max = float(norms.max())
    return SupNormEstimate(
        grid_max=grid_max,
        certified_upper=grid_max * certificate_factor([width], points),
        grid_points_per_axis=points,
        method="exact" if width == 0 else "grid",
    )


def sqrt_band_witness(m: int, n: int, dim: int) -> tuple[OpPoly, np.ndarray, float]:
    """
    Matrix units A_k = E_{0,k} and the truncated shift: ||p(T)|| = n - m + 1 while
    ||p(z)|| = sqrt(n - m + 1) for every |z| = 1.
    """
    if not 0 <= m <= n:
        raise InvalidInputError(f"sqrt_band_witness needs 0 <= m <= n, got ({m}, {n})")
    if dim < n + 2:
        raise InvalidInputError(f"sqrt_band_witness needs dim >= n + 2 = {n + 2}, got {dim}")
    mats = []
    for k in range(m, n + 1):
        A = np.zeros((dim, dim), dtype=complex)
        A[0, k] = 1.0
        mats.append(A)
    P = OpPoly(m, n, tuple(mats))
    T = np.eye(dim, k=-1, dtype=complex)
    ratio = operator_norm(eval_oppoly(P, T)) / oppoly_sup_norm(P).grid_max
    logger.info(f"sqrt_band_witness({m}, {n}, dim={dim}): ratio={ratio:.12f}")
    return P, T, ratio


def sqrt_band_bound(P: OpPoly) -> float:
    """sqrt(n - m + 1) * certified sup ||p(z)||, valid for every contraction T."""
    return math.sqrt(P.n - P.m + 1) * oppoly_sup_norm(P).certified_upper


def row_norm_check(P: OpPoly) -> tuple[float, float]:
    """(||sum A_k A_k*||^{1/2}, grid sup ||p(z)||); the first never exceeds the second's certificate."""
    row = sum(A @ A.conj().T for A in P.coeff_mats)
    return math.sqrt(operator_norm(row)), oppoly_sup_norm(P).certified_upper


# --- Doubly commuting coefficients ---

def poisson_kernel(z: complex, T) -> np.ndarray:
    """P(z, T) = (I - z T*)^{-1} + (I - conj(z) T)^{-1} - I for ||T|| < 1, |z| <= 1."""
    T = as_matrix(T, "T")
    if abs(z) > 1.0:
        raise InvalidInputError(f"|z| = {abs(z)} exceeds 1")
    norm = operator_norm(T)
    if norm >= 1.0:
        raise InvalidInputError(f"Poisson kernel needs ||T|| < 1, got {norm:.15g}")
    eye = np.eye(T.shape[0], dtype=complex)
    A = scipy.linalg.solve(eye - z * T.conj().T, eye)
    P = A + A.conj().T - eye
    return 0.5 * (P + P.conj().T)


def poisson_min_eigenvalue(T, points: int = 32) -> float:
    zs = np.exp(2j * np.pi * np.arange(points) / points)
    return min(float(scipy.linalg.eigvalsh(poisson_kernel(z, T))[0]) for z in zs)


def poisson_representation(P: OpPoly, T, nodes: int = 256) -> np.ndarray:
    """
    Circle quadrature of p(z) P(z, T); converges to p(T) geometrically in
    ||T||^{nodes - n} when the coefficients doubly commute with T.
    """
    if nodes <= P.n:
        raise InvalidInputError(f"nodes={nodes} must exceed the degree {P.n}")
    zs = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    return sum(P.at(z) @ poisson_kernel(z, T) for z in zs) / nodes


def verify_doubly_commuting(P: OpPoly, T, tol: float | None = None) -> float:
    """
    ||p(T)|| / sup_{|z|=1} ||p(z)|| for T doubly commuting with every A_k;
    the denominator is the certified circle bound.
    """
    T = as_matrix(T, "T")
    tol = settings.COMMUTE_TOL if tol is None else tol
    norm = operator_norm(T)
    if norm > 1.0 + settings.CONTRACTION_TOL:
        raise TupleInvariantError(f"T is not a contraction: norm {norm:.15g}")
    for i, A in enumerate(P.coeff_mats):
        k = P.m + i
        for label, B in (("A", A), ("A*", A.conj().T)):
            value = commutator_norm(T, B)
            if value > tol:
                raise TupleInvariantError(f"T does not commute with {label}_{k}: {value:.3e}", pair=(k,))
    sup = oppoly_sup_norm(P).certified_upper
    if sup == 0.0:
        return 0.0
    return operator_norm(eval_oppoly(P, T)) / sup


def cs_integral_check(K_samples, L_samples, f_samples, weights) -> tuple[float, float]:
    """
    lhs = ||sum w_i K_i f_i L_i||,
    rhs = ||sum w_i K_i K_i*||^{1/2} ||sum w_i L_i* L_i||^{1/2} max ||f_i||.
    """
    weights = np.asarray(weights, dtype=float)
    if not (len(K_samples) == len(L_samples) == len(f_samples) == len(weights)):
        raise InvalidInputError("cs_integral_check needs equal sample counts")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise InvalidInputError("weights must be a probability vector")
    Ks = [as_matrix(K, "K") for K in K_samples]
    Ls = [as_matrix(L, "L") for L in L_samples]
    fs = [as_matrix(f, "f") for f in f_samples]
    try:
        total = sum(w * K @ f @ L for w, K, f, L in zip(weights, Ks, fs, Ls))
        kk = sum(w * K @ K.conj().T for w, K in zip(weights, Ks))
        ll = sum(w * L.conj().T @ L for w, L in zip(weights, Ls))
    except ValueError as e:
        raise InvalidInputError(f"Dimension mismatch in samples: {e}") from e
    lhs = operator_norm(total)
    rhs = math.sqrt(operator_norm(kk)) * math.sqrt(operator_norm(ll)) * max(operator_norm(f) for f in fs)
    return lhs, rhs


# --- Matrix JSON ---

def matrix_from_json(payload: Mapping) -> np.ndarray:
    try:
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros_like(re)), dtype=float)
        shape = (int(payload["rows"]), int(payload["cols"]))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"Malformed matrix JSON: {e}") from e
    if re.shape != shape or im.shape != shape:
        raise DataError(f"Matrix JSON declares shape {shape} but holds {re.shape}")
    return re + 1j * im


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"rows": M.shape[0], "cols": M.shape[1], "re": M.real.tolist(), "im": M.imag.tolist()}


def load_tuple(path: str | Path) -> MatTuple:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read tuple file {path}: {e}") from e
    if not isinstance(payload, list):
        raise DataError("Tuple JSON must be an array of matrices")
    return MatTuple(tuple(matrix_from_json(item) for item in payload))
