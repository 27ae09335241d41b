"""
Sparse multivariate polynomials on the polydisc.

A `MultiPoly` maps multi-indices (tuples of non-negative ints, one entry per
variable) to complex coefficients. Axes are numbered from 0. Zero coefficients
are never stored, so the zero polynomial has an empty map.

Supremum norms over the torus are estimated on a uniform grid and certified
with a Bernstein-type bound; see `sup_norm`.
"""
import json
import logging
import math
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, Field

from app.core.config import settings
from app.core.errors import DataError, InvalidInputError

logger = logging.getLogger(__name__)

MultiIndex = tuple[int, ...]

CHUNK_VALUES = 2 ** 22


class MultiPoly:
    """Immutable sparse polynomial in `dim` complex variables."""

    __slots__ = ("_dim", "_coeffs")

    def __init__(self, dim: int, coeffs: Mapping[Sequence[int], complex] | None = None):
        if dim < 1:
            raise InvalidInputError(f"Polynomial dimension must be at least 1, got {dim}")
        store: dict[MultiIndex, complex] = {}
        for alpha, c in (coeffs or {}).items():
            key = tuple(int(a) for a in alpha)
            if len(key) != dim:
                raise InvalidInputError(f"Multi-index {key} does not have length {dim}")
            if any(a < 0 for a in key):
                raise InvalidInputError(f"Multi-index {key} has a negative entry")
            value = complex(c)
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise InvalidInputError(f"Coefficient of {key} is not finite")
            value = store.get(key, 0j) + value
            if value == 0:
                store.pop(key, None)
            else:
                store[key] = value
        self._dim = dim
        self._coeffs = store

    # --- Constructors ---

    @classmethod
    def zero(cls, dim: int) -> "MultiPoly":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, c: complex) -> "MultiPoly":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def monomial(cls, alpha: Sequence[int], c: complex = 1.0) -> "MultiPoly":
        return cls(len(alpha), {tuple(alpha): c})

    @classmethod
    def variable(cls, dim: int, axis: int) -> "MultiPoly":
        alpha = [0] * dim
        alpha[axis] = 1
        return cls(dim, {tuple(alpha): 1.0})

    @classmethod
    def from_dense(cls, array: np.ndarray) -> "MultiPoly":
        """Build from a dense coefficient array indexed by exponents."""
        array = np.asarray(array, dtype=complex)
        nz = np.argwhere(array != 0)
        return cls(array.ndim, {tuple(int(i) for i in idx): array[tuple(idx)] for idx in nz})

    # --- Accessors ---

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def coeffs(self) -> Mapping[MultiIndex, complex]:
        return MappingProxyType(self._coeffs)

    def coeff(self, alpha: Sequence[int]) -> complex:
        return self._coeffs.get(tuple(alpha), 0j)

    def is_zero(self) -> bool:
        return not self._coeffs

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self):
        return iter(self._coeffs.items())

    @property
    def degree(self) -> int:
        """Total degree; 0 for constants and for the zero polynomial."""
        return max((sum(a) for a in self._coeffs), default=0)

    def degree_in(self, axis: int) -> int:
        self._check_axis(axis)
        return max((a[axis] for a in self._coeffs), default=0)

    def axis_degrees(self) -> tuple[int, ...]:
        return tuple(self.degree_in(j) for j in range(self._dim))

    def is_homogeneous(self) -> bool:
        return len({sum(a) for a in self._coeffs}) <= 1

    def to_dense(self) -> np.ndarray:
        out = np.zeros(tuple(n + 1 for n in self.axis_degrees()), dtype=complex)
        for alpha, c in self._coeffs.items():
            out[alpha] = c
        return out

    def _check_axis(self, axis: int) -> None:
        if not 0 <= axis < self._dim:
            raise InvalidInputError(f"Axis {axis} out of range for a polynomial in {self._dim} variables")

    # --- Arithmetic ---

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.dim != self._dim:
                raise InvalidInputError(f"Dimension mismatch: {self._dim} vs {other.dim}")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return MultiPoly.constant(self._dim, other)
        return NotImplemented

    def __add__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        merged = dict(self._coeffs)
        for alpha, c in other._coeffs.items():
            merged[alpha] = merged.get(alpha, 0j) + c
        return MultiPoly(self._dim, merged)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return self.scale(-1.0)

    def __sub__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[MultiIndex, complex] = {}
        for a, ca in self._coeffs.items():
            for b, cb in other._coeffs.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0j) + ca * cb
        return MultiPoly(self._dim, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self._dim == other._dim and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self._dim, frozenset(self._coeffs.items())))

    def __repr__(self) -> str:
        terms = " + ".join(f"({c:.6g})*z^{list(a)}" for a, c in sorted(self._coeffs.items()))
        return f"MultiPoly(dim={self._dim}, {terms or '0'})"

    def scale(self, c: complex) -> "MultiPoly":
        return MultiPoly(self._dim, {a: c * v for a, v in self._coeffs.items()})

    def map_coeffs(self, weight) -> "MultiPoly":
        """Multiply each coefficient by `weight(alpha)`; zero results are pruned."""
        return MultiPoly(self._dim, {a: v * weight(a) for a, v in self._coeffs.items()})

    def dilate(self, r: float) -> "MultiPoly":
        """The polynomial z -> p(r z)."""
        return self.map_coeffs(lambda a: r ** sum(a))

    def partial(self, axis: int) -> "MultiPoly":
        self._check_axis(axis)
        out = {}
        for alpha, c in self._coeffs.items():
            if alpha[axis] == 0:
                continue
            lowered = list(alpha)
            lowered[axis] -= 1
            out[tuple(lowered)] = c * alpha[axis]
        return MultiPoly(self._dim, out)

    def homogeneous_part(self, n: int) -> "MultiPoly":
        return MultiPoly(self._dim, {a: c for a, c in self._coeffs.items() if sum(a) == n})

    def evaluate(self, z: Sequence[complex]) -> complex:
        z = np.asarray(z, dtype=complex)
        if z.shape != (self._dim,):
            raise InvalidInputError(f"Expected a point with {self._dim} coordinates")
        return complex(sum(c * np.prod(z ** np.asarray(a)) for a, c in self._coeffs.items()))

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an array of points of shape (..., dim)."""
        points = np.asarray(points, dtype=complex)
        if points.shape[-1] != self._dim:
            raise InvalidInputError(f"Points must have trailing dimension {self._dim}")
        out = np.zeros(points.shape[:-1], dtype=complex)
        for alpha, c in self._coeffs.items():
            out += c * np.prod(points ** np.asarray(alpha), axis=-1)
        return out


# --- Coefficient-level operations ---

def radial_derivative(p: MultiPoly) -> MultiPoly:
    """Rp = sum_j z_j dp/dz_j, i.e. each coefficient weighted by |alpha|."""
    return p.map_coeffs(lambda a: sum(a))


def band_limits(p: MultiPoly) -> tuple[int, int]:
    if p.is_zero():
        raise InvalidInputError("Band limits of the zero polynomial are undefined")
    degrees = [sum(a) for a in p.coeffs]
    return min(degrees), max(degrees)


def band_limits_wrt(p: MultiPoly, axis: int) -> tuple[int, int]:
    if p.is_zero():
        raise InvalidInputError("Band limits of the zero polynomial are undefined")
    p._check_axis(axis)
    degrees = [a[axis] for a in p.coeffs]
    return min(degrees), max(degrees)


def coeff_l1(p: MultiPoly) -> float:
    return float(sum(abs(c) for c in p.coeffs.values()))


def homogeneous_dim(d: int, n: int) -> int:
    """Dimension C(d+n, d) appearing in the Cauchy-Schwarz bound."""
    if d < 0 or n < 0:
        raise InvalidInputError(f"homogeneous_dim needs d, n >= 0, got ({d}, {n})")
    return math.comb(d + n, d)


def random_poly(
    dim: int,
    degree: int,
    rng: np.random.Generator,
    homogeneous: bool = False,
    density: float = 1.0,
) -> MultiPoly:
    """Gaussian complex coefficients on all monomials of total degree <= degree (== degree if homogeneous)."""
    terms = {}
    for alpha in np.ndindex(*(degree + 1,) * dim):
        total = sum(alpha)
        if total > degree or (homogeneous and total != degree):
            continue
        if density < 1.0 and rng.random() > density:
            continue
        terms[tuple(int(a) for a in alpha)] = complex(rng.standard_normal(), rng.standard_normal())
    return MultiPoly(dim, terms)


# --- Torus supremum norm ---

class SupNormEstimate(BaseModel):
    """Grid estimate of sup |p| over the torus together with a rigorous upper bound."""
    grid_max: float = Field(description="Maximum of |p| over the uniform torus grid.")
    certified_upper: float = Field(description="Rigorous upper bound on sup |p|; inf when not certifiable.")
    grid_points_per_axis: int = Field(description="Points per axis of the evaluated grid.")
    method: str = Field(default="grid", description="'exact' for monomials and constants, else 'grid'.")

    @property
    def certified(self) -> bool:
        return math.isfinite(self.certified_upper)


def default_grid_points(p: MultiPoly) -> int:
    return max(
        settings.GRID_MIN_POINTS,
        settings.GRID_OVERSAMPLING * max(p.axis_degrees(), default=0),
        4 * (p.degree + 1),
    )


def certificate_factor(axis_degrees: Iterable[int], points_per_axis: int) -> float:
    """
    Factor c with sup|p| <= c * grid_max.

    Along an axis of degree n the function |p|^2 is a real trigonometric
    polynomial of degree n whose maximum is attained with zero derivative, so
    a grid point within pi/G of it keeps at least (1 - (pi n / G)^2 / 2) of
    the value. The per-axis factors multiply.
    """
    factor = 1.0
    for n in axis_degrees:
        if n == 0:
            continue
        loss = 0.5 * (math.pi * n / points_per_axis) ** 2
        if loss >= 1.0:
            return math.inf
        factor /= math.sqrt(1.0 - loss)
    return factor


def _reduced_form(p: MultiPoly) -> MultiPoly:
    """
    For homogeneous p in at least two variables, |p| on the torus equals |q| on
    a torus of one dimension less, where q sets the variable of largest degree to 1.
    """
    if p.dim < 2 or not p.is_homogeneous():
        return p
    degrees = p.axis_degrees()
    drop = int(np.argmax(degrees))
    reduced = {}
    for alpha, c in p.coeffs.items():
        key = alpha[:drop] + alpha[drop + 1:]
        reduced[key] = reduced.get(key, 0j) + c
    return MultiPoly(p.dim - 1, reduced)


def torus_grid_chunks(p: MultiPoly, points_per_axis: int) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
    """
    |p| on the grid of G-th roots of unity, yielded in slices.

    Axes on which p does not depend are dropped. Leading axes are summed
    directly, one grid index at a time, until the remaining trailing grid has
    at most CHUNK_VALUES points; that part is one FFT. Each item is the tuple
    of leading grid indices and |p| on the trailing grid.
    """
    G = points_per_axis
    dense = p.to_dense()
    dense = dense.reshape([s for s in dense.shape if s > 1])
    ndim = dense.ndim
    lead = 0
    while lead < ndim and G ** (ndim - lead) > CHUNK_VALUES:
        lead += 1
    phases = [
        np.exp(2j * np.pi * np.outer(np.arange(G), np.arange(dense.shape[k])) / G) for k in range(lead)
    ]
    trailing = ndim - lead
    for idx in np.ndindex(*(G,) * lead):
        block = dense
        for k, j in enumerate(idx):
            block = np.tensordot(phases[k][j], block, axes=(0, 0))
        if trailing == 0:
            yield idx, np.abs(np.asarray(block))
            continue
        padded = np.zeros((G,) * trailing, dtype=complex)
        padded[tuple(slice(0, s) for s in block.shape)] = block
        values = np.fft.ifftn(padded) * float(G) ** trailing
        yield idx, np.abs(values)


def _refinement_strides(degrees: Sequence[int], points_per_axis: int) -> list[int]:
    strides = [1]
    stride = 2
    while points_per_axis % stride == 0 and points_per_axis // stride >= 4:
        if not math.isfinite(certificate_factor(degrees, points_per_axis // stride)):
            break
        strides.append(stride)
        stride *= 2
    return strides


def sup_norm(p: MultiPoly, points_per_axis: int | None = None, refine: bool = True) -> SupNormEstimate:
    """
    Estimate sup |p| over the torus.

    grid_max is the maximum over the uniform grid with `points_per_axis` points
    per axis; certified_upper applies `certificate_factor`. With `refine`, the
    certificate is the smallest one obtained on the dyadic sub-grids, so doubling
    the grid never loosens it. Monomials and constants are certified exactly.
    The grid is evaluated in slices, so memory stays bounded for any size.
    """
    if points_per_axis is None:
        points_per_axis = default_grid_points(p)
    if points_per_axis < 4 * (p.degree + 1):
        raise InvalidInputError(
            f"points_per_axis={points_per_axis} is below 4*(degree+1)={4 * (p.degree + 1)}"
        )
    if len(p) <= 1:
        value = abs(next(iter(p.coeffs.values()), 0j))
        return SupNormEstimate(
            grid_max=value, certified_upper=value, grid_points_per_axis=points_per_axis, method="exact"
        )

    q = _reduced_form(p)
    degrees = q.axis_degrees()
    strides = _refinement_strides(degrees, points_per_axis) if refine else [1]
    maxima = dict.fromkeys(strides, 0.0)
    for idx, values in torus_grid_chunks(q, points_per_axis):
        for stride in strides:
            if any(j % stride for j in idx):
                continue
            sub = values[(slice(None, None, stride),) * values.ndim]
            maxima[stride] = max(maxima[stride], float(sub.max()))

    grid_max = maxima[1]
    certified = min(
        maxima[stride] * certificate_factor(degrees, points_per_axis // stride) for stride in strides
    )

    logger.debug(f"sup_norm: G={points_per_axis}, grid_max={grid_max:.12g}, certified={certified:.12g}")
    return SupNormEstimate(grid_max=grid_max, certified_upper=certified, grid_points_per_axis=points_per_axis)


# --- Text and JSON formats ---

def parse_poly_text(text: str, dim: int | None = None) -> MultiPoly:
    """
    One term per line: `a_1 ... a_d  re im`. `#` starts a comment; blank
    lines are ignored; repeated multi-indices add up.
    """
    terms: dict[MultiIndex, complex] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if dim is None:
            dim = len(tokens) - 2
        if dim < 1 or len(tokens) != dim + 2:
            raise DataError(f"Line {lineno}: expected {dim} exponents and 're im', got {raw!r}")
        try:
            alpha = tuple(int(t) for t in tokens[:dim])
            c = complex(float(tokens[dim]), float(tokens[dim + 1]))
        except ValueError as e:
            raise DataError(f"Line {lineno}: {e}") from e
        if any(a < 0 for a in alpha):
            raise DataError(f"Line {lineno}: negative exponent in {alpha}")
        terms[alpha] = terms.get(alpha, 0j) + c
    if dim is None:
        raise DataError("Polynomial text contains no terms and no dimension")
    return MultiPoly(dim, terms)


def poly_from_json(payload: Mapping) -> MultiPoly:
    try:
        dim = int(payload["dim"])
        terms = {}
        for term in payload.get("terms", []):
            alpha = tuple(int(a) for a in term["alpha"])
            terms[alpha] = terms.get(alpha, 0j) + complex(float(term.get("re", 0.0)), float(term.get("im", 0.0)))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"Malformed polynomial JSON: {e}") from e
    try:
        return MultiPoly(dim, terms)
    except InvalidInputError as e:
        raise DataError(str(e)) from e


def poly_to_json(p: MultiPoly) -> dict:
    return {
        "dim": p.dim,
        "terms": [
            {"alpha": list(alpha), "re": c.real, "im": c.imag}
            for alpha, c in sorted(p.coeffs.items())
        ],
    }


def load_poly(path: str | Path) -> MultiPoly:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot read polynomial file {path}: {e}") from e
    if path.suffix.lower() == ".json":
        try:
            return poly_from_json(json.loads(text))
        except json.JSONDecodeError as e:
            raise DataError(f"Invalid JSON in {path}: {e}") from e
    return parse_poly_text(text)
