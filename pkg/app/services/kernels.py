"""
Trigonometric kernel profiles used as Fourier multipliers.

A `KernelProfile` is a finitely supported sequence of real (or complex)
coefficients indexed by integers. Profiles are only ever applied to
polynomials coefficientwise (`convolve`); their L1 norms on the circle are
computed by `l1_norm`.
"""
import logging
from functools import lru_cache
from typing import Mapping

import numpy as np

from app.core.config import settings
from app.core.errors import DataError, InvalidInputError
from app.services.polynomial import MultiPoly

logger = logging.getLogger(__name__)


class KernelProfile:
    __slots__ = ("_coeffs", "label")

    def __init__(self, coeffs: Mapping[int, complex], label: str = ""):
        self._coeffs = {int(j): c for j, c in coeffs.items() if c != 0}
        self.label = label

    def __getitem__(self, j: int) -> complex:
        return self._coeffs.get(j, 0.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KernelProfile):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __sub__(self, other: "KernelProfile") -> "KernelProfile":
        out = dict(self._coeffs)
        for j, c in other._coeffs.items():
            out[j] = out.get(j, 0.0) - c
        return KernelProfile(out, f"{self.label}-{other.label}")

    def __repr__(self) -> str:
        return f"KernelProfile({self.label!r}, support={self.support()})"

    @property
    def coeffs(self) -> dict[int, complex]:
        return dict(self._coeffs)

    def support(self) -> tuple[int, int] | None:
        if not self._coeffs:
            return None
        return min(self._coeffs), max(self._coeffs)

    def max_abs_index(self) -> int:
        return max((abs(j) for j in self._coeffs), default=0)

    def shifted(self, s: int) -> "KernelProfile":
        """Multiply the kernel by e^{ist}; leaves |K| and hence the L1 norm unchanged."""
        return KernelProfile({j + s: c for j, c in self._coeffs.items()}, f"{self.label}>>{s}")

    def to_json(self) -> dict:
        coeffs = [[j, float(np.real(c))] for j, c in sorted(self._coeffs.items())]
        return {"label": self.label, "coeffs": coeffs}

    @classmethod
    def from_json(cls, payload: Mapping) -> "KernelProfile":
        try:
            return cls({int(j): float(c) for j, c in payload["coeffs"]}, str(payload.get("label", "")))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Malformed kernel profile JSON: {e}") from e


# --- Kernel families ---

def fejer(n: int) -> KernelProfile:
    if n < 1:
        raise InvalidInputError(f"Fejer kernel needs n >= 1, got {n}")
    return KernelProfile({j: (n - abs(j)) / n for j in range(-n + 1, n)}, f"fejer({n})")


def vallee_poussin(m: int, n: int) -> KernelProfile:
    """Symmetric trapezoid G_{m,n}: 1 on [-m, m], linear down to 0 at +-n."""
    if not 0 <= m < n:
        raise InvalidInputError(f"de la Vallee-Poussin kernel needs 0 <= m < n, got ({m}, {n})")
    coeffs = {}
    for j in range(-n + 1, n):
        coeffs[j] = 1.0 if abs(j) <= m else (n - abs(j)) / (n - m)
    return KernelProfile(coeffs, f"vp({m},{n})")


def trapezoid(k: int, l: int, m: int, n: int) -> KernelProfile:
    """
    V_{k,l,m,n} = G_{m,n} - G_{k,l}: zero on [-k, k], rising on (k, l), one on
    [l, m], falling on (m, n); mirrored on negative indices.
    """
    if not 0 <= k < l <= m < n:
        raise InvalidInputError(f"Trapezoid needs 0 <= k < l <= m < n, got ({k}, {l}, {m}, {n})")
    profile = vallee_poussin(m, n) - vallee_poussin(k, l)
    profile.label = f"trapezoid({k},{l},{m},{n})"
    return profile


def trapezoid_l1_bound(k: int, l: int, m: int, n: int) -> float:
    return (n + m) / (n - m) + (l + k) / (l - k)


def splitting_kernel(d: int, m: int, n: int) -> KernelProfile:
    """
    Cut-off used to split an (m, n)-band-limited polynomial in d variables.

    With k = floor(m / 2d) the kernel is the trapezoid (k, 2k, n, 2n). For k = 0
    the left ramp disappears and the kernel is G_{n,2n}; for n = 0 it is the identity.
    """
    if d < 1 or not 0 <= m <= n:
        raise InvalidInputError(f"Splitting kernel needs d >= 1 and 0 <= m <= n, got d={d}, m={m}, n={n}")
    if n == 0:
        return KernelProfile({0: 1.0}, "identity")
    k = m // (2 * d)
    if k == 0:
        profile = vallee_poussin(n, 2 * n)
    else:
        profile = trapezoid(k, 2 * k, n, 2 * n)
    profile.label = f"split(d={d},m={m},n={n})"
    return profile


def dyadic_w(n: int) -> KernelProfile:
    """
    W_0 = 1 + z; for n >= 1 the triangle supported in (2^{n-1}, 2^{n+1}) with
    value 1 at 2^n. Ramps have power-of-two widths, so sum_n W_n(k) = 1 exactly.
    """
    if n < 0:
        raise InvalidInputError(f"Dyadic kernel index must be >= 0, got {n}")
    if n == 0:
        return KernelProfile({0: 1.0, 1: 1.0}, "W_0")
    half, peak, top = 2 ** (n - 1), 2 ** n, 2 ** (n + 1)
    coeffs = {}
    for j in range(half + 1, peak + 1):
        coeffs[j] = (j - half) / half
    for j in range(peak + 1, top):
        coeffs[j] = (top - j) / peak
    return KernelProfile(coeffs, f"W_{n}")


def dyadic_levels(degree: int) -> range:
    """Levels n whose W_n can be non-zero on degrees 0..degree."""
    top = 1
    while 2 ** (top - 1) < degree:
        top += 1
    return range(0, top + 1)


def band_indicator(m: int, n: int) -> KernelProfile:
    """All-ones profile on [m, n]; for m = 0 this is the Dirichlet kernel."""
    if not 0 <= m <= n:
        raise InvalidInputError(f"Band indicator needs 0 <= m <= n, got ({m}, {n})")
    return KernelProfile({j: 1.0 for j in range(m, n + 1)}, f"band({m},{n})")


def analytic_profile(coeffs) -> KernelProfile:
    """Profile of the analytic polynomial sum_j coeffs[j] z^j."""
    return KernelProfile({j: c for j, c in enumerate(coeffs)}, "analytic")


# --- Norms ---

def default_quad_points(K: KernelProfile) -> int:
    needed = 8 * (K.max_abs_index() + 1)
    points = settings.L1_QUAD_POINTS
    while points < needed:
        points *= 2
    return points


def l1_norm(K: KernelProfile, quad_points: int | None = None) -> float:
    """Trapezoidal-rule value of (2 pi)^{-1} int |sum_j K(j) e^{ijt}| dt."""
    if quad_points is None:
        quad_points = default_quad_points(K)
    if quad_points < 8 * (K.max_abs_index() + 1):
        raise InvalidInputError(
            f"quad_points={quad_points} is below 8*(max|j|+1)={8 * (K.max_abs_index() + 1)}"
        )
    samples = np.zeros(quad_points, dtype=complex)
    for j, c in K.coeffs.items():
        samples[j % quad_points] += c
    values = np.fft.ifft(samples) * quad_points
    return float(np.mean(np.abs(values)))


@lru_cache(maxsize=4096)
def splitting_kernel_l1(d: int, m: int, n: int) -> float:
    return l1_norm(splitting_kernel(d, m, n))


# --- Multipliers ---

def convolve(p: MultiPoly, K: KernelProfile, mode: str | int = "total") -> MultiPoly:
    """
    Apply K as a Fourier multiplier: each coefficient of p is multiplied by
    K(|alpha|) in "total" mode or by K(alpha_j) when `mode` is an axis j.
    """
    if mode == "total":
        return p.map_coeffs(lambda a: K[sum(a)])
    if isinstance(mode, (int, np.integer)) and not isinstance(mode, bool):
        if not 0 <= mode < p.dim:
            raise InvalidInputError(f"Axis {mode} out of range for a polynomial in {p.dim} variables")
        return p.map_coeffs(lambda a: K[a[mode]])
    raise InvalidInputError(f"Unknown convolution mode {mode!r}")
