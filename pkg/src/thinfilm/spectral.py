"""Fourier representation of real 2*pi-periodic functions.

A field is stored as the dense complex coefficient vector u_hat(k) for
k = -M..M in ascending order, subject to the reality constraint
u_hat(-k) = conj(u_hat(k)).  All norm calculus (the summed |k|^s |u_hat(k)|
norms), derivatives, truncated products and grid transforms live here.

Functions are pure; fields and grids are immutable after construction.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientResolution, NonZeroMean

__all__ = [
    "SpectralField",
    "GridSamples",
    "zero_field",
    "constant",
    "sine",
    "cosine",
    "wiener_norm",
    "mean",
    "derivative",
    "antiderivative",
    "project",
    "multiply",
    "to_samples",
    "from_samples",
    "grid_points",
    "next_pow2",
]

#: relative tolerance used by the mean-free precondition checks
MEAN_FREE_RTOL = 1e-12


def next_pow2(n: int) -> int:
    """Smallest power of two >= n."""
    p = 1
    while p < n:
        p *= 2
    return p


def _symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Project onto exactly Hermitian-symmetric coefficients."""
    return 0.5 * (coeffs + np.conj(coeffs[::-1]))


@dataclass(frozen=True)
class SpectralField:
    """Coefficients u_hat(k), k = -max_mode..max_mode, of a real field."""

    max_mode: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.max_mode < 0:
            raise ValueError("max_mode must be >= 0")
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (2 * self.max_mode + 1,):
            raise ValueError(
                f"expected {2 * self.max_mode + 1} coefficients, got {c.shape}")
        if not (np.all(np.isfinite(c.real)) and np.all(np.isfinite(c.imag))):
            raise ValueError("coefficients must be finite")
        scale = 1.0 + float(np.max(np.abs(c)))
        defect = np.max(np.abs(c - np.conj(c[::-1])))
        if defect > 1e-8 * scale:
            raise ValueError(
                f"coefficients violate reality (u_hat(-k) = conj u_hat(k)); "
                f"defect {defect:.3e}")
        c = _symmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def coeff(self, k: int) -> complex:
        """u_hat(k); zero outside the stored band."""
        if abs(k) > self.max_mode:
            return 0.0 + 0.0j
        return complex(self.coeffs[k + self.max_mode])

    def half(self) -> np.ndarray:
        """Coefficients for k = 0..max_mode (the negative side is implied)."""
        return self.coeffs[self.max_mode:]

    # -- small field algebra used by diagnostics and tests ------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        m = max(self.max_mode, other.max_mode)
        return SpectralField(m, project(self, m).coeffs + project(other, m).coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        m = max(self.max_mode, other.max_mode)
        return SpectralField(m, project(self, m).coeffs - project(other, m).coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.max_mode, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.max_mode, -self.coeffs)


@dataclass(frozen=True)
class GridSamples:
    """Real samples at x_j = -pi + 2*pi*j/n, j = 0..n-1, n a power of two."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        n = v.shape[0]
        if n < 1 or n & (n - 1):
            raise ValueError("number of samples must be a power of two")
        if not np.all(np.isfinite(v)):
            raise ValueError("samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    def x(self) -> np.ndarray:
        return grid_points(self.n_points)


def grid_points(n: int) -> np.ndarray:
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def zero_field(max_mode: int) -> SpectralField:
    return SpectralField(max_mode, np.zeros(2 * max_mode + 1, dtype=np.complex128))


def constant(value: float, max_mode: int = 0) -> SpectralField:
    c = np.zeros(2 * max_mode + 1, dtype=np.complex128)
    c[max_mode] = value
    return SpectralField(max_mode, c)


def sine(k: int, amplitude: float = 1.0, max_mode: int | None = None) -> SpectralField:
    """amplitude * sin(k x) as a field (max_mode defaults to k)."""
    if k < 1:
        raise ValueError("wavenumber must be >= 1")
    m = k if max_mode is None else max_mode
    if m < k:
        raise ValueError("max_mode too small for the requested wavenumber")
    c = np.zeros(2 * m + 1, dtype=np.complex128)
    c[m + k] = -0.5j * amplitude
    c[m - k] = 0.5j * amplitude
    return SpectralField(m, c)


def cosine(k: int, amplitude: float = 1.0, max_mode: int | None = None) -> SpectralField:
    """amplitude * cos(k x) as a field (max_mode defaults to k)."""
    if k < 0:
        raise ValueError("wavenumber must be >= 0")
    m = max(k, 0) if max_mode is None else max_mode
    if m < k:
        raise ValueError("max_mode too small for the requested wavenumber")
    c = np.zeros(2 * m + 1, dtype=np.complex128)
    c[m + k] += 0.5 * amplitude
    c[m - k] += 0.5 * amplitude
    return SpectralField(m, c)


# ---------------------------------------------------------------------------
# norm calculus
# ---------------------------------------------------------------------------

def wiener_norm(u: SpectralField, s: float) -> float:
    """sum_k |k|^s |u_hat(k)|, with the convention |0|^0 = 1.

    For s > 0 the k = 0 term drops out (0^s = 0), so constants have norm
    zero in every homogeneous space while keeping a genuine norm at s = 0.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    k = np.abs(np.arange(-u.max_mode, u.max_mode + 1, dtype=np.float64))
    return float(np.sum(k ** s * np.abs(u.coeffs)))


def mean(u: SpectralField) -> float:
    """The spatial average, i.e. the k = 0 coefficient."""
    return float(u.coeffs[u.max_mode].real)


def is_mean_free(u: SpectralField, rtol: float = MEAN_FREE_RTOL) -> bool:
    return abs(u.coeff(0)) <= rtol * (1.0 + wiener_norm(u, 0.0))


# ---------------------------------------------------------------------------
# calculus
# ---------------------------------------------------------------------------

def derivative(u: SpectralField, order: int = 1) -> SpectralField:
    """Spectral derivative: coefficients (i k)^order u_hat(k)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    k = np.arange(-u.max_mode, u.max_mode + 1, dtype=np.float64)
    # i^order from a table; complex pow would leak rounding into the
    # reality invariant
    factor = (1, 1j, -1, -1j)[order % 4] * k ** order
    return SpectralField(u.max_mode, factor * u.coeffs)


def antiderivative(u: SpectralField) -> SpectralField:
    """The mean-free primitive: coefficients -(i/n) u_hat(n), zero at n = 0."""
    if not is_mean_free(u):
        raise NonZeroMean(
            f"antiderivative undefined: |u_hat(0)| = {abs(u.coeff(0)):.3e}")
    m = u.max_mode
    k = np.arange(-m, m + 1, dtype=np.float64)
    k[m] = 1.0
    out = (-1j / k) * u.coeffs
    out[m] = 0.0
    return SpectralField(m, out)


def project(u: SpectralField, M: int) -> SpectralField:
    """Zero every coefficient with |k| > M (pads when M > max_mode)."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if M == u.max_mode:
        return u
    out = np.zeros(2 * M + 1, dtype=np.complex128)
    m = min(M, u.max_mode)
    out[M - m:M + m + 1] = u.coeffs[u.max_mode - m:u.max_mode + m + 1]
    return SpectralField(M, out)


def multiply(a: SpectralField, b: SpectralField, M: int,
             path: str = "grid") -> SpectralField:
    """Truncated product P_M[a b].

    Two equivalent evaluation paths are kept deliberately:

    * ``"conv"``: the direct convolution sum over coefficient pairs,
    * ``"grid"``: pointwise multiplication on a zero-padded sample grid of
      at least 2 (M_a + M_b) + 1 points, transformed back and truncated.

    The padding makes the grid path alias-free, so the paths agree to
    rounding error; the test suite holds them to 1e-12 of each other.
    """
    if M < 0:
        raise ValueError("M must be >= 0")
    if path == "conv":
        out = kernels.conv_trunc(a.coeffs, b.coeffs, M)
        return SpectralField(M, out)
    if path == "grid":
        deg = a.max_mode + b.max_mode
        n = next_pow2(2 * deg + 1)
        va = to_samples(a, n).values
        vb = to_samples(b, n).values
        prod = from_samples(GridSamples(va * vb), min(M, deg))
        return project(prod, M)
    raise ValueError(f"unknown multiply path {path!r}")


# ---------------------------------------------------------------------------
# grid transforms
# ---------------------------------------------------------------------------

def _alt_signs(m: int) -> np.ndarray:
    # (-1)^k for k = 0..m; accounts for the grid starting at x = -pi
    s = np.ones(m + 1)
    s[1::2] = -1.0
    return s


def _half_to_grid(half: np.ndarray, n: int) -> np.ndarray:
    """Evaluate a field given by k >= 0 coefficients on the n-point grid."""
    m = half.shape[0] - 1
    spec = np.zeros(n // 2 + 1, dtype=np.complex128)
    spec[:m + 1] = half * _alt_signs(m)
    return np.fft.irfft(spec, n) * n


def _grid_to_half(values: np.ndarray, M: int) -> np.ndarray:
    """Coefficients k = 0..M of the trigonometric interpolant."""
    n = values.shape[0]
    spec = np.fft.rfft(values) / n
    return spec[:M + 1] * _alt_signs(M)


def _full_from_half(half: np.ndarray) -> np.ndarray:
    neg = np.conj(half[1:][::-1])
    return np.concatenate([neg, half])


def to_samples(u: SpectralField, n: int) -> GridSamples:
    """Evaluate the field at the n uniform grid points.

    Requires n >= 2 max_mode + 1 so the samples determine the field.
    """
    if n < 2 * u.max_mode + 1:
        raise InsufficientResolution(
            f"{n} samples cannot represent max_mode {u.max_mode}")
    return GridSamples(_half_to_grid(u.half(), n))


def from_samples(g: GridSamples, M: int) -> SpectralField:
    """Extract coefficients |k| <= M from grid samples.

    Requires n_points >= 2M + 1; exact for band-limited data of degree
    <= n_points - M - 1.
    """
    if g.n_points < 2 * M + 1:
        raise InsufficientResolution(
            f"{g.n_points} samples cannot resolve max_mode {M}")
    half = _grid_to_half(g.values, M)
    return SpectralField(M, _full_from_half(half))
