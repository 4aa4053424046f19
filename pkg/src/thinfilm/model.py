"""The physical system: parameters, linear coupling symbol, nonlinearities.

The evolution is written for the perturbation pair (f, theta) around the
flat state (h_mean, gamma_mean).  The linear part acts mode by mode through
a real 2x2 symbol; the eight nonlinear terms come in two equivalent
flavours:

* ``closed``: the divergence form, evaluated as flux-then-derivative so
  the zero mode of the output vanishes identically (exact mass
  conservation), with the van der Waals terms computed by pointwise
  division on the sample grid;
* ``series``: the truncated-Taylor form of the van der Waals terms, the
  polynomial terms being identical to the closed form.

Every product is evaluated either on a zero-padded (alias-free) grid or by
direct convolution; the two paths are kept as mutual oracles.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import PointwiseDegeneracy, SeriesDivergence
from .spectral import (
    SpectralField,
    constant,
    next_pow2,
    project,
    _full_from_half,
    _grid_to_half,
    _half_to_grid,
    is_mean_free,
)

__all__ = [
    "PhysParams",
    "State",
    "linear_symbol",
    "linear_symbol_arrays",
    "nonlinear_f",
    "nonlinear_theta",
    "rhs",
    "reconstruct",
]

# grids above this size fall back to fixed-size (inexact but spectrally
# accurate) dealiasing for the series form
_SERIES_GRID_CAP = 1 << 17


@dataclass(frozen=True)
class PhysParams:
    """Physical constants and the means of the initial data.

    G, S, A are the gravity, surface-tension and van der Waals
    coefficients, D the surface diffusion; h_mean and gamma_mean are the
    spatial averages of film height and surfactant concentration.
    """

    G: float
    S: float
    A: float
    D: float
    h_mean: float
    gamma_mean: float

    def __post_init__(self):
        if not (self.h_mean > 0):
            raise ValueError("h_mean must be positive")
        if not (self.D > 0):
            raise ValueError("D must be positive")
        if self.G < 0 or self.S < 0 or self.A < 0:
            raise ValueError("G, S, A must be nonnegative")
        if not (0 < self.gamma_mean <= 1):
            raise ValueError("gamma_mean must lie in (0, 1]")


@dataclass(frozen=True)
class State:
    """Mean-free perturbation pair (f, theta) at a given time."""

    f: SpectralField
    theta: SpectralField
    time: float = 0.0

    def __post_init__(self):
        if self.f.max_mode != self.theta.max_mode:
            raise ValueError("f and theta must share max_mode")
        if not is_mean_free(self.f) or not is_mean_free(self.theta):
            raise ValueError("state fields must be mean-free")
        if self.time < 0:
            raise ValueError("time must be nonnegative")

    @property
    def max_mode(self) -> int:
        return self.f.max_mode


def flat_state(max_mode: int, time: float = 0.0) -> State:
    from .spectral import zero_field

    return State(zero_field(max_mode), zero_field(max_mode), time)


# ---------------------------------------------------------------------------
# linear part
# ---------------------------------------------------------------------------

def linear_symbol_arrays(p: PhysParams, k: np.ndarray):
    """Entries of the 2x2 symbol L_k for a vector of wavenumbers."""
    h, gam = p.h_mean, p.gamma_mean
    k2 = k.astype(np.float64) ** 2
    k4 = k2 * k2
    L00 = (p.A / h - p.G * h ** 3 / 3.0) * k2 - (p.S / 3.0) * h ** 3 * k4
    L01 = -(h * h / 2.0) * k2
    L10 = (1.5 * p.A * gam / h ** 2 - 0.5 * p.G * gam * h ** 2) * k2 \
        - 0.5 * p.S * gam * h ** 2 * k4
    L11 = -(h * gam + p.D) * k2
    return L00, L01, L10, L11


def linear_symbol(p: PhysParams, k: int) -> np.ndarray:
    """The matrix L_k with d/dt (f_hat, theta_hat)(k) = L_k (f_hat, theta_hat)."""
    arrs = linear_symbol_arrays(p, np.array([k]))
    return np.array([[arrs[0][0], arrs[1][0]], [arrs[2][0], arrs[3][0]]])


# ---------------------------------------------------------------------------
# nonlinear terms
# ---------------------------------------------------------------------------

def _half_wiener0(half: np.ndarray) -> float:
    a = np.abs(half)
    return float(a[0] + 2.0 * np.sum(a[1:]))


def _dealias_points(m_in: int, m_out: int) -> int:
    # quartic fluxes have degree 4*m_in; P_{m_out} of those is alias-free
    # on 4*m_in + m_out + 1 points
    return next_pow2(max(4 * m_in + m_out + 1, 2 * m_in + 1, 4))


def _rational_points(m_in: int, m_out: int, q: float) -> int:
    """Grid size for the divided van der Waals terms.

    Their Fourier tail decays like q^(k/m_in) with q = |f|_A0 / h_mean, so
    padding to e*m_in with e ~ log(1e-10)/log(q) keeps the aliasing leaked
    into |k| <= m_out below ~1e-10.
    """
    base = _dealias_points(m_in, m_out)
    if q <= 1e-16 or m_in == 0:
        return base
    e = np.log(1e-10) / np.log(min(q, 0.9))
    want = int(min(64.0, max(4.0, e)) * m_in) + m_out + 1
    return min(max(base, next_pow2(want)), max(base, _SERIES_GRID_CAP))


def _series_points(m_in: int, m_out: int, J: int, q: float) -> int:
    # exact dealiasing of the degree-(J+2)*m_in polynomial when affordable
    want = (J + 2) * max(m_in, 1) + m_out + 1
    if want <= _SERIES_GRID_CAP:
        return next_pow2(want)
    return _rational_points(m_in, m_out, q)


def _check_series_valid(fh: np.ndarray, p: PhysParams) -> None:
    n0 = _half_wiener0(fh)
    if n0 >= p.h_mean:
        raise SeriesDivergence(
            f"series form invalid: |f|_A0 = {n0:.6g} >= h_mean = {p.h_mean:.6g}")


def nonlinear_half(fh: np.ndarray, thh: np.ndarray, p: PhysParams, M: int,
                   form: str = "closed", series_terms: int | None = None):
    """Grid evaluation of both nonlinear sums on half-spectrum arrays.

    Returns (nf, nt, hmin): the k = 0..M coefficients of the f- and
    theta-side nonlinearities and the minimum film height seen on the
    evaluation grid.  This is the integrator's hot path.
    """
    m_in = fh.shape[0] - 1
    J = series_terms if series_terms is not None else max(M, 1)
    if form == "series":
        _check_series_valid(fh, p)
        if p.A != 0.0:
            n = _series_points(m_in, M, J, _half_wiener0(fh) / p.h_mean)
        else:
            n = _dealias_points(m_in, M)
    elif form == "closed":
        if p.A != 0.0:
            n = _rational_points(m_in, M, _half_wiener0(fh) / p.h_mean)
        else:
            n = _dealias_points(m_in, M)
    else:
        raise ValueError(f"unknown nonlinear form {form!r}")

    h, gam = p.h_mean, p.gamma_mean
    kk = np.arange(m_in + 1, dtype=np.float64)
    d1 = 1j * kk
    F = _half_to_grid(fh, n)
    T = _half_to_grid(thh, n)
    Fx = _half_to_grid(d1 * fh, n)
    Tx = _half_to_grid(d1 * thh, n)
    if p.S != 0.0:
        Fxxx = _half_to_grid(-1j * kk ** 3 * fh, n)
    else:
        Fxxx = np.zeros(0)

    a_closed = p.A if form == "closed" else 0.0
    flux_f, flux_t, hmin = kernels.closed_fluxes(
        F, T, Fx, Tx, Fxxx, p.G, p.S, a_closed, h, gam)
    if form == "closed" and p.A != 0.0 and hmin <= 0.0:
        raise PointwiseDegeneracy(
            f"film height reached {hmin:.6g} on the evaluation grid")

    dk = 1j * np.arange(M + 1, dtype=np.float64)
    nf = dk * _grid_to_half(flux_f, M)
    nt = dk * _grid_to_half(flux_t, M)

    if form == "series" and p.A != 0.0:
        Fxx = _half_to_grid(-kk ** 2 * fh, n)
        s1, s2, s3 = kernels.taylor_sums(F / h, J)
        n4, n8 = kernels.series_terms_grid(F, Fx, Fxx, T, Tx, s1, s2, s3,
                                           p.A, h, gam)
        c4 = _grid_to_half(n4, M)
        c8 = _grid_to_half(n8, M)
        # truncated Taylor sums are total derivatives only up to
        # O((f/h)^(J+1)); project the residual mass out so the assembled
        # right-hand side stays exactly mean-free
        c4[0] = 0.0
        c8[0] = 0.0
        nf = nf + c4
        nt = nt + c8
    return nf, nt, hmin


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ma = (a.shape[0] - 1) // 2
    mb = (b.shape[0] - 1) // 2
    return kernels.conv_trunc(a, b, ma + mb)


def _pad_full(c: np.ndarray, M: int) -> np.ndarray:
    m = (c.shape[0] - 1) // 2
    if m == M:
        return c
    out = np.zeros(2 * M + 1, dtype=np.complex128)
    mm = min(m, M)
    out[M - mm:M + mm + 1] = c[m - mm:m + mm + 1]
    return out


def _deriv_full(c: np.ndarray, order: int = 1) -> np.ndarray:
    m = (c.shape[0] - 1) // 2
    k = np.arange(-m, m + 1, dtype=np.float64)
    return (1j, -1.0, -1j, 1.0)[(order - 1) % 4] * k ** order * c


def _add_full(*arrays: np.ndarray) -> np.ndarray:
    """Sum dense coefficient vectors of possibly different bandwidths."""
    m = max((a.shape[0] - 1) // 2 for a in arrays)
    out = np.zeros(2 * m + 1, dtype=np.complex128)
    for a in arrays:
        out += _pad_full(a, m)
    return out


def _nonlinear_conv(fc: np.ndarray, thc: np.ndarray, p: PhysParams, M: int,
                    J: int):
    """Direct-convolution evaluation (the slow oracle path).

    Every product is an exact convolution at full bandwidth; truncation to
    M happens once at the end, mirroring the alias-free grid path.  The
    van der Waals terms, when present, are always the series form: their
    closed form involves a pointwise division that has no convolution
    counterpart.
    """
    h, gam = p.h_mean, p.gamma_mean
    fx = _deriv_full(fc)
    tx = _deriv_full(thc)
    f2 = _conv(fc, fc)
    tf = _conv(thc, fc)
    poly = _add_full(3.0 * h * h * fc, 3.0 * h * f2, _conv(f2, fc))
    flux_f = _add_full(_conv(_add_full(0.5 * f2, h * fc), tx),
                       (p.G / 3.0) * _conv(poly, fx))
    bracket = _add_full(gam * f2, 2.0 * gam * h * fc, h * h * thc,
                        _conv(thc, f2), 2.0 * h * tf)
    lead = _add_full(gam * fc, h * thc, tf)
    flux_t = _add_full(_conv(lead, tx), (p.G / 2.0) * _conv(bracket, fx))
    if p.S != 0.0:
        fxxx = _deriv_full(fc, 3)
        flux_f = _add_full(flux_f, -(p.S / 3.0) * _conv(poly, fxxx))
        flux_t = _add_full(flux_t, -(p.S / 2.0) * _conv(bracket, fxxx))
    nf = _pad_full(_deriv_full(flux_f), M)
    nt = _pad_full(_deriv_full(flux_t), M)

    if p.A != 0.0:
        # truncated series sums as coefficient vectors in z = -f/h
        z = -fc / h
        fxx = _deriv_full(fc, 2)
        s1 = np.zeros(1, dtype=np.complex128)
        s2 = np.zeros(1, dtype=np.complex128)
        s3 = np.zeros(1, dtype=np.complex128)
        w_prev = np.ones(1, dtype=np.complex128)   # z^(j-2)
        w = np.ones(1, dtype=np.complex128)        # z^(j-1)
        for j in range(1, J + 1):
            s1 = _add_full(s1, w)
            s2 = _add_full(s2, j * w)
            if j >= 2:
                s3 = _add_full(s3, (0.5 * j * (j - 1)) * w_prev)
            w_prev = w
            w = _conv(w, z)
        fxfx = _conv(fx, fx)
        br1 = _add_full(_conv(fc, fxx) / h ** 2, fxfx / h ** 2)
        n4 = _add_full(p.A * _conv(br1, s1),
                       -(p.A / h ** 3) * _conv(_conv(fc, fxfx), s2))
        Bv = _add_full(2.0 * gam * h * fc, gam * f2, -h * h * thc)
        Bx = _add_full(2.0 * gam * h * fx, 2.0 * gam * _conv(fc, fx),
                       -h * h * tx)
        c = 1.5 * p.A / h ** 4
        n8 = _add_full(
            c * _conv(_add_full(_conv(Bv, fxx), _conv(Bx, fx)), s2),
            -2.0 * c * _conv(_conv(Bv, fxfx) / h, s3))
        n4 = _pad_full(n4, M)
        n8 = _pad_full(n8, M)
        # mean-free projection, as in the grid path
        n4[M] = 0.0
        n8[M] = 0.0
        nf = nf + n4
        nt = nt + n8
    return nf, nt


def _state_halves(s: State, M: int):
    f = project(s.f, M)
    th = project(s.theta, M)
    return f.half().copy(), th.half().copy()


def _nonlinear_pair(s: State, p: PhysParams, M: int, form: str,
                    series_terms: int | None, path: str):
    if path == "grid":
        fh, thh = _state_halves(s, s.max_mode)
        nf, nt, _ = nonlinear_half(fh, thh, p, M, form, series_terms)
        return (SpectralField(M, _full_from_half(nf)),
                SpectralField(M, _full_from_half(nt)))
    if path == "conv":
        J = series_terms if series_terms is not None else max(M, 1)
        if form == "series":
            _check_series_valid(s.f.half(), p)
        elif p.A != 0.0:
            raise ValueError("convolution path implements only the series "
                             "form of the van der Waals terms")
        nf, nt = _nonlinear_conv(s.f.coeffs.copy(), s.theta.coeffs.copy(),
                                 p, M, J)
        return SpectralField(M, nf), SpectralField(M, nt)
    raise ValueError(f"unknown evaluation path {path!r}")


def nonlinear_f(s: State, p: PhysParams, M: int, form: str = "closed",
                series_terms: int | None = None,
                path: str = "grid") -> SpectralField:
    """P_M of the nonlinear sum on the film-height side (terms 1-4)."""
    return _nonlinear_pair(s, p, M, form, series_terms, path)[0]


def nonlinear_theta(s: State, p: PhysParams, M: int, form: str = "closed",
                    series_terms: int | None = None,
                    path: str = "grid") -> SpectralField:
    """P_M of the nonlinear sum on the surfactant side (terms 5-8)."""
    return _nonlinear_pair(s, p, M, form, series_terms, path)[1]


def rhs(s: State, p: PhysParams, M: int, form: str = "closed",
        series_terms: int | None = None, path: str = "grid"):
    """Full right-hand side (d/dt f, d/dt theta), exactly mean-free."""
    nf, nt = _nonlinear_pair(s, p, M, form, series_terms, path)
    fh, thh = _state_halves(s, M)
    k = np.arange(M + 1)
    L00, L01, L10, L11 = linear_symbol_arrays(p, k)
    df = L00 * fh + L01 * thh + nf.half()
    dth = L10 * fh + L11 * thh + nt.half()
    df[0] = 0.0
    dth[0] = 0.0
    return (SpectralField(M, _full_from_half(df)),
            SpectralField(M, _full_from_half(dth)))


def reconstruct(s: State, p: PhysParams):
    """Recover the physical pair (h, Gamma) from the perturbation state."""
    h = s.f + constant(p.h_mean, 0)
    gamma = s.theta + constant(p.gamma_mean, 0)
    return h, gamma
