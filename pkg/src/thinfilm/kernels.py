"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen at import time from the environment variable
``THINFILM_NUMBA``: unset or ``1`` selects the jit-compiled kernels when
numba is importable, ``0`` forces the numpy fallback.  Both variants of
every kernel are kept importable so the benchmark (and the tests) can
compare them directly; ``select_backend`` rebinds the active set.

All kernels are serial and use a fixed summation order, so results are
bitwise reproducible across backends up to floating-point associativity
of the identical operation sequence.
"""

import os

import numpy as np

__all__ = [
    "active_backend",
    "available_backends",
    "select_backend",
    "set_thread_cap",
    "conv_trunc",
    "cn_combine",
    "taylor_sums",
    "closed_fluxes",
    "series_terms_grid",
]


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def _conv_trunc_numpy(a, b, M):
    """Truncated convolution c(k) = sum_j a(j) b(k-j) for |k| <= M.

    ``a`` and ``b`` are dense coefficient vectors in ascending wavenumber
    order (index i holds wavenumber i - (len-1)//2).  np.convolve performs
    the direct O(n^2) sum, which is exactly the oracle path wanted here.
    """
    full = np.convolve(a, b)
    ma = (a.shape[0] - 1) // 2
    mb = (b.shape[0] - 1) // 2
    mc = ma + mb
    out = np.zeros(2 * M + 1, dtype=np.complex128)
    lo = max(-M, -mc)
    hi = min(M, mc)
    out[lo + M:hi + M + 1] = full[lo + mc:hi + mc + 1]
    return out


def _cn_combine_numpy(f, th, B00, B01, B10, B11, Ai00, Ai01, Ai10, Ai11,
                      nf, nt, dt):
    """One implicit 2x2 update per mode: u' = Ainv (B u + dt n)."""
    rf = B00 * f + B01 * th + dt * nf
    rt = B10 * f + B11 * th + dt * nt
    return Ai00 * rf + Ai01 * rt, Ai10 * rf + Ai11 * rt


def _taylor_sums_numpy(r, J):
    """Truncated series in z = -r shared by the van der Waals terms.

    Returns (S1, S2, S3) with
      S1 = sum_{j=1..J} z^(j-1)
      S2 = sum_{j=1..J} j z^(j-1)
      S3 = (1/2) sum_{j=2..J} j(j-1) z^(j-2)
    evaluated pointwise over the sample array ``r``.
    """
    z = -r
    s1 = np.ones_like(r)
    s2 = np.ones_like(r)
    s3 = np.zeros_like(r)
    w_prev = np.ones_like(r)          # z^(j-2) while at term j
    w = z.copy()                      # z^(j-1) while at term j
    for j in range(2, J + 1):
        s1 += w
        s2 += j * w
        s3 += (0.5 * j * (j - 1)) * w_prev
        w_prev = w
        w = w * z
    if J < 2:
        s3 = np.zeros_like(r)
    if J < 1:
        s1 = np.zeros_like(r)
        s2 = np.zeros_like(r)
    return s1, s2, s3


def _closed_fluxes_numpy(F, T, Fx, Tx, Fxxx, G, S, A, h, gam):
    """Pointwise fluxes of the closed-form nonlinearities.

    Returns (flux_f, flux_t, hmin), where hmin = min(h + F) over the grid
    is used by the caller to detect film touchdown before trusting the
    divided terms.
    """
    F2 = F * F
    poly = 3.0 * h * h * F + 3.0 * h * F2 + F2 * F
    flux_f = (0.5 * F2 + h * F) * Tx + (G / 3.0) * poly * Fx
    bracket = gam * F2 + 2.0 * gam * h * F + T * h * h + T * F2 + 2.0 * T * h * F
    flux_t = (gam * F + h * T + T * F) * Tx + (G / 2.0) * bracket * Fx
    if S != 0.0:
        flux_f = flux_f - (S / 3.0) * poly * Fxxx
        flux_t = flux_t - (S / 2.0) * bracket * Fxxx
    hmin = float(np.min(h + F))
    if A != 0.0:
        denom = h * (h + F)
        flux_f = flux_f + A * F * Fx / denom
        flux_t = flux_t + (1.5 * A) * (2.0 * gam * h * F + gam * F2 - T * h * h) \
            * Fx / (denom * denom)
    return flux_f, flux_t, hmin


def _series_terms_grid_numpy(F, Fx, Fxx, T, Tx, s1, s2, s3, A, h, gam):
    """Grid values of the series-form van der Waals terms (N4, N8)."""
    n4 = A * ((F / (h * h)) * Fxx + (Fx / h) ** 2) * s1 \
        - A * (F / h ** 3) * Fx * Fx * s2
    Bv = 2.0 * gam * h * F + gam * F * F - T * h * h
    Bx = 2.0 * gam * h * Fx + 2.0 * gam * F * Fx - h * h * Tx
    c = 1.5 * A / h ** 4
    n8 = c * (Bv * Fxx + Bx * Fx) * s2 - 2.0 * c * (Bv * Fx * Fx / h) * s3
    return n4, n8


_NUMPY_IMPL = {
    "conv_trunc": _conv_trunc_numpy,
    "cn_combine": _cn_combine_numpy,
    "taylor_sums": _taylor_sums_numpy,
    "closed_fluxes": _closed_fluxes_numpy,
    "series_terms_grid": _series_terms_grid_numpy,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba_impl():
    from numba import njit

    @njit(cache=True)
    def conv_trunc_nb(a, b, M):
        ma = (a.shape[0] - 1) // 2
        mb = (b.shape[0] - 1) // 2
        out = np.zeros(2 * M + 1, dtype=np.complex128)
        for k in range(-M, M + 1):
            jlo = max(-ma, k - mb)
            jhi = min(ma, k + mb)
            acc = 0.0 + 0.0j
            for j in range(jlo, jhi + 1):
                acc += a[j + ma] * b[k - j + mb]
            out[k + M] = acc
        return out

    @njit(cache=True)
    def cn_combine_nb(f, th, B00, B01, B10, B11, Ai00, Ai01, Ai10, Ai11,
                      nf, nt, dt):
        n = f.shape[0]
        fo = np.empty(n, dtype=np.complex128)
        to = np.empty(n, dtype=np.complex128)
        for i in range(n):
            rf = B00[i] * f[i] + B01[i] * th[i] + dt * nf[i]
            rt = B10[i] * f[i] + B11[i] * th[i] + dt * nt[i]
            fo[i] = Ai00[i] * rf + Ai01[i] * rt
            to[i] = Ai10[i] * rf + Ai11[i] * rt
        return fo, to

    @njit(cache=True)
    def taylor_sums_nb(r, J):
        n = r.shape[0]
        s1 = np.zeros(n)
        s2 = np.zeros(n)
        s3 = np.zeros(n)
        for i in range(n):
            z = -r[i]
            w_prev = 1.0
            w = 1.0
            a1 = 0.0
            a2 = 0.0
            a3 = 0.0
            for j in range(1, J + 1):
                a1 += w
                a2 += j * w
                if j >= 2:
                    a3 += 0.5 * j * (j - 1) * w_prev
                w_prev = w
                w = w * z
            s1[i] = a1
            s2[i] = a2
            s3[i] = a3
        return s1, s2, s3

    @njit(cache=True)
    def closed_fluxes_nb(F, T, Fx, Tx, Fxxx, G, S, A, h, gam):
        n = F.shape[0]
        flux_f = np.empty(n)
        flux_t = np.empty(n)
        hmin = np.inf
        for i in range(n):
            Fi = F[i]
            Ti = T[i]
            F2 = Fi * Fi
            poly = 3.0 * h * h * Fi + 3.0 * h * F2 + F2 * Fi
            ff = (0.5 * F2 + h * Fi) * Tx[i] + (G / 3.0) * poly * Fx[i]
            bracket = gam * F2 + 2.0 * gam * h * Fi + Ti * h * h \
                + Ti * F2 + 2.0 * Ti * h * Fi
            ft = (gam * Fi + h * Ti + Ti * Fi) * Tx[i] \
                + (G / 2.0) * bracket * Fx[i]
            if S != 0.0:
                ff -= (S / 3.0) * poly * Fxxx[i]
                ft -= (S / 2.0) * bracket * Fxxx[i]
            hf = h + Fi
            if hf < hmin:
                hmin = hf
            if A != 0.0:
                denom = h * hf
                ff += A * Fi * Fx[i] / denom
                ft += (1.5 * A) * (2.0 * gam * h * Fi + gam * F2 - Ti * h * h) \
                    * Fx[i] / (denom * denom)
            flux_f[i] = ff
            flux_t[i] = ft
        return flux_f, flux_t, hmin

    @njit(cache=True)
    def series_terms_grid_nb(F, Fx, Fxx, T, Tx, s1, s2, s3, A, h, gam):
        n = F.shape[0]
        n4 = np.empty(n)
        n8 = np.empty(n)
        c = 1.5 * A / h ** 4
        for i in range(n):
            Fi = F[i]
            Fxi = Fx[i]
            n4[i] = A * ((Fi / (h * h)) * Fxx[i] + (Fxi / h) ** 2) * s1[i] \
                - A * (Fi / h ** 3) * Fxi * Fxi * s2[i]
            Bv = 2.0 * gam * h * Fi + gam * Fi * Fi - T[i] * h * h
            Bx = 2.0 * gam * h * Fxi + 2.0 * gam * Fi * Fxi - h * h * Tx[i]
            n8[i] = c * (Bv * Fxx[i] + Bx * Fxi) * s2[i] \
                - 2.0 * c * (Bv * Fxi * Fxi / h) * s3[i]
        return n4, n8

    return {
        "conv_trunc": conv_trunc_nb,
        "cn_combine": cn_combine_nb,
        "taylor_sums": taylor_sums_nb,
        "closed_fluxes": closed_fluxes_nb,
        "series_terms_grid": series_terms_grid_nb,
    }


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_IMPLS: dict[str, dict] = {"numpy": _NUMPY_IMPL}
_ACTIVE = "numpy"


def _initial_backend() -> str:
    flag = os.environ.get("THINFILM_NUMBA", "").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return "numpy"
    try:
        _IMPLS["numba"] = _build_numba_impl()
    except ImportError:
        if flag in ("1", "true", "on", "yes"):
            raise RuntimeError("THINFILM_NUMBA=1 but numba is not importable")
        return "numpy"
    return "numba"


def available_backends():
    if "numba" not in _IMPLS:
        try:
            _IMPLS["numba"] = _build_numba_impl()
        except ImportError:
            pass
    return sorted(_IMPLS)


def active_backend() -> str:
    return _ACTIVE


def select_backend(name: str) -> str:
    """Bind the active kernel set to ``name`` ("numba" or "numpy")."""
    global _ACTIVE, conv_trunc, cn_combine, taylor_sums
    global closed_fluxes, series_terms_grid
    if name not in available_backends():
        raise ValueError(f"unknown or unavailable backend {name!r}")
    impl = _IMPLS[name]
    conv_trunc = impl["conv_trunc"]
    cn_combine = impl["cn_combine"]
    taylor_sums = impl["taylor_sums"]
    closed_fluxes = impl["closed_fluxes"]
    series_terms_grid = impl["series_terms_grid"]
    _ACTIVE = name
    return name


def set_thread_cap(n: int) -> None:
    """Cap numba's internal thread pool (env THINFILM_THREADS hook).

    The kernels themselves are serial, so this only constrains whatever
    parallelism numba's runtime may spin up on its own.
    """
    if n < 1:
        raise ValueError("thread cap must be >= 1")
    if "numba" in _IMPLS:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


select_backend(_initial_backend())
