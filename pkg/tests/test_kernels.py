import numpy as np
import pytest

from thinfilm import kernels


needs_numba = pytest.mark.skipif("numba" not in kernels.available_backends(),
                                 reason="numba unavailable")


@pytest.fixture
def restore_backend():
    before = kernels.active_backend()
    yield
    kernels.select_backend(before)


def _rand_herm(rng, m):
    c = rng.standard_normal(2 * m + 1) + 1j * rng.standard_normal(2 * m + 1)
    return 0.5 * (c + np.conj(c[::-1]))


@needs_numba
class TestBackendParity:
    """The jit kernels and the numpy fallbacks must agree to rounding."""

    def test_conv_trunc(self, rng, restore_backend):
        a = _rand_herm(rng, 40)
        b = _rand_herm(rng, 25)
        for M in (0, 10, 40, 65, 80):
            kernels.select_backend("numba")
            x = kernels.conv_trunc(a, b, M)
            kernels.select_backend("numpy")
            y = kernels.conv_trunc(a, b, M)
            assert np.max(np.abs(x - y)) < 1e-13 * (1 + np.max(np.abs(y)))

    def test_cn_combine(self, rng, restore_backend):
        n = 129
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        th = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        mats = [rng.standard_normal(n) for _ in range(8)]
        nf = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        nt = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        kernels.select_backend("numba")
        x = kernels.cn_combine(f, th, *mats, nf, nt, 1e-3)
        kernels.select_backend("numpy")
        y = kernels.cn_combine(f, th, *mats, nf, nt, 1e-3)
        assert np.max(np.abs(x[0] - y[0])) == 0.0
        assert np.max(np.abs(x[1] - y[1])) == 0.0

    def test_taylor_sums(self, rng, restore_backend):
        r = rng.uniform(-0.6, 0.6, size=257)
        for J in (1, 2, 3, 17):
            kernels.select_backend("numba")
            a = kernels.taylor_sums(r, J)
            kernels.select_backend("numpy")
            b = kernels.taylor_sums(r, J)
            for x, y in zip(a, b):
                assert np.max(np.abs(x - y)) < 1e-14

    def test_closed_fluxes(self, rng, restore_backend):
        n = 256
        F = 0.3 * rng.standard_normal(n)
        T = 0.2 * rng.standard_normal(n)
        Fx, Tx, Fxxx = (rng.standard_normal(n) for _ in range(3))
        args = (F, T, Fx, Tx, Fxxx, 1.2, 0.7, 0.4, 1.3, 0.5)
        kernels.select_backend("numba")
        x = kernels.closed_fluxes(*args)
        kernels.select_backend("numpy")
        y = kernels.closed_fluxes(*args)
        assert np.max(np.abs(x[0] - y[0])) < 1e-14
        assert np.max(np.abs(x[1] - y[1])) < 1e-14
        assert x[2] == y[2]

    def test_series_terms_grid(self, rng, restore_backend):
        n = 128
        F, Fx, Fxx, T, Tx = (0.2 * rng.standard_normal(n) for _ in range(5))
        s1, s2, s3 = kernels.taylor_sums(F / 1.3, 9)
        args = (F, Fx, Fxx, T, Tx, s1, s2, s3, 0.4, 1.3, 0.5)
        kernels.select_backend("numba")
        x = kernels.series_terms_grid(*args)
        kernels.select_backend("numpy")
        y = kernels.series_terms_grid(*args)
        assert np.max(np.abs(x[0] - y[0])) < 1e-14
        assert np.max(np.abs(x[1] - y[1])) < 1e-14


class TestTaylorSums:
    def test_against_closed_forms(self, rng):
        # the truncated sums converge to 1/(1+r), 1/(1+r)^2, 1/(1+r)^3
        r = rng.uniform(-0.4, 0.4, size=64)
        s1, s2, s3 = kernels.taylor_sums(r, 200)
        assert np.max(np.abs(s1 - 1 / (1 + r))) < 1e-14
        assert np.max(np.abs(s2 - 1 / (1 + r) ** 2)) < 1e-13
        assert np.max(np.abs(s3 - 1 / (1 + r) ** 3)) < 1e-13

    def test_short_truncations(self):
        r = np.array([0.5])
        s1, s2, s3 = kernels.taylor_sums(r, 1)
        assert (s1[0], s2[0], s3[0]) == (1.0, 1.0, 0.0)
        s1, s2, s3 = kernels.taylor_sums(r, 2)
        assert s1[0] == 1.0 - 0.5
        assert s2[0] == 1.0 - 2 * 0.5
        assert s3[0] == 1.0


class TestBackendSelection:
    def test_select_and_restore(self, restore_backend):
        kernels.select_backend("numpy")
        assert kernels.active_backend() == "numpy"

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            kernels.select_backend("fortran")

    def test_thread_cap_validation(self):
        with pytest.raises(ValueError):
            kernels.set_thread_cap(0)
        kernels.set_thread_cap(1)
