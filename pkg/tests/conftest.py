import numpy as np
import pytest

from thinfilm.model import PhysParams, State
from thinfilm.spectral import SpectralField, wiener_norm


def random_field(rng, max_mode, scale=1.0, mean_free=True):
    """Random Hermitian coefficient field, normalized to |.|_A0 = scale."""
    c = rng.standard_normal(2 * max_mode + 1) \
        + 1j * rng.standard_normal(2 * max_mode + 1)
    c = 0.5 * (c + np.conj(c[::-1]))
    if mean_free:
        c[max_mode] = 0.0
    f = SpectralField(max_mode, c)
    norm = wiener_norm(f, 0.0)
    return f * (scale / norm) if norm > 0 else f


def random_state(rng, max_mode, f_scale, th_scale):
    return State(random_field(rng, max_mode, f_scale),
                 random_field(rng, max_mode, th_scale))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def gravity_params():
    return PhysParams(G=1.0, S=0.0, A=0.0, D=1.0, h_mean=1.0, gamma_mean=0.5)


@pytest.fixture
def full_params():
    return PhysParams(G=1.2, S=0.7, A=0.4, D=1.1, h_mean=1.3, gamma_mean=0.5)
