"""Spectral simulator and decay-certificate toolkit for a thin film
carrying an insoluble surfactant on a periodic domain."""

from .certificate import Certificate, certify, frak_constants, lambda1, lambda2, lambda3, max_amplitude
from .diagnostics import (
    continuous_dependence,
    energy,
    strong_residual,
    verify_decay,
    verify_dissipation,
    weak_residual,
)
from .integrator import Safety, StepperConfig, Trajectory, adapt_dt, integrate, step
from .model import (
    PhysParams,
    State,
    flat_state,
    linear_symbol,
    nonlinear_f,
    nonlinear_theta,
    reconstruct,
    rhs,
)
from .spectral import (
    GridSamples,
    SpectralField,
    antiderivative,
    constant,
    cosine,
    derivative,
    from_samples,
    mean,
    multiply,
    project,
    sine,
    to_samples,
    wiener_norm,
    zero_field,
)

__version__ = "0.1.0"
