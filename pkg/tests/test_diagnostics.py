import numpy as np
import pytest

from conftest import random_state
from thinfilm.certificate import certify
from thinfilm.diagnostics import (
    continuous_dependence,
    energy,
    strong_residual,
    verify_decay,
    verify_dissipation,
    weak_residual,
)
from thinfilm.errors import CertificateMismatch, InsufficientSamples
from thinfilm.integrator import StepperConfig, integrate
from thinfilm.model import PhysParams, State, flat_state
from thinfilm.spectral import cosine, sine, zero_field


def osc_state(mu, k, M):
    return State(sine(k, mu, max_mode=M), cosine(k, mu, max_mode=M))


@pytest.fixture(scope="module")
def low_mode_run():
    """Certified, time-resolved gravity run shared across checks."""
    p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
    s0 = osc_state(1e-3, 1, 16)
    cert = certify(s0.f, s0.theta, p)
    traj = integrate(s0, p, StepperConfig(M=16, dt=1e-3), 5.0, record_every=25)
    return p, s0, cert, traj


class TestEnergy:
    def test_reference_family_value(self):
        assert energy(osc_state(1e-3, 1000, 1000), 0, 0) == pytest.approx(
            2e-3, abs=1e-18)

    def test_flat(self):
        assert energy(flat_state(4), 0, 0) == 0.0

    def test_weighted(self):
        s = State(sine(1, 1.0, max_mode=4), cosine(2, 1.0, max_mode=4))
        assert energy(s, 2, 2) == pytest.approx(5.0, abs=1e-14)

    def test_homogeneous(self, rng):
        s = random_state(rng, 8, 0.2, 0.1)
        half = State(0.5 * s.f, 0.5 * s.theta)
        assert energy(half, 0, 0) == pytest.approx(0.5 * energy(s, 0, 0),
                                                   rel=1e-14)


class TestVerifyDecay:
    def test_certified_run_passes(self, low_mode_run):
        p, s0, cert, traj = low_mode_run
        rep = verify_decay(traj, cert, 1e-3)
        assert rep.bound_satisfied
        assert rep.max_violation <= 1e-3
        assert rep.delta_fitted >= rep.delta_certified

    def test_flat_trajectory(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        s0 = flat_state(8)
        cert = certify(s0.f, s0.theta, p)
        traj = integrate(s0, p, StepperConfig(M=8, dt=1e-2), 0.5, record_every=5)
        rep = verify_decay(traj, cert, 1e-3)
        assert rep.bound_satisfied
        assert rep.max_violation == 0.0

    def test_growing_energy_rejected(self, low_mode_run):
        # negative control: corrupt the recorded energies
        from dataclasses import replace

        p, s0, cert, traj = low_mode_run
        d = traj.diagnostics
        bad_e = d.E00 * np.exp(d.time)      # grows past any decay margin
        bad = replace(traj, diagnostics=replace(d, E00=bad_e))
        rep = verify_decay(bad, cert, 1e-3)
        assert not rep.bound_satisfied
        assert rep.max_violation > 0.0

    def test_certificate_mismatch(self, low_mode_run):
        p, s0, cert, traj = low_mode_run
        other = PhysParams(G=2, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        cert2 = certify(s0.f, s0.theta, other)
        with pytest.raises(CertificateMismatch):
            verify_decay(traj, cert2, 1e-3)


class TestVerifyDissipation:
    def test_resolved_run_passes(self, low_mode_run):
        p, s0, cert, traj = low_mode_run
        rep = verify_dissipation(traj, cert, 5e-2)
        assert rep.passed
        assert rep.max_excess <= 0.0

    def test_flat_run_passes(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        s0 = flat_state(8)
        cert = certify(s0.f, s0.theta, p)
        traj = integrate(s0, p, StepperConfig(M=8, dt=1e-2), 0.2, record_every=1)
        assert verify_dissipation(traj, cert, 5e-2).passed

    def test_capillary_run_passes(self):
        p = PhysParams(G=1, S=1, A=0, D=1, h_mean=1, gamma_mean=0.5)
        s0 = osc_state(1e-3, 2, 16)
        cert = certify(s0.f, s0.theta, p)
        assert cert.passed
        traj = integrate(s0, p, StepperConfig(M=16, dt=5e-4), 2.0,
                         record_every=40)
        rep = verify_dissipation(traj, cert, 5e-2)
        assert rep.passed

    def test_insufficient_samples(self, low_mode_run):
        p, s0, cert, _ = low_mode_run
        traj = integrate(s0, p, StepperConfig(M=16, dt=1e-3), 0.002,
                         record_every=1)
        with pytest.raises(InsufficientSamples):
            verify_dissipation(traj, cert, 5e-2)


class TestStrongResidual:
    def test_flat_zero(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        cfg = StepperConfig(M=8, dt=1e-3)
        traj = integrate(flat_state(8), p, cfg, 0.01, record_every=1)
        assert strong_residual(traj, p, cfg) == 0.0

    def test_second_order_refinement(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        s0 = osc_state(1e-3, 1, 16)
        vals = []
        for dt in (2e-3, 1e-3):
            cfg = StepperConfig(M=16, dt=dt)
            traj = integrate(s0, p, cfg, 0.05, record_every=1)
            vals.append(strong_residual(traj, p, cfg))
        assert vals[0] / vals[1] == pytest.approx(4.0, rel=0.25)

    def test_linear_only_matches_cn_truncation(self):
        # residual against the pure linear model stays at the scheme's order
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        s0 = osc_state(1e-2, 2, 4)
        vals = []
        for dt in (4e-3, 2e-3):
            cfg = StepperConfig(M=4, dt=dt, linear_only=True)
            traj = integrate(s0, p, cfg, 0.1, record_every=1)
            vals.append(strong_residual(traj, p, cfg))
        assert vals[0] / vals[1] == pytest.approx(4.0, rel=0.25)

    def test_requires_stride_one(self, low_mode_run):
        p, s0, cert, traj = low_mode_run
        with pytest.raises(InsufficientSamples):
            strong_residual(traj, p, traj.config)


class TestWeakResidual:
    def test_flat_zero(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        traj = integrate(flat_state(8), p, StepperConfig(M=8, dt=1e-2), 1.0,
                         record_every=10)
        assert weak_residual(traj, p, 4) == 0.0

    def test_mass_identity_exact(self, low_mode_run):
        p, s0, cert, traj = low_mode_run
        assert weak_residual(traj, p, 0) < 1e-12

    def test_refinement(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        s0 = osc_state(1e-3, 1, 16)
        defects = []
        for dt, stride in ((2e-3, 4), (1e-3, 2), (5e-4, 1)):
            traj = integrate(s0, p, StepperConfig(M=16, dt=dt), 2.0,
                             record_every=stride)
            defects.append(weak_residual(traj, p, 4))
        assert defects[0] > defects[1] > defects[2]

    def test_incomplete_run_rejected(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        s0 = State(sine(1, 1.5, max_mode=8), zero_field(8))
        traj = integrate(s0, p, StepperConfig(M=8, dt=1e-3,
                                              nonlinear_form="series"), 1.0)
        with pytest.raises(ValueError):
            weak_residual(traj, p, 2)


class TestContinuousDependence:
    def test_identical_states_stay_identical(self, low_mode_run):
        p, s0, cert, _ = low_mode_run
        cfg = StepperConfig(M=16, dt=1e-3)
        rep = continuous_dependence(s0, s0, p, cfg, 0.5, record_every=50)
        assert np.all(rep.separation == 0.0)
        assert rep.gronwall_fit == 0.0

    def test_nearby_states_bounded_growth(self, low_mode_run):
        p, s0, cert, _ = low_mode_run
        s0b = osc_state(1e-3 * (1 + 1e-6), 1, 16)
        cfg = StepperConfig(M=16, dt=1e-3)
        rep = continuous_dependence(s0, s0b, p, cfg, 1.0, record_every=100,
                                    halvings=3)
        assert rep.growth_max <= 10.0
        assert rep.dT <= 10.0 * rep.d0
        for ratio in rep.halving_ratios:
            assert ratio == pytest.approx(2.0, rel=0.2)
        assert np.isfinite(rep.gronwall_fit)

    def test_uncertified_input_rejected(self):
        p = PhysParams(G=1, S=0, A=0, D=1, h_mean=1, gamma_mean=0.5)
        big = osc_state(0.3, 1, 8)
        with pytest.raises(ValueError):
            continuous_dependence(big, big, p, StepperConfig(M=8, dt=1e-3), 0.1)
