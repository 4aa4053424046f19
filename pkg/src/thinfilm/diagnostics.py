"""Verification of simulated trajectories against certificates.

Implements the energy functionals, the exponential decay-bound check, the
discrete dissipation-inequality check, strong and weak residuals of the
evolution system, and the continuous-dependence (Gronwall) experiment.
"""

import math
from dataclasses import dataclass

import numpy as np

from .certificate import Certificate, certify
from .errors import CertificateMismatch, InsufficientSamples
from .integrator import StepperConfig, Trajectory, integrate
from .model import PhysParams, State, linear_symbol_arrays, nonlinear_half, rhs
from .spectral import wiener_norm

__all__ = [
    "energy",
    "DecayReport",
    "verify_decay",
    "DissipationReport",
    "verify_dissipation",
    "strong_residual",
    "weak_residual",
    "DependenceReport",
    "continuous_dependence",
]


def energy(s: State, r: float, sq: float) -> float:
    """The two-index energy |f|_{A^r} + |theta|_{A^sq}."""
    return wiener_norm(s.f, r) + wiener_norm(s.theta, sq)


# ---------------------------------------------------------------------------
# decay bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    delta_certified: float
    delta_fitted: float
    bound_satisfied: bool
    max_violation: float
    tol: float


def _check_match(traj: Trajectory, cert: Certificate):
    if cert.params != traj.params:
        raise CertificateMismatch("certificate and trajectory parameters differ")
    e0 = traj.diagnostics.E00[0]
    if abs(cert.E0 - e0) > 1e-9 * (1.0 + cert.E0):
        raise CertificateMismatch(
            f"certificate E0 = {cert.E0} vs trajectory E00(0) = {e0}")


def _fit_decay_rate(times: np.ndarray, e00: np.ndarray) -> float:
    """Least-squares slope of log E00 over the trailing half; +inf if the
    energy has already hit exact zero there (decay faster than any rate)."""
    t_mid = 0.5 * (times[0] + times[-1])
    sel = (times >= t_mid) & (e00 > 0.0)
    if np.count_nonzero(sel) < 2:
        return math.inf
    t = times[sel]
    y = np.log(e00[sel])
    slope = np.polyfit(t, y, 1)[0]
    return float(-slope)


def verify_decay(traj: Trajectory, cert: Certificate, tol: float) -> DecayReport:
    """Check E00(t) and the grid sup norms against E00(0) e^(-delta t).

    The certified rate is a lower bound on the true decay, so the fitted
    rate is reported for the caller to compare with delta; the pass flag
    reflects only the bound violation.
    """
    if not cert.passed:
        raise ValueError("verify_decay needs a passing certificate")
    if not traj.completed:
        raise ValueError(f"trajectory terminated: {traj.termination.kind}")
    _check_match(traj, cert)
    d = traj.diagnostics
    t = d.time - d.time[0]
    envelope = d.E00[0] * np.exp(-cert.delta * t)
    sup = d.linf_f + d.linf_theta
    viol = np.full(t.shape, -1.0)
    pos = envelope > 0.0
    viol[pos] = np.maximum(d.E00[pos], sup[pos]) / envelope[pos] - 1.0
    if np.any(~pos):
        # zero initial energy: the bound degenerates to E00(t) = 0
        viol[~pos] = np.where(np.maximum(d.E00[~pos], sup[~pos]) > 0.0,
                              math.inf, 0.0)
    max_violation = float(np.max(viol))
    return DecayReport(
        delta_certified=cert.delta,
        delta_fitted=_fit_decay_rate(d.time, d.E00),
        bound_satisfied=bool(max_violation <= tol),
        max_violation=max_violation,
        tol=tol,
    )


# ---------------------------------------------------------------------------
# dissipation inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DissipationReport:
    passed: bool
    max_excess: float         # worst (slope - allowed bound); <= 0 passes
    n_pairs: int
    tol: float


def verify_dissipation(traj: Trajectory, cert: Certificate,
                       tol: float) -> DissipationReport:
    """Discrete energy-production check between recorded times.

    Each forward difference of E00 must lie below the certified
    dissipation -delta E22 (plus the capillary -gamma3 |f|_{A^4} term when
    S > 0), relaxed multiplicatively by tol and with an additive floor
    tol * E00(0) to absorb discretization noise near equilibrium.
    """
    _check_match(traj, cert)
    d = traj.diagnostics
    if len(d) < 10:
        raise InsufficientSamples(f"{len(d)} samples recorded, need >= 10")
    dt = np.diff(d.time)
    slope = np.diff(d.E00) / dt
    dissip = cert.delta * d.E22[:-1]
    if cert.regime == "capillary":
        dissip = dissip + cert.gamma3 * d.a4_f[:-1]
    bound = -dissip * (1.0 - tol) + tol * d.E00[0]
    excess = slope - bound
    return DissipationReport(
        passed=bool(np.all(excess <= 0.0)),
        max_excess=float(np.max(excess)),
        n_pairs=int(len(d) - 1),
        tol=tol,
    )


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def _stride1_states(traj: Trajectory, dt: float):
    states = traj.states
    if len(states) < 3:
        raise InsufficientSamples("need at least 3 recorded states")
    times = np.array([s.time for s in states])
    gaps = np.diff(times)
    if np.max(np.abs(gaps - dt)) > 1e-9 * dt:
        raise InsufficientSamples("states are not recorded at stride 1")
    return states


def strong_residual(traj: Trajectory, p: PhysParams,
                    cfg: StepperConfig) -> float:
    """Max defect of the strong form over the recorded window.

    The time derivative is estimated by central differences of the
    recorded coefficients and compared with the assembled right-hand side
    at the middle state; both carry O(dt^2) errors, so the defect must
    shrink at the scheme's order under dt refinement.
    """
    states = _stride1_states(traj, cfg.dt)
    worst = 0.0
    for i in range(1, len(states) - 1):
        sm, s0, sp_ = states[i - 1], states[i], states[i + 1]
        dot_f = (sp_.f - sm.f) * (0.5 / cfg.dt)
        dot_t = (sp_.theta - sm.theta) * (0.5 / cfg.dt)
        if cfg.linear_only:
            fh, thh = s0.f.half(), s0.theta.half()
            k = np.arange(cfg.M + 1)
            L00, L01, L10, L11 = linear_symbol_arrays(p, k)
            rf = L00 * fh + L01 * thh
            rt = L10 * fh + L11 * thh
            res = (abs(dot_f.coeff(0) - rf[0].real)
                   + 2.0 * np.sum(np.abs(dot_f.half()[1:] - rf[1:]))
                   + abs(dot_t.coeff(0) - rt[0].real)
                   + 2.0 * np.sum(np.abs(dot_t.half()[1:] - rt[1:])))
            worst = max(worst, float(res))
            continue
        df, dth = rhs(s0, p, cfg.M, cfg.nonlinear_form, cfg.J)
        res = wiener_norm(dot_f - df, 0.0) + wiener_norm(dot_t - dth, 0.0)
        worst = max(worst, res)
    return worst


def _bump(t: np.ndarray, T: float):
    """The fixed polynomial time bump w and its derivative on [0, T]."""
    u = 2.0 * t / T - 1.0
    q = 1.0 - u * u
    return q ** 3, -12.0 * u * q * q / T


def weak_residual(traj: Trajectory, p: PhysParams, n_test: int) -> float:
    """Max defect of the two weak-form identities over separable tests.

    Test functions are w(t) e^{ikx} for |k| <= n_test with the fixed
    polynomial bump w vanishing at both ends; time integrals use the
    trapezoid rule over the recorded states.  Defects are reported per
    unit 2*pi (coefficient normalization).
    """
    if not traj.completed:
        raise ValueError(f"trajectory terminated: {traj.termination.kind}")
    states = traj.states
    if len(states) < 3:
        raise InsufficientSamples("need at least 3 recorded states")
    cfg = traj.config
    if n_test > cfg.M:
        raise ValueError("n_test exceeds the truncation")
    times = np.array([s.time for s in states])
    T = times[-1] - times[0]
    if T <= 0:
        raise InsufficientSamples("zero-length trajectory")
    w, wp = _bump(times - times[0], T)

    n_states = len(states)
    kk = np.arange(n_test + 1)
    fneg = np.empty((n_states, n_test + 1), dtype=np.complex128)
    tneg = np.empty((n_states, n_test + 1), dtype=np.complex128)
    nfneg = np.empty((n_states, n_test + 1), dtype=np.complex128)
    ntneg = np.empty((n_states, n_test + 1), dtype=np.complex128)
    for i, s in enumerate(states):
        fh = s.f.half()
        thh = s.theta.half()
        fneg[i] = np.conj(fh[:n_test + 1])
        tneg[i] = np.conj(thh[:n_test + 1])
        if cfg.linear_only:
            nfneg[i] = 0.0
            ntneg[i] = 0.0
        else:
            nf, nt, _ = nonlinear_half(fh.copy(), thh.copy(), p, cfg.M,
                                       cfg.nonlinear_form, cfg.J)
            nfneg[i] = np.conj(nf[:n_test + 1])
            ntneg[i] = np.conj(nt[:n_test + 1])

    h, gam = p.h_mean, p.gamma_mean
    k2 = kk.astype(float) ** 2
    k4 = k2 * k2
    tz = times - times[0]

    def trap(integrand):
        return np.trapezoid(integrand, tz, axis=0)

    # film-height identity
    lin_f = -k2 * (-(h * h / 2.0) * tneg + (p.A / h - p.G * h ** 3 / 3.0) * fneg)
    cap_f = k4 * (p.S / 3.0) * h ** 3 * fneg
    defect_f = (-w[0] * fneg[0]
                - trap(wp[:, None] * fneg)
                + trap(w[:, None] * (lin_f + cap_f))
                - trap(w[:, None] * nfneg))
    # surfactant identity
    lin_t = -k2 * (-(h * gam + p.D) * tneg
                   + (1.5 * p.A * gam / h ** 2 - 0.5 * p.G * gam * h ** 2) * fneg)
    cap_t = k4 * 0.5 * p.S * gam * h ** 2 * fneg
    defect_t = (-w[0] * tneg[0]
                - trap(wp[:, None] * tneg)
                + trap(w[:, None] * (lin_t + cap_t))
                - trap(w[:, None] * ntneg))
    return float(max(np.max(np.abs(defect_f)), np.max(np.abs(defect_t))))


# ---------------------------------------------------------------------------
# continuous dependence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DependenceReport:
    times: np.ndarray
    separation: np.ndarray
    d0: float
    dT: float
    gronwall_fit: float       # fitted C in d(t) ~ d(0) exp(C t)
    growth_max: float         # max_t d(t)/d(0)
    halving_ratios: tuple[float, ...]


def _separation(ta: Trajectory, tb: Trajectory) -> np.ndarray:
    out = np.empty(len(ta.states))
    for i, (sa, sb) in enumerate(zip(ta.states, tb.states)):
        out[i] = (wiener_norm(sa.f - sb.f, 0.0)
                  + wiener_norm(sa.theta - sb.theta, 0.0))
    return out


def continuous_dependence(s0a: State, s0b: State, p: PhysParams,
                          cfg: StepperConfig, t_end: float,
                          record_every: int = 1,
                          halvings: int = 0) -> DependenceReport:
    """Separation growth between two certified initial states.

    Integrates both states, reports d(t) = E00 of the difference and a
    fitted Gronwall constant; optionally repeats with the initial
    separation halved ``halvings`` times and reports the endpoint ratios
    (each should be about 2 for a well-posed flow).
    """
    for s in (s0a, s0b):
        cert = certify(s.f, s.theta, p)
        if not cert.passed:
            raise ValueError(f"initial state not certified: {cert.failing()}")

    def run(s0):
        traj = integrate(s0, p, cfg, t_end, record_every, state_stride=1)
        if not traj.completed:
            raise ValueError(f"run terminated: {traj.termination.kind}")
        return traj

    base = run(s0a)
    other = run(s0b)
    times = np.array([s.time for s in base.states])
    sep = _separation(base, other)
    d0 = sep[0]
    pos = sep > 0
    if d0 > 0 and np.count_nonzero(pos) >= 2:
        slope = np.polyfit(times[pos], np.log(sep[pos]), 1)[0]
        cfit = float(slope)
    else:
        cfit = 0.0
    ratios = []
    prev_dT = sep[-1]
    db = s0b.f - s0a.f
    dth = s0b.theta - s0a.theta
    for m in range(1, halvings + 1):
        scale = 0.5 ** m
        sm = State(s0a.f + scale * db, s0a.theta + scale * dth, s0a.time)
        tm = run(sm)
        d_m = _separation(base, tm)[-1]
        ratios.append(prev_dT / d_m if d_m > 0 else math.inf)
        prev_dT = d_m
    return DependenceReport(
        times=times,
        separation=sep,
        d0=float(d0),
        dT=float(sep[-1]),
        gronwall_fit=cfit,
        growth_max=float(np.max(sep) / d0) if d0 > 0 else 0.0,
        halving_ratios=tuple(ratios),
    )
