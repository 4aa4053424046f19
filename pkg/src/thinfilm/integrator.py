"""IMEX time integration of the truncated mode system.

The stiff 2x2 linear coupling is treated implicitly mode by mode (the
factored inverses are precomputed once per step size), the nonlinear terms
explicitly.  The default scheme is Crank-Nicolson with Adams-Bashforth-2
extrapolation of the nonlinearity, bootstrapped by one explicit-midpoint
step so second order holds from the first step; a backward/forward Euler
pair is available as a robust fallback.

Runs terminate on blowup, on leaving the validity region of the series
form, or on film touchdown; the outcome is encoded in the Trajectory, not
raised.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import (
    LinearSolveSingular,
    PointwiseDegeneracy,
    SeriesDivergence,
    StepsizeUnderflow,
)
from .model import PhysParams, State, linear_symbol_arrays, nonlinear_half
from .spectral import SpectralField, _full_from_half, _half_to_grid, next_pow2, project

__all__ = [
    "Safety",
    "StepperConfig",
    "DiagnosticsTable",
    "Termination",
    "Trajectory",
    "step",
    "integrate",
    "adapt_dt",
]


@dataclass(frozen=True)
class Safety:
    max_steps: int = 10_000_000
    blowup_norm_cap: float | None = None   # None: 10 (h_mean + gamma_mean)
    adapt: bool = False
    adapt_tol: float = 1e-8
    dt_min: float | None = None            # None: dt / 2**16


@dataclass(frozen=True)
class StepperConfig:
    """Galerkin truncation, step size and scheme selection."""

    M: int
    dt: float
    scheme: str = "imex_cn_ab2"
    nonlinear_form: str = "closed"
    series_terms: int | None = None        # None: M
    linear_only: bool = False              # verification aid: drop nonlinearity
    safety: Safety = field(default_factory=Safety)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if self.scheme not in ("imex_cn_ab2", "imex_euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.nonlinear_form not in ("closed", "series"):
            raise ValueError(f"unknown nonlinear form {self.nonlinear_form!r}")
        if self.series_terms is not None and self.series_terms < 1:
            raise ValueError("series_terms must be >= 1")

    @property
    def J(self) -> int:
        return self.series_terms if self.series_terms is not None else self.M


@dataclass(frozen=True)
class Termination:
    kind: str                 # completed | blowup | theory_exit | degenerate_film
    reason: str
    time: float
    steps: int


@dataclass(frozen=True)
class DiagnosticsTable:
    """Columnar per-recorded-step diagnostics.

    E42 and its film part a4_f are only meaningful in the capillary
    regime and hold NaN when S = 0.
    """

    time: np.ndarray
    E00: np.ndarray
    E22: np.ndarray
    E42: np.ndarray
    mass_f: np.ndarray
    mass_theta: np.ndarray
    min_h: np.ndarray
    linf_f: np.ndarray
    linf_theta: np.ndarray
    a4_f: np.ndarray

    def __len__(self) -> int:
        return self.time.shape[0]


@dataclass(frozen=True)
class Trajectory:
    params: PhysParams
    config: StepperConfig
    states: tuple[State, ...]
    diagnostics: DiagnosticsTable
    termination: Termination

    @property
    def completed(self) -> bool:
        return self.termination.kind == "completed"

    @property
    def final_state(self) -> State:
        return self.states[-1]


# ---------------------------------------------------------------------------
# stepping machinery
# ---------------------------------------------------------------------------

def _half_norm(half: np.ndarray, s: float) -> float:
    k = np.arange(half.shape[0], dtype=np.float64)
    w = k ** s
    a = np.abs(half)
    return float(w[0] * a[0] + 2.0 * np.dot(w[1:], a[1:]))


class _Factors:
    """Per-mode 2x2 solve data for (I - c L) u' = (I + b L) u + dt n."""

    def __init__(self, p: PhysParams, M: int, c: float, b: float):
        k = np.arange(M + 1)
        L00, L01, L10, L11 = linear_symbol_arrays(p, k)
        A00 = 1.0 - c * L00
        A01 = -c * L01
        A10 = -c * L10
        A11 = 1.0 - c * L11
        det = A00 * A11 - A01 * A10
        # relative test: resonance dt = 2/eig(L_k) cancels det to rounding
        scale = np.abs(A00 * A11) + np.abs(A01 * A10) + 1e-30
        bad = np.where(np.abs(det) <= 1e-12 * scale)[0]
        if bad.size:
            raise LinearSolveSingular(int(bad[0]))
        self.Ai00 = A11 / det
        self.Ai01 = -A01 / det
        self.Ai10 = -A10 / det
        self.Ai11 = A00 / det
        self.B00 = 1.0 + b * L00
        self.B01 = b * L01
        self.B10 = b * L10
        self.B11 = 1.0 + b * L11

    def apply(self, fh, thh, nf, nt, dt):
        return kernels.cn_combine(
            fh, thh, self.B00, self.B01, self.B10, self.B11,
            self.Ai00, self.Ai01, self.Ai10, self.Ai11, nf, nt, dt)


class _Stepper:
    """Advances half-spectrum arrays by one step at a fixed dt."""

    def __init__(self, p: PhysParams, cfg: StepperConfig, dt: float):
        self.p = p
        self.cfg = cfg
        self.dt = dt
        M = cfg.M
        if cfg.scheme == "imex_cn_ab2":
            self.full = _Factors(p, M, dt / 2.0, dt / 2.0)
            self.half = _Factors(p, M, dt / 4.0, dt / 4.0)
        else:
            self.full = _Factors(p, M, dt, 0.0)
        self._zero = np.zeros(M + 1, dtype=np.complex128)

    def nonlinear(self, fh, thh):
        if self.cfg.linear_only:
            return self._zero, self._zero, np.inf
        return nonlinear_half(fh, thh, self.p, self.cfg.M,
                              self.cfg.nonlinear_form, self.cfg.J)

    def euler_step(self, fh, thh):
        nf, nt, _ = self.nonlinear(fh, thh)
        f1, t1 = self.full.apply(fh, thh, nf, nt, self.dt)
        return f1, t1

    def bootstrap_step(self, fh, thh, nl=None):
        """Explicit-midpoint IMEX step; also used after dt changes."""
        nf, nt, _ = self.nonlinear(fh, thh) if nl is None else nl
        fm, tm = self.half.apply(fh, thh, nf, nt, self.dt / 2.0)
        nfm, ntm, _ = self.nonlinear(fm, tm)
        f1, t1 = self.full.apply(fh, thh, nfm, ntm, self.dt)
        return f1, t1, (nf, nt)

    def ab2_step(self, fh, thh, nl_prev):
        nf, nt, _ = self.nonlinear(fh, thh)
        exf = 1.5 * nf - 0.5 * nl_prev[0]
        ext = 1.5 * nt - 0.5 * nl_prev[1]
        f1, t1 = self.full.apply(fh, thh, exf, ext, self.dt)
        return f1, t1, (nf, nt)


def _state_to_halves(s: State, M: int):
    f = project(s.f, M)
    th = project(s.theta, M)
    return f.half().copy(), th.half().copy()


def _halves_to_state(fh, thh, t: float) -> State:
    return State(SpectralField(fh.shape[0] - 1, _full_from_half(fh)),
                 SpectralField(thh.shape[0] - 1, _full_from_half(thh)),
                 t)


def step(s: State, p: PhysParams, cfg: StepperConfig) -> State:
    """Advance a single step (first-step bootstrap flavour for CN/AB2)."""
    if s.max_mode != cfg.M:
        raise ValueError("state max_mode must equal cfg.M")
    fh, thh = _state_to_halves(s, cfg.M)
    st = _Stepper(p, cfg, cfg.dt)
    if cfg.scheme == "imex_euler":
        f1, t1 = st.euler_step(fh, thh)
    else:
        f1, t1, _ = st.bootstrap_step(fh, thh)
    return _halves_to_state(f1, t1, s.time + cfg.dt)


# ---------------------------------------------------------------------------
# trajectory driver
# ---------------------------------------------------------------------------

class _Recorder:
    def __init__(self, p: PhysParams, cfg: StepperConfig, state_stride: int):
        self.p = p
        self.capillary = p.S > 0
        self.grid_n = next_pow2(4 * (2 * cfg.M + 1))
        self.state_stride = state_stride
        self.rows = []
        self.states = []
        self._recorded = 0

    def min_h_linf(self, fh, thh):
        vf = _half_to_grid(fh, self.grid_n)
        vt = _half_to_grid(thh, self.grid_n)
        return (self.p.h_mean + float(np.min(vf)),
                float(np.max(np.abs(vf))), float(np.max(np.abs(vt))))

    def record(self, fh, thh, t, force_state=False):
        min_h, linf_f, linf_t = self.min_h_linf(fh, thh)
        if self.capillary:
            a4 = _half_norm(fh, 4.0)
            e42 = a4 + _half_norm(thh, 2.0)
        else:
            a4 = e42 = math.nan
        self.rows.append((
            t,
            _half_norm(fh, 0.0) + _half_norm(thh, 0.0),
            _half_norm(fh, 2.0) + _half_norm(thh, 2.0),
            e42,
            float(fh[0].real), float(thh[0].real),
            min_h, linf_f, linf_t, a4,
        ))
        finite = bool(np.all(np.isfinite(fh)) and np.all(np.isfinite(thh)))
        if finite and (force_state or self._recorded % self.state_stride == 0):
            self.states.append(_halves_to_state(fh, thh, t))
        self._recorded += 1

    def record_if_new(self, fh, thh, t):
        if not self.rows or self.rows[-1][0] < t:
            self.record(fh, thh, t, force_state=True)

    def table(self) -> DiagnosticsTable:
        cols = np.array(self.rows, dtype=np.float64).T
        return DiagnosticsTable(*(np.ascontiguousarray(c) for c in cols))


def _check_state(fh, thh, p, cfg, cap, recorder):
    """Cheap per-step exit tests; returns a Termination or None."""
    e00_f = _half_norm(fh, 0.0)
    e00 = e00_f + _half_norm(thh, 0.0)
    if not np.isfinite(e00):
        return ("blowup", "non-finite coefficients")
    if e00 > cap:
        return ("blowup", f"E00 = {e00:.6g} exceeds cap {cap:.6g}")
    if e00_f >= p.h_mean:
        if cfg.nonlinear_form == "series" and not cfg.linear_only:
            return ("theory_exit",
                    f"|f|_A0 = {e00_f:.6g} >= h_mean; series form invalid")
        min_h, _, _ = recorder.min_h_linf(fh, thh)
        if min_h <= 0.0:
            return ("degenerate_film", f"min h = {min_h:.6g} on grid")
    return None


def integrate(s0: State, p: PhysParams, cfg: StepperConfig, t_end: float,
              record_every: int = 1, *, state_stride: int = 1) -> Trajectory:
    """March from s0 to t_end, recording diagnostics every record_every steps.

    The first and last reached steps are always recorded.  Termination
    conditions end the run early and are reported in the trajectory rather
    than raised.
    """
    if record_every < 1 or state_stride < 1:
        raise ValueError("record_every and state_stride must be >= 1")
    fh, thh = _state_to_halves(s0, cfg.M)
    cap = cfg.safety.blowup_norm_cap
    if cap is None:
        cap = 10.0 * (p.h_mean + p.gamma_mean)
    rec = _Recorder(p, cfg, state_stride)
    rec.record(fh, thh, s0.time, force_state=True)

    bad = _check_state(fh, thh, p, cfg, cap, rec)
    if bad is not None:
        return Trajectory(p, cfg, tuple(rec.states), rec.table(),
                          Termination(bad[0], bad[1], s0.time, 0))

    t0 = s0.time
    span = t_end - t0
    if span <= 0:
        return Trajectory(p, cfg, tuple(rec.states), rec.table(),
                          Termination("completed", "t_end reached", t0, 0))

    # uniform steps, with one trailing partial step if dt does not divide
    # the span; times are computed as t0 + j*dt to avoid accumulation
    n_whole = int(round(span / cfg.dt))
    if not math.isclose(n_whole * cfg.dt, span, rel_tol=1e-9, abs_tol=0.0):
        n_whole = int(span / cfg.dt)
    rem = span - n_whole * cfg.dt
    if rem < 1e-9 * cfg.dt:
        rem = 0.0
    total = n_whole + (1 if rem > 0 else 0)
    if total > cfg.safety.max_steps:
        raise ValueError(f"{total} steps exceed safety.max_steps")

    adaptive = cfg.safety.adapt
    dt_cur = cfg.dt
    steppers = {}

    def stepper_at(dt):
        if dt not in steppers:
            steppers[dt] = _Stepper(p, cfg, dt)
        return steppers[dt]

    nl_prev = None
    prev_dt = None
    t = t0
    j = 0
    term = None
    try:
        while True:
            if adaptive:
                if t >= t_end - 1e-12 * cfg.dt:
                    break
                if j >= cfg.safety.max_steps:
                    raise ValueError("adaptive run exceeded safety.max_steps")
                dt_new = adapt_dt(_halves_to_state(fh, thh, t), p,
                                  replace(cfg, dt=dt_cur), dt_max=cfg.dt)
                dt_cur = dt_new
                dt_step = min(dt_cur, t_end - t)
                last = t + dt_step >= t_end - 1e-12 * cfg.dt
            else:
                if j >= total:
                    break
                dt_step = cfg.dt if j < n_whole else rem
                last = j == total - 1
            st = stepper_at(dt_step)
            if cfg.scheme == "imex_euler":
                fh, thh = st.euler_step(fh, thh)
            elif nl_prev is None or dt_step != prev_dt:
                fh, thh, nl_prev = st.bootstrap_step(fh, thh)
            else:
                fh, thh, nl_prev = st.ab2_step(fh, thh, nl_prev)
            prev_dt = dt_step
            j += 1
            if last:
                t = t_end
            elif adaptive:
                t = t + dt_step
            else:
                t = t0 + j * cfg.dt
            bad = _check_state(fh, thh, p, cfg, cap, rec)
            if bad is not None:
                rec.record(fh, thh, t, force_state=True)
                term = Termination(bad[0], bad[1], t, j)
                break
            if last or j % record_every == 0:
                rec.record(fh, thh, t, force_state=last)
    except PointwiseDegeneracy as exc:
        rec.record_if_new(fh, thh, t)
        term = Termination("degenerate_film", str(exc), t, j)
    except SeriesDivergence as exc:
        rec.record_if_new(fh, thh, t)
        term = Termination("theory_exit", str(exc), t, j)
    except StepsizeUnderflow as exc:
        rec.record_if_new(fh, thh, t)
        term = Termination("blowup", f"stepsize underflow: {exc}", t, j)

    if term is None:
        term = Termination("completed", "t_end reached", t, j)
    return Trajectory(p, cfg, tuple(rec.states), rec.table(), term)


def adapt_dt(s: State, p: PhysParams, cfg: StepperConfig,
             dt_max: float | None = None) -> float:
    """Step-doubling control: compare one dt step with two dt/2 steps.

    The error estimate is the difference of the resulting energies E00;
    dt halves when it exceeds adapt_tol, doubles when it is below
    adapt_tol/16, and is clamped to [dt_min, dt_max].
    """
    if not cfg.safety.adapt:
        raise ValueError("adapt_dt requires cfg.safety.adapt")
    dt = cfg.dt
    top = dt_max if dt_max is not None else cfg.dt
    dt_min = cfg.safety.dt_min
    if dt_min is None:
        dt_min = top / 2 ** 16
    fh, thh = _state_to_halves(s, cfg.M)

    def advance(stepper, f, th):
        if cfg.scheme == "imex_euler":
            return stepper.euler_step(f, th)
        f1, t1, _ = stepper.bootstrap_step(f, th)
        return f1, t1

    f1, t1 = advance(_Stepper(p, cfg, dt), fh, thh)
    half = _Stepper(p, cfg, dt / 2.0)
    f2, t2 = advance(half, fh, thh)
    f2, t2 = advance(half, f2, t2)
    err = abs((_half_norm(f1, 0.0) + _half_norm(t1, 0.0))
              - (_half_norm(f2, 0.0) + _half_norm(t2, 0.0)))

    tol = cfg.safety.adapt_tol
    if err > tol:
        if dt <= dt_min * (1.0 + 1e-12):
            raise StepsizeUnderflow(
                f"error {err:.3e} > {tol:.3e} at dt_min = {dt_min:.3e}")
        return max(dt / 2.0, dt_min)
    if err < tol / 16.0:
        return min(2.0 * dt, top)
    return dt
