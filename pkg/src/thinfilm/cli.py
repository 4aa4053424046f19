"""Command-line front end: certify, run, convergence, oracle.

Configuration files are flat ``key = value`` text with dotted section
prefixes (``params.G = 1.0``), chosen for diffability and trivial parsing.
Reports are ``key: value`` text; trajectory diagnostics and snapshots are
CSV.  All floats are printed in shortest round-trip form and file writes
are whole-file atomic (write then rename).

Exit codes: 0 success, 1 input error, 2 certificate/verification failure,
3 dynamical termination (blowup, theory exit, film touchdown).
"""

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction

import numpy as np

from . import kernels
from .certificate import Certificate, _certify_values, certify
from .diagnostics import verify_decay
from .errors import ConfigError, ThinFilmError
from .integrator import Safety, StepperConfig, Trajectory, integrate
from .model import PhysParams, State, nonlinear_f, nonlinear_theta
from .spectral import (
    GridSamples,
    SpectralField,
    cosine,
    from_samples,
    multiply,
    next_pow2,
    project,
    sine,
    to_samples,
    wiener_norm,
    zero_field,
)
from .errors import HalfWidthUnsupported

__all__ = [
    "RunConfig",
    "parse_config",
    "load_config",
    "render_config",
    "even_extend",
    "cmd_certify",
    "cmd_run",
    "cmd_convergence",
    "cmd_oracle",
    "main",
]

DIAGNOSTICS_HEADER = "time,E00,E22,E42,mass_f,mass_theta,min_h,linf_f,linf_theta"


# ---------------------------------------------------------------------------
# config model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialData:
    """One of: the built-in oscillatory family, explicit modes, samples."""

    kind: str                                  # remark | modes | samples
    mu: float = 1e-3
    wavenumber: int = 1000
    f_modes: tuple = ()                        # (k, re, im) triples, k >= 1
    theta_modes: tuple = ()
    f_samples: tuple = ()
    theta_samples: tuple = ()

    def build(self, M: int) -> State:
        if self.kind == "remark":
            if M < self.wavenumber:
                raise ConfigError(
                    f"stepper.M = {M} cannot hold wavenumber {self.wavenumber}")
            return State(sine(self.wavenumber, self.mu, max_mode=M),
                         cosine(self.wavenumber, self.mu, max_mode=M))
        if self.kind == "modes":
            return State(_field_from_modes(self.f_modes, M),
                         _field_from_modes(self.theta_modes, M))
        if self.kind == "samples":
            return State(_field_from_samples(self.f_samples, M),
                         _field_from_samples(self.theta_samples, M))
        raise ConfigError(f"unknown initial kind {self.kind!r}")

    def exact_e0(self, raw: dict) -> Fraction | None:
        """E00(0) as an exact rational when the inputs allow it."""
        if self.kind == "remark":
            mu = _exact(raw.get("initial.mu", "0.001"))
            return 2 * mu if mu is not None else None
        if self.kind == "modes":
            total = Fraction(0)
            for key in ("initial.f_modes", "initial.theta_modes"):
                for part in _split_list(raw.get(key, "")):
                    _, re_s, im_s = (x.strip() for x in part.split(":"))
                    re_f, im_f = _exact(re_s), _exact(im_s)
                    if re_f is None or im_f is None:
                        return None
                    if re_f != 0 and im_f != 0:
                        return None       # |re + i im| is irrational in general
                    total += 2 * abs(re_f if im_f == 0 else im_f)
            return total
        return None


def _field_from_modes(modes, M: int) -> SpectralField:
    c = np.zeros(2 * M + 1, dtype=np.complex128)
    for k, re_, im_ in modes:
        if not (1 <= k <= M):
            raise ConfigError(f"mode {k} outside 1..{M}")
        c[M + k] += re_ + 1j * im_
        c[M - k] += re_ - 1j * im_
    return SpectralField(M, c)


def _field_from_samples(samples, M: int) -> SpectralField:
    if not samples:
        return zero_field(M)
    vals = np.asarray(samples, dtype=np.float64)
    # samples describe the perturbation; drop any residual mean
    g = GridSamples(vals - float(np.mean(vals)))
    m_native = (g.n_points - 1) // 2
    return project(from_samples(g, min(M, m_native)), M)


@dataclass(frozen=True)
class Outputs:
    diagnostics_path: str | None = None
    snapshots_path: str | None = None
    snapshot_stride: int = 1
    report_path: str | None = None
    record_every: int = 1


@dataclass(frozen=True)
class RunConfig:
    params: PhysParams
    initial: InitialData
    stepper: StepperConfig
    t_end: float
    outputs: Outputs = field(default_factory=Outputs)
    decay_tol: float = 1e-3
    raw: dict = field(default_factory=dict, compare=False)

    def initial_state(self) -> State:
        return self.initial.build(self.stepper.M)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines into {key: (value, lineno)}."""
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError("empty key or value", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        entries[key] = (value, lineno)
    return entries


_KNOWN_KEYS = {
    "params.G", "params.S", "params.A", "params.D",
    "params.h_mean", "params.gamma_mean",
    "initial.family", "initial.mu", "initial.wavenumber",
    "initial.f_modes", "initial.theta_modes",
    "initial.f_samples", "initial.theta_samples",
    "stepper.M", "stepper.dt", "stepper.scheme", "stepper.nonlinear_form",
    "stepper.series_terms", "stepper.linear_only",
    "stepper.max_steps", "stepper.blowup_norm_cap",
    "stepper.adapt", "stepper.adapt_tol", "stepper.dt_min",
    "t_end", "run.decay_tol",
    "outputs.diagnostics_path", "outputs.snapshots_path",
    "outputs.snapshot_stride", "outputs.report_path", "outputs.record_every",
}


def _take(entries, key, default=None, required=False):
    if key in entries:
        return entries[key]
    if required:
        raise ConfigError(f"missing required key {key!r}")
    return (default, None)


def _float(pair, key):
    value, lineno = pair
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}", lineno)


def _int(pair, key):
    value, lineno = pair
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}", lineno)


def _bool(pair, key):
    value, lineno = pair
    low = str(value).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {value!r}", lineno)


def _split_list(text: str):
    return [p for p in (s.strip() for s in text.split(",")) if p]


def _exact(raw) -> Fraction | None:
    if raw is None:
        return None
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return Fraction(Decimal(raw))
    except (InvalidOperation, ValueError):
        return None


def build_run_config(entries: dict) -> RunConfig:
    for key, (_, lineno) in entries.items():
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
    raw = {k: v for k, (v, _) in entries.items()}

    try:
        params = PhysParams(
            G=_float(_take(entries, "params.G", required=True), "params.G"),
            S=_float(_take(entries, "params.S", "0"), "params.S"),
            A=_float(_take(entries, "params.A", "0"), "params.A"),
            D=_float(_take(entries, "params.D", required=True), "params.D"),
            h_mean=_float(_take(entries, "params.h_mean", required=True),
                          "params.h_mean"),
            gamma_mean=_float(_take(entries, "params.gamma_mean", required=True),
                              "params.gamma_mean"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid parameters: {exc}")

    sources = []
    if "initial.family" in entries:
        sources.append("family")
    if "initial.f_modes" in entries or "initial.theta_modes" in entries:
        sources.append("modes")
    if "initial.f_samples" in entries or "initial.theta_samples" in entries:
        sources.append("samples")
    if len(sources) != 1:
        raise ConfigError(
            f"exactly one initial-data source required, found {sources or 'none'}")

    if sources[0] == "family":
        family, lineno = _take(entries, "initial.family")
        if family != "remark":
            raise ConfigError(f"unknown family {family!r}", lineno)
        initial = InitialData(
            kind="remark",
            mu=_float(_take(entries, "initial.mu", "0.001"), "initial.mu"),
            wavenumber=_int(_take(entries, "initial.wavenumber", "1000"),
                            "initial.wavenumber"),
        )
    elif sources[0] == "modes":
        initial = InitialData(
            kind="modes",
            f_modes=_parse_modes(entries, "initial.f_modes"),
            theta_modes=_parse_modes(entries, "initial.theta_modes"),
        )
    else:
        initial = InitialData(
            kind="samples",
            f_samples=_parse_samples(entries, "initial.f_samples"),
            theta_samples=_parse_samples(entries, "initial.theta_samples"),
        )

    safety = Safety(
        max_steps=_int(_take(entries, "stepper.max_steps", "10000000"),
                       "stepper.max_steps"),
        blowup_norm_cap=(None if "stepper.blowup_norm_cap" not in entries
                         else _float(entries["stepper.blowup_norm_cap"],
                                     "stepper.blowup_norm_cap")),
        adapt=_bool(_take(entries, "stepper.adapt", "false"), "stepper.adapt"),
        adapt_tol=_float(_take(entries, "stepper.adapt_tol", "1e-8"),
                         "stepper.adapt_tol"),
        dt_min=(None if "stepper.dt_min" not in entries
                else _float(entries["stepper.dt_min"], "stepper.dt_min")),
    )
    try:
        stepper = StepperConfig(
            M=_int(_take(entries, "stepper.M", required=True), "stepper.M"),
            dt=_float(_take(entries, "stepper.dt", required=True), "stepper.dt"),
            scheme=_take(entries, "stepper.scheme", "imex_cn_ab2")[0],
            nonlinear_form=_take(entries, "stepper.nonlinear_form", "closed")[0],
            series_terms=(None if "stepper.series_terms" not in entries
                          else _int(entries["stepper.series_terms"],
                                    "stepper.series_terms")),
            linear_only=_bool(_take(entries, "stepper.linear_only", "false"),
                              "stepper.linear_only"),
            safety=safety,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid stepper: {exc}")

    outputs = Outputs(
        diagnostics_path=_take(entries, "outputs.diagnostics_path")[0],
        snapshots_path=_take(entries, "outputs.snapshots_path")[0],
        snapshot_stride=_int(_take(entries, "outputs.snapshot_stride", "1"),
                             "outputs.snapshot_stride"),
        report_path=_take(entries, "outputs.report_path")[0],
        record_every=_int(_take(entries, "outputs.record_every", "1"),
                          "outputs.record_every"),
    )
    return RunConfig(
        params=params,
        initial=initial,
        stepper=stepper,
        t_end=_float(_take(entries, "t_end", required=True), "t_end"),
        outputs=outputs,
        decay_tol=_float(_take(entries, "run.decay_tol", "1e-3"),
                         "run.decay_tol"),
        raw=raw,
    )


def _parse_modes(entries, key):
    value, lineno = _take(entries, key, "")
    modes = []
    for part in _split_list(value or ""):
        bits = part.split(":")
        if len(bits) != 3:
            raise ConfigError(f"{key}: expected k:re:im, got {part!r}", lineno)
        try:
            modes.append((int(bits[0]), float(bits[1]), float(bits[2])))
        except ValueError:
            raise ConfigError(f"{key}: bad mode {part!r}", lineno)
    return tuple(modes)


def _parse_samples(entries, key):
    value, lineno = _take(entries, key, "")
    try:
        vals = tuple(float(v) for v in _split_list(value or ""))
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated reals", lineno)
    if vals and (len(vals) & (len(vals) - 1)):
        raise ConfigError(f"{key}: sample count must be a power of two", lineno)
    return vals


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    return build_run_config(parse_config(text))


def render_config(cfg: RunConfig) -> str:
    """Canonical text form; parsing it reproduces the same run."""
    lines = []
    p = cfg.params
    for name, val in (("G", p.G), ("S", p.S), ("A", p.A), ("D", p.D),
                      ("h_mean", p.h_mean), ("gamma_mean", p.gamma_mean)):
        lines.append(f"params.{name} = {_fmt(val)}")
    ini = cfg.initial
    if ini.kind == "remark":
        lines.append("initial.family = remark")
        lines.append(f"initial.mu = {cfg.raw.get('initial.mu', _fmt(ini.mu))}")
        lines.append(f"initial.wavenumber = {ini.wavenumber}")
    elif ini.kind == "modes":
        for key, modes in (("f_modes", ini.f_modes),
                           ("theta_modes", ini.theta_modes)):
            if modes:
                body = ", ".join(f"{k}:{_fmt(re_)}:{_fmt(im_)}"
                                 for k, re_, im_ in modes)
                lines.append(f"initial.{key} = {body}")
    else:
        for key, vals in (("f_samples", ini.f_samples),
                          ("theta_samples", ini.theta_samples)):
            if vals:
                lines.append(f"initial.{key} = "
                             + ", ".join(_fmt(v) for v in vals))
    st = cfg.stepper
    lines.append(f"stepper.M = {st.M}")
    lines.append(f"stepper.dt = {_fmt(st.dt)}")
    lines.append(f"stepper.scheme = {st.scheme}")
    lines.append(f"stepper.nonlinear_form = {st.nonlinear_form}")
    if st.series_terms is not None:
        lines.append(f"stepper.series_terms = {st.series_terms}")
    if st.linear_only:
        lines.append("stepper.linear_only = true")
    sf = st.safety
    lines.append(f"stepper.max_steps = {sf.max_steps}")
    if sf.blowup_norm_cap is not None:
        lines.append(f"stepper.blowup_norm_cap = {_fmt(sf.blowup_norm_cap)}")
    if sf.adapt:
        lines.append("stepper.adapt = true")
        lines.append(f"stepper.adapt_tol = {_fmt(sf.adapt_tol)}")
    if sf.dt_min is not None:
        lines.append(f"stepper.dt_min = {_fmt(sf.dt_min)}")
    lines.append(f"t_end = {_fmt(cfg.t_end)}")
    lines.append(f"run.decay_tol = {_fmt(cfg.decay_tol)}")
    o = cfg.outputs
    for name, val in (("diagnostics_path", o.diagnostics_path),
                      ("snapshots_path", o.snapshots_path),
                      ("report_path", o.report_path)):
        if val:
            lines.append(f"outputs.{name} = {val}")
    lines.append(f"outputs.snapshot_stride = {o.snapshot_stride}")
    lines.append(f"outputs.record_every = {o.record_every}")
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


# ---------------------------------------------------------------------------
# reflection helper
# ---------------------------------------------------------------------------

def even_extend(samples, n: int, half_width: float = math.pi) -> GridSamples:
    """Reflect samples on [0, pi] to an even periodic grid on [-pi, pi).

    ``samples`` holds n//2 + 1 values at x_i = i pi / (n/2), endpoints
    included.  Only the half-width pi is supported: the rescaling of the
    decay constants for other interval lengths is not defined here.
    """
    if not math.isclose(half_width, math.pi, rel_tol=1e-12):
        raise HalfWidthUnsupported(
            f"only half-width pi is supported, got {half_width}")
    vals = np.asarray(samples, dtype=np.float64)
    if n < 2 or n & (n - 1):
        raise ValueError("n must be a power of two >= 2")
    m = n // 2
    if vals.shape[0] != m + 1:
        raise ValueError(f"need {m + 1} samples on [0, pi] for n = {n}")
    j = np.arange(n)
    return GridSamples(vals[np.abs(j - m)])


# ---------------------------------------------------------------------------
# report and file helpers
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _report_text(pairs) -> str:
    return "".join(f"{k}: {v}\n" for k, v in pairs)


def _emit_report(path, pairs, stream):
    text = _report_text(pairs)
    if path:
        _atomic_write(path, text)
    else:
        stream.write(text)


def _certificate_pairs(cert: Certificate, exact_e0: Fraction | None):
    pairs = [("regime", cert.regime), ("E0", _fmt(cert.E0))]
    for name in ("frak_c1", "frak_c2", "frak_c3", "lambda1_0", "lambda2_0",
                 "lambda3", "gamma1", "gamma2", "gamma3", "delta"):
        val = getattr(cert, name)
        if val is None:
            continue
        pairs.append((name, _fmt(float(val))))
    for hyp in cert.hypotheses:
        status = "pass" if hyp.passed else "fail"
        pairs.append((f"hypothesis.{hyp.name}",
                      f"{status} margin={_fmt(hyp.margin)}"))
    pairs.append(("certified", str(cert.passed).lower()))
    if not cert.passed:
        pairs.append(("failing", ",".join(cert.failing())))
    if exact_e0 is not None:
        p = cert.params
        exact_params = tuple(_exact(_fmt(v)) for v in
                             (p.G, p.S, p.A, p.D, p.h_mean, p.gamma_mean))
        if all(v is not None for v in exact_params):
            values, _ = _certify_values(exact_params, exact_e0)
            for name in ("E0", "frak_c1", "frak_c2", "frak_c3", "lambda1_0",
                         "lambda2_0", "lambda3", "gamma1", "gamma2", "gamma3",
                         "delta"):
                val = values[name]
                if val is None or isinstance(val, float):
                    continue
                pairs.append((f"{name}_exact", str(Fraction(val))))
    return pairs


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_certify(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    s0 = cfg.initial_state()
    cert = certify(s0.f, s0.theta, cfg.params)
    pairs = _certificate_pairs(cert, cfg.initial.exact_e0(cfg.raw))
    _emit_report(cfg.outputs.report_path, pairs, stream)
    return 0 if cert.passed else 2


def _write_diagnostics_csv(path: str, traj: Trajectory) -> None:
    d = traj.diagnostics
    lines = [DIAGNOSTICS_HEADER]
    for i in range(len(d)):
        lines.append(",".join(_fmt(float(col[i])) for col in (
            d.time, d.E00, d.E22, d.E42, d.mass_f, d.mass_theta,
            d.min_h, d.linf_f, d.linf_theta)))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_snapshots(dirpath: str, traj: Trajectory, stride: int,
                     p: PhysParams) -> None:
    n = next_pow2(4 * (2 * traj.config.M + 1))
    for idx, s in enumerate(traj.states):
        if idx % stride and idx != len(traj.states) - 1:
            continue
        xs = to_samples(s.f, n)
        gs = to_samples(s.theta, n)
        lines = ["x,h,Gamma"]
        for x, hv, gv in zip(xs.x(), p.h_mean + xs.values,
                             p.gamma_mean + gs.values):
            lines.append(f"{_fmt(float(x))},{_fmt(float(hv))},{_fmt(float(gv))}")
        _atomic_write(os.path.join(dirpath, f"snapshot_{idx:06d}.csv"),
                      "\n".join(lines) + "\n")


def cmd_run(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    s0 = cfg.initial_state()
    cert = certify(s0.f, s0.theta, cfg.params)
    traj = integrate(s0, cfg.params, cfg.stepper, cfg.t_end,
                     cfg.outputs.record_every)
    if cfg.outputs.diagnostics_path:
        _write_diagnostics_csv(cfg.outputs.diagnostics_path, traj)
    if cfg.outputs.snapshots_path:
        _write_snapshots(cfg.outputs.snapshots_path, traj,
                         cfg.outputs.snapshot_stride, cfg.params)
    pairs = [
        ("termination", traj.termination.kind),
        ("reason", traj.termination.reason),
        ("steps", str(traj.termination.steps)),
        ("t_final", _fmt(float(traj.diagnostics.time[-1]))),
        ("E00_initial", _fmt(float(traj.diagnostics.E00[0]))),
        ("E00_final", _fmt(float(traj.diagnostics.E00[-1]))),
    ]
    pairs += [(f"certificate.{k}", v) for k, v in
              _certificate_pairs(cert, cfg.initial.exact_e0(cfg.raw))]
    if cert.passed and traj.completed:
        rep = verify_decay(traj, cert, cfg.decay_tol)
        pairs += [
            ("decay.delta_certified", _fmt(rep.delta_certified)),
            ("decay.delta_fitted", _fmt(rep.delta_fitted)),
            ("decay.bound_satisfied", str(rep.bound_satisfied).lower()),
            ("decay.max_violation", _fmt(rep.max_violation)),
            ("decay.tol", _fmt(rep.tol)),
        ]
    _emit_report(cfg.outputs.report_path, pairs, stream)
    return 0 if traj.completed else 3


def cmd_convergence(cfg: RunConfig, levels: int, stream=None) -> int:
    stream = stream or sys.stdout
    if levels < 2:
        raise ConfigError("convergence needs at least 2 levels")
    runs = []
    for i in range(levels):
        st = StepperConfig(
            M=cfg.stepper.M * 2 ** i,
            dt=cfg.stepper.dt / 2 ** i,
            scheme=cfg.stepper.scheme,
            nonlinear_form=cfg.stepper.nonlinear_form,
            series_terms=cfg.stepper.series_terms,
            linear_only=cfg.stepper.linear_only,
            safety=cfg.stepper.safety,
        )
        s0 = cfg.initial.build(st.M)
        traj = integrate(s0, cfg.params, st, cfg.t_end,
                         max(1, cfg.outputs.record_every))
        if not traj.completed:
            stream.write(f"level {i} terminated: {traj.termination.kind}\n")
            return 3
        runs.append((st, traj.final_state))
    stream.write("level,M,dt,diff_A0,order\n")
    prev_diff = None
    for i in range(1, levels):
        coarse, fine = runs[i - 1][1], runs[i][1]
        m = max(coarse.max_mode, fine.max_mode)
        diff = (wiener_norm(project(fine.f, m) - project(coarse.f, m), 0.0)
                + wiener_norm(project(fine.theta, m)
                              - project(coarse.theta, m), 0.0))
        order = (math.log2(prev_diff / diff)
                 if prev_diff not in (None, 0.0) and diff > 0 else math.nan)
        st = runs[i][0]
        stream.write(f"{i},{st.M},{_fmt(st.dt)},{_fmt(diff)},{_fmt(order)}\n")
        prev_diff = diff
    return 0


def _random_meanfree(rng, M: int, scale: float) -> SpectralField:
    c = rng.standard_normal(2 * M + 1) + 1j * rng.standard_normal(2 * M + 1)
    c = 0.5 * (c + np.conj(c[::-1]))
    c[M] = 0.0
    f = SpectralField(M, c)
    norm = wiener_norm(f, 0.0)
    return f * (scale / norm) if norm > 0 else f


def cmd_oracle(seed: int = 0, tolerance_scale: float = 1.0,
               stream=None) -> int:
    """Cross-checks: multiply paths, nonlinear paths, series vs closed."""
    stream = stream or sys.stdout
    rng = np.random.default_rng(seed)
    failures = 0

    worst_mult = 0.0
    for _ in range(25):
        ma = int(rng.integers(1, 65))
        mb = int(rng.integers(1, 65))
        a = _random_meanfree(rng, ma, 1.0)
        b = _random_meanfree(rng, mb, 1.0)
        M = int(rng.integers(0, ma + mb + 4))
        pg = multiply(a, b, M, path="grid")
        pc = multiply(a, b, M, path="conv")
        scale = max(wiener_norm(pg, 0.0), 1e-30)
        worst_mult = max(worst_mult, wiener_norm(pg - pc, 0.0) / scale)
    ok = worst_mult <= 1e-12 * tolerance_scale
    failures += not ok
    stream.write(f"multiply conv-vs-grid: worst {_fmt(worst_mult)} "
                 f"tol {_fmt(1e-12 * tolerance_scale)} "
                 f"{'ok' if ok else 'FAIL'}\n")

    p = PhysParams(G=1.2, S=0.7, A=0.4, D=1.1, h_mean=1.3, gamma_mean=0.5)
    worst_nl = 0.0
    for _ in range(6):
        s = State(_random_meanfree(rng, 16, 0.3 * p.h_mean),
                  _random_meanfree(rng, 16, 0.15 * p.h_mean))
        for M in (8, 16, 24):
            for op in (nonlinear_f, nonlinear_theta):
                g = op(s, p, M, form="series", series_terms=12, path="grid")
                c = op(s, p, M, form="series", series_terms=12, path="conv")
                scale = max(wiener_norm(g, 0.0), 1e-30)
                worst_nl = max(worst_nl, wiener_norm(g - c, 0.0) / scale)
    ok = worst_nl <= 1e-12 * tolerance_scale
    failures += not ok
    stream.write(f"nonlinear conv-vs-grid: worst {_fmt(worst_nl)} "
                 f"tol {_fmt(1e-12 * tolerance_scale)} "
                 f"{'ok' if ok else 'FAIL'}\n")

    worst_sc = 0.0
    if p.A > 0:
        for _ in range(4):
            s = State(_random_meanfree(rng, 24, 0.35 * p.h_mean),
                      _random_meanfree(rng, 24, 0.15 * p.h_mean))
            for op in (nonlinear_f, nonlinear_theta):
                cl = op(s, p, 24, form="closed")
                se = op(s, p, 24, form="series", series_terms=64)
                worst_sc = max(worst_sc, wiener_norm(se - cl, 0.0))
    ok = worst_sc <= 1e-8 * tolerance_scale
    failures += not ok
    stream.write(f"series(64) vs closed: worst {_fmt(worst_sc)} "
                 f"tol {_fmt(1e-8 * tolerance_scale)} "
                 f"{'ok' if ok else 'FAIL'}\n")

    stream.write(f"oracle: {'all ok' if failures == 0 else f'{failures} FAILED'}\n")
    return 0 if failures == 0 else 2


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thinfilm",
        description="Spectral thin-film-with-surfactant simulator and "
                    "decay-certificate toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("certify", "run"):
        sp_ = sub.add_parser(name)
        sp_.add_argument("config")
    sp_ = sub.add_parser("convergence")
    sp_.add_argument("config")
    sp_.add_argument("--levels", type=int, default=3)
    sp_ = sub.add_parser("oracle")
    sp_.add_argument("--seed", type=int, default=0)
    sp_.add_argument("--tolerance-scale", type=float, default=1.0)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = os.environ.get("THINFILM_THREADS")
    if threads:
        try:
            kernels.set_thread_cap(int(threads))
        except ValueError:
            print(f"invalid THINFILM_THREADS={threads!r}", file=sys.stderr)
            return 1
    try:
        if args.command == "oracle":
            return cmd_oracle(args.seed, args.tolerance_scale)
        cfg = load_config(args.config)
        if args.command == "certify":
            return cmd_certify(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "convergence":
            return cmd_convergence(cfg, args.levels)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ThinFilmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
