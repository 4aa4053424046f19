"""Smallness constants and guaranteed-decay certificates.

Evaluates the explicit constants attached to the two global-existence
results (gravity regime S = 0, capillary regime S > 0), decides whether
given initial data earn a guaranteed exponential decay towards the flat
state, and reports the decay rate delta together with per-hypothesis
margins.

The formula helpers are written against plain arithmetic so they accept
floats as well as fractions.Fraction; the CLI uses the latter to print
exact rationals next to the decimals.
"""

from dataclasses import dataclass

from .errors import EnergyTooLarge, NonZeroMean, NoPositiveAmplitude
from .model import PhysParams
from .spectral import SpectralField, is_mean_free, wiener_norm

__all__ = [
    "Certificate",
    "Hypothesis",
    "frak_constants",
    "lambda1",
    "lambda2",
    "lambda3",
    "certify",
    "max_amplitude",
]


# ---------------------------------------------------------------------------
# the printed formulas, over any ordered field
# ---------------------------------------------------------------------------

def _frak1(G, S, A, D, h, gam):
    return G * h ** 3 / 3 - A / h - abs(3 * A * gam / (2 * h ** 2) - gam * h ** 2 * G / 2)


def _frak2(G, S, A, D, h, gam):
    return h * gam + D - h ** 2 / 2


def _frak3(G, S, A, D, h, gam):
    return S * h ** 3 / 3 - gam * h ** 2 * S / 2


def _lambda1(G, S, A, D, h, gam, E):
    r = 1 / (1 - E / h)
    return (h + 19 * h ** 2 * G / 3
            + (A / h ** 2) * r * (2 + r)
            + gam
            + G * (4 * gam * h + 5 * h ** 2)
            + (3 * A / (2 * h ** 3)) * r ** 2
            * (7 * gam + 3 * h / 2 + r * 4 * gam))


def _lambda2(G, S, A, D, h, gam, E):
    r = 1 / (1 - E / h)
    return 13 * h / 2 + 2 * gam + G * h ** 2 + (3 * A / (2 * h ** 3)) * r ** 2 * h / 2


def _lambda3(G, S, A, D, h, gam):
    return (S / 2) * (14 * h * gam + 4 * h ** 2) + 19 * S * h ** 2 / 3


def _unpack(p: PhysParams):
    return p.G, p.S, p.A, p.D, p.h_mean, p.gamma_mean


def frak_constants(p: PhysParams):
    """The three smallness constants; the third vanishes when S = 0."""
    args = _unpack(p)
    return _frak1(*args), _frak2(*args), _frak3(*args)


def lambda1(p: PhysParams, E: float) -> float:
    """First energy-dependent coefficient, evaluated at energy E."""
    if E >= p.h_mean:
        raise EnergyTooLarge(f"E = {E} >= h_mean = {p.h_mean}")
    return _lambda1(*_unpack(p), E)


def lambda2(p: PhysParams, E: float) -> float:
    """Second energy-dependent coefficient, evaluated at energy E."""
    if E >= p.h_mean:
        raise EnergyTooLarge(f"E = {E} >= h_mean = {p.h_mean}")
    return _lambda2(*_unpack(p), E)


def lambda3(p: PhysParams) -> float:
    """Capillary coefficient; zero when S = 0."""
    return _lambda3(*_unpack(p))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hypothesis:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class Certificate:
    """Evaluated hypotheses and the guaranteed decay rate.

    ``delta`` is the minimum of the applicable gamma margins; it is a
    guaranteed lower bound on the decay rate only when ``passed`` is true.
    In the gravity regime the third constant trio is not applicable and
    ``gamma3`` is None.
    """

    params: PhysParams
    E0: float
    frak_c1: float
    frak_c2: float
    frak_c3: float
    lambda1_0: float
    lambda2_0: float
    lambda3: float
    gamma1: float
    gamma2: float
    gamma3: float | None
    delta: float
    regime: str
    hypotheses: tuple[Hypothesis, ...]

    @property
    def passed(self) -> bool:
        return all(h.passed for h in self.hypotheses)

    def failing(self) -> tuple[str, ...]:
        return tuple(h.name for h in self.hypotheses if not h.passed)


def _certify_values(p_values, E0):
    """Hypothesis table from plain numbers; exact under Fraction inputs.

    Returns (values, hypotheses) where values maps field names to numbers
    and hypotheses is a list of (name, passed, margin) triples.
    """
    G, S, A, D, h, gam = p_values
    c1 = _frak1(*p_values)
    c2 = _frak2(*p_values)
    c3 = _frak3(*p_values)
    l3 = _lambda3(*p_values)
    capillary = S > 0
    inf = float("inf")
    if E0 < h:
        l1 = _lambda1(*p_values, E0)
        l2 = _lambda2(*p_values, E0)
        g1 = c1 - l1 * E0
        g2 = c2 - (l2 + S * h ** 2 / 2) * E0 if capillary else c2 - l2 * E0
        g3 = c3 - l3 * E0 if capillary else None
    else:
        # the energy-dependent coefficients blow up as E0 -> h; continue
        # them by their limits so hypothesis margins stay ordered
        l1, l2 = inf, inf
        g1, g2 = -inf, -inf
        g3 = -inf if capillary else None
    hyps = [("E0_smallness", E0 < min(h, gam), min(h, gam) - E0),
            ("frak_c1_positive", c1 > 0, c1),
            ("frak_c2_positive", c2 > 0, c2)]
    if capillary:
        hyps.append(("frak_c3_positive", c3 > 0, c3))
    hyps.append(("gamma1_positive", g1 > 0, g1))
    hyps.append(("gamma2_positive", g2 > 0, g2))
    if capillary:
        hyps.append(("gamma3_positive", g3 > 0, g3))
    delta = min(g1, g2, g3) if capillary else min(g1, g2)
    values = {
        "E0": E0, "frak_c1": c1, "frak_c2": c2, "frak_c3": c3,
        "lambda1_0": l1, "lambda2_0": l2, "lambda3": l3,
        "gamma1": g1, "gamma2": g2, "gamma3": g3, "delta": delta,
        "regime": "capillary" if capillary else "gravity",
    }
    return values, hyps


def certify(f0: SpectralField, theta0: SpectralField, p: PhysParams) -> Certificate:
    """Evaluate the decay certificate for the initial pair (f0, theta0)."""
    if not (is_mean_free(f0) and is_mean_free(theta0)):
        raise NonZeroMean("certificates require mean-free initial data")
    E0 = wiener_norm(f0, 0.0) + wiener_norm(theta0, 0.0)
    return _certificate_from_energy(p, E0)


def _certificate_from_energy(p: PhysParams, E0: float) -> Certificate:
    values, hyps = _certify_values(_unpack(p), E0)
    return Certificate(
        params=p,
        hypotheses=tuple(Hypothesis(n, ok, float(m)) for n, ok, m in hyps),
        **{k: (v if k == "regime" or v is None else float(v))
           for k, v in values.items()},
    )


def max_amplitude(p: PhysParams, shape) -> float:
    """Largest scaling mu of the given shape that still certifies.

    ``shape`` is a pair of mean-free fields, not both zero.  The passing
    set is an interval [0, mu*) because every hypothesis margin is
    strictly decreasing in the initial energy, so bisection applies.
    """
    f_shape, th_shape = shape
    if not (is_mean_free(f_shape) and is_mean_free(th_shape)):
        raise NonZeroMean("shape fields must be mean-free")
    e_unit = wiener_norm(f_shape, 0.0) + wiener_norm(th_shape, 0.0)
    if e_unit == 0.0:
        raise ValueError("shape fields must not both be zero")

    def passes(mu: float) -> bool:
        return _certificate_from_energy(p, mu * e_unit).passed

    if not passes(0.0):
        raise NoPositiveAmplitude("constants fail even for zero data")
    lo, hi = 0.0, 1.0
    grow = 0
    while passes(hi):
        lo, hi = hi, 2.0 * hi
        grow += 1
        if grow > 600:
            raise ValueError("no finite certification threshold found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10 * hi:
            break
    return 0.5 * (lo + hi)
