"""Closed-form cost model for the spin-Hall switch.

Conductances, read-out power, energy, and delay come from the equivalent
read-out circuit; switching correctness below the deterministic current
threshold is interpolated from a user-supplied calibration table rather
than simulated from magnetization dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math


class DeviceError(Exception):
    pass


@dataclass(frozen=True)
class DeviceParams:
    """Material/geometry constants of the switch (SI units).

    `m_s_*` and `k_u_*` are documentation fields; they feed only the
    magnetization-dynamics model, which this package does not implement.
    """

    nanomagnet_area: float = 420e-18      # m^2 (15 nm x 28 nm)
    rap: float = 1e-12                    # Ohm * m^2
    tmr: float = 1.7                      # dimensionless (170%)
    r: float = 1e3                        # Ohm, heavy-metal resistance
    beta: float = 6.0                     # spin-Hall internal gain
    i_s_det: float = 20e-6                # A, deterministic switching current
    theta_sh: float = 0.4
    w_nm: float = 15e-9
    t_hm: float = 1e-9
    rho_hm: float = 5.6e-7                # Ohm * m
    m_s_write: float = 1e6                # A/m
    m_s_read: float = 5e5                 # A/m
    k_u_write: float = 2.5e4              # J/m^3
    k_u_read: float = 5e3                 # J/m^3

    def __post_init__(self):
        for name in ("nanomagnet_area", "rap", "r", "beta", "i_s_det"):
            if getattr(self, name) <= 0:
                raise DeviceError(f"{name} must be positive")
        if self.tmr < 0:
            raise DeviceError("tmr must be >= 0")

    @classmethod
    def from_raw(cls, theta_sh, w_nm, t_hm, **kw):
        """Build with beta derived as theta_sh * (w_nm / t_hm)."""
        return cls(beta=theta_sh * (w_nm / t_hm),
                   theta_sh=theta_sh, w_nm=w_nm, t_hm=t_hm, **kw)


@dataclass(frozen=True)
class OperatingPoint:
    spin_current: float
    correctness: float
    mean_delay: float
    power: float


@dataclass(frozen=True)
class PrimitiveCost:
    kind: str
    energy: float
    power: float
    delay: float
    area: float


# Catalog constants for the three build levels of the primitive.
PRIMITIVE_CATALOG = {
    "intrinsic": PrimitiveCost("intrinsic", 0.33e-15, 0.2125e-6, 1.55e-9, 0.0016e-12),
    "with_transducer": PrimitiveCost("with_transducer", 0.45e-15, 0.2525e-6, 1.8e-9, 0.003e-12),
    "obfuscated_with_muxes": PrimitiveCost("obfuscated_with_muxes", 0.49e-15, 0.2673e-6, 1.83e-9, 0.029e-12),
}

# Deterministic-regime power including leakage; used to calibrate the
# optional leakage constant and as the reference point for savings.
DETERMINISTIC_POWER = 0.2125e-6
# Sub-critical operation at 90% output accuracy.
PROBABILISTIC_POWER_90 = 0.1071e-6
# Sub-critical operating point at 15 uA.
PROBABILISTIC_CURRENT = 15e-6
PROBABILISTIC_POWER_15UA = 0.12e-6

# Mean switching delays (s) by spin current (A); intermediate currents
# are interpolated linearly.
DELAY_POINTS = ((15e-6, 4.5e-9), (20e-6, 1.55e-9))


def conductances(params):
    """(G_P, G_AP) in siemens: G_P = A/RAP, G_AP = G_P/(1+TMR)."""
    g_p = params.nanomagnet_area / params.rap
    return g_p, g_p / (1.0 + params.tmr)


def read_power(params, spin_current, leakage=0.0):
    """Read-out power (W) of the equivalent MTJ circuit at a spin current.

    All internal voltages scale linearly with the current, so power is
    quadratic in it. `leakage` is an optional additive constant (off by
    default); see `calibrate_leakage`.
    """
    if spin_current < 0:
        raise DeviceError("spin current must be >= 0")
    g_p, g_ap = conductances(params)
    if g_p == g_ap:
        raise DeviceError("zero TMR makes differential read-out infeasible")
    v_out = spin_current * params.r / params.beta
    v_sup = (spin_current / params.beta) * (1.0 + params.r * (g_p + g_ap)) / (g_p - g_ap)
    p = (v_out ** 2 / params.r
         + (v_sup - v_out) ** 2 * g_p
         + (v_out + v_sup) ** 2 * g_ap)
    return p + (leakage if spin_current > 0 else 0.0)


def calibrate_leakage(params, target=DETERMINISTIC_POWER, at_current=None):
    """Additive constant making read_power hit `target` at the deterministic current."""
    i = params.i_s_det if at_current is None else at_current
    return target - read_power(params, i)


def energy(power, delay):
    if power < 0 or delay < 0:
        raise DeviceError("power and delay must be >= 0")
    return power * delay


def stage_input_current(params, i_sx, stage_outputs):
    """Spin current summed at a switch input from the previous stage.

    `stage_outputs` is an iterable of (delta_g, g, v) triples, one per
    driving gate: MTJ conductance difference, conductance, and voltage.
    Documented helper for the device-level picture; the circuit simulator
    abstracts gates to correctness probabilities instead.
    """
    total = i_sx
    for delta_g, g, v in stage_outputs:
        total += params.beta * delta_g * v / (1.0 + params.r * g)
    return total


class FlipCalibration:
    """Monotone piecewise-linear map from spin current to output correctness.

    Calibration points must include the deterministic switching current at
    correctness 1.0; values are clamped to [0.5, 1].
    """

    def __init__(self, points, i_s_det=20e-6):
        pts = sorted((float(c), float(p)) for c, p in points)
        if not pts:
            raise DeviceError("calibration needs at least one point")
        currents = [c for c, _ in pts]
        if len(set(currents)) != len(currents):
            raise DeviceError("calibration currents must be distinct")
        probs = [p for _, p in pts]
        if any(b < a for a, b in zip(probs, probs[1:])):
            raise DeviceError("calibration must be monotone nondecreasing")
        if not any(math.isclose(c, i_s_det, rel_tol=1e-9) and p == 1.0 for c, p in pts):
            raise DeviceError("calibration must pin the deterministic current to 1.0")
        self.points = tuple(pts)
        self.i_s_det = i_s_det

    def __call__(self, current):
        if current >= self.i_s_det:
            return 1.0
        pts = self.points
        if current <= pts[0][0]:
            val = pts[0][1]
        else:
            val = pts[-1][1]
            for (c0, p0), (c1, p1) in zip(pts, pts[1:]):
                if c0 <= current <= c1:
                    t = (current - c0) / (c1 - c0)
                    val = p0 + t * (p1 - p0)
                    break
        return min(1.0, max(0.5, val))


def default_calibration(sub_critical_correctness=0.9):
    """Two-point calibration: configurable accuracy at 15 uA, 1.0 at 20 uA."""
    return FlipCalibration([(PROBABILISTIC_CURRENT, sub_critical_correctness),
                            (20e-6, 1.0)], i_s_det=20e-6)


def flip_probability(calibration, spin_current):
    """Output-correctness probability at a spin current (see FlipCalibration)."""
    return calibration(spin_current)


def mean_delay(spin_current, points=DELAY_POINTS):
    pts = sorted(points)
    if spin_current <= pts[0][0]:
        return pts[0][1]
    if spin_current >= pts[-1][0]:
        return pts[-1][1]
    for (c0, d0), (c1, d1) in zip(pts, pts[1:]):
        if c0 <= spin_current <= c1:
            t = (spin_current - c0) / (c1 - c0)
            return d0 + t * (d1 - d0)
    raise DeviceError("unreachable")


def operating_point(params, spin_current, calibration=None, leakage=0.0):
    """Assemble the (current, correctness, delay, power) record for one bias."""
    cal = calibration or default_calibration()
    return OperatingPoint(
        spin_current=spin_current,
        correctness=1.0 if spin_current >= params.i_s_det else cal(spin_current),
        mean_delay=mean_delay(spin_current),
        power=read_power(params, spin_current, leakage=leakage),
    )


def primitive_cost(kind):
    try:
        return PRIMITIVE_CATALOG[kind]
    except KeyError:
        raise DeviceError(f"unknown primitive kind {kind!r}; "
                          f"expected one of {sorted(PRIMITIVE_CATALOG)}") from None


# -- parameter files ----------------------------------------------------

_PARAM_FIELDS = ("nanomagnet_area", "rap", "tmr", "r", "beta", "i_s_det",
                 "theta_sh", "w_nm", "t_hm", "rho_hm",
                 "m_s_write", "m_s_read", "k_u_write", "k_u_read")


def write_params(params, path):
    with open(path, "w") as f:
        for name in _PARAM_FIELDS:
            f.write(f"{name} {getattr(params, name)!r}\n")


def read_params(path):
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#")[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DeviceError(f"{path}:{lineno}: expected 'name value'")
            name, val = parts
            if name not in _PARAM_FIELDS:
                raise DeviceError(f"{path}:{lineno}: unknown parameter {name}")
            values[name] = float(val)
    return DeviceParams(**values)


def write_calibration(cal, path):
    with open(path, "w") as f:
        for c, p in cal.points:
            f.write(f"{c!r} {p!r}\n")


def read_calibration(path, i_s_det=20e-6):
    pts = []
    with open(path) as f:
        for raw in f:
            line = raw.split("#")[0].strip()
            if line:
                c, p = line.split()
                pts.append((float(c), float(p)))
    return FlipCalibration(pts, i_s_det=i_s_det)
