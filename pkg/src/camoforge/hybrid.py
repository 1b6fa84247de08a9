"""Delay-aware hybrid replacement, timing analysis, and the adder study.

Large circuits show a skewed timing-path distribution: most paths are
short, few are critical. Replacing gates on the non-critical paths with
the obfuscated spin-device primitive protects a useful fraction of the
netlist at zero delay cost. The adder case study quantifies the
accuracy/power trade of running only LSB-cone gates probabilistically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .device import PRIMITIVE_CATALOG, DETERMINISTIC_POWER, PROBABILISTIC_POWER_90
from .netlist import Circuit, Gate, gate_function


class HybridError(Exception):
    pass


# Per-function CMOS gate delays in seconds; desk-scale stand-ins for a
# modern-node standard-cell library.
CMOS_DELAYS = {
    "NOT": 0.007e-9, "BUFF": 0.009e-9,
    "NAND": 0.010e-9, "NOR": 0.012e-9,
    "AND": 0.013e-9, "OR": 0.014e-9,
    "XOR": 0.018e-9, "XNOR": 0.018e-9,
}
GSHE_DELAY = PRIMITIVE_CATALOG["obfuscated_with_muxes"].delay


@dataclass(frozen=True)
class DelayMap:
    cmos: dict = field(default_factory=lambda: dict(CMOS_DELAYS))
    gshe_delay: float = GSHE_DELAY

    def __post_init__(self):
        if any(d <= 0 for d in self.cmos.values()) or self.gshe_delay <= 0:
            raise HybridError("delays must be positive")

    def of(self, fn_name):
        try:
            return self.cmos[fn_name]
        except KeyError:
            raise HybridError(f"no delay for function {fn_name}") from None


def write_delay_map(dm, path):
    with open(path, "w") as f:
        f.write(f"GSHE {dm.gshe_delay * 1e9!r}\n")
        for name, d in sorted(dm.cmos.items()):
            f.write(f"{name} {d * 1e9!r}\n")


def read_delay_map(path):
    cmos = {}
    gshe = GSHE_DELAY
    with open(path) as f:
        for raw in f:
            line = raw.split("#")[0].strip()
            if not line:
                continue
            name, val = line.split()
            if name.upper() == "GSHE":
                gshe = float(val) * 1e-9
            else:
                cmos[name.upper()] = float(val) * 1e-9
    return DelayMap(cmos=cmos, gshe_delay=gshe)


@dataclass
class TimingReport:
    arrival: dict
    required: dict
    slack: dict
    critical_delay: float


def _gate_delays(circuit, delays, replaced=frozenset()):
    return {g.name: (delays.gshe_delay if g.name in replaced
                     else delays.of(g.fn.name))
            for g in circuit.gates.values()}


def _sta(circuit, dmap):
    """Longest-path arrival / required / slack over per-gate delays."""
    arrival = {}
    for g in circuit.topological_order():
        start = 0.0
        for f in g.fanin:
            if f in arrival:
                start = max(start, arrival[f])
        arrival[g.name] = start + dmap[g.name]
    critical = max((arrival.get(o, 0.0) for o in circuit.outputs), default=0.0)

    required = {}
    fanout = {}
    for g in circuit.gates.values():
        for f in g.fanin:
            fanout.setdefault(f, []).append(g.name)
    out_set = set(circuit.outputs)
    for g in reversed(circuit.topological_order()):
        req = critical if g.name in out_set else None
        for c in fanout.get(g.name, ()):
            r = required[c] - dmap[c]
            req = r if req is None else min(req, r)
        required[g.name] = critical if req is None else req
    slack = {n: required[n] - arrival[n] for n in arrival}
    return TimingReport(arrival, required, slack, critical)


def sta(circuit, delays=None, replaced=frozenset()):
    delays = delays or DelayMap()
    return _sta(circuit, _gate_delays(circuit, delays, replaced))


def delay_aware_select(circuit, delays=None):
    """Greedy replacement of slack-rich gates with the obfuscated primitive.

    Walks gates in descending-slack order and accepts a replacement only
    when the recomputed critical delay does not exceed the original;
    slacks are re-propagated after every acceptance. Returns
    (selection, final TimingReport).
    """
    delays = delays or DelayMap()
    dmap = _gate_delays(circuit, delays)
    base = _sta(circuit, dmap)
    order = sorted(base.slack, key=lambda n: (-base.slack[n], n))
    selection = []
    for name in order:
        old = dmap[name]
        if delays.gshe_delay <= old:
            dmap[name] = delays.gshe_delay
            selection.append(name)
            continue
        dmap[name] = delays.gshe_delay
        if _sta(circuit, dmap).critical_delay <= base.critical_delay:
            selection.append(name)
        else:
            dmap[name] = old
    return selection, _sta(circuit, dmap)


@dataclass(frozen=True)
class CostCatalog:
    """Per-gate area/power constants for the mixed implementation."""

    cmos_area: float = 0.055e-12      # m^2
    cmos_power: float = 0.17e-6       # W
    gshe_area: float = PRIMITIVE_CATALOG["obfuscated_with_muxes"].area
    gshe_power: float = PRIMITIVE_CATALOG["obfuscated_with_muxes"].power


def chip_cost(circuit, selection, catalog=None, delays=None):
    """(area, power, delay) totals for a partially replaced circuit."""
    catalog = catalog or CostCatalog()
    delays = delays or DelayMap()
    selection = set(selection)
    unknown = selection - circuit.gates.keys()
    if unknown:
        raise HybridError(f"selection names unknown gates: {sorted(unknown)[:5]}")
    n_g = len(selection)
    n_c = len(circuit.gates) - n_g
    area = n_c * catalog.cmos_area + n_g * catalog.gshe_area
    power = n_c * catalog.cmos_power + n_g * catalog.gshe_power
    delay = sta(circuit, delays, replaced=selection).critical_delay
    return area, power, delay


# -- ripple-carry adder case study ---------------------------------------

def build_ripple_adder(width):
    """Ripple-carry adder from 5-gate full-adder cells.

    Inputs a0..a{w-1}, b0..b{w-1}, cin; outputs s0..s{w-1}, cout.
    """
    if width < 1:
        raise HybridError("width must be >= 1")
    gates = []
    carry = "cin"
    for i in range(width):
        axb = f"axb{i}"
        gates.append(Gate(axb, gate_function("XOR", 2), (f"a{i}", f"b{i}")))
        gates.append(Gate(f"s{i}", gate_function("XOR", 2), (axb, carry)))
        gates.append(Gate(f"and_ab{i}", gate_function("AND", 2), (f"a{i}", f"b{i}")))
        gates.append(Gate(f"and_cx{i}", gate_function("AND", 2), (carry, axb)))
        nxt = f"c{i + 1}" if i + 1 < width else "cout"
        gates.append(Gate(nxt, gate_function("OR", 2), (f"and_ab{i}", f"and_cx{i}")))
        carry = nxt
    inputs = [f"a{i}" for i in range(width)] + [f"b{i}" for i in range(width)] + ["cin"]
    outputs = [f"s{i}" for i in range(width)] + ["cout"]
    return Circuit(inputs, outputs, gates)


def lsb_cone_selection(adder, k):
    """Gates whose entire fanout cone lies inside sum bits 0..k-1.

    Carry-chain gates feeding bit k or above are excluded, which is what
    keeps the worst-case error bound intact.
    """
    width = sum(1 for o in adder.outputs if o.startswith("s"))
    if k > width:
        raise HybridError(f"k={k} exceeds adder width {width}")
    allowed = {f"s{i}" for i in range(k)}
    return sorted(n for n in adder.gates
                  if adder.fanout_cone(n) and adder.fanout_cone(n) <= allowed)


@dataclass(frozen=True)
class AdderStudy:
    width: int
    k: int
    gate_error: float
    worst_case_error_bound: float
    per_gate_saving: float
    total_saving: float
    selected_gates: int
    total_gates: int


def adder_case_study(width, k, gate_error=0.10,
                     det_power=DETERMINISTIC_POWER,
                     prob_power=PROBABILISTIC_POWER_90):
    """Accuracy/power numbers for running the k-LSB cone probabilistically.

    The worst-case relative error bound (2^k - 1) / 2^width holds for any
    gate error rate because only sum bits below k can be corrupted.
    """
    adder = build_ripple_adder(width)
    selection = lsb_cone_selection(adder, k)
    bound = ((1 << k) - 1) / (1 << width)
    saving = 1.0 - prob_power / det_power
    total = saving * len(selection) / len(adder.gates)
    return AdderStudy(width=width, k=k, gate_error=gate_error,
                      worst_case_error_bound=bound,
                      per_gate_saving=saving, total_saving=total,
                      selected_gates=len(selection),
                      total_gates=len(adder.gates))


def make_skewed_circuit(spine_length=200, branches=10, seed=0):
    """Synthetic circuit with one deep path and many shallow ones.

    One NAND spine of `spine_length` gates sets the critical delay; each
    branch is a 3-gate tree (two leaves into a root) driving its own
    output. The spine must be long enough that its delay exceeds the
    replacement primitive's; with the default delay map and 185 <=
    spine_length <= 260, 8 <= branches <= 16 the replaceable fraction
    lands in 5-15%.
    """
    if spine_length < 2 or branches < 1:
        raise HybridError("need spine_length >= 2 and branches >= 1")
    gates = []
    inputs = ["pi0", "pi1"]
    prev = "pi0"
    for i in range(spine_length):
        name = f"sp{i}"
        gates.append(Gate(name, gate_function("NAND", 2), (prev, "pi1")))
        prev = name
    outputs = [prev]
    for b in range(branches):
        ia, ib = f"bi{b}a", f"bi{b}b"
        inputs.extend([ia, ib])
        la, lb, root = f"l{b}a", f"l{b}b", f"br{b}"
        gates.append(Gate(la, gate_function("NAND", 2), (ia, ib)))
        gates.append(Gate(lb, gate_function("NOR", 2), (ia, ib)))
        gates.append(Gate(root, gate_function("AND", 2), (la, lb)))
        outputs.append(root)
    return Circuit(inputs, outputs, gates)
