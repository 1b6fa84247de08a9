"""Locking / camouflaging / probabilistic / polymorphic transforms.

All transforms are pure circuit-to-circuit functions with seeded,
reproducible randomness. Camouflaging models each protected gate as the
parallel evaluation of every function in a set, routed through a MUX
whose select bits are fresh key inputs; the correct key encodes the index
of the original function.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import math
import random

from .netlist import (Circuit, Gate, ALL_16_FUNCTIONS, gate_function,
                      two_input_function)


class ObfuscationError(Exception):
    pass


@dataclass(frozen=True)
class FunctionSet:
    """Named, ordered set of candidate functions a camouflaged gate may hide."""

    name: str
    functions: tuple

    def __post_init__(self):
        fns = tuple(self.functions)
        object.__setattr__(self, "functions", fns)
        if len(fns) < 2:
            raise ObfuscationError(f"set {self.name}: needs >= 2 functions")
        if len({(f.arity, f.table) for f in fns}) != len(fns):
            raise ObfuscationError(f"set {self.name}: functions must be distinct")
        if len({f.arity for f in fns}) != 1:
            raise ObfuscationError(f"set {self.name}: mixed arities")

    @property
    def arity(self):
        return self.functions[0].arity

    @property
    def key_width(self):
        return max(1, math.ceil(math.log2(len(self.functions))))

    def index_of(self, fn):
        for i, f in enumerate(self.functions):
            if f.arity == fn.arity and f.table == fn.table:
                return i
        return None


def _fns(*names):
    return tuple(gate_function(n, 2) for n in names)


# Catalog of published primitive function sets, smallest to largest.
FUNCTION_SETS = {
    "inv_buf": FunctionSet("inv_buf", (gate_function("NOT"), gate_function("BUFF"))),
    "nand_nor": FunctionSet("nand_nor", _fns("NAND", "NOR")),
    "xor_xnor": FunctionSet("xor_xnor", _fns("XOR", "XNOR")),
    "and_or": FunctionSet("and_or", _fns("AND", "OR")),
    "nand_nor_xor": FunctionSet("nand_nor_xor", _fns("NAND", "NOR", "XOR")),
    "nand_nor_and_or": FunctionSet("nand_nor_and_or", _fns("NAND", "NOR", "AND", "OR")),
    "six": FunctionSet("six", _fns("NAND", "NOR", "XOR", "XNOR", "AND", "OR")),
    # seven two-input functions plus buffer; inverter/buffer act on the
    # first input when used at arity 2
    "seven_plus_buf": FunctionSet(
        "seven_plus_buf",
        _fns("NAND", "NOR", "XOR", "XNOR", "AND", "OR", "NOTA") + (two_input_function(12),)),
    "gshe16": FunctionSet("gshe16", ALL_16_FUNCTIONS),
}

POLY_2IN_NAMES = ("NAND", "AND", "NOR", "OR", "XOR", "XNOR")


@dataclass(frozen=True)
class BehaviorAnnotation:
    """Stochastic behavior of one gate.

    mode 'prob': output flips with probability 1 - correctness.
    mode 'poly': function drawn from `distribution`, a tuple of
    (GateFunction, probability) summing to 1.
    """

    gate: str
    mode: str
    correctness: float = 1.0
    distribution: tuple = ()

    def __post_init__(self):
        if self.mode == "prob":
            if not 0.5 <= self.correctness <= 1.0:
                raise ObfuscationError(
                    f"correctness {self.correctness} outside [0.5, 1]")
        elif self.mode == "poly":
            total = sum(p for _, p in self.distribution)
            if abs(total - 1.0) > 1e-9:
                raise ObfuscationError(f"distribution sums to {total}, not 1")
        else:
            raise ObfuscationError(f"unknown annotation mode {self.mode!r}")


@dataclass(frozen=True)
class CamoRecord:
    gate: str
    function_set: str
    key_bits: tuple       # key input net names, MSB first
    original_index: int


@dataclass(frozen=True)
class LockedCircuit:
    """Circuit with key inputs plus the sidecar secrets.

    Applying `correct_key` makes the circuit functionally equivalent to
    the original it was derived from.
    """

    circuit: Circuit
    key_inputs: tuple
    correct_key: str
    camo_map: tuple = ()
    benchmark: str = ""
    seed: int = 0

    def __post_init__(self):
        if len(self.key_inputs) != len(self.correct_key):
            raise ObfuscationError("correct_key width != number of key inputs")

    @property
    def free_inputs(self):
        ks = set(self.key_inputs)
        return tuple(n for n in self.circuit.inputs if n not in ks)


# -- gate selection ------------------------------------------------------

def select_gates_random(circuit, fraction, seed):
    """floor(fraction * #gates) distinct gates, uniform, seed-determined.

    Selections nest: for the same (circuit, seed), a smaller fraction is
    always a prefix of a larger one, so one drawn selection can be reused
    across techniques and error rates.
    """
    if not 0 < fraction <= 1:
        raise ObfuscationError("fraction must be in (0, 1]")
    if not circuit.gates:
        raise ObfuscationError("empty circuit")
    names = sorted(circuit.gates)
    rng = random.Random(seed)
    rng.shuffle(names)
    return names[:int(fraction * len(names))]


def save_selection(selection, path):
    with open(path, "w") as f:
        for name in selection:
            f.write(name + "\n")


def load_selection(path):
    with open(path) as f:
        return [line.strip() for line in f if line.strip()]


# -- key-gate locking ----------------------------------------------------

def insert_key_gates(circuit, n, seed, benchmark=""):
    """Cut n random nets with XOR/XNOR key gates.

    Each cut net feeds a fresh XOR (key bit 0) or XNOR (key bit 1) whose
    other input is a new key input, so the gate is transparent under the
    correct key.
    """
    if n < 0:
        raise ObfuscationError("n must be >= 0")
    nets = sorted(circuit.nets())
    if n > len(nets):
        raise ObfuscationError(f"cannot cut {n} of {len(nets)} nets")
    if n == 0:
        return LockedCircuit(circuit, (), "", benchmark=benchmark, seed=seed)

    rng = random.Random(seed)
    cut = rng.sample(nets, n)
    polarity = [rng.random() < 0.5 for _ in cut]   # True -> XNOR

    rename = {}
    key_inputs = []
    new_gates = []
    for i, (net, inv) in enumerate(zip(cut, polarity)):
        kin, kg = f"keyin{i}", f"keyg{i}"
        key_inputs.append(kin)
        rename[net] = kg
        fn = gate_function("XNOR" if inv else "XOR", 2)
        new_gates.append(Gate(kg, fn, (net, kin)))

    gates = list(new_gates)
    for g in circuit.gates.values():
        fanin = tuple(rename.get(f, f) for f in g.fanin)
        gates.append(Gate(g.name, g.fn, fanin))
    outputs = tuple(rename.get(o, o) for o in circuit.outputs)

    locked = Circuit(
        inputs=list(circuit.inputs) + key_inputs,
        outputs=outputs,
        gates=gates,
        latch_outputs=circuit.latch_outputs,
        pragmas=circuit.pragmas,
        pseudo_inputs=circuit.pseudo_inputs,
        pseudo_outputs=circuit.pseudo_outputs,
    )
    key = "".join("1" if inv else "0" for inv in polarity)
    return LockedCircuit(locked, tuple(key_inputs), key,
                         benchmark=benchmark, seed=seed)


# -- camouflaging --------------------------------------------------------

def _mux_model(gate, fset, key_bits):
    """Gates realizing `gate` as a key-selected choice among fset.functions.

    Select codes beyond the set size alias to index 0, which keeps the
    model total when the set size is not a power of two.
    """
    a = gate.fanin[0]
    b = gate.fanin[1] if fset.arity == 2 else None
    p = f"{gate.name}_camo"
    gates = []
    aux = {}

    def lit(net, negated):
        if not negated:
            return net
        name = f"{p}_n_{net}"
        if name not in aux:
            aux[name] = Gate(name, gate_function("NOT"), (net,))
        return name

    def fn_net(fn):
        tag = f"{p}_f{fn.table}"
        if tag in aux:
            return tag
        if fn.arity == 1:
            aux[tag] = Gate(tag, fn, (a,))
            return tag
        t = fn.table
        if t == 0:      # contradiction from the first input
            aux[tag] = Gate(tag, gate_function("AND", 2), (a, lit(a, True)))
        elif t == 15:   # tautology
            aux[tag] = Gate(tag, gate_function("OR", 2), (a, lit(a, True)))
        elif t == 12:   # first input
            aux[tag] = Gate(tag, gate_function("BUFF"), (a,))
        elif t == 10:
            aux[tag] = Gate(tag, gate_function("BUFF"), (b,))
        elif t == 3:
            aux[tag] = Gate(tag, gate_function("NOT"), (a,))
        elif t == 5:
            aux[tag] = Gate(tag, gate_function("NOT"), (b,))
        elif t in (1, 6, 7, 8, 9, 14):
            aux[tag] = Gate(tag, fn, (a, b))
        elif t == 2:    # ~a & b
            aux[tag] = Gate(tag, gate_function("AND", 2), (lit(a, True), b))
        elif t == 4:
            aux[tag] = Gate(tag, gate_function("AND", 2), (a, lit(b, True)))
        elif t == 11:   # ~a | b
            aux[tag] = Gate(tag, gate_function("OR", 2), (lit(a, True), b))
        elif t == 13:
            aux[tag] = Gate(tag, gate_function("OR", 2), (a, lit(b, True)))
        else:
            raise ObfuscationError(f"unhandled table {t}")
        return tag

    w = len(key_bits)
    arms = []
    for code in range(1 << w):
        idx = code if code < len(fset.functions) else 0
        sel_lits = [lit(key_bits[j], ((code >> (w - 1 - j)) & 1) == 0)
                    for j in range(w)]
        target = fn_net(fset.functions[idx])
        arm = f"{p}_arm{code}"
        gates.append(Gate(arm, gate_function("AND", 1 + w), (*sel_lits, target)))
        arms.append(arm)
    mux_fn = gate_function("OR", len(arms)) if len(arms) > 1 else gate_function("BUFF")
    final = Gate(gate.name, mux_fn, tuple(arms))
    return list(aux.values()) + gates + [final]


def camouflage(circuit, selection, function_set, benchmark="", seed=0):
    """Replace each selected gate by the MUX model over `function_set`."""
    if isinstance(function_set, str):
        function_set = FUNCTION_SETS[function_set]
    key_inputs = []
    correct = []
    camo = []
    new_gates = []
    selected = set(selection)
    missing = selected - circuit.gates.keys()
    if missing:
        raise ObfuscationError(f"selection names unknown gates: {sorted(missing)[:5]}")

    for g in circuit.topological_order():
        if g.name not in selected:
            new_gates.append(g)
            continue
        if g.fn.arity != function_set.arity:
            raise ObfuscationError(
                f"gate {g.name}: arity {g.fn.arity} does not match "
                f"{function_set.name} (arity {function_set.arity})")
        idx = function_set.index_of(g.fn)
        if idx is None:
            raise ObfuscationError(
                f"gate {g.name}: {g.fn.name} not in set {function_set.name}")
        w = function_set.key_width
        kbits = tuple(f"keyin{len(key_inputs) + j}" for j in range(w))
        key_inputs.extend(kbits)
        correct.append(format(idx, f"0{w}b"))
        camo.append(CamoRecord(g.name, function_set.name, kbits, idx))
        new_gates.extend(_mux_model(g, function_set, kbits))

    locked = Circuit(
        inputs=list(circuit.inputs) + key_inputs,
        outputs=circuit.outputs,
        gates=new_gates,
        latch_outputs=circuit.latch_outputs,
        pragmas=circuit.pragmas,
        pseudo_inputs=circuit.pseudo_inputs,
        pseudo_outputs=circuit.pseudo_outputs,
    )
    return LockedCircuit(locked, tuple(key_inputs), "".join(correct),
                         camo_map=tuple(camo), benchmark=benchmark, seed=seed)


# -- stochastic annotations ----------------------------------------------

def make_probabilistic(circuit, selection, correctness, overrides=None):
    """One probabilistic annotation per selected gate, identical
    correctness unless overridden per gate."""
    overrides = overrides or {}
    anns = []
    for name in selection:
        if name not in circuit.gates:
            raise ObfuscationError(f"unknown gate {name}")
        c = overrides.get(name, correctness)
        anns.append(BehaviorAnnotation(name, "prob", correctness=c))
    return anns


def polymorphic_distribution(fn):
    """Distribution for one polymorphic gate: original function at 2/3,
    the alternatives sharing the remaining 1/3 equally."""
    if fn.arity == 2:
        if fn.name not in POLY_2IN_NAMES:
            raise ObfuscationError(f"{fn.name} has no polymorphic variant")
        others = [gate_function(n, 2) for n in POLY_2IN_NAMES if n != fn.name]
        return ((fn, 2.0 / 3.0),) + tuple((o, 1.0 / 15.0) for o in others)
    if fn.arity == 1:
        other = gate_function("BUFF" if fn.name == "NOT" else "NOT")
        return ((fn, 2.0 / 3.0), (other, 1.0 / 3.0))
    raise ObfuscationError(f"arity-{fn.arity} gate cannot be polymorphic")


def make_polymorphic(circuit, selection):
    anns = []
    for name in selection:
        g = circuit.gates.get(name)
        if g is None:
            raise ObfuscationError(f"unknown gate {name}")
        anns.append(BehaviorAnnotation(
            name, "poly", distribution=polymorphic_distribution(g.fn)))
    return anns


# -- pragmas and the key sidecar ------------------------------------------

def annotations_to_pragmas(annotations):
    lines = []
    for a in annotations:
        if a.mode == "prob":
            lines.append(f"#@ prob {a.gate} {a.correctness!r}")
        else:
            body = ",".join(f"{fn.name}:{p!r}" for fn, p in a.distribution)
            lines.append(f"#@ poly {a.gate} {body}")
    return lines


def pragmas_to_annotations(circuit, pragmas=None):
    lines = circuit.pragmas if pragmas is None else pragmas
    anns = []
    for raw in lines:
        body = raw.strip()
        if not body.startswith("#@"):
            continue
        parts = body[2:].split()
        if not parts:
            continue
        kind = parts[0]
        if kind == "prob":
            if len(parts) != 3:
                raise ObfuscationError(f"malformed pragma: {raw!r}")
            anns.append(BehaviorAnnotation(parts[1], "prob",
                                           correctness=float(parts[2])))
        elif kind == "poly":
            if len(parts) != 3:
                raise ObfuscationError(f"malformed pragma: {raw!r}")
            gate = circuit.gates.get(parts[1])
            arity = gate.fn.arity if gate else 2
            dist = []
            for item in parts[2].split(","):
                fname, p = item.split(":")
                dist.append((gate_function(fname, arity), float(p)))
            anns.append(BehaviorAnnotation(parts[1], "poly",
                                           distribution=tuple(dist)))
        else:
            raise ObfuscationError(f"unknown pragma kind {kind!r}")
    return anns


def write_sidecar(locked, path, annotations=()):
    doc = {
        "benchmark": locked.benchmark,
        "seed": locked.seed,
        "key_inputs": list(locked.key_inputs),
        "correct_key": locked.correct_key,
        "camo": [{"gate": c.gate, "set": c.function_set,
                  "key_bits": list(c.key_bits),
                  "original_index": c.original_index}
                 for c in locked.camo_map],
        "annotations": [_ann_doc(a) for a in annotations],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def _ann_doc(a):
    if a.mode == "prob":
        return {"gate": a.gate, "mode": "prob", "correctness": a.correctness}
    return {"gate": a.gate, "mode": "poly",
            "dist": [[fn.name, fn.arity, p] for fn, p in a.distribution]}


def read_sidecar(path):
    """Load a sidecar: (LockedCircuit fields as dict, annotations).

    The circuit itself lives in the companion .bench file; callers attach
    it via `attach_sidecar`.
    """
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ObfuscationError(f"malformed sidecar {path}: {e}") from e
    for fieldname in ("benchmark", "seed", "key_inputs", "correct_key"):
        if fieldname not in doc:
            raise ObfuscationError(f"sidecar missing field {fieldname!r}")
    anns = []
    for a in doc.get("annotations", ()):
        if a["mode"] == "prob":
            anns.append(BehaviorAnnotation(a["gate"], "prob",
                                           correctness=a["correctness"]))
        else:
            dist = tuple((gate_function(nm, ar), p) for nm, ar, p in a["dist"])
            anns.append(BehaviorAnnotation(a["gate"], "poly", distribution=dist))
    return doc, anns


def attach_sidecar(circuit, doc):
    camo = tuple(CamoRecord(c["gate"], c["set"], tuple(c["key_bits"]),
                            c["original_index"])
                 for c in doc.get("camo", ()))
    return LockedCircuit(circuit, tuple(doc["key_inputs"]), doc["correct_key"],
                         camo_map=camo, benchmark=doc.get("benchmark", ""),
                         seed=doc.get("seed", 0))
