"""Gate-level netlist core: `.bench` parsing/writing, validation, graph queries.

A Circuit is an immutable combinational DAG of gates over named nets.
Sequential elements (DFFs) are carried alongside and removed by
`unroll_sequential` before anything downstream touches the circuit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import re


class NetlistError(Exception):
    """Base class for netlist construction and parsing failures."""


class BenchParseError(NetlistError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CircuitError(NetlistError):
    """Structural violation: cycle, undriven net, duplicate definition."""


# Names of the 16 two-input functions, indexed by truth-table value.
# Table bit i is the output for minterm i, first fanin taken as MSB
# (so for inputs (a, b), minterm index = 2a + b).
TWO_INPUT_NAMES = (
    "CONST0", "NOR", "LT", "NOTA", "GT", "NOTB", "XOR", "NAND",
    "AND", "XNOR", "BUFB", "LE", "BUFA", "GE", "OR", "CONST1",
)

_REDUCTION_GATES = {"AND", "NAND", "OR", "NOR", "XOR", "XNOR"}
_UNARY_GATES = {"NOT", "BUFF"}
BENCH_GATE_NAMES = _REDUCTION_GATES | _UNARY_GATES


@dataclass(frozen=True)
class GateFunction:
    """Boolean function as an explicit truth table.

    `table` packs 2^arity output bits; bit i is the output for input
    minterm i, where the first fanin is the most significant bit.
    """

    name: str
    arity: int
    table: int

    def __post_init__(self):
        if self.arity < 1:
            raise CircuitError(f"arity must be >= 1, got {self.arity}")
        if not 0 <= self.table < (1 << (1 << self.arity)):
            raise CircuitError(f"table {self.table} out of range for arity {self.arity}")

    def output(self, values):
        idx = 0
        for v in values:
            idx = (idx << 1) | (1 if v else 0)
        return (self.table >> idx) & 1

    def table_bits(self):
        return tuple((self.table >> i) & 1 for i in range(1 << self.arity))


def _reduction_table(kind, arity, invert):
    n = 1 << arity
    bits = 0
    for i in range(n):
        if kind == "AND":
            v = 1 if i == n - 1 else 0
        elif kind == "OR":
            v = 0 if i == 0 else 1
        else:  # XOR
            v = bin(i).count("1") & 1
        if invert:
            v ^= 1
        bits |= v << i
    return bits


def gate_function(name, arity=2):
    """GateFunction for a named gate (bench names plus the 16 2-input names)."""
    name = name.upper()
    if name == "NOT":
        return GateFunction("NOT", 1, 0b01)
    if name == "BUFF" or (name == "BUFA" and arity == 1):
        return GateFunction("BUFF", 1, 0b10)
    if name in _REDUCTION_GATES:
        if arity < 2:
            raise CircuitError(f"{name} requires arity >= 2")
        base = {"NAND": "AND", "NOR": "OR", "XNOR": "XOR"}.get(name, name)
        invert = name in ("NAND", "NOR", "XNOR")
        return GateFunction(name, arity, _reduction_table(base, arity, invert))
    if name in TWO_INPUT_NAMES:
        if arity != 2:
            raise CircuitError(f"{name} is a 2-input function")
        return GateFunction(name, 2, TWO_INPUT_NAMES.index(name))
    raise CircuitError(f"unknown gate function {name!r}")


def two_input_function(table):
    """GateFunction for a 2-input truth-table value in [0, 15]."""
    return GateFunction(TWO_INPUT_NAMES[table], 2, table)


ALL_16_FUNCTIONS = tuple(two_input_function(t) for t in range(16))


@dataclass(frozen=True)
class Gate:
    """Single gate; `name` is also its output net."""

    name: str
    fn: GateFunction
    fanin: tuple

    def __post_init__(self):
        object.__setattr__(self, "fanin", tuple(self.fanin))
        if len(self.fanin) != self.fn.arity:
            raise CircuitError(
                f"gate {self.name}: {len(self.fanin)} fanins for arity-{self.fn.arity} {self.fn.name}")
        if self.name in self.fanin:
            raise CircuitError(f"gate {self.name} drives itself")


@dataclass(frozen=True)
class SequentialElement:
    """One flip-flop: Q output net driven by D input net."""

    d_input: str
    q_output: str


class Circuit:
    """Immutable combinational circuit.

    Nets are opaque strings. Every fanin must be a primary input, a latch
    output (pre-unroll sequential source), or another gate's output. The
    gate graph must be acyclic; construction fails otherwise.
    """

    __slots__ = ("inputs", "outputs", "gates", "latch_outputs", "pragmas",
                 "pseudo_inputs", "pseudo_outputs", "_topo", "_fanout")

    def __init__(self, inputs, outputs, gates, latch_outputs=(), pragmas=(),
                 pseudo_inputs=(), pseudo_outputs=()):
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.latch_outputs = tuple(latch_outputs)
        self.pragmas = tuple(pragmas)
        self.pseudo_inputs = frozenset(pseudo_inputs)
        self.pseudo_outputs = frozenset(pseudo_outputs)

        gate_map = {}
        for g in gates:
            if g.name in gate_map:
                raise CircuitError(f"duplicate definition of net {g.name}")
            gate_map[g.name] = g
        self.gates = gate_map

        sources = set(self.inputs) | set(self.latch_outputs)
        if len(sources) != len(self.inputs) + len(self.latch_outputs):
            raise CircuitError("duplicate input/latch net names")
        clash = sources & gate_map.keys()
        if clash:
            raise CircuitError(f"net(s) defined both as source and gate: {sorted(clash)}")

        driven = sources | gate_map.keys()
        for g in gate_map.values():
            for f in g.fanin:
                if f not in driven:
                    raise CircuitError(f"gate {g.name}: undriven fanin net {f}")
        for o in self.outputs:
            if o not in driven:
                raise CircuitError(f"undriven primary output {o}")

        self._topo = self._toposort()
        self._fanout = None

    def _toposort(self):
        indeg = {}
        consumers = {}
        for g in self.gates.values():
            cnt = 0
            for f in g.fanin:
                if f in self.gates:
                    cnt += 1
                    consumers.setdefault(f, []).append(g.name)
            indeg[g.name] = cnt
        ready = [n for n, d in indeg.items() if d == 0]
        order = []
        while ready:
            n = ready.pop()
            order.append(self.gates[n])
            for c in consumers.get(n, ()):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.gates):
            cyclic = sorted(n for n, d in indeg.items() if d > 0)
            raise CircuitError(f"combinational cycle through {cyclic[:5]}")
        return tuple(order)

    # -- graph queries -------------------------------------------------

    def topological_order(self):
        """Gates ordered so each appears after all of its gate fanins."""
        return self._topo

    def _fanout_map(self):
        if self._fanout is None:
            m = {}
            for g in self.gates.values():
                for f in g.fanin:
                    m.setdefault(f, []).append(g.name)
            self._fanout = m
        return self._fanout

    def fanout_cone(self, net):
        """Primary outputs reachable from `net` (including `net` itself if a PO)."""
        fanout = self._fanout_map()
        out_set = set(self.outputs)
        seen = set()
        stack = [net]
        reached = set()
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            if n in out_set:
                reached.add(n)
            stack.extend(fanout.get(n, ()))
        return frozenset(reached)

    def fanin_cone(self, outputs):
        """All gates feeding any of the given output nets."""
        seen = set()
        gates = set()
        stack = list(outputs)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            g = self.gates.get(n)
            if g is not None:
                gates.add(n)
                stack.extend(g.fanin)
        return frozenset(gates)

    def nets(self):
        return set(self.inputs) | set(self.latch_outputs) | set(self.gates)

    @property
    def num_gates(self):
        return len(self.gates)

    def replace(self, **kw):
        """New Circuit with the given fields swapped out."""
        args = dict(inputs=self.inputs, outputs=self.outputs,
                    gates=list(self.gates.values()),
                    latch_outputs=self.latch_outputs, pragmas=self.pragmas,
                    pseudo_inputs=self.pseudo_inputs,
                    pseudo_outputs=self.pseudo_outputs)
        args.update(kw)
        return Circuit(**args)

    def __repr__(self):
        return (f"Circuit({len(self.inputs)} in, {len(self.outputs)} out, "
                f"{len(self.gates)} gates)")


# -- .bench I/O ---------------------------------------------------------

_IO_RE = re.compile(r"^(INPUT|OUTPUT)\s*\(\s*([^\s()]+)\s*\)$", re.IGNORECASE)
_GATE_RE = re.compile(r"^([^\s=()]+)\s*=\s*([A-Za-z]+)\s*\(\s*([^()]*)\s*\)$")


def parse_bench(text):
    """Parse `.bench` text into (Circuit, [SequentialElement]).

    `#@` pragma lines are preserved verbatim on the circuit; other
    comments are discarded. DFF gates become SequentialElements and their
    Q nets are latch outputs of the returned circuit.
    """
    inputs, outputs, gates, elements, pragmas = [], [], [], [], []
    declared_inputs = set()
    defined = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#@"):
            pragmas.append(raw.rstrip("\n"))
            continue
        if "#" in line:
            line = line[:line.index("#")].strip()
        if not line:
            continue

        m = _IO_RE.match(line)
        if m:
            kind, net = m.group(1).upper(), m.group(2)
            if kind == "INPUT":
                if net in declared_inputs:
                    raise BenchParseError(f"duplicate INPUT({net})", lineno)
                declared_inputs.add(net)
                inputs.append(net)
            else:
                outputs.append(net)
            continue

        m = _GATE_RE.match(line)
        if m:
            out, fn_name, args = m.group(1), m.group(2).upper(), m.group(3)
            fanin = [a.strip() for a in args.split(",")] if args.strip() else []
            if any(not f for f in fanin):
                raise BenchParseError("empty fanin name", lineno)
            if out in defined or out in declared_inputs:
                raise BenchParseError(f"duplicate definition of net {out}", lineno)
            defined.add(out)
            if fn_name == "DFF":
                if len(fanin) != 1:
                    raise BenchParseError("DFF takes exactly one input", lineno)
                elements.append(SequentialElement(d_input=fanin[0], q_output=out))
                continue
            if fn_name not in BENCH_GATE_NAMES:
                raise BenchParseError(f"unknown gate type {fn_name}", lineno)
            if fn_name in _UNARY_GATES and len(fanin) != 1:
                raise BenchParseError(f"{fn_name} takes exactly one input", lineno)
            try:
                fn = gate_function(fn_name, len(fanin))
                gates.append(Gate(out, fn, tuple(fanin)))
            except CircuitError as e:
                raise BenchParseError(str(e), lineno) from e
            continue

        raise BenchParseError(f"unrecognized syntax: {line!r}", lineno)

    if not outputs:
        raise BenchParseError("no outputs declared")

    circuit = Circuit(inputs, outputs, gates,
                      latch_outputs=[e.q_output for e in elements],
                      pragmas=pragmas)
    return circuit, elements


def write_bench(circuit, elements=()):
    """Render a circuit back to `.bench` text.

    Gates are emitted in topological order; pragma lines are passed
    through byte-exact. Re-parsing yields an isomorphic circuit.
    """
    lines = []
    for n in circuit.inputs:
        lines.append(f"INPUT({n})")
    for n in circuit.outputs:
        lines.append(f"OUTPUT({n})")
    lines.extend(circuit.pragmas)
    for e in elements:
        lines.append(f"{e.q_output} = DFF({e.d_input})")
    for g in circuit.topological_order():
        if g.fn.name not in BENCH_GATE_NAMES:
            raise CircuitError(f"gate {g.name}: {g.fn.name} has no .bench spelling")
        lines.append(f"{g.name} = {g.fn.name}({', '.join(g.fanin)})")
    return "\n".join(lines) + "\n"


def unroll_sequential(circuit, elements):
    """Break every flip-flop: Q becomes a pseudo-PI, D a pseudo-PO.

    The result is purely combinational; pseudo nets are flagged in the
    circuit metadata. A circuit with no elements is returned unchanged.
    """
    if not elements:
        return circuit
    latch = set(circuit.latch_outputs)
    known = circuit.nets()
    for e in elements:
        if e.q_output not in latch:
            raise CircuitError(f"element Q net {e.q_output} is not a latch output")
        if e.d_input not in known:
            raise CircuitError(f"element D net {e.d_input} unknown")
    q_nets = [e.q_output for e in elements]
    d_nets = [e.d_input for e in elements]
    remaining = [n for n in circuit.latch_outputs if n not in set(q_nets)]
    return Circuit(
        inputs=list(circuit.inputs) + q_nets,
        outputs=list(circuit.outputs) + d_nets,
        gates=list(circuit.gates.values()),
        latch_outputs=remaining,
        pragmas=circuit.pragmas,
        pseudo_inputs=circuit.pseudo_inputs | set(q_nets),
        pseudo_outputs=circuit.pseudo_outputs | set(d_nets),
    )


def decompose_to_2input(circuit):
    """Rewrite gates of arity > 2 into trees of 2-input gates.

    NAND/NOR/XNOR become a reduction tree of the base function with the
    inversion applied at the root only.
    """
    new_gates = []
    for g in circuit.topological_order():
        if g.fn.arity <= 2:
            new_gates.append(g)
            continue
        kind = g.fn.name
        if kind not in _REDUCTION_GATES:
            raise CircuitError(f"cannot decompose {kind} of arity {g.fn.arity}")
        base = {"NAND": "AND", "NOR": "OR", "XNOR": "XOR"}.get(kind, kind)
        nets = list(g.fanin)
        k = 0
        while len(nets) > 2:
            a = nets.pop(0)
            b = nets.pop(0)
            mid = f"{g.name}_d{k}"
            k += 1
            new_gates.append(Gate(mid, gate_function(base, 2), (a, b)))
            nets.append(mid)
        new_gates.append(Gate(g.name, gate_function(kind, 2), tuple(nets)))
    return circuit.replace(gates=new_gates)
