"""Seeded generator for benchmark-shaped combinational circuits.

The attack studies need mid-size netlists with realistic masking
behavior. This generator produces fully-connected DAGs (every gate feeds
some primary output, every input is consumed) with a controllable
function mix, sized to match the classic benchmark profiles used in the
desk-scale experiments.
"""

from __future__ import annotations

from dataclasses import dataclass
import random

from .netlist import Circuit, Gate, gate_function


@dataclass(frozen=True)
class Profile:
    name: str
    n_inputs: int
    n_outputs: int
    n_gates: int
    seed: int
    # weighted function mix; masking-heavy with a thin XOR tail, which
    # reproduces the error-propagation behavior the studies rely on
    mix: tuple = (("NAND", 0.37), ("NOR", 0.17), ("AND", 0.14), ("OR", 0.12),
                  ("XOR", 0.02), ("XNOR", 0.01), ("NOT", 0.10), ("BUFF", 0.07))
    locality: int = 100000   # how far back the second fanin reaches


# Desk-scale stand-ins matching the published benchmark shapes
# (inputs / outputs / gate count); the internal structure is synthetic.
PROFILES = {
    "c432": Profile("c432", 36, 7, 160, seed=432),
    "c880": Profile("c880", 60, 26, 383, seed=880),
    "c7552": Profile("c7552", 207, 108, 3512, seed=7552),
    "apex4": Profile("apex4", 9, 19, 1200, seed=44),
    "des": Profile("des", 256, 245, 1500, seed=3450),
}


def generate(profile):
    """Build the circuit for a profile; same profile -> identical netlist."""
    rng = random.Random(profile.seed)
    names, weights = zip(*profile.mix)
    sinks = [f"i{k}" for k in range(profile.n_inputs)]   # zero-fanout nets
    all_nets = list(sinks)
    gates = []

    def pop_sink():
        return sinks.pop(rng.randrange(len(sinks)))

    def recent_net(exclude):
        lo = max(0, len(all_nets) - profile.locality)
        for _ in range(8):
            n = all_nets[rng.randrange(lo, len(all_nets))]
            if n != exclude:
                return n
        for n in reversed(all_nets):
            if n != exclude:
                return n
        raise AssertionError("no distinct net available")

    for i in range(profile.n_gates):
        remaining = profile.n_gates - i
        need_drain = len(sinks) - profile.n_outputs
        fn_name = rng.choices(names, weights)[0]
        if need_drain >= remaining and len(sinks) >= 2:
            # must shrink the sink pool on every remaining gate
            fn_name = rng.choice(["NAND", "NOR", "AND", "OR"])
        out = f"g{i}"
        if fn_name in ("NOT", "BUFF"):
            a = pop_sink() if sinks and need_drain > -1 else recent_net(None)
            gates.append(Gate(out, gate_function(fn_name), (a,)))
        else:
            drain_two = (len(sinks) >= 2 and need_drain > 0
                         and rng.random() < min(1.0, need_drain / max(1, remaining) + 0.15))
            a = pop_sink() if sinks else recent_net(None)
            b = pop_sink() if drain_two else recent_net(a)
            if a == b:
                b = recent_net(a)
            gates.append(Gate(out, gate_function(fn_name, 2), (a, b)))
        sinks.append(out)
        all_nets.append(out)

    if len(sinks) < profile.n_outputs:
        extra = [n for n in reversed(all_nets) if n not in set(sinks)]
        sinks.extend(extra[:profile.n_outputs - len(sinks)])
    outputs = sorted(sinks, key=lambda n: all_nets.index(n))[-profile.n_outputs:] \
        if len(sinks) > profile.n_outputs else list(sinks)
    inputs = [f"i{k}" for k in range(profile.n_inputs)]
    return Circuit(inputs, outputs, gates)


def generate_named(name):
    return generate(PROFILES[name])
