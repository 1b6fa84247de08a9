import os

import pytest
from hypothesis import strategies as st

from camoforge.netlist import Circuit, Gate, gate_function, parse_bench

BENCH_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks")


def bench_path(name):
    return os.path.join(BENCH_DIR, f"{name}.bench")


@pytest.fixture(scope="session")
def c17():
    with open(bench_path("c17")) as f:
        circuit, _ = parse_bench(f.read())
    return circuit


def brute_eval(circuit, assignment):
    """Reference evaluator: plain dict walk, no numpy, no compilation."""
    values = dict(assignment)
    for g in circuit.topological_order():
        values[g.name] = g.fn.output([values[n] for n in g.fanin])
    return "".join("1" if values[o] else "0" for o in circuit.outputs)


@st.composite
def circuits(draw, max_inputs=5, max_gates=10, functions=("AND", "NAND", "OR",
                                                          "NOR", "XOR", "XNOR",
                                                          "NOT", "BUFF")):
    n_in = draw(st.integers(1, max_inputs))
    inputs = [f"x{i}" for i in range(n_in)]
    nets = list(inputs)
    gates = []
    for i in range(draw(st.integers(1, max_gates))):
        fn_name = draw(st.sampled_from(functions))
        if fn_name in ("NOT", "BUFF"):
            fan = [draw(st.sampled_from(nets))]
            fn = gate_function(fn_name)
        else:
            arity = draw(st.integers(2, 3)) if len(nets) >= 2 else 2
            fan = draw(st.lists(st.sampled_from(nets), min_size=arity,
                                max_size=arity))
            fn = gate_function(fn_name, arity)
        name = f"g{i}"
        gates.append(Gate(name, fn, tuple(fan)))
        nets.append(name)
    gate_names = [g.name for g in gates]
    n_out = draw(st.integers(1, min(3, len(gate_names))))
    outputs = draw(st.lists(st.sampled_from(gate_names), min_size=n_out,
                            max_size=n_out, unique=True))
    return Circuit(inputs, outputs, gates)
