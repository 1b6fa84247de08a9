"""Circuit evaluation: deterministic, probabilistic, and polymorphic.

A probabilistic gate computes its function and then flips its output with
probability (1 - correctness), independently per gate per evaluation. A
polymorphic gate draws its function from a distribution per evaluation.

Randomness is counter-based: each (seed, stream, gate, sequence index)
maps to one Philox block, so draws are reproducible and independent of
evaluation order or batching.
"""

from __future__ import annotations

from dataclasses import dataclass
import hashlib

import numpy as np
from numpy.random import Philox

from .netlist import CircuitError

_INV53 = 1.0 / (1 << 53)
_SH11 = np.uint64(11)


@dataclass(frozen=True)
class EvalMode:
    kind: str
    seed: int = 0
    stream: int = 0

    @classmethod
    def deterministic(cls):
        return cls("deterministic")

    @classmethod
    def stochastic(cls, seed, stream=0):
        return cls("stochastic", seed, stream)


DETERMINISTIC = EvalMode.deterministic()


@dataclass
class OutputHistogram:
    """Occurrence counts of output bit-patterns over a fixed sample count."""

    counts: dict
    total: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ValueError("histogram counts do not sum to total")

    def merge(self, other):
        counts = dict(self.counts)
        for k, v in other.counts.items():
            counts[k] = counts.get(k, 0) + v
        return OutputHistogram(counts, self.total + other.total)

    def most_common(self):
        """Patterns sorted by count descending, ties broken lexicographically."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _philox_key(seed, stream, gate_name):
    h = hashlib.blake2b(f"{seed}|{stream}|{gate_name}".encode(), digest_size=16)
    d = h.digest()
    return [int.from_bytes(d[:8], "little"), int.from_bytes(d[8:], "little")]


def _gate_uniforms(seed, stream, gate_name, base, count):
    """Two uniform arrays (flip lane, function lane) for sample indices
    [base, base+count): lane j of Philox block i serves sequence index i."""
    bg = Philox(key=_philox_key(seed, stream, gate_name))
    if base:
        bg.advance(base)
    raw = bg.random_raw(4 * count).reshape(count, 4)
    flip = (raw[:, 0] >> _SH11) * _INV53
    fdraw = (raw[:, 1] >> _SH11) * _INV53
    return flip, fdraw


_OP_AND, _OP_OR, _OP_XOR, _OP_NOT, _OP_BUF, _OP_TBL = range(6)
_OP_BY_NAME = {"AND": (_OP_AND, False), "NAND": (_OP_AND, True),
               "OR": (_OP_OR, False), "NOR": (_OP_OR, True),
               "XOR": (_OP_XOR, False), "XNOR": (_OP_XOR, True),
               "NOT": (_OP_NOT, False), "BUFF": (_OP_BUF, False)}


class Simulator:
    """Compiled evaluator for one (circuit, annotations) pair.

    `key_inputs` names the PIs that carry key bits; the remaining PIs take
    the input pattern, in declaration order.
    """

    def __init__(self, circuit, annotations=None, key_inputs=(), poly_epoch=1):
        if circuit.latch_outputs:
            raise CircuitError("circuit has sequential elements; unroll first")
        if poly_epoch < 1:
            raise ValueError("poly_epoch must be >= 1")
        self.circuit = circuit
        self.poly_epoch = poly_epoch
        self.key_inputs = tuple(key_inputs)
        key_set = set(self.key_inputs)
        self.free_inputs = tuple(n for n in circuit.inputs if n not in key_set)
        if len(key_set) != len(self.key_inputs) or \
                len(self.free_inputs) + len(self.key_inputs) != len(circuit.inputs):
            raise CircuitError("key inputs must be distinct primary inputs")

        ann_map = {}
        for a in annotations or ():
            if a.gate not in circuit.gates:
                raise CircuitError(f"annotation targets unknown gate {a.gate}")
            ann_map[a.gate] = a

        order = list(circuit.inputs) + [g.name for g in circuit.topological_order()]
        self._net_index = {n: i for i, n in enumerate(order)}
        self._n_nets = len(order)
        self._out_idx = np.array([self._net_index[o] for o in circuit.outputs],
                                 dtype=np.intp)
        self._free_idx = np.array([self._net_index[n] for n in self.free_inputs],
                                  dtype=np.intp)
        self._key_idx = np.array([self._net_index[n] for n in self.key_inputs],
                                 dtype=np.intp)

        self._steps = []
        self.stochastic_gates = []
        for g in circuit.topological_order():
            fin = np.array([self._net_index[f] for f in g.fanin], dtype=np.intp)
            out = self._net_index[g.name]
            op, inv = _OP_BY_NAME.get(g.fn.name, (_OP_TBL, False))
            table = None
            if op == _OP_TBL:
                if g.fn.arity > 16:
                    raise CircuitError(f"gate {g.name}: arity too large to tabulate")
                table = np.array(g.fn.table_bits(), dtype=bool)
            ann = ann_map.get(g.name)
            prob_err = poly = None
            if ann is not None:
                if ann.mode == "prob":
                    prob_err = 1.0 - ann.correctness
                elif ann.mode == "poly":
                    fns = [fn for fn, _ in ann.distribution]
                    if any(fn.arity != g.fn.arity for fn in fns):
                        raise CircuitError(f"polymorphic arity mismatch on {g.name}")
                    tables = np.array([fn.table_bits() for fn in fns], dtype=bool)
                    cdf = np.cumsum([p for _, p in ann.distribution])
                    poly = (tables, cdf)
                else:
                    raise CircuitError(f"unknown annotation mode {ann.mode!r}")
                self.stochastic_gates.append(g.name)
            self._steps.append((g.name, op, inv, fin, out, table, prob_err, poly))

    # -- core ------------------------------------------------------------

    def _run(self, pi_matrix, mode, base_index):
        """Evaluate a batch; returns (n_outputs, batch) bool."""
        return self._values(pi_matrix, mode, base_index)[self._out_idx]

    def _values(self, pi_matrix, mode, base_index):
        """Evaluate a batch; pi_matrix is (n_circuit_inputs, batch) bool;
        returns values for every net, (n_nets, batch) bool."""
        batch = pi_matrix.shape[1]
        vals = np.empty((self._n_nets, batch), dtype=bool)
        vals[:len(self.circuit.inputs)] = pi_matrix
        stochastic = mode.kind == "stochastic"
        for name, op, inv, fin, out, table, prob_err, poly in self._steps:
            rows = vals[fin]
            if poly is not None and stochastic:
                # the drawn table is the whole function; no inversion on top
                tables, cdf = poly
                _, fu = self._poly_uniforms(mode, name, base_index, batch)
                fidx = np.searchsorted(cdf, fu, side="right")
                np.clip(fidx, 0, len(cdf) - 1, out=fidx)
                idx = np.zeros(batch, dtype=np.intp)
                for r in rows:
                    idx <<= 1
                    idx |= r
                vals[out] = tables[fidx, idx]
                continue
            if op == _OP_AND:
                res = np.logical_and.reduce(rows, axis=0)
            elif op == _OP_OR:
                res = np.logical_or.reduce(rows, axis=0)
            elif op == _OP_XOR:
                res = np.logical_xor.reduce(rows, axis=0)
            elif op == _OP_NOT:
                res = ~rows[0]
            elif op == _OP_BUF:
                res = rows[0].copy()
            else:
                idx = np.zeros(batch, dtype=np.intp)
                for r in rows:
                    idx <<= 1
                    idx |= r
                res = table[idx]
            if inv:
                res = ~res
            if stochastic and prob_err is not None and prob_err > 0.0:
                flip, _ = _gate_uniforms(mode.seed, mode.stream, name,
                                         base_index, batch)
                res = res ^ (flip < prob_err)
            vals[out] = res
        return vals

    def _poly_uniforms(self, mode, name, base_index, batch):
        e = self.poly_epoch
        if e == 1:
            return _gate_uniforms(mode.seed, mode.stream, name, base_index, batch)
        first = base_index // e
        last = (base_index + batch - 1) // e
        flip, fu = _gate_uniforms(mode.seed, mode.stream, name,
                                  first, last - first + 1)
        pick = (base_index + np.arange(batch)) // e - first
        return flip[pick], fu[pick]

    def _pi_matrix(self, input_bits, key_bits, batch):
        if len(input_bits) != len(self.free_inputs):
            raise CircuitError(
                f"input width {len(input_bits)} != {len(self.free_inputs)} inputs")
        key_bits = key_bits or ""
        if len(key_bits) != len(self.key_inputs):
            raise CircuitError(
                f"key width {len(key_bits)} != {len(self.key_inputs)} key inputs")
        m = np.empty((len(self.circuit.inputs), batch), dtype=bool)
        m[self._free_idx] = np.array([b == "1" for b in input_bits])[:, None]
        if len(key_bits):
            m[self._key_idx] = np.array([b == "1" for b in key_bits])[:, None]
        return m

    # -- public API --------------------------------------------------------

    def eval(self, input_bits, key=None, mode=DETERMINISTIC, sample_index=0):
        """One evaluation; returns the output pattern as a '0'/'1' string."""
        out = self._run(self._pi_matrix(input_bits, key, 1), mode, sample_index)
        return "".join("1" if b else "0" for b in out[:, 0])

    def sample(self, input_bits, samples, seed, stream=0, base_index=0, key=None):
        """S independent stochastic evaluations of one input, as a histogram."""
        if samples < 1:
            raise ValueError("samples must be >= 1")
        mode = EvalMode.stochastic(seed, stream)
        out = self._run(self._pi_matrix(input_bits, key, samples), mode, base_index)
        return _histogram(out)

    def eval_batch(self, input_matrix, key=None, mode=DETERMINISTIC, base_index=0):
        """Evaluate many input patterns at once.

        `input_matrix` is (n_inputs, batch) bool; returns (n_outputs, batch)
        bool. In stochastic mode, column j uses sequence index base_index+j
        (one draw per pattern).
        """
        batch = input_matrix.shape[1]
        m = np.empty((len(self.circuit.inputs), batch), dtype=bool)
        m[self._free_idx] = input_matrix
        if len(self.key_inputs):
            if not key or len(key) != len(self.key_inputs):
                raise CircuitError("key width mismatch")
            m[self._key_idx] = np.array([b == "1" for b in key])[:, None]
        return self._run(m, mode, base_index)

    def net_values(self, input_bits, key=None):
        """Deterministic values of every net for one input, as a dict."""
        vals = self._values(self._pi_matrix(input_bits, key, 1),
                            DETERMINISTIC, 0)
        return {net: bool(vals[i, 0]) for net, i in self._net_index.items()}

    def eval_key_batch(self, input_bits, key_matrix, mode=DETERMINISTIC):
        """Evaluate one input pattern under many keys at once.

        `key_matrix` is (n_key_inputs, batch) bool; returns
        (n_outputs, batch) bool.
        """
        batch = key_matrix.shape[1]
        m = np.empty((len(self.circuit.inputs), batch), dtype=bool)
        m[self._free_idx] = np.array([b == "1" for b in input_bits])[:, None]
        m[self._key_idx] = key_matrix
        return self._run(m, mode, 0)

    def exhaustive(self, key=None):
        """Outputs for all 2^n input patterns, minterm order; n <= 24."""
        n = len(self.free_inputs)
        if n > 24:
            raise CircuitError("too many inputs for exhaustive evaluation")
        codes = np.arange(1 << n, dtype=np.int64)
        rows = [(codes >> (n - 1 - i)) & 1 for i in range(n)]
        matrix = np.array(rows, dtype=bool) if n else np.zeros((0, 1), dtype=bool)
        return self.eval_batch(matrix, key=key)


def _histogram(out_matrix):
    samples = out_matrix.shape[1]
    if out_matrix.shape[0] == 0:
        return OutputHistogram({"": samples}, samples)
    cols = np.ascontiguousarray(out_matrix.T)
    patterns, counts = np.unique(cols, axis=0, return_counts=True)
    cmap = {}
    for row, c in zip(patterns, counts):
        cmap["".join("1" if b else "0" for b in row)] = int(c)
    return OutputHistogram(cmap, samples)


def random_input_matrix(n_inputs, patterns, seed, stream=0):
    """Uniform random input patterns, reproducible from (seed, stream)."""
    bg = Philox(key=_philox_key(seed, stream, "__inputs__"))
    need_blocks = (n_inputs * patterns + 63) // 64 if n_inputs else 1
    raw = bg.random_raw(4 * ((need_blocks + 3) // 4))
    bits = np.unpackbits(raw.view(np.uint8))
    return bits[:n_inputs * patterns].reshape(n_inputs, patterns).astype(bool)


# -- spec-level convenience wrappers -------------------------------------

def evaluate(circuit, input_bits, key=None, key_inputs=(), annotations=None,
             mode=DETERMINISTIC, sample_index=0):
    sim = Simulator(circuit, annotations=annotations, key_inputs=key_inputs)
    return sim.eval(input_bits, key=key, mode=mode, sample_index=sample_index)


def sample_outputs(circuit, input_bits, samples, seed, stream=0, key=None,
                   key_inputs=(), annotations=None):
    sim = Simulator(circuit, annotations=annotations, key_inputs=key_inputs)
    return sim.sample(input_bits, samples, seed, stream=stream, key=key)
