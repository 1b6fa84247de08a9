"""Oracle-guided deobfuscation: CNF encoding and the three attacks.

The conventional attack iterates discriminating input patterns until no
two consistent keys disagree, then extracts any key satisfying all
recorded I/O constraints. The double-DIP variant constrains each pattern
to rule out at least two incorrect keys. The probabilistic variant (PSAT)
replaces each oracle query with Monte-Carlo sampling and a dominance rule
to establish ground truth against noisy oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import os
import random
import subprocess
import tempfile
import time

import numpy as np

from .sat import Solver
from .simulate import Simulator


class AttackError(Exception):
    pass


@dataclass
class AttackConfig:
    samples: int = 1000           # oracle samples per DIP (PSAT)
    patterns: int = 10000         # final-metric pattern count
    max_iterations: int = 10000
    timeout_s: float = 3600.0
    seed: int = 0
    solver: str = "builtin"       # "builtin" or "dimacs:<path>"
    instrument: bool = False      # track eliminated-key counts (small keys)

    def __post_init__(self):
        if self.samples < 1 or self.patterns < 1:
            raise AttackError("samples and patterns must be >= 1")


@dataclass
class AttackResult:
    status: str                   # Success | InconsistentOracle | IterationCap | Timeout
    key: str | None
    dip_trace: list
    iterations: int
    oracle_queries: int
    runtime_s: float
    clauses: int = 0
    trace_lines: list = field(default_factory=list)
    eliminated_per_iteration: list | None = None

    @property
    def success(self):
        return self.status == "Success"


# -- CNF ------------------------------------------------------------------

@dataclass
class CnfFormula:
    """Plain clause container with a (net, copy) -> variable map."""

    nvars: int = 0
    clauses: list = field(default_factory=list)
    varmap: dict = field(default_factory=dict)

    def new_var(self):
        self.nvars += 1
        return self.nvars

    def add(self, clause):
        if not clause:
            raise AttackError("empty clause at construction")
        self.clauses.append(tuple(clause))

    def var(self, net, copy=0):
        key = (net, copy)
        v = self.varmap.get(key)
        if v is None:
            v = self.new_var()
            self.varmap[key] = v
        return v


def _emit_gate_clauses(fn, y, ins, add, new_var):
    """Clauses asserting y <-> fn(ins); XOR chains use fresh variables."""
    name = fn.name
    if name in ("AND", "NAND"):
        yy = -y if name == "NAND" else y
        for i in ins:
            add((-yy, i))
        add((yy,) + tuple(-i for i in ins))
    elif name in ("OR", "NOR"):
        yy = -y if name == "NOR" else y
        for i in ins:
            add((yy, -i))
        add((-yy,) + tuple(ins))
    elif name in ("XOR", "XNOR"):
        acc = ins[0]
        for nxt in ins[1:-1]:
            t = new_var()
            _xor_clauses(t, acc, nxt, add)
            acc = t
        yy = -y if name == "XNOR" else y
        _xor_clauses(yy, acc, ins[-1], add)
    elif name == "NOT":
        add((-y, -ins[0]))
        add((y, ins[0]))
    elif name == "BUFF":
        add((-y, ins[0]))
        add((y, -ins[0]))
    else:
        # generic truth table, one clause per minterm
        n = fn.arity
        for m in range(1 << n):
            out = (fn.table >> m) & 1
            clause = []
            for j, i in enumerate(ins):
                bit = (m >> (n - 1 - j)) & 1
                clause.append(-i if bit else i)
            clause.append(y if out else -y)
            add(tuple(clause))


def _xor_clauses(y, a, b, add):
    add((-y, a, b))
    add((-y, -a, -b))
    add((y, -a, b))
    add((y, a, -b))


def encode(circuit, copy=0, formula=None):
    """Tseitin-encode one copy of a circuit into a CnfFormula.

    One variable per net per copy; equisatisfiable with the circuit
    function. Fails on circuits that still carry sequential elements.
    """
    if circuit.latch_outputs:
        raise AttackError("sequential elements present; unroll first")
    if not circuit.gates and not circuit.inputs:
        raise AttackError("empty circuit")
    f = formula if formula is not None else CnfFormula()
    for n in circuit.inputs:
        f.var(n, copy)
    for g in circuit.topological_order():
        y = f.var(g.name, copy)
        ins = [f.var(x, copy) for x in g.fanin]
        _emit_gate_clauses(g.fn, y, ins, f.add, f.new_var)
    return f


def export_dimacs(formula):
    """Standard DIMACS CNF text."""
    lines = [f"p cnf {formula.nvars} {len(formula.clauses)}"]
    for c in formula.clauses:
        lines.append(" ".join(str(l) for l in c) + " 0")
    return "\n".join(lines) + "\n"


# -- solver backends --------------------------------------------------------

class ExternalDimacsSolver:
    """Escape hatch running any DIMACS solver binary per query.

    Non-incremental: the full formula is exported on every call.
    Understands both minisat-style output files and SAT-competition
    's/v' stdout.
    """

    def __init__(self, path, seed=0):
        self.path = path
        self.nvars = 0
        self.clauses = []
        self._model = {}

    def new_var(self):
        self.nvars += 1
        return self.nvars

    def new_vars(self, n):
        base = self.nvars
        self.nvars += n
        return base + 1

    def add_clause(self, lits):
        self.clauses.append(tuple(lits))
        return True

    def solve(self, assumptions=(), deadline=None, max_conflicts=None):
        budget = None
        if deadline is not None:
            budget = max(0.1, deadline - time.monotonic())
        with tempfile.TemporaryDirectory() as td:
            cnf = os.path.join(td, "q.cnf")
            out = os.path.join(td, "q.out")
            clauses = self.clauses + [(a,) for a in assumptions]
            with open(cnf, "w") as fh:
                fh.write(f"p cnf {self.nvars} {len(clauses)}\n")
                for c in clauses:
                    fh.write(" ".join(map(str, c)) + " 0\n")
            try:
                proc = subprocess.run([self.path, cnf, out], capture_output=True,
                                      text=True, timeout=budget)
            except subprocess.TimeoutExpired:
                return None
            text = proc.stdout
            if os.path.exists(out):
                with open(out) as fh:
                    text = fh.read() + "\n" + text
            sat = None
            lits = []
            for line in text.splitlines():
                line = line.strip()
                if line in ("SAT",) or line.startswith("s SATISFIABLE"):
                    sat = True
                elif line in ("UNSAT",) or line.startswith("s UNSATISFIABLE"):
                    sat = False
                elif sat and (line.startswith("v ") or line[:1] in "-0123456789"):
                    lits.extend(int(t) for t in line.lstrip("v ").split())
            if sat is None:
                return None
            if sat:
                self._model = {abs(l): l > 0 for l in lits if l != 0}
            return sat

    def value(self, var):
        return self._model.get(var, False)


def _make_solver(config):
    if config.solver == "builtin":
        return Solver(seed=config.seed)
    if config.solver.startswith("dimacs:"):
        return ExternalDimacsSolver(config.solver.split(":", 1)[1], seed=config.seed)
    raise AttackError(f"unknown solver {config.solver!r}")


# -- ground truth from histograms ------------------------------------------

def ground_truth(histogram, rng):
    """Pick the response pattern for one sampled DIP.

    The most frequent pattern is taken when it occurs at least as many
    times as the second and third most frequent combined; otherwise a
    pattern is drawn with probability proportional to its count. Returns
    (pattern, dominant_flag).
    """
    ranked = histogram.most_common()
    if not ranked:
        raise AttackError("empty histogram")
    c0 = ranked[0][1]
    c1 = ranked[1][1] if len(ranked) > 1 else 0
    c2 = ranked[2][1] if len(ranked) > 2 else 0
    if c0 >= c1 + c2:
        return ranked[0][0], True
    total = sum(c for _, c in ranked)
    pick = rng.random() * total
    acc = 0.0
    for pat, c in ranked:
        acc += c
        if pick < acc:
            return pat, False
    return ranked[-1][0], False


def prune_inconsistent_keys(candidates, response_of, dip, oracle_output):
    """Split candidate keys by agreement with one oracle response.

    `response_of(key, dip)` gives the candidate's output pattern. Returns
    (survivors, eliminated) preserving candidate order.
    """
    survivors, eliminated = [], []
    for k in candidates:
        (survivors if response_of(k, dip) == oracle_output else eliminated).append(k)
    return survivors, eliminated


# -- shared attack machinery -------------------------------------------------

CONST, VAR = "c", "v"


def _emit_gate(solver, fn, ins):
    """Emit clauses for one gate over resolved fanins.

    `ins` entries are (CONST, bit) or (VAR, lit) with lit a signed DIMACS
    literal. Constants fold away at emission; buffers and inverters fold
    into literal signs. Returns the gate output in the same form.
    """
    name = fn.name
    if name in ("NOT", "BUFF"):
        t, v = ins[0]
        neg = name == "NOT"
        if t == CONST:
            return CONST, (v ^ 1 if neg else v)
        return VAR, (-v if neg else v)
    if name in ("AND", "NAND", "OR", "NOR"):
        is_or = name in ("OR", "NOR")
        inv = name in ("NAND", "NOR")
        dom = 1 if is_or else 0
        vs = []
        for t, v in ins:
            if t == CONST:
                if v == dom:
                    return CONST, dom ^ (1 if inv else 0)
            else:
                vs.append(v)
        if not vs:
            return CONST, (1 - dom) ^ (1 if inv else 0)
        if len(vs) == 1:
            return VAR, (-vs[0] if inv else vs[0])
        y = solver.new_var()
        yy = -y if inv else y
        if is_or:
            for v in vs:
                solver.add_clause((yy, -v))
            solver.add_clause((-yy,) + tuple(vs))
        else:
            for v in vs:
                solver.add_clause((-yy, v))
            solver.add_clause((yy,) + tuple(-v for v in vs))
        return VAR, y
    if name in ("XOR", "XNOR"):
        flip = 1 if name == "XNOR" else 0
        vs = []
        for t, v in ins:
            if t == CONST:
                flip ^= v
            else:
                vs.append(v)
        if not vs:
            return CONST, flip
        acc = vs[0]
        for nxt in vs[1:]:
            t = solver.new_var()
            _xor_clauses(t, acc, nxt, solver.add_clause)
            acc = t
        return VAR, (-acc if flip else acc)
    # generic truth table: partially evaluate over constant positions
    var_pos = [i for i, (t, _) in enumerate(ins) if t == VAR]
    n = fn.arity
    if not var_pos:
        m = 0
        for t, v in ins:
            m = (m << 1) | v
        return CONST, (fn.table >> m) & 1
    y = solver.new_var()
    for combo in range(1 << len(var_pos)):
        m = 0
        clause = []
        for i, (t, v) in enumerate(ins):
            if t == CONST:
                bit = v
            else:
                j = var_pos.index(i)
                bit = (combo >> (len(var_pos) - 1 - j)) & 1
                clause.append(-v if bit else v)
            m = (m << 1) | bit
        out = (fn.table >> m) & 1
        clause.append(y if out else -y)
        solver.add_clause(tuple(clause))
    return VAR, y


class _AttackContext:
    """Shared miter/constraint encoding for the oracle-guided loops.

    Gates outside the fanout cone of the key inputs cannot depend on the
    key: the miter encodes them once and shares them across key copies,
    and per-DIP constraint copies replace them with simulated constants.
    """

    def __init__(self, locked, config, n_key_copies):
        self.locked = locked
        self.circuit = locked.circuit
        self.config = config
        self.solver = _make_solver(config)
        self.free_inputs = locked.free_inputs
        self.key_inputs = locked.key_inputs
        self.sim = Simulator(self.circuit, key_inputs=self.key_inputs)
        self.key_cone = self._key_cone()
        topo = self.circuit.topological_order()
        self.cone_order = [g for g in topo if g.name in self.key_cone]

        s = self.solver
        self.x_vars = [s.new_var() for _ in self.free_inputs]
        self.key_vars = [[s.new_var() for _ in self.key_inputs]
                         for _ in range(n_key_copies)]
        shared = dict(zip(self.free_inputs, ((VAR, v) for v in self.x_vars)))
        for g in topo:
            if g.name not in self.key_cone:
                shared[g.name] = _emit_gate(s, g.fn, [shared[f] for f in g.fanin])
        self.shared = shared
        self.copy_out = [self._encode_cone_copy(kv) for kv in self.key_vars]

    def _key_cone(self):
        fanout = {}
        for g in self.circuit.gates.values():
            for f in g.fanin:
                fanout.setdefault(f, []).append(g.name)
        seen = set()
        stack = list(self.key_inputs)
        while stack:
            n = stack.pop()
            for c in fanout.get(n, ()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return frozenset(seen)

    def _encode_cone_copy(self, key_vec):
        s = self.solver
        local = dict(zip(self.key_inputs, ((VAR, v) for v in key_vec)))
        get = lambda f: local.get(f) or self.shared[f]
        for g in self.cone_order:
            local[g.name] = _emit_gate(s, g.fn, [get(f) for f in g.fanin])
        outs = []
        for o in self.circuit.outputs:
            t, v = local.get(o) or self.shared[o]
            if t == CONST:
                outs.append((CONST, v))
            else:
                outs.append((VAR, v))
        return outs

    def add_io_constraint(self, key_vec, x_bits, y_bits):
        """Constrain one key copy to reproduce the oracle response on one
        input; key-independent logic folds to simulated constants."""
        s = self.solver
        zero_key = "0" * len(self.key_inputs)
        consts = self.sim.net_values(x_bits, key=zero_key)
        local = dict(zip(self.key_inputs, ((VAR, v) for v in key_vec)))
        for n, b in zip(self.free_inputs, x_bits):
            local[n] = (CONST, 1 if b == "1" else 0)

        def get(f):
            r = local.get(f)
            if r is not None:
                return r
            if f in self.key_cone:
                raise AssertionError(f"cone net {f} unresolved")
            return CONST, int(consts[f])

        for g in self.cone_order:
            local[g.name] = _emit_gate(s, g.fn, [get(f) for f in g.fanin])
        ok = True
        for o, b in zip(self.circuit.outputs, y_bits):
            want = 1 if b == "1" else 0
            t, v = get(o)
            if t == CONST:
                if v != want:
                    s.unsat = True
                    ok = False
            else:
                ok = s.add_clause((v if want else -v,)) and ok
        return ok

    def diff_vars(self, outs_a, outs_b):
        """XOR variables per output pair that can actually differ."""
        s = self.solver
        dv = []
        for a, b in zip(outs_a, outs_b):
            if a == b:
                continue
            (ta, va), (tb, vb) = a, b
            if ta == CONST and tb == CONST:
                continue    # equal handled above; unequal cannot occur
            if ta == CONST or tb == CONST:
                bit, lit = (va, vb) if ta == CONST else (vb, va)
                dv.append(lit if bit == 0 else -lit)
                continue
            d = s.new_var()
            _xor_clauses(d, va, vb, s.add_clause)
            dv.append(d)
        return dv

    def equal_clauses(self, outs_a, outs_b, act):
        s = self.solver
        for (ta, va), (tb, vb) in zip(outs_a, outs_b):
            if ta == CONST and tb == CONST:
                continue
            if ta == CONST or tb == CONST:
                bit, lit = (va, vb) if ta == CONST else (vb, va)
                s.add_clause((-act, lit if bit else -lit))
                continue
            if va == vb:
                continue
            s.add_clause((-act, -va, vb))
            s.add_clause((-act, va, -vb))

    def extract_bits(self, vars_):
        return "".join("1" if self.solver.value(v) else "0" for v in vars_)

    def clause_count(self):
        return len(self.solver.clauses)


def _dip_hex(bits):
    if not bits:
        return "-"
    width = (len(bits) + 3) // 4
    return format(int(bits, 2), f"0{width}x")


def _finish(ctx, status, key, trace, iters, queries, t0, lines, eliminated):
    return AttackResult(status=status, key=key, dip_trace=trace,
                        iterations=iters, oracle_queries=queries,
                        runtime_s=time.monotonic() - t0,
                        clauses=ctx.clause_count() if ctx else 0,
                        trace_lines=lines,
                        eliminated_per_iteration=eliminated)


def _alive_keys(locked, recorded):
    """Exhaustively enumerate keys consistent with recorded I/O pairs."""
    k = len(locked.key_inputs)
    sim = Simulator(locked.circuit, key_inputs=locked.key_inputs)
    codes = np.arange(1 << k, dtype=np.int64)
    keys = np.array([(codes >> (k - 1 - i)) & 1 for i in range(k)], dtype=bool)
    alive = np.ones(len(codes), dtype=bool)
    for x_bits, y_bits in recorded:
        out = sim.eval_key_batch(x_bits, keys[:, alive])
        want = np.array([b == "1" for b in y_bits], dtype=bool)
        match = (out == want[:, None]).all(axis=0)
        idx = np.flatnonzero(alive)
        alive[idx[~match]] = False
    return alive


def _oracle_guided_loop(locked, oracle, config, respond, two_dip=False):
    """Common skeleton of the conventional / double-DIP / PSAT loops."""
    t0 = time.monotonic()
    deadline = t0 + config.timeout_s
    trace, lines = [], []
    queries_before = oracle.queries
    eliminated = [] if (config.instrument and len(locked.key_inputs) <= 12
                        and len(locked.key_inputs) > 0) else None

    if not locked.key_inputs:
        return _finish(None, "Success", "", trace, 0,
                       0, t0, lines, eliminated)

    n_copies = 4 if two_dip else 2
    ctx = _AttackContext(locked, config, n_copies)
    s = ctx.solver
    act = s.new_var()
    act2 = None

    if not two_dip:
        dv = ctx.diff_vars(ctx.copy_out[0], ctx.copy_out[1])
        if dv:
            s.add_clause((-act,) + tuple(dv))
        else:
            s.add_clause((-act,))   # outputs cannot differ: miter closes at once
    else:
        # copies 0/1 and 2/3 agree pairwise; the sides disagree; keys
        # differ within each pair. act2 re-uses the side diff for the
        # conventional fallback phase.
        ctx.equal_clauses(ctx.copy_out[0], ctx.copy_out[1], act)
        ctx.equal_clauses(ctx.copy_out[2], ctx.copy_out[3], act)
        act2 = s.new_var()
        dv = ctx.diff_vars(ctx.copy_out[0], ctx.copy_out[2])
        if dv:
            s.add_clause((-act,) + tuple(dv))
            s.add_clause((-act2,) + tuple(dv))
        else:
            s.add_clause((-act,))
            s.add_clause((-act2,))
        for i, j in ((0, 1), (2, 3)):
            kd = ctx.diff_vars([(VAR, v) for v in ctx.key_vars[i]],
                               [(VAR, v) for v in ctx.key_vars[j]])
            if kd:
                s.add_clause((-act,) + tuple(kd))
            else:
                s.add_clause((-act,))

    iters = 0
    alive = _alive_keys(locked, []) if eliminated is not None else None
    phase_assumption = [act]
    in_two_dip_phase = two_dip

    while True:
        if iters >= config.max_iterations:
            return _finish(ctx, "IterationCap", None, trace, iters,
                           oracle.queries - queries_before, t0, lines, eliminated)
        res = s.solve(phase_assumption, deadline=deadline)
        if res is None:
            return _finish(ctx, "Timeout", None, trace, iters,
                           oracle.queries - queries_before, t0, lines, eliminated)
        if res is False:
            if in_two_dip_phase:
                # no more double DIPs; fall back to the conventional miter
                in_two_dip_phase = False
                phase_assumption = [-act, act2]
                continue
            break
        iters += 1
        x_bits = ctx.extract_bits(ctx.x_vars)
        y_bits, dominant = respond(x_bits)
        trace.append((x_bits, y_bits))

        if in_two_dip_phase:
            ok = True
            for kv in ctx.key_vars:
                ok = ctx.add_io_constraint(kv, x_bits, y_bits) and ok
        else:
            ok = ctx.add_io_constraint(ctx.key_vars[0], x_bits, y_bits)
            second = ctx.key_vars[2] if two_dip else ctx.key_vars[1]
            ok = ctx.add_io_constraint(second, x_bits, y_bits) and ok

        if eliminated is not None and (not two_dip or in_two_dip_phase):
            before = int(alive.sum())
            alive = _alive_keys(locked, trace)
            eliminated.append(before - int(alive.sum()))

        lines.append(f"{iters}, {_dip_hex(x_bits)}, {_dip_hex(y_bits)}, "
                     f"{'y' if dominant else 'n'}, {ctx.clause_count()}, "
                     f"{time.monotonic() - t0:.3f}")
        if not ok:
            break   # constraints already unsatisfiable

        if time.monotonic() > deadline:
            return _finish(ctx, "Timeout", None, trace, iters,
                           oracle.queries - queries_before, t0, lines, eliminated)

    # extraction: any key consistent with every recorded constraint
    final_assumptions = [-act] + ([-act2] if act2 is not None else [])
    res = s.solve(final_assumptions, deadline=deadline)
    if res is None:
        return _finish(ctx, "Timeout", None, trace, iters,
                       oracle.queries - queries_before, t0, lines, eliminated)
    if res is False:
        return _finish(ctx, "InconsistentOracle", None, trace, iters,
                       oracle.queries - queries_before, t0, lines, eliminated)
    key = ctx.extract_bits(ctx.key_vars[0])
    return _finish(ctx, "Success", key, trace, iters,
                   oracle.queries - queries_before, t0, lines, eliminated)


# -- the three attacks -------------------------------------------------------

def conventional_attack(locked, oracle, config=None):
    """Classic oracle-guided attack for deterministic oracles."""
    config = config or AttackConfig()

    def respond(x_bits):
        return oracle.query(x_bits), True

    return _oracle_guided_loop(locked, oracle, config, respond)


def double_dip_attack(locked, oracle, config=None):
    """Variant whose queries each eliminate at least two incorrect keys.

    When no further double DIPs exist the loop falls back to the
    conventional miter before extracting a key.
    `eliminated_per_iteration` covers the double-DIP phase only.
    """
    config = config or AttackConfig()

    def respond(x_bits):
        return oracle.query(x_bits), True

    return _oracle_guided_loop(locked, oracle, config, respond, two_dip=True)


def psat_attack(locked, oracle, config=None):
    """Monte-Carlo-sampled attack for probabilistic oracles."""
    config = config or AttackConfig()
    rng = random.Random(config.seed ^ 0x5A17)

    def respond(x_bits):
        hist = oracle.sample(x_bits, config.samples)
        return ground_truth(hist, rng)

    return _oracle_guided_loop(locked, oracle, config, respond)
