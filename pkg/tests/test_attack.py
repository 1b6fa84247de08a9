import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from camoforge.attack import (AttackConfig, AttackError, CnfFormula,
                              ExternalDimacsSolver, conventional_attack,
                              double_dip_attack, encode, export_dimacs,
                              ground_truth, prune_inconsistent_keys,
                              psat_attack)
from camoforge.netlist import Circuit, Gate, gate_function, parse_bench
from camoforge.obfuscate import (BehaviorAnnotation, camouflage,
                                 insert_key_gates)
from camoforge.oracle import Oracle
from camoforge.sat import Solver
from camoforge.simulate import OutputHistogram, Simulator
from camoforge.metrics import verify_key
from conftest import circuits


class TestEncode:
    def test_two_input_nand_three_clauses(self):
        c = Circuit(["a", "b"], ["y"],
                    [Gate("y", gate_function("NAND", 2), ("a", "b"))])
        f = encode(c)
        assert f.nvars == 3
        assert len(f.clauses) == 3

    def test_empty_circuit_rejected(self):
        with pytest.raises(AttackError, match="empty"):
            encode(Circuit([], [], []))

    def test_sequential_rejected(self):
        c, _ = parse_bench("INPUT(a)\nOUTPUT(o)\nq = DFF(d)\n"
                           "d = NAND(a, q)\no = NOT(q)\n")
        with pytest.raises(AttackError, match="sequential"):
            encode(c)

    def test_cross_check_against_simulator(self, c17):
        f = encode(c17)
        sim = Simulator(c17)
        rng = random.Random(3)
        for _ in range(1000):
            bits = "".join(rng.choice("01") for _ in range(5))
            s = Solver()
            s.new_vars(f.nvars)
            for cl in f.clauses:
                s.add_clause(cl)
            for n, b in zip(c17.inputs, bits):
                s.add_clause([f.var(n) if b == "1" else -f.var(n)])
            assert s.solve() is True
            got = "".join("1" if s.value(f.var(o)) else "0"
                          for o in c17.outputs)
            assert got == sim.eval(bits)

    def test_output_assignment_unique(self, c17):
        f = encode(c17)
        rng = random.Random(5)
        for _ in range(20):
            bits = "".join(rng.choice("01") for _ in range(5))
            s = Solver()
            s.new_vars(f.nvars)
            for cl in f.clauses:
                s.add_clause(cl)
            for n, b in zip(c17.inputs, bits):
                s.add_clause([f.var(n) if b == "1" else -f.var(n)])
            assert s.solve() is True
            block = [-f.var(o) if s.value(f.var(o)) else f.var(o)
                     for o in c17.outputs]
            s.add_clause(block)
            assert s.solve() is False

    @settings(max_examples=30, deadline=None)
    @given(circuits(max_inputs=4, max_gates=8))
    def test_equisatisfiable_with_function(self, c):
        f = encode(c)
        sim = Simulator(c)
        for bits in itertools.product("01", repeat=len(c.inputs)):
            bits = "".join(bits)
            s = Solver()
            s.new_vars(f.nvars)
            for cl in f.clauses:
                s.add_clause(cl)
            for n, b in zip(c.inputs, bits):
                s.add_clause([f.var(n) if b == "1" else -f.var(n)])
            assert s.solve() is True
            got = "".join("1" if s.value(f.var(o)) else "0" for o in c.outputs)
            assert got == sim.eval(bits)


class TestDimacs:
    def test_single_clause(self):
        f = CnfFormula()
        a, b = f.new_var(), f.new_var()
        f.add((a, -b))
        assert export_dimacs(f) == "p cnf 2 1\n1 -2 0\n"

    def test_empty_formula(self):
        assert export_dimacs(CnfFormula()) == "p cnf 0 0\n"

    def test_external_solver_agrees(self, c17, tmp_path):
        import os
        helper = os.path.join(os.path.dirname(__file__), "dimacs_brute.py")
        import sys
        path = f"{sys.executable} {helper}"
        # ExternalDimacsSolver invokes `path cnf out`; wrap in a shim script
        shim = tmp_path / "solver.sh"
        shim.write_text(f"#!/bin/sh\nexec {path} \"$1\" \"$2\"\n")
        shim.chmod(0o755)
        ext = ExternalDimacsSolver(str(shim))
        f = encode(c17)
        ext.new_vars(f.nvars)
        for cl in f.clauses:
            ext.add_clause(cl)
        rng = random.Random(11)
        for _ in range(100):
            assumps = []
            for n in c17.inputs:
                v = f.var(n)
                assumps.append(v if rng.random() < 0.5 else -v)
            builtin = Solver()
            builtin.new_vars(f.nvars)
            for cl in f.clauses:
                builtin.add_clause(cl)
            want = builtin.solve(assumps)
            got = ext.solve(assumps)
            assert got == want


class TestGroundTruth:
    def test_dominant(self):
        h = OutputHistogram({"A0": 950, "B0": 30, "C0": 20}, 1000)
        pat, dom = ground_truth(h, random.Random(0))
        assert (pat, dom) == ("A0", True)

    def test_dominant_requires_margin(self):
        h = OutputHistogram({"00": 400, "01": 350, "10": 250}, 1000)
        rng = random.Random(1)
        counts = {"00": 0, "01": 0, "10": 0}
        for _ in range(3000):
            pat, dom = ground_truth(h, rng)
            assert dom is False
            counts[pat] += 1
        assert abs(counts["00"] / 3000 - 0.4) < 0.04
        assert abs(counts["01"] / 3000 - 0.35) < 0.04
        assert abs(counts["10"] / 3000 - 0.25) < 0.04

    def test_single_pattern(self):
        h = OutputHistogram({"11": 1000}, 1000)
        assert ground_truth(h, random.Random(0)) == ("11", True)

    def test_two_patterns_boundary(self):
        # absent third rank counts zero: 600 >= 400 + 0
        h = OutputHistogram({"1": 600, "0": 400}, 1000)
        assert ground_truth(h, random.Random(0))[1] is True

    def test_dominant_is_argmax(self):
        rng = random.Random(2)
        for _ in range(200):
            counts = {format(i, "02b"): rng.randint(0, 50) for i in range(4)}
            counts = {k: v for k, v in counts.items() if v}
            if not counts:
                continue
            h = OutputHistogram(counts, sum(counts.values()))
            pat, dom = ground_truth(h, rng)
            if dom:
                assert counts[pat] == max(counts.values())


WALKTHROUGH_ROWS = {
    # input: (oracle, [k0..k7 outputs])
    "00000": ("00", ["01", "00", "10", "11", "00", "01", "10", "11"]),
    "00001": ("01", ["00", "01", "10", "11", "01", "00", "10", "11"]),
    "00010": ("11", ["10", "11", "01", "00", "10", "11", "00", "01"]),
    "00011": ("11", ["10", "11", "00", "01", "10", "11", "01", "00"]),
    "00100": ("00", ["01", "00", "10", "11", "00", "01", "10", "11"]),
    "00101": ("01", ["00", "01", "10", "11", "01", "00", "10", "11"]),
    "00110": ("11", ["10", "11", "01", "00", "10", "11", "00", "01"]),
    "00111": ("11", ["10", "11", "00", "01", "10", "11", "01", "00"]),
    "11111": ("10", ["11", "10", "10", "11", "11", "10", "10", "11"]),
}


def walkthrough_response(key, dip):
    return WALKTHROUGH_ROWS[dip][1][key]


class TestWalkthrough:
    def test_eight_key_pruning(self):
        keys = list(range(8))
        survivors, eliminated = prune_inconsistent_keys(
            keys, walkthrough_response, "00100", WALKTHROUGH_ROWS["00100"][0])
        assert eliminated == [0, 2, 3, 5, 6, 7]
        assert survivors == [1, 4]
        survivors, eliminated = prune_inconsistent_keys(
            survivors, walkthrough_response, "00111",
            WALKTHROUGH_ROWS["00111"][0])
        assert eliminated == [4]
        assert survivors == [1]


def lock_c17(c17, n=3, seed=7):
    return insert_key_gates(c17, n, seed=seed)


class TestConventional:
    def test_zero_keys(self, c17):
        lk = insert_key_gates(c17, 0, seed=0)
        res = conventional_attack(lk, Oracle(c17), AttackConfig(seed=0))
        assert res.status == "Success"
        assert res.key == ""
        assert res.iterations == 0

    def test_c17_lock_recovered(self, c17):
        for seed in range(5):
            lk = lock_c17(c17, 3, seed=seed)
            res = conventional_attack(lk, Oracle(c17), AttackConfig(seed=seed))
            assert res.status == "Success"
            assert verify_key(lk, c17, res.key)

    def test_camouflaged_c17_recovered(self, c17):
        lk = camouflage(c17, ["10", "16", "23"], "gshe16")
        res = conventional_attack(lk, Oracle(c17), AttackConfig(seed=2))
        assert res.status == "Success"
        assert verify_key(lk, c17, res.key)

    def test_progress_property(self, c17):
        lk = lock_c17(c17, 6, seed=9)
        res = conventional_attack(lk, Oracle(c17),
                                  AttackConfig(seed=1, instrument=True))
        assert res.status == "Success"
        assert all(e >= 1 for e in res.eliminated_per_iteration)
        assert res.iterations <= 2 ** 6

    def test_iteration_cap(self, c17):
        lk = lock_c17(c17, 6, seed=9)
        res = conventional_attack(lk, Oracle(c17),
                                  AttackConfig(seed=1, max_iterations=1))
        assert res.status == "IterationCap"

    def test_timeout(self, c17):
        lk = lock_c17(c17, 6, seed=9)
        res = conventional_attack(lk, Oracle(c17),
                                  AttackConfig(seed=1, timeout_s=0.0))
        assert res.status == "Timeout"

    def test_inconsistent_oracle(self, c17):
        lk = lock_c17(c17, 3, seed=7)

        class LyingOracle:
            def __init__(self):
                self.queries = 0
                self._truth = Oracle(c17)
                self._n = 0

            def query(self, x):
                self.queries += 1
                self._n += 1
                y = self._truth.query(x)
                flipped = "".join("1" if b == "0" else "0" for b in y)
                return flipped if self._n % 2 else y

        res = conventional_attack(lk, LyingOracle(), AttackConfig(seed=3))
        assert res.status in ("InconsistentOracle", "Success")
        if res.status == "Success":
            assert not verify_key(lk, c17, res.key)

    def test_trace_line_format(self, c17):
        lk = lock_c17(c17, 3, seed=7)
        res = conventional_attack(lk, Oracle(c17), AttackConfig(seed=1))
        assert len(res.trace_lines) == res.iterations
        for line in res.trace_lines:
            fields = [f.strip() for f in line.split(",")]
            assert len(fields) == 6
            int(fields[0])
            int(fields[4])
            float(fields[5])
            assert fields[3] in ("y", "n")

    def test_dip_trace_consistent_with_oracle(self, c17):
        lk = lock_c17(c17, 4, seed=3)
        res = conventional_attack(lk, Oracle(c17), AttackConfig(seed=1))
        oracle = Oracle(c17)
        for x, y in res.dip_trace:
            assert oracle.query(x) == y


class TestDoubleDip:
    def test_eliminates_at_least_two_per_iteration(self, c17):
        for seed in range(6):
            lk = insert_key_gates(c17, 5, seed=seed)
            res = double_dip_attack(lk, Oracle(c17),
                                    AttackConfig(seed=seed, instrument=True))
            assert res.status == "Success"
            assert verify_key(lk, c17, res.key)
            assert res.eliminated_per_iteration, seed
            assert all(e >= 2 for e in res.eliminated_per_iteration), seed

    def test_one_bit_key_falls_back(self, c17):
        lk = insert_key_gates(c17, 1, seed=4)
        res = double_dip_attack(lk, Oracle(c17),
                                AttackConfig(seed=0, instrument=True))
        assert res.status == "Success"
        assert verify_key(lk, c17, res.key)
        # no double DIP exists for a single key bit
        assert res.eliminated_per_iteration == []

    def test_matches_conventional_functionality(self, c17):
        lk = insert_key_gates(c17, 6, seed=2)
        r1 = conventional_attack(lk, Oracle(c17), AttackConfig(seed=5))
        r2 = double_dip_attack(lk, Oracle(c17), AttackConfig(seed=5))
        assert r1.status == r2.status == "Success"
        assert verify_key(lk, c17, r1.key)
        assert verify_key(lk, c17, r2.key)


class TestPsat:
    def test_deterministic_degenerates_to_conventional(self, c17):
        lk = lock_c17(c17, 4, seed=8)
        r_conv = conventional_attack(lk, Oracle(c17), AttackConfig(seed=6))
        r_psat = psat_attack(lk, Oracle(c17), AttackConfig(seed=6, samples=32))
        assert r_psat.status == "Success"
        assert r_psat.iterations == r_conv.iterations
        assert [x for x, _ in r_psat.dip_trace] == [x for x, _ in r_conv.dip_trace]
        assert verify_key(lk, c17, r_psat.key)
        assert r_psat.oracle_queries == 32 * r_psat.iterations

    def test_noisy_gate_recovered_with_sampling(self, c17):
        # one output-affecting gate at 5% error; dominance makes each
        # sampled response correct with overwhelming probability
        lk = lock_c17(c17, 3, seed=7)
        anns = [BehaviorAnnotation("22", "prob", correctness=0.95)]
        wins = 0
        for seed in range(10):
            oracle = Oracle(c17, annotations=anns, seed=seed)
            res = psat_attack(lk, oracle, AttackConfig(seed=seed, samples=1000))
            if res.status == "Success" and verify_key(lk, c17, res.key):
                wins += 1
        assert wins >= 9

    def test_success_key_consistent_with_recorded_responses(self, c17):
        # a Success key must reproduce every recorded response exactly,
        # even when those responses came from a noisy oracle
        lk = lock_c17(c17, 4, seed=2)
        anns = [BehaviorAnnotation("16", "prob", correctness=0.9)]
        checked = 0
        for seed in range(8):
            oracle = Oracle(c17, annotations=anns, seed=seed)
            res = psat_attack(lk, oracle, AttackConfig(seed=seed, samples=200))
            if res.status != "Success":
                continue
            sim = Simulator(lk.circuit, key_inputs=lk.key_inputs)
            for x, y in res.dip_trace:
                assert sim.eval(x, key=res.key) == y
                checked += 1
        assert checked > 0

    def test_very_noisy_oracle_fails(self, c17):
        lk = lock_c17(c17, 3, seed=7)
        anns = [BehaviorAnnotation(g, "prob", correctness=0.5)
                for g in c17.gates]
        statuses = set()
        for seed in range(6):
            oracle = Oracle(c17, annotations=anns, seed=seed)
            res = psat_attack(lk, oracle, AttackConfig(seed=seed, samples=20))
            if res.status == "Success":
                statuses.add(verify_key(lk, c17, res.key))
            else:
                statuses.add(res.status)
        assert statuses & {"InconsistentOracle", False}
