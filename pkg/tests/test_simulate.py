import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from camoforge.netlist import Circuit, CircuitError, Gate, gate_function, parse_bench
from camoforge.obfuscate import BehaviorAnnotation, make_polymorphic
from camoforge.simulate import (EvalMode, OutputHistogram, Simulator,
                                evaluate, random_input_matrix, sample_outputs)
from conftest import brute_eval, circuits


def single_gate(fn_name="NAND"):
    return Circuit(["a", "b"], ["y"],
                   [Gate("y", gate_function(fn_name, 2), ("a", "b"))])


class TestDeterministic:
    def test_c17_walkthrough_row(self, c17):
        assert evaluate(c17, "00000") == "00"

    def test_c17_exhaustive_against_reference(self, c17):
        sim = Simulator(c17)
        table = sim.exhaustive()
        for idx, bits in enumerate(itertools.product((0, 1), repeat=5)):
            assign = dict(zip(c17.inputs, bits))
            want = brute_eval(c17, assign)
            got = "".join("1" if v else "0" for v in table[:, idx])
            assert got == want

    @settings(max_examples=50, deadline=None)
    @given(circuits())
    def test_matches_reference_on_random_circuits(self, c):
        sim = Simulator(c)
        for bits in itertools.product((0, 1), repeat=len(c.inputs)):
            s = "".join(str(b) for b in bits)
            assert sim.eval(s) == brute_eval(c, dict(zip(c.inputs, bits)))

    def test_width_mismatch(self, c17):
        with pytest.raises(CircuitError, match="width"):
            evaluate(c17, "000")

    def test_sequential_rejected(self):
        c, _ = parse_bench("INPUT(a)\nOUTPUT(o)\nq = DFF(d)\n"
                           "d = NAND(a, q)\no = NOT(q)\n")
        with pytest.raises(CircuitError, match="sequential|unroll"):
            Simulator(c)


class TestStochastic:
    def test_inert_annotations_equal_deterministic(self, c17):
        anns = [BehaviorAnnotation(g, "prob", correctness=1.0) for g in c17.gates]
        sim_s = Simulator(c17, annotations=anns)
        sim_d = Simulator(c17)
        inputs = random_input_matrix(5, 10000, seed=3)
        out_s = sim_s.eval_batch(inputs, mode=EvalMode.stochastic(9, 0))
        out_d = sim_d.eval_batch(inputs)
        assert (out_s == out_d).all()

    def test_flip_rate_within_3_sigma(self):
        c = single_gate()
        anns = [BehaviorAnnotation("y", "prob", correctness=0.95)]
        sim = Simulator(c, annotations=anns)
        n = 100000
        hist = sim.sample("11", n, seed=17)
        # NAND(1,1) = 0; flipped fraction should be ~0.05
        flipped = hist.counts.get("1", 0) / n
        sigma = math.sqrt(0.05 * 0.95 / n)
        assert abs(flipped - 0.05) <= 3 * sigma

    def test_deterministic_mode_ignores_annotations(self):
        c = single_gate()
        anns = [BehaviorAnnotation("y", "prob", correctness=0.5)]
        sim = Simulator(c, annotations=anns)
        assert sim.eval("11") == "0"

    def test_same_seed_reproducible(self, c17):
        anns = [BehaviorAnnotation("22", "prob", correctness=0.8)]
        h1 = sample_outputs(c17, "10101", 500, seed=5, annotations=anns)
        h2 = sample_outputs(c17, "10101", 500, seed=5, annotations=anns)
        assert h1.counts == h2.counts

    def test_distinct_streams_differ(self, c17):
        anns = [BehaviorAnnotation("22", "prob", correctness=0.7)]
        sim = Simulator(c17, annotations=anns)
        h1 = sim.sample("10101", 2000, seed=5, stream=0)
        h2 = sim.sample("10101", 2000, seed=5, stream=1)
        assert h1.counts != h2.counts

    def test_counter_rng_order_independent(self):
        # draw i of a batch equals an isolated evaluation at index i
        c = single_gate()
        anns = [BehaviorAnnotation("y", "prob", correctness=0.6)]
        sim = Simulator(c, annotations=anns)
        mode = EvalMode.stochastic(33, 0)
        batch = sim._run(sim._pi_matrix("11", None, 64), mode, 0)
        for i in (0, 1, 7, 40, 63):
            assert sim.eval("11", mode=mode, sample_index=i) == \
                ("1" if batch[0, i] else "0")
        # a batch starting at an offset reproduces the same tail
        tail = sim._run(sim._pi_matrix("11", None, 24), mode, 40)
        assert (tail == batch[:, 40:]).all()

    def test_annotation_unknown_gate(self, c17):
        with pytest.raises(CircuitError):
            Simulator(c17, annotations=[BehaviorAnnotation("zz", "prob",
                                                           correctness=0.9)])


class TestPolymorphic:
    def test_function_frequencies_within_3_sigma(self):
        c = single_gate("NAND")
        anns = make_polymorphic(c, ["y"])
        sim = Simulator(c, annotations=anns)
        n = 100000
        dist = dict((fn.name, p) for fn, p in anns[0].distribution)
        for a, b in itertools.product((0, 1), repeat=2):
            bits = f"{a}{b}"
            # P(out=1) under the function mixture
            p1 = sum(p for fn, p in anns[0].distribution
                     if fn.output([a, b]) == 1)
            hist = sim.sample(bits, n, seed=101)
            ones = hist.counts.get("1", 0) / n
            sigma = math.sqrt(max(p1 * (1 - p1), 1e-12) / n)
            assert abs(ones - p1) <= max(3 * sigma, 1e-4), bits
        assert dist["NAND"] == pytest.approx(2 / 3)

    def test_inv_buf_frequencies(self):
        c = Circuit(["a"], ["y"], [Gate("y", gate_function("NOT"), ("a",))])
        anns = make_polymorphic(c, ["y"])
        sim = Simulator(c, annotations=anns)
        n = 60000
        hist = sim.sample("0", n, seed=7)
        # NOT(0)=1 at 2/3, BUFF(0)=0 at 1/3
        frac = hist.counts.get("1", 0) / n
        sigma = math.sqrt((2 / 3) * (1 / 3) / n)
        assert abs(frac - 2 / 3) <= 3 * sigma

    def test_poly_epoch_redraws_every_e(self):
        c = single_gate("NAND")
        anns = make_polymorphic(c, ["y"])
        sim = Simulator(c, annotations=anns, poly_epoch=50)
        mode = EvalMode.stochastic(3, 0)
        out = sim._run(sim._pi_matrix("01", None, 200), mode, 0)[0]
        for block in range(4):
            seg = out[block * 50:(block + 1) * 50]
            assert (seg == seg[0]).all()


class TestHistogram:
    def test_deterministic_circuit_point_mass(self, c17):
        h = sample_outputs(c17, "00000", 1000, seed=1)
        assert h.counts == {"00": 1000}
        assert h.total == 1000

    def test_counts_sum_validated(self):
        with pytest.raises(ValueError):
            OutputHistogram({"0": 3}, 4)

    def test_merge_order_independent(self):
        a = OutputHistogram({"0": 3, "1": 1}, 4)
        b = OutputHistogram({"1": 2}, 2)
        assert a.merge(b).counts == b.merge(a).counts == {"0": 3, "1": 3}

    def test_most_common_tie_break(self):
        h = OutputHistogram({"10": 5, "01": 5, "11": 2}, 12)
        assert h.most_common() == [("01", 5), ("10", 5), ("11", 2)]


class TestEvalModeContract:
    def test_stochastic_all_inert_equals_deterministic_single(self, c17):
        sim = Simulator(c17)   # no annotations at all
        mode = EvalMode.stochastic(4, 2)
        for bits in ("00000", "11111", "10110"):
            assert sim.eval(bits, mode=mode) == sim.eval(bits)

    def test_key_partition(self, c17):
        sim = Simulator(c17, key_inputs=("7",))
        assert sim.free_inputs == ("1", "2", "3", "6")
        out = sim.eval("0000", key="0")
        assert out == Simulator(c17).eval("00000")
