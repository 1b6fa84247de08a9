import pytest
from hypothesis import given, settings, strategies as st

from camoforge.attack import AttackConfig
from camoforge.metrics import (CampaignConfig, MetricsError, derive_seed,
                               emit_report, hd_oer, parse_report,
                               run_campaign, verify_key)
from camoforge.netlist import Circuit, Gate, gate_function
from camoforge.obfuscate import (BehaviorAnnotation, camouflage,
                                 insert_key_gates, make_probabilistic,
                                 select_gates_random)
from camoforge.benchgen import generate_named
from conftest import circuits


class TestVerifyKey:
    def test_correct_key(self, c17):
        lk = insert_key_gates(c17, 4, seed=3)
        assert verify_key(lk, c17, lk.correct_key)

    def test_flipped_bit_fails(self, c17):
        lk = insert_key_gates(c17, 4, seed=3)
        for i in range(4):
            bad = list(lk.correct_key)
            bad[i] = "1" if bad[i] == "0" else "0"
            assert not verify_key(lk, c17, "".join(bad))

    def test_wrong_width(self, c17):
        lk = insert_key_gates(c17, 4, seed=3)
        assert not verify_key(lk, c17, "01")
        assert not verify_key(lk, c17, None)

    def test_aliased_selector_accepted(self, c17):
        # overflow selector codes alias to index 0; for a gate whose
        # original function sits at index 0 they are equivalent keys
        lk = camouflage(c17, ["22"], "nand_nor_xor")
        assert lk.correct_key == "00"
        assert verify_key(lk, c17, "11")

    def test_miter_path_on_wide_circuit(self):
        c = generate_named("c880")   # 60 inputs forces the miter route
        lk = insert_key_gates(c, 8, seed=5)
        assert verify_key(lk, c, lk.correct_key)
        bad = ("1" if lk.correct_key[0] == "0" else "0") + lk.correct_key[1:]
        assert not verify_key(lk, c, bad)


def prob_output_circuit():
    c = Circuit(["a", "b"], ["y"],
                [Gate("y", gate_function("NAND", 2), ("a", "b"))])
    anns = [BehaviorAnnotation("y", "prob", correctness=0.95)]
    return c, anns


class TestHdOer:
    def test_identical_deterministic(self, c17):
        assert hd_oer(c17, c17, 2000, seed=1) == (0.0, 0.0)

    def test_single_output_hd_equals_oer(self):
        c, anns = prob_output_circuit()
        hd, oer = hd_oer(c, c, 5000, seed=2, annotations_a=anns,
                         annotations_b=anns)
        assert hd == oer

    def test_analytic_disagreement_rate(self):
        # two independently flipped copies disagree at 2 * .05 * .95
        c, anns = prob_output_circuit()
        hd, oer = hd_oer(c, c, 10000, seed=3, annotations_a=anns,
                         annotations_b=anns)
        assert oer == pytest.approx(2 * 0.05 * 0.95, abs=0.01)

    def test_reproducible(self, c17):
        anns = make_probabilistic(c17, ["10", "16"], 0.9)
        a = hd_oer(c17, c17, 4000, seed=7, annotations_a=anns,
                   annotations_b=anns)
        b = hd_oer(c17, c17, 4000, seed=7, annotations_a=anns,
                   annotations_b=anns)
        assert a == b

    @settings(max_examples=20, deadline=None)
    @given(circuits(max_inputs=4, max_gates=6), st.integers(0, 100))
    def test_oer_dominates_hd(self, c, seed):
        anns = [BehaviorAnnotation(g, "prob", correctness=0.8)
                for g in list(c.gates)[:3]]
        hd, oer = hd_oer(c, c, 500, seed=seed, annotations_a=anns,
                         annotations_b=anns)
        assert oer >= hd

    def test_width_mismatch(self, c17):
        c = Circuit(["a"], ["y"], [Gate("y", gate_function("BUFF"), ("a",))])
        with pytest.raises(MetricsError):
            hd_oer(c17, c, 100, seed=0)


class TestCampaign:
    def test_single_deterministic_run(self, c17):
        lk = insert_key_gates(c17, 3, seed=5)
        cfg = CampaignConfig(runs=1, attack="sat", master_seed=9,
                             benchmark="c17")
        s = run_campaign(cfg, lk, c17)
        assert s.success_rate == 1.0
        assert s.verified_rate == 1.0
        assert len(s.records) == 1

    def test_reproducible_and_order_invariant(self, c17):
        lk = insert_key_gates(c17, 3, seed=5)
        anns = make_probabilistic(c17, select_gates_random(c17, 0.5, 1), 0.9)
        cfg = CampaignConfig(runs=6, attack="psat", master_seed=11,
                             attack_config=AttackConfig(samples=50))
        s1 = run_campaign(cfg, lk, c17, anns)
        s2 = run_campaign(cfg, lk, c17, anns)
        assert [r.status for r in s1.records] == [r.status for r in s2.records]
        assert [r.seed for r in s1.records] == [r.seed for r in s2.records]
        assert s1.success_rate == s2.success_rate

    def test_parallel_jobs_match_serial(self, c17):
        lk = insert_key_gates(c17, 3, seed=5)
        cfg1 = CampaignConfig(runs=4, attack="sat", master_seed=2)
        cfg2 = CampaignConfig(runs=4, attack="sat", master_seed=2, jobs=2)
        s1 = run_campaign(cfg1, lk, c17)
        s2 = run_campaign(cfg2, lk, c17)
        assert [r.status for r in s1.records] == [r.status for r in s2.records]

    def test_run_seeds_derived_per_index(self):
        seeds = [derive_seed(42, i) for i in range(5)]
        assert len(set(seeds)) == 5
        assert seeds == [derive_seed(42, i) for i in range(5)]

    def test_invalid_config(self):
        with pytest.raises(MetricsError):
            CampaignConfig(runs=0, attack="sat")
        with pytest.raises(MetricsError):
            CampaignConfig(runs=1, attack="quantum")


class TestReports:
    def make_summary(self, c17):
        lk = insert_key_gates(c17, 3, seed=5)
        anns = make_probabilistic(c17, select_gates_random(c17, 0.4, 3), 0.95)
        cfg = CampaignConfig(runs=3, attack="psat", master_seed=4,
                             benchmark="c17", pct_prob_gates=40.0,
                             correctness=0.95,
                             attack_config=AttackConfig(samples=64))
        return run_campaign(cfg, lk, c17, anns)

    def test_json_round_trip(self, c17):
        s = self.make_summary(c17)
        text = emit_report(s, "json-like")
        s2 = parse_report(text)
        assert s2 == s

    def test_csv_round_trip(self, c17):
        s = self.make_summary(c17)
        text = emit_report(s, "csv")
        s2 = parse_report(text)
        assert s2 == s

    def test_csv_has_expected_columns(self, c17):
        s = self.make_summary(c17)
        header = emit_report(s, "csv").splitlines()[0].split(",")
        for field in ("benchmark", "attack", "pct_prob_gates", "correctness",
                      "runs", "success_rate", "mean_hd", "mean_oer",
                      "mean_runtime_s", "mean_iterations",
                      "mean_oracle_queries", "master_seed"):
            assert field in header

    def test_empty_campaign_rejected(self, c17):
        s = self.make_summary(c17)
        s.records = []
        with pytest.raises(MetricsError, match="empty"):
            emit_report(s, "csv")

    def test_unknown_format(self, c17):
        with pytest.raises(MetricsError):
            emit_report(self.make_summary(c17), "yaml")
