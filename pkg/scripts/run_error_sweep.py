#!/usr/bin/env python3
"""Success-rate / HD / OER sweep over probabilistic gate fractions and
error rates, for the conventional and sampling attacks.

Emits one CSV row per (benchmark, fraction, correctness, attack); the
columns match the campaign report so the series plot directly.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

import camoforge as cf
from camoforge.attack import AttackConfig
from camoforge.metrics import CampaignConfig, run_campaign

LOCK_SEED = 1001
SEL_SEED = 2001


def load(name):
    path = os.path.join(os.path.dirname(__file__), os.pardir,
                        "benchmarks", f"{name}.bench")
    with open(path) as f:
        return cf.parse_bench(f.read())[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--benchmarks", nargs="+", default=["c432", "c880"])
    ap.add_argument("--fractions", nargs="+", type=float,
                    default=[0.10, 0.20, 0.50])
    ap.add_argument("--correctness", nargs="+", type=float,
                    default=[0.99, 0.95, 0.90])
    ap.add_argument("--attacks", nargs="+", default=["sat", "psat"])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--keys", type=int, default=32)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default="error_sweep.csv")
    args = ap.parse_args()

    rows = ["benchmark,attack,pct_prob_gates,correctness,runs,success_rate,"
            "verified_rate,mean_hd,mean_oer,mean_runtime_s,master_seed"]
    for name in args.benchmarks:
        circuit = load(name)
        locked = cf.insert_key_gates(circuit, args.keys, seed=LOCK_SEED)
        for frac in args.fractions:
            sel = cf.select_gates_random(circuit, frac, seed=SEL_SEED)
            for corr in args.correctness:
                anns = cf.make_probabilistic(circuit, sel, corr)
                for kind in args.attacks:
                    cfg = CampaignConfig(
                        runs=args.runs, attack=kind, master_seed=args.seed,
                        benchmark=name, pct_prob_gates=100 * frac,
                        correctness=corr,
                        attack_config=AttackConfig(samples=args.samples,
                                                   timeout_s=300.0))
                    s = run_campaign(cfg, locked, circuit, anns)
                    rows.append(
                        f"{name},{kind},{100 * frac:g},{corr},{s.runs},"
                        f"{s.success_rate},{s.verified_rate},"
                        f"{'' if s.mean_hd is None else s.mean_hd},"
                        f"{'' if s.mean_oer is None else s.mean_oer},"
                        f"{s.mean_runtime_s},{args.seed}")
                    print(rows[-1], flush=True)
    with open(args.out, "w") as f:
        f.write("\n".join(rows) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
