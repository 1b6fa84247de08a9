#!/usr/bin/env python3
"""Sampling attack against the counter-based defense.

Runs the same attack campaign against the undefended and the defended
oracle and reports both success rates; the defense detects the repeated
sampling and drops monitored gates to coin-flip correctness."""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

import camoforge as cf
from camoforge.attack import AttackConfig
from camoforge.metrics import CampaignConfig, run_campaign

LOCK_SEED = 1001
SEL_SEED = 2001


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--benchmark", default="c432")
    ap.add_argument("--fraction", type=float, default=0.50)
    ap.add_argument("--correctness", type=float, default=0.99)
    ap.add_argument("--runs", type=int, default=60)
    ap.add_argument("--keys", type=int, default=32)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--window", type=int, default=64)
    ap.add_argument("--threshold", type=int, default=4)
    ap.add_argument("--duration", type=int, default=1024)
    args = ap.parse_args()

    path = os.path.join(os.path.dirname(__file__), os.pardir,
                        "benchmarks", f"{args.benchmark}.bench")
    with open(path) as f:
        circuit = cf.parse_bench(f.read())[0]
    locked = cf.insert_key_gates(circuit, args.keys, seed=LOCK_SEED)
    sel = cf.select_gates_random(circuit, args.fraction, seed=SEL_SEED)
    anns = cf.make_probabilistic(circuit, sel, args.correctness)

    defense = cf.DefenseConfig(window=args.window, threshold=args.threshold,
                               duration=args.duration)
    for label, d in (("undefended", None), ("defended", defense)):
        cfg = CampaignConfig(runs=args.runs, attack="psat",
                             master_seed=args.seed, benchmark=args.benchmark,
                             attack_config=AttackConfig(timeout_s=300.0))
        s = run_campaign(cfg, locked, circuit, anns, defense=d)
        print(f"{label}: success={s.success_rate:.3f} "
              f"verified={s.verified_rate:.3f} "
              f"mean_runtime={s.mean_runtime_s:.3f}s")


if __name__ == "__main__":
    main()
