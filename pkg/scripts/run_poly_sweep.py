#!/usr/bin/env python3
"""Sampling-attack success against polymorphic gate fractions 1%..10%.

The 10% benchmark configures the nested gate selection as polymorphic;
smaller fractions revert gates from the tail of that selection, so every
sweep point is a subset of the previous one.
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


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--benchmarks", nargs="+", default=["c432", "c880"])
    ap.add_argument("--percents", nargs="+", type=int,
                    default=[1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--keys", type=int, default=32)
    ap.add_argument("--seed", type=int, default=88)
    ap.add_argument("--out", default="poly_sweep.csv")
    args = ap.parse_args()

    rows = ["benchmark,pct_poly_gates,runs,success_rate,mean_hd,mean_oer,"
            "mean_runtime_s,master_seed"]
    for name in args.benchmarks:
        path = os.path.join(os.path.dirname(__file__), os.pardir,
                            "benchmarks", f"{name}.bench")
        with open(path) as f:
            circuit = cf.parse_bench(f.read())[0]
        locked = cf.insert_key_gates(circuit, args.keys, seed=LOCK_SEED)
        sel10 = cf.select_gates_random(circuit, 0.10, seed=SEL_SEED)
        for pct in args.percents:
            sel = sel10[:max(1, int(pct / 100 * len(circuit.gates)))]
            anns = cf.make_polymorphic(circuit, sel)
            cfg = CampaignConfig(
                runs=args.runs, attack="psat", master_seed=args.seed,
                benchmark=name, pct_prob_gates=pct,
                attack_config=AttackConfig(timeout_s=300.0))
            s = run_campaign(cfg, locked, circuit, anns)
            rows.append(f"{name},{pct},{s.runs},{s.success_rate},"
                        f"{'' if s.mean_hd is None else s.mean_hd},"
                        f"{'' if s.mean_oer is None else s.mean_oer},"
                        f"{s.mean_runtime_s},{args.seed}")
            print(rows[-1], flush=True)
    with open(args.out, "w") as f:
        f.write("\n".join(rows) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
