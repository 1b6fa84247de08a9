#!/usr/bin/env python3
"""Average-runtime comparison between the conventional and sampling
attacks over the ten study configurations, with the overall overhead
factor (geometric and arithmetic means of the per-config ratios)."""

import argparse
import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

import camoforge as cf
from camoforge.attack import AttackConfig
from camoforge.metrics import CampaignConfig, run_campaign

LOCK_SEED = 1001
SEL_SEED = 2001

MATRIX = (
    ("c432", 0.10, 0.99), ("c432", 0.20, 0.95), ("c432", 0.50, 0.90),
    ("c880", 0.10, 0.99), ("c880", 0.20, 0.95), ("c880", 0.50, 0.90),
    ("apex4", 0.10, 0.99), ("apex4", 0.20, 0.95),
    ("des", 0.10, 0.99), ("des", 0.20, 0.95),
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--keys", type=int, default=32)
    ap.add_argument("--seed", type=int, default=77)
    ap.add_argument("--out", default="runtime_study.csv")
    args = ap.parse_args()

    rows = ["benchmark,pct_prob_gates,correctness,runs,"
            "conventional_s,psat_s,ratio"]
    ratios = []
    for name, frac, corr in MATRIX:
        path = os.path.join(os.path.dirname(__file__), os.pardir,
                            "benchmarks", f"{name}.bench")
        with open(path) as f:
            circuit = cf.parse_bench(f.read())[0]
        locked = cf.insert_key_gates(circuit, args.keys, seed=LOCK_SEED)
        sel = cf.select_gates_random(circuit, frac, seed=SEL_SEED)
        anns = cf.make_probabilistic(circuit, sel, corr)
        means = {}
        for kind in ("sat", "psat"):
            cfg = CampaignConfig(
                runs=args.runs, attack=kind, master_seed=args.seed,
                benchmark=name, pct_prob_gates=100 * frac, correctness=corr,
                attack_config=AttackConfig(timeout_s=300.0))
            means[kind] = run_campaign(cfg, locked, circuit, anns).mean_runtime_s
        ratio = means["psat"] / means["sat"]
        ratios.append(ratio)
        rows.append(f"{name},{100 * frac:g},{corr},{args.runs},"
                    f"{means['sat']:.4f},{means['psat']:.4f},{ratio:.2f}")
        print(rows[-1], flush=True)

    geo = math.exp(sum(math.log(r) for r in ratios) / len(ratios))
    arith = sum(ratios) / len(ratios)
    print(f"overhead: geometric mean {geo:.1f}x, arithmetic mean {arith:.1f}x")
    with open(args.out, "w") as f:
        f.write("\n".join(rows) + "\n")
        f.write(f"# geometric_mean,{geo:.3f}\n# arithmetic_mean,{arith:.3f}\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
