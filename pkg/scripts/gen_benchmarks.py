#!/usr/bin/env python3
"""Regenerate the bundled benchmark netlists.

c17 is the classic six-NAND example and is kept verbatim. The remaining
files are deterministic synthetic stand-ins with the published
input/output/gate counts; rerunning this script reproduces them
byte-for-byte.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from camoforge.benchgen import PROFILES, generate
from camoforge.netlist import write_bench

OUT_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks")


def main():
    for name, profile in PROFILES.items():
        circuit = generate(profile)
        path = os.path.join(OUT_DIR, f"{name}.bench")
        with open(path, "w") as f:
            f.write(f"# {name}: {len(circuit.inputs)} inputs, "
                    f"{len(circuit.outputs)} outputs, "
                    f"{len(circuit.gates)} gates (generated, seed {profile.seed})\n")
            f.write(write_bench(circuit))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
