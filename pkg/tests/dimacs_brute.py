"""Tiny conforming DIMACS solver (brute force) used as an external-solver
stand-in in tests. Usage: dimacs_brute.py input.cnf output."""

import itertools
import sys


def main():
    path, out_path = sys.argv[1], sys.argv[2]
    nvars = 0
    clauses = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith(("c", "%")):
                continue
            if line.startswith("p"):
                nvars = int(line.split()[2])
                continue
            lits = [int(t) for t in line.split() if t != "0"]
            if lits:
                clauses.append(lits)
    for bits in itertools.product([False, True], repeat=nvars):
        if all(any((bits[abs(l) - 1] if l > 0 else not bits[abs(l) - 1])
                   for l in c) for c in clauses):
            model = " ".join(str(v if bits[v - 1] else -v)
                             for v in range(1, nvars + 1))
            with open(out_path, "w") as f:
                f.write(f"SAT\n{model} 0\n")
            return 10
    with open(out_path, "w") as f:
        f.write("UNSAT\n")
    return 20


if __name__ == "__main__":
    sys.exit(main())
