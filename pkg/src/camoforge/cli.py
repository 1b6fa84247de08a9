"""Command-line surface: camoforge <subcommand>.

Exit codes: 0 on completion, 2 on usage errors (argparse), 3 on input
errors (unreadable files, malformed sidecars, netlist violations).
Every stochastic command records the seed it used in its output.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import device as dev
from .attack import (AttackConfig, AttackError, conventional_attack,
                     double_dip_attack, psat_attack)
from .hybrid import (CostCatalog, DelayMap, HybridError, adder_case_study,
                     chip_cost, delay_aware_select, read_delay_map, sta)
from .metrics import (CampaignConfig, MetricsError, emit_report,
                      miter_unsat, parse_report, run_campaign, verify_key)
from .netlist import NetlistError, parse_bench, unroll_sequential, write_bench
from .obfuscate import (FUNCTION_SETS, ObfuscationError, annotations_to_pragmas,
                        attach_sidecar, camouflage, insert_key_gates,
                        load_selection, make_polymorphic, make_probabilistic,
                        pragmas_to_annotations, read_sidecar,
                        select_gates_random, write_sidecar)
from .oracle import DefenseConfig, Oracle, OracleError
from .simulate import Simulator

_ERRORS = (NetlistError, ObfuscationError, OracleError, AttackError,
           MetricsError, HybridError, dev.DeviceError, OSError,
           json.JSONDecodeError)

_ATTACKS = {"sat": conventional_attack, "2dip": double_dip_attack,
            "psat": psat_attack}


def _read_circuit(path, unroll=True):
    with open(path) as f:
        circuit, elements = parse_bench(f.read())
    if unroll and elements:
        circuit = unroll_sequential(circuit, elements)
    return circuit, elements


def _emit(doc, out_path):
    text = doc if isinstance(doc, str) else json.dumps(doc, indent=1) + "\n"
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load_locked(args):
    circuit, _ = _read_circuit(args.netlist)
    doc, anns = read_sidecar(args.sidecar)
    locked = attach_sidecar(circuit, doc)
    anns = anns + pragmas_to_annotations(circuit)
    return locked, anns


def _attack_config(args):
    return AttackConfig(samples=args.samples, patterns=args.patterns,
                        max_iterations=args.max_iters,
                        timeout_s=args.timeout_s, seed=args.seed,
                        solver=args.solver)


# -- subcommand implementations -------------------------------------------

def cmd_parse(args):
    circuit, elements = _read_circuit(args.netlist, unroll=False)
    text = write_bench(circuit, elements)
    reparsed, _ = parse_bench(text)
    assert len(reparsed.gates) == len(circuit.gates)
    if args.out:
        _emit(text, args.out)
    _emit({"inputs": len(circuit.inputs), "outputs": len(circuit.outputs),
           "gates": len(circuit.gates), "flip_flops": len(elements),
           "pragmas": len(circuit.pragmas)}, None)
    return 0


def cmd_lock(args):
    circuit, _ = _read_circuit(args.netlist)
    locked = insert_key_gates(circuit, args.keys, args.seed,
                              benchmark=args.netlist)
    _emit(write_bench(locked.circuit), args.out)
    write_sidecar(locked, args.sidecar)
    _emit({"key_inputs": len(locked.key_inputs), "seed": args.seed,
           "out": args.out, "sidecar": args.sidecar}, None)
    return 0


def cmd_camo(args):
    circuit, _ = _read_circuit(args.netlist)
    if args.gates:
        selection = load_selection(args.gates)
    else:
        selection = select_gates_random(circuit, args.fraction, args.seed)
    locked = camouflage(circuit, selection, args.set, benchmark=args.netlist,
                        seed=args.seed)
    _emit(write_bench(locked.circuit), args.out)
    write_sidecar(locked, args.sidecar)
    _emit({"camouflaged_gates": len(locked.camo_map),
           "key_inputs": len(locked.key_inputs), "seed": args.seed,
           "function_set": args.set}, None)
    return 0


def cmd_annotate(args):
    circuit, _ = _read_circuit(args.netlist)
    selection = (load_selection(args.gates) if args.gates
                 else select_gates_random(circuit, args.fraction, args.seed))
    if args.mode == "prob":
        anns = make_probabilistic(circuit, selection, args.correctness)
    else:
        anns = make_polymorphic(circuit, selection)
    annotated = circuit.replace(
        pragmas=circuit.pragmas + tuple(annotations_to_pragmas(anns)))
    _emit(write_bench(annotated), args.out)
    _emit({"annotated_gates": len(anns), "mode": args.mode,
           "seed": args.seed}, None)
    return 0


def cmd_simulate(args):
    circuit, _ = _read_circuit(args.netlist)
    anns = pragmas_to_annotations(circuit)
    key_inputs = ()
    key = args.key
    if args.sidecar:
        doc, side_anns = read_sidecar(args.sidecar)
        locked = attach_sidecar(circuit, doc)
        key_inputs = locked.key_inputs
        anns = list(anns) + list(side_anns)
        if key is None:
            key = locked.correct_key
    sim = Simulator(circuit, annotations=anns, key_inputs=key_inputs)
    if args.samples > 1:
        hist = sim.sample(args.input, args.samples, args.seed, key=key)
        _emit({"input": args.input, "samples": args.samples,
               "seed": args.seed, "histogram": hist.counts}, args.out)
    else:
        _emit({"input": args.input,
               "output": sim.eval(args.input, key=key)}, args.out)
    return 0


def cmd_attack(args):
    locked, anns = _load_locked(args)
    defense = DefenseConfig() if args.defended else None
    oracle = Oracle(locked.circuit, annotations=anns, key=locked.correct_key,
                    key_inputs=locked.key_inputs, seed=args.oracle_seed,
                    defense=defense)
    result = _ATTACKS[args.kind](locked, oracle, _attack_config(args))
    verified = False
    if result.success:
        if args.original:
            original, _ = _read_circuit(args.original)
            verified = verify_key(locked, original, result.key)
        else:
            verified = miter_unsat(locked.circuit, result.key, locked.key_inputs,
                                   locked.circuit, locked.correct_key,
                                   locked.key_inputs)
    if args.trace:
        with open(args.trace, "w") as f:
            f.write("\n".join(result.trace_lines) + "\n")
    _emit({"status": result.status, "key": result.key, "verified": verified,
           "iterations": result.iterations,
           "oracle_queries": result.oracle_queries,
           "runtime_s": result.runtime_s, "seed": args.seed,
           "oracle_seed": args.oracle_seed, "kind": args.kind}, args.out)
    return 0


def cmd_campaign(args):
    locked, anns = _load_locked(args)
    original, _ = _read_circuit(args.original)
    defense = DefenseConfig() if args.defended else None
    cfg = CampaignConfig(runs=args.runs, attack=args.kind,
                         attack_config=_attack_config(args),
                         master_seed=args.seed, benchmark=args.netlist,
                         correctness=args.correctness_label,
                         pct_prob_gates=args.pct_label, jobs=args.jobs)
    summary = run_campaign(cfg, locked, original, anns, defense=defense)
    _emit(emit_report(summary, args.format), args.out)
    return 0


def cmd_hybrid(args):
    circuit, _ = _read_circuit(args.netlist)
    delays = read_delay_map(args.delay_map) if args.delay_map else DelayMap()
    base = sta(circuit, delays)
    selection, timing = delay_aware_select(circuit, delays)
    area, power, delay = chip_cost(circuit, selection, CostCatalog(), delays)
    _emit({"gates": len(circuit.gates), "selected": len(selection),
           "selection_fraction": len(selection) / max(1, len(circuit.gates)),
           "critical_delay_s": timing.critical_delay,
           "original_critical_delay_s": base.critical_delay,
           "area_m2": area, "power_w": power, "delay_s": delay,
           "selection": selection}, args.out)
    return 0


def cmd_adder_study(args):
    study = adder_case_study(args.width, args.k, args.error)
    _emit({"width": study.width, "k": study.k,
           "worst_case_error_bound": study.worst_case_error_bound,
           "worst_case_error_pct": f"{study.worst_case_error_bound * 100:.6f}%",
           "per_gate_saving": study.per_gate_saving,
           "total_saving": study.total_saving,
           "selected_gates": study.selected_gates,
           "total_gates": study.total_gates}, args.out)
    return 0


def cmd_device(args):
    params = dev.read_params(args.params) if args.params else dev.DeviceParams()
    cal = (dev.read_calibration(args.calibration, params.i_s_det)
           if args.calibration else dev.default_calibration())
    g_p, g_ap = dev.conductances(params)
    op = dev.operating_point(params, args.current, cal)
    doc = {
        "current_a": args.current,
        "g_p_s": g_p, "g_ap_s": g_ap,
        "power_w": op.power, "correctness": op.correctness,
        "mean_delay_s": op.mean_delay,
        "energy_j": dev.energy(op.power, op.mean_delay),
        "catalog": {k: {"energy_j": c.energy, "power_w": c.power,
                        "delay_s": c.delay, "area_m2": c.area}
                    for k, c in dev.PRIMITIVE_CATALOG.items()},
    }
    _emit(doc, args.out)
    return 0


def cmd_report(args):
    with open(args.report) as f:
        summary = parse_report(f.read())
    _emit(emit_report(summary, args.format), args.out)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="camoforge",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def netlist_cmd(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(fn=fn)
        return sp

    sp = netlist_cmd("parse", cmd_parse, help="validate and round-trip a netlist")
    sp.add_argument("netlist")
    sp.add_argument("--out")

    sp = netlist_cmd("lock", cmd_lock, help="insert XOR/XNOR key gates")
    sp.add_argument("netlist")
    sp.add_argument("--keys", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--sidecar", required=True)

    sp = netlist_cmd("camo", cmd_camo, help="camouflage gates with a function set")
    sp.add_argument("netlist")
    sp.add_argument("--set", choices=sorted(FUNCTION_SETS), default="gshe16")
    sp.add_argument("--fraction", type=float, default=0.1)
    sp.add_argument("--gates", help="file with one gate name per line")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--sidecar", required=True)

    sp = netlist_cmd("annotate", cmd_annotate,
                     help="attach probabilistic/polymorphic pragmas")
    sp.add_argument("netlist")
    sp.add_argument("--mode", choices=("prob", "poly"), required=True)
    sp.add_argument("--fraction", type=float, default=0.1)
    sp.add_argument("--gates")
    sp.add_argument("--correctness", type=float, default=0.99)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    sp = netlist_cmd("simulate", cmd_simulate, help="evaluate or sample a circuit")
    sp.add_argument("netlist")
    sp.add_argument("--input", required=True)
    sp.add_argument("--key")
    sp.add_argument("--sidecar")
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    def attack_flags(sp):
        sp.add_argument("--kind", choices=("sat", "2dip", "psat"),
                        default="sat")
        sp.add_argument("--samples", type=int, default=1000)
        sp.add_argument("--patterns", type=int, default=10000)
        sp.add_argument("--max-iters", type=int, default=10000)
        sp.add_argument("--timeout-s", type=float, default=3600.0)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--solver", default="builtin")
        sp.add_argument("--defended", action="store_true")
        sp.add_argument("--out")

    sp = netlist_cmd("attack", cmd_attack, help="run an oracle-guided attack")
    sp.add_argument("netlist")
    sp.add_argument("--sidecar", required=True)
    sp.add_argument("--original")
    sp.add_argument("--oracle-seed", type=int, default=1)
    sp.add_argument("--trace")
    attack_flags(sp)

    sp = netlist_cmd("campaign", cmd_campaign, help="repeated attack runs")
    sp.add_argument("netlist")
    sp.add_argument("--sidecar", required=True)
    sp.add_argument("--original", required=True)
    sp.add_argument("--runs", type=int, required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--format", choices=("json-like", "csv"),
                    default="json-like")
    sp.add_argument("--correctness-label", type=float, default=1.0)
    sp.add_argument("--pct-label", type=float, default=0.0)
    attack_flags(sp)

    sp = netlist_cmd("hybrid", cmd_hybrid,
                     help="delay-aware replacement selection and cost")
    sp.add_argument("netlist")
    sp.add_argument("--delay-map")
    sp.add_argument("--out")

    sp = netlist_cmd("adder-study", cmd_adder_study,
                     help="LSB-cone accuracy/power case study")
    sp.add_argument("--width", type=int, default=32)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--error", type=float, default=0.10)
    sp.add_argument("--out")

    sp = netlist_cmd("device", cmd_device, help="evaluate the device cost model")
    sp.add_argument("--current", type=float, default=20e-6)
    sp.add_argument("--params")
    sp.add_argument("--calibration")
    sp.add_argument("--out")

    sp = netlist_cmd("report", cmd_report, help="re-emit a campaign report")
    sp.add_argument("report")
    sp.add_argument("--format", choices=("json-like", "csv"), default="csv")
    sp.add_argument("--out")

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _ERRORS as e:
        print(f"camoforge: error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
