"""Attack verification, error metrics, campaign orchestration, reports.

A campaign run counts as successful when the attack terminates with a key
consistent with every recorded oracle response (status Success). Whether
that key is also functionally correct is tracked separately per run via
`verify_key`; on noisy oracles the two diverge, which is exactly what the
HD/OER columns measure.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
import hashlib
import io
import json
import time

import numpy as np

from .attack import (AttackConfig, conventional_attack, double_dip_attack,
                     psat_attack, _emit_gate_clauses, _xor_clauses)
from .oracle import Oracle
from .sat import Solver
from .simulate import Simulator, EvalMode, random_input_matrix


class MetricsError(Exception):
    pass


_ATTACKS = {"sat": conventional_attack, "2dip": double_dip_attack,
            "psat": psat_attack}


def derive_seed(master_seed, index, tag=""):
    h = hashlib.blake2b(f"{master_seed}|{index}|{tag}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") & 0x7FFFFFFF


# -- key verification ---------------------------------------------------

def miter_unsat(circuit_a, key_a, key_inputs_a, circuit_b, key_b, key_inputs_b,
                seed=0, deadline=None):
    """True iff the two keyed circuits are equivalent (miter unsatisfiable)."""
    free_a = [n for n in circuit_a.inputs if n not in set(key_inputs_a)]
    free_b = [n for n in circuit_b.inputs if n not in set(key_inputs_b)]
    if len(free_a) != len(free_b):
        raise MetricsError("primary input width mismatch")
    if len(circuit_a.outputs) != len(circuit_b.outputs):
        raise MetricsError("primary output width mismatch")
    s = Solver(seed=seed)
    x = [s.new_var() for _ in free_a]

    def encode(circ, free, keys, key_bits):
        var_of = dict(zip(free, x))
        for k, b in zip(keys, key_bits or ""):
            v = s.new_var()
            var_of[k] = v
            s.add_clause((v if b == "1" else -v,))
        for g in circ.topological_order():
            ins = [var_of[n] for n in g.fanin]
            y = var_of.get(g.name)
            if y is None:
                y = s.new_var()
                var_of[g.name] = y
            _emit_gate_clauses(g.fn, y, ins, s.add_clause, s.new_var)
        return [var_of[o] for o in circ.outputs]

    outs_a = encode(circuit_a, free_a, key_inputs_a, key_a)
    outs_b = encode(circuit_b, free_b, key_inputs_b, key_b)
    dv = []
    for a, b in zip(outs_a, outs_b):
        if a == b:
            continue
        d = s.new_var()
        _xor_clauses(d, a, b, s.add_clause)
        dv.append(d)
    if not dv:
        return True
    if not s.add_clause(tuple(dv)):
        return True
    res = s.solve(deadline=deadline)
    if res is None:
        raise MetricsError("equivalence check exceeded its deadline")
    return res is False


def verify_key(locked, original, key, exhaustive_limit=20):
    """True iff the locked circuit under `key` matches the original.

    Exhaustive evaluation up to `exhaustive_limit` primary inputs,
    miter unsatisfiability beyond.
    """
    if key is None or len(key) != len(locked.key_inputs):
        return False
    n = len(locked.free_inputs)
    if n <= exhaustive_limit:
        lsim = Simulator(locked.circuit, key_inputs=locked.key_inputs)
        osim = Simulator(original)
        return bool((lsim.exhaustive(key=key) == osim.exhaustive()).all())
    return miter_unsat(locked.circuit, key, locked.key_inputs,
                       original, "", ())


# -- HD / OER -----------------------------------------------------------

def hd_oer(circuit_a, circuit_b, patterns, seed, key_a=None, key_inputs_a=(),
           key_b=None, key_inputs_b=(), annotations_a=None, annotations_b=None):
    """(HD, OER) between two stochastic circuits over random patterns.

    Draws one stochastic sample per circuit per pattern; HD is the mean
    fraction of differing output bits, OER the fraction of patterns with
    any differing bit.
    """
    sim_a = Simulator(circuit_a, annotations=annotations_a, key_inputs=key_inputs_a)
    sim_b = Simulator(circuit_b, annotations=annotations_b, key_inputs=key_inputs_b)
    if len(sim_a.free_inputs) != len(sim_b.free_inputs):
        raise MetricsError("input width mismatch")
    if len(circuit_a.outputs) != len(circuit_b.outputs):
        raise MetricsError("output width mismatch")
    inputs = random_input_matrix(len(sim_a.free_inputs), patterns, seed)
    out_a = sim_a.eval_batch(inputs, key=key_a, mode=EvalMode.stochastic(seed, 1))
    out_b = sim_b.eval_batch(inputs, key=key_b, mode=EvalMode.stochastic(seed, 2))
    diff = out_a != out_b
    hd = float(diff.mean())
    oer = float(diff.any(axis=0).mean())
    return hd, oer


# -- campaigns ------------------------------------------------------------

@dataclass
class CampaignConfig:
    runs: int
    attack: str                      # sat | 2dip | psat
    attack_config: AttackConfig = field(default_factory=AttackConfig)
    master_seed: int = 0
    benchmark: str = ""
    pct_prob_gates: float = 0.0
    correctness: float = 1.0
    jobs: int = 1
    defended: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise MetricsError("runs must be >= 1")
        if self.attack not in _ATTACKS:
            raise MetricsError(f"unknown attack kind {self.attack!r}")


@dataclass
class RunRecord:
    run: int
    seed: int
    status: str
    verified: bool
    hd: float | None
    oer: float | None
    runtime_s: float
    iterations: int
    oracle_queries: int


@dataclass
class CampaignSummary:
    benchmark: str
    attack: str
    pct_prob_gates: float
    correctness: float
    runs: int
    success_rate: float
    verified_rate: float
    mean_hd: float | None
    mean_oer: float | None
    mean_runtime_s: float
    mean_iterations: float
    mean_oracle_queries: float
    master_seed: int
    records: list = field(default_factory=list)


def _campaign_run(args):
    (locked, original, annotations, kind, attack_config, run_idx, master_seed,
     defense, patterns) = args
    seed = derive_seed(master_seed, run_idx)
    cfg = AttackConfig(samples=attack_config.samples,
                       patterns=attack_config.patterns,
                       max_iterations=attack_config.max_iterations,
                       timeout_s=attack_config.timeout_s,
                       seed=seed,
                       solver=attack_config.solver,
                       instrument=attack_config.instrument)
    oracle = Oracle(original, annotations=annotations,
                    seed=derive_seed(master_seed, run_idx, "oracle"),
                    defense=defense)
    result = _ATTACKS[kind](locked, oracle, cfg)
    hd = oer = None
    verified = False
    sampling_s = 0.0
    if result.success:
        verified = verify_key(locked, original, result.key)
        if annotations:
            t0 = time.monotonic()
            hd, oer = hd_oer(original, locked.circuit, patterns,
                             derive_seed(master_seed, run_idx, "hdoer"),
                             key_b=result.key, key_inputs_b=locked.key_inputs,
                             annotations_a=annotations,
                             annotations_b=annotations)
            sampling_s = time.monotonic() - t0
    # the sampling attack pays for the final error-metric pass; a
    # deterministic-oracle attack does not need it
    runtime = result.runtime_s + (sampling_s if kind == "psat" else 0.0)
    return RunRecord(run=run_idx, seed=seed, status=result.status,
                     verified=verified, hd=hd, oer=oer,
                     runtime_s=runtime, iterations=result.iterations,
                     oracle_queries=result.oracle_queries)


def run_campaign(config, locked, original, annotations=(), defense=None):
    """R independent attack runs with per-index derived seeds.

    Results are invariant under execution order; records are sorted by
    run index regardless of scheduling.
    """
    annotations = tuple(annotations)
    tasks = [(locked, original, annotations, config.attack, config.attack_config,
              i, config.master_seed, defense, config.attack_config.patterns)
             for i in range(config.runs)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_campaign_run, tasks))
    else:
        records = [_campaign_run(t) for t in tasks]
    records.sort(key=lambda r: r.run)

    succ = [r for r in records if r.status == "Success"]
    hds = [r.hd for r in succ if r.hd is not None]
    oers = [r.oer for r in succ if r.oer is not None]
    return CampaignSummary(
        benchmark=config.benchmark,
        attack=config.attack,
        pct_prob_gates=config.pct_prob_gates,
        correctness=config.correctness,
        runs=config.runs,
        success_rate=len(succ) / config.runs,
        verified_rate=sum(1 for r in records if r.verified) / config.runs,
        mean_hd=float(np.mean(hds)) if hds else None,
        mean_oer=float(np.mean(oers)) if oers else None,
        mean_runtime_s=float(np.mean([r.runtime_s for r in records])),
        mean_iterations=float(np.mean([r.iterations for r in records])),
        mean_oracle_queries=float(np.mean([r.oracle_queries for r in records])),
        master_seed=config.master_seed,
        records=records,
    )


# -- reports ---------------------------------------------------------------

_SUMMARY_FIELDS = ("benchmark", "attack", "pct_prob_gates", "correctness",
                   "runs", "success_rate", "verified_rate", "mean_hd",
                   "mean_oer", "mean_runtime_s", "mean_iterations",
                   "mean_oracle_queries", "master_seed")
_RUN_FIELDS = ("run", "seed", "status", "verified", "hd", "oer",
               "runtime_s", "iterations", "oracle_queries")


def emit_report(summary, fmt="json-like"):
    """Render a campaign summary; parse_report inverts both formats."""
    if not summary.records:
        raise MetricsError("empty campaign")
    if fmt in ("json-like", "structured-text"):
        doc = {k: getattr(summary, k) for k in _SUMMARY_FIELDS}
        doc["records"] = [asdict(r) for r in summary.records]
        return json.dumps(doc, indent=1) + "\n"
    if fmt in ("csv", "comma-separated"):
        buf = io.StringIO()
        buf.write(",".join(_SUMMARY_FIELDS) + "\n")
        buf.write(",".join(_csv_cell(getattr(summary, k))
                           for k in _SUMMARY_FIELDS) + "\n")
        buf.write("\n")
        buf.write(",".join(_RUN_FIELDS) + "\n")
        for r in summary.records:
            buf.write(",".join(_csv_cell(getattr(r, k)) for k in _RUN_FIELDS) + "\n")
        return buf.getvalue()
    raise MetricsError(f"unknown report format {fmt!r}")


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_report(text):
    """Parse either report format back into a CampaignSummary."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        records = [RunRecord(**r) for r in doc.pop("records")]
        return CampaignSummary(records=records, **doc)
    lines = [l for l in text.splitlines()]
    header = lines[0].split(",")
    values = lines[1].split(",")
    kw = {}
    for k, v in zip(header, values):
        kw[k] = _from_cell(k, v)
    records = []
    run_header = None
    for line in lines[2:]:
        if not line.strip():
            continue
        if run_header is None:
            run_header = line.split(",")
            continue
        cells = line.split(",")
        rkw = {k: _from_cell(k, v) for k, v in zip(run_header, cells)}
        records.append(RunRecord(**rkw))
    return CampaignSummary(records=records, **kw)


def _from_cell(name, cell):
    if name in ("benchmark", "attack", "status"):
        return cell
    if cell == "":
        return None
    if name in ("runs", "run", "seed", "iterations", "oracle_queries", "master_seed"):
        return int(cell)
    if name == "verified":
        return cell == "1"
    return float(cell)
