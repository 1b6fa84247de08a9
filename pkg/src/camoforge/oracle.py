"""Black-box query interface over a correctly-keyed circuit.

Attacks see only `query`/`sample`; the key and annotations stay hidden.
The defended variant watches for repeated input patterns and temporarily
degrades the correctness of monitored gates when sampling is detected.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
import math
import threading

import numpy as np

from .obfuscate import BehaviorAnnotation
from .simulate import EvalMode, Simulator, OutputHistogram, _histogram


class OracleError(Exception):
    pass


@dataclass(frozen=True)
class DefenseConfig:
    """Counter-based sampling detector at the primary inputs.

    If any identical input occurs >= `threshold` times within the last
    `window` queries, monitored gates run at `escalated_correctness` for
    the next `duration` queries. Defaults are chosen so that Monte-Carlo
    sampling at S = 1000 necessarily trips the escalation.
    """

    window: int = 64
    threshold: float = 4
    duration: int = 1024
    escalated_correctness: float = 0.5
    monitored: tuple = ()   # gate names; empty = all annotated gates

    def __post_init__(self):
        if not 0.5 <= self.escalated_correctness <= 1.0:
            raise OracleError("escalated correctness outside [0.5, 1]")
        if self.threshold != math.inf and self.threshold > self.window:
            raise OracleError("threshold must be <= window")


class Oracle:
    """Stateful black box; query accounting is exact under concurrent use."""

    def __init__(self, circuit, annotations=None, key=None, key_inputs=(),
                 variant=None, seed=0, stream=0, defense=None, poly_epoch=1):
        annotations = tuple(annotations or ())
        if variant is None:
            variant = "probabilistic" if annotations else "deterministic"
        if variant == "defended" and defense is None:
            defense = DefenseConfig()
        if defense is not None:
            variant = "defended"
        if variant not in ("deterministic", "probabilistic", "defended"):
            raise OracleError(f"unknown variant {variant!r}")
        self.variant = variant
        self.defense = defense
        self._key = key
        self._sim = Simulator(circuit, annotations=annotations,
                              key_inputs=key_inputs, poly_epoch=poly_epoch)
        self._esc_sim = None
        if variant == "defended":
            self._esc_sim = Simulator(
                circuit, annotations=self._escalated(circuit, annotations, defense),
                key_inputs=key_inputs, poly_epoch=poly_epoch)
            self._window = deque(maxlen=defense.window)
            self._esc_left = 0
        self._mode = EvalMode.stochastic(seed, stream)
        self._seq = 0
        self.queries = 0
        self._lock = threading.Lock()

    @staticmethod
    def _escalated(circuit, annotations, defense):
        monitored = set(defense.monitored) or {a.gate for a in annotations
                                               if a.mode == "prob"}
        out = []
        covered = set()
        for a in annotations:
            if a.gate in monitored and a.mode == "prob":
                out.append(BehaviorAnnotation(
                    a.gate, "prob", correctness=defense.escalated_correctness))
            else:
                out.append(a)
            covered.add(a.gate)
        for g in sorted(monitored - covered):
            out.append(BehaviorAnnotation(
                g, "prob", correctness=defense.escalated_correctness))
        return out

    @property
    def num_inputs(self):
        return len(self._sim.free_inputs)

    @property
    def num_outputs(self):
        return len(self._sim.circuit.outputs)

    def _tick(self, n):
        with self._lock:
            base = self._seq
            self._seq += n
            self.queries += n
        return base

    def _escalation_flags(self, input_bits, n):
        """Advance the defense state for n consecutive arrivals of one
        input; flags[i] tells whether query i runs escalated."""
        d = self.defense
        flags = []
        for _ in range(n):
            self._window.append(input_bits)
            flags.append(self._esc_left > 0)
            if self._esc_left > 0:
                self._esc_left -= 1
            if d.threshold != math.inf and \
                    sum(1 for w in self._window if w == input_bits) >= d.threshold:
                self._esc_left = d.duration
        return flags

    def query(self, input_bits):
        """One output pattern; deterministic variant ignores annotations."""
        base = self._tick(1)
        if self.variant == "deterministic":
            return self._sim.eval(input_bits, key=self._key)
        if self.variant == "defended":
            escalated = self._escalation_flags(input_bits, 1)[0]
            sim = self._esc_sim if escalated else self._sim
            return sim.eval(input_bits, key=self._key, mode=self._mode,
                            sample_index=base)
        return self._sim.eval(input_bits, key=self._key, mode=self._mode,
                              sample_index=base)

    def sample(self, input_bits, samples):
        """`samples` consecutive queries of one input, as a histogram."""
        if samples < 1:
            raise OracleError("samples must be >= 1")
        base = self._tick(samples)
        if self.variant == "deterministic":
            pat = self._sim.eval(input_bits, key=self._key)
            return OutputHistogram({pat: samples}, samples)
        if self.variant == "defended":
            flags = self._escalation_flags(input_bits, samples)
            if not any(flags):
                out = self._sim._run(self._sim._pi_matrix(input_bits, self._key, samples),
                                     self._mode, base)
            else:
                normal = self._sim._run(
                    self._sim._pi_matrix(input_bits, self._key, samples),
                    self._mode, base)
                esc = self._esc_sim._run(
                    self._esc_sim._pi_matrix(input_bits, self._key, samples),
                    self._mode, base)
                out = np.where(np.array(flags)[None, :], esc, normal)
            return _histogram(out)
        return self._sim.sample(input_bits, samples, self._mode.seed,
                                stream=self._mode.stream, base_index=base,
                                key=self._key)

    def __repr__(self):
        return (f"Oracle({self.variant}, {self.num_inputs} in, "
                f"{self.num_outputs} out, {self.queries} queries)")
