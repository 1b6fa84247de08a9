"""camoforge: netlist obfuscation, stochastic simulation, and SAT attacks."""

from .netlist import (Circuit, Gate, GateFunction, SequentialElement,
                      NetlistError, BenchParseError, CircuitError,
                      parse_bench, write_bench, unroll_sequential,
                      decompose_to_2input, gate_function, two_input_function,
                      ALL_16_FUNCTIONS)
from .device import (DeviceParams, OperatingPoint, PrimitiveCost,
                     FlipCalibration, conductances, read_power, energy,
                     flip_probability, primitive_cost, operating_point)
from .obfuscate import (FunctionSet, FUNCTION_SETS, LockedCircuit,
                        BehaviorAnnotation, select_gates_random,
                        insert_key_gates, camouflage, make_probabilistic,
                        make_polymorphic, annotations_to_pragmas,
                        pragmas_to_annotations, write_sidecar, read_sidecar,
                        attach_sidecar)
from .simulate import (EvalMode, OutputHistogram, Simulator, evaluate,
                       sample_outputs, random_input_matrix)
from .oracle import Oracle, DefenseConfig
from .attack import (AttackConfig, AttackResult, CnfFormula, encode,
                     export_dimacs, ground_truth, prune_inconsistent_keys,
                     conventional_attack, double_dip_attack, psat_attack)
from .metrics import (CampaignConfig, CampaignSummary, verify_key, hd_oer,
                      run_campaign, emit_report, parse_report, derive_seed)
from .hybrid import (DelayMap, TimingReport, sta, delay_aware_select,
                     chip_cost, build_ripple_adder, lsb_cone_selection,
                     adder_case_study, make_skewed_circuit)

__version__ = "0.1.0"
