"""F/R symbol circuits, their simulator, verification and cost model."""

from .arith import add_mod_gates, expand_adders, ripple_add
from .costs import CostReport, ScalingFit, fit_scaling, resources, scaling_sweep
from .ir import Circuit, Gate, Register, label_width
from .lcu import BlockEncoding, block_encoding_deviation, block_matrix, lcu_block_encoding_su2_hopping
from .simulator import (
    MAX_QUBITS,
    QubitBudgetError,
    kickback_phase,
    phase_gradient_state,
    run_sparse,
    simulate,
)
from .synth import MODEL_KINDS, synth_f, synth_r
from .verify import CatalysisError, VerifyReport, verify_circuit

__all__ = [
    "BlockEncoding",
    "CatalysisError",
    "Circuit",
    "CostReport",
    "Gate",
    "MAX_QUBITS",
    "MODEL_KINDS",
    "QubitBudgetError",
    "Register",
    "ScalingFit",
    "VerifyReport",
    "add_mod_gates",
    "block_encoding_deviation",
    "block_matrix",
    "expand_adders",
    "fit_scaling",
    "kickback_phase",
    "label_width",
    "lcu_block_encoding_su2_hopping",
    "phase_gradient_state",
    "resources",
    "ripple_add",
    "run_sparse",
    "scaling_sweep",
    "simulate",
    "synth_f",
    "synth_r",
    "verify_circuit",
]
