"""Gate counts and Toffoli estimates.

Each macro carries a Toffoli formula in terms of its operand widths:

==================  ==========================================
ADD_MOD / SUB_MOD   ``w - 1`` for a power-of-two modulus, else ``4 w``
MUL                 ``2 w_x w_y``
SQUARE              ``w^2`` (power-of-two modulus) else ``w^2 + 4 w_dst``
CARRY               ``w``
BRANCH_FLAGS        ``11 w + 20`` (ten range/triangle comparisons plus one)
UNIFORM             0 for a power of two, else ``4 ceil(log2 L)``
QROM                ``L - 1`` for ``L`` table entries
UNARY_ITERATE       ``L - 1`` for ``L`` terms
PHASE_GRADIENT      0 per use; a one-time preparation note is recorded
==================  ==========================================

Controls add one Toffoli per control beyond the first, and a controlled
arithmetic macro pays an extra ``w`` for the controlled adds.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .ir import Circuit, Gate


@dataclass
class CostReport:
    counts: dict = field(default_factory=dict)
    toffoli: int = 0
    qrom_entries: int = 0
    rotations: int = 0
    qubits: int = 0
    annotations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "counts": dict(sorted(self.counts.items())),
            "toffoli": self.toffoli,
            "qrom_entries": self.qrom_entries,
            "rotations": self.rotations,
            "qubits": self.qubits,
            "annotations": list(self.annotations),
        }


def _pow2(m: int) -> bool:
    return m > 0 and m & (m - 1) == 0


def gate_toffoli(g: Gate) -> int:
    k, p = g.kind, g.params
    nc = len(g.controls)
    extra = max(0, nc - 1)
    if k in ("X", "CNOT"):
        return max(0, nc - 1)
    if k in ("Z", "CZ", "CCZ", "S", "CPHASE"):
        return max(0, len(g.qubits) - 2)
    if k == "SWAP":
        return nc
    if k in ("H", "RY"):
        return extra
    w = len(g.operands[-1]) if g.operands else 0
    ctrl = w if nc else 0
    if k in ("ADD_MOD", "SUB_MOD"):
        return (w - 1 if _pow2(int(p["modulus"])) else 4 * w) + ctrl + extra
    if k == "MUL":
        return 2 * len(g.operands[0]) * len(g.operands[1]) + extra
    if k == "SQUARE":
        ws = len(g.operands[0])
        return ws * ws + (0 if _pow2(int(p["modulus"])) else 4 * w) + ctrl + extra
    if k == "CARRY":
        return len(g.operands[0]) + extra
    if k == "BRANCH_FLAGS":
        return 11 * len(g.operands[0]) + 20 + extra
    if k == "UNIFORM":
        L = int(p["L"])
        return (0 if _pow2(L) else 4 * math.ceil(math.log2(L))) + extra
    if k == "QROM":
        L = len(p["table"]) if p.get("mode") == "rotate" else len(p["amplitudes"])
        return max(0, L - 1) + extra
    if k == "UNARY_ITERATE":
        return max(0, len(p["terms"]) - 1) + extra
    if k == "PHASE_GRADIENT_INIT":
        return 0
    raise ValueError(k)


def resources(circ: Circuit) -> CostReport:
    rep = CostReport(qubits=circ.n_qubits)
    counts: Counter = Counter()
    for g in circ.gates:
        counts[g.kind] += 1
        rep.toffoli += gate_toffoli(g)
        if g.kind == "QROM":
            rep.qrom_entries += len(g.params["table"]) if g.params.get("mode") == "rotate" else len(g.params["amplitudes"])
        if g.kind in ("RY", "QROM") or (g.kind == "CPHASE" and g.params["den"] > 4):
            rep.rotations += 1
    rep.counts = dict(counts)
    for reg in circ.registers.values():
        if reg.role == "gradient":
            order = circ.meta.get("gradient_order", 2**reg.width)
            rep.annotations.append(
                f"phase-gradient register {reg.name} (order {order}) is catalytic; "
                f"one-time preparation cost O({order})"
            )
    return rep


@dataclass
class ScalingFit:
    """Least-squares fits of a cost sequence against k."""

    ks: list
    values: list
    loglog_slope: float
    log_coeff: float
    log_offset: float
    log_r2: float

    def to_dict(self) -> dict:
        return {
            "k": list(self.ks),
            "values": list(self.values),
            "loglog_slope": self.loglog_slope,
            "log_coeff": self.log_coeff,
            "log_offset": self.log_offset,
            "log_r2": self.log_r2,
        }

    def consistent_with_log(self, r2_min: float = 0.95) -> bool:
        return self.log_coeff > 0 and self.log_r2 >= r2_min


def fit_scaling(ks, values) -> ScalingFit:
    """Slope of log(value) vs log(k), and value = c log2 k + d with its R^2."""
    k = np.asarray(ks, dtype=float)
    v = np.asarray(values, dtype=float)
    if k.size < 2:
        raise ValueError("need at least two points to fit")
    slope = float(np.polyfit(np.log(k), np.log(v), 1)[0])
    c, d = np.polyfit(np.log2(k), v, 1)
    pred = c * np.log2(k) + d
    ss_res = float(np.sum((v - pred) ** 2))
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ScalingFit([int(x) for x in ks], [float(x) for x in values], slope, float(c), float(d), r2)


def scaling_sweep(model_kind: str, symbol: str, ks, metric: str = "toffoli") -> ScalingFit:
    """Synthesize across ``ks`` and fit the chosen CostReport field."""
    from .synth import synth_f, synth_r

    build = synth_f if symbol == "f" else synth_r
    values = [getattr(resources(build(model_kind, int(k))), metric) for k in ks]
    return fit_scaling(ks, values)
