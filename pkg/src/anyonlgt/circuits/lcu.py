"""Prepare/select block encoding of the SU(2)_k single-link hopping block."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..fusion_surface import kinetic_block, make_instance, pauli_decompose_edge_hopping
from .costs import CostReport, resources
from .ir import Circuit
from .simulator import run_sparse

INDEX_QUBITS = 5
SYSTEM_QUBITS = 4


@dataclass
class BlockEncoding:
    circuit: Circuit
    cost: CostReport
    terms: list
    l1_norm: float
    prepare_gates: list
    select_gates: list

    @property
    def n_terms(self) -> int:
        return len(self.terms)


def lcu_block_encoding_su2_hopping(k: int) -> BlockEncoding:
    """Circuit prepare . select . prepare^dagger for the kinetic block of SU(2)_k.

    ``l1_norm`` is the sum of the block's Pauli coefficients, so the top-left
    block of the circuit equals ``kinetic_block / l1_norm``.
    """
    model = make_instance(f"su2:{k}")
    terms = pauli_decompose_edge_hopping(model)
    L = len(terms)
    if L > 2**INDEX_QUBITS:
        raise ValueError(f"{L} Pauli terms do not fit {INDEX_QUBITS} index qubits")
    alphas = np.array([a for a, _ in terms])
    lam = float(alphas.sum())
    c = Circuit(f"su2_k_lcu_k{k}")
    idx = c.add_register("index", INDEX_QUBITS, "index")
    sys_ = c.add_register("system", SYSTEM_QUBITS, "system")
    c.meta.update(model_kind="su2_k", k=k, symbol="lcu")
    amps = [float(math.sqrt(a / lam)) for a in alphas]
    c.macro("UNIFORM", [idx], L=L)
    c.macro("QROM", [idx], mode="amplitudes", amplitudes=amps)
    prepare = list(c.gates)
    c.macro("UNARY_ITERATE", [idx, sys_], terms=[[p.n, p.x, p.z, p.phase] for _, p in terms])
    select = c.gates[len(prepare):]
    c.extend(c.inverse_gates(prepare))
    return BlockEncoding(c, resources(c), terms, lam / 8.0, prepare, select)


def block_matrix(enc: BlockEncoding) -> np.ndarray:
    """<0|_index U |0>_index as a 16x16 matrix, column by column."""
    c = enc.circuit
    sys_q = c["system"].qubits
    B = np.zeros((16, 16), dtype=complex)
    for s in range(16):
        start = sum(((s >> i) & 1) << q for i, q in enumerate(sys_q))
        out = run_sparse(c, {start: 1 + 0j})
        for idx, amp in out.items():
            if idx & ((1 << INDEX_QUBITS) - 1):
                continue
            B[idx >> INDEX_QUBITS, s] += amp
    return B


def block_encoding_deviation(k: int) -> float:
    enc = lcu_block_encoding_su2_hopping(k)
    target = kinetic_block(make_instance(f"su2:{k}")) / enc.l1_norm
    return float(np.max(np.abs(block_matrix(enc) - target)))
