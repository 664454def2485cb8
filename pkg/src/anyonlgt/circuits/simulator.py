"""Statevector simulation.

The engine keeps a sparse ``{basis index: amplitude}`` map.  Every circuit in
this package is a basis permutation with a handful of small superposing
gates, so the sparse form stays tiny even when the register file is wide.
:func:`simulate` densifies the result; verification works on the sparse form.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..anyon_core import _su2_admissible, root_of_unity
from .ir import Circuit, Gate

MAX_QUBITS = 26
_SQRT_HALF = 1.0 / math.sqrt(2.0)
_H = np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]])


class QubitBudgetError(ValueError):
    """Raised when a circuit exceeds the simulator's qubit budget."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def read(idx: int, qubits) -> int:
    v = 0
    for i, q in enumerate(qubits):
        v |= ((idx >> q) & 1) << i
    return v


def write(idx: int, qubits, value: int) -> int:
    for i, q in enumerate(qubits):
        idx = (idx & ~(1 << q)) | (((value >> i) & 1) << q)
    return idx


def _controls_on(idx: int, controls) -> bool:
    return all((idx >> q) & 1 for q in controls)


def phase_gradient_state(order: int) -> np.ndarray:
    """sum_n exp(-2 pi i n / order) |n> / sqrt(order) on ceil(log2 order) qubits."""
    if int(order) < 2:
        raise ValueError("phase-gradient order must be at least 2")
    order = int(order)
    width = max(1, math.ceil(math.log2(order)))
    vec = np.zeros(2**width, dtype=complex)
    norm = 1.0 / math.sqrt(order)
    for n in range(order):
        vec[n] = root_of_unity(-n, order) * norm
    return vec


@lru_cache(maxsize=None)
def _completion(key: tuple) -> np.ndarray:
    """A unitary whose first column is the given unit vector (cached by value)."""
    v = np.array(key, dtype=complex)
    dim = v.size
    basis = np.eye(dim, dtype=complex)
    start = int(np.argmax(np.abs(v)))
    M = np.column_stack([v] + [basis[:, j] for j in range(dim) if j != start])
    Q, R = np.linalg.qr(M)
    Q[:, 0] *= R[0, 0] / abs(R[0, 0])
    Q.setflags(write=False)
    return Q


def state_unitary(vec) -> np.ndarray:
    return _completion(tuple(complex(x) for x in vec))


def uniform_vector(L: int, width: int) -> np.ndarray:
    v = np.zeros(2**width, dtype=complex)
    v[:L] = 1.0 / math.sqrt(L)
    return v


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


# ---------------------------------------------------------------------------
# gate actions
# ---------------------------------------------------------------------------

def _apply_local(state: dict, qubits, U: np.ndarray, controls=()) -> dict:
    out: dict = {}
    for idx, amp in state.items():
        if not _controls_on(idx, controls):
            out[idx] = out.get(idx, 0j) + amp
            continue
        local = read(idx, qubits)
        rest = write(idx, qubits, 0)
        col = U[:, local]
        for j in np.flatnonzero(col):
            key = write(rest, qubits, int(j))
            out[key] = out.get(key, 0j) + col[j] * amp
    return out


def _apply_map(state: dict, fn, controls=()) -> dict:
    """``fn(idx) -> (new_idx, phase)``; must be a bijection on the populated indices."""
    out: dict = {}
    for idx, amp in state.items():
        if _controls_on(idx, controls):
            idx, ph = fn(idx)
            amp = amp * ph
        out[idx] = out.get(idx, 0j) + amp
    return out


def _arith(g: Gate):
    """Basis map of the arithmetic macros."""
    p, ops = g.params, g.operands
    if g.kind in ("ADD_MOD", "SUB_MOD"):
        src, dst = ops
        M, scale = int(p["modulus"]), int(p.get("scale", 1))
        sign = 1 if g.kind == "ADD_MOD" else -1

        def fn(idx):
            d = read(idx, dst)
            if d >= M:
                return idx, 1
            return write(idx, dst, (d + sign * scale * read(idx, src)) % M), 1

    elif g.kind == "MUL":
        x, y, dst = ops
        mask = (1 << len(dst)) - 1

        def fn(idx):
            return write(idx, dst, read(idx, dst) ^ ((read(idx, x) * read(idx, y)) & mask)), 1

    elif g.kind == "SQUARE":
        src, dst = ops
        M, scale = int(p["modulus"]), int(p.get("scale", 1))

        def fn(idx):
            d = read(idx, dst)
            if d >= M:
                return idx, 1
            s = read(idx, src)
            return write(idx, dst, (d + scale * s * s) % M), 1

    elif g.kind == "CARRY":
        x, y, flag = ops
        M = int(p["modulus"])

        def fn(idx):
            return write(idx, flag, read(idx, flag) ^ int(read(idx, x) + read(idx, y) >= M)), 1

    elif g.kind == "BRANCH_FLAGS":
        a, c, d, m, flags = ops
        k = int(p["k"])

        def fn(idx):
            n1, n3, n4, n5 = read(idx, a), read(idx, c), read(idx, d), read(idx, m)
            f = read(idx, flags) ^ branch_flags(k, n1, n3, n4, n5)
            return write(idx, flags, f), 1

    elif g.kind == "UNARY_ITERATE":
        index, system = ops
        terms = p["terms"]

        def fn(idx):
            ell = read(idx, index)
            if ell >= len(terms):
                return idx, 1
            _, x, z, ph = terms[ell]
            s = read(idx, system)
            sign = -1 if bin(z & s).count("1") % 2 else 1
            return write(idx, system, s ^ x), sign * root_of_unity(ph, 4)

    else:
        raise ValueError(g.kind)
    return fn


def branch_flags(k: int, n1: int, n3: int, n4: int, n5: int) -> int:
    """Bits (only branch 0 admissible, only branch 1 admissible, n5 < n1)."""
    s = n5 - n1
    if abs(s) != 1:
        return 0
    ok = []
    for n6 in (n3 + s, n3 - s):
        ok.append(0 <= n6 <= k and _su2_admissible(1, n3, n6, k) and _su2_admissible(n1, n6, n4, k))
    return int(ok[0] and not ok[1]) | (int(ok[1] and not ok[0]) << 1) | (int(s < 0) << 2)


def _macro_unitary(g: Gate) -> np.ndarray:
    """Dense unitary for the state-preparation macros on their single operand."""
    p = g.params
    (reg,) = g.operands
    w = len(reg)
    if g.kind == "UNIFORM":
        U = state_unitary(uniform_vector(int(p["L"]), w))
    elif g.kind == "PHASE_GRADIENT_INIT":
        U = state_unitary(phase_gradient_state(int(p["order"])))
    elif g.kind == "QROM":
        amps = np.zeros(2**w, dtype=complex)
        amps[: len(p["amplitudes"])] = p["amplitudes"]
        U = state_unitary(amps) @ state_unitary(uniform_vector(len(p["amplitudes"]), w)).conj().T
    else:
        raise ValueError(g.kind)
    return U.conj().T if p.get("adjoint") else U


def apply_gate(state: dict, g: Gate) -> dict:
    k, t, c = g.kind, g.targets, g.controls
    if k in ("X", "CNOT"):
        (q,) = t
        return _apply_map(state, lambda i: (i ^ (1 << q), 1), c)
    if k in ("Z", "CZ", "CCZ"):
        qs = t + c
        return _apply_map(state, lambda i: (i, -1 if _controls_on(i, qs) else 1))
    if k == "S":
        qs = t + c
        return _apply_map(state, lambda i: (i, 1j if _controls_on(i, qs) else 1))
    if k == "CPHASE":
        qs = t + c
        ph = root_of_unity(g.params["num"], g.params["den"])
        return _apply_map(state, lambda i: (i, ph if _controls_on(i, qs) else 1))
    if k == "SWAP":
        a, b = t

        def fn(i):
            ba, bb = (i >> a) & 1, (i >> b) & 1
            if ba != bb:
                i ^= (1 << a) | (1 << b)
            return i, 1

        return _apply_map(state, fn, c)
    if k == "H":
        return _apply_local(state, t, _H, c)
    if k == "RY":
        return _apply_local(state, t, _ry(g.params["theta"]), c)
    if k == "QROM" and g.params.get("mode") == "rotate":
        *address, target = g.operands
        table = {tuple(a): th for a, th in g.params["table"]}
        out: dict = {}
        for idx, amp in state.items():
            key = tuple(read(idx, r) for r in address)
            if not _controls_on(idx, c) or key not in table:
                out[idx] = out.get(idx, 0j) + amp
                continue
            for j, val in _apply_local({idx: amp}, target, _ry(table[key])).items():
                out[j] = out.get(j, 0j) + val
        return out
    if k in ("UNIFORM", "PHASE_GRADIENT_INIT", "QROM"):
        return _apply_local(state, g.operands[0], _macro_unitary(g), c)
    return _apply_map(state, _arith(g), c)


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def _check_budget(circ: Circuit):
    if circ.n_qubits > MAX_QUBITS:
        raise QubitBudgetError(f"{circ.n_qubits} qubits exceed the simulator budget of {MAX_QUBITS}")


def run_sparse(circ: Circuit, state: dict, gates=None, prune: float = 0.0) -> dict:
    """Apply ``gates`` (default: the whole circuit) to a sparse state.

    Sparse states are keyed by Python ints, so no qubit budget applies here.
    """
    for g in circ.gates if gates is None else gates:
        state = apply_gate(state, g)
        if prune:
            state = {i: a for i, a in state.items() if abs(a) > prune}
    return state


def basis_index(circ: Circuit, values: dict) -> int:
    """Basis index with the named registers set to the given integer values."""
    idx = 0
    for name, v in values.items():
        reg = circ[name]
        if not 0 <= v < 2**reg.width:
            raise ValueError(f"value {v} does not fit register {name} of width {reg.width}")
        idx = write(idx, reg.qubits, int(v))
    return idx


def with_register_state(circ: Circuit, base: dict, register: str, vec) -> dict:
    """Tensor a register state vector into every branch of a sparse state."""
    reg = circ[register]
    out: dict = {}
    for idx, amp in base.items():
        for v in np.flatnonzero(vec):
            key = write(idx, reg.qubits, int(v))
            out[key] = out.get(key, 0j) + amp * vec[v]
    return out


def to_dense(circ: Circuit, state: dict) -> np.ndarray:
    _check_budget(circ)
    vec = np.zeros(2**circ.n_qubits, dtype=complex)
    for idx, amp in state.items():
        vec[idx] += amp
    return vec


def simulate(circ: Circuit, initial=0) -> np.ndarray:
    """Run the circuit and return the full statevector.

    ``initial`` is a basis index, a dict of register values, a sparse
    ``{index: amplitude}`` map flagged by complex values, or a dense vector.
    """
    _check_budget(circ)
    if isinstance(initial, (int, np.integer)):
        state = {int(initial): 1 + 0j}
    elif isinstance(initial, dict) and all(isinstance(k, str) for k in initial):
        state = {basis_index(circ, initial): 1 + 0j}
    elif isinstance(initial, dict):
        state = {int(k): complex(v) for k, v in initial.items()}
    else:
        vec = np.asarray(initial, dtype=complex)
        if vec.shape != (2**circ.n_qubits,):
            raise ValueError("dense input has the wrong dimension")
        state = {int(i): vec[i] for i in np.flatnonzero(vec)}
    return to_dense(circ, run_sparse(circ, state))


def kickback_phase(order: int, m: int) -> complex:
    """<Phi| ADD(m) |Phi> evaluated by direct summation."""
    phi = phase_gradient_state(order)
    shifted = np.zeros_like(phi)
    for n in range(order):
        shifted[(n + m) % order] = phi[n]
    return complex(np.vdot(phi, shifted))

