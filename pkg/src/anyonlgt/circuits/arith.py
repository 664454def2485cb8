"""Gate-level reference for ADD_MOD / SUB_MOD on small registers.

Modular addition is built from a Cuccaro ripple-carry adder in the usual
way: add, subtract the modulus, copy the sign into a flag, add the modulus
back under the flag, then clear the flag by comparing the result with the
addend.  It uses only CNOT, Toffoli (X with two controls) and X.
"""

from __future__ import annotations

from .ir import Circuit, Gate

MAX_REFERENCE_WIDTH = 5


def _maj(c, b, a):
    return [Gate("CNOT", (b,), (a,)), Gate("CNOT", (c,), (a,)), Gate("X", (a,), (c, b))]


def _uma(c, b, a):
    return [Gate("X", (a,), (c, b)), Gate("CNOT", (c,), (a,)), Gate("CNOT", (b,), (c,))]


def ripple_add(A, B, carry) -> list:
    """B <- A + B mod 2^len(B); A and the clean ``carry`` qubit are restored."""
    if len(A) != len(B):
        raise ValueError("ripple_add needs equal widths")
    n = len(A)
    gates = _maj(carry, B[0], A[0])
    for i in range(1, n):
        gates += _maj(A[i - 1], B[i], A[i])
    for i in range(n - 1, 0, -1):
        gates += _uma(A[i - 1], B[i], A[i])
    gates += _uma(carry, B[0], A[0])
    return gates


def _inverse(gates):
    return [g.inverse() for g in reversed(gates)]


def add_mod_gates(src, dst, modulus: int, scratch: dict) -> list:
    """Gates for dst <- (dst + src) mod modulus with both values below the modulus.

    ``scratch`` supplies clean qubits: ``src_hi`` and ``dst_hi`` (one each),
    ``const`` (width + 1), ``carry`` and ``flag``.
    """
    n = len(dst)
    if len(src) != n:
        raise ValueError("source and target widths differ")
    if n > MAX_REFERENCE_WIDTH:
        raise ValueError(f"reference adder is provided for widths <= {MAX_REFERENCE_WIDTH}")
    if not 2 <= modulus <= 2**n:
        raise ValueError("modulus must fit the register")
    A = tuple(src) + (scratch["src_hi"],)
    B = tuple(dst) + (scratch["dst_hi"],)
    K = tuple(scratch["const"])
    carry, flag = scratch["carry"], scratch["flag"]
    mbits = [K[i] for i in range(n + 1) if (modulus >> i) & 1]
    load = [Gate("X", (q,)) for q in mbits]
    cload = [Gate("CNOT", (q,), (flag,)) for q in mbits]
    add_ab = ripple_add(A, B, carry)
    add_k = ripple_add(K, B, carry)

    gates = list(add_ab)
    gates += load + _inverse(add_k) + load
    gates.append(Gate("CNOT", (flag,), (B[-1],)))
    gates += cload + add_k + cload
    gates += _inverse(add_ab)
    gates.append(Gate("X", (B[-1],)))
    gates.append(Gate("CNOT", (flag,), (B[-1],)))
    gates.append(Gate("X", (B[-1],)))
    gates += add_ab
    return gates


def expand_adders(circ: Circuit) -> Circuit:
    """Copy of ``circ`` with every uncontrolled ADD_MOD / SUB_MOD as explicit gates.

    Scratch qubits are appended as one ancilla register and return clean.
    """
    widths = [len(g.operands[1]) for g in circ.gates if g.kind in ("ADD_MOD", "SUB_MOD")]
    out = Circuit(circ.name + "_expanded")
    for reg in circ.registers.values():
        out.add_register(reg.name, reg.width, reg.role)
    out.meta = dict(circ.meta)
    if not widths:
        out.extend(circ.gates)
        return out
    w = max(widths)
    scratch_reg = out.add_register("adder_scratch", w + 5, "ancilla")
    q = scratch_reg.qubits
    scratch = {"src_hi": q[0], "dst_hi": q[1], "carry": q[2], "flag": q[3], "const": q[4 : w + 5]}
    for g in circ.gates:
        if g.kind not in ("ADD_MOD", "SUB_MOD"):
            out.append(g)
            continue
        if g.controls or g.params.get("scale", 1) != 1:
            raise ValueError("only plain uncontrolled adders have a reference decomposition")
        src, dst = g.operands
        if len(src) != len(dst):
            raise ValueError("reference adder needs equal operand widths")
        n = len(dst)
        local = dict(scratch, const=scratch["const"][: n + 1])
        gates = add_mod_gates(src, dst, int(g.params["modulus"]), local)
        out.extend(gates if g.kind == "ADD_MOD" else _inverse(gates))
    return out
