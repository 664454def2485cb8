"""F-move and braid circuits on the trivalent-vertex encoding.

Every label is a gauge register (``a``, ``b``, ...) plus a fermion-layer bit
(``a_f``, ...).  An F-move circuit stores the two vertices (a, b; e) and
(e, c; d): the middle label ``m`` starts as e and ends as f, the label shared
by (b, c; f) and (a, f; d).  A braid circuit acts on one vertex (a, b; c).

For SU(2)_k the middle leg b of the F-move is fixed to (1/2, psi), the only
value the hopping terms need, so it has no register.
"""

from __future__ import annotations

import math

from ..anyon_core import InadmissibleError, make_model
from .ir import Circuit, label_width

MODEL_KINDS = ("u1_2", "u1_k", "su2_k")


def _check(model_kind: str, k: int):
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}; expected one of {MODEL_KINDS}")
    if not isinstance(k, int) or isinstance(k, bool):
        raise ValueError("k must be an integer")
    if model_kind == "u1_2" and k != 2:
        raise ValueError("u1_2 circuits exist only for k = 2")
    if model_kind == "u1_k" and (k < 2 or k % 2):
        raise ValueError(f"U(1)_k needs an even k >= 2, got {k}")
    if model_kind == "su2_k" and k < 1:
        raise ValueError(f"SU(2)_k needs k >= 1, got {k}")


def family(model_kind: str) -> str:
    return "su2" if model_kind == "su2_k" else "u1"


def _labels(c: Circuit, names, w: int):
    for n in names:
        c.add_register(n, w, "label")
        c.add_register(n + "_f", 1, "fermion")


def _fermion_update(c: Circuit):
    # e = a x b and f = b x c, so f_f = e_f + a_f + c_f (mod 2)
    c.cnot(c["a_f"][0], c["m_f"][0])
    c.cnot(c["c_f"][0], c["m_f"][0])


# ---------------------------------------------------------------------------
# F moves
# ---------------------------------------------------------------------------

def synth_f(model_kind: str, k: int) -> Circuit:
    _check(model_kind, k)
    if model_kind == "su2_k":
        return _su2_f(k)
    w = label_width("u1", k)
    c = Circuit(f"{model_kind}_f_k{k}")
    _labels(c, "abcdm", w)
    c.meta.update(model_kind=model_kind, k=k, symbol="f")
    if model_kind == "u1_2":
        c.ccz(c["a"][0], c["b"][0], c["c"][0])
        c.cnot(c["a"][0], c["m"][0])
        c.cnot(c["c"][0], c["m"][0])
    else:
        # F = (-1)^{a * carry(b + c)}: only the parity bit of a matters
        flag = c.add_register("carry", 1, "ancilla")
        c.macro("CARRY", [c["b"], c["c"], flag], modulus=k)
        c.cz(c["a"][0], flag[0])
        c.macro("CARRY", [c["b"], c["c"], flag], modulus=k)
        c.macro("SUB_MOD", [c["a"], c["m"]], modulus=k)
        c.macro("ADD_MOD", [c["c"], c["m"]], modulus=k)
    _fermion_update(c)
    return c


def su2_f_row(k: int, n1: int, n3: int, n4: int, n5: int):
    """(F0, F1): amplitudes for n6 = n3 + s and n3 - s with s = n5 - n1."""
    cat = make_model(f"su2:{k}")
    s = n5 - n1
    row = []
    for n6 in (n3 + s, n3 - s):
        if not 0 <= n6 <= k:
            row.append(0.0)
            continue
        try:
            val = cat.f(n1, 1, n3, n4, n5, n6)
        except InadmissibleError:
            val = 0.0
        row.append(complex(val).real)
    return tuple(row)


def su2_f_addresses(k: int):
    """Admissible (n1, n3, n4, n5) with the fixed spin-1/2 leg."""
    cat = make_model(f"su2:{k}")
    N = cat.N
    out = []
    for n1 in range(k + 1):
        for n5 in (n1 - 1, n1 + 1):
            if not 0 <= n5 <= k or not N[n1, 1, n5]:
                continue
            for n3 in range(k + 1):
                for n4 in range(k + 1):
                    if N[n5, n3, n4]:
                        out.append((n1, n3, n4, n5))
    return out


def _su2_f(k: int) -> Circuit:
    w = label_width("su2", k)
    c = Circuit(f"su2_k_f_k{k}")
    _labels(c, "acdm", w)
    branch = c.add_register("branch", 1, "ancilla")
    flags = c.add_register("flags", 3, "ancilla")
    c.meta.update(model_kind="su2_k", k=k, symbol="f")
    # branch 0 keeps the sign of n5 - n1 for n6 - n3, branch 1 flips it
    c.h(branch[0])
    # rows with one admissible branch: steer the ancilla there; the only
    # sign they carry is -1 when both offsets are -1/2
    labels = [c["a"], c["c"], c["d"], c["m"]]
    c.macro("BRANCH_FLAGS", labels + [flags], k=k)
    c.ry(-math.pi / 2, branch[0], controls=(flags[0],))
    c.ry(math.pi / 2, branch[0], controls=(flags[1],))
    c.cz(flags[0], flags[2])
    c.macro("BRANCH_FLAGS", labels + [flags], k=k)
    # rows with two admissible branches: the coefficient pair is a mixing angle
    table = []
    for addr in su2_f_addresses(k):
        f0, f1 = su2_f_row(k, *addr)
        if f0 == 0 or f1 == 0:
            continue
        beta = math.atan2(f1, f0)
        table.append([list(addr), 2.0 * beta - math.pi / 2.0])
    c.macro("QROM", labels + [branch], mode="rotate", table=table)
    mod = 2**w
    c.macro("SUB_MOD", [c["a"], c["m"]], modulus=mod)
    # m now holds +-1; flipping every bit but the lowest negates it
    for q in c["m"].qubits[1:]:
        c.x(q, controls=(branch[0],))
    c.macro("ADD_MOD", [c["c"], c["m"]], modulus=mod)
    _fermion_update(c)
    return c


# ---------------------------------------------------------------------------
# braids
# ---------------------------------------------------------------------------

def gradient_order(model_kind: str, k: int) -> int:
    return 4 * (k + 2) if model_kind == "su2_k" else 2 * k


def synth_r(model_kind: str, k: int) -> Circuit:
    _check(model_kind, k)
    fam = family(model_kind)
    w = label_width(fam, k)
    c = Circuit(f"{model_kind}_r_k{k}")
    _labels(c, "abc", w)
    c.meta.update(model_kind=model_kind, k=k, symbol="r")
    if model_kind == "u1_2":
        c.s(c["a"][0], controls=(c["b"][0],))
    elif model_kind == "u1_k":
        order = gradient_order(model_kind, k)
        prod = c.add_register("prod", 2 * w, "ancilla")
        grad = c.add_register("grad", max(1, math.ceil(math.log2(order))), "gradient")
        c.meta["gradient_order"] = order
        c.macro("MUL", [c["a"], c["b"], prod])
        c.macro("ADD_MOD", [prod, grad], modulus=order)
        c.macro("MUL", [c["a"], c["b"], prod])
    else:
        _su2_r_body(c, k)
    c.cz(c["a_f"][0], c["b_f"][0])
    return c


def _su2_r_body(c: Circuit, k: int):
    order = gradient_order("su2_k", k)
    # the accumulator runs modulo twice the gradient order; its value is even,
    # so reading it without the low bit hands the gradient exactly half of it
    acc_mod = 2 * order
    par = c.add_register("par", 2, "ancilla")
    acc = c.add_register("acc", math.ceil(math.log2(acc_mod)), "ancilla")
    grad = c.add_register("grad", math.ceil(math.log2(order)), "gradient")
    c.meta["gradient_order"] = order
    a, b, cc = c["a"], c["b"], c["c"]

    sign = [
        ("ADD_MOD", [cc, par], 4),
        ("SUB_MOD", [a, par], 4),
        ("SUB_MOD", [b, par], 4),
    ]
    start = len(c.gates)
    for kind, ops, mod in sign:
        c.macro(kind, ops, modulus=mod)
    sign_gates = c.gates[start:]
    # (n3 - n1 - n2) mod 4 is 0 or 2; bit 1 is the parity of j3 - j1 - j2
    c.z(par[1])
    c.extend(c.inverse_gates(sign_gates))

    start = len(c.gates)
    for reg, s in ((cc, 1), (a, -1), (b, -1)):
        c.macro("SQUARE", [reg, acc], modulus=acc_mod, scale=s)
        c.macro("ADD_MOD", [reg, acc], modulus=acc_mod, scale=2 * s)
    casimir = c.gates[start:]
    c.macro("ADD_MOD", [acc.qubits[1:], grad], modulus=order)
    c.extend(c.inverse_gates(casimir))
