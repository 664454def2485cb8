"""Circuit intermediate representation and its line-oriented text format.

Qubit ``q`` is bit ``q`` of a basis index.  A register is a contiguous run of
qubits read little-endian, so register value ``v`` sets qubit ``start + i``
to bit ``i`` of ``v``.  Macro operands are plain qubit tuples, which lets a
macro read a slice of a register (dropping the low bit halves an even value).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

PRIMITIVES = ("X", "Z", "H", "S", "CZ", "CCZ", "CNOT", "SWAP", "CPHASE", "RY")
MACROS = (
    "ADD_MOD",
    "SUB_MOD",
    "MUL",
    "SQUARE",
    "CARRY",
    "BRANCH_FLAGS",
    "UNIFORM",
    "QROM",
    "PHASE_GRADIENT_INIT",
    "UNARY_ITERATE",
)
ROLES = ("label", "fermion", "ancilla", "gradient", "index", "system")


@dataclass(frozen=True)
class Register:
    name: str
    start: int
    width: int
    role: str = "label"

    @property
    def qubits(self) -> tuple:
        return tuple(range(self.start, self.start + self.width))

    def __getitem__(self, i):
        return self.qubits[i]


@dataclass
class Gate:
    """One instruction.

    Primitives act on ``targets`` and fire only when every qubit in
    ``controls`` is 1.  Macros act on ``operands`` (tuples of qubits); their
    ``targets`` is the flattened union, kept for bookkeeping.  ``params`` must
    be JSON-serializable.
    """

    kind: str
    targets: tuple = ()
    controls: tuple = ()
    params: dict = field(default_factory=dict)
    operands: tuple = ()

    def __post_init__(self):
        if self.kind not in PRIMITIVES and self.kind not in MACROS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        self.targets = tuple(int(q) for q in self.targets)
        self.controls = tuple(int(q) for q in self.controls)
        self.operands = tuple(tuple(int(q) for q in op) for op in self.operands)
        if self.kind in MACROS and not self.targets:
            self.targets = tuple(q for op in self.operands for q in op)
        used = self.targets + self.controls
        if len(set(used)) != len(used):
            raise ValueError(f"{self.kind}: a qubit appears twice in {used}")

    @property
    def is_macro(self) -> bool:
        return self.kind in MACROS

    @property
    def qubits(self) -> tuple:
        return self.targets + self.controls

    def inverse(self) -> "Gate":
        k, p = self.kind, dict(self.params)
        if k in ("X", "Z", "H", "CZ", "CCZ", "CNOT", "SWAP", "MUL", "CARRY", "BRANCH_FLAGS"):
            return Gate(k, self.targets, self.controls, p, self.operands)
        if k == "S":
            return Gate("CPHASE", self.targets, self.controls, {"num": -1, "den": 4})
        if k == "CPHASE":
            p["num"] = -p["num"]
            return Gate(k, self.targets, self.controls, p)
        if k == "RY":
            p["theta"] = -p["theta"]
            return Gate(k, self.targets, self.controls, p)
        if k in ("ADD_MOD", "SUB_MOD"):
            return Gate("SUB_MOD" if k == "ADD_MOD" else "ADD_MOD", (), self.controls, p, self.operands)
        if k == "SQUARE":
            p["scale"] = -p.get("scale", 1)
            return Gate(k, (), self.controls, p, self.operands)
        if k == "QROM" and p.get("mode") == "rotate":
            p["table"] = [[addr, -theta] for addr, theta in p["table"]]
            return Gate(k, (), self.controls, p, self.operands)
        if k == "UNARY_ITERATE":
            from ..fermion_encoding import PauliString

            terms = []
            for n, x, z, ph in p["terms"]:
                d = PauliString(n, x, z, ph).dagger()
                terms.append([d.n, d.x, d.z, d.phase])
            p["terms"] = terms
            return Gate(k, (), self.controls, p, self.operands)
        # UNIFORM, QROM amplitude loading, PHASE_GRADIENT_INIT
        p["adjoint"] = not p.get("adjoint", False)
        return Gate(k, (), self.controls, p, self.operands)


class Circuit:
    """Registers plus an ordered gate list, with small builder helpers."""

    def __init__(self, name: str = "circuit"):
        self.name = name
        self.registers: dict[str, Register] = {}
        self.gates: list[Gate] = []
        self.meta: dict = {}
        self._n = 0

    # structure -------------------------------------------------------------
    @property
    def n_qubits(self) -> int:
        return self._n

    def add_register(self, name: str, width: int, role: str = "label") -> Register:
        if name in self.registers:
            raise ValueError(f"register {name!r} already declared")
        if width < 1:
            raise ValueError("register width must be positive")
        if role not in ROLES:
            raise ValueError(f"unknown register role {role!r}")
        reg = Register(name, self._n, int(width), role)
        self.registers[name] = reg
        self._n += reg.width
        return reg

    def __getitem__(self, name: str) -> Register:
        return self.registers[name]

    def append(self, gate: Gate) -> Gate:
        bad = [q for q in gate.qubits if not 0 <= q < self._n]
        if bad:
            raise ValueError(f"{gate.kind} touches undeclared qubits {bad}")
        self.gates.append(gate)
        return gate

    def extend(self, gates: Iterable[Gate]):
        for g in gates:
            self.append(g)

    def inverse_gates(self, gates: Optional[list] = None) -> list:
        return [g.inverse() for g in reversed(self.gates if gates is None else gates)]

    # primitive helpers -----------------------------------------------------
    def x(self, q, controls=()):
        return self.append(Gate("X", (q,), tuple(controls)))

    def cnot(self, c, t):
        return self.append(Gate("CNOT", (t,), (c,)))

    def z(self, q, controls=()):
        return self.append(Gate("Z", (q,), tuple(controls)))

    def cz(self, a, b):
        return self.append(Gate("CZ", (a, b)))

    def ccz(self, a, b, c):
        return self.append(Gate("CCZ", (a, b, c)))

    def h(self, q):
        return self.append(Gate("H", (q,)))

    def s(self, q, controls=()):
        return self.append(Gate("S", (q,), tuple(controls)))

    def swap(self, a, b, controls=()):
        return self.append(Gate("SWAP", (a, b), tuple(controls)))

    def cphase(self, num, den, target, controls=()):
        """Phase exp(2 pi i num/den) when the target and all controls are 1."""
        return self.append(Gate("CPHASE", (target,), tuple(controls), {"num": int(num), "den": int(den)}))

    def ry(self, theta, target, controls=()):
        return self.append(Gate("RY", (target,), tuple(controls), {"theta": float(theta)}))

    def macro(self, kind: str, operands, controls=(), **params) -> Gate:
        if kind not in MACROS:
            raise ValueError(f"{kind!r} is not a macro")
        ops = tuple(tuple(op.qubits) if isinstance(op, Register) else tuple(op) for op in operands)
        return self.append(Gate(kind, (), tuple(controls), params, ops))

    # text format -------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"CIRCUIT {self.name} {self._n}"]
        for reg in self.registers.values():
            lines.append(f"REG {reg.name} {reg.start} {reg.width} {reg.role}")
        for g in self.gates:
            parts = [g.kind, _qlist(g.targets if not g.is_macro else ())]
            parts.append("c=" + _qlist(g.controls))
            if g.is_macro:
                parts.append("ops=" + ";".join(_qlist(op) for op in g.operands))
            if g.params:
                parts.append("p=" + json.dumps(g.params, sort_keys=True, separators=(",", ":")))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        circ = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, *rest = line.split(" ", 1)
            rest = rest[0] if rest else ""
            if head == "CIRCUIT":
                name, _ = rest.rsplit(" ", 1)
                circ = cls(name)
                continue
            if circ is None:
                raise ValueError("circuit text must start with a CIRCUIT line")
            if head == "REG":
                name, start, width, role = rest.split()
                reg = circ.add_register(name, int(width), role)
                if reg.start != int(start):
                    raise ValueError(f"register {name} declared out of order")
                continue
            fields = rest.split(" ", 3)
            targets = _parse_qlist(fields[0])
            controls, ops, params = (), (), {}
            for fld in fields[1:]:
                if fld.startswith("c="):
                    controls = _parse_qlist(fld[2:])
                elif fld.startswith("ops="):
                    ops = tuple(_parse_qlist(s) for s in fld[4:].split(";"))
                elif fld.startswith("p="):
                    params = json.loads(fld[2:])
            circ.append(Gate(head, targets, controls, params, ops))
        if circ is None:
            raise ValueError("empty circuit text")
        return circ


def _qlist(qs) -> str:
    return ",".join(str(q) for q in qs) if qs else "-"


def _parse_qlist(s: str) -> tuple:
    return () if s in ("-", "") else tuple(int(t) for t in s.split(","))


def label_width(family: str, k: int) -> int:
    """Qubits per gauge label: ceil(log2 k) for U(1)_k, ceil(log2(k+1)) for SU(2)_k."""
    size = k if family == "u1" else k + 1
    return max(1, math.ceil(math.log2(size)))
