"""Edge-qubit encoding of even-parity fermionic operators on a square lattice.

One qubit per lattice edge.  A psi line fused into an edge flips its label
(Pauli X); the fermion parity of a vertex is read from the labels of its
incident edges (product of Z).  Hopping operators carry Z strings chosen so
that every pairwise (anti)commutation matches the Majorana bilinears

    O_e = -i gbar_{e0} g_{e1},     P_v = -i g_v gbar_v.

Endpoint convention: for a horizontal edge e0 is the left vertex, for a
vertical edge the lower one.  The psi line enters e0 from the right (gbar)
and e1 from the left (g).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SquareLatticeSpec",
    "PauliString",
    "edge_hopping_operator",
    "vertex_parity_operator",
    "majorana_bilinear",
    "one_form_loop",
    "vertex_loop",
    "plaquette_cycles",
    "verify_car",
    "jordan_wigner_majoranas",
    "BILINEAR_KINDS",
]

_PHASES = {0: 1, 1: 1j, 2: -1, 3: -1j}


@dataclass(frozen=True)
class PauliString:
    """i**phase * prod_q X_q^{x_q} Z_q^{z_q} (X applied left of Z on each qubit)."""

    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    @property
    def weight(self) -> int:
        return bin(self.x | self.z).count("1")

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("qubit counts differ")
        # Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}
        sign = 2 * (bin(self.z & other.x).count("1") % 2)
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z,
                           self.phase + other.phase + sign)

    def scaled(self, phase: int) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.phase + phase)

    def commutes(self, other: "PauliString") -> bool:
        s = bin(self.x & other.z).count("1") + bin(self.z & other.x).count("1")
        return s % 2 == 0

    def dagger(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, -self.phase + 2 * (bin(self.x & self.z).count("1") % 2))

    def is_hermitian(self) -> bool:
        return self.dagger() == self

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0 and self.phase == 0

    def label(self) -> str:
        """Compact text such as ``-i X0 Z3 Y5`` (Y stands for X Z up to a phase)."""
        ph = self.phase
        parts = []
        for q in range(self.n):
            bx, bz = (self.x >> q) & 1, (self.z >> q) & 1
            if bx and bz:
                parts.append(f"Y{q}")
                ph -= 3  # XZ = -iY
            elif bx:
                parts.append(f"X{q}")
            elif bz:
                parts.append(f"Z{q}")
        pre = {0: "+", 1: "+i", 2: "-", 3: "-i"}[ph % 4]
        return pre + " " + (" ".join(parts) if parts else "I")

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; qubit q is bit q of the basis index."""
        X = np.array([[0, 1], [1, 0]], dtype=complex)
        Z = np.array([[1, 0], [0, -1]], dtype=complex)
        out = np.array([[1]], dtype=complex)
        for q in reversed(range(self.n)):
            m = np.eye(2, dtype=complex)
            if (self.x >> q) & 1:
                m = m @ X
            if (self.z >> q) & 1:
                m = m @ Z
            out = np.kron(out, m)
        return self.coefficient * out


@dataclass(frozen=True)
class SquareLatticeSpec:
    """Lx by Ly vertices.  Periodic wrapping applies to directions of length >= 2."""

    Lx: int
    Ly: int
    periodic: bool = True

    def __post_init__(self):
        if self.Lx < 1 or self.Ly < 1 or self.Lx * self.Ly < 2:
            raise ValueError("need Lx, Ly >= 1 and Lx*Ly >= 2")

    @property
    def n_vertices(self) -> int:
        return self.Lx * self.Ly

    def vertex(self, x: int, y: int) -> int:
        return (x % self.Lx) + self.Lx * (y % self.Ly)

    @cached_property
    def edges(self) -> tuple:
        """Tuples (e0, e1, direction) with direction 'x' or 'y'."""
        out = []
        for y in range(self.Ly):
            for x in range(self.Lx):
                if x + 1 < self.Lx or (self.periodic and self.Lx >= 2):
                    out.append((self.vertex(x, y), self.vertex(x + 1, y), "x"))
        for y in range(self.Ly):
            for x in range(self.Lx):
                if y + 1 < self.Ly or (self.periodic and self.Ly >= 2):
                    out.append((self.vertex(x, y), self.vertex(x, y + 1), "y"))
        return tuple(out)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def incident(self) -> tuple:
        """Per vertex: ordered list of (edge, end) with end 0 for e0 and 1 for e1.

        Order: west, south, east, north (left to right, bottom to top).
        """
        inc = [[] for _ in range(self.n_vertices)]
        for idx, (a, b, d) in enumerate(self.edges):
            inc[a].append((idx, 0, d))
            inc[b].append((idx, 1, d))
        rank = {("x", 1): 0, ("y", 1): 1, ("x", 0): 2, ("y", 0): 3}
        return tuple(tuple((e, end) for e, end, d in sorted(lst, key=lambda t: (rank[(t[2], t[1])], t[0])))
                     for lst in inc)

    def n_independent_loops(self) -> int:
        return self.n_edges - self.n_vertices + 1


def _check_edge(spec, e):
    if not 0 <= e < spec.n_edges:
        raise ValueError(f"edge {e} out of range for {spec}")


def _check_vertex(spec, v):
    if not 0 <= v < spec.n_vertices:
        raise ValueError(f"vertex {v} out of range for {spec}")


def _majorana_type(end: int) -> int:
    # gbar (1) at e0, g (0) at e1
    return 1 if end == 0 else 0


def edge_hopping_operator(spec: SquareLatticeSpec, e: int) -> PauliString:
    """Encoded O_e = -i gbar_{e0} g_{e1}: X on e times Z on earlier same-type edges."""
    _check_edge(spec, e)
    z = 0
    for v in spec.edges[e][:2]:
        order = spec.incident[v]
        mine = [pos for pos, (f, end) in enumerate(order) if f == e]
        for pos in mine:
            t = _majorana_type(order[pos][1])
            for f, end in order[:pos]:
                if f != e and _majorana_type(end) == t:
                    z ^= 1 << f
    return PauliString(spec.n_edges, x=1 << e, z=z)


def vertex_parity_operator(spec: SquareLatticeSpec, v: int) -> PauliString:
    """P_v = product of Z over the edges incident to v."""
    _check_vertex(spec, v)
    z = 0
    for f, _ in spec.incident[v]:
        z ^= 1 << f
    return PauliString(spec.n_edges, z=z)


BILINEAR_KINDS = ("γγ", "γ̄γ̄", "γγ̄", "γ̄γ")
_ASCII_KINDS = {"gg": "γγ", "gbgb": "γ̄γ̄", "ggb": "γγ̄", "gbg": "γ̄γ"}


def majorana_bilinear(spec: SquareLatticeSpec, kind: str, e: int) -> PauliString:
    """Hermitian bilinear -i m0 m1 on edge e for the Majorana pair named by ``kind``.

    Built from O_e and the endpoint parities:
    P0 O = -g g,  P1 O = gbar gbar,  P0 P1 O = -i g gbar.
    """
    kind = _ASCII_KINDS.get(kind, kind)
    _check_edge(spec, e)
    O = edge_hopping_operator(spec, e)
    v0, v1, _ = spec.edges[e]
    P0, P1 = vertex_parity_operator(spec, v0), vertex_parity_operator(spec, v1)
    if kind == "γ̄γ":
        return O
    if kind == "γγ":
        return (P0 * O).scaled(1)       # -i g g = i P0 O
    if kind == "γ̄γ̄":
        return (P1 * O).scaled(3)       # -i gbar gbar = -i P1 O
    if kind == "γγ̄":
        return P0 * P1 * O
    raise ValueError(f"unknown bilinear kind {kind!r}")


# ---------------------------------------------------------------------------
# Symbolic Majorana monomials, used to fix loop phases without any oracle
# ---------------------------------------------------------------------------

def _monomial_reduce(ops):
    """Sort a product of Majoranas (mode, type) to canonical order; return (sign, ops)."""
    ops = list(ops)
    sign = 1
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(ops) - 1:
            if ops[i] == ops[i + 1]:
                del ops[i:i + 2]
                changed = True
                continue
            if ops[i] > ops[i + 1]:
                ops[i], ops[i + 1] = ops[i + 1], ops[i]
                sign = -sign
                changed = True
            i += 1
    return sign, ops


def _fermionic_image(spec, e):
    v0, v1, _ = spec.edges[e]
    return -1j, [(v0, 1), (v1, 0)]


def _walk(spec, cycle):
    """Validate that the edge list is closed: every vertex has even degree in it."""
    deg = np.zeros(spec.n_vertices, dtype=int)
    for e in cycle:
        _check_edge(spec, e)
        a, b, _ = spec.edges[e]
        deg[a] += 1
        deg[b] += 1
    if len(cycle) == 0 or np.any(deg % 2):
        raise ValueError("edge list is not a closed loop")


def one_form_loop(spec: SquareLatticeSpec, cycle) -> PauliString:
    """Closed psi line fused along ``cycle`` (edge indices).

    The product of hopping operators around the cycle is dressed with the
    vertex parities needed to make its fermionic image a scalar c; the result
    is normalized by c so that it acts as +1 on the encoded subspace.
    """
    cycle = list(cycle)
    _walk(spec, cycle)
    op = PauliString.identity(spec.n_edges)
    coeff = 1 + 0j
    mono = []
    for e in cycle:
        op = op * edge_hopping_operator(spec, e)
        c, m = _fermionic_image(spec, e)
        coeff *= c
        mono += m
    _, reduced = _monomial_reduce(mono)
    counts = {}
    for v, t in reduced:
        counts.setdefault(v, set()).add(t)
    for v, types in counts.items():
        if types != {0, 1}:
            raise ValueError("cycle leaves an unpaired Majorana")
        op = op * vertex_parity_operator(spec, v)
        coeff *= -1j
        mono += [(v, 0), (v, 1)]
    sign, rest = _monomial_reduce(mono)
    assert not rest
    coeff *= sign
    inv = {1: 0, 1j: 3, -1: 2, -1j: 1}[complex(round(coeff.real), round(coeff.imag))]
    return op.scaled(inv)


def vertex_loop(spec: SquareLatticeSpec, v: int) -> PauliString:
    """Minimal psi loop around vertex v.

    Resolving it produces P_v times (-1) to the parity inferred from the four
    incident labels; both factors are the same Z string, so the loop is the
    identity on the edge qubits.
    """
    P = vertex_parity_operator(spec, v)
    return P * P


def plaquette_cycles(spec: SquareLatticeSpec) -> list:
    """Edge lists of the elementary square plaquettes (periodic directions only)."""
    lookup = {}
    for idx, (a, b, d) in enumerate(spec.edges):
        lookup.setdefault((a, b, d), idx)
    out = []
    for y in range(spec.Ly):
        for x in range(spec.Lx):
            v = spec.vertex(x, y)
            try:
                cyc = [lookup[(v, spec.vertex(x + 1, y), "x")],
                       lookup[(spec.vertex(x + 1, y), spec.vertex(x + 1, y + 1), "y")],
                       lookup[(spec.vertex(x, y + 1), spec.vertex(x + 1, y + 1), "x")],
                       lookup[(v, spec.vertex(x, y + 1), "y")]]
            except KeyError:
                continue
            if x + 1 >= spec.Lx and not (spec.periodic and spec.Lx >= 2):
                continue
            if y + 1 >= spec.Ly and not (spec.periodic and spec.Ly >= 2):
                continue
            out.append(cyc)
    return out


def _cycle_basis(spec: SquareLatticeSpec) -> list:
    """Fundamental cycles from a BFS spanning tree (one per independent loop)."""
    n = spec.n_vertices
    parent = [None] * n
    parent[0] = (-1, -1)
    order = [0]
    adj = [[] for _ in range(n)]
    for idx, (a, b, _) in enumerate(spec.edges):
        adj[a].append((b, idx))
        adj[b].append((a, idx))
    tree = set()
    for v in order:
        for w, idx in adj[v]:
            if parent[w] is None:
                parent[w] = (v, idx)
                tree.add(idx)
                order.append(w)

    def path_to_root(v):
        out = []
        while parent[v][0] != -1:
            out.append(parent[v][1])
            v = parent[v][0]
        return out

    cycles = []
    for idx, (a, b, _) in enumerate(spec.edges):
        if idx in tree:
            continue
        edges = {idx}
        for e in path_to_root(a) + path_to_root(b):
            edges ^= {e}
        cycles.append(sorted(edges))
    return cycles


# ---------------------------------------------------------------------------
# Dense oracle
# ---------------------------------------------------------------------------

def jordan_wigner_majoranas(n_modes: int):
    """Dense (gamma, gamma_bar) lists for n modes via the Jordan-Wigner construction."""
    I = np.eye(2, dtype=complex)
    Z = np.diag([1, -1]).astype(complex)
    a = np.array([[0, 1], [0, 0]], dtype=complex)  # annihilates |1>
    gs, gbs = [], []
    for j in range(n_modes):
        mats = [Z] * j + [a] + [I] * (n_modes - j - 1)
        A = mats[0]
        for m in mats[1:]:
            A = np.kron(A, m)
        Ad = A.conj().T
        gs.append(A + Ad)
        gbs.append(-1j * (A - Ad))
    return gs, gbs


def _is_zero(M) -> bool:
    M = M.tocsr()
    M.eliminate_zeros()
    return M.nnz == 0


def verify_car(spec: SquareLatticeSpec) -> dict:
    """Compare the encoded generators against dense fermionic matrices.

    Checks, all exactly: the bilinear identities on the fermion side; that each
    encoded generator is Hermitian and squares to one; that every pair of
    generators commutes or anticommutes exactly as its fermionic counterpart;
    and that every loop in a cycle basis commutes with every generator.
    """
    n = spec.n_vertices
    if n > 9:
        raise ValueError("dense oracle limited to at most 9 vertices")
    g, gb = jordan_wigner_majoranas(n)
    dim = 2 ** n
    # restrict to the even-parity sector
    total = np.eye(dim, dtype=complex)
    for v in range(n):
        total = total @ (-1j * g[v] @ gb[v])
    even = np.where(np.isclose(np.diag(total).real, 1))[0]

    def sector(M):
        # generators are monomial matrices; sparse storage keeps the pairwise checks fast
        return sp.csr_matrix(M[np.ix_(even, even)])

    ferm, enc, names = [], [], []
    for v in range(n):
        ferm.append(sector(-1j * g[v] @ gb[v]))
        enc.append(vertex_parity_operator(spec, v))
        names.append(f"P{v}")
    bil_dense = {
        "γ̄γ": lambda a, b: -1j * gb[a] @ g[b],
        "γγ": lambda a, b: -1j * g[a] @ g[b],
        "γ̄γ̄": lambda a, b: -1j * gb[a] @ gb[b],
        "γγ̄": lambda a, b: -1j * g[a] @ gb[b],
    }
    identity_residual = 0.0
    for e, (a, b, _) in enumerate(spec.edges):
        O = -1j * gb[a] @ g[b]
        P0, P1 = -1j * g[a] @ gb[a], -1j * g[b] @ gb[b]
        identity_residual = max(
            identity_residual,
            np.abs(P0 @ O + g[a] @ g[b]).max(),
            np.abs(P1 @ O - gb[a] @ gb[b]).max(),
            np.abs(P0 @ P1 @ O + 1j * g[a] @ gb[b]).max(),
        )
        for kind in BILINEAR_KINDS:
            ferm.append(sector(bil_dense[kind](a, b)))
            enc.append(majorana_bilinear(spec, kind, e))
            names.append(f"{kind}{e}")

    herm_res = 0
    square_res = 0
    for E in enc:
        herm_res = max(herm_res, 0 if E.is_hermitian() else 1)
        square_res = max(square_res, 0 if (E * E).is_identity() else 1)

    comm_res = 0.0
    m = len(ferm)
    for i in range(m):
        for j in range(i + 1, m):
            Fi, Fj = ferm[i], ferm[j]
            ab, ba = Fi @ Fj, Fj @ Fi
            f_comm = _is_zero(ab - ba)
            f_anti = _is_zero(ab + ba)
            if not (f_comm or f_anti):
                comm_res = max(comm_res, 1.0)
                continue
            if enc[i].commutes(enc[j]) != f_comm:
                comm_res = max(comm_res, 1.0)

    loops = _cycle_basis(spec)
    loop_res = 0
    for cyc in loops:
        L = one_form_loop(spec, cyc)
        if not (L * L).is_identity() or not L.is_hermitian():
            loop_res = 1
        for E in enc:
            if not L.commutes(E):
                loop_res = 1
    residual = max(identity_residual, float(herm_res), float(square_res), comm_res, float(loop_res))
    return {
        "lattice": [spec.Lx, spec.Ly],
        "periodic": spec.periodic,
        "modes": n,
        "edges": spec.n_edges,
        "generators": m,
        "bilinear_identity_residual": float(identity_residual),
        "hermiticity_residual": float(herm_res),
        "square_residual": float(square_res),
        "commutation_residual": float(comm_res),
        "loop_commutation_residual": float(loop_res),
        "constraint_count": len(loops),
        "residual": float(residual),
    }
