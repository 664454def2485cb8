"""Fusion-surface lattice, fusion-constrained basis, and Hamiltonian assembly.

Geometry
--------
Each matter site ``s = x + Lx*y`` of the square lattice is resolved into
three trivalent vertices L_s, M_s, R_s on a horizontal line::

    L_s --hL--> M_s --hR--> R_s ,   D_s --> M_s   (dangling, points down)
    R_s --X--> L_{s+x} ,  R_s --Y--> L_{s+y}

Arrows give edge orientation; a label always reads along its arrow.  Fusion
rules: hL in X_{s-x} x Y_{s-y} at L_s, hR in hL x D at M_s and hR in X x Y at
R_s.  The face attached to site s has eight edges and two dangling vertices:
M_s on its bottom (leg outside) and M_{s-x+y} on its top (leg inside).

Diagrammatic operators are evaluated along walks.  A label read along the
walk is w; inserting the line alpha on the right-hand side of the walk maps
w to w' with w' x alpha containing w.  A regular vertex with arriving side X,
leaving side Y and external leg Z (read away from the vertex) contributes
[F^{X' alpha Ybar}_Z]_{X Ybar'}.  Vertices whose external leg sits on the
alpha side are resolved with one extra F symbol and an inverse R symbol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .anyon_core import FusionCategory, QDeformation, make_model, modular_data, qnumber
from .fermion_encoding import PauliString
from .sparse import SparseOperator

__all__ = [
    "FusionSurfaceLattice",
    "ModelInstance",
    "GaugeBasis",
    "build_lattice",
    "make_instance",
    "enumerate_basis",
    "parity_operator",
    "global_parity_operator",
    "electric_operator",
    "projector_identity_check",
    "plaquette_operator",
    "hopping_operator",
    "kinetic_operator",
    "assemble_hamiltonian",
    "hamiltonian_terms",
    "kinetic_block",
    "pauli_decompose_edge_hopping",
    "kinetic_prefactor_table",
    "BasisCapExceeded",
]

DEFAULT_CAP = 2_000_000


class BasisCapExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    index: int
    kind: str          # hL, D, hR, X, Y
    site: int
    tail: Optional[int]  # vertex id, None for the free end of a dangling edge
    head: int

    @property
    def dangling(self) -> bool:
        return self.kind == "D"

    @property
    def horizontal(self) -> bool:
        return self.kind in ("hL", "hR", "X")


@dataclass(frozen=True)
class Walk:
    """Sides (edge, mode) and corners (kind, i, j, external edge) of a string insertion.

    Mode "r" means the inserted line runs along the right of the (upward) edge,
    mode "l" along its left.  Corner kinds name the local move: fusion or
    splitting vertex, external leg on the left or right, crossing, cup, cap.
    """

    sides: tuple
    corners: tuple
    closed: bool


class FusionSurfaceLattice:
    """Periodic brick-wall lattice with one dangling edge per matter site."""

    def __init__(self, Lx: int, Ly: int):
        if Lx < 1 or Ly < 1:
            raise ValueError("Lx and Ly must be >= 1")
        self.Lx, self.Ly = int(Lx), int(Ly)
        self.n_sites = self.Lx * self.Ly
        edges = []
        for s in range(self.n_sites):
            L, M, R = 3 * s, 3 * s + 1, 3 * s + 2
            edges.append(Edge(5 * s, "hL", s, L, M))
            edges.append(Edge(5 * s + 1, "D", s, None, M))
            edges.append(Edge(5 * s + 2, "hR", s, M, R))
            edges.append(Edge(5 * s + 3, "X", s, R, 3 * self.shift(s, 1, 0)))
            edges.append(Edge(5 * s + 4, "Y", s, R, 3 * self.shift(s, 0, 1)))
        self.edges = tuple(edges)

    # -- indexing -----------------------------------------------------------
    def site(self, x: int, y: int) -> int:
        return (x % self.Lx) + self.Lx * (y % self.Ly)

    def coords(self, s: int):
        return s % self.Lx, s // self.Lx

    def shift(self, s: int, dx: int, dy: int) -> int:
        x, y = self.coords(s)
        return self.site(x + dx, y + dy)

    def edge(self, kind: str, s: int) -> int:
        return 5 * s + ("hL", "D", "hR", "X", "Y").index(kind)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_vertices(self) -> int:
        return 3 * self.n_sites

    @property
    def dangling(self) -> tuple:
        return tuple(self.edge("D", s) for s in range(self.n_sites))

    @property
    def gauge_edges(self) -> tuple:
        return tuple(e.index for e in self.edges if not e.dangling)

    @property
    def n_plaquettes(self) -> int:
        return self.n_sites

    @cached_property
    def vertex_constraints(self) -> tuple:
        """Triples (p, q, r) of edge indices with the rule N[p][q][r] = 1."""
        out = []
        for s in range(self.n_sites):
            out.append((self.edge("X", self.shift(s, -1, 0)), self.edge("Y", self.shift(s, 0, -1)), self.edge("hL", s)))
            out.append((self.edge("hL", s), self.edge("D", s), self.edge("hR", s)))
            out.append((self.edge("X", s), self.edge("Y", s), self.edge("hR", s)))
        return tuple(out)

    def staggering(self, s: int) -> int:
        x, y = self.coords(s)
        return 1 if (x + y) % 2 == 0 else -1

    # -- walks --------------------------------------------------------------
    def plaquette_walk(self, p: int) -> Walk:
        """Clockwise loop in the face whose lower dangling vertex is M_p.

        Left boundary (upward): Y_w, hL_u, hR_u, X_u.  Right boundary
        (downward): Y_v, hR_v, hL_v, X_w, with w = p - x, u = p - x + y and
        t = p + y.  The loop crosses the dangling edge D_u.
        """
        v = p
        w = self.shift(v, -1, 0)
        u = self.shift(v, -1, 1)
        t = self.shift(v, 0, 1)
        e = self.edge
        sides = (
            (e("Y", w), "r"), (e("hL", u), "r"), (e("hR", u), "r"), (e("X", u), "r"),
            (e("Y", v), "l"), (e("hR", v), "l"), (e("hL", v), "l"), (e("X", w), "l"),
        )
        corners = (
            ("fxl", 0, 1, e("X", self.shift(u, -1, 0))),
            ("fcr", 1, 2, e("D", u)),
            ("sxl", 2, 3, e("Y", u)),
            ("cap", 3, 4, e("hL", t)),
            ("sxr", 5, 4, e("X", v)),
            ("fxr", 6, 5, e("D", v)),
            ("fxr", 7, 6, e("Y", self.shift(v, 0, -1))),
            ("cup", 0, 7, e("hR", w)),
        )
        return Walk(sides, corners, True)

    def hop_walk(self, s: int, direction: str) -> Walk:
        """String from dangling edge D_s to the neighbouring dangling edge.

        The string runs up D_s, along hR_s, the link and hL_t on their right,
        then down D_t.  It crosses Y_{t-y} (x links) or X_s (y links).
        """
        e = self.edge
        if direction == "x":
            t = self.shift(s, 1, 0)
            link = e("X", s)
            mid = (("sxl", 1, 2, e("Y", s)), ("fcr", 2, 3, e("Y", self.shift(t, 0, -1))))
        elif direction == "y":
            t = self.shift(s, 0, 1)
            link = e("Y", s)
            mid = (("scr", 1, 2, e("X", s)), ("fxl", 2, 3, e("X", self.shift(t, -1, 0))))
        else:
            raise ValueError("direction must be 'x' or 'y'")
        if t == s:
            raise ValueError(f"site {s} has no distinct neighbour in direction {direction}")
        sides = ((e("D", s), "r"), (e("hR", s), "r"), (link, "r"), (e("hL", t), "r"), (e("D", t), "l"))
        corners = (("fxl", 0, 1, e("hL", s)),) + mid + (("cap", 3, 4, e("hR", t)),)
        return Walk(sides, corners, False)

    def hop_target(self, s: int, direction: str) -> int:
        return self.shift(s, 1, 0) if direction == "x" else self.shift(s, 0, 1)

    def hop_pairs(self) -> list:
        """All (s, direction) pairs with a distinct neighbour, without double counting."""
        out = []
        seen = set()
        for s in range(self.n_sites):
            for d, (dx, dy) in (("x", (1, 0)), ("y", (0, 1))):
                t = self.shift(s, dx, dy)
                if t == s:
                    continue
                key = (s, d)
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return out

    def summary(self) -> dict:
        return {
            "Lx": self.Lx, "Ly": self.Ly, "sites": self.n_sites, "plaquettes": self.n_plaquettes,
            "edges": self.n_edges - self.n_sites, "dangling": self.n_sites, "vertices": self.n_vertices,
        }


def build_lattice(Lx: int, Ly: int) -> FusionSurfaceLattice:
    return FusionSurfaceLattice(Lx, Ly)


# ---------------------------------------------------------------------------
# Model instance
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ModelInstance:
    family: str                 # u1 or su2
    k: int
    gauge: FusionCategory
    full: FusionCategory
    rho: tuple                  # (g0,1), (g1,psi) indices in the full model
    alpha: int                  # (g1,psi)
    gm: float = 1.0
    gk: float = 1.0
    g: float = 1.0
    a: float = 1.0
    q_angle: Optional[float] = None
    symmetric_charge: bool = False

    @property
    def occupancy_bits(self) -> bool:
        return self.family == "su2"

    @property
    def spec(self) -> str:
        return f"{self.family}:{self.k}"

    def split(self, label: int):
        return divmod(label, 2)

    def pair(self, gauge_label: int, fermion_label: int) -> int:
        return 2 * gauge_label + fermion_label

    def epsilon(self, gauge_label: int) -> float:
        """q-deformed electric strength of a gauge-layer label."""
        qd = QDeformation(self.k, self.q_angle)
        if self.family == "u1":
            a = gauge_label
            if self.symmetric_charge:
                a = min(a, self.k - a)
            return qnumber(a * a, qd)
        n = gauge_label
        return qnumber(n * (n + 2) / 4.0, qd)

    @cached_property
    def dual_alpha(self) -> int:
        return int(self.full.dual[self.alpha])

    def label_name(self, lab: int) -> str:
        return self.full.labels[lab]


def make_instance(spec: str, gm=1.0, gk=1.0, g=1.0, a=1.0, q_angle=None, symmetric_charge=False) -> ModelInstance:
    spec = spec.strip().lower()
    family, _, level = spec.partition(":")
    if family not in ("u1", "su2"):
        raise ValueError(f"lattice models need a u1:k or su2:k gauge layer, got {spec!r}")
    k = int(level)
    full = make_model(spec, True, "symmetric" if symmetric_charge else "raw")
    gauge = full.factors[0]
    rho = (0, 2 * 1 + 1)
    return ModelInstance(family, k, gauge, full, rho, rho[1], gm, gk, g, a, q_angle, symmetric_charge)


# ---------------------------------------------------------------------------
# Basis
# ---------------------------------------------------------------------------

class GaugeBasis:
    """All fusion-admissible labelings in lexicographic slot order.

    Slots are the lattice edges in index order followed, for SU(2)_k, by one
    occupancy bit per dangling edge.
    """

    def __init__(self, lattice: FusionSurfaceLattice, model: ModelInstance, states: np.ndarray):
        self.lattice = lattice
        self.model = model
        self.states = states
        self.index = {tuple(int(v) for v in row): i for i, row in enumerate(states)}

    @property
    def dim(self) -> int:
        return len(self.states)

    def state(self, i: int) -> tuple:
        return tuple(int(v) for v in self.states[i])

    def lookup(self, st: tuple) -> int:
        return self.index[st]

    def occupation(self, st: tuple, s: int) -> int:
        """Fermion number on site s: 0, 1 or (SU(2)_k only) 2."""
        lab = st[self.lattice.edge("D", s)]
        if lab == self.model.rho[1]:
            return 1
        if self.model.occupancy_bits and st[self.lattice.n_edges + s]:
            return 2
        return 0

    def manifest(self) -> dict:
        lat, m = self.lattice, self.model
        names = [f"{e.kind}{e.site}" for e in lat.edges]
        if m.occupancy_bits:
            names += [f"occ{s}" for s in range(lat.n_sites)]
        states = []
        for i in range(self.dim):
            st = self.state(i)
            row = [m.label_name(v) for v in st[:lat.n_edges]]
            row += [str(v) for v in st[lat.n_edges:]]
            states.append(row)
        return {"model": m.spec, "lattice": lat.summary(), "slots": names, "states": states}

    def write_manifest(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest(), fh, ensure_ascii=False, indent=1)


def is_admissible(lattice: FusionSurfaceLattice, model: ModelInstance, st: tuple) -> bool:
    N = model.full.N
    for p, q, r in lattice.vertex_constraints:
        if not N[st[p], st[q], st[r]]:
            return False
    for s in range(lattice.n_sites):
        d = st[lattice.edge("D", s)]
        if d not in model.rho:
            return False
        if model.occupancy_bits and d == model.rho[1] and st[lattice.n_edges + s]:
            return False
    return True


def estimate_dimension(lattice: FusionSurfaceLattice, model: ModelInstance) -> float:
    total = float(np.sum(model.full.qdims ** 2))
    n_gauge = len(lattice.gauge_edges)
    loops = n_gauge - lattice.n_vertices + 1
    per_site = 2 if not model.occupancy_bits else 3
    return total ** max(loops, 1) * per_site ** lattice.n_sites


def enumerate_basis(lattice: FusionSurfaceLattice, model: ModelInstance, cap: int = DEFAULT_CAP) -> GaugeBasis:
    """Depth-first enumeration with vertex-by-vertex constraint propagation."""
    est = estimate_dimension(lattice, model)
    if est > cap:
        raise BasisCapExceeded(f"estimated dimension {est:.3g} exceeds the cap {cap}")
    N = model.full.N
    nE = lattice.n_edges
    n_slots = nE + (lattice.n_sites if model.occupancy_bits else 0)
    all_labels = tuple(range(model.full.rank))
    # for each slot, the constraints that become checkable once it is assigned
    checks = [[] for _ in range(nE)]
    for tri in lattice.vertex_constraints:
        checks[max(tri)].append(tri)
    cand = [tuple(model.rho) if e.dangling else all_labels for e in lattice.edges]

    out = []
    st = [0] * n_slots

    def rec(i):
        if i == nE:
            if model.occupancy_bits:
                occ_choices = [(0,) if st[lattice.edge("D", s)] == model.rho[1] else (0, 1)
                               for s in range(lattice.n_sites)]
                for bits in _product(occ_choices):
                    st[nE:] = bits
                    out.append(tuple(st))
            else:
                out.append(tuple(st))
            if len(out) > cap:
                raise BasisCapExceeded(f"dimension exceeds the cap {cap} (estimate {est:.3g})")
            return
        for lab in cand[i]:
            st[i] = lab
            ok = True
            for p, q, r in checks[i]:
                if not N[st[p], st[q], st[r]]:
                    ok = False
                    break
            if ok:
                rec(i + 1)

    rec(0)
    states = np.array(out, dtype=np.int16).reshape(len(out), n_slots)
    return GaugeBasis(lattice, model, states)


def _product(choices):
    if not choices:
        yield ()
        return
    for head in choices[0]:
        for tail in _product(choices[1:]):
            yield (head,) + tail


# ---------------------------------------------------------------------------
# Walk evaluation
# ---------------------------------------------------------------------------

_PLAN_CACHE: dict = {}


def _first_valid_order(n, edges, nbrs):
    """Smallest side order in which a repeated edge is fused again only after its first fusion is closed."""
    placed = [False] * n

    def ok(j):
        for i in range(n):
            if i != j and placed[i] and edges[i] == edges[j]:
                if any(not placed[x] for x in nbrs[i]):
                    return False
        return True

    seq = []

    def dfs():
        if len(seq) == n:
            return True
        for j in range(n):
            if not placed[j] and ok(j):
                placed[j] = True
                seq.append(j)
                if dfs():
                    return True
                seq.pop()
                placed[j] = False
        return False

    return list(seq) if dfs() else None


class _WalkEvaluator:
    """Fuse a string into the lattice edge by edge and collect the local coefficients.

    The lattice is drawn with every edge pointing upward, so vertices are
    either fusion (two legs below) or splitting (two legs above).  The string
    carries ``right`` where it runs to the right of an edge and ``left`` where
    it runs to the left.  Each side contributes a completeness factor, each
    contracted bubble sqrt(d_e d_line / d_e'), and cups and caps carry no
    extra weight, which makes a closed loop on the empty plaquette act with
    amplitude one.
    """

    def __init__(self, lattice: FusionSurfaceLattice, model: ModelInstance, right: int, left: int):
        self.lat = lattice
        self.m = model
        self.cat = model.full
        self.right = right
        self.left = left
        self.N = self.cat.N
        self.qd = self.cat.qdims

    # symbols ---------------------------------------------------------------
    def F(self, a, b, c, d, e, f):
        N = self.N
        if not (N[a, b, e] and N[e, c, d] and N[b, c, f] and N[a, f, d]):
            return 0j
        return self.cat.f(a, b, c, d, e, f)

    def braid(self, a, b, c, inverse=False):
        """Exchange (a, b) -> (b, a) in channel c; ``inverse`` uses 1/R^{ba}_c."""
        if not self.N[a, b, c]:
            return 0j
        if inverse:
            return 1.0 / self.cat.r(b, a, c)
        return self.cat.r(a, b, c)

    def bubble(self, old, new, line):
        qd = self.qd
        return math.sqrt(qd[old] * qd[line] / qd[new])

    # local coefficients ----------------------------------------------------
    def corner(self, kind, lo, hi, ext):
        """``lo``/``hi`` are (old, new) of the lower/upper side (left/right for cup and cap)."""
        F, g, h = self.F, self.right, self.left
        (e1, e1p), (e2, e2p) = lo, hi
        if kind == "fxl":
            return np.conj(F(ext, e1, g, e2p, e2, e1p)) * self.bubble(e1, e1p, g)
        if kind == "fxr":
            return F(h, e1, ext, e2p, e1p, e2) * self.bubble(e1, e1p, h)
        if kind == "sxl":
            return F(ext, e2, g, e1p, e1, e2p) * self.bubble(e2, e2p, g)
        if kind == "sxr":
            return np.conj(F(h, e2, ext, e1p, e2p, e1)) * self.bubble(e2, e2p, h)
        if kind == "fcr":
            tot = 0j
            for f in self.cat.products[g][ext]:
                tot += np.conj(F(e1, ext, g, e2p, e2, f)) * self.braid(g, ext, f, self._open) * F(e1, g, ext, e2p, e1p, f)
            return tot * self.bubble(e1, e1p, g)
        if kind == "scr":
            tot = 0j
            for f in self.cat.products[ext][g]:
                tot += F(e2, ext, g, e1p, e1, f) * self.braid(ext, g, f) * np.conj(F(e2, g, ext, e1p, e2p, f))
            return tot * self.bubble(e2, e2p, g)
        # cup / cap: lo = left side, hi = right side
        l, lp, r, rp = e1, e1p, e2, e2p
        norm = self.bubble(l, lp, g) * self.bubble(r, rp, h)
        if kind == "cup":
            return F(g, h, r, r, 0, rp) * np.conj(F(l, g, rp, ext, lp, r)) * norm
        if kind == "cap":
            return np.conj(F(g, h, r, r, 0, rp)) * F(l, g, rp, ext, lp, r) * norm
        raise ValueError(kind)

    # driver -----------------------------------------------------------------
    def _plan(self, walk: Walk):
        """Fusion order of the sides and, per step, the corners closed at that step.

        On small tori one edge can border the string on both sides.  Its second
        fusion is only meaningful once both corners of the first are resolved,
        so the sides are reordered (lexicographically smallest valid order).
        Each corner is tagged with its lattice vertex so the external leg can be
        read with the label it carries next to that vertex.
        """
        key = (id(self.lat), walk)
        plan = _PLAN_CACHE.get(key)
        if plan is not None:
            return plan
        n = len(walk.sides)
        edges = [e for e, _ in walk.sides]
        nbrs = [[] for _ in range(n)]
        for _, i, j, _ext in walk.corners:
            nbrs[i].append(j)
            nbrs[j].append(i)
        order = _first_valid_order(n, edges, nbrs)
        if order is None:
            raise RuntimeError("no consistent fusion order for this walk")
        pos = {side: k for k, side in enumerate(order)}
        ready = [[] for _ in range(n)]
        E = self.lat.edges
        for kind, i, j, ext in walk.corners:
            touch = [{E[x].tail, E[x].head} - {None} for x in (edges[i], edges[j], ext)]
            common = touch[0] & touch[1] & touch[2]
            if len(common) != 1:
                raise RuntimeError(f"corner {kind} does not sit on a unique vertex")
            ready[max(pos[i], pos[j])].append((kind, i, j, ext, common.pop()))
        ends = {edges[i]: tuple({E[edges[i]].tail, E[edges[i]].head} - {None}) for i in range(n)}
        plan = (tuple(order), ready, ends)
        _PLAN_CACHE[key] = plan
        return plan

    def apply(self, walk: Walk, state: tuple, restrict_ends=True):
        """Return {new_state: amplitude} for the string inserted on ``state``."""
        sides = walk.sides
        n = len(sides)
        order, ready, vends = self._plan(walk)
        N, g, h, qd = self.N, self.right, self.left, self.qd
        rank = self.cat.rank
        rho = self.m.rho
        st = list(state)
        olds = [0] * n
        news = [0] * n
        near = {}  # (edge, vertex) -> label next to that vertex when it differs from st[edge]
        out = {}
        ends = () if walk.closed else (0, n - 1)
        # a closed loop passes over the dangling leg, an open string under gauge legs
        self._open = not walk.closed

        def rec(k, amp):
            if k == n:
                key = tuple(st)
                out[key] = out.get(key, 0j) + amp
                return
            i = order[k]
            edge, mode = sides[i]
            old = st[edge]
            olds[i] = old
            line = g if mode == "r" else h
            saved_near = {v: near.get((edge, v)) for v in vends[edge]}
            for v in vends[edge]:
                near[(edge, v)] = old
            for new in range(rank):
                if mode == "r":
                    if not N[old, g, new]:
                        continue
                elif not N[h, old, new]:
                    continue
                if restrict_ends and i in ends and new not in rho:
                    continue
                news[i] = new
                st[edge] = new
                a = amp * math.sqrt(qd[new] / (qd[old] * qd[line]))
                undo = []
                for kind, lo, hi, ext, v in ready[k]:
                    if a == 0:
                        break
                    x = near.get((ext, v), st[ext])
                    a = a * self.corner(kind, (olds[lo], news[lo]), (olds[hi], news[hi]), x)
                    for side in (lo, hi):
                        kv = (sides[side][0], v)
                        undo.append((kv, near.get(kv)))
                        near[kv] = news[side]
                if a != 0:
                    rec(k + 1, a)
                for kv, val in reversed(undo):
                    if val is None:
                        near.pop(kv, None)
                    else:
                        near[kv] = val
            st[edge] = old
            for v, val in saved_near.items():
                if val is None:
                    near.pop((edge, v), None)
                else:
                    near[(edge, v)] = val

        rec(0, 1.0 + 0j)
        res = {}
        for key, amp in out.items():
            if amp == 0:
                continue
            if not walk.closed:
                amp = amp * self.endpoint_factor(walk, state, key)
            res[key] = amp
        return res

    def endpoint_factor(self, walk, old, new):
        """Weight of the two free-end vertices of an open string.

        The geometric mean of the two end bubbles makes the string operator and
        its reverse adjoint to each other.  Creating or annihilating a pair of
        self-dual charges additionally picks up a square root of the
        Frobenius-Schur indicator.
        """
        (s_edge, _), (t_edge, _) = walk.sides[0], walk.sides[-1]
        start = self.bubble(old[s_edge], new[s_edge], self.right)
        end = self.bubble(old[t_edge], new[t_edge], self.left)
        amp = math.sqrt(start * end)
        vac = self.m.rho[0]
        created = old[s_edge] == vac and old[t_edge] == vac
        annihilated = new[s_edge] == vac and new[t_edge] == vac
        if created or annihilated:
            amp *= self.fs_root()
        return amp

    def fs_root(self) -> complex:
        a = self.left
        if int(self.cat.dual[a]) != a:
            return 1.0
        kappa = self.qd[a] * self.cat.f(a, a, a, a, 0, 0)
        return 1.0 if kappa.real > 0 else 1j


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def _assemble(basis: GaugeBasis, images, hermitian=False) -> SparseOperator:
    rows, cols, vals = [], [], []
    for col in range(basis.dim):
        for st, amp in images(basis.state(col)).items():
            try:
                row = basis.lookup(st)
            except KeyError:
                raise RuntimeError(f"operator left the admissible basis: {st}") from None
            rows.append(row)
            cols.append(col)
            vals.append(amp)
    return SparseOperator.from_triplets(basis.dim, rows, cols, vals, hermitian=hermitian)


def parity_operator(basis: GaugeBasis, s: int) -> SparseOperator:
    """P_s: -1 if the dangling edge carries (g1, psi), +1 otherwise."""
    if not 0 <= s < basis.lattice.n_sites:
        raise ValueError(f"no dangling edge {s}")
    col = basis.states[:, basis.lattice.edge("D", s)]
    return SparseOperator.diagonal(np.where(col == basis.model.rho[1], -1.0, 1.0))


def global_parity_operator(basis: GaugeBasis) -> SparseOperator:
    vals = np.ones(basis.dim)
    for s in range(basis.lattice.n_sites):
        col = basis.states[:, basis.lattice.edge("D", s)]
        vals *= np.where(col == basis.model.rho[1], -1.0, 1.0)
    return SparseOperator.diagonal(vals)


def electric_operator(basis: GaugeBasis, model: ModelInstance, e: int) -> SparseOperator:
    """Diagonal epsilon(gauge label) on a non-dangling edge."""
    if basis.lattice.edges[e].dangling:
        raise ValueError("electric operator acts on non-dangling edges only")
    table = np.array([model.epsilon(g) for g in range(model.gauge.rank)])
    gauge_labels = basis.states[:, e] // 2
    return SparseOperator.diagonal(table[gauge_labels])


def projector_identity_check(model) -> float:
    """max_ab |sum_c S_0a conj(S_ca) S_cb / S_0b - delta_ab| over the gauge layer."""
    cat = model.gauge if isinstance(model, ModelInstance) else model
    S = modular_data(cat).S
    n = cat.rank
    res = 0.0
    for a in range(n):
        for b in range(n):
            val = sum(S[0, a] * np.conj(S[c, a]) * S[c, b] / S[0, b] for c in range(n))
            res = max(res, abs(val - (1.0 if a == b else 0.0)))
    return float(res)


def _alpha_index(model: ModelInstance, alpha) -> int:
    if alpha is None:
        return model.alpha
    if isinstance(alpha, str):
        return model.full.label(alpha)
    return int(alpha)


def plaquette_images(lattice, model, p, alpha=None):
    """State map of T_p^alpha: a clockwise alpha loop fused into face p."""
    a = _alpha_index(model, alpha)
    ev = _WalkEvaluator(lattice, model, a, int(model.full.dual[a]))
    walk = lattice.plaquette_walk(p)
    return lambda st: ev.apply(walk, st)


def plaquette_operator(basis: GaugeBasis, model: ModelInstance, p: int, alpha=None) -> SparseOperator:
    """T_p^alpha built from F moves at the eight face vertices and one braid at the dangling leg."""
    if not 0 <= p < basis.lattice.n_plaquettes:
        raise ValueError(f"no plaquette {p}")
    return _assemble(basis, plaquette_images(basis.lattice, model, p, alpha))


def hopping_images(lattice, model, s, direction, alpha=None):
    """State map of O^alpha moving charge alpha from D_s to its neighbour."""
    a = _alpha_index(model, alpha)
    ev = _WalkEvaluator(lattice, model, int(model.full.dual[a]), a)
    walk = lattice.hop_walk(s, direction)
    if not model.occupancy_bits:
        return lambda st: ev.apply(walk, st)

    nE = lattice.n_edges
    t = lattice.hop_target(s, direction)
    Ds, Dt = lattice.edge("D", s), lattice.edge("D", t)
    rho1 = model.rho[1]

    def occ(st, site, D):
        if st[D] == rho1:
            return 1
        return 2 if st[nE + site] else 0

    def images(st):
        n0, n1 = occ(st, s, Ds), occ(st, t, Dt)
        base = list(st)
        base[nE + s] = 0
        base[nE + t] = 0
        out = {}
        for new, amp in ev.apply(walk, tuple(base)).items():
            for m0 in _occupations(new[Ds] == rho1):
                m1 = n0 + n1 - m0
                if abs(m0 - n0) != 1 or not 0 <= m1 <= 2:
                    continue
                if (new[Dt] == rho1) != (m1 == 1):
                    continue
                st2 = list(new)
                st2[nE + s] = 1 if m0 == 2 else 0
                st2[nE + t] = 1 if m1 == 2 else 0
                key = tuple(st2)
                out[key] = out.get(key, 0j) + amp
        return out

    return images


def _occupations(single: bool):
    return (1,) if single else (0, 2)


def hopping_operator(basis: GaugeBasis, model: ModelInstance, s: int, direction: str, alpha=None) -> SparseOperator:
    """O_e^alpha moving charge alpha from D_s to its neighbour along ``direction``.

    For SU(2)_k the occupancy bits follow the fermion number: a site whose
    label becomes (0,1) ends empty or doubly occupied as fermion-number
    conservation dictates.
    """
    return _assemble(basis, hopping_images(basis.lattice, model, s, direction, alpha))


def su2_selection(n0: int, n1: int) -> bool:
    """Fermion-number selection of the SU(2)_k kinetic term (differences taken mod 3)."""
    return (n1 - n0) % 3 in (1, 2) or (n0 == 1 and n1 == 1)


def kinetic_images(lattice, model, s, direction):
    """Specialized kinetic term on one link as a state -> {state: amp} map."""
    t = lattice.hop_target(s, direction)
    Ds, Dt = lattice.edge("D", s), lattice.edge("D", t)
    rho1 = model.rho[1]
    if model.family == "u1" and model.k == 2:
        fwd = hopping_images(lattice, model, s, direction)

        def images(st):
            if (st[Ds] == rho1) == (st[Dt] == rho1):
                return {}
            return fwd(st)
        return images
    if model.family == "u1":
        fwd = hopping_images(lattice, model, s, direction, model.alpha)
        bwd = hopping_images(lattice, model, s, direction, model.dual_alpha)

        def images(st):
            occ_s, occ_t = st[Ds] == rho1, st[Dt] == rho1
            if occ_s and not occ_t:
                return fwd(st)
            if occ_t and not occ_s:
                return bwd(st)
            return {}
        return images
    hop = hopping_images(lattice, model, s, direction)
    nE = lattice.n_edges

    def occ(st, site, D):
        if st[D] == rho1:
            return 1
        return 2 if st[nE + site] else 0

    def images(st):
        if not su2_selection(occ(st, s, Ds), occ(st, t, Dt)):
            return {}
        return {k: 0.25 * v for k, v in hop(st).items()}
    return images


def kinetic_operator(basis: GaugeBasis, model: ModelInstance, s: int, direction: str) -> SparseOperator:
    return _assemble(basis, kinetic_images(basis.lattice, model, s, direction))


def _merge(dicts):
    out = {}
    for d in dicts:
        for k, v in d.items():
            out[k] = out.get(k, 0j) + v
    return out


def magnetic_operator(basis: GaugeBasis, model: ModelInstance) -> SparseOperator:
    """Sum over plaquettes of T^alpha, plus T^alphabar when alpha is not self-dual."""
    lat = basis.lattice
    charges = [model.alpha]
    if model.dual_alpha != model.alpha:
        charges.append(model.dual_alpha)
    maps = [plaquette_images(lat, model, p, c) for p in range(lat.n_plaquettes) for c in charges]
    return _assemble(basis, lambda st: _merge(m(st) for m in maps))


def hamiltonian_terms(basis: GaugeBasis, model: ModelInstance) -> dict:
    """The unscaled pieces: mass, kinetic, electric (sum of epsilon) and magnetic."""
    lat = basis.lattice
    dim = basis.dim
    hm = np.zeros(dim)
    for s in range(lat.n_sites):
        col = basis.states[:, lat.edge("D", s)]
        hm += lat.staggering(s) * np.where(col == model.rho[1], -1.0, 1.0)
    table = np.array([model.epsilon(g) for g in range(model.gauge.rank)])
    he = np.zeros(dim)
    for e in lat.gauge_edges:
        he += table[basis.states[:, e] // 2]
    kin_maps = [kinetic_images(lat, model, s, d) for s, d in lat.hop_pairs()]
    return {
        "mass": SparseOperator.diagonal(hm),
        "kinetic": _assemble(basis, lambda st: _merge(m(st) for m in kin_maps)),
        "electric": SparseOperator.diagonal(he),
        "magnetic": magnetic_operator(basis, model),
    }


def assemble_hamiltonian(basis: GaugeBasis, model: ModelInstance, terms: Optional[dict] = None) -> SparseOperator:
    """H = g_M H_M + g_K H_K + (g^2/2) sum_e eps_e - 1/(a^2 g^2) sum_p B_p."""
    terms = terms or hamiltonian_terms(basis, model)
    H = (terms["mass"].to_scipy() * model.gm
         + terms["kinetic"].to_scipy() * model.gk
         + terms["electric"].to_scipy() * (model.g ** 2 / 2.0)
         - terms["magnetic"].to_scipy() * (1.0 / (model.a ** 2 * model.g ** 2)))
    return SparseOperator.from_scipy(H, hermitian=True)


# ---------------------------------------------------------------------------
# SU(2)_k edge block and its Pauli decomposition
# ---------------------------------------------------------------------------

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0 + 0j, -1.0]),
}

# (label qubit, occupancy qubit) of one dangling edge for fermion number N
_SITE_CODE = {0: (0, 0), 1: (1, 0), 2: (0, 1)}


def su2_allowed_transitions() -> list:
    """Allowed (N_s, N_t) -> (N_s', N_t') pairs of one kinetic link, both directions."""
    out = []
    for n0 in range(3):
        for n1 in range(3):
            if not su2_selection(n0, n1):
                continue
            for m0 in range(3):
                m1 = n0 + n1 - m0
                if abs(m0 - n0) == 1 and 0 <= m1 <= 2 and (m0 == 1) != (n0 == 1) and (m1 == 1) != (n1 == 1):
                    out.append(((n0, n1), (m0, m1)))
    return out


def _edge_index(n0: int, n1: int) -> int:
    bits = _SITE_CODE[n0] + _SITE_CODE[n1]
    return int("".join(map(str, bits)), 2)


def kinetic_block(model: ModelInstance, amplitude: float = 1.0) -> np.ndarray:
    """16x16 kinetic term of one SU(2)_k link on (label_s, occ_s, label_t, occ_t), MSB first.

    The gauge-dependent F/R amplitude is a per-configuration scalar loaded
    separately; here it is the constant ``amplitude``.
    """
    if model.family != "su2":
        raise ValueError("kinetic_block is defined for SU(2)_k models")
    M = np.zeros((16, 16), dtype=complex)
    for (n0, n1), (m0, m1) in su2_allowed_transitions():
        M[_edge_index(m0, m1), _edge_index(n0, n1)] += 0.25 * amplitude
    return M


def _pauli_matrix(word: str) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for ch in word:
        out = np.kron(out, _PAULI[ch])
    return out


def _pauli_word_to_string(word: str, phase: int) -> PauliString:
    # character j acts on the qubit of weight 2**(n-1-j); Y = i X Z
    n = len(word)
    x = sum(1 << (n - 1 - j) for j, ch in enumerate(word) if ch in "XY")
    z = sum(1 << (n - 1 - j) for j, ch in enumerate(word) if ch in "ZY")
    return PauliString(n, x, z, phase + word.count("Y"))


def pauli_decompose_edge_hopping(model: ModelInstance, tol: float = 1e-12) -> list:
    """Exhaustive Pauli expansion of :func:`kinetic_block`.

    Returns ``[(alpha, PauliString)]`` with ``alpha > 0`` and the block equal
    to ``sum alpha * sigma / 8``.  Phases of the raw coefficients (always
    powers of i here) are absorbed into the Pauli strings.
    """
    H = kinetic_block(model)
    terms = []
    for word in ("".join(w) for w in _words(4)):
        c = np.trace(_pauli_matrix(word).conj().T @ H) / 16.0
        if abs(c) <= tol:
            continue
        alpha = 8.0 * abs(c)
        phase_angle = np.angle(c) / (np.pi / 2)
        k = int(round(phase_angle)) % 4
        if abs(phase_angle - round(phase_angle)) > 1e-9:
            raise RuntimeError("coefficient phase is not a power of i")
        terms.append((float(alpha), _pauli_word_to_string(word, k)))
    return terms


def _words(n):
    if n == 0:
        yield ()
        return
    for rest in _words(n - 1):
        for ch in "IXYZ":
            yield rest + (ch,)


def reconstruct_from_paulis(terms) -> np.ndarray:
    return sum(alpha * ps.to_matrix() for alpha, ps in terms) / 8.0


def _masked_rank1(M, iters: int = 500, tol: float = 1e-14):
    """Best r c^T fit to the finite entries of M by alternating least squares.

    Returns (r, c, relative Frobenius residual over the finite entries).
    """
    mask = ~np.isnan(M)
    if not mask.any():
        return None, None, 0.0
    A = np.where(mask, M, 0)
    c = mask.any(axis=0).astype(complex)
    prev = np.inf
    for _ in range(iters):
        r = (A @ c.conj()) / np.maximum((mask * np.abs(c) ** 2).sum(axis=1), 1e-300)
        c = (A.T @ r.conj()) / np.maximum((mask.T * np.abs(r) ** 2).sum(axis=1), 1e-300)
        err = float(np.linalg.norm((A - np.outer(r, c)) * mask))
        if prev - err <= tol:
            break
        prev = err
    return r, c, err / float(np.linalg.norm(A))


def kinetic_prefactor_table(model: ModelInstance, j4_j5_grid=None, lattice=None,
                            cap: int = 4 * DEFAULT_CAP) -> dict:
    """Hopping amplitudes arranged as rows (j1, j2, j3 before -> after) by columns (j4, j5).

    The x-link from site 0 to its right neighbour is used: j1, j2, j3 are the
    labels on hR_s, X_s, hL_t and j4, j5 those of the legs Y_s and Y_{t-y}.
    Labels are full names such as ``(1/2,ψ)``: the spin alone does not fix
    the amplitude, because a fermion-layer charge on a crossed leg flips its
    sign.  ``j4_j5_grid`` filters columns by these names.
    Only forward single-fermion hops into an empty site are tabulated.  The
    result carries the singular values and numerical rank of the complete
    rows (if any), the best rank-1 residual over the known entries (relative
    Frobenius norm), the normalized column prefactors and the largest number
    of known entries in one row.
    """
    if model.family != "su2":
        raise ValueError("kinetic_prefactor_table is defined for SU(2)_k models")
    lat = lattice or build_lattice(2, 2)
    basis = enumerate_basis(lat, model, cap=cap)
    s, t = 0, lat.hop_target(0, "x")
    path = (lat.edge("hR", s), lat.edge("X", s), lat.edge("hL", t))
    legs = (lat.edge("Y", s), lat.edge("Y", lat.shift(t, 0, -1)))
    Ds, Dt = lat.edge("D", s), lat.edge("D", t)
    rho0, rho1 = model.rho
    nE = lat.n_edges
    hop = hopping_images(lat, model, s, "x")
    spin = model.label_name
    entries, spread = {}, 0.0
    for i in range(basis.dim):
        st = basis.state(i)
        if st[Ds] != rho1 or st[Dt] != rho0 or (model.occupancy_bits and st[nE + t]):
            continue
        col = tuple(spin(st[e]) for e in legs)
        if j4_j5_grid is not None and col not in set(map(tuple, j4_j5_grid)):
            continue
        for new, amp in hop(st).items():
            row = tuple(spin(st[e]) for e in path) + tuple(spin(new[e]) for e in path)
            key = (row, col)
            if key in entries:
                spread = max(spread, abs(entries[key] - amp))
            else:
                entries[key] = amp
    rows = sorted({r for r, _ in entries})
    cols = sorted({c for _, c in entries})
    M = np.full((len(rows), len(cols)), np.nan + 0j)
    for (r, c), v in entries.items():
        M[rows.index(r), cols.index(c)] = v
    full = M[~np.isnan(M).any(axis=1)]
    sv = np.linalg.svd(full, compute_uv=False) if full.size else np.zeros(0)
    rank = int((sv > 1e-10 * sv[0]).sum()) if sv.size else None
    _, col_factor, resid = _masked_rank1(M)
    prefactors = None
    if col_factor is not None:
        lead = col_factor[np.flatnonzero(np.abs(col_factor) > 1e-14)[:1]]
        prefactors = col_factor / lead[0] if lead.size else col_factor
    return {
        "rows": rows,
        "columns": cols,
        "matrix": M,
        "complete_rows": int(full.shape[0]),
        "singular_values": sv,
        "rank": rank,
        "rank1_residual": resid,
        "prefactors": prefactors,
        "spectator_spread": float(spread),
        # a row with a single entry constrains nothing; the fit is then trivially exact
        "max_entries_per_row": int((~np.isnan(M)).sum(axis=1).max()) if M.size else 0,
    }
