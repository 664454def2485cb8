"""Exact diagonalization and the large-k convergence program.

Two eigensolvers are offered: dense ``eigh`` for small matrices and a
Lanczos iteration with full reorthogonalization and locking for larger ones.
The convergence routines compare the anyonic models against their k -> infinity
limits: a truncated U(1) Kogut-Susskind Hamiltonian built by separate code on
the same graph, and the undeformed SU(2) recoupling data.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .anyon_core import InadmissibleError, QDeformation, make_model, qnumber, su2_6j
from .fusion_surface import (
    FusionSurfaceLattice,
    _WalkEvaluator,
    build_lattice,
    enumerate_basis,
    hamiltonian_terms,
    make_instance,
)
from .sparse import SparseOperator

__all__ = [
    "SpectrumResult",
    "ConvergenceReport",
    "NonConvergenceError",
    "diagonalize",
    "ks_u1_oracle",
    "convergence_u1",
    "convergence_su2",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 20240611
DENSE_LIMIT = 2000
MONOTONE_SLACK = 1e-12


class NonConvergenceError(RuntimeError):
    """The iterative eigensolver hit its Krylov-size cap."""


@dataclass
class SpectrumResult:
    eigenvalues: list
    ground_energy: float
    method: str
    residual: float
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "ground_energy": float(self.ground_energy),
            "method": self.method,
            "residual": float(self.residual),
        }


@dataclass
class ConvergenceReport:
    kind: str
    k_values: list
    deviations: dict            # quantity -> list of deviations, one per k
    verdicts: dict              # quantity -> bool (non-increasing, or a stated exact property)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.k_values, self.k_values[1:])):
            raise ValueError("k values must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k_values": list(self.k_values),
            "deviations": {k: [float(x) for x in v] for k, v in self.deviations.items()},
            "verdicts": dict(self.verdicts),
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# Eigensolvers
# ---------------------------------------------------------------------------

def _as_operator(H):
    if isinstance(H, SparseOperator):
        return H.to_scipy(), H.dim, H.hermiticity_residual()
    M = np.asarray(H)
    return M, M.shape[0], float(np.abs(M - M.conj().T).max()) if M.size else 0.0


def diagonalize(H, m: int = 4, method: str = "auto", seed: int = DEFAULT_SEED,
                tol: float = 1e-10, max_krylov: int = 600) -> SpectrumResult:
    """Lowest ``m`` eigenvalues of a Hermitian operator.

    ``method`` is ``"dense"``, ``"iterative"`` or ``"auto"`` (dense up to
    DENSE_LIMIT basis states).
    """
    A, dim, herm = _as_operator(H)
    if herm > 1e-10:
        raise ValueError(f"matrix is not Hermitian (residual {herm:.3e})")
    if dim == 0:
        raise ValueError("empty matrix")
    m = max(1, min(int(m), dim))
    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT else "iterative"
    if method == "dense":
        D = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=complex)
        w, V = np.linalg.eigh(D)
        w, V = w[:m], V[:, :m]
    elif method == "iterative":
        w, V = _lanczos_lowest(A, dim, m, seed, tol, max_krylov)
    else:
        raise ValueError(f"unknown method {method!r}")
    R = A @ V - V * w
    res = float(np.abs(R).max()) if R.size else 0.0
    return SpectrumResult([float(x) for x in w], float(w[0]), method, res, V)


def _lanczos_lowest(A, dim, m, seed, tol, max_krylov):
    """Lowest eigenpairs one at a time, each found in the complement of those already locked.

    Locking makes repeated eigenvalues come out with their full multiplicity.
    """
    rng = np.random.default_rng(seed)
    locked = np.zeros((dim, 0), dtype=complex)
    vals = []
    for _ in range(m):
        size = min(max(40, 4 * m), dim - locked.shape[1])
        while True:
            theta, vec, converged, exhausted = _lanczos_run(A, dim, locked, rng, size, tol)
            if converged or exhausted:
                break
            if size >= min(max_krylov, dim - locked.shape[1]):
                raise NonConvergenceError(f"Lanczos did not converge within {size} vectors")
            size = min(2 * size, max_krylov, dim - locked.shape[1])
        vals.append(theta)
        locked = np.hstack([locked, vec[:, None]])
    order = np.argsort(vals, kind="stable")
    return np.array(vals)[order], locked[:, order]


def _orthogonalize(v, basis):
    # two passes of classical Gram-Schmidt ("twice is enough")
    for _ in range(2):
        if basis.shape[1]:
            v = v - basis @ (basis.conj().T @ v)
    return v


def _lanczos_run(A, dim, locked, rng, size, tol):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v = _orthogonalize(v, locked)
    v /= np.linalg.norm(v)
    V = np.zeros((dim, size), dtype=complex)
    alpha, beta = [], []
    exhausted = False
    for j in range(size):
        V[:, j] = v
        w = A @ v
        a = float(np.real(np.vdot(v, w)))
        alpha.append(a)
        w = _orthogonalize(w, np.hstack([locked, V[:, : j + 1]]))
        b = float(np.linalg.norm(w))
        if b < 1e-12 or j == size - 1:
            exhausted = b < 1e-12
            break
        beta.append(b)
        v = w / b
    n = len(alpha)
    T = np.diag(alpha) + np.diag(beta[: n - 1], 1) + np.diag(beta[: n - 1], -1)
    evals, evecs = np.linalg.eigh(T)
    y = evecs[:, 0]
    vec = V[:, :n] @ y
    vec /= np.linalg.norm(vec)
    r = float(np.linalg.norm(A @ vec - evals[0] * vec))
    converged = r < tol * max(1.0, abs(evals[0]))
    return float(evals[0]), vec, converged, exhausted


# ---------------------------------------------------------------------------
# Truncated U(1) Kogut-Susskind oracle
# ---------------------------------------------------------------------------
#
# Written against the lattice graph only: integer link charges, a Z2 fermion
# string label per edge, and occupation numbers on the dangling edges.  The
# gauge part of every amplitude is exactly one; the fermion strings carry the
# sign (-1)^f of the leg the Wilson line passes.

def _face_cycle(lat: FusionSurfaceLattice, v: int):
    """Oriented boundary of the face above-left of site v: (edge, +1/-1) pairs."""
    w = lat.shift(v, -1, 0)
    u = lat.shift(v, -1, 1)
    e = lat.edge
    plus = (e("Y", w), e("hL", u), e("hR", u), e("X", u))
    minus = (e("Y", v), e("hR", v), e("hL", v), e("X", w))
    return [(x, +1) for x in plus] + [(x, -1) for x in minus], e("D", u)


def _link_path(lat: FusionSurfaceLattice, s: int, direction: str):
    """Edges carrying the flux of a hop from s (all shifted by -1), the target and the passed leg."""
    e = lat.edge
    if direction == "x":
        t = lat.shift(s, 1, 0)
        return (e("hR", s), e("X", s), e("hL", t)), t, e("Y", lat.shift(t, 0, -1))
    t = lat.shift(s, 0, 1)
    return (e("hR", s), e("Y", s), e("hL", t)), t, e("X", s)


@dataclass
class KSOracle:
    lattice: FusionSurfaceLattice
    cutoff: int
    states: list                  # tuples: per edge (charge, fermion bit); D edges carry (n, n)
    index: dict
    terms: dict                   # name -> dense matrix


def _ks_states(lat: FusionSurfaceLattice, cutoff: int) -> list:
    nE = lat.n_edges
    constraints = lat.vertex_constraints
    by_last = {}
    for tri in constraints:
        by_last.setdefault(max(tri), []).append(tri)
    choices = []
    for e in range(nE):
        if lat.edges[e].dangling:
            choices.append([(0, 0), (1, 1)])
        else:
            choices.append([(a, f) for a in range(-cutoff, cutoff + 1) for f in (0, 1)])
    out = []
    cur = [None] * nE

    def rec(i):
        if i == nE:
            out.append(tuple(cur))
            return
        for c in choices[i]:
            cur[i] = c
            ok = True
            for p, q, r in by_last.get(i, ()):
                if cur[p][0] + cur[q][0] != cur[r][0] or (cur[p][1] ^ cur[q][1]) != cur[r][1]:
                    ok = False
                    break
            if ok:
                rec(i + 1)
        cur[i] = None

    rec(0)
    return out


def ks_u1_oracle(lattice: FusionSurfaceLattice, cutoff: int, gm=1.0, gk=1.0, g=1.0, a=1.0) -> KSOracle:
    """Truncated U(1) Kogut-Susskind Hamiltonian (|charge| <= cutoff on every link)."""
    lat = lattice
    states = _ks_states(lat, cutoff)
    index = {st: i for i, st in enumerate(states)}
    n = len(states)
    mass = np.zeros((n, n))
    elec = np.zeros((n, n))
    kin = np.zeros((n, n))
    mag = np.zeros((n, n))
    gauge = [e.index for e in lat.edges if not e.dangling]
    for i, st in enumerate(states):
        mass[i, i] = sum(lat.staggering(s) * (-1) ** st[lat.edge("D", s)][0] for s in range(lat.n_sites))
        elec[i, i] = sum(st[e][0] ** 2 for e in gauge)
        for v in range(lat.n_plaquettes):
            cycle, crossed = _face_cycle(lat, v)
            sign = (-1) ** st[crossed][1]
            for orient in (+1, -1):
                new = list(st)
                for e, o in cycle:
                    c, f = new[e]
                    new[e] = (c + orient * o, f ^ 1)
                j = index.get(tuple(new))
                if j is not None:
                    mag[j, i] += sign
        for s in range(lat.n_sites):
            for d in ("x", "y"):
                path, t, leg = _link_path(lat, s, d)
                if t == s:
                    continue
                Ds, Dt = lat.edge("D", s), lat.edge("D", t)
                if st[Ds][0] != 1 or st[Dt][0] != 0:
                    continue
                new = list(st)
                new[Ds], new[Dt] = (0, 0), (1, 1)
                for e in path:
                    c, f = new[e]
                    new[e] = (c - 1, f ^ 1)
                j = index.get(tuple(new))
                if j is not None:
                    amp = (-1) ** st[leg][1]
                    kin[j, i] += amp
                    kin[i, j] += amp
    terms = {"mass": mass, "kinetic": kin, "electric": elec, "magnetic": mag}
    terms["total"] = gm * mass + gk * kin + (g ** 2 / 2.0) * elec - mag / (a ** 2 * g ** 2)
    return KSOracle(lat, cutoff, states, index, terms)


def _signed(label: int, k: int) -> int:
    return label if label <= k // 2 else label - k


def _anyon_to_ks(st, lat, k):
    out = []
    for e in range(lat.n_edges):
        gl, f = divmod(st[e], 2)
        out.append((_signed(gl, k), f))
    return tuple(out)


def _window_match(basis, oracle: KSOracle, k, window):
    """Anyonic and oracle indices of the states whose signed charges satisfy |a| <= window."""
    lat = basis.lattice
    rows, cols = [], []
    for i in range(basis.dim):
        ks = _anyon_to_ks(basis.state(i), lat, k)
        if all(abs(c) <= window for c, _ in ks):
            j = oracle.index.get(ks)
            if j is None:
                raise RuntimeError("window state missing from the oracle basis")
            rows.append(i)
            cols.append(j)
    if not rows:
        raise ValueError("comparison window is empty")
    return rows, cols


def convergence_u1(lattice=(1, 1), k_list: Sequence[int] = (8, 16, 32), couplings: Optional[dict] = None,
                   window: Optional[int] = None) -> ConvergenceReport:
    """Elementwise comparison of U(1)_k Hamiltonians with the truncated Kogut-Susskind oracle.

    Each anyonic basis state whose signed charges all satisfy |a| <= window is
    matched to the oracle state with the same charges and fermion strings.
    The default window is min(k)/4 so the same matrix elements are compared
    at every k; the per-k window |a| <= k/4 is reported as well.  A separate
    ``hopping_phase`` row evaluates single hops directly on local label
    patterns, since the closed torus only admits multiples of k charges.
    """
    ks = [int(k) for k in k_list]
    if not ks or any(k % 2 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be even and strictly increasing")
    lat = lattice if isinstance(lattice, FusionSurfaceLattice) else build_lattice(*lattice)
    cp = {"gm": 1.0, "gk": 1.0, "g": 1.0, "a": 1.0}
    cp.update(couplings or {})
    common = int(window) if window is not None else min(ks) // 4
    if common < 1:
        raise ValueError("comparison window is empty")
    names = ("mass", "kinetic", "electric", "magnetic", "total")
    dev = {n: [] for n in names}
    dev_perk = []
    hop_dev = []
    casimir = []
    sizes = []
    for k in ks:
        model = make_instance(f"u1:{k}", symmetric_charge=True, **cp)
        basis = enumerate_basis(lat, model)
        terms = hamiltonian_terms(basis, model)
        dense = {n: t.to_dense() for n, t in terms.items()}
        dense["total"] = (cp["gm"] * dense["mass"] + cp["gk"] * dense["kinetic"]
                          + (cp["g"] ** 2 / 2.0) * dense["electric"]
                          - dense["magnetic"] / (cp["a"] ** 2 * cp["g"] ** 2))
        per_k = k // 4
        oracle = ks_u1_oracle(lat, per_k + 1, **cp)
        for win, sink in ((common, dev), (per_k, None)):
            rows, cols = _window_match(basis, oracle, k, win)
            vals = {}
            for n in names:
                A = dense[n][np.ix_(rows, rows)]
                B = oracle.terms[n][np.ix_(cols, cols)]
                vals[n] = float(np.abs(A - B).max())
            if sink is not None:
                for n in names:
                    sink[n].append(vals[n])
                sizes.append(len(rows))
            else:
                dev_perk.append(vals["total"])
        hop_dev.append(_hop_phase_deviation(k, common))
        casimir.append(max(abs(qnumber(a * a, QDeformation(k)) - a * a) for a in range(common + 1)))
    dev["hopping_phase"] = hop_dev
    dev["casimir"] = casimir
    verdicts = {n: _non_increasing(v) for n, v in dev.items()}
    details = {
        "lattice": [lat.Lx, lat.Ly],
        "window": common,
        "window_states": sizes,
        "per_k_window_total": dev_perk,
        "couplings": cp,
    }
    return ConvergenceReport("u1", ks, dev, verdicts, details)


def _non_increasing(vals) -> bool:
    return all(b <= a + MONOTONE_SLACK for a, b in zip(vals, vals[1:]))


def _hop_phase_deviation(k: int, window: int) -> float:
    """max |O amplitude - KS amplitude| for single x and y hops on local label patterns.

    The string from an occupied site to an empty neighbour is evaluated on a
    2x2 scaffold whose labels satisfy the fusion rules at every vertex the
    string touches; elsewhere they are left at the vacuum.
    """
    model = make_instance(f"u1:{k}", symmetric_charge=True)
    lat = build_lattice(2, 2)
    ev = _WalkEvaluator(lat, model, model.dual_alpha, model.alpha)
    e = lat.edge
    lab = lambda c, f: 2 * (c % k) + f
    worst = 0.0
    s = 0
    rng = range(-window, window + 1)
    for d in ("x", "y"):
        walk = lat.hop_walk(s, d)
        path, t, _passed = _link_path(lat, s, d)
        # side legs of R_s and L_t that the flux does not use
        if d == "x":
            leg_r, leg_l = e("Y", s), e("Y", lat.shift(t, 0, -1))
        else:
            leg_r, leg_l = e("X", s), e("X", lat.shift(t, -1, 0))
        for hl, cr, cl, f1, f2, f3 in itertools.product(rng, rng, rng, (0, 1), (0, 1), (0, 1)):
            hr = hl + 1                  # hL_s x D_s -> hR_s
            link = hr - cr               # hR_s -> link x leg_r (or leg_r x link)
            hlt = link + cl              # link and leg_l fuse into hL_t
            if max(abs(x) for x in (hl, hr, cr, link, cl, hlt)) > window:
                continue
            st = [0] * lat.n_edges
            st[e("D", s)] = lab(1, 1)
            st[e("hL", s)] = lab(hl, f1)
            st[e("hR", s)] = lab(hr, f1 ^ 1)
            st[leg_r] = lab(cr, f2)
            st[path[1]] = lab(link, f1 ^ 1 ^ f2)
            st[leg_l] = lab(cl, f3)
            st[e("hL", t)] = lab(hlt, f1 ^ 1 ^ f2 ^ f3)
            st[e("hR", t)] = st[e("hL", t)]
            out = ev.apply(walk, tuple(st))
            target = list(st)
            target[e("D", s)] = lab(0, 0)
            target[e("D", t)] = lab(1, 1)
            for edge in path:
                c, f = divmod(st[edge], 2)
                target[edge] = lab(_signed(c, k) - 1, f ^ 1)
            target = tuple(target)
            ks_amp = (-1) ** (st[_passed] % 2)
            stray = sum(abs(v) for key, v in out.items() if key != target)
            worst = max(worst, abs(out.get(target, 0.0) - ks_amp), stray)
    return float(worst)


# ---------------------------------------------------------------------------
# SU(2)_k symbol-level limits
# ---------------------------------------------------------------------------

def _admissible(n1, n2, n3):
    return (n1 + n2 + n3) % 2 == 0 and abs(n1 - n2) <= n3 <= n1 + n2


def convergence_su2(k_list: Sequence[int] = (8, 16, 32), max_n: int = 2) -> ConvergenceReport:
    """q -> 1 limits of SU(2)_k data along ``k_list`` (labels doubled, n = 2j <= max_n).

    Quantities: the plaquette crossing factor R^{alphabar rho'}_rho for the two
    rho summands, 6j symbols against their undeformed values, the Casimir
    [j(j+1)]_q and the R symbols against (-1)^{j3-j1-j2}.
    """
    ks = [int(k) for k in k_list]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be strictly increasing")
    if ks and max(ks) > 32:
        raise ValueError("k values above 32 are outside the supported range")
    tuples = []
    for n in itertools.product(range(max_n + 1), repeat=6):
        n1, n2, n5, n3, n4, n6 = n
        if (_admissible(n1, n2, n5) and _admissible(n5, n3, n4) and _admissible(n2, n3, n6)
                and _admissible(n1, n6, n4)):
            tuples.append(n)
    undeformed = {t: su2_6j(*t) for t in tuples}
    r_case_a, r_case_b, sixj, cas, rsym = [], [], [], [], []
    for k in ks:
        full = make_model(f"su2:{k}", True)
        ab = full.label("(1/2,ψ)")
        vac = full.label("(0,1)")
        r_case_a.append(abs(full.r(ab, vac, ab) - 1.0))
        r_case_b.append(abs(full.r(ab, ab, vac) - 1.0))
        worst = 0.0
        for t in tuples:
            try:
                val = su2_6j(*t, k=k)
            except InadmissibleError:
                continue
            worst = max(worst, abs(val - undeformed[t]))
        sixj.append(worst)
        qd = QDeformation(k)
        cas.append(max(abs(qnumber(n * (n + 2) / 4.0, qd) - n * (n + 2) / 4.0) for n in range(max_n + 1)))
        gauge = make_model(f"su2:{k}")
        worst_r = 0.0
        for n1, n2, n3 in itertools.product(range(max_n + 1), repeat=3):
            if _admissible(n1, n2, n3) and n1 + n2 + n3 <= 2 * k:
                sign = -1.0 if ((n3 - n1 - n2) // 2) % 2 else 1.0
                worst_r = max(worst_r, abs(gauge.r(n1, n2, n3) - sign))
        rsym.append(worst_r)
    dev = {
        "plaquette_R_vacuum_case": r_case_a,
        "plaquette_R_pair_case": r_case_b,
        "sixj": sixj,
        "casimir": cas,
        "r_sign": rsym,
    }
    verdicts = {n: _non_increasing(v) for n, v in dev.items()}
    verdicts["plaquette_R_exactly_one"] = all(x <= 1e-12 for x in r_case_a + r_case_b)
    details = {"max_n": max_n, "sixj_tuples": len(tuples)}
    return ConvergenceReport("su2", ks, dev, verdicts, details)
