"""Braided fusion category data for multiplicity-free anyon models.

Three concrete families are provided: the fermion layer {1, psi}, the
Abelian U(1)_k (Z_k^(1/2)) models for even k, and SU(2)_k.  Any two models
can be stacked with :func:`deligne_product`.

Labels are plain integers indexing a model's object table.  SU(2)_k labels
are stored doubled (``n = 2j``) so that every label computation is exact.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

__all__ = [
    "root_of_unity",
    "InadmissibleError",
    "QDeformation",
    "FusionCategory",
    "ModularData",
    "ConsistencyReport",
    "qnumber",
    "qfactorial",
    "su2_6j",
    "make_fermion_layer",
    "make_u1k",
    "make_su2k",
    "deligne_product",
    "make_model",
    "f_symbol",
    "r_symbol",
    "topological_spin",
    "modular_data",
    "verify_consistency",
]


class InadmissibleError(ValueError):
    """Raised when F or R symbols are requested for a forbidden label tuple."""


@dataclass(frozen=True)
class QDeformation:
    """Root of unity ``q = exp(i * angle)``; stored as an angle so |q| = 1 exactly."""

    k: int
    angle: Optional[float] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("level k must be a positive integer")
        if self.angle is None:
            object.__setattr__(self, "angle", 2.0 * math.pi / (self.k + 2))

    @property
    def q(self) -> complex:
        return cmath.exp(1j * self.angle)


def _as_deformation(q) -> Optional[QDeformation]:
    if q is None or isinstance(q, QDeformation):
        return q
    return QDeformation(int(q))


def qnumber(n: float, q=None) -> float:
    """[n]_q in the real trigonometric form; ``q=None`` gives the undeformed value n.

    ``q`` may be a :class:`QDeformation` or an integer level k.
    """
    q = _as_deformation(q)
    if q is None:
        return float(n)
    half = q.angle / 2.0
    return math.sin(n * half) / math.sin(half)


def qfactorial(n: int, q=None) -> float:
    """[n]_q! = prod_{m=1..n} [m]_q, with [0]_q! = 1."""
    if isinstance(n, float):
        if not n.is_integer():
            raise ValueError(f"qfactorial needs an integer, got {n}")
        n = int(n)
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"qfactorial needs a non-negative integer, got {n}")
    q = _as_deformation(q)
    out = 1.0
    for m in range(1, int(n) + 1):
        out *= qnumber(m, q)
    return out


# ---------------------------------------------------------------------------
# SU(2)_k helpers (all arguments doubled: n = 2j)
# ---------------------------------------------------------------------------

def _su2_admissible(n1: int, n2: int, n3: int, k: Optional[int]) -> bool:
    if (n1 + n2 + n3) % 2:
        return False
    if n3 < abs(n1 - n2) or n3 > n1 + n2:
        return False
    if k is not None and n1 + n2 + n3 > 2 * k:
        return False
    return True


def _delta(n1: int, n2: int, n3: int, q) -> float:
    num = (qfactorial((-n1 + n2 + n3) // 2, q) * qfactorial((n1 - n2 + n3) // 2, q)
           * qfactorial((n1 + n2 - n3) // 2, q))
    return math.sqrt(num / qfactorial((n1 + n2 + n3) // 2 + 1, q))


def su2_6j(n1: int, n2: int, n5: int, n3: int, n4: int, n6: int, k: Optional[int] = None) -> float:
    """q-deformed 6j symbol {j1 j2 j5; j3 j4 j6} via the Racah sum (doubled labels).

    ``k=None`` evaluates the undeformed (q = 1) symbol with the same code path.
    The summation index runs from the largest triangle sum up to the smallest
    quadrilateral sum.
    """
    q = None if k is None else QDeformation(k)
    triads = [(n1, n2, n5), (n5, n3, n4), (n2, n3, n6), (n1, n6, n4)]
    for t in triads:
        if not _su2_admissible(*t, k):
            raise InadmissibleError(f"6j triad {t} violates the fusion rules")
    pref = 1.0
    for t in triads:
        pref *= _delta(*t, q)
    tri = [sum(t) // 2 for t in triads]
    quad = [(n1 + n2 + n3 + n4) // 2, (n1 + n3 + n5 + n6) // 2, (n2 + n4 + n5 + n6) // 2]
    total = 0.0
    for z in range(max(tri), min(quad) + 1):
        den = 1.0
        for t in tri:
            den *= qfactorial(z - t, q)
        for s in quad:
            den *= qfactorial(s - z, q)
        total += (-1) ** z * qfactorial(z + 1, q) / den
    return pref * total


# ---------------------------------------------------------------------------
# Category container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModularData:
    S: np.ndarray
    T: np.ndarray
    D: float


@dataclass
class ConsistencyReport:
    pentagon: float = 0.0
    hexagon: float = 0.0
    hexagon_inverse: float = 0.0
    unitarity: float = 0.0
    qdim: float = 0.0
    spins: float = 0.0

    @property
    def max_residual(self) -> float:
        return max(self.pentagon, self.hexagon, self.hexagon_inverse,
                   self.unitarity, self.qdim, self.spins)

    def as_dict(self) -> dict:
        return {
            "pentagon": self.pentagon,
            "hexagon": self.hexagon,
            "hexagon_inverse": self.hexagon_inverse,
            "unitarity": self.unitarity,
            "qdim": self.qdim,
            "spins": self.spins,
            "max": self.max_residual,
        }


@dataclass(eq=False)
class FusionCategory:
    """One multiplicity-free braided fusion category.

    ``f_rule(a, b, c, d, e, f)`` and ``r_rule(a, b, c)`` evaluate symbols for
    tuples already known to be admissible; the public accessors check that.
    """

    name: str
    labels: list
    dual: np.ndarray
    N: np.ndarray
    qdims: np.ndarray
    spins: np.ndarray
    f_rule: Callable
    r_rule: Callable
    family: str = "custom"
    k: Optional[int] = None
    factors: tuple = ()
    vacuum: int = 0
    _fcache: dict = field(default_factory=dict, repr=False)
    _rcache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.labels)
        self.products = [[tuple(int(c) for c in np.nonzero(self.N[a, b])[0]) for b in range(n)]
                         for a in range(n)]

    @property
    def rank(self) -> int:
        return len(self.labels)

    def label(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            if not 0 <= name_or_index < self.rank:
                raise ValueError(f"label index {name_or_index} out of range")
            return int(name_or_index)
        try:
            return self.labels.index(name_or_index)
        except ValueError:
            raise ValueError(f"unknown label {name_or_index!r} in {self.name}") from None

    def fuse(self, a: int, b: int) -> tuple:
        return self.products[a][b]

    def admissible(self, a: int, b: int, c: int) -> bool:
        return bool(self.N[a, b, c])

    def f(self, a, b, c, d, e, f) -> complex:
        key = (a, b, c, d, e, f)
        val = self._fcache.get(key)
        if val is None:
            N = self.N
            if not (N[a, b, e] and N[e, c, d] and N[b, c, f] and N[a, f, d]):
                raise InadmissibleError(f"F^{{{a}{b}{c}}}_{d} [{e},{f}] is not admissible in {self.name}")
            val = complex(self.f_rule(a, b, c, d, e, f))
            self._fcache[key] = val
        return val

    def r(self, a, b, c) -> complex:
        key = (a, b, c)
        val = self._rcache.get(key)
        if val is None:
            if not self.N[a, b, c]:
                raise InadmissibleError(f"R^{{{a}{b}}}_{c} is not admissible in {self.name}")
            val = complex(self.r_rule(a, b, c))
            self._rcache[key] = val
        return val

    def f_matrix(self, a, b, c, d):
        """Return (es, fs, M) with M[i, j] = [F^{abc}_d]_{es[i], fs[j]}."""
        es = [e for e in self.fuse(a, b) if self.N[e, c, d]]
        fs = [f for f in self.fuse(b, c) if self.N[a, f, d]]
        M = np.array([[self.f(a, b, c, d, e, f) for f in fs] for e in es], dtype=complex)
        return es, fs, M.reshape(len(es), len(fs))


def f_symbol(m: FusionCategory, a, b, c, d, e, f) -> complex:
    """[F^{abc}_d]_{ef}; raises :class:`InadmissibleError` on forbidden tuples."""
    a, b, c, d, e, f = (m.label(x) for x in (a, b, c, d, e, f))
    return m.f(a, b, c, d, e, f)


def r_symbol(m: FusionCategory, a, b, c) -> complex:
    """R^{ab}_c; raises :class:`InadmissibleError` on forbidden triples."""
    a, b, c = (m.label(x) for x in (a, b, c))
    return m.r(a, b, c)


# ---------------------------------------------------------------------------
# Concrete models
# ---------------------------------------------------------------------------

def _table_from_rule(n: int, rule) -> np.ndarray:
    N = np.zeros((n, n, n), dtype=np.int8)
    for a in range(n):
        for b in range(n):
            for c in rule(a, b):
                N[a, b, c] = 1
    return N


def make_fermion_layer() -> FusionCategory:
    """The supervector-space category {1, psi} with fermionic braiding."""
    N = _table_from_rule(2, lambda a, b: [a ^ b])
    return FusionCategory(
        name="fermion",
        labels=["1", "ψ"],
        dual=np.array([0, 1]),
        N=N,
        qdims=np.ones(2),
        spins=np.array([1.0, -1.0], dtype=complex),
        f_rule=lambda *args: 1.0,
        r_rule=lambda a, b, c: -1.0 if (a == 1 and b == 1) else 1.0,
        family="fermion",
    )


_QUARTER_TURNS = (1 + 0j, 1j, -1 + 0j, -1j)


def root_of_unity(num: int, den: int) -> complex:
    """exp(2 pi i num / den), exact whenever the angle is a multiple of pi/2."""
    num, den = int(num), int(den)
    if (4 * num) % den == 0:
        return _QUARTER_TURNS[(4 * num // den) % 4]
    return cmath.exp(2j * math.pi * (num % den) / den)


def make_u1k(k: int, lift: str = "raw") -> FusionCategory:
    """U(1)_k for even k: Z_k fusion with the (1/2)-twisted Abelian data.

    ``lift`` picks the integer representative of a label inside the phases:
    ``"raw"`` uses 0..k-1, ``"symmetric"`` uses (-k/2, k/2].  The two choices
    are gauge equivalent; the symmetric one keeps F = 1 for small charges of
    either sign, which is what the k -> infinity comparison needs.
    """
    if not isinstance(k, (int, np.integer)) or k < 2 or k % 2:
        raise ValueError(f"U(1)_k requires an even level k >= 2, got {k}")
    if lift not in ("raw", "symmetric"):
        raise ValueError(f"unknown lift {lift!r}")
    k = int(k)
    N = _table_from_rule(k, lambda a, b: [(a + b) % k])
    if lift == "raw":
        rep = lambda m: m
    else:
        rep = lambda m: m if m <= k // 2 else m - k

    def f_rule(a, b, c, d, e, f):
        bc = rep(b) + rep(c)
        return root_of_unity(rep(a) * (bc - rep(bc % k)), 2 * k)

    def r_rule(a, b, c):
        return root_of_unity(rep(a) * rep(b), 2 * k)

    names = ["s" if (k == 2 and m == 1) else str(m) for m in range(k)]
    return FusionCategory(
        name=f"u1:{k}",
        labels=names,
        dual=np.array([(-m) % k for m in range(k)]),
        N=N,
        qdims=np.ones(k),
        spins=np.array([root_of_unity(m * m, 2 * k) for m in range(k)]),
        f_rule=f_rule,
        r_rule=r_rule,
        family="u1",
        k=k,
    )


def _half(n: int) -> str:
    return str(n // 2) if n % 2 == 0 else f"{n}/2"


def make_su2k(k: int) -> FusionCategory:
    """SU(2)_k with Racah-formula F symbols; label index equals n = 2j."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"SU(2)_k requires a positive level, got {k}")
    k = int(k)
    qd = QDeformation(k)
    n_obj = k + 1
    N = _table_from_rule(n_obj, lambda a, b: [c for c in range(n_obj) if _su2_admissible(a, b, c, k)])

    def f_rule(n1, n2, n3, n4, n5, n6):
        sign = -1.0 if ((n1 + n2 + n3 + n4) // 2) % 2 else 1.0
        return sign * math.sqrt(qnumber(n5 + 1, qd) * qnumber(n6 + 1, qd)) * su2_6j(n1, n2, n5, n3, n4, n6, k)

    def r_rule(n1, n2, n3):
        sign = -1.0 if ((n3 - n1 - n2) // 2) % 2 else 1.0
        # q^{(1/2)(j3(j3+1) - ...)} with j(j+1) = n(n+2)/4
        expo = (n3 * (n3 + 2) - n1 * (n1 + 2) - n2 * (n2 + 2)) / 8.0
        return sign * cmath.exp(1j * qd.angle * expo)

    return FusionCategory(
        name=f"su2:{k}",
        labels=[_half(n) for n in range(n_obj)],
        dual=np.arange(n_obj),
        N=N,
        qdims=np.array([qnumber(n + 1, qd) for n in range(n_obj)]),
        spins=np.array([cmath.exp(2j * math.pi * n * (n + 2) / (4 * (k + 2))) for n in range(n_obj)]),
        f_rule=f_rule,
        r_rule=r_rule,
        family="su2",
        k=k,
    )


def deligne_product(A: FusionCategory, B: FusionCategory) -> FusionCategory:
    """Stack two models; object (a1, a2) has index a1 * rank(B) + a2."""
    nA, nB = A.rank, B.rank
    n = nA * nB

    def split(x):
        return divmod(x, nB)

    N = np.einsum("ace,bdf->abcdef", A.N, B.N).reshape(n, n, n)

    def f_rule(a, b, c, d, e, f):
        s = [split(x) for x in (a, b, c, d, e, f)]
        return A.f(*(p[0] for p in s)) * B.f(*(p[1] for p in s))

    def r_rule(a, b, c):
        s = [split(x) for x in (a, b, c)]
        return A.r(*(p[0] for p in s)) * B.r(*(p[1] for p in s))

    labels = [f"({la},{lb})" for la in A.labels for lb in B.labels]
    dual = np.array([A.dual[a] * nB + B.dual[b] for a in range(nA) for b in range(nB)])
    return FusionCategory(
        name=f"{A.name}*{B.name}",
        labels=labels,
        dual=dual,
        N=N.astype(np.int8),
        qdims=np.kron(A.qdims, B.qdims),
        spins=np.kron(A.spins, B.spins),
        f_rule=f_rule,
        r_rule=r_rule,
        family=f"{A.family}*{B.family}",
        k=A.k if A.k is not None else B.k,
        factors=(A, B),
    )


@lru_cache(maxsize=None)
def make_model(spec: str, with_fermion: bool = False, lift: str = "raw") -> FusionCategory:
    """Parse ``"u1:k"``, ``"su2:k"`` or ``"fermion"``; optionally stack the fermion layer.

    ``lift`` is forwarded to :func:`make_u1k` and ignored for other families.
    """
    spec = spec.strip().lower()
    if spec == "fermion":
        return make_fermion_layer()
    family, _, level = spec.partition(":")
    try:
        k = int(level)
    except ValueError:
        raise ValueError(f"cannot parse model string {spec!r}") from None
    if family == "u1":
        gauge = make_u1k(k, lift)
    elif family == "su2":
        gauge = make_su2k(k)
    else:
        raise ValueError(f"unknown model family {family!r}")
    return deligne_product(gauge, make_fermion_layer()) if with_fermion else gauge


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------

def topological_spin(m: FusionCategory, a, variant: str = "ribbon") -> complex:
    """theta_a from R symbols.

    ``variant="ribbon"`` uses sum_c (d_c/d_a) R^{aa}_c; ``variant="inverted"``
    uses the alternative weighting sum_c (d_a/d_c) R^{aa}_c, kept for comparison.
    """
    a = m.label(a)
    da = m.qdims[a]
    total = 0j
    for c in m.fuse(a, a):
        w = m.qdims[c] / da if variant == "ribbon" else da / m.qdims[c]
        total += w * m.r(a, a, c)
    return total


def modular_data(m: FusionCategory) -> ModularData:
    n = m.rank
    D = math.sqrt(float(np.sum(m.qdims ** 2)))
    th = m.spins
    S = np.zeros((n, n), dtype=complex)
    for a in range(n):
        abar = m.dual[a]
        for b in range(n):
            S[a, b] = sum(th[c] / (th[a] * th[b]) * m.qdims[c] for c in m.fuse(abar, b)) / D
    return ModularData(S=S, T=np.diag(th), D=D)


def verify_consistency(m: FusionCategory, pentagon: bool = True) -> ConsistencyReport:
    """Maximum residuals of pentagon, both hexagons, F unitarity and the qdim identity."""
    n = m.rank
    rep = ConsistencyReport()
    prods = m.products
    F = m.f
    R = m.r

    for a in range(n):
        for b in range(n):
            lhs = m.qdims[a] * m.qdims[b]
            rhs = sum(m.qdims[c] for c in prods[a][b])
            rep.qdim = max(rep.qdim, abs(lhs - rhs))
    for a in range(n):
        rep.spins = max(rep.spins, abs(topological_spin(m, a) - m.spins[a]))

    for a in range(n):
        for b in range(n):
            for c in range(n):
                ds = {d for e in prods[a][b] for d in prods[e][c]}
                for d in ds:
                    _, _, M = m.f_matrix(a, b, c, d)
                    if M.shape[0] != M.shape[1]:
                        rep.unitarity = max(rep.unitarity, 1.0)
                        continue
                    dev = np.max(np.abs(M @ M.conj().T - np.eye(M.shape[0])))
                    rep.unitarity = max(rep.unitarity, float(dev))

    # hexagons: R^{ca}_e [F^{acb}_d]_{eg} R^{cb}_g = sum_f [F^{cab}_d]_{ef} R^{cf}_d [F^{abc}_d]_{fg}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for e in prods[c][a]:
                    for g in prods[c][b]:
                        for d in prods[e][b]:
                            if not m.N[a, g, d]:
                                continue
                            lhs = R(c, a, e) * F(a, c, b, d, e, g) * R(c, b, g)
                            lhs_i = F(a, c, b, d, e, g) / (R(a, c, e) * R(b, c, g))
                            rhs = rhs_i = 0j
                            for f in prods[a][b]:
                                if m.N[c, f, d]:
                                    x = F(c, a, b, d, e, f) * F(a, b, c, d, f, g)
                                    rhs += x * R(c, f, d)
                                    rhs_i += x / R(f, c, d)
                            rep.hexagon = max(rep.hexagon, abs(lhs - rhs))
                            rep.hexagon_inverse = max(rep.hexagon_inverse, abs(lhs_i - rhs_i))

    if pentagon:
        # [F^{fcd}_e]_{gl}[F^{abl}_e]_{fk} = sum_h [F^{abc}_g]_{fh}[F^{ahd}_e]_{gk}[F^{bcd}_k]_{hl}
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for d in range(n):
                        for f in prods[a][b]:
                            for g in prods[f][c]:
                                for e in prods[g][d]:
                                    for l in prods[c][d]:
                                        if not m.N[f, l, e]:
                                            continue
                                        for kk in prods[b][l]:
                                            if not m.N[a, kk, e]:
                                                continue
                                            lhs = F(f, c, d, e, g, l) * F(a, b, l, e, f, kk)
                                            rhs = 0j
                                            for h in prods[b][c]:
                                                if m.N[a, h, g] and m.N[h, d, kk]:
                                                    rhs += F(a, b, c, g, f, h) * F(a, h, d, e, g, kk) * F(b, c, d, kk, h, l)
                                            rep.pentagon = max(rep.pentagon, abs(lhs - rhs))
    return rep
