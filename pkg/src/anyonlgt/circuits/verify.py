"""Exhaustive circuit-versus-symbol checks on every admissible encoded input."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..anyon_core import make_model
from .ir import Circuit
from .simulator import (
    basis_index,
    phase_gradient_state,
    read,
    run_sparse,
    with_register_state,
)
from .synth import family, su2_f_addresses, su2_f_row, synth_f, synth_r

FIDELITY_FLOOR = 1.0 - 1e-10


class CatalysisError(AssertionError):
    """The phase-gradient register did not come back to its initial state."""


@dataclass
class VerifyReport:
    model_kind: str
    k: int
    symbol: str
    deviation: float
    inputs: int
    min_fidelity: float = 1.0
    max_norm_error: float = 0.0
    branch_weights: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "k": self.k,
            "symbol": self.symbol,
            "deviation": self.deviation,
            "inputs": self.inputs,
            "min_fidelity": self.min_fidelity,
            "max_norm_error": self.max_norm_error,
        }


def _lab(cat_fermion_rank: int, g: int, f: int) -> int:
    return g * cat_fermion_rank + f


def _diff(out: dict, expected: dict) -> float:
    keys = set(out) | set(expected)
    return max((abs(out.get(i, 0j) - expected.get(i, 0j)) for i in keys), default=0.0)


def _norm_error(out: dict) -> float:
    return abs(sum(abs(a) ** 2 for a in out.values()) - 1.0)


def _gradient_fidelity(circ: Circuit, out: dict) -> float:
    """<Phi| rho_grad |Phi> for the reduced state of the gradient register."""
    reg = circ["grad"]
    phi = phase_gradient_state(circ.meta["gradient_order"])
    rest: dict = {}
    for idx, amp in out.items():
        g = read(idx, reg.qubits)
        key = idx & ~sum(1 << q for q in reg.qubits)
        rest[key] = rest.get(key, 0j) + np.conj(phi[g]) * amp
    return float(sum(abs(v) ** 2 for v in rest.values()))


def _f_inputs(model_kind: str, k: int):
    """(register values, expected output terms) for every admissible F-move input."""
    full = make_model(f"{family(model_kind)}:{k}", True)
    if model_kind == "su2_k":
        b = _lab(2, 1, 1)
        for n1, n3, n4, n5 in su2_f_addresses(k):
            f0, f1 = su2_f_row(k, n1, n3, n4, n5)
            s = n5 - n1
            for fa in (0, 1):
                for fc in (0, 1):
                    fe, fd = fa ^ 1, fa ^ 1 ^ fc
                    ff = 1 ^ fc
                    vals = dict(a=n1, a_f=fa, c=n3, c_f=fc, d=n4, d_f=fd, m=n5, m_f=fe, branch=0)
                    terms = []
                    for br, amp, n6 in ((0, f0, n3 + s), (1, f1, n3 - s)):
                        if amp == 0:
                            continue
                        # cross-check the layer product against the stacked model
                        full_amp = full.f(_lab(2, n1, fa), b, _lab(2, n3, fc), _lab(2, n4, fd),
                                          _lab(2, n5, fe), _lab(2, n6, ff))
                        terms.append((dict(vals, m=n6, m_f=ff, branch=br), complex(full_amp)))
                    yield vals, terms
        return
    for a in range(k):
        for b in range(k):
            for c in range(k):
                e, f = (a + b) % k, (b + c) % k
                d = (e + c) % k
                for fa in (0, 1):
                    for fb in (0, 1):
                        for fc in (0, 1):
                            fe, ff = fa ^ fb, fb ^ fc
                            fd = fe ^ fc
                            amp = full.f(_lab(2, a, fa), _lab(2, b, fb), _lab(2, c, fc),
                                         _lab(2, d, fd), _lab(2, e, fe), _lab(2, f, ff))
                            vals = dict(a=a, a_f=fa, b=b, b_f=fb, c=c, c_f=fc, d=d, d_f=fd, m=e, m_f=fe)
                            yield vals, [(dict(vals, m=f, m_f=ff), complex(amp))]


def _r_inputs(model_kind: str, k: int):
    full = make_model(f"{family(model_kind)}:{k}", True)
    N = full.N
    for a in range(full.rank):
        for b in range(full.rank):
            for c in range(full.rank):
                if not N[a, b, c]:
                    continue
                vals = dict(a=a // 2, a_f=a % 2, b=b // 2, b_f=b % 2, c=c // 2, c_f=c % 2)
                yield vals, complex(full.r(a, b, c))


def verify_circuit(model_kind: str, k: int, symbol: str = "f", circuit: Circuit | None = None) -> VerifyReport:
    """Simulate every admissible input and return the worst amplitude deviation.

    Raises :class:`CatalysisError` if an R circuit leaves its phase-gradient
    register with fidelity at or below ``1 - 1e-10``.
    """
    if symbol not in ("f", "r"):
        raise ValueError("symbol must be 'f' or 'r'")
    circ = circuit or (synth_f(model_kind, k) if symbol == "f" else synth_r(model_kind, k))
    rep = VerifyReport(model_kind, k, symbol, 0.0, 0)
    if symbol == "f":
        weights = [0.0, 0.0]
        for vals, terms in _f_inputs(model_kind, k):
            out = run_sparse(circ, {basis_index(circ, vals): 1 + 0j})
            expected = {}
            for tv, amp in terms:
                key = basis_index(circ, tv)
                expected[key] = expected.get(key, 0j) + amp
                if model_kind == "su2_k":
                    weights[tv["branch"]] += abs(amp) ** 2
            rep.deviation = max(rep.deviation, _diff(out, expected))
            rep.max_norm_error = max(rep.max_norm_error, _norm_error(out))
            rep.inputs += 1
        if model_kind == "su2_k":
            total = sum(weights)
            rep.branch_weights = [w / total for w in weights]
        return rep

    phi = phase_gradient_state(circ.meta["gradient_order"]) if "grad" in circ.registers else None
    for vals, amp in _r_inputs(model_kind, k):
        start = {basis_index(circ, vals): 1 + 0j}
        if phi is not None:
            start = with_register_state(circ, start, "grad", phi)
        out = run_sparse(circ, start)
        expected = {i: amp * v for i, v in start.items()}
        rep.deviation = max(rep.deviation, _diff(out, expected))
        rep.max_norm_error = max(rep.max_norm_error, _norm_error(out))
        if phi is not None:
            fid = _gradient_fidelity(circ, out)
            rep.min_fidelity = min(rep.min_fidelity, fid)
        rep.inputs += 1
    if rep.min_fidelity <= FIDELITY_FLOOR:
        raise CatalysisError(f"phase-gradient fidelity {rep.min_fidelity} below {FIDELITY_FLOOR}")
    return rep
