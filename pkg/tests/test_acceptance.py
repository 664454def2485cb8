"""The nine acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict; the lines are repeated in
the pytest terminal summary.  Run this file directly to print only them.
"""

import cmath
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from anyonlgt.anyon_core import make_fermion_layer, make_model, make_su2k, make_u1k, topological_spin, verify_consistency
from anyonlgt.circuits import block_encoding_deviation, scaling_sweep, verify_circuit
from anyonlgt.fermion_encoding import SquareLatticeSpec, verify_car
from anyonlgt.fusion_surface import (
    assemble_hamiltonian,
    build_lattice,
    enumerate_basis,
    global_parity_operator,
    make_instance,
    pauli_decompose_edge_hopping,
    plaquette_operator,
    projector_identity_check,
)
from anyonlgt.fusion_surface import kinetic_block, reconstruct_from_paulis
from anyonlgt.spectra import convergence_su2, convergence_u1
from conftest import record
from oracles import qint


def _worst(rep):
    return max(rep.pentagon, rep.hexagon, rep.hexagon_inverse, rep.unitarity)


def test_criterion_1_category_consistency():
    specs = ["fermion"] + [f"u1:{k}" for k in (2, 4, 6, 8)] + [f"su2:{k}" for k in (2, 3, 4)]
    worst = {s: _worst(verify_consistency(make_model(s))) for s in specs}
    # stacked models behind the lattice Hamiltonians
    for s in ("u1:2", "u1:4", "su2:2"):
        worst[s + "+fermion"] = _worst(verify_consistency(make_model(s, True)))
    top = max(worst.values())
    ok = top < 1e-9
    record(1, ok, f"max pentagon/hexagon/unitarity residual {top:.2e} over {len(worst)} models")
    assert ok


def test_criterion_2_closed_forms():
    f, u = make_fermion_layer(), make_u1k(2)
    prod = make_model("u1:2", True)
    checks = {
        "R^psipsi": abs(f.r(1, 1, 0) - (-1)),
        "R^ss": abs(u.r(1, 1, 0) - 1j),
        "theta_(s,psi)": abs(topological_spin(prod, prod.label("(s,ψ)")) - (-1j)),
        "F^sss": abs(u.f(1, 1, 1, 1, 0, 0) - (-1)),
    }
    for k in (2, 3, 4):
        m = make_su2k(k)
        for n in range(k + 1):
            j = n / 2
            checks[f"su2_{k} spin {j}"] = abs(m.spins[n] - cmath.exp(2j * math.pi * j * (j + 1) / (k + 2)))
            checks[f"su2_{k} dim {j}"] = abs(m.qdims[n] - qint(n + 1, k))
    top = max(checks.values())
    ok = top < 1e-10
    record(2, ok, f"max deviation {top:.2e} over {len(checks)} closed forms")
    assert ok


def test_criterion_3_fermion_car():
    lattices = [(Lx, Ly, per) for Lx in (2, 3) for Ly in (1, 2, 3) for per in (True, False)]
    res = {}
    for Lx, Ly, per in lattices:
        rep = verify_car(SquareLatticeSpec(Lx, Ly, per))
        res[(Lx, Ly, per)] = max(rep["residual"], rep["loop_commutation_residual"])
    top = max(res.values())
    ok = top == 0
    record(3, ok, f"CAR and loop-commutation residual {top} on {len(res)} lattices up to 3x3")
    assert ok


def test_criterion_4_hamiltonian_structure():
    lat = build_lattice(1, 1)
    herm = comm = unit = proj = 0.0
    for spec in ("u1:2", "u1:4", "su2:2"):
        model = make_instance(spec)
        basis = enumerate_basis(lat, model)
        H = assemble_hamiltonian(basis, model).to_dense()
        P = global_parity_operator(basis).to_dense()
        herm = max(herm, float(np.abs(H - H.conj().T).max()))
        comm = max(comm, float(np.abs(H @ P - P @ H).max()))
        if model.family == "u1":
            T = plaquette_operator(basis, model, 0).to_dense()
            unit = max(unit, float(np.abs(T @ T.conj().T - np.eye(basis.dim)).max()))
        proj = max(proj, projector_identity_check(model))
    ok = herm < 1e-12 and comm == 0 and unit < 1e-12 and proj < 1e-10
    record(4, ok, f"hermiticity {herm:.1e}, parity commutator {comm:.1e}, "
                  f"T T^dag - 1 {unit:.1e}, S projector {proj:.1e}")
    assert ok


def test_criterion_5_lcu():
    worst_recon, worst_block, n_terms, min_coeff = 0.0, 0.0, 0, np.inf
    for k in (2, 3, 4):
        model = make_instance(f"su2:{k}")
        terms = pauli_decompose_edge_hopping(model)
        n_terms = max(n_terms, len(terms))
        min_coeff = min(min_coeff, min(a for a, _ in terms))
        worst_recon = max(worst_recon, float(np.abs(reconstruct_from_paulis(terms) - kinetic_block(model)).max()))
        worst_block = max(worst_block, block_encoding_deviation(k))
    ok = n_terms <= 32 and min_coeff >= 0 and worst_recon < 1e-10 and worst_block < 1e-8
    record(5, ok, f"{n_terms} Pauli terms, min coefficient {min_coeff:.3g}, "
                  f"reconstruction {worst_recon:.1e}, block encoding {worst_block:.1e}")
    assert ok


def test_criterion_6_circuit_equivalence():
    cases = [("u1_2", 2, 0.0)] + [("u1_k", k, 1e-10) for k in (2, 4, 8)] + [("su2_k", k, 1e-8) for k in (2, 3)]
    fails, worst_fid, worst = [], 1.0, 0.0
    for kind, k, tol in cases:
        for sym in ("f", "r"):
            rep = verify_circuit(kind, k, sym)
            good = rep.deviation == 0 if tol == 0 else rep.deviation < tol
            if sym == "r":
                worst_fid = min(worst_fid, rep.min_fidelity)
                good = good and rep.min_fidelity > 1 - 1e-10
            worst = max(worst, rep.deviation)
            if not good:
                fails.append(f"{kind} k={k} {sym}")
    ok = not fails
    record(6, ok, f"max deviation {worst:.1e}, min gradient fidelity 1-{1 - worst_fid:.1e}"
                  + (f", failing: {fails}" if fails else ""))
    assert ok


def test_criterion_7_scaling():
    u1 = scaling_sweep("u1_k", "f", [4, 8, 16, 32, 64], "toffoli")
    su2 = scaling_sweep("su2_k", "f", [2, 3, 4, 5], "qrom_entries")
    ok = u1.consistent_with_log() and 2.5 <= su2.loglog_slope <= 3.5
    record(7, ok, f"u1_k Toffoli {u1.values} fits {u1.log_coeff:.3g} log2 k + {u1.log_offset:.3g} "
                  f"(R^2 {u1.log_r2:.4f}); su2_k QROM {su2.values} exponent {su2.loglog_slope:.3f}")
    assert ok


def test_criterion_8_convergence_trends():
    u1 = convergence_u1((1, 1), (8, 16, 32))
    su2 = convergence_su2((8, 16, 32))
    ok = (u1.verdicts["total"] and u1.verdicts["casimir"] and u1.verdicts["hopping_phase"]
          and su2.verdicts["sixj"] and su2.verdicts["casimir"])
    record(8, ok, "U(1) deviation " + ", ".join(f"{x:.3g}" for x in u1.deviations["total"])
                  + "; 6j deviation " + ", ".join(f"{x:.3g}" for x in su2.deviations["sixj"]))
    assert ok


@pytest.mark.xfail(strict=True, reason="the pair summand carries R = q^(-3/4), not 1")
def test_criterion_8_su2_plaquette_r_is_one():
    rep = convergence_su2((8, 16, 32))
    ok = rep.verdicts["plaquette_R_exactly_one"]
    pair = rep.deviations["plaquette_R_pair_case"]
    record(8, ok, "SU(2) plaquette R = 1 for both summands; pair-summand |R - 1| = "
                  + ", ".join(f"{x:.3g}" for x in pair))
    assert ok


def _report_bytes(threads: str, tmp) -> list:
    env = dict(os.environ, ANYONLGT_THREADS=threads)
    prefix = "h"
    cmds = [
        ["hamiltonian", "--model", "su2:2", "--lx", "2", "--ly", "1", "--gk", "0.7", "--out", prefix],
        ["ed", "--in", prefix + ".mtx", "--m", "4", "--method", "iterative", "--seed", "7"],
        ["ed", "--in", prefix + ".mtx", "--m", "4", "--method", "dense"],
        ["converge", "--model", "su2"],
        ["circuit", "--model", "su2:3", "--symbol", "r", "--verify", "--resources"],
        ["resources", "--model", "u1"],
    ]
    out = []
    for cmd in cmds:
        proc = subprocess.run([sys.executable, "-m", "anyonlgt", *cmd], env=env, cwd=tmp,
                              capture_output=True, check=True)
        out.append(proc.stdout)
    for ext in (".mtx", ".basis.json"):
        with open(os.path.join(tmp, prefix + ext), "rb") as fh:
            out.append(fh.read())
    return out


def test_criterion_9_determinism(tmp_path):
    runs = []
    for i, t in enumerate(("1", "4", "1")):
        d = tmp_path / f"run{i}"
        d.mkdir()
        runs.append(_report_bytes(t, str(d)))
    ok = runs[0] == runs[1] == runs[2]
    record(9, ok, f"{len(runs[0])} reports byte-identical across repeated runs with 1 and 4 threads")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
