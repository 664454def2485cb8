import math

import numpy as np
import pytest
import scipy.sparse as sp

from anyonlgt.fusion_surface import assemble_hamiltonian, build_lattice, enumerate_basis, make_instance
from anyonlgt.sparse import SparseOperator
from anyonlgt.spectra import (
    ConvergenceReport,
    NonConvergenceError,
    convergence_su2,
    convergence_u1,
    diagonalize,
    ks_u1_oracle,
)


def _random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2


def test_iterative_matches_dense_on_random_matrix():
    H = _random_hermitian(300, 1)
    ref = np.linalg.eigvalsh(H)[:5]
    res = diagonalize(H, 5, "iterative")
    assert np.allclose(res.eigenvalues, ref, atol=1e-9)
    assert res.residual < 1e-8


def test_iterative_handles_degenerate_lattice_spectrum():
    model = make_instance("su2:2")
    basis = enumerate_basis(build_lattice(2, 1), model)
    H = assemble_hamiltonian(basis, model)
    dense = diagonalize(H, 6, "dense")
    it = diagonalize(H, 6, "iterative")
    assert np.allclose(dense.eigenvalues, it.eigenvalues, atol=1e-9)
    assert dense.ground_energy == dense.eigenvalues[0]


def test_iterative_is_seeded():
    H = SparseOperator.from_scipy(sp.csr_matrix(_random_hermitian(200, 2)), hermitian=True)
    a = diagonalize(H, 3, "iterative", seed=5)
    b = diagonalize(H, 3, "iterative", seed=5)
    assert a.eigenvalues == b.eigenvalues


def test_auto_method_and_clamped_m():
    res = diagonalize(np.diag([3.0, 1.0, 2.0]), m=10)
    assert res.method == "dense"
    assert res.eigenvalues == [1.0, 2.0, 3.0]


def test_diagonalize_validation():
    with pytest.raises(ValueError):
        diagonalize(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        diagonalize(np.eye(2), method="magic")
    with pytest.raises(NonConvergenceError):
        diagonalize(_random_hermitian(400, 3), 4, "iterative", max_krylov=5)


def test_ks_oracle_terms_are_hermitian():
    oracle = ks_u1_oracle(build_lattice(1, 1), 2)
    for M in oracle.terms.values():
        assert np.abs(M - M.conj().T).max() < 1e-12


def test_u1_convergence_decreases():
    rep = convergence_u1((1, 1), (8, 16, 32))
    assert rep.details["window"] == 2
    for name in ("total", "hopping_phase", "casimir"):
        d = rep.deviations[name]
        assert d[0] > d[1] > d[2]
        assert rep.verdicts[name]
    # the fermion and flux pieces coincide exactly inside the window
    assert rep.deviations["mass"] == [0.0, 0.0, 0.0]


def test_u1_convergence_validation():
    with pytest.raises(ValueError):
        convergence_u1((1, 1), (8, 7))
    with pytest.raises(ValueError):
        convergence_u1((1, 1), (4, 8), window=0)


def test_su2_pair_crossing_factor_closed_form():
    ks = (8, 16, 32)
    rep = convergence_su2(ks)
    # R for the pair summand is a q^(-3/4) phase, q = exp(2 pi i/(k+2))
    for k, d in zip(ks, rep.deviations["plaquette_R_pair_case"]):
        assert abs(d - 2 * math.sin(3 * math.pi / (4 * (k + 2)))) < 1e-12
    assert rep.deviations["plaquette_R_vacuum_case"] == [0.0, 0.0, 0.0]
    assert rep.verdicts["sixj"] and rep.verdicts["casimir"]
    assert rep.verdicts["plaquette_R_exactly_one"] is False


def test_convergence_report_rejects_unsorted_k():
    with pytest.raises(ValueError):
        ConvergenceReport("u1", [16, 8], {}, {})
    with pytest.raises(ValueError):
        convergence_su2((8, 64))
