import itertools

import numpy as np
import pytest

from anyonlgt.fusion_surface import (
    BasisCapExceeded,
    assemble_hamiltonian,
    build_lattice,
    electric_operator,
    enumerate_basis,
    global_parity_operator,
    kinetic_block,
    kinetic_prefactor_table,
    make_instance,
    parity_operator,
    pauli_decompose_edge_hopping,
    plaquette_operator,
    projector_identity_check,
)
from anyonlgt.fusion_surface import reconstruct_from_paulis, su2_allowed_transitions
from oracles import qint


def _fuses(family, k, p, q, r):
    """Fusion rule of the stacked model on labels 2*g + f."""
    (g1, f1), (g2, f2), (g3, f3) = divmod(p, 2), divmod(q, 2), divmod(r, 2)
    if f1 ^ f2 != f3:
        return False
    if family == "u1":
        return (g1 + g2 - g3) % k == 0
    return abs(g1 - g2) <= g3 <= g1 + g2 and (g1 + g2 + g3) % 2 == 0 and g1 + g2 + g3 <= 2 * k


def _brute_basis(spec, Lx, Ly):
    family, k = spec.split(":")[0], int(spec.split(":")[1])
    lat = build_lattice(Lx, Ly)
    rank = 2 * (k if family == "u1" else k + 1)
    choices = [(0, 3) if e.dangling else range(rank) for e in lat.edges]
    out = set()
    for st in itertools.product(*choices):
        if all(_fuses(family, k, st[p], st[q], st[r]) for p, q, r in lat.vertex_constraints):
            if family == "su2":
                occ = [(0,) if st[lat.edge("D", s)] == 3 else (0, 1) for s in range(lat.n_sites)]
                out.update(st + bits for bits in itertools.product(*occ))
            else:
                out.add(st)
    return out


@pytest.mark.parametrize("spec,L", [("u1:2", (1, 1)), ("u1:4", (1, 1)), ("su2:2", (1, 1)), ("u1:2", (2, 1))])
def test_basis_matches_brute_force(spec, L):
    basis = enumerate_basis(build_lattice(*L), make_instance(spec))
    got = {basis.state(i) for i in range(basis.dim)}
    assert got == _brute_basis(spec, *L)
    assert basis.dim == len(got)


def test_one_by_one_lattice_shape():
    assert build_lattice(1, 1).summary() == {
        "Lx": 1, "Ly": 1, "sites": 1, "plaquettes": 1, "edges": 4, "dangling": 1, "vertices": 3,
    }
    with pytest.raises(ValueError):
        build_lattice(0, 2)
    with pytest.raises(ValueError):
        build_lattice(1, 1).hop_walk(0, "x")


@pytest.mark.parametrize("spec", ["u1:2", "u1:4", "su2:2"])
@pytest.mark.parametrize("L", [(1, 1), (2, 1)])
def test_hamiltonian_hermitian_and_parity_conserving(spec, L):
    model = make_instance(spec, gm=0.7, gk=1.3, g=0.9, a=1.1)
    basis = enumerate_basis(build_lattice(*L), model)
    H = assemble_hamiltonian(basis, model).to_dense()
    assert np.abs(H - H.conj().T).max() < 1e-12
    P = global_parity_operator(basis).to_dense()
    assert np.abs(H @ P - P @ H).max() < 1e-12
    if L == (1, 1):
        Ps = parity_operator(basis, 0).to_dense()
        assert np.abs(H @ Ps - Ps @ H).max() < 1e-12


@pytest.mark.parametrize("spec", ["u1:2", "u1:4"])
def test_abelian_plaquette_is_unitary(spec):
    model = make_instance(spec)
    basis = enumerate_basis(build_lattice(2, 1), model)
    for p in range(basis.lattice.n_plaquettes):
        T = plaquette_operator(basis, model, p).to_dense()
        assert np.abs(T @ T.conj().T - np.eye(basis.dim)).max() < 1e-12


@pytest.mark.parametrize("spec", ["u1:2", "u1:4", "su2:2", "su2:3"])
def test_s_matrix_projector_identity(spec):
    assert projector_identity_check(make_instance(spec)) < 1e-10


def test_su2_electric_values():
    k = 2
    model = make_instance(f"su2:{k}")
    basis = enumerate_basis(build_lattice(1, 1), model)
    e = basis.lattice.edge("X", 0)
    diag = np.diag(electric_operator(basis, model, e).to_dense()).real
    for i in range(basis.dim):
        n = basis.state(i)[e] // 2
        assert abs(diag[i] - qint(n * (n + 2) / 4.0, k)) < 1e-12
    with pytest.raises(ValueError):
        electric_operator(basis, model, basis.lattice.edge("D", 0))


def test_symmetric_charge_folds_electric_energy():
    m = make_instance("u1:8", symmetric_charge=True)
    for a in range(1, 8):
        assert m.epsilon(a) == m.epsilon(8 - a)


def test_su2_transition_table():
    # a fermion moves across the link; (1,1) may go either way
    assert sorted(su2_allowed_transitions()) == sorted([
        ((0, 1), (1, 0)), ((1, 0), (0, 1)),
        ((0, 2), (1, 1)), ((1, 1), (0, 2)), ((1, 1), (2, 0)), ((2, 0), (1, 1)),
        ((1, 2), (2, 1)), ((2, 1), (1, 2)),
    ])


def test_kinetic_block_pauli_expansion():
    model = make_instance("su2:2")
    K = kinetic_block(model)
    assert np.array_equal(K, K.conj().T)
    assert np.count_nonzero(K) == 8
    terms = pauli_decompose_edge_hopping(model)
    assert len(terms) <= 32
    assert all(a > 0 for a, _ in terms)
    assert np.abs(reconstruct_from_paulis(terms) - K).max() < 1e-12
    with pytest.raises(ValueError):
        kinetic_block(make_instance("u1:4"))


def test_prefactor_table_is_consistent():
    t = kinetic_prefactor_table(make_instance("su2:1"))
    assert t["spectator_spread"] == 0.0
    assert t["rank1_residual"] < 1e-12
    assert t["max_entries_per_row"] >= 1
    assert len(t["prefactors"]) == len(t["columns"])


def test_basis_cap():
    with pytest.raises(BasisCapExceeded):
        enumerate_basis(build_lattice(2, 1), make_instance("u1:4"), cap=10)


def test_manifest_lists_every_state():
    basis = enumerate_basis(build_lattice(1, 1), make_instance("su2:1"))
    man = basis.manifest()
    assert len(man["states"]) == basis.dim
    assert man["slots"][-1] == "occ0"


def test_model_errors():
    with pytest.raises(ValueError):
        make_instance("fermion")
