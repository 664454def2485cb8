import itertools

import numpy as np
import pytest

from anyonlgt.fermion_encoding import (
    BILINEAR_KINDS,
    PauliString,
    SquareLatticeSpec,
    edge_hopping_operator,
    majorana_bilinear,
    one_form_loop,
    plaquette_cycles,
    vertex_loop,
    vertex_parity_operator,
    verify_car,
)

LATTICES = [(2, 1, True), (2, 2, True), (3, 2, True), (3, 3, True), (3, 2, False)]


def _majoranas(spec, e):
    """Majorana content of O_e = -i gbar_{e0} g_{e1}: gbar tagged 1, g tagged 0."""
    v0, v1, _ = spec.edges[e]
    return {(v0, 1), (v1, 0)}


@pytest.mark.parametrize("lx,ly,periodic", LATTICES)
def test_car_residual_is_exactly_zero(lx, ly, periodic):
    rep = verify_car(SquareLatticeSpec(lx, ly, periodic))
    assert rep["residual"] == 0
    assert rep["commutation_residual"] == 0
    assert rep["loop_commutation_residual"] == 0


@pytest.mark.parametrize("lx,ly,periodic", LATTICES)
def test_hopping_commutation_follows_shared_majoranas(lx, ly, periodic):
    spec = SquareLatticeSpec(lx, ly, periodic)
    for e, f in itertools.combinations(range(spec.n_edges), 2):
        shared = len(_majoranas(spec, e) & _majoranas(spec, f))
        # two distinct Majorana bilinears anticommute iff they share one Majorana
        expected = shared != 1
        assert edge_hopping_operator(spec, e).commutes(edge_hopping_operator(spec, f)) == expected, (e, f)


@pytest.mark.parametrize("lx,ly,periodic", LATTICES)
def test_parity_anticommutes_with_hops_at_one_endpoint(lx, ly, periodic):
    spec = SquareLatticeSpec(lx, ly, periodic)
    for e in range(spec.n_edges):
        v0, v1, _ = spec.edges[e]
        O = edge_hopping_operator(spec, e)
        for v in range(spec.n_vertices):
            ends = (v == v0) + (v == v1)
            assert O.commutes(vertex_parity_operator(spec, v)) == (ends % 2 == 0)


def test_bilinears_are_hermitian_involutions():
    spec = SquareLatticeSpec(2, 2)
    for e in range(spec.n_edges):
        for kind in BILINEAR_KINDS:
            B = majorana_bilinear(spec, kind, e)
            M = B.to_matrix()
            assert np.array_equal(M, M.conj().T)
            assert np.array_equal(M @ M, np.eye(M.shape[0]))


def test_ascii_kind_aliases():
    spec = SquareLatticeSpec(2, 2)
    assert majorana_bilinear(spec, "gg", 0) == majorana_bilinear(spec, "γγ", 0)
    with pytest.raises(ValueError):
        majorana_bilinear(spec, "xx", 0)


def test_plaquette_loops_commute_with_everything():
    spec = SquareLatticeSpec(3, 3)
    gens = [edge_hopping_operator(spec, e) for e in range(spec.n_edges)]
    gens += [vertex_parity_operator(spec, v) for v in range(spec.n_vertices)]
    for cyc in plaquette_cycles(spec):
        L = one_form_loop(spec, cyc)
        assert all(L.commutes(g) for g in gens)
        assert (L * L).x == 0 and (L * L).z == 0 and (L * L).phase == 0


def test_vertex_loop_is_identity():
    spec = SquareLatticeSpec(2, 2)
    L = vertex_loop(spec, 0)
    assert L.x == 0 and L.z == 0 and L.phase == 0


def test_pauli_product_matches_matrices():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = PauliString(3, int(rng.integers(8)), int(rng.integers(8)), int(rng.integers(4)))
        b = PauliString(3, int(rng.integers(8)), int(rng.integers(8)), int(rng.integers(4)))
        assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix())
        assert np.allclose(a.dagger().to_matrix(), a.to_matrix().conj().T)


def test_errors():
    with pytest.raises(ValueError):
        SquareLatticeSpec(1, 1)
    spec = SquareLatticeSpec(2, 2)
    with pytest.raises(ValueError):
        edge_hopping_operator(spec, spec.n_edges)
    with pytest.raises(ValueError):
        one_form_loop(spec, [0])
