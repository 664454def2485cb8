import cmath
import itertools
import math

import numpy as np
import pytest

from anyonlgt.anyon_core import (
    InadmissibleError,
    QDeformation,
    make_fermion_layer,
    make_model,
    make_su2k,
    make_u1k,
    modular_data,
    qnumber,
    root_of_unity,
    su2_6j,
    topological_spin,
    verify_consistency,
)
from oracles import classical_6j, qint, u1_f, u1_r


@pytest.mark.parametrize("spec", ["fermion", "u1:2", "u1:4", "u1:6", "su2:1", "su2:2", "su2:3"])
def test_consistency_small(spec):
    assert verify_consistency(make_model(spec)).max_residual < 1e-9


def test_fermion_layer_closed_forms():
    f = make_fermion_layer()
    assert f.labels == ["1", "ψ"]
    assert f.r(1, 1, 0) == -1
    assert f.fuse(1, 1) == (0,)


@pytest.mark.parametrize("k", [2, 4, 6, 8])
def test_u1_symbols_match_closed_form(k):
    m = make_u1k(k)
    for a, b, c in itertools.product(range(k), repeat=3):
        e, f = (a + b) % k, (b + c) % k
        d = (e + c) % k
        assert abs(m.f(a, b, c, d, e, f) - u1_f(k, a, b, c)) < 1e-13
        assert abs(m.r(a, b, e) - u1_r(k, a, b)) < 1e-13


def test_u1_symmetric_lift_is_gauge_equivalent():
    raw, sym = make_u1k(8), make_u1k(8, "symmetric")
    assert verify_consistency(sym).max_residual < 1e-9
    # gauge-invariant data agree
    assert np.allclose(raw.spins, sym.spins)
    assert np.allclose(modular_data(raw).S, modular_data(sym).S)
    # small charges of either sign have trivial F in the symmetric lift
    assert abs(sym.f(1, 7, 1, 1, 0, 0) - 1) < 1e-14


def test_u1_rejects_odd_level():
    with pytest.raises(ValueError):
        make_u1k(3)
    with pytest.raises(ValueError):
        make_u1k(4, lift="other")


def test_quarter_turn_phases_are_exact():
    assert root_of_unity(1, 4) == 1j
    assert root_of_unity(-1, 4) == -1j
    assert root_of_unity(3, 6) == -1
    assert abs(root_of_unity(1, 8) - cmath.exp(1j * math.pi / 4)) < 1e-15


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_su2_dims_and_spins(k):
    m = make_su2k(k)
    for n in range(k + 1):
        assert abs(m.qdims[n] - qint(n + 1, k)) < 1e-12
        j = n / 2
        assert abs(m.spins[n] - cmath.exp(2j * math.pi * j * (j + 1) / (k + 2))) < 1e-12


def test_su2_6j_reduces_to_wigner_at_q1():
    worst = 0.0
    for ns in itertools.product(range(4), repeat=6):
        n1, n2, n5, n3, n4, n6 = ns
        ref = classical_6j(n1 / 2, n2 / 2, n5 / 2, n3 / 2, n4 / 2, n6 / 2)
        try:
            val = su2_6j(n1, n2, n5, n3, n4, n6)
        except InadmissibleError:
            val = 0.0
        worst = max(worst, abs(val - ref))
    assert worst < 1e-12


def test_su2_6j_inadmissible_raises():
    with pytest.raises(InadmissibleError):
        su2_6j(1, 1, 1, 1, 1, 1)


def test_qnumber_limits():
    assert qnumber(3) == 3
    assert abs(qnumber(2, QDeformation(2)) - math.sqrt(2)) < 1e-14
    assert abs(qnumber(4, QDeformation(2))) < 1e-14


def test_ribbon_spin_matches_spin_table():
    m = make_su2k(2)
    ribbon = topological_spin(m, 1)
    assert abs(ribbon - m.spins[1]) < 1e-12


def test_product_model_labels_and_spin():
    m = make_model("u1:2", True)
    assert m.labels == ["(0,1)", "(0,ψ)", "(s,1)", "(s,ψ)"]
    assert abs(topological_spin(m, m.label("(s,ψ)")) - (-1j)) < 1e-12
    assert verify_consistency(m).max_residual < 1e-9


def test_model_string_errors():
    with pytest.raises(ValueError):
        make_model("so3:2")
    with pytest.raises(ValueError):
        make_model("u1:x")


def test_modular_s_is_unitary():
    for spec in ("u1:4", "su2:3"):
        S = modular_data(make_model(spec)).S
        assert np.allclose(S @ S.conj().T, np.eye(S.shape[0]), atol=1e-12)
