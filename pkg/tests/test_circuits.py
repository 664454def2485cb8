import itertools
import math

import numpy as np
import pytest

from anyonlgt.circuits import (
    MAX_QUBITS,
    Circuit,
    QubitBudgetError,
    block_encoding_deviation,
    expand_adders,
    fit_scaling,
    kickback_phase,
    lcu_block_encoding_su2_hopping,
    phase_gradient_state,
    resources,
    ripple_add,
    run_sparse,
    scaling_sweep,
    simulate,
    synth_f,
    synth_r,
    verify_circuit,
)
from anyonlgt.circuits.simulator import basis_index, read
from oracles import u1_f, u1_r

VERIFY_CASES = [("u1_2", 2), ("u1_k", 2), ("u1_k", 4), ("u1_k", 8), ("su2_k", 2), ("su2_k", 3)]


@pytest.mark.parametrize("model_kind,k", VERIFY_CASES)
@pytest.mark.parametrize("symbol", ["f", "r"])
def test_verify_circuit_matches_symbols(model_kind, k, symbol):
    rep = verify_circuit(model_kind, k, symbol)
    tol = 1e-10 if model_kind.startswith("u1") else 1e-8
    assert rep.deviation < tol
    assert rep.min_fidelity > 1 - 1e-10
    assert rep.max_norm_error < 1e-12
    assert rep.inputs > 0


def test_u1_2_is_exact():
    assert verify_circuit("u1_2", 2, "f").deviation == 0.0
    assert verify_circuit("u1_2", 2, "r").deviation == 0.0


@pytest.mark.parametrize("k", [4, 6])
def test_u1_f_circuit_against_closed_form(k):
    circ = synth_f("u1_k", k)
    for a, b, c in itertools.product(range(k), repeat=3):
        fa, fb, fc = a % 2, b % 2, (a + c) % 2
        vals = {"a": a, "b": b, "c": c, "d": (a + b + c) % k, "m": (a + b) % k,
                "a_f": fa, "b_f": fb, "c_f": fc, "d_f": fa ^ fb ^ fc, "m_f": fa ^ fb}
        out = run_sparse(circ, {basis_index(circ, vals): 1 + 0j}, prune=1e-14)
        assert len(out) == 1
        (idx, amp), = out.items()
        assert read(idx, circ["m"].qubits) == (b + c) % k
        assert read(idx, circ["m_f"].qubits) == fb ^ fc
        assert abs(amp - u1_f(k, a, b, c)) < 1e-12


def test_u1_2_braid_against_closed_form():
    circ = synth_r("u1_2", 2)
    for a, b, fa, fb in itertools.product(range(2), repeat=4):
        vals = {"a": a, "b": b, "c": (a + b) % 2, "a_f": fa, "b_f": fb, "c_f": fa ^ fb}
        idx = basis_index(circ, vals)
        vec = simulate(circ, idx)
        assert abs(vec[idx] - u1_r(2, a, b) * (-1) ** (fa * fb)) < 1e-15


def test_kickback_phase():
    assert abs(kickback_phase(4, 1) - 1j) < 1e-15
    for order, m in ((8, 3), (12, 5)):
        assert abs(kickback_phase(order, m) - np.exp(2j * math.pi * m / order)) < 1e-13
    assert abs(np.linalg.norm(phase_gradient_state(12)) - 1) < 1e-15


def test_ripple_adder_all_inputs():
    n = 3
    c = Circuit("adder")
    A, B, carry = c.add_register("A", n), c.add_register("B", n), c.add_register("carry", 1, "ancilla")
    c.extend(ripple_add(A.qubits, B.qubits, carry.qubits[0]))
    for a, b in itertools.product(range(2**n), repeat=2):
        out = run_sparse(c, {basis_index(c, {"A": a, "B": b}): 1 + 0j})
        assert list(out) == [basis_index(c, {"A": a, "B": (a + b) % 2**n})]


@pytest.mark.parametrize("k", [4, 6])
def test_expanded_adders_still_verify(k):
    circ = expand_adders(synth_f("u1_k", k))
    assert "adder_scratch" in circ.registers
    assert not any(g.kind in ("ADD_MOD", "SUB_MOD") for g in circ.gates)
    assert verify_circuit("u1_k", k, "f", circuit=circ).deviation < 1e-12


def test_text_round_trip():
    for circ in (synth_f("su2_k", 3), synth_r("su2_k", 2), synth_r("u1_k", 4)):
        text = circ.to_text()
        back = Circuit.from_text(text)
        assert back.to_text() == text
        assert back.n_qubits == circ.n_qubits


def test_inverse_gates_undo_circuit():
    circ = synth_f("su2_k", 2)
    rng = np.random.default_rng(0)
    idx = [int(i) for i in rng.integers(0, 2**circ.n_qubits, size=5)]
    state = {i: 1 / math.sqrt(len(idx)) + 0j for i in idx}
    out = run_sparse(circ, state, gates=circ.gates + circ.inverse_gates(), prune=1e-14)
    for i, amp in state.items():
        assert abs(out.get(i, 0) - amp) < 1e-12
    assert sum(abs(v) ** 2 for v in out.values()) == pytest.approx(1.0, abs=1e-12)


def test_simulate_basics():
    c = Circuit("one")
    c.add_register("q", 1)
    assert np.array_equal(simulate(c, 0), [1, 0])
    c.x(0)
    assert np.array_equal(simulate(c, 0), [0, 1])


def test_u1_f_output_has_unit_norm():
    circ = synth_f("u1_k", 4)
    vals = {"a": 1, "b": 3, "c": 2, "d": 2, "m": 0, "a_f": 1, "b_f": 1, "c_f": 1, "d_f": 1, "m_f": 0}
    assert np.linalg.norm(simulate(circ, vals)) == pytest.approx(1.0, abs=1e-14)


def test_qubit_budget():
    c = Circuit("big")
    c.add_register("r", MAX_QUBITS + 1)
    with pytest.raises(QubitBudgetError):
        simulate(c)


def test_empty_circuit_costs_nothing():
    rep = resources(Circuit("empty"))
    assert (rep.toffoli, rep.qrom_entries, rep.rotations, rep.qubits) == (0, 0, 0, 0)


def test_u1_toffoli_scaling():
    ks = [4, 8, 16, 32, 64]
    fit = scaling_sweep("u1_k", "f", ks, "toffoli")
    assert fit.values == [4 * math.log2(k) - 2 for k in ks]
    assert fit.log_r2 == pytest.approx(1.0)
    assert fit.consistent_with_log()


def test_su2_qrom_scaling():
    fit = scaling_sweep("su2_k", "f", [2, 3, 4, 5], "qrom_entries")
    assert fit.values == [2, 8, 20, 40]
    assert 2.0 <= fit.loglog_slope <= 4.0


def test_fit_scaling_needs_two_points():
    with pytest.raises(ValueError):
        fit_scaling([4], [1])


def test_gradient_annotation():
    rep = resources(synth_r("u1_k", 8))
    assert rep.rotations == 0
    assert any("gradient" in a for a in rep.annotations)


def test_lcu_block_encoding():
    enc = lcu_block_encoding_su2_hopping(2)
    assert enc.n_terms <= 32
    assert all(a >= 0 for a, _ in enc.terms)
    assert enc.l1_norm > 0
    assert block_encoding_deviation(2) < 1e-8


def test_synth_rejects_bad_levels():
    with pytest.raises(ValueError):
        synth_f("u1_k", 3)
    with pytest.raises(ValueError):
        synth_f("u1_2", 4)
    with pytest.raises(ValueError):
        synth_r("so3_k", 2)
