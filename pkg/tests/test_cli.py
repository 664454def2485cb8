import json

import numpy as np
import pytest

from anyonlgt.circuits import Circuit
from anyonlgt.cli import main
from anyonlgt.fusion_surface import assemble_hamiltonian, build_lattice, enumerate_basis, make_instance
from anyonlgt.sparse import SparseOperator


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_model_dump(capsys):
    code, out, _ = run(capsys, "model", "dump", "--model", "u1:2")
    assert code == 0
    rep = json.loads(out)
    assert rep["objects"] == ["0", "s"]
    assert rep["residuals"]["max"] < 1e-9


def test_usage_errors_exit_2(capsys):
    assert run(capsys, )[0] == 2
    assert run(capsys, "model", "dump")[0] == 2
    assert run(capsys, "circuit", "--model", "u1:4", "--k", "4")[0] == 2
    assert run(capsys, "resources", "--model", "so3")[0] == 2


def test_domain_errors_exit_1(capsys):
    code, _, err = run(capsys, "model", "dump", "--model", "su2:0")
    assert code == 1 and err.startswith("anyonlgt:")
    assert run(capsys, "ed", "--in", "/nonexistent/file.mtx")[0] == 1
    assert run(capsys, "circuit", "--model", "u1:3")[0] == 1


def test_hamiltonian_export_round_trip(capsys, tmp_path):
    prefix = str(tmp_path / "h")
    code, out, _ = run(capsys, "hamiltonian", "--model", "u1:4", "--lx", "2", "--ly", "1",
                       "--gm", "0.5", "--g", "0.8", "--out", prefix)
    assert code == 0
    rep = json.loads(out)
    assert rep["hermiticity_residual"] == 0.0
    model = make_instance("u1:4", gm=0.5, g=0.8)
    basis = enumerate_basis(build_lattice(2, 1), model)
    H = assemble_hamiltonian(basis, model).to_dense()
    back = SparseOperator.read_mtx(prefix + ".mtx").to_dense()
    assert np.array_equal(back, H)
    manifest = json.loads(open(prefix + ".basis.json", encoding="utf-8").read())
    assert len(manifest["states"]) == rep["dim"] == basis.dim

    code, out, _ = run(capsys, "ed", "--in", prefix + ".mtx", "--m", "3")
    assert code == 0
    assert np.allclose(json.loads(out)["eigenvalues"], np.linalg.eigvalsh(H)[:3], atol=1e-10)


def test_config_defaults_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "su2:2"}))
    code, out, _ = run(capsys, "model", "dump", "--config", str(cfg))
    assert code == 0 and json.loads(out)["model"] == "su2:2"
    code, out, _ = run(capsys, "model", "dump", "--config", str(cfg), "--model", "u1:2")
    assert code == 0 and json.loads(out)["model"] == "u1:2"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run(capsys, "model", "dump", "--model", "u1:2", "--config", str(cfg))[0] == 2


def test_output_flag_and_text_format(capsys, tmp_path):
    dest = tmp_path / "r.txt"
    code, out, _ = run(capsys, "fermion", "verify", "--lx", "2", "--ly", "2", "--format", "text",
                       "--output", str(dest))
    assert code == 0 and out == ""
    assert "residual: 0" in dest.read_text()


def test_circuit_emit_verify(capsys, tmp_path):
    dest = tmp_path / "f.circ"
    code, out, _ = run(capsys, "circuit", "--model", "su2:2", "--symbol", "f", "--verify", "--emit", str(dest))
    assert code == 0
    assert json.loads(out)["verify"]["deviation"] < 1e-8
    circ = Circuit.from_text(dest.read_text())
    assert circ.to_text().rstrip("\n") == dest.read_text().rstrip("\n")


def test_resources_sweep(capsys):
    code, out, _ = run(capsys, "resources", "--model", "u1", "--ks", "4,8,16")
    assert code == 0
    assert json.loads(out)["fit"]["values"] == [6.0, 10.0, 14.0]


def test_json_is_deterministic(capsys):
    a = run(capsys, "converge", "--model", "su2", "--ks", "4,8")[1]
    b = run(capsys, "converge", "--model", "su2", "--ks", "4,8")[1]
    assert a == b
    assert json.loads(a)["verdicts"]["plaquette_R_exactly_one"] is False
