"""Command-line entry point: ``anyonlgt <subcommand> ...``.

Exit status is 0 on success, 1 when the computation rejects its input or a
check fails, and 2 for usage errors.  Setting ``ANYONLGT_THREADS`` pins the
BLAS thread pools; it must be set before numpy loads, which this module
does on import.
"""

from __future__ import annotations

import os

_THREADS = os.environ.get("ANYONLGT_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import argparse  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402

import numpy as np  # noqa: E402

from . import anyon_core, fusion_surface, spectra  # noqa: E402
from .anyon_core import InadmissibleError  # noqa: E402
from .fermion_encoding import SquareLatticeSpec, verify_car  # noqa: E402
from .sparse import SparseOperator  # noqa: E402

PROG = "anyonlgt"
RESIDUAL_TOL = 1e-9


class DomainError(Exception):
    """A well-formed request whose computation failed or whose check did not pass."""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _plain(obj):
    """Reduce numpy and complex values to JSON-native types (complex -> [re, im])."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = format(x, ".17g")
    if all(ch not in s for ch in ".en"):
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written at 17 significant digits."""
    obj = _plain(obj) if _level == 0 else obj
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k, ensure_ascii=False)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj, ensure_ascii=False)


def table(headers, rows) -> str:
    """Aligned text columns; floats at 17 significant digits."""
    cells = [[str(h) for h in headers]]
    for r in rows:
        cells.append([format(v, ".17g") if isinstance(v, float) else str(v) for v in r])
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _kv_text(report: dict, prefix: str = "") -> str:
    lines = []
    for k, v in report.items():
        if isinstance(v, dict):
            lines.append(_kv_text(v, prefix + k + "."))
        else:
            v = _plain(v)
            lines.append(f"{prefix}{k}: {_fmt_float(v) if isinstance(v, float) else v}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _int_list(text: str) -> list:
    try:
        vals = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not vals:
        raise UsageError("empty integer list")
    return vals


def _finite(name: str, x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise UsageError(f"--{name} must be finite")
    return x


def _model_string(text: str) -> str:
    text = str(text).strip().lower()
    if text == "fermion":
        return text
    family, sep, level = text.partition(":")
    if not sep or family not in ("u1", "su2"):
        raise UsageError(f"model must be 'u1:<k>', 'su2:<k>' or 'fermion', got {text!r}")
    try:
        int(level)
    except ValueError:
        raise UsageError(f"model level must be an integer, got {level!r}") from None
    return text


def _couplings(args) -> dict:
    return {n: _finite(n, getattr(args, n)) for n in ("gm", "gk", "g", "a")}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _model_report(spec: str) -> dict:
    m = anyon_core.make_model(spec)
    res = anyon_core.verify_consistency(m).as_dict()
    md = anyon_core.modular_data(m)
    fusion = []
    for a in range(m.rank):
        for b in range(m.rank):
            fusion.append({"a": m.labels[a], "b": m.labels[b], "channels": [m.labels[c] for c in m.fuse(a, b)]})
    return {
        "model": spec,
        "objects": list(m.labels),
        "fusion_table": fusion,
        "qdims": m.qdims,
        "spins": m.spins,
        "S": md.S,
        "T": np.diag(md.T),
        "residuals": res,
    }


def cmd_model(args):
    spec = _model_string(args.model)
    report = _model_report(spec)
    if args.action == "verify" and report["residuals"]["max"] >= RESIDUAL_TOL:
        raise DomainError(f"consistency residual {report['residuals']['max']:.3e} exceeds {RESIDUAL_TOL}")
    return report, None


def cmd_verify(args):
    """Consistency residuals for each requested model; fails above the tolerance."""
    models = [_model_string(s) for s in str(args.models).split(",") if s.strip()]
    out = {}
    worst = 0.0
    for spec in models:
        res = anyon_core.verify_consistency(anyon_core.make_model(spec, args.with_fermion)).as_dict()
        out[spec] = res
        worst = max(worst, res["max"])
    report = {"models": out, "max_residual": worst, "tolerance": RESIDUAL_TOL, "pass": worst < RESIDUAL_TOL}
    rows = [(s, r["pentagon"], r["hexagon"], r["unitarity"], r["max"]) for s, r in out.items()]
    text = table(["model", "pentagon", "hexagon", "unitarity", "max"], rows)
    if not report["pass"]:
        raise DomainError(f"consistency residual {worst:.3e} exceeds {RESIDUAL_TOL}")
    return report, text


def cmd_fermion(args):
    spec = SquareLatticeSpec(args.lx, args.ly, args.periodic)
    report = verify_car(spec)
    if report["residual"] != 0:
        raise DomainError(f"CAR residual {report['residual']} is not zero")
    return report, None


def cmd_hamiltonian(args):
    spec = _model_string(args.model)
    if spec == "fermion":
        raise UsageError("hamiltonian needs a u1:<k> or su2:<k> model")
    model = fusion_surface.make_instance(spec, symmetric_charge=args.symmetric_charge, **_couplings(args))
    lat = fusion_surface.build_lattice(args.lx, args.ly)
    basis = fusion_surface.enumerate_basis(lat, model)
    terms = fusion_surface.hamiltonian_terms(basis, model)
    H = fusion_surface.assemble_hamiltonian(basis, model, terms)
    P = fusion_surface.global_parity_operator(basis)
    comm = (H @ P - P @ H).max_abs()
    herm = H.hermiticity_residual()
    report = {
        "model": spec,
        "lattice": lat.summary(),
        "couplings": _couplings(args),
        "dim": basis.dim,
        "nnz": H.nnz,
        "hermiticity_residual": herm,
        "parity_commutator": comm,
        "term_norms": {name: op.max_abs() for name, op in terms.items()},
    }
    if args.out:
        H.write_mtx(args.out + ".mtx", comment=f"{spec} {args.lx}x{args.ly} Hamiltonian")
        basis.write_manifest(args.out + ".basis.json")
        report["files"] = [args.out + ".mtx", args.out + ".basis.json"]
    if herm > 1e-12:
        raise DomainError(f"Hamiltonian is not Hermitian (residual {herm:.3e})")
    return report, None


def cmd_ed(args):
    if not os.path.exists(args.input):
        raise DomainError(f"no such file: {args.input}")
    H = SparseOperator.read_mtx(args.input)
    res = spectra.diagonalize(H, m=args.m, method=args.method, seed=args.seed)
    report = dict(res.to_dict(), dim=H.dim, hermiticity_residual=H.hermiticity_residual(), seed=args.seed)
    text = table(["i", "eigenvalue"], list(enumerate(res.eigenvalues)))
    return report, text


def _circuit_kind(spec: str) -> tuple:
    family, _, level = spec.partition(":")
    k = int(level)
    if family == "su2":
        return "su2_k", k
    return ("u1_2" if k == 2 else "u1_k"), k


def cmd_circuit(args):
    from . import circuits

    spec = _model_string(args.model)
    if spec == "fermion":
        raise UsageError("circuit needs a u1:<k> or su2:<k> model")
    kind, k = _circuit_kind(spec)
    if args.kind:
        kind = args.kind
    report = {"model": spec, "kind": kind, "symbol": args.symbol}
    if args.symbol == "lcu":
        if kind != "su2_k":
            raise UsageError("--symbol lcu needs an su2:<k> model")
        enc = circuits.lcu_block_encoding_su2_hopping(k)
        circ = enc.circuit
        report["terms"] = enc.n_terms
        report["l1_norm"] = enc.l1_norm
        if args.verify:
            report["block_encoding_deviation"] = circuits.block_encoding_deviation(k)
    else:
        circ = circuits.synth_f(kind, k) if args.symbol == "f" else circuits.synth_r(kind, k)
        if args.verify:
            report["verify"] = circuits.verify_circuit(kind, k, args.symbol, circ).to_dict()
    report["qubits"] = circ.n_qubits
    report["gates"] = len(circ.gates)
    if args.resources:
        report["resources"] = circuits.resources(circ).to_dict()
    if args.emit:
        with open(args.emit, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(circ.to_text())
        report["emitted"] = args.emit
    return report, None


def cmd_converge(args):
    family = str(args.model).split(":")[0].strip().lower()
    ks = _int_list(args.ks)
    if family == "u1":
        rep = spectra.convergence_u1((args.lx, args.ly), ks, window=args.window)
    elif family == "su2":
        rep = spectra.convergence_su2(ks)
    else:
        raise UsageError("converge needs --model u1 or su2")
    report = rep.to_dict()
    rows = [[name] + [float(x) for x in vals] for name, vals in rep.deviations.items()]
    text = table(["quantity"] + [f"k={k}" for k in rep.k_values], rows)
    text += "\n\n" + "\n".join(f"{name}: {'yes' if ok else 'no'}" for name, ok in rep.verdicts.items())
    return report, text


def cmd_resources(args):
    from . import circuits

    family = str(args.model).split(":")[0].strip().lower()
    if family not in ("u1", "su2"):
        raise UsageError("resources needs --model u1 or su2")
    ks = _int_list(args.ks)
    kind = "su2_k" if family == "su2" else "u1_k"
    fit = circuits.scaling_sweep(kind, args.symbol, ks, args.metric)
    report = {"kind": kind, "symbol": args.symbol, "metric": args.metric, "fit": fit.to_dict()}
    rows = list(zip(fit.ks, fit.values))
    text = table(["k", args.metric], rows)
    text += f"\n\nlog-log slope: {fit.loglog_slope:.17g}\nlinear-in-log2(k) R^2: {fit.log_r2:.17g}"
    return report, text


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

COMMANDS = {
    "model": cmd_model,
    "verify": cmd_verify,
    "fermion": cmd_fermion,
    "hamiltonian": cmd_hamiltonian,
    "ed": cmd_ed,
    "circuit": cmd_circuit,
    "converge": cmd_converge,
    "resources": cmd_resources,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=spectra.DEFAULT_SEED)
    common.add_argument("--config", help="JSON file of flag values; explicit flags win")

    p = _Parser(prog=PROG, description="Anyonic lattice gauge theory toolkit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("model", parents=[common], help="dump a model's data and residuals")
    s.add_argument("action", nargs="?", choices=["dump", "verify"], default="dump")
    s.add_argument("--model", required=True)

    s = sub.add_parser("verify", parents=[common], help="consistency residuals for several models")
    s.add_argument("--models", default="u1:2,u1:4,u1:6,u1:8,su2:2,su2:3,su2:4")
    s.add_argument("--with-fermion", action="store_true")

    s = sub.add_parser("fermion", parents=[common], help="encoded CAR algebra check")
    s.add_argument("action", nargs="?", choices=["verify"], default="verify")
    s.add_argument("--lx", type=int, default=2)
    s.add_argument("--ly", type=int, default=2)
    s.add_argument("--periodic", action=argparse.BooleanOptionalAction, default=True)

    s = sub.add_parser("hamiltonian", parents=[common], help="build and export a lattice Hamiltonian")
    s.add_argument("--model", required=True)
    s.add_argument("--lx", type=int, default=1)
    s.add_argument("--ly", type=int, default=1)
    for name in ("gm", "gk", "g", "a"):
        s.add_argument(f"--{name}", type=float, default=1.0)
    s.add_argument("--symmetric-charge", action="store_true")
    s.add_argument("--out", help="path prefix for <prefix>.mtx and <prefix>.basis.json")

    s = sub.add_parser("ed", parents=[common], help="lowest eigenvalues of a Matrix Market file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--method", choices=["auto", "dense", "iterative"], default="auto")

    s = sub.add_parser("circuit", parents=[common], help="synthesize, verify and cost a symbol circuit")
    s.add_argument("--model", required=True)
    s.add_argument("--symbol", choices=["f", "r", "lcu"], default="f")
    s.add_argument("--kind", choices=["u1_2", "u1_k", "su2_k"])
    s.add_argument("--emit")
    s.add_argument("--verify", action="store_true")
    s.add_argument("--resources", action="store_true")

    s = sub.add_parser("converge", parents=[common], help="large-k convergence tables")
    s.add_argument("--model", required=True)
    s.add_argument("--ks", default="8,16,32")
    s.add_argument("--lx", type=int, default=1)
    s.add_argument("--ly", type=int, default=1)
    s.add_argument("--window", type=int)

    s = sub.add_parser("resources", parents=[common], help="cost sweep across k with fits")
    s.add_argument("--model", required=True)
    s.add_argument("--symbol", choices=["f", "r"], default="f")
    s.add_argument("--ks", default="4,8,16,32,64")
    s.add_argument("--metric", choices=["toffoli", "qrom_entries", "rotations", "qubits"], default="toffoli")
    return p


def _prescan(argv: list) -> tuple:
    """Subcommand and --config value, found before full parsing."""
    command = next((t for t in argv if not t.startswith("-")), None)
    config = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif tok.startswith("--config="):
            config = tok.split("=", 1)[1]
    return command, config


def _apply_config(parser: argparse.ArgumentParser, argv: list) -> argparse.Namespace:
    """Load config values as parser defaults so explicit flags still win."""
    command, path = _prescan(argv)
    if path and command in COMMANDS:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[command]
        known = {a.dest for a in sub._actions}
        defaults = {}
        for key, val in cfg.items():
            dest = "input" if key == "in" else key.replace("-", "_")
            if dest not in known or dest in ("config", "help"):
                raise UsageError(f"config key {key!r} is not a flag of {command}")
            defaults[dest] = val
        for action in sub._actions:
            if action.dest in defaults:
                action.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if not args.command:
            raise UsageError(parser.format_usage() + f"{PROG}: error: a subcommand is required")
        report, text = COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (DomainError, InadmissibleError, ValueError, RuntimeError, KeyError, OSError) as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 1
    body = (text if text is not None else _kv_text(_plain(report))) if args.format == "text" else dumps(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body + "\n")
    else:
        print(body)
    return 0


if __name__ == "__main__":
    sys.exit(main())
