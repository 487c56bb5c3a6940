"""Command-line front end.

Exit codes: 0 ok, 1 solver or oracle failure, 2 well-posedness failure,
3 not amenable (including a non-normal proposed tree), 64 usage, 65 bad
netlist, 70 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

import numpy as np

from . import circuits, lti, sigma, solver, validation
from .dae import build_model1, build_model2
from .errors import (CphError, GenerationFailed, NetlistSyntaxError, NotLTI,
                     NotNormal, WellPosednessError)
from .graph import normal_tree_kruskal, normal_tree_rref, validate_tree
from .model import CircuitModel
from .netlist import read_netlist

EXIT_OK, EXIT_FAIL, EXIT_WELLPOSED, EXIT_UNAMENABLE = 0, 1, 2, 3
EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 64, 65, 70


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _load(args):
    spec = read_netlist(args.file)
    model = CircuitModel.from_spec(spec)
    g = model.graph
    tree_arg = getattr(args, "tree", None)
    if tree_arg:
        names = [s.strip() for s in tree_arg.split(",") if s.strip()]
        nt = validate_tree(g, names)
    elif getattr(args, "algorithm", "kruskal") == "rref":
        nt = normal_tree_rref(g)
    else:
        nt = normal_tree_kruskal(g)
    return spec, model, nt


def _system(model, nt, kind: int):
    return build_model2(model, nt) if kind == 2 else build_model1(model, nt)


def _guess(text: str | None, N: int):
    if text is None:
        return None
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 1:
        return np.full(N, parts[0])
    if len(parts) != N:
        raise _Fail(EXIT_USAGE, f"--guess needs 1 or {N} values, got {len(parts)}")
    return np.array(parts)


def _null_inf(M: np.ndarray):
    return [[None if not np.isfinite(v) else int(v) for v in row] for row in M]


def _tree_report(model, nt) -> dict:
    g = model.graph
    from .graph import check_wellposed, incidence
    rep = check_wellposed(incidence(g), g.kinds, strict=False)
    return {
        "wellposed": {"connected": rep.connected, "no_voltage_cycle": rep.a1_ok,
                      "no_current_cutset": rep.a2_ok},
        "tree": [g.names[e] for e in nt.tree],
        "cotree": [g.names[e] for e in nt.cotree],
        "twig_counts": dict(zip("vcdl", nt.twig_counts)),
        "link_counts": dict(zip("CDLI", nt.link_counts)),
        "ranks": dict(zip(("V", "VC", "VCD", "VCDL"), nt.ranks)),
        "normal": bool(nt.normal),
        "F": nt.F.astype(int).tolist(),
    }


def build_analyze_report(model, nt, kind: int = 2, guess=None) -> tuple[dict, bool]:
    s = _system(model, nt, kind)
    cp = solver.consistent_point(s, 0.0, guess=_guess(guess, s.N) if isinstance(guess, str) else guess)
    sa = sigma.analyze(s, (cp.t0, cp.x0, cp.xdot0))
    cond = float(np.linalg.cond(sa.J)) if s.N else 1.0
    rep = _tree_report(model, nt)
    rep.update({
        "model": kind,
        "variables": list(s.layout.names),
        "equations": list(s.row_names),
        "sigma": _null_inf(sa.sigma),
        "offsets": {
            "provisional": {"c": sa.offsets.c.tolist(), "d": sa.offsets.d.tolist()},
            "canonical": {"c": sa.canonical.c.tolist(), "d": sa.canonical.d.tolist()},
        },
        "transversal": sa.transversal.tolist(),
        "dof": sa.dof,
        "structural_index": sa.structural_index,
        "amenable": bool(sa.amenable),
        "sv_ratio": sa.sv_ratio,
        "J_condition": cond if np.isfinite(cond) else None,
    })
    return rep, bool(sa.amenable)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_analyze(args, out) -> int:
    _, model, nt = _load(args)
    rep, ok = build_analyze_report(model, nt, args.model, args.guess)
    if args.json:
        out.write(_dump(rep) + "\n")
    else:
        out.write(f"tree: {', '.join(rep['tree'])}\ncotree: {', '.join(rep['cotree'])}\n")
        out.write(f"variables: {', '.join(rep['variables'])}\n")
        out.write(f"dof: {rep['dof']}  structural index: {rep['structural_index']}  "
                  f"amenable: {rep['amenable']}  sv ratio: {rep['sv_ratio']:.3e}\n")
        out.write("F:\n" + "\n".join(" ".join(f"{v:2d}" for v in row) for row in rep["F"]) + "\n")
    return EXIT_OK if ok else EXIT_UNAMENABLE


def cmd_tree(args, out) -> int:
    _, model, nt = _load(args)
    rep = _tree_report(model, nt)
    if args.json:
        out.write(_dump(rep) + "\n")
    else:
        out.write(f"tree: {', '.join(rep['tree'])}\ncotree: {', '.join(rep['cotree'])}\n")
        out.write(f"twigs (v,c,d,l): {nt.twig_counts}  links (C,D,L,I): {nt.link_counts}  ranks: {nt.ranks}\n")
    return EXIT_OK


def trajectory_csv(traj: solver.Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *traj.names, *[f"d_{n}" for n in traj.names], *traj.output_names, "H", "balance"])
    for k in range(len(traj.t)):
        row = [traj.t[k], *traj.x[k], *traj.xdot[k], *traj.y[k], traj.H[k], traj.balance[k]]
        w.writerow(["%.17g" % v for v in row])
    return buf.getvalue()


def cmd_simulate(args, out) -> int:
    if args.t1 <= args.t0:
        raise _Fail(EXIT_USAGE, "--t1 must exceed --t0")
    _, model, nt = _load(args)
    s = _system(model, nt, args.model)
    cp = solver.consistent_point(s, args.t0, guess=_guess(args.guess, s.N))
    cfg = solver.IntegratorConfig(order=args.order, h=args.h, rtol=args.rtol, atol=args.atol)
    traj = solver.integrate(s, cp, cfg, args.t1)
    text = trajectory_csv(traj)
    summary = (f"steps: {traj.steps}  rejected: {traj.rejected}  final t: {traj.t[-1]:.17g}  "
               f"final H: {traj.H[-1]:.17g}\n")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        out.write(summary)
    else:
        out.write(text)
        sys.stderr.write(summary)
    return EXIT_OK


def cmd_eig(args, out) -> int:
    _, model, nt = _load(args)
    s = build_model2(model, nt)
    res = lti.finite_eigenvalues(lti.assemble_lti(s))
    rep = {"dof": res.dof, "degree": res.degree,
           "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in res.eigenvalues]}
    if args.json:
        out.write(_dump(rep) + "\n")
    else:
        out.write(f"dof: {res.dof}  degree: {res.degree}\n")
        for z in res.eigenvalues:
            out.write(f"{z.real:.17g} {z.imag:+.17g}i\n")
    return EXIT_OK


def cmd_reduce(args, out) -> int:
    _, model, nt = _load(args)
    s = build_model2(model, nt)
    red = solver.reduce_to_ode(s)
    rep = {"ode_variables": list(red.names), "dimension": red.dim, "dae_size": s.N,
           "selected_charges": [s.layout.names[j] for j in red.q_hat],
           "selected_fluxes": [s.layout.names[j] for j in red.phi_hat]}
    if args.json:
        out.write(_dump(rep) + "\n")
    else:
        out.write(f"ODE variables ({red.dim} of {s.N}): {', '.join(red.names)}\n")
        out.write(f"eliminated charges: {', '.join(rep['selected_charges']) or '-'}\n")
        out.write(f"eliminated fluxes: {', '.join(rep['selected_fluxes']) or '-'}\n")
    return EXIT_OK


def cmd_random(args, out) -> int:
    if args.nodes < 2 or args.edges < args.nodes - 1:
        raise _Fail(EXIT_USAGE, "need --nodes >= 2 and --edges >= nodes - 1")
    try:
        mix = circuits.parse_mix(args.kinds) if args.kinds else None
    except ValueError as exc:
        raise _Fail(EXIT_USAGE, str(exc)) from None
    spec = circuits.random_circuit(args.nodes, args.edges, args.seed, mix)
    text = spec.to_text(f"random circuit: nodes={args.nodes} edges={args.edges} seed={args.seed}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    _, model, nt = _load(args)
    reports = [validation.oracle_cycle_cutset(model.graph, nt),
               validation.oracle_tellegen(nt, model.graph.b),
               validation.oracle_model_equivalence(model, nt),
               validation.oracle_index(build_model2(model, nt))]
    for r in reports:
        out.write(r.line() + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cphdae", description="Compact port-Hamiltonian circuit DAE toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, tree=True, model=True):
        sp.add_argument("file", help="netlist file")
        if tree:
            sp.add_argument("--tree", help="comma-separated edge names of a proposed normal tree")
        if model:
            sp.add_argument("--model", type=int, choices=(1, 2), default=2)

    sp = sub.add_parser("analyze", help="topology, structural analysis and amenability")
    common(sp)
    sp.add_argument("--guess", help="initial guess: one value or one per variable (default 1)")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("tree", help="normal tree, cotree and Kron matrix")
    common(sp, model=False)
    sp.add_argument("--algorithm", choices=("kruskal", "rref"), default="kruskal")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_tree)

    sp = sub.add_parser("simulate", help="BDF integration to CSV")
    common(sp)
    sp.add_argument("--t0", type=float, default=0.0)
    sp.add_argument("--t1", type=float, required=True)
    sp.add_argument("--h", type=float, help="fixed step (default: adaptive)")
    sp.add_argument("--rtol", type=float, default=1e-6)
    sp.add_argument("--atol", type=float, default=1e-8)
    sp.add_argument("--order", type=int, choices=(1, 2), default=2)
    sp.add_argument("--guess")
    sp.add_argument("--out", help="CSV path (default stdout)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("eig", help="finite eigenvalues of an LTI circuit")
    common(sp, model=False)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_eig)

    sp = sub.add_parser("reduce", help="explicit ODE variables")
    common(sp, model=False)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("random", help="seeded random well-posed netlist")
    sp.add_argument("--nodes", type=int, required=True)
    sp.add_argument("--edges", type=int, required=True)
    sp.add_argument("--kinds", help="weights, e.g. V:1,I:1,C:3,L:3,R:2,G:2")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_random)

    sp = sub.add_parser("verify", help="run the independent oracles on a netlist")
    common(sp, model=False)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except _Fail as exc:
        sys.stderr.write(f"cphdae: {exc}\n")
        return exc.code
    except NetlistSyntaxError as exc:
        sys.stderr.write(f"{args.file}:{exc.line}:{exc.col}: {exc.message}\n")
        return EXIT_DATA
    except WellPosednessError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_WELLPOSED
    except NotNormal as exc:
        sys.stderr.write(f"NotNormal: {exc}\n")
        return EXIT_UNAMENABLE
    except (NotLTI, GenerationFailed) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    except CphError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        t_last = getattr(exc, "t_last", None)
        if t_last is not None:
            sys.stderr.write(f"last accepted t: {t_last!r}\n")
        return EXIT_FAIL
    except OSError as exc:
        sys.stderr.write(f"cphdae: {exc}\n")
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
