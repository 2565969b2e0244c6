"""kickcorr command line: solve, measures, kick, scan.

Exit codes: 0 success, 1 input error, 2 numerical non-convergence,
3 physical precondition violated (``--require-zero-mean``).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .asymptotics import build_kappa7_state
from .ci import ConvergenceError, SolveOptions, solve_ground
from .detspace import DetSpace
from .integrals import (FCIDumpError, IntegralSet, make_hubbard_model, make_ring_dipole,
                        parse_fcidump, parse_operator_file)
from .kick import SeriesError, build_kick, kick_report, scaling_probe
from .rdm import spin_densities
from .report import density_sections, dumps, make_report, to_csv

log = logging.getLogger("kickcorr")

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_PHYSICS = 0, 1, 2, 3


class InputError(Exception):
    pass


class PreconditionError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's default status 2 means non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# inputs


def parse_model(spec: str, nelec: int | None = None) -> IntegralSet:
    """``hubbard:n,t,U[,periodic]``; the last field accepts 1/0, ring/chain, true/false."""
    kind, _, rest = spec.partition(":")
    if kind != "hubbard" or not rest:
        raise InputError(f"unknown model {spec!r}; expected hubbard:n,t,U[,periodic]")
    parts = rest.split(",")
    if len(parts) not in (3, 4):
        raise InputError(f"model {spec!r}: expected 3 or 4 fields")
    try:
        n, t, U = int(parts[0]), float(parts[1]), float(parts[2])
    except ValueError as e:
        raise InputError(f"model {spec!r}: {e}") from None
    periodic = False
    if len(parts) == 4:
        flag = parts[3].strip().lower()
        if flag not in ("0", "1", "ring", "chain", "true", "false", "periodic", "open"):
            raise InputError(f"model {spec!r}: bad periodic flag {parts[3]!r}")
        periodic = flag in ("1", "ring", "true", "periodic")
    try:
        return make_hubbard_model(n, t, U, periodic=periodic, nelec=nelec)
    except ValueError as e:
        raise InputError(str(e)) from None


def read_integrals(fcidump=None, model=None, nelec=None, base: Path | None = None) -> IntegralSet:
    if model is not None:
        return parse_model(model, nelec)
    if fcidump == "-":
        text = sys.stdin.read()
    else:
        path = Path(fcidump)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise InputError(f"cannot read {path}: {e.strerror or e}") from None
    try:
        H = parse_fcidump(text)
        return H.with_electrons(nelec) if nelec is not None else H
    except (FCIDumpError, ValueError) as e:
        raise InputError(f"{fcidump}: {e}") from None


def read_operator(spec: str, H: IntegralSet | None, norb: int, base: Path | None = None):
    if spec.startswith("ring:"):
        try:
            return make_ring_dipole(norb, spec[5:])
        except ValueError as e:
            raise InputError(str(e)) from None
    path = Path(spec)
    if base is not None and not path.is_absolute():
        path = base / path
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None
    try:
        op = parse_operator_file(text, H)
    except (FCIDumpError, ValueError) as e:
        raise InputError(f"{spec}: {e}") from None
    if op.norb != norb:
        raise InputError(f"{spec}: operator has {op.norb} orbitals, system has {norb}")
    return op


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise InputError(f"bad number list {text!r}: {e}") from None


# ---------------------------------------------------------------------------
# pipeline


def _ground(H: IntegralSet, args):
    opts = SolveOptions(tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    space = DetSpace.from_integrals(H)
    gs = solve_ground(H, space, opts)
    diag = {"dimension": space.dimension, "norb": space.norb, "nalpha": space.na,
            "nbeta": space.nb, "iterations": gs.iterations, "residual": gs.residual}
    return gs.energy, gs.vector, diag


def _state(args, source: dict, base: Path | None = None):
    """``(system label, H or None, energy, vector, diagnostics)`` for one input."""
    if source.get("analytic"):
        if source["analytic"] != "kappa7":
            raise InputError(f"unknown analytic state {source['analytic']!r}")
        c = build_kappa7_state()
        sp = c.space
        diag = {"dimension": sp.dimension, "norb": sp.norb, "nalpha": sp.na, "nbeta": sp.nb,
                "iterations": 0, "residual": 0.0}
        return "kappa7", None, None, c, diag
    H = read_integrals(source.get("fcidump"), source.get("model"), source.get("nelec"), base)
    label = source.get("model") or Path(str(source.get("fcidump"))).stem
    energy, c, diag = _ground(H, args)
    return label, H, energy, c, diag


def _kick_section(c, dens, H, opers, qs, lambdas, require_zero_mean, zero_mean_tol, base=None):
    if len(opers) != len(qs):
        raise InputError(f"{len(opers)} operators but {len(qs)} field values")
    norb = c.space.norb
    comps = [(read_operator(o, H, norb, base), q) for o, q in zip(opers, qs)]
    try:
        kick = build_kick(comps)
    except ValueError as e:
        raise InputError(str(e)) from None
    rep = kick_report(c, dens, kick)
    if require_zero_mean and abs(rep.mean_s) > zero_mean_tol:
        raise PreconditionError(f"<S> = {rep.mean_s:.3e} exceeds {zero_mean_tol:g} "
                                "with --require-zero-mean")
    scan = None
    if lambdas:
        try:
            probe = scaling_probe(c, kick, lambdas)
        except ValueError as e:
            raise InputError(str(e)) from None
        rep = dataclasses.replace(rep, slope=probe.slope)
        scan = [list(r) for r in probe.rows]
    out = rep.as_dict()
    out.update(q=list(qs), operators=[op.label for op, _ in comps], scan=scan,
               route_gap=abs(rep.s2_rdm - rep.s2_no), moment_gap=abs(rep.s2m - rep.s2_rdm))
    return out


def build_report(args, source: dict, mode: str, kick_opts: dict | None = None,
                 base: Path | None = None) -> dict:
    label, H, energy, c, diag = _state(args, source, base)
    if mode == "solve":
        return make_report(label, source.get("geometry"), energy, diagnostics=diag)
    dens = spin_densities(c)
    ent, norms, s2 = density_sections(dens)
    diag["s_squared"] = s2
    kick = None
    if mode == "kick":
        kick = _kick_section(c, dens, H, base=base, **kick_opts)
    return make_report(label, source.get("geometry"), energy, ent, norms, kick, diag)


# ---------------------------------------------------------------------------
# commands


def _emit(reports, args, single=True):
    if args.format == "csv":
        text = to_csv(reports) if reports else ""
    elif single:
        text = dumps(reports[0]) + "\n"
    else:
        text = "".join(dumps(r, indent=None) + "\n" for r in reports)
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _source(args) -> dict:
    return {"fcidump": args.fcidump, "model": args.model, "nelec": args.nelec,
            "analytic": getattr(args, "analytic", None), "geometry": args.geometry}


def run_solve(args) -> int:
    _emit([build_report(args, _source(args), "solve")], args)
    return EXIT_OK


def run_measures(args) -> int:
    _emit([build_report(args, _source(args), "measures")], args)
    return EXIT_OK


def _kick_opts(args) -> dict:
    return {"opers": args.oper, "qs": args.q,
            "lambdas": parse_floats(args.lambda_scan) if args.lambda_scan else None,
            "require_zero_mean": args.require_zero_mean, "zero_mean_tol": args.zero_mean_tol}


def run_kick(args) -> int:
    _emit([build_report(args, _source(args), "kick", _kick_opts(args))], args)
    return EXIT_OK


def load_manifest(path: str) -> tuple[dict, list[dict], Path]:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read manifest {p}: {e.strerror or e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"manifest {p} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise InputError("manifest must be a JSON object")
    entries = data.get("entries", [])
    if not isinstance(entries, list):
        raise InputError("manifest 'entries' must be a list")
    base = p.parent
    seen = set()
    for k, e in enumerate(entries):
        if not isinstance(e, dict) or "geometry" not in e:
            raise InputError(f"manifest entry {k} needs a 'geometry' tag")
        tag = str(e["geometry"])
        if tag in seen:
            raise InputError(f"duplicate geometry tag {tag!r}")
        seen.add(tag)
        if ("fcidump" in e) == ("model" in e):
            raise InputError(f"entry {tag!r}: give exactly one of 'fcidump' or 'model'")
        paths = ([e["fcidump"]] if "fcidump" in e else []) + \
            [o for o in e.get("oper", []) if not str(o).startswith("ring:")]
        for f in paths:
            f = Path(f)
            if not (f if f.is_absolute() else base / f).is_file():
                raise InputError(f"entry {tag!r}: file {f} not found")
    return data, entries, base


def run_scan(args) -> int:
    data, entries, base = load_manifest(args.manifest)
    kick = data.get("kick")
    system = data.get("system")
    reports, status = [], EXIT_OK
    for e in entries:
        src = {"fcidump": e.get("fcidump"), "model": e.get("model"), "nelec": e.get("nelec"),
               "geometry": e["geometry"]}
        opts = None
        if kick and e.get("oper"):
            opts = {"opers": list(e["oper"]), "qs": [float(q) for q in kick.get("q", [])],
                    "lambdas": kick.get("lambda_scan"),
                    "require_zero_mean": bool(kick.get("require_zero_mean", False)),
                    "zero_mean_tol": float(kick.get("zero_mean_tol", 1e-8))}
        try:
            rep = build_report(args, src, "kick" if opts else "measures", opts, base)
        except (ConvergenceError, SeriesError) as exc:
            log.error("geometry %s: %s", e["geometry"], exc)
            if not args.keep_going:
                return EXIT_CONVERGENCE
            status = EXIT_CONVERGENCE
            continue
        if system:
            rep["system"] = str(system)
        reports.append(rep)
    _emit(reports, args, single=False)
    return status


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, analytic=False, source_required=True):
    g = p.add_mutually_exclusive_group(required=source_required)
    g.add_argument("--fcidump", metavar="PATH", help="FCIDUMP file, '-' for stdin")
    g.add_argument("--model", metavar="SPEC", help="built-in model, e.g. hubbard:6,1,4,ring")
    if analytic:
        g.add_argument("--analytic", choices=["kappa7"], help="closed-form state")
    p.add_argument("--nelec", type=int, help="override the electron count")
    p.add_argument("--geometry", help="tag copied into the report")


def _solver_opts(p):
    p.add_argument("--tol", type=float, default=1e-8, help="Davidson residual tolerance")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)


def _output(p):
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv")
    p.set_defaults(format="json")
    p.add_argument("--out", metavar="PATH", help="write to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kickcorr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="ground-state energy")
    _common(p)
    _solver_opts(p)
    _output(p)
    p.set_defaults(func=run_solve)

    p = sub.add_parser("measures", help="entropies and cumulant norms of the ground state")
    _common(p, analytic=True)
    _solver_opts(p)
    _output(p)
    p.set_defaults(func=run_measures)

    p = sub.add_parser("kick", help="survival probability after a one-body kick")
    _common(p, analytic=True)
    _solver_opts(p)
    _output(p)
    p.add_argument("--oper", action="append", required=True, metavar="PATH",
                   help="operator file, or ring:x|y|z for a ring dipole (repeatable)")
    p.add_argument("--q", action="append", type=float, required=True,
                   help="time-integrated field for the matching --oper (repeatable)")
    p.add_argument("--lambda-scan", metavar="L1,L2,...", help="scale factors for the order check")
    p.add_argument("--require-zero-mean", action="store_true",
                   help="fail with exit 3 unless |<S>| <= --zero-mean-tol")
    p.add_argument("--zero-mean-tol", type=float, default=1e-8)
    p.set_defaults(func=run_kick)

    p = sub.add_parser("scan", help="one report per manifest entry")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--keep-going", action="store_true", help="skip failing geometries")
    _solver_opts(p)
    _output(p)
    p.set_defaults(func=run_scan)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:  # usage errors, --help, --version
        return e.code
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InputError as e:
        print(f"kickcorr: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, SeriesError) as e:
        print(f"kickcorr: not converged: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except PreconditionError as e:
        print(f"kickcorr: {e}", file=sys.stderr)
        return EXIT_PHYSICS
    except ValueError as e:
        print(f"kickcorr: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
