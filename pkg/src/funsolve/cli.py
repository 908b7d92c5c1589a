"""Command-line interface.

Exit codes: 0 sat (or verified), 1 unsat (or verification failed), 2 unknown,
3 error, 64 usage, 69 external backend required but missing.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import core, instantiate, qf, surface, translate, witness
from .errors import BackendUnavailable, FunsolveError, ParseError
from .poly import Poly, domain_vars, parse_infix
from .rcf import DEFAULT_TIMEOUT_MS, AutoBackend, make_backend

EXIT_SAT, EXIT_UNSAT, EXIT_UNKNOWN, EXIT_ERROR = 0, 1, 2, 3
EXIT_USAGE, EXIT_UNAVAILABLE = 64, 69
REPORT_SCHEMA = "funsolve-report/1"
BACKEND_KINDS = ("auto", "internal", "external")
BACKEND_HINT = ("an external SMT-LIB2 solver is needed for this problem; install one "
                "(pip install z3-solver) or pass --backend 'CMD ARGS'")

log = logging.getLogger("funsolve")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- configuration

DEFAULTS = {"backend": "auto", "mode": "template", "max_degree": 4, "stage_budget": 3,
            "timeout_ms": DEFAULT_TIMEOUT_MS}
ENV = {"backend": "FUNSOLVE_BACKEND", "mode": "FUNSOLVE_MODE", "max_degree": "FUNSOLVE_MAX_DEGREE",
       "stage_budget": "FUNSOLVE_STAGE_BUDGET", "timeout_ms": "FUNSOLVE_TIMEOUT_MS"}
FILE_KEYS = {"backend": "backend", "mode": "mode", "max-degree": "max_degree",
             "stage-budget": "stage_budget", "timeout-ms": "timeout_ms"}


def resolve_config(args, options: dict) -> dict:
    """flags > environment > file options > defaults."""
    cfg = dict(DEFAULTS)
    for key, name in FILE_KEYS.items():
        if key in options:
            cfg[name] = options[key]
    for name, var in ENV.items():
        if os.environ.get(var):
            cfg[name] = os.environ[var]
    for name in DEFAULTS:
        val = getattr(args, name, None)
        if val is not None:
            cfg[name] = val
    for name in ("max_degree", "stage_budget", "timeout_ms"):
        try:
            cfg[name] = int(cfg[name])
        except (TypeError, ValueError):
            raise UsageError(f"{name.replace('_', '-')} must be an integer, got {cfg[name]!r}")
    if cfg["mode"] not in ("template", "enumerate"):
        raise UsageError(f"mode must be template or enumerate, got {cfg['mode']!r}")
    return cfg


def backend_from(cfg, log_dir=None):
    spec = str(cfg["backend"])
    if spec in BACKEND_KINDS:
        return make_backend(spec, timeout_ms=cfg["timeout_ms"], log_dir=log_dir)
    # anything else is a solver command line
    return make_backend("external", cmd=spec.split(), timeout_ms=cfg["timeout_ms"], log_dir=log_dir)


def _missing_external(backend) -> bool:
    return isinstance(backend, AutoBackend) and backend.missing_external > 0


# ---------------------------------------------------------------- helpers

def read_problem(path):
    text = Path(path).read_text(encoding="utf-8")
    prob = surface.parse(text)
    return text, prob, core.well_formed(prob.formula)


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def _poly_witness_json(pi) -> dict:
    return {"kind": "polynomial", "functions": pi.to_json(), "scalars": {}}


def _load_any_witness(path):
    data = json.loads(Path(path).read_text())
    if data.get("kind") == "polynomial":
        pi = instantiate.Assignment()
        for name, f in data["functions"].items():
            pi.set(name, f["arity"], parse_infix(f["polynomial"], domain_vars(f["arity"])))
        return pi
    return witness.witness_from_json(data)


def _emit_plot(path, w):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["function", "x", "value"])
        for name, f in w.functions.items():
            if f.arity != 1:
                log.warning("skipping plot data for %s (arity %d)", name, f.arity)
                continue
            for x, y in witness.plot_samples(f):
                out.writerow([name, repr(x), repr(y)])


def _status_code(status) -> int:
    return {"sat": EXIT_SAT, "unsat": EXIT_UNSAT}.get(status, EXIT_UNKNOWN)


# ---------------------------------------------------------------- subcommands

def cmd_solve(args) -> int:
    timing = {}
    t0 = time.perf_counter()
    text, prob, checked = read_problem(args.file)
    timing["parse"] = time.perf_counter() - t0
    cfg = resolve_config(args, prob.options)
    backend = backend_from(cfg, args.log_backend)
    frag = core.classify_fragment(checked)
    report = {
        "schema": REPORT_SCHEMA,
        "input": str(args.file),
        "input_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "fragment": frag.kind,
        "verdict": "unknown",
        "reason": "",
        "mode": None,
        "witness": None,
        "verified": None,
        "backend": {"spec": str(cfg["backend"]), "transcript": args.log_backend},
        "stats": {},
        "timing": timing,
    }
    wit_json = None
    t1 = time.perf_counter()
    if frag.kind == core.UNSUPPORTED:
        report["reason"] = f"unsupported fragment: {frag.reason}"
    elif frag.kind == core.QUANTIFIER_FREE:
        report["mode"] = "qf"
        res = qf.decide_qf(checked, backend)
        timing["solve"] = time.perf_counter() - t1
        report["verdict"], report["reason"], report["stats"] = res.status, res.reason, res.stats
        if res.status == "sat":
            t2 = time.perf_counter()
            w = witness.build_witness(res.certificate, checked)
            timing["witness"] = time.perf_counter() - t2
            t3 = time.perf_counter()
            ver = witness.verify_certificate(checked, res.certificate, w)
            timing["verify"] = time.perf_counter() - t3
            report["verified"] = ver.ok
            report["exact"] = ver.exact
            report["certificate"] = {
                "disjunct": res.certificate.disjunct_index,
                "arrangement": res.certificate.arrangement,
                "model": {k: str(v) for k, v in res.certificate.model.items()},
            }
            wit_json = witness.witness_to_json(w)
            if args.emit_plot_data:
                _emit_plot(args.emit_plot_data, w)
    else:
        report["mode"] = cfg["mode"]
        if cfg["mode"] == "enumerate":
            res = instantiate.solve_enumerate(checked, backend, max_stage=cfg["stage_budget"])
        else:
            res = instantiate.solve_template(checked, backend, max_degree=cfg["max_degree"])
        timing["solve"] = time.perf_counter() - t1
        report["verdict"], report["reason"] = res.status, res.reason
        report["stats"] = {k: v for k, v in res.stats.items()}
        if res.status == "sat":
            report["verified"] = True
            report["assignment"] = {k: str(p) for k, p in res.assignment.items()}
            wit_json = _poly_witness_json(res.assignment)
    if report["verdict"] == "sat":
        path = args.witness or str(Path(args.file).with_suffix(".witness.json"))
        _write_json(path, wit_json)
        report["witness"] = path
    if report["verdict"] == "unknown" and _missing_external(backend):
        report["reason"] = (report["reason"] + "; " if report["reason"] else "") + BACKEND_HINT
    timing["total"] = time.perf_counter() - t0
    if args.report:
        _write_json(args.report, report)
    json.dump({k: report[k] for k in ("verdict", "fragment", "mode", "witness", "verified", "reason")},
              sys.stdout)
    sys.stdout.write("\n")
    if report["verdict"] == "unknown" and _missing_external(backend):
        print(f"funsolve: {BACKEND_HINT}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    return _status_code(report["verdict"])


def cmd_translate(args) -> int:
    _, _, checked = read_problem(args.file)
    tr = translate.translate(checked)
    print(f"tau_d : {surface.to_text(tr.partial)}")
    print(f"tau   : {surface.to_text(tr.ru)}")
    for i, pair in enumerate(tr.purified):
        print(f"disjunct {i}")
        print(f"  pi_R  : {' & '.join(core.show(a) for a in pair.pi_r) or 'true'}")
        print(f"  pi_U  : {' & '.join(str(u) for u in pair.pi_u) or 'true'}")
        print(f"  shared: {{{', '.join(pair.shared)}}}")
    return 0


def cmd_instantiate(args) -> int:
    _, prob, checked = read_problem(args.file)
    cfg = resolve_config(args, prob.options)
    pi = instantiate.Assignment()
    for a in args.assign or []:
        try:
            name, p = instantiate.parse_assign(a, checked.fun_vars)
        except ValueError as exc:
            raise UsageError(str(exc))
        pi.set(name, checked.fun_vars[name], p)
    missing = [n for n in checked.fun_vars if n not in pi]
    if missing:
        raise UsageError(f"--assign missing for {', '.join(missing)}")
    result, trace = instantiate.pi_instantiate(checked, pi)
    print(trace.table(grouped=not args.all_steps), file=sys.stderr)
    out = {"result": instantiate.show_formula(result), "steps": len(trace.steps) - 1}
    code = 0
    if args.check:
        backend = backend_from(cfg, args.log_backend)
        v = instantiate.check_instantiation(checked, pi, backend)
        out["check"] = v.status
        out["reason"] = v.reason
        code = {"true": EXIT_SAT, "false": EXIT_UNSAT}.get(v.status, EXIT_UNKNOWN)
    json.dump(out, sys.stdout)
    sys.stdout.write("\n")
    return code


def _parse_point(text) -> list:
    pts = []
    for part in text.split(","):
        part = part.strip()
        try:
            pts.append(Fraction(part))
        except ValueError:
            raise UsageError(f"bad coordinate {part!r}")
    return pts


def cmd_eval(args) -> int:
    w = _load_any_witness(args.witness)
    funcs = w.polys if isinstance(w, instantiate.Assignment) else w.functions
    name = args.fn
    if name is None:
        if len(funcs) != 1:
            raise UsageError(f"--fn required; witness has {', '.join(funcs)}")
        name = next(iter(funcs))
    if name not in funcs:
        raise UsageError(f"no function {name!r} in witness")
    x = _parse_point(args.at)
    arity = w.arities[name] if isinstance(w, instantiate.Assignment) else funcs[name].arity
    beta = [int(b) for b in args.beta.split(",")] if args.beta else [0] * arity
    if len(x) != arity or len(beta) != arity:
        raise UsageError(f"{name} has arity {arity}")
    if isinstance(w, instantiate.Assignment):
        p: Poly = w[name]
        for v, b in zip(domain_vars(arity), beta):
            p = p.diff(v, b)
        val = p.evaluate(dict(zip(domain_vars(arity), x)))
    else:
        val = witness.eval_witness(funcs[name], tuple(x), tuple(beta))
    print(str(val) if isinstance(val, Fraction) else repr(val))
    return 0


def cmd_verify(args) -> int:
    _, prob, checked = read_problem(args.file)
    w = _load_any_witness(args.witness)
    if isinstance(w, instantiate.Assignment):
        cfg = resolve_config(args, prob.options)
        v = instantiate.check_instantiation(checked, w, backend_from(cfg, None))
        print("Verified" if v.status == "true" else f"Failed({v.status} {v.reason})".strip())
        return EXIT_SAT if v.status == "true" else (EXIT_UNSAT if v.status == "false" else EXIT_UNKNOWN)
    if core.has_quantifier(checked.formula):
        raise UsageError("bump witnesses verify quantifier-free problems only")
    missing = [n for n in checked.fun_vars if n not in w.functions]
    if missing:
        print(f"Failed(no function {', '.join(missing)} in witness)")
        return EXIT_UNSAT
    res = witness.verify_formula(checked, w)
    print(res)
    return EXIT_SAT if res.ok else EXIT_UNSAT


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="funsolve", description="Satisfiability for formulas over smooth real functions.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def backend_flags(sp):
        sp.add_argument("--backend", help="auto | internal | external | solver command line")
        sp.add_argument("--timeout-ms", type=int, dest="timeout_ms", help="per-query budget")
        sp.add_argument("--log-backend", metavar="DIR", help="write every solver query and answer here")

    s = sub.add_parser("solve", help="decide a problem file and write a witness")
    s.add_argument("file")
    s.add_argument("--mode", choices=["template", "enumerate"])
    s.add_argument("--max-degree", type=int, dest="max_degree")
    s.add_argument("--stage-budget", type=int, dest="stage_budget")
    s.add_argument("--witness", metavar="OUT.json")
    s.add_argument("--report", metavar="OUT.json")
    s.add_argument("--emit-plot-data", metavar="OUT.csv", dest="emit_plot_data")
    backend_flags(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("translate", help="print derivative translation and purification")
    s.add_argument("file")
    s.set_defaults(func=cmd_translate)

    s = sub.add_parser("instantiate", help="rewrite under a polynomial assignment")
    s.add_argument("file")
    s.add_argument("--assign", action="append", metavar="'X := POLY'")
    s.add_argument("--check", action="store_true", help="also decide the instantiated formula")
    s.add_argument("--all-steps", action="store_true", dest="all_steps",
                   help="one row per rule application")
    backend_flags(s)
    s.set_defaults(func=cmd_instantiate)

    s = sub.add_parser("eval", help="evaluate a witness function")
    s.add_argument("witness")
    s.add_argument("--at", required=True, help="comma-separated rational coordinates")
    s.add_argument("--fn")
    s.add_argument("--beta", help="comma-separated derivative orders")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("verify", help="re-check a witness against a problem file")
    s.add_argument("file")
    s.add_argument("witness")
    backend_flags(s)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"funsolve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendUnavailable as exc:
        print(f"funsolve: {exc}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    except ParseError as exc:
        print(f"funsolve: {args.file}:{exc}", file=sys.stderr)
        return EXIT_ERROR
    except (FunsolveError, OSError) as exc:
        print(f"funsolve: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
