"""Satisfiability checking for first-order formulas over smooth real functions.

Typical use::

    from funsolve import parse_problem, solve
    result = solve(parse_problem(open("example.fnl").read()))

``solve`` decides quantifier-free problems (with a smooth witness) and
searches for polynomial witnesses of scalar-quantified ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import core, instantiate, qf, surface, translate, witness
from .core import CheckedFormula, classify_fragment, well_formed
from .errors import FunsolveError
from .instantiate import (Assignment, assignment, check_instantiation, pi_instantiate,
                          solve_enumerate, solve_template)
from .qf import decide_conjunction, decide_qf
from .rcf import make_backend
from .witness import build_witness, eval_witness, interpolate, verify_certificate

__version__ = "0.1.0"


def parse_problem(text: str) -> CheckedFormula:
    """Parse problem text and sort-check the conjunction of its assertions."""
    return well_formed(surface.parse(text).formula)


@dataclass
class SolveResult:
    status: str  # sat | unsat | unknown
    fragment: str
    witness: object = None  # witness.Witness or instantiate.Assignment
    verified: bool | None = None
    reason: str = ""
    detail: object = None
    stats: dict = field(default_factory=dict)


def solve(checked: CheckedFormula, backend=None, mode: str = "template", max_degree: int = 4,
          stage_budget: int = 3) -> SolveResult:
    """Dispatch on the fragment of ``checked``."""
    backend = backend or make_backend()
    frag = classify_fragment(checked)
    if frag.kind == core.UNSUPPORTED:
        return SolveResult("unknown", frag.kind, reason=frag.reason)
    if frag.kind == core.QUANTIFIER_FREE:
        res = decide_qf(checked, backend)
        if res.status != "sat":
            return SolveResult(res.status, frag.kind, reason=res.reason, detail=res, stats=res.stats)
        w = build_witness(res.certificate, checked)
        ver = verify_certificate(checked, res.certificate, w)
        return SolveResult("sat", frag.kind, w, ver.ok, detail=res, stats=res.stats)
    if mode == "enumerate":
        res = solve_enumerate(checked, backend, max_stage=stage_budget)
    else:
        res = solve_template(checked, backend, max_degree=max_degree)
    return SolveResult(res.status, frag.kind, res.assignment, True if res.status == "sat" else None,
                       res.reason, res, res.stats)


__all__ = [
    "Assignment", "CheckedFormula", "FunsolveError", "SolveResult", "assignment",
    "build_witness", "check_instantiation", "classify_fragment", "core", "decide_conjunction",
    "decide_qf", "eval_witness", "instantiate", "interpolate", "make_backend", "parse_problem",
    "pi_instantiate", "qf", "solve", "solve_enumerate", "solve_template", "surface", "translate",
    "verify_certificate", "well_formed", "witness",
]
