"""External real-arithmetic solver driven over stdin/stdout with SMT-LIB2 scripts."""

from __future__ import annotations

import itertools
import os
import shlex
import shutil
import subprocess
from fractions import Fraction
from pathlib import Path

from .. import core
from ..errors import BackendTimeout, BackendUnavailable, ModelParseError
from . import smtlib
from .base import FALSE, SAT, TRUE, UNSAT, Backend, Verdict, check_rcf_formula, unknown

DEFAULT_CMD = ("z3", "-in")
DEFAULT_TIMEOUT_MS = 10_000
DECIMAL_PRECISION = 40


def default_command() -> tuple:
    env = os.environ.get("FUNSOLVE_BACKEND")
    if env and env not in ("auto", "internal", "external"):
        return tuple(shlex.split(env))
    return DEFAULT_CMD


class ExternalBackend(Backend):
    """One-shot subprocess per query; a session object only carries config and the transcript."""

    name = "external"

    def __init__(self, cmd=None, timeout_ms: int = DEFAULT_TIMEOUT_MS, log_dir=None):
        self.cmd = tuple(cmd) if cmd else default_command()
        self.timeout_ms = timeout_ms
        self.log_dir = Path(log_dir) if log_dir else None
        self._counter = itertools.count(1)
        self.queries = 0

    def available(self) -> bool:
        return bool(self.cmd) and shutil.which(self.cmd[0]) is not None

    # transport ------------------------------------------------------

    def run(self, script: str, timeout_ms: int | None = None) -> str:
        if not self.available():
            raise BackendUnavailable(
                f"backend command {self.cmd[0]!r} not found; install z3 (pip install z3-solver) "
                "or set FUNSOLVE_BACKEND / --backend")
        budget = (timeout_ms or self.timeout_ms) / 1000
        k = next(self._counter)
        self.queries += 1
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            (self.log_dir / f"query-{k:04d}.smt2").write_bytes(script.encode())
        try:
            proc = subprocess.run(list(self.cmd), input=script.encode(), capture_output=True,
                                  timeout=budget)
        except subprocess.TimeoutExpired as exc:
            if self.log_dir:
                (self.log_dir / f"query-{k:04d}.out").write_bytes(exc.stdout or b"")
            raise BackendTimeout(f"backend exceeded {budget:g} s") from None
        out = proc.stdout.decode(errors="replace")
        if self.log_dir:
            (self.log_dir / f"query-{k:04d}.out").write_bytes(proc.stdout)
        return out

    def _solve(self, assertions, consts, want, functions=None) -> Verdict:
        logic = smtlib.logic_for(assertions, with_uf=bool(functions))
        text = smtlib.script(assertions, consts, functions, want, logic)
        try:
            status, rest = smtlib.parse_response(self.run(text))
        except BackendTimeout as exc:
            return unknown(f"timeout: {exc}")
        if status == "unsat":
            return Verdict(UNSAT)
        if status == "unknown":
            return unknown("backend answered unknown")
        if not want:
            return Verdict(SAT)
        try:
            model, exact = smtlib.parse_values(rest, want)
            return Verdict(SAT, model, exact,
                           error_bound=None if exact else Fraction(1, 10 ** (DECIMAL_PRECISION - 2)))
        except smtlib.Approximate:
            pass
        # algebraic values: ask again for decimal approximations
        text = smtlib.script(assertions, consts, functions, want, logic,
                             options=[("pp.decimal", "true"),
                                      ("pp.decimal_precision", DECIMAL_PRECISION)])
        try:
            status, rest = smtlib.parse_response(self.run(text))
        except BackendTimeout as exc:
            return unknown(f"timeout: {exc}")
        if status != "sat":
            return unknown(f"backend changed its answer to {status} on re-query")
        try:
            model, exact = smtlib.parse_values(rest, want)
        except smtlib.Approximate:
            raise ModelParseError("backend returned root objects despite decimal request") from None
        return Verdict(SAT, model, exact=False,
                       error_bound=Fraction(1, 10 ** (DECIMAL_PRECISION - 2)),
                       reason="algebraic model rounded to rationals")

    # queries --------------------------------------------------------

    def check_qf(self, atoms) -> Verdict:
        atoms = list(atoms)
        for a in atoms:
            check_rcf_formula(a)
        names = _vars_of(atoms)
        return self._solve(atoms, names, names)

    def check_sentence(self, sentence: core.Formula) -> Verdict:
        check_rcf_formula(sentence)
        free = core.free_scalar_vars(sentence)
        v = self._solve([sentence], free, ())
        if v.status == SAT:
            return Verdict(TRUE)
        if v.status == UNSAT:
            return Verdict(FALSE)
        return v

    def check_exists_model(self, variables, matrix: core.Formula) -> Verdict:
        check_rcf_formula(matrix)
        variables = list(variables)
        extra = [v for v in core.free_scalar_vars(matrix) if v not in variables]
        return self._solve([matrix], variables + extra, variables)

    def check_combined(self, atoms, functions: dict) -> Verdict:
        """Monolithic query over reals plus uninterpreted functions (used as a test oracle)."""
        atoms = list(atoms)
        names = _vars_of(atoms)
        return self._solve(atoms, names, (), functions=functions)


def _vars_of(formulas) -> list:
    seen: dict = {}
    for f in formulas:
        for v in core.free_scalar_vars(f):
            seen.setdefault(v, None)
    return list(seen)

