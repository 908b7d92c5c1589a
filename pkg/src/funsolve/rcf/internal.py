"""Exact Fourier-Motzkin procedure for linear real arithmetic.

Complete for quantifier-free linear conjunctions (and purely existential
sentences over them).  Nonlinear or universally quantified input yields
UNKNOWN rather than a guess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .. import core
from ..poly import atom_poly
from .base import FALSE, SAT, TRUE, UNSAT, Backend, Verdict, check_rcf_formula, unknown

EQ, LE, LT = "=", "<=", "<"


@dataclass(frozen=True)
class Lin:
    """``sum(coeffs[v] * v) + const  (kind)  0``."""

    coeffs: tuple  # sorted (var, Fraction) pairs, no zeros
    const: Fraction
    kind: str

    @classmethod
    def make(cls, coeffs: dict, const, kind):
        items = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c))
        return cls(items, Fraction(const), kind)

    def get(self, v) -> Fraction:
        for name, c in self.coeffs:
            if name == v:
                return c
        return Fraction(0)

    def value(self, env) -> Fraction:
        return sum((c * env[v] for v, c in self.coeffs), self.const)

    def holds(self, env) -> bool:
        x = self.value(env)
        return x == 0 if self.kind == EQ else (x <= 0 if self.kind == LE else x < 0)

    def normalized(self) -> "Lin":
        if not self.coeffs:
            return self
        scale = abs(self.coeffs[0][1]) if self.kind != EQ else self.coeffs[0][1]
        if scale == 1:
            return self
        return Lin(tuple((v, c / scale) for v, c in self.coeffs), self.const / scale, self.kind)


class NonLinear(Exception):
    pass


def linearize(atoms) -> tuple:
    """Atoms -> (constraints, disequalities as ``Lin`` with kind '=')."""
    cons, neqs = [], []
    for a in atoms:
        p = atom_poly(a)
        if not p.is_linear():
            raise NonLinear(core.show(a))
        coeffs, c = p.linear_parts()
        neg = ({v: -x for v, x in coeffs.items()}, -c)
        if a.rel == "=":
            cons.append(Lin.make(coeffs, c, EQ))
        elif a.rel == "!=":
            neqs.append(Lin.make(coeffs, c, EQ))
        elif a.rel == "<=":
            cons.append(Lin.make(coeffs, c, LE))
        elif a.rel == "<":
            cons.append(Lin.make(coeffs, c, LT))
        elif a.rel == ">=":
            cons.append(Lin.make(*neg, LE))
        elif a.rel == ">":
            cons.append(Lin.make(*neg, LT))
    return cons, neqs


def _substitute(con: Lin, var, expr: dict, expr_const) -> Lin:
    a = con.get(var)
    if not a:
        return con
    coeffs = {v: c for v, c in con.coeffs if v != var}
    for v, c in expr.items():
        coeffs[v] = coeffs.get(v, 0) + a * c
    return Lin.make(coeffs, con.const + a * expr_const, con.kind)


def _trivial(con: Lin):
    """None if the constraint has variables, else its truth value."""
    if con.coeffs:
        return None
    if con.kind == EQ:
        return con.const == 0
    return con.const <= 0 if con.kind == LE else con.const < 0


def fm_solve(constraints) -> dict | None:
    """A rational model of the constraint conjunction, or None if infeasible."""
    cons = [c.normalized() for c in constraints]
    all_vars = sorted({v for c in constraints for v, _ in c.coeffs})
    eliminated_eq: list = []  # (var, expr, const)

    # Gaussian elimination of equalities
    while True:
        eq = next((c for c in cons if c.kind == EQ and c.coeffs), None)
        if eq is None:
            break
        var, a = eq.coeffs[0]
        expr = {v: -c / a for v, c in eq.coeffs if v != var}
        ec = -eq.const / a
        eliminated_eq.append((var, expr, ec))
        cons = [_substitute(c, var, expr, ec) for c in cons if c is not eq]
    rest = []
    for c in cons:
        t = _trivial(c)
        if t is False:
            return None
        if t is None:
            rest.append(c)
    cons = list(dict.fromkeys(c.normalized() for c in rest))

    # Fourier-Motzkin on the inequalities
    eliminated_fm: list = []  # (var, lowers, uppers)
    while cons:
        remaining = sorted({v for c in cons for v, _ in c.coeffs})
        # cheapest variable first: fewest generated pairs
        def cost(v):
            pos = sum(1 for c in cons if c.get(v) > 0)
            neg = sum(1 for c in cons if c.get(v) < 0)
            return (pos * neg - pos - neg, v)
        var = min(remaining, key=cost)
        lowers = [c for c in cons if c.get(var) < 0]
        uppers = [c for c in cons if c.get(var) > 0]
        others = [c for c in cons if not c.get(var)]
        eliminated_fm.append((var, lowers, uppers))
        new = list(others)
        for lo in lowers:
            for up in uppers:
                a_lo, a_up = -lo.get(var), up.get(var)
                coeffs: dict = {}
                for v, c in lo.coeffs:
                    coeffs[v] = coeffs.get(v, 0) + c * a_up
                for v, c in up.coeffs:
                    coeffs[v] = coeffs.get(v, 0) + c * a_lo
                coeffs.pop(var, None)
                kind = LT if LT in (lo.kind, up.kind) else LE
                comb = Lin.make(coeffs, lo.const * a_up + up.const * a_lo, kind)
                t = _trivial(comb)
                if t is False:
                    return None
                if t is None:
                    new.append(comb.normalized())
        cons = list(dict.fromkeys(new))

    env: dict = {}
    for var, lowers, uppers in reversed(eliminated_fm):
        env[var] = _pick(var, lowers, uppers, env)
    for v in all_vars:
        if v not in env and all(v != e[0] for e in eliminated_eq):
            env[v] = Fraction(0)
    for var, expr, ec in reversed(eliminated_eq):
        for v in expr:
            env.setdefault(v, Fraction(0))
        env[var] = ec + sum((c * env[v] for v, c in expr.items()), Fraction(0))
    for v in all_vars:
        env.setdefault(v, Fraction(0))
    return env


def _pick(var, lowers, uppers, env) -> Fraction:
    def bound(c):
        a = c.get(var)
        rest = sum((x * env.get(v, Fraction(0)) for v, x in c.coeffs if v != var), c.const)
        return -rest / a, c.kind == LT

    lo = hi = None
    lo_strict = hi_strict = False
    for c in lowers:
        b, s = bound(c)
        if lo is None or b > lo or (b == lo and s):
            lo, lo_strict = b, s
    for c in uppers:
        b, s = bound(c)
        if hi is None or b < hi or (b == hi and s):
            hi, hi_strict = b, s

    def ok(x):
        if lo is not None and (x < lo or (lo_strict and x == lo)):
            return False
        if hi is not None and (x > hi or (hi_strict and x == hi)):
            return False
        return True

    if ok(Fraction(0)):
        return Fraction(0)
    if lo is not None and not lo_strict and ok(lo):
        return lo
    if hi is not None and not hi_strict and ok(hi):
        return hi
    if lo is not None:
        cand = Fraction(math.floor(lo) + 1)
        if ok(cand):
            return cand
    if hi is not None:
        cand = Fraction(math.ceil(hi) - 1)
        if ok(cand):
            return cand
    return (lo + hi) / 2


def solve_linear(atoms) -> dict | None:
    """Model of a linear conjunction with ``!=``; disequalities decided greedily.

    A nonempty convex set avoids finitely many hyperplanes iff it lies in none
    of them, and cutting it by an open half-space that meets it preserves its
    affine hull, so choosing any feasible side per disequality never needs
    backtracking.
    """
    cons, neqs = linearize(atoms)
    model = fm_solve(cons)
    if model is None:
        return None
    for d in neqs:
        if not d.coeffs:
            if d.const == 0:
                return None
            continue
        below = Lin(d.coeffs, d.const, LT)
        above = Lin(tuple((v, -c) for v, c in d.coeffs), -d.const, LT)
        m = fm_solve(cons + [below])
        if m is not None:
            cons = cons + [below]
            model = m
            continue
        m = fm_solve(cons + [above])
        if m is None:
            return None
        cons = cons + [above]
        model = m
    return model


class InternalBackend(Backend):
    name = "internal"

    def check_qf(self, atoms) -> Verdict:
        atoms = list(atoms)
        for a in atoms:
            check_rcf_formula(a)
        try:
            model = solve_linear(atoms)
        except NonLinear as exc:
            return unknown(f"internal-nonlinear: {exc}")
        if model is None:
            return Verdict(UNSAT)
        want = {v for a in atoms for v in core.term_vars(a.lhs) | core.term_vars(a.rhs)}
        return Verdict(SAT, {v: model.get(v, Fraction(0)) for v in sorted(want)})

    def _existential(self, matrix, keep) -> Verdict:
        body = matrix
        while isinstance(body, core.Exists):
            body = body.body
        if core.has_quantifier(body):
            return unknown("internal backend handles existential linear formulas only")
        try:
            disjuncts = core.to_dnf(body)
        except Exception as exc:
            return unknown(f"internal: {exc}")
        saw_nonlinear = False
        for d in disjuncts:
            try:
                model = solve_linear(d)
            except NonLinear:
                saw_nonlinear = True
                continue
            if model is not None:
                return Verdict(SAT, {v: model.get(v, Fraction(0)) for v in keep})
        if saw_nonlinear:
            return unknown("internal-nonlinear")
        return Verdict(UNSAT)

    def check_sentence(self, sentence) -> Verdict:
        check_rcf_formula(sentence)
        v = self._existential(sentence, ())
        if v.status == SAT:
            return Verdict(TRUE)
        if v.status == UNSAT:
            return Verdict(FALSE)
        return v

    def check_exists_model(self, variables, matrix) -> Verdict:
        check_rcf_formula(matrix)
        return self._existential(matrix, list(variables))
