"""Polynomial instantiation of function variables.

Given a formula and an assignment of polynomials to its function variables,
rewriting with three rules produces a pure real-arithmetic formula:

* ``varsep``   every repeated occurrence of a function variable gets a fresh
  primed name mapped to the same polynomial;
* ``d-elim``   ``d_i X`` becomes ``X`` while the assignment of ``X`` is
  differentiated in its i-th argument;
* ``app-elim`` ``app(X, a1..an)`` with application-free arguments becomes the
  polynomial of ``X`` evaluated at ``a1..an``.

On top of that sit the satisfiability check of an instantiated formula and two
searches for a satisfying polynomial assignment: a fair enumeration of all
rational polynomials, and a degree loop over parameterized templates.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from . import core
from .core import Add, App, Atom, Const, Diff, FunVar, Mul
from .errors import BackendError, FunsolveError, StageBlowup
from .poly import Poly, domain_vars, format_poly, monomials_up_to, parse_infix, term_to_poly
from .rcf import FALSE, SAT, TRUE, UNKNOWN, Backend, Verdict, make_backend, unknown

log = logging.getLogger(__name__)

VARSEP, D_ELIM, APP_ELIM = "varsep", "d-elim", "app-elim"
ROUND_DENOMINATOR = 10 ** 6
DEFAULT_STAGE_CAP = 2000


# ---------------------------------------------------------------- assignments

@dataclass
class Assignment:
    """Function variable -> (arity, Poly over the domain variables)."""

    polys: dict = field(default_factory=dict)
    arities: dict = field(default_factory=dict)

    def set(self, name, arity, poly: Poly):
        self.polys[name] = poly
        self.arities[name] = arity

    def copy(self) -> "Assignment":
        return Assignment(dict(self.polys), dict(self.arities))

    def __getitem__(self, name) -> Poly:
        return self.polys[name]

    def __contains__(self, name):
        return name in self.polys

    def items(self):
        return self.polys.items()

    def show(self) -> str:
        body = ", ".join(f"{k} -> {format_poly(p)}" for k, p in self.polys.items())
        return "{" + body + "}"

    def __str__(self):
        return self.show()

    def to_json(self) -> dict:
        out = {}
        for name, p in self.polys.items():
            vars_ = domain_vars(self.arities[name])
            out[name] = {
                "arity": self.arities[name],
                "polynomial": format_poly(p),
                "monomials": [{"beta": [dict(m).get(v, 0) for v in vars_], "coeff": str(c)}
                              for m, c in p.terms.items()],
            }
        return out


def assignment(mapping: dict, arities: dict | None = None) -> Assignment:
    """Build from ``{name: Poly | str}``; strings are parsed as infix polynomials."""
    out = Assignment()
    for name, p in mapping.items():
        arity = (arities or {}).get(name)
        if isinstance(p, str):
            allowed = domain_vars(arity) if arity else None
            p = parse_infix(p, allowed)
        if arity is None:
            arity = _infer_arity(p)
        out.set(name, arity, p)
    return out


def _infer_arity(p: Poly) -> int:
    names = p.variables()
    if not names or names == ["t"]:
        return 1
    return max(int(v[1:]) for v in names if v.startswith("t") and v[1:].isdigit())


def parse_assign(text: str, fun_vars: dict) -> tuple:
    """``"X := t^2 + 1"`` -> (name, Poly).  The right side is infix or an S-expression term."""
    if ":=" not in text:
        raise ValueError(f"expected NAME := POLY, got {text!r}")
    name, rhs = (s.strip() for s in text.split(":=", 1))
    if name not in fun_vars:
        raise ValueError(f"{name!r} is not a declared function variable")
    vars_ = domain_vars(fun_vars[name])
    if rhs.startswith("("):
        from . import surface
        decls = {v: core.SCALAR for v in vars_}
        try:
            return name, term_to_poly(surface.parse_term(rhs, decls))
        except FunsolveError:
            pass
    return name, parse_infix(rhs, vars_)


# ---------------------------------------------------------------- rewrite rules

def varsep(f, pi: Assignment) -> tuple:
    """Rename repeated occurrences of a function variable to fresh primed names."""
    taken = set(pi.polys) | set(core.fun_vars_of(f))
    seen: dict = {}

    def fresh(name):
        k = 1
        while True:
            cand = name + "'" * k
            if cand not in taken:
                taken.add(cand)
                return cand
            k += 1

    def rename_term(t):
        if isinstance(t, FunVar):
            if t.name not in seen:
                seen[t.name] = []
                return t
            new = fresh(t.name)
            seen[t.name].append(new)
            return FunVar(new, t.arity)
        if isinstance(t, Add):
            return Add(rename_term(t.left), rename_term(t.right))
        if isinstance(t, Mul):
            return Mul(rename_term(t.left), rename_term(t.right))
        if isinstance(t, App):
            return App(rename_term(t.fn), tuple(rename_term(a) for a in t.args))
        if isinstance(t, Diff):
            return Diff(t.index, rename_term(t.fn))
        if isinstance(t, core.Deriv):
            raise ValueError("instantiate expects d-chains, not canonical derivative nodes")
        return t

    def rename_formula(g):
        if isinstance(g, Atom):
            return Atom(rename_term(g.lhs), g.rel, rename_term(g.rhs))
        if isinstance(g, core.And):
            return core.And(tuple(rename_formula(a) for a in g.args))
        if isinstance(g, core.Or):
            return core.Or(tuple(rename_formula(a) for a in g.args))
        if isinstance(g, core.Not):
            return core.Not(rename_formula(g.arg))
        if isinstance(g, core.Implies):
            lhs = rename_formula(g.lhs)
            return core.Implies(lhs, rename_formula(g.rhs))
        if isinstance(g, core.Forall):
            return core.Forall(g.var, rename_formula(g.body), g.sort)
        if isinstance(g, core.Exists):
            return core.Exists(g.var, rename_formula(g.body), g.sort)
        raise TypeError(g)

    out = rename_formula(f)
    new_pi = Assignment()
    for name, p in pi.items():
        new_pi.set(name, pi.arities[name], p)
        for alias in seen.get(name, []):
            new_pi.set(alias, pi.arities[name], p)
    return out, new_pi


def _redexes(f, pred) -> list:
    """Subterms satisfying ``pred`` in pre-order, left to right."""
    return [s for t in core.formula_terms(f) for s in core.iter_subterms(t) if pred(s)]


def _is_d_redex(t):
    return isinstance(t, Diff) and isinstance(t.fn, FunVar)


def _is_app_redex(t):
    return (isinstance(t, App) and isinstance(t.fn, FunVar)
            and not any(isinstance(s, App) for a in t.args for s in core.iter_subterms(a)))


def _replace(f, target, replacement):
    """Replace ``target`` everywhere.  After varsep a redex names its function variable
    uniquely, so this touches exactly one subterm."""

    def go(t):
        if t == target:
            return replacement
        if isinstance(t, Add):
            return Add(go(t.left), go(t.right))
        if isinstance(t, Mul):
            return Mul(go(t.left), go(t.right))
        if isinstance(t, App):
            return App(go(t.fn), tuple(go(a) for a in t.args))
        if isinstance(t, Diff):
            return Diff(t.index, go(t.fn))
        return t

    return core.map_atoms(f, lambda a: Atom(go(a.lhs), a.rel, go(a.rhs)))


def partial_elim(f, pi: Assignment, pick: str = "left") -> tuple:
    """One d-elim step on the leftmost (or rightmost) redex.  Returns None if none applies."""
    reds = _redexes(f, _is_d_redex)
    if not reds:
        return None
    red = reds[0] if pick == "left" else reds[-1]
    name, i = red.fn.name, red.index
    new_pi = pi.copy()
    var = domain_vars(pi.arities[name])[i - 1]
    new_pi.polys[name] = pi[name].diff(var)
    return _replace(f, red, red.fn), new_pi


def evaluate_assignment(pi: Assignment, name, args) -> core.Term:
    """The polynomial of ``name`` evaluated at application-free argument terms."""
    vars_ = domain_vars(pi.arities[name])
    return pi[name].subs({v: term_to_poly(a) for v, a in zip(vars_, args)}).to_term()


def app_elim(f, pi: Assignment, pick: str = "left") -> tuple:
    """One app-elim step on the leftmost (or rightmost) innermost application.  None if none applies."""
    reds = _redexes(f, _is_app_redex)
    if not reds:
        return None
    red = reds[0] if pick == "left" else reds[-1]
    if red.fn.name not in pi:
        raise KeyError(f"no polynomial assigned to {red.fn.name}")
    return _replace(f, red, evaluate_assignment(pi, red.fn.name, red.args)), pi


@dataclass
class TraceStep:
    rule: str  # "" for the input row
    formula: core.Formula
    assignment: Assignment


@dataclass
class Trace:
    steps: list = field(default_factory=list)

    @property
    def result(self) -> core.Formula:
        return self.steps[-1].formula

    @property
    def final_assignment(self) -> Assignment:
        return self.steps[-1].assignment

    def rows(self, grouped: bool = True) -> list:
        """(rule, formula text, assignment text); consecutive steps of one rule collapse."""
        out = []
        for i, s in enumerate(self.steps):
            row = (s.rule, show_formula(s.formula), s.assignment.show())
            if grouped and out and i > 1 and s.rule == self.steps[i - 1].rule:
                out[-1] = row
            else:
                out.append(row)
        return out

    def table(self, grouped: bool = True) -> str:
        rows = [("rule", "formula", "polynomial assignment")] + self.rows(grouped)
        w0 = max(len(r[0]) for r in rows)
        w1 = max(len(r[1]) for r in rows)
        lines = [f"{r[0]:<{w0}} | {r[1]:<{w1}} | {r[2]}" for r in rows]
        lines.insert(1, "-" * len(lines[0]))
        return "\n".join(lines)

    def metric(self) -> list:
        return [sum(core.count_ops(s.formula)) for s in self.steps]


def pi_instantiate(f, pi: Assignment, pick: str = "left") -> tuple:
    """Rewrite to a function-free formula; returns (formula, Trace)."""
    if isinstance(f, core.CheckedFormula):
        f = f.formula
    missing = [n for n in core.fun_vars_of(f) if n not in pi]
    if missing:
        raise KeyError(f"no polynomial assigned to {', '.join(missing)}")
    trace = Trace([TraceStep("", f, pi)])
    if not core.fun_vars_of(f):
        return f, trace
    g, p = varsep(f, pi)
    trace.steps.append(TraceStep(VARSEP, g, p))
    while True:
        nxt = partial_elim(g, p, pick)
        rule = D_ELIM
        if nxt is None:
            nxt = app_elim(g, p, pick)
            rule = APP_ELIM
        if nxt is None:
            break
        g, p = nxt
        trace.steps.append(TraceStep(rule, g, p))
    if core.fun_vars_of(g):
        raise AssertionError("function variables survived instantiation")
    return g, trace


# ---------------------------------------------------------------- display

def _flatten(t, cls):
    if isinstance(t, cls):
        return _flatten(t.left, cls) + _flatten(t.right, cls)
    return [t]


def show_term(t) -> str:
    """Infix with constants pulled to the front of products and repeated factors as powers."""
    if isinstance(t, Add):
        parts = _flatten(t, Add)
        out = show_term(parts[0])
        for p in parts[1:]:
            s = show_term(p)
            if s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out
    if isinstance(t, Mul):
        factors = _flatten(t, Mul)
        c = Fraction(1)
        rest: dict = {}
        for fct in factors:
            if isinstance(fct, Const):
                c *= fct.value
            else:
                key = show_term(fct) if not isinstance(fct, Add) else f"({show_term(fct)})"
                rest[key] = rest.get(key, 0) + 1
        if c == 0:
            return "0"
        body = "*".join(k + (f"^{e}" if e > 1 else "") for k, e in rest.items())
        if not body:
            return str(c)
        if c == 1:
            return body
        if c == -1:
            return "-" + body
        return f"{c}*{body}"
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, App):
        return f"{show_term(t.fn)}({', '.join(show_term(a) for a in t.args)})"
    if isinstance(t, Diff):
        return f"d{t.index}{show_term(t.fn)}"
    return core.show(t)


def show_formula(f) -> str:
    prefix = []
    while isinstance(f, (core.Forall, core.Exists)):
        prefix.append(("forall " if isinstance(f, core.Forall) else "exists ") + f.var)
        f = f.body
    body = _show_body(f)
    return (" ".join(prefix) + ". " + body) if prefix else body


def _show_body(f):
    if isinstance(f, Atom):
        return f"{show_term(f.lhs)} {f.rel} {show_term(f.rhs)}"
    if isinstance(f, (core.Forall, core.Exists)):
        return "(" + show_formula(f) + ")"
    if isinstance(f, core.And) and f.args:
        return " & ".join(_paren(a) for a in f.args)
    if isinstance(f, core.Or) and f.args:
        return " | ".join(_paren(a) for a in f.args)
    if isinstance(f, core.Not):
        return "~" + _paren(f.arg)
    if isinstance(f, core.Implies):
        return f"{_paren(f.lhs)} -> {_paren(f.rhs)}"
    return core.show(f)


def _paren(f):
    return _show_body(f) if isinstance(f, Atom) else "(" + _show_body(f) + ")"


# ---------------------------------------------------------------- checking

def existential_closure(f) -> core.Formula:
    for v in reversed(core.free_scalar_vars(f)):
        f = core.Exists(v, f)
    return f


def check_instantiation(f, pi: Assignment, backend: Backend | None = None) -> Verdict:
    """TRUE iff the instantiated formula is satisfiable (its existential closure holds)."""
    backend = backend or make_backend()
    g, _ = pi_instantiate(f, pi)
    try:
        return backend.check_sentence(existential_closure(g))
    except BackendError as exc:
        return unknown(f"{type(exc).__name__}: {exc}")


@dataclass
class SearchResult:
    status: str  # sat | unknown
    assignment: Assignment | None = None
    verdict: Verdict | None = None
    reason: str = ""
    stats: dict = field(default_factory=dict)

    def __str__(self):
        if self.status == SAT:
            return f"SAT {self.assignment}"
        return f"UNKNOWN({self.reason})"


# ---------------------------------------------------------------- fair enumeration

def height(c: Fraction) -> int:
    c = Fraction(c)
    return max(abs(c.numerator), c.denominator)


def poly_index(p: Poly) -> int:
    """Smallest stage containing ``p``: max(total degree, coefficient height); the zero polynomial is 1."""
    if p.is_zero():
        return 1
    return max(p.degree(), max(height(c) for c in p.terms.values()))


def assignment_index(pi: Assignment) -> int:
    return max((poly_index(p) for _, p in pi.items()), default=1)


def rationals(n: int) -> list:
    """All p/q with |p| <= n, 1 <= q <= n, ordered by height, denominator, magnitude, sign."""
    vals = {Fraction(p, q) for q in range(1, n + 1) for p in range(-n, n + 1)}
    return sorted(vals, key=lambda c: (height(c), c.denominator, abs(c.numerator), c < 0))


def stage_size(fun_vars: dict, n: int) -> int:
    """Number of assignments whose index is exactly ``n``."""
    def upto(k):
        if k < 1:
            return 0
        r = len(rationals(k))
        return math.prod(r ** math.comb(k + a, a) for a in fun_vars.values())
    return upto(n) - upto(n - 1)


def _monomials(arity: int, degree: int) -> list:
    vars_ = domain_vars(arity)
    return [tuple((v, e) for v, e in zip(vars_, exps) if e)
            for exps in monomials_up_to(vars_, degree)]


def _polys_upto(arity: int, n: int):
    monos = _monomials(arity, n)
    coeffs = rationals(n)
    for combo in itertools.product(coeffs, repeat=len(monos)):
        yield Poly({m: c for m, c in zip(monos, combo)})


def stage(fun_vars: dict, n: int):
    """Assignments of index exactly ``n`` in a fixed order."""
    names = list(fun_vars)

    def rec(i, acc):
        if i == len(names):
            pi = Assignment()
            for name, p in zip(names, acc):
                pi.set(name, fun_vars[name], p)
            if assignment_index(pi) == n:
                yield pi
            return
        for p in _polys_upto(fun_vars[names[i]], n):
            yield from rec(i + 1, acc + [p])

    yield from rec(0, [])


def solve_enumerate(checked, backend: Backend | None = None, max_stage: int = 3,
                    max_checks: int | None = None, stage_cap: int = DEFAULT_STAGE_CAP) -> SearchResult:
    """Check assignments stage by stage; first confirmed one wins.  Never answers UNSAT."""
    backend = backend or make_backend()
    fun_vars = dict(checked.fun_vars)
    stats = {"stages": 0, "checks": 0, "unknown_checks": 0}
    for n in range(1, max_stage + 1):
        stats["stages"] = n
        size = stage_size(fun_vars, n)
        if size > stage_cap:
            warnings.warn(StageBlowup(
                f"stage {n} has {size} candidates; checking the first {stage_cap}"))
        for pi in itertools.islice(stage(fun_vars, n), stage_cap):
            if max_checks is not None and stats["checks"] >= max_checks:
                return SearchResult(UNKNOWN, reason=f"check budget {max_checks} exhausted",
                                    stats=stats)
            stats["checks"] += 1
            v = check_instantiation(checked, pi, backend)
            if v.status == TRUE:
                stats["stage"] = n
                return SearchResult(SAT, pi, v, stats=stats)
            if v.status == UNKNOWN:
                stats["unknown_checks"] += 1
    return SearchResult(UNKNOWN, reason=f"stage budget {max_stage} exhausted", stats=stats)


# ---------------------------------------------------------------- templates

def template(name: str, arity: int, degree: int) -> tuple:
    """Dense polynomial of the given degree with parameter coefficients ``c@name@k``."""
    params, p = [], Poly()
    for k, m in enumerate(_monomials(arity, degree)):
        c = f"c@{name}@{k}"
        params.append(c)
        p = p + Poly.var(c) * Poly({m: 1})
    return p, params


def _round(x: Fraction) -> Fraction:
    return Fraction(x).limit_denominator(ROUND_DENOMINATOR)


def instantiate_params(pi: Assignment, values: dict) -> Assignment:
    out = Assignment()
    sub = {k: Poly.const(v) for k, v in values.items()}
    for name, p in pi.items():
        out.set(name, pi.arities[name], p.subs(sub))
    return out


def solve_template(checked, backend: Backend | None = None, max_degree: int = 4) -> SearchResult:
    """Degree loop: solve for template coefficients, round, and confirm by exact instantiation."""
    backend = backend or make_backend()
    fun_vars = dict(checked.fun_vars)
    stats = {"degrees": [], "confirmations": []}
    reasons = []
    for d in range(max_degree + 1):
        pi, params = Assignment(), []
        for name, arity in fun_vars.items():
            p, ps = template(name, arity, d)
            pi.set(name, arity, p)
            params += ps
        g, _ = pi_instantiate(checked, pi)
        matrix = existential_closure_except(g, params)
        try:
            v = backend.check_exists_model(params, matrix)
        except BackendError as exc:
            v = unknown(f"{type(exc).__name__}: {exc}")
        stats["degrees"].append((d, v.status))
        log.info("degree %d: %s", d, v.status)
        if v.status == UNKNOWN:
            reasons.append(f"degree {d}: {v.reason}")
            continue
        if v.status != SAT:
            continue
        values = {c: (v.model.get(c, Fraction(0)) if v.exact else _round(v.model.get(c, 0)))
                  for c in params}
        cand = instantiate_params(pi, values)
        conf = check_instantiation(checked, cand, backend)
        stats["confirmations"].append((d, conf.status))
        if conf.status == TRUE:
            stats["degree"] = d
            return SearchResult(SAT, cand, conf, stats=stats)
        reasons.append(f"degree {d}: candidate not confirmed ({conf.status})")
    reason = "; ".join(reasons) if reasons else f"no polynomial of degree <= {max_degree}"
    return SearchResult(UNKNOWN, reason=reason, stats=stats)


def existential_closure_except(f, keep) -> core.Formula:
    keep = set(keep)
    for v in reversed(core.free_scalar_vars(f)):
        if v not in keep:
            f = core.Exists(v, f)
    return f


__all__ = [
    "Assignment", "Trace", "TraceStep", "SearchResult", "assignment", "parse_assign", "varsep",
    "partial_elim", "app_elim", "pi_instantiate", "check_instantiation", "existential_closure",
    "solve_enumerate", "solve_template", "template", "stage", "stage_size", "rationals",
    "poly_index", "assignment_index", "height", "show_formula", "show_term", "FALSE", "TRUE",
]
