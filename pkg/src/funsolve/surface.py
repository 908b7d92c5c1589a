"""Concrete syntax for ``.fnl`` problem files.

Grammar (S-expressions)::

    (declare-fun X (F 2))   (declare-const t R)
    (assert <formula>)      (set-option :backend internal)

    term    := numeral | decimal | symbol | (/ p q) | (+ a b ...) | (* a b ...)
             | (- a b) | (- a) | (^ a k) | (app X a1 ... an) | (d i X)
             | (exp a) | (sin a) | ...            ; parsed, then rejected downstream
    formula := (= a b) | (<= a b) | (< a b) | (>= a b) | (> a b)
             | (and f ...) | (or f ...) | (not f) | (=> f g) | true | false
             | (forall ((x R)) f) | (forall ((x R (lo hi))) f) | (exists ...)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import core
from .core import (Add, And, App, Atom, Const, Deriv, Diff, Exists, Forall, FunVar,
                   Implies, Mul, Not, Or, Sort, Transcendental, UApp, Var)
from .errors import Redeclaration, SyntaxError_, UndeclaredSymbol
from .sexpr import Atom as SAtom
from .sexpr import SList, parse_all

TRANSCENDENTAL = ("exp", "sin", "cos", "tan", "log")
RELS = {"=": "=", "<=": "<=", "<": "<", ">=": ">=", ">": ">"}
IGNORED_COMMANDS = ("check-sat", "get-model", "exit", "set-logic", "set-info")


@dataclass
class ProblemFile:
    declarations: dict = field(default_factory=dict)  # name -> Sort
    assertions: list = field(default_factory=list)
    options: dict = field(default_factory=dict)

    @property
    def formula(self) -> core.Formula:
        return core.conj(*self.assertions) if self.assertions else core.TRUE


# ---------------------------------------------------------------- parsing

def parse_number(text: str):
    """Numeral or decimal literal -> Fraction, else None."""
    body = text[1:] if text.startswith("-") else text
    if not body or not (body[0].isdigit()):
        return None
    try:
        return Fraction(text)
    except ValueError:
        return None


class _Parser:
    def __init__(self, decls):
        self.decls = decls

    def err(self, node, msg):
        return SyntaxError_(msg, node.line, node.col)

    def sort(self, node) -> Sort:
        if isinstance(node, SAtom) and node.text == "R":
            return core.SCALAR
        if (isinstance(node, SList) and len(node) == 2 and isinstance(node[0], SAtom)
                and node[0].text == "F" and isinstance(node[1], SAtom) and node[1].text.isdigit()
                and int(node[1].text) >= 1):
            return core.fun_sort(int(node[1].text))
        raise self.err(node, "expected sort R or (F n) with n >= 1")

    # terms ---------------------------------------------------------

    def term(self, node, scope):
        if isinstance(node, SAtom):
            num = None if node.quoted else parse_number(node.text)
            if num is not None:
                return Const(num)
            return self.symbol(node, scope)
        if not node.items:
            raise self.err(node, "empty term")
        head = node[0]
        if not isinstance(head, SAtom):
            raise self.err(head, "expected operator symbol")
        op, args = head.text, node.items[1:]
        if op in ("+", "*"):
            if not args:
                raise self.err(node, f"({op}) needs at least one argument")
            ts = [self.term(a, scope) for a in args]
            cls = Add if op == "+" else Mul
            out = ts[0]
            for t in ts[1:]:
                out = cls(out, t)
            return out
        if op == "-":
            if not args:
                raise self.err(node, "(-) needs an argument")
            ts = [self.term(a, scope) for a in args]
            if len(ts) == 1:
                return _negate(ts[0])
            out = ts[0]
            for t in ts[1:]:
                out = Add(out, Mul(Const(-1), t))
            return out
        if op == "/":
            if len(args) != 2:
                raise self.err(node, "(/ p q) takes two constants")
            p, q = (self.term(a, scope) for a in args)
            if not (isinstance(p, Const) and isinstance(q, Const)):
                raise self.err(node, "(/ p q) needs constant operands")
            if q.value == 0:
                raise self.err(node, "division by zero")
            return Const(p.value / q.value)
        if op == "^":
            if len(args) != 2 or not isinstance(args[1], SAtom) or not args[1].text.isdigit():
                raise self.err(node, "(^ a k) needs a natural-number exponent")
            base, k = self.term(args[0], scope), int(args[1].text)
            if k == 0:
                return Const(1)
            out = base
            for _ in range(k - 1):
                out = Mul(out, base)
            return out
        if op == "app":
            if not args:
                raise self.err(node, "(app X a1 ... an) needs a function term")
            return App(self.term(args[0], scope), tuple(self.term(a, scope) for a in args[1:]))
        if op == "d":
            if len(args) != 2 or not isinstance(args[0], SAtom) or not args[0].text.isdigit():
                raise self.err(node, "(d i X) needs a positive index and a function term")
            return Diff(int(args[0].text), self.term(args[1], scope))
        if op in TRANSCENDENTAL:
            return Transcendental(op, tuple(self.term(a, scope) for a in args))
        raise self.err(head, f"unknown term operator {op!r}")

    def symbol(self, node, scope):
        name = node.text
        if name in scope:
            s = scope[name]
        elif name in self.decls:
            s = self.decls[name]
        else:
            raise UndeclaredSymbol(f"undeclared symbol {name!r}", node.line, node.col)
        return Var(name) if s.is_scalar else FunVar(name, s.arity)

    # formulas ------------------------------------------------------

    def formula(self, node, scope):
        if isinstance(node, SAtom):
            if node.text == "true":
                return core.TRUE
            if node.text == "false":
                return core.FALSE
            raise self.err(node, f"expected formula, got {node.text!r}")
        if not node.items or not isinstance(node[0], SAtom):
            raise self.err(node, "expected formula")
        op, args = node[0].text, node.items[1:]
        if op in RELS:
            if len(args) < 2:
                raise self.err(node, f"({op} ...) needs two arguments")
            ts = [self.term(a, scope) for a in args]
            atoms = [Atom(a, RELS[op], b) for a, b in zip(ts, ts[1:])]
            return atoms[0] if len(atoms) == 1 else And(tuple(atoms))
        if op == "and":
            return And(tuple(self.formula(a, scope) for a in args))
        if op == "or":
            return Or(tuple(self.formula(a, scope) for a in args))
        if op == "not":
            if len(args) != 1:
                raise self.err(node, "(not f) takes one argument")
            return Not(self.formula(args[0], scope))
        if op == "=>":
            if len(args) < 2:
                raise self.err(node, "(=> f g) needs two arguments")
            fs = [self.formula(a, scope) for a in args]
            out = fs[-1]
            for f in reversed(fs[:-1]):
                out = Implies(f, out)
            return out
        if op in ("forall", "exists"):
            return self.quantifier(node, op, args, scope)
        raise self.err(node[0], f"unknown formula operator {op!r}")

    def quantifier(self, node, op, args, scope):
        if len(args) != 2 or not isinstance(args[0], SList) or not args[0].items:
            raise self.err(node, f"({op} ((x R)) f) expected")
        binders = []
        inner = dict(scope)
        for b in args[0]:
            if not isinstance(b, SList) or len(b) not in (2, 3) or not isinstance(b[0], SAtom):
                raise self.err(b, "binder must be (x R) or (x R (lo hi))")
            name = b[0].text
            srt = self.sort(b[1])
            bounds = None
            if len(b) == 3:
                if not srt.is_scalar:
                    raise self.err(b, "bounds are only allowed on scalar binders")
                if not isinstance(b[2], SList) or len(b[2]) != 2:
                    raise self.err(b[2], "bounds must be (lo hi)")
                lo, hi = (self.term(x, {}) for x in b[2])
                if not (isinstance(lo, Const) and isinstance(hi, Const)):
                    raise self.err(b[2], "quantifier bounds must be rational constants")
                bounds = (lo, hi)
            binders.append((name, srt, bounds))
            inner[name] = srt
        body = self.formula(args[1], inner)
        for name, srt, bounds in reversed(binders):
            body = bounded_quantifier(op, name, body, bounds, srt)
        return body


def bounded_quantifier(op, name, body, bounds=None, sort=core.SCALAR):
    """Lower ``forall x in [lo, hi]`` / ``exists x in [lo, hi]`` to core syntax."""
    if bounds is not None:
        lo, hi = bounds
        guard = And((Atom(lo, "<=", Var(name)), Atom(Var(name), "<=", hi)))
        body = Implies(guard, body) if op == "forall" else And((guard, body))
    cls = Forall if op == "forall" else Exists
    return cls(name, body, sort)


def _negate(t):
    if isinstance(t, Const):
        return Const(-t.value)
    return Mul(Const(-1), t)


def parse(text: str) -> ProblemFile:
    """Parse problem text.  The problem's formula is the conjunction of its assertions."""
    prob = ProblemFile()
    parser = _Parser(prob.declarations)
    for cmd in parse_all(text):
        if not isinstance(cmd, SList) or not cmd.items or not isinstance(cmd[0], SAtom):
            raise SyntaxError_("expected a command like (assert ...)", cmd.line, cmd.col)
        op, args = cmd[0].text, cmd.items[1:]
        if op in ("declare-fun", "declare-const"):
            if op == "declare-fun":
                # accept both (declare-fun X (F 1)) and SMT-LIB style (declare-fun x () R)
                if len(args) == 3 and isinstance(args[1], SList) and not args[1].items:
                    args = (args[0], args[2])
            if len(args) != 2 or not isinstance(args[0], SAtom):
                raise SyntaxError_(f"({op} name sort) expected", cmd.line, cmd.col)
            name = args[0].text
            if "@" in name:
                raise SyntaxError_(f"'@' is reserved in symbol names: {name!r}",
                                   args[0].line, args[0].col)
            if parse_number(name) is not None or name in RELS or name in ("true", "false"):
                raise SyntaxError_(f"invalid symbol name {name!r}", args[0].line, args[0].col)
            if name in prob.declarations:
                raise Redeclaration(f"symbol {name!r} declared twice", args[0].line, args[0].col)
            prob.declarations[name] = parser.sort(args[1])
        elif op == "assert":
            if len(args) != 1:
                raise SyntaxError_("(assert f) takes one formula", cmd.line, cmd.col)
            prob.assertions.append(parser.formula(args[0], {}))
        elif op == "set-option":
            if len(args) != 2 or not isinstance(args[0], SAtom) or not args[0].text.startswith(":"):
                raise SyntaxError_("(set-option :key value) expected", cmd.line, cmd.col)
            key = args[0].text[1:]
            val = args[1].text if isinstance(args[1], SAtom) else None
            if val is None:
                raise SyntaxError_("option values must be atoms", args[1].line, args[1].col)
            prob.options[key] = int(val) if val.isdigit() else val
        elif op in IGNORED_COMMANDS:
            continue
        else:
            raise SyntaxError_(f"unknown command {op!r}", cmd.line, cmd.col)
    return prob


def parse_formula(text: str, declarations: dict) -> core.Formula:
    """Parse a single formula against existing declarations."""
    nodes = parse_all(text)
    if len(nodes) != 1:
        raise SyntaxError_("expected exactly one formula")
    return _Parser(declarations).formula(nodes[0], {})


def parse_term(text: str, declarations: dict) -> core.Term:
    nodes = parse_all(text)
    if len(nodes) != 1:
        raise SyntaxError_("expected exactly one term")
    return _Parser(declarations).term(nodes[0], {})


# ---------------------------------------------------------------- printing

def _sym(name: str) -> str:
    if not name or any(c.isspace() or c in '()|;"' for c in name):
        return f"|{name}|"
    return name


def const_text(v: Fraction) -> str:
    if v < 0:
        return f"(- {const_text(-v)})"
    if v.denominator == 1:
        return str(v.numerator)
    return f"(/ {v.numerator} {v.denominator})"


def term_text(t: core.Term) -> str:
    if isinstance(t, Const):
        return const_text(t.value)
    if isinstance(t, (Var, FunVar)):
        return _sym(t.name)
    if isinstance(t, (Add, Mul)):
        cls = type(t)
        parts = []
        while isinstance(t, cls):
            parts.append(t.right)
            t = t.left
        parts.append(t)
        op = "+" if cls is Add else "*"
        return f"({op} {' '.join(term_text(p) for p in reversed(parts))})"
    if isinstance(t, App):
        return f"(app {' '.join(term_text(x) for x in (t.fn,) + t.args)})"
    if isinstance(t, Diff):
        return f"(d {t.index} {term_text(t.fn)})"
    if isinstance(t, Deriv):
        out = _sym(t.base.name)
        for i in reversed(range(len(t.beta))):
            for _ in range(t.beta[i]):
                out = f"(d {i + 1} {out})"
        return out
    if isinstance(t, UApp):
        return f"({_sym(t.name)} {' '.join(term_text(a) for a in t.args)})"
    if isinstance(t, Transcendental):
        return f"({t.name} {' '.join(term_text(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


def to_text(f) -> str:
    """Canonical S-expression text for a formula; ``parse`` of it is alpha-equivalent."""
    if isinstance(f, core.CheckedFormula):
        f = f.formula
    if isinstance(f, Atom):
        if f.rel == "!=":
            return f"(not (= {term_text(f.lhs)} {term_text(f.rhs)}))"
        return f"({f.rel} {term_text(f.lhs)} {term_text(f.rhs)})"
    if isinstance(f, And):
        return "true" if not f.args else f"(and {' '.join(to_text(a) for a in f.args)})"
    if isinstance(f, Or):
        return "false" if not f.args else f"(or {' '.join(to_text(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"(not {to_text(f.arg)})"
    if isinstance(f, Implies):
        return f"(=> {to_text(f.lhs)} {to_text(f.rhs)})"
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        return f"({kw} (({_sym(f.var)} {f.sort})) {to_text(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def problem_text(checked: core.CheckedFormula, options: dict | None = None) -> str:
    """Full problem file with declarations for every free symbol."""
    lines = []
    for k, v in (options or {}).items():
        lines.append(f"(set-option :{k} {v})")
    for name, n in checked.fun_vars.items():
        lines.append(f"(declare-fun {_sym(name)} (F {n}))")
    for name in checked.free_vars:
        lines.append(f"(declare-const {_sym(name)} R)")
    lines.append(f"(assert {to_text(checked.formula)})")
    return "\n".join(lines) + "\n"
