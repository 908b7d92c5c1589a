"""Sorted abstract syntax for formulas over real numbers and smooth real functions.

Terms and formulas are immutable dataclasses.  Parsing produces loosely built
trees; :func:`well_formed` sort-checks them, renames bound variables apart and
returns a :class:`CheckedFormula`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

from .errors import BlowupError, QuantifierError, SortError


# ---------------------------------------------------------------- sorts

@dataclass(frozen=True)
class Sort:
    kind: str  # "R" or "F"
    arity: int = 0

    def __post_init__(self):
        if self.kind == "F" and self.arity < 1:
            raise SortError(f"function sort needs arity >= 1, got {self.arity}")
        if self.kind not in ("R", "F"):
            raise SortError(f"unknown sort kind {self.kind!r}")

    @property
    def is_scalar(self) -> bool:
        return self.kind == "R"

    def __str__(self):
        return "R" if self.is_scalar else f"(F {self.arity})"


SCALAR = Sort("R")


def fun_sort(n: int) -> Sort:
    return Sort("F", n)


# ---------------------------------------------------------------- terms

class Term:
    __slots__ = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True, eq=True, repr=False)
class Var(Term):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, repr=False)
class FunVar(Term):
    name: str
    arity: int

    def __repr__(self):
        return f"FunVar({self.name!r}, {self.arity})"


@dataclass(frozen=True, repr=False)
class Const(Term):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def __repr__(self):
        return f"Const({str(self.value)!r})"


@dataclass(frozen=True, repr=False)
class Add(Term):
    left: Term
    right: Term

    def __repr__(self):
        return f"Add({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Mul(Term):
    left: Term
    right: Term

    def __repr__(self):
        return f"Mul({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class App(Term):
    fn: Term
    args: tuple

    def __repr__(self):
        return f"App({self.fn!r}, {self.args!r})"


@dataclass(frozen=True, repr=False)
class Diff(Term):
    index: int  # 1-based
    fn: Term

    def __repr__(self):
        return f"Diff({self.index}, {self.fn!r})"


@dataclass(frozen=True, repr=False)
class Deriv(Term):
    """A derivative chain collapsed to a multi-index (order-free)."""

    base: FunVar
    beta: tuple

    def __repr__(self):
        return f"Deriv({self.base!r}, {self.beta!r})"


@dataclass(frozen=True, repr=False)
class UApp(Term):
    """Application of an uninterpreted function symbol (output of ``tau``)."""

    name: str
    args: tuple

    def __repr__(self):
        return f"UApp({self.name!r}, {self.args!r})"


@dataclass(frozen=True, repr=False)
class Transcendental(Term):
    name: str
    args: tuple

    def __repr__(self):
        return f"Transcendental({self.name!r}, {self.args!r})"


def const(v) -> Const:
    return Const(Fraction(v))


# ---------------------------------------------------------------- formulas

RELATIONS = ("=", "<=", "<", ">=", ">", "!=")

NEGATED_REL = {"=": "!=", "!=": "=", "<=": ">", ">": "<=", "<": ">=", ">=": "<"}


class Formula:
    __slots__ = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    lhs: Term
    rel: str
    rhs: Term

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise SortError(f"unknown relation {self.rel!r}")

    def __repr__(self):
        return f"Atom({self.lhs!r}, {self.rel!r}, {self.rhs!r})"


@dataclass(frozen=True, repr=False)
class And(Formula):
    args: tuple

    def __repr__(self):
        return f"And({self.args!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    args: tuple

    def __repr__(self):
        return f"Or({self.args!r})"


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula

    def __repr__(self):
        return f"Not({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    lhs: Formula
    rhs: Formula

    def __repr__(self):
        return f"Implies({self.lhs!r}, {self.rhs!r})"


@dataclass(frozen=True, repr=False)
class Forall(Formula):
    var: str
    body: Formula
    sort: Sort = SCALAR

    def __repr__(self):
        return f"Forall({self.var!r}, {self.body!r})"


@dataclass(frozen=True, repr=False)
class Exists(Formula):
    var: str
    body: Formula
    sort: Sort = SCALAR

    def __repr__(self):
        return f"Exists({self.var!r}, {self.body!r})"


TRUE = And(())
FALSE = Or(())

Quantifier = (Forall, Exists)


def conj(*fs: Formula) -> Formula:
    return fs[0] if len(fs) == 1 else And(tuple(fs))


# ---------------------------------------------------------------- traversal

def term_children(t: Term) -> tuple:
    if isinstance(t, (Add, Mul)):
        return (t.left, t.right)
    if isinstance(t, App):
        return (t.fn,) + t.args
    if isinstance(t, Diff):
        return (t.fn,)
    if isinstance(t, Deriv):
        return (t.base,)
    if isinstance(t, (UApp, Transcendental)):
        return t.args
    return ()


def iter_subterms(t: Term) -> Iterator[Term]:
    """Pre-order, left to right."""
    yield t
    for c in term_children(t):
        yield from iter_subterms(c)


def formula_terms(f: Formula) -> Iterator[Term]:
    """Top-level terms of every atom, left to right."""
    if isinstance(f, Atom):
        yield f.lhs
        yield f.rhs
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from formula_terms(a)
    elif isinstance(f, Not):
        yield from formula_terms(f.arg)
    elif isinstance(f, Implies):
        yield from formula_terms(f.lhs)
        yield from formula_terms(f.rhs)
    elif isinstance(f, Quantifier):
        yield from formula_terms(f.body)
    else:
        raise TypeError(f"not a formula: {f!r}")


def iter_atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from iter_atoms(a)
    elif isinstance(f, Not):
        yield from iter_atoms(f.arg)
    elif isinstance(f, Implies):
        yield from iter_atoms(f.lhs)
        yield from iter_atoms(f.rhs)
    elif isinstance(f, Quantifier):
        yield from iter_atoms(f.body)


def map_term(t: Term, fn: Callable[[Term], Term]) -> Term:
    """Rebuild ``t`` bottom-up, applying ``fn`` to every rebuilt node."""
    if isinstance(t, Add):
        t = Add(map_term(t.left, fn), map_term(t.right, fn))
    elif isinstance(t, Mul):
        t = Mul(map_term(t.left, fn), map_term(t.right, fn))
    elif isinstance(t, App):
        t = App(map_term(t.fn, fn), tuple(map_term(a, fn) for a in t.args))
    elif isinstance(t, Diff):
        t = Diff(t.index, map_term(t.fn, fn))
    elif isinstance(t, UApp):
        t = UApp(t.name, tuple(map_term(a, fn) for a in t.args))
    elif isinstance(t, Transcendental):
        t = Transcendental(t.name, tuple(map_term(a, fn) for a in t.args))
    return fn(t)


def map_atoms(f: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, And):
        return And(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Not):
        return Not(map_atoms(f.arg, fn))
    if isinstance(f, Implies):
        return Implies(map_atoms(f.lhs, fn), map_atoms(f.rhs, fn))
    if isinstance(f, Forall):
        return Forall(f.var, map_atoms(f.body, fn), f.sort)
    if isinstance(f, Exists):
        return Exists(f.var, map_atoms(f.body, fn), f.sort)
    raise TypeError(f"not a formula: {f!r}")


def map_formula_terms(f: Formula, fn: Callable[[Term], Term]) -> Formula:
    return map_atoms(f, lambda a: Atom(map_term(a.lhs, fn), a.rel, map_term(a.rhs, fn)))


def has_quantifier(f: Formula) -> bool:
    if isinstance(f, Quantifier):
        return True
    if isinstance(f, (And, Or)):
        return any(has_quantifier(a) for a in f.args)
    if isinstance(f, Not):
        return has_quantifier(f.arg)
    if isinstance(f, Implies):
        return has_quantifier(f.lhs) or has_quantifier(f.rhs)
    return False


def term_vars(t: Term) -> set:
    return {s.name for s in iter_subterms(t) if isinstance(s, Var)}


def free_scalar_vars(f: Formula) -> list:
    """Free scalar variables in order of first occurrence."""
    out: dict = {}

    def go(g, bound):
        if isinstance(g, Atom):
            for t in (g.lhs, g.rhs):
                for s in iter_subterms(t):
                    if isinstance(s, Var) and s.name not in bound:
                        out.setdefault(s.name, None)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                go(a, bound)
        elif isinstance(g, Not):
            go(g.arg, bound)
        elif isinstance(g, Implies):
            go(g.lhs, bound)
            go(g.rhs, bound)
        elif isinstance(g, Quantifier):
            go(g.body, bound | {g.var})

    go(f, frozenset())
    return list(out)


def fun_vars_of(f: Formula) -> dict:
    """Function variables (name -> arity) in order of first occurrence."""
    out: dict = {}
    for t in formula_terms(f):
        for s in iter_subterms(t):
            if isinstance(s, FunVar):
                out.setdefault(s.name, s.arity)
    return out


def count_ops(f: Formula) -> tuple:
    """(#Diff, #App) across the formula."""
    nd = na = 0
    for t in formula_terms(f):
        for s in iter_subterms(t):
            if isinstance(s, (Diff, Deriv)):
                nd += 1 if isinstance(s, Diff) else sum(s.beta)
            elif isinstance(s, App):
                na += 1
    return nd, na


# ---------------------------------------------------------------- well-formedness

@dataclass(frozen=True)
class CheckedFormula:
    formula: Formula
    fun_vars: dict = field(default_factory=dict)  # name -> arity
    free_vars: tuple = ()

    def __str__(self):
        return show(self.formula)


def sort_of(t: Term) -> Sort:
    if isinstance(t, (Var, Const, UApp)):
        if isinstance(t, UApp):
            for a in t.args:
                _expect_scalar(a, "uninterpreted application argument")
        return SCALAR
    if isinstance(t, FunVar):
        return fun_sort(t.arity)
    if isinstance(t, (Add, Mul)):
        op = "+" if isinstance(t, Add) else "*"
        _expect_scalar(t.left, f"argument of {op}")
        _expect_scalar(t.right, f"argument of {op}")
        return SCALAR
    if isinstance(t, App):
        fs = sort_of(t.fn)
        if fs.is_scalar:
            raise SortError(f"app applied to scalar term {show(t.fn)}")
        if len(t.args) != fs.arity:
            raise SortError(
                f"arity mismatch: {show(t.fn)} has sort {fs} but got {len(t.args)} argument(s)")
        for a in t.args:
            _expect_scalar(a, "app argument")
        return SCALAR
    if isinstance(t, Diff):
        fs = sort_of(t.fn)
        if fs.is_scalar:
            raise SortError(f"d applied to scalar term {show(t.fn)}")
        if not 1 <= t.index <= fs.arity:
            raise SortError(f"derivative index {t.index} out of range for sort {fs}")
        return fs
    if isinstance(t, Deriv):
        if len(t.beta) != t.base.arity:
            raise SortError(f"multi-index {t.beta} does not match arity {t.base.arity}")
        return fun_sort(t.base.arity)
    if isinstance(t, Transcendental):
        for a in t.args:
            _expect_scalar(a, f"argument of {t.name}")
        return SCALAR
    raise TypeError(f"not a term: {t!r}")


def _expect_scalar(t, what):
    if not sort_of(t).is_scalar:
        raise SortError(f"{what} must be scalar, got {show(t)} of sort {sort_of(t)}")


def well_formed(f: Formula) -> CheckedFormula:
    """Sort-check ``f`` and make bound variable names unique.

    A bound variable keeps its name unless that name is free elsewhere, names a
    function variable, or is bound by an earlier quantifier; then it becomes
    ``name@k``.

    Raises SortError on ill-sorted terms and QuantifierError when a
    quantifier binds a function variable.
    """
    arities: dict = {}
    for t in formula_terms(f):
        for s in iter_subterms(t):
            if isinstance(s, FunVar):
                if arities.setdefault(s.name, s.arity) != s.arity:
                    raise SortError(f"function variable {s.name} used with two arities")
    _check_quantifiers(f)
    for a in iter_atoms(f):
        _expect_scalar(a.lhs, "atom side")
        _expect_scalar(a.rhs, "atom side")

    free = free_scalar_vars(f)
    taken = set(free) | set(arities)
    counter = itertools.count(1)

    def fresh(name):
        if name not in taken:
            taken.add(name)
            return name
        base = name.split("@", 1)[0]
        while True:
            cand = f"{base}@{next(counter)}"
            if cand not in taken:
                taken.add(cand)
                return cand

    renamed = _rename_bound(f, {}, fresh)
    return CheckedFormula(renamed, dict(fun_vars_of(renamed)), tuple(free))


def _check_quantifiers(f):
    if isinstance(f, Quantifier):
        if not f.sort.is_scalar:
            raise QuantifierError(
                f"quantification over function variable {f.var} is not supported")
        _check_quantifiers(f.body)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _check_quantifiers(a)
    elif isinstance(f, Not):
        _check_quantifiers(f.arg)
    elif isinstance(f, Implies):
        _check_quantifiers(f.lhs)
        _check_quantifiers(f.rhs)


def rename_vars(t: Term, mapping: dict) -> Term:
    if not mapping:
        return t
    return map_term(t, lambda s: Var(mapping[s.name]) if isinstance(s, Var) and s.name in mapping else s)


def _rename_bound(f, mapping, fresh):
    if isinstance(f, Atom):
        return Atom(rename_vars(f.lhs, mapping), f.rel, rename_vars(f.rhs, mapping))
    if isinstance(f, And):
        return And(tuple(_rename_bound(a, mapping, fresh) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_rename_bound(a, mapping, fresh) for a in f.args))
    if isinstance(f, Not):
        return Not(_rename_bound(f.arg, mapping, fresh))
    if isinstance(f, Implies):
        return Implies(_rename_bound(f.lhs, mapping, fresh), _rename_bound(f.rhs, mapping, fresh))
    if isinstance(f, Quantifier):
        new = fresh(f.var)
        body = _rename_bound(f.body, {**mapping, f.var: new}, fresh)
        return type(f)(new, body, f.sort)
    raise TypeError(f"not a formula: {f!r}")


def alpha_equal(f: Formula, g: Formula) -> bool:
    """Structural equality up to consistent renaming of bound variables."""

    def go(a, b, env_a, env_b, depth):
        if type(a) is not type(b):
            return False
        if isinstance(a, Atom):
            return a.rel == b.rel and _teq(a.lhs, b.lhs, env_a, env_b) and _teq(a.rhs, b.rhs, env_a, env_b)
        if isinstance(a, (And, Or)):
            return len(a.args) == len(b.args) and all(
                go(x, y, env_a, env_b, depth) for x, y in zip(a.args, b.args))
        if isinstance(a, Not):
            return go(a.arg, b.arg, env_a, env_b, depth)
        if isinstance(a, Implies):
            return go(a.lhs, b.lhs, env_a, env_b, depth) and go(a.rhs, b.rhs, env_a, env_b, depth)
        if isinstance(a, Quantifier):
            return a.sort == b.sort and go(
                a.body, b.body, {**env_a, a.var: depth}, {**env_b, b.var: depth}, depth + 1)
        return False

    return go(f, g, {}, {}, 0)


def _teq(s, t, env_s, env_t):
    if isinstance(s, Var) and isinstance(t, Var):
        if s.name in env_s or t.name in env_t:
            return env_s.get(s.name, -1) == env_t.get(t.name, -2)
        return s.name == t.name
    if type(s) is not type(t):
        return False
    if isinstance(s, (FunVar, Const)):
        return s == t
    if isinstance(s, Diff) and s.index != t.index:
        return False
    if isinstance(s, Deriv) and s.beta != t.beta:
        return False
    if isinstance(s, (UApp, Transcendental)) and s.name != t.name:
        return False
    cs, ct = term_children(s), term_children(t)
    return len(cs) == len(ct) and all(_teq(x, y, env_s, env_t) for x, y in zip(cs, ct))


# ---------------------------------------------------------------- fragments

@dataclass(frozen=True)
class Fragment:
    kind: str  # QuantifierFree | ScalarQuantified | Unsupported
    reason: str = ""

    def __str__(self):
        return self.kind if not self.reason else f"{self.kind}({self.reason})"


QUANTIFIER_FREE = "QuantifierFree"
SCALAR_QUANTIFIED = "ScalarQuantified"
UNSUPPORTED = "Unsupported"


def is_function_algebraic(f) -> bool:
    f = f.formula if isinstance(f, CheckedFormula) else f
    return not any(isinstance(s, Transcendental)
                   for t in formula_terms(f) for s in iter_subterms(t))


def classify_fragment(f) -> Fragment:
    g = f.formula if isinstance(f, CheckedFormula) else f
    if not is_function_algebraic(g):
        names = sorted({s.name for t in formula_terms(g) for s in iter_subterms(t)
                        if isinstance(s, Transcendental)})
        return Fragment(UNSUPPORTED, "transcendental: " + ", ".join(names))
    if has_quantifier(g):
        return Fragment(SCALAR_QUANTIFIED)
    return Fragment(QUANTIFIER_FREE)


# ---------------------------------------------------------------- normal forms

DEFAULT_DNF_CAP = 4096


def to_nnf(f: Formula, negate: bool = False) -> Formula:
    """Push negations to atoms; implications are expanded."""
    if isinstance(f, Atom):
        return Atom(f.lhs, NEGATED_REL[f.rel], f.rhs) if negate else f
    if isinstance(f, Not):
        return to_nnf(f.arg, not negate)
    if isinstance(f, Implies):
        return to_nnf(Or((Not(f.lhs), f.rhs)), negate)
    if isinstance(f, (And, Or)):
        flip = isinstance(f, And) == negate  # And under negation becomes Or
        cls = Or if flip else And
        return cls(tuple(to_nnf(a, negate) for a in f.args))
    if isinstance(f, Quantifier):
        cls = type(f)
        if negate:
            cls = Exists if isinstance(f, Forall) else Forall
        return cls(f.var, to_nnf(f.body, negate), f.sort)
    raise TypeError(f"not a formula: {f!r}")


def to_dnf(f, cap: int = DEFAULT_DNF_CAP) -> list:
    """Quantifier-free formula -> list of atom lists whose disjunction is equivalent."""
    g = f.formula if isinstance(f, CheckedFormula) else f
    if has_quantifier(g):
        raise ValueError("to_dnf needs a quantifier-free formula")

    def go(h):
        if isinstance(h, Atom):
            return [(h,)]
        if isinstance(h, Or):
            out = []
            for a in h.args:
                out.extend(go(a))
                if len(out) > cap:
                    raise BlowupError(f"DNF exceeds {cap} disjuncts")
            return out
        # And
        out = [()]
        for a in h.args:
            sub = go(a)
            if len(out) * len(sub) > cap:
                raise BlowupError(f"DNF exceeds {cap} disjuncts")
            out = [x + y for x in out for y in sub]
        return out

    return [list(d) for d in go(to_nnf(g))]


# ---------------------------------------------------------------- evaluation

def compare(lhs, rel: str, rhs) -> bool:
    if rel == "=":
        return lhs == rhs
    if rel == "!=":
        return lhs != rhs
    if rel == "<=":
        return lhs <= rhs
    if rel == "<":
        return lhs < rhs
    if rel == ">=":
        return lhs >= rhs
    if rel == ">":
        return lhs > rhs
    raise ValueError(rel)


def eval_term(t: Term, env: dict, app: Callable | None = None):
    """Evaluate a scalar term; ``app(fn_term, arg_values)`` handles applications."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Add):
        return eval_term(t.left, env, app) + eval_term(t.right, env, app)
    if isinstance(t, Mul):
        return eval_term(t.left, env, app) * eval_term(t.right, env, app)
    if isinstance(t, (App, UApp)):
        if app is None:
            raise ValueError(f"no interpretation for {show(t)}")
        args = tuple(eval_term(a, env, app) for a in t.args)
        return app(t.fn if isinstance(t, App) else t.name, args)
    raise ValueError(f"cannot evaluate {show(t)}")


def eval_formula(f: Formula, env: dict, app: Callable | None = None) -> bool:
    """Evaluate a quantifier-free formula exactly."""
    if isinstance(f, Atom):
        return compare(eval_term(f.lhs, env, app), f.rel, eval_term(f.rhs, env, app))
    if isinstance(f, And):
        return all(eval_formula(a, env, app) for a in f.args)
    if isinstance(f, Or):
        return any(eval_formula(a, env, app) for a in f.args)
    if isinstance(f, Not):
        return not eval_formula(f.arg, env, app)
    if isinstance(f, Implies):
        return (not eval_formula(f.lhs, env, app)) or eval_formula(f.rhs, env, app)
    raise ValueError("eval_formula handles quantifier-free formulas only")


# ---------------------------------------------------------------- display

def show(x) -> str:
    """Human-oriented infix rendering (not re-parseable; see surface.to_text)."""
    if isinstance(x, CheckedFormula):
        return show(x.formula)
    if isinstance(x, Const):
        return str(x.value) if x.value >= 0 else f"({x.value})"
    if isinstance(x, Var):
        return x.name
    if isinstance(x, FunVar):
        return x.name
    if isinstance(x, Add):
        return f"{show(x.left)} + {_show_factor(x.right, add=True)}"
    if isinstance(x, Mul):
        return f"{_show_factor(x.left)}*{_show_factor(x.right)}"
    if isinstance(x, App):
        return f"app({', '.join(show(a) for a in (x.fn,) + x.args)})"
    if isinstance(x, UApp):
        return f"{x.name}({', '.join(show(a) for a in x.args)})"
    if isinstance(x, Transcendental):
        return f"{x.name}({', '.join(show(a) for a in x.args)})"
    if isinstance(x, Diff):
        return f"d{x.index}{_show_fn(x.fn)}"
    if isinstance(x, Deriv):
        return f"D{list(x.beta)}{x.base.name}"
    if isinstance(x, Atom):
        return f"{show(x.lhs)} {x.rel} {show(x.rhs)}"
    if isinstance(x, And):
        return "true" if not x.args else " & ".join(_show_sub(a) for a in x.args)
    if isinstance(x, Or):
        return "false" if not x.args else " | ".join(_show_sub(a) for a in x.args)
    if isinstance(x, Not):
        return f"~{_show_sub(x.arg)}"
    if isinstance(x, Implies):
        return f"{_show_sub(x.lhs)} -> {_show_sub(x.rhs)}"
    if isinstance(x, Forall):
        return f"forall {x.var}. {show(x.body)}"
    if isinstance(x, Exists):
        return f"exists {x.var}. {show(x.body)}"
    return repr(x)


def _show_fn(t):
    return show(t) if isinstance(t, (FunVar, Diff)) else f"({show(t)})"


def _show_factor(t, add=False):
    return f"({show(t)})" if isinstance(t, Add) else show(t)


def _show_sub(f):
    if isinstance(f, (Atom, Not)):
        return show(f)
    return f"({show(f)})"
