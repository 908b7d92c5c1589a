"""Removal of derivative and app operators, and variable abstraction.

``tau_partial`` replaces every derivative chain by a fresh function symbol
named ``X@d(b1,...,bn)``; chains that differ only in the order of the
partial derivatives map to the same symbol (mixed partials commute for
smooth functions).  ``tau`` then turns app-terms into uninterpreted
applications, and ``purify`` splits a conjunction into an arithmetic part and
a part made only of function-definition equalities.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import core
from .core import App, Atom, Const, Deriv, Diff, FunVar, UApp, Var

_SYMBOL_RE = re.compile(r"^(?P<base>.+)@d\((?P<beta>\d+(?:,\d+)*)\)$")


@dataclass(frozen=True)
class DerivativeSymbol:
    base: str
    beta: tuple

    @property
    def arity(self) -> int:
        return len(self.beta)

    @property
    def name(self) -> str:
        return f"{self.base}@d({','.join(map(str, self.beta))})"

    @classmethod
    def parse(cls, name: str):
        m = _SYMBOL_RE.match(name)
        if not m:
            return None
        return cls(m.group("base"), tuple(int(b) for b in m.group("beta").split(",")))


def _collapse_chain(t):
    """Return (base FunVar, beta) for a Diff/Deriv/FunVar chain."""
    if isinstance(t, FunVar):
        return t, (0,) * t.arity
    if isinstance(t, Deriv):
        return t.base, t.beta
    if isinstance(t, Diff):
        base, beta = _collapse_chain(t.fn)
        beta = list(beta)
        beta[t.index - 1] += 1
        return base, tuple(beta)
    raise TypeError(f"not a function term: {core.show(t)}")


def canonicalize_derivatives(f):
    """Replace each maximal derivative chain by a multi-index annotation."""
    f = f.formula if isinstance(f, core.CheckedFormula) else f

    def fix(t):
        if isinstance(t, Diff):
            base, beta = _collapse_chain(t)
            return Deriv(base, beta)
        return t

    # map_term is bottom-up, so inner Diffs collapse first and the outer
    # Diff sees a Deriv child; _collapse_chain handles both.
    return core.map_formula_terms(f, fix)


def tau_partial(f) -> tuple:
    """Returns (formula without derivative operators, {symbol name: DerivativeSymbol})."""
    g = canonicalize_derivatives(f)
    symbols: dict = {}

    def sym_for(base: FunVar, beta):
        known = DerivativeSymbol.parse(base.name)
        if known is not None and not any(beta):
            s = known
        else:
            s = DerivativeSymbol(base.name, tuple(beta))
        symbols.setdefault(s.name, s)
        return FunVar(s.name, s.arity)

    def fix(t):
        if isinstance(t, App):
            fn = t.fn
            if isinstance(fn, Deriv):
                fn = sym_for(fn.base, fn.beta)
            elif isinstance(fn, FunVar):
                fn = sym_for(fn, (0,) * fn.arity)
            return App(fn, t.args)
        return t

    out = core.map_formula_terms(g, fix)
    return out, symbols


def tau(f) -> core.Formula:
    """Replace app-terms by uninterpreted function applications."""
    f = f.formula if isinstance(f, core.CheckedFormula) else f
    if any(isinstance(s, (Diff, Deriv)) for t in core.formula_terms(f) for s in core.iter_subterms(t)):
        f, _ = tau_partial(f)

    def fix(t):
        if isinstance(t, App):
            if not isinstance(t.fn, FunVar):
                raise TypeError(f"unexpected function term {core.show(t.fn)}")
            return UApp(t.fn.name, t.args)
        return t

    return core.map_formula_terms(f, fix)


# ---------------------------------------------------------------- purification

@dataclass(frozen=True)
class UDef:
    """``var = fname(args...)`` with every argument a variable name."""

    var: str
    fname: str
    args: tuple

    def app(self) -> UApp:
        return UApp(self.fname, tuple(Var(a) for a in self.args))

    def __str__(self):
        return f"{self.var} = {self.fname}({', '.join(self.args)})"


@dataclass
class PurifiedPair:
    pi_r: list  # Atoms over scalar variables only
    pi_u: list  # UDefs
    shared: list  # variables common to both sides, in first-occurrence order of pi_r
    fresh: list = field(default_factory=list)  # names introduced by purification

    def __str__(self):
        r = " & ".join(core.show(a) for a in self.pi_r) or "true"
        u = " & ".join(str(d) for d in self.pi_u) or "true"
        return f"pi_R: {r}\npi_U: {u}\nshared: {{{', '.join(self.shared)}}}"


def purify(conj, prefix: str = "@v") -> PurifiedPair:
    """Variable abstraction of a conjunction of atoms in the combined signature.

    Every uninterpreted application and every non-variable argument of one is
    named by a fresh variable ``@v1, @v2, ...`` (post-order, left to right).
    """
    atoms = list(conj)
    taken = set()
    for a in atoms:
        taken |= core.term_vars(a.lhs) | core.term_vars(a.rhs)
    counter = [0]
    fresh_names: list = []

    def fresh():
        while True:
            counter[0] += 1
            name = f"{prefix}{counter[0]}"
            if name not in taken:
                taken.add(name)
                fresh_names.append(name)
                return name

    app_names: dict = {}  # (fname, argnames) -> var
    arg_names: dict = {}  # arithmetic term -> var
    pi_r: list = []
    pi_u: list = []

    def abstract(t, pending):
        if isinstance(t, UApp):
            names = []
            for a in t.args:
                a2 = abstract(a, pending)
                if isinstance(a2, Var):
                    names.append(a2.name)
                else:
                    if a2 not in arg_names:
                        v = fresh()
                        arg_names[a2] = v
                        pending.append(Atom(Var(v), "=", a2))
                    names.append(arg_names[a2])
            key = (t.name, tuple(names))
            if key not in app_names:
                v = fresh()
                app_names[key] = v
                pi_u.append(UDef(v, t.name, tuple(names)))
            return Var(app_names[key])
        if isinstance(t, core.Add):
            return core.Add(abstract(t.left, pending), abstract(t.right, pending))
        if isinstance(t, core.Mul):
            return core.Mul(abstract(t.left, pending), abstract(t.right, pending))
        if isinstance(t, (Var, Const)):
            return t
        raise TypeError(f"unexpected term in purification: {core.show(t)}")

    for a in atoms:
        pending: list = []
        lhs = abstract(a.lhs, pending)
        rhs = abstract(a.rhs, pending)
        pi_r.extend(pending)
        pi_r.append(Atom(lhs, a.rel, rhs))

    r_vars: dict = {}
    for a in pi_r:
        for t in (a.lhs, a.rhs):
            for s in core.iter_subterms(t):
                if isinstance(s, Var):
                    r_vars.setdefault(s.name, None)
    u_vars = set()
    for d in pi_u:
        u_vars.add(d.var)
        u_vars.update(d.args)
    shared = [v for v in r_vars if v in u_vars]
    return PurifiedPair(pi_r, pi_u, shared, fresh_names)


@dataclass
class Translation:
    """All intermediate forms for one formula, as printed by ``funsolve translate``."""

    partial: core.Formula
    ru: core.Formula
    symbols: dict
    disjuncts: list  # lists of RU atoms
    purified: list  # PurifiedPair per disjunct


def translate(checked, dnf_cap: int = core.DEFAULT_DNF_CAP) -> Translation:
    partial, symbols = tau_partial(checked)
    ru = tau(partial)
    disjuncts = core.to_dnf(ru, cap=dnf_cap)
    return Translation(partial, ru, symbols, disjuncts, [purify(d) for d in disjuncts])
