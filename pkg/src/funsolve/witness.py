"""Smooth witnesses for satisfiable quantifier-free formulas.

From a SAT certificate we number the congruence classes with rationals
(shared variables keep their arithmetic model value), read off a finite table
of prescribed values and derivatives per function variable, and interpolate
that table by a sum of local Taylor polynomials cut off by bump functions::

    F(x) = sum_j  bump_j(x) * f_j(x)

``bump_j`` is identically 1 on a ball of radius r1 around center c_j and 0
outside radius r2, so inside the flat balls F and all its derivatives equal
those of the polynomial f_j and can be evaluated exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import core
from .core import Diff, FunVar, Var
from .errors import CongruenceViolation, DerivativeOrderUnsupported, InconsistentModel
from .poly import Poly, domain_vars, factorial_multi
from .translate import DerivativeSymbol

DEFAULT_NUMERIC_ORDER_CAP = 4


# ---------------------------------------------------------------- numbering and tables

@dataclass
class ClassNumbering:
    classes: list
    r: list  # value per class, aligned with ``classes``
    r_prime: dict  # term -> value

    def value(self, t) -> Fraction:
        return self.r_prime[t]


def build_numbering(classes, model: dict, shared) -> ClassNumbering:
    """Shared-variable classes take the model value; the rest get the smallest unused integers."""
    shared = set(shared)
    values: list = [None] * len(classes)
    for i, c in enumerate(classes):
        vals = {model[t.name] for t in c if isinstance(t, Var) and t.name in shared}
        if len(vals) > 1:
            raise InconsistentModel(
                f"shared variables of one class have different values: {sorted(vals)}")
        if vals:
            values[i] = vals.pop()
    used = {v for v in values if v is not None}
    nxt = 0
    for i in range(len(classes)):
        if values[i] is None:
            while Fraction(nxt) in used:
                nxt += 1
            values[i] = Fraction(nxt)
            used.add(values[i])
    r_prime = {t: values[i] for i, c in enumerate(classes) for t in c}
    return ClassNumbering(list(classes), values, r_prime)


@dataclass
class PartialFunctionTable:
    name: str
    arity: int
    entries: dict = field(default_factory=dict)  # (point tuple, beta tuple) -> Fraction

    def add(self, point, beta, value):
        key = (tuple(point), tuple(beta))
        old = self.entries.get(key)
        if old is not None and old != value:
            raise CongruenceViolation(
                f"{self.name}: conflicting values {old} and {value} at {key}")
        self.entries[key] = value

    def points(self) -> list:
        seen: dict = {}
        for p, _ in self.entries:
            seen.setdefault(p, None)
        return list(seen)


def _symbol(name, symbols):
    s = symbols.get(name) if symbols else None
    return s or DerivativeSymbol.parse(name) or DerivativeSymbol(name, ())


def build_tables(numbering: ClassNumbering, pi_u, symbols=None, fun_vars=None) -> dict:
    """One table per base function variable, merging all its derivative symbols."""
    tables: dict = {}
    for name, n in (fun_vars or {}).items():
        tables[name] = PartialFunctionTable(name, n)
    for d in pi_u:
        sym = _symbol(d.fname, symbols)
        tab = tables.setdefault(sym.base, PartialFunctionTable(sym.base, sym.arity))
        point = tuple(numbering.value(Var(a)) for a in d.args)
        value = numbering.value(Var(d.var))
        if numbering.value(d.app()) != value:
            raise CongruenceViolation(f"{d}: application and its name are in different classes")
        tab.add(point, sym.beta, value)
    return tables


# ---------------------------------------------------------------- interpolation

def _sq_dist(p, q):
    return sum((a - b) * (a - b) for a, b in zip(p, q))


def _sqrt_floor(x: Fraction) -> Fraction:
    """Exact square root when rational, else the rational floor at a fine scale."""
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    scale = 10 ** 6
    while True:
        s = Fraction(math.isqrt(math.floor(x * scale * scale)), scale)
        if s > 0:
            return s
        scale *= 1000


@dataclass
class BumpSumWitness:
    name: str
    arity: int
    centers: list  # tuples of Fractions
    local_polys: list  # Poly in offset variables (x - c), aligned with centers
    r1: Fraction
    r2: Fraction

    @property
    def vars(self) -> tuple:
        return domain_vars(self.arity)

    def flat_center(self, point):
        """Index of the center whose flat ball contains ``point`` (exact), else None."""
        r1sq = self.r1 * self.r1
        for j, c in enumerate(self.centers):
            if _sq_dist(point, c) <= r1sq:
                return j
        return None

    def local_derivative(self, j, beta) -> Poly:
        p = self.local_polys[j]
        for v, b in zip(self.vars, beta):
            p = p.diff(v, b)
        return p


def interpolate(table: PartialFunctionTable) -> BumpSumWitness:
    """Taylor polynomial per center matching every prescribed derivative, plus radii."""
    centers = table.points()
    vars_ = domain_vars(table.arity)
    polys = []
    for c in centers:
        terms = {}
        for (p, beta), val in table.entries.items():
            if p != c:
                continue
            mono = tuple((v, b) for v, b in zip(vars_, beta) if b)
            terms[mono] = Fraction(val) / factorial_multi(beta)
        polys.append(Poly(terms))
    if len(centers) < 2:
        rho = Fraction(1)
    else:
        d2 = min(_sq_dist(a, b) for i, a in enumerate(centers) for b in centers[i + 1:])
        rho = _sqrt_floor(d2) / 2
    return BumpSumWitness(table.name, table.arity, centers, polys, rho / 3, 2 * rho / 3)


# ---------------------------------------------------------------- evaluation

def _psi(t):
    import mpmath
    return mpmath.exp(-1 / t) if t > 0 else mpmath.mpf(0)


def _smoothstep(t):
    a, b = _psi(t), _psi(1 - t)
    return a / (a + b)


def _numeric_value(w: BumpSumWitness, x):
    """F(x) in high-precision floating point."""
    import mpmath
    total = mpmath.mpf(0)
    for j, c in enumerate(w.centers):
        dist = mpmath.sqrt(sum((xi - mpmath.mpf(ci.numerator) / ci.denominator) ** 2
                               for xi, ci in zip(x, c)))
        r1 = mpmath.mpf(w.r1.numerator) / w.r1.denominator
        r2 = mpmath.mpf(w.r2.numerator) / w.r2.denominator
        if dist >= r2:
            continue
        bump = mpmath.mpf(1) if dist <= r1 else 1 - _smoothstep((dist - r1) / (r2 - r1))
        offs = {v: xi - mpmath.mpf(ci.numerator) / ci.denominator
                for v, xi, ci in zip(w.vars, x, c)}
        local = w.local_polys[j].evaluate(offs, zero=mpmath.mpf(0))
        total += bump * local
    return total


def eval_witness(w: BumpSumWitness, x, beta=None, order_cap=DEFAULT_NUMERIC_ORDER_CAP):
    """(D^beta F)(x): exact Fraction inside a flat ball, float elsewhere."""
    beta = tuple(beta) if beta is not None else (0,) * w.arity
    if len(x) != w.arity or len(beta) != w.arity:
        raise ValueError(f"{w.name} has arity {w.arity}")
    if all(isinstance(xi, (int, Fraction)) for xi in x):
        xq = tuple(Fraction(xi) for xi in x)
        j = w.flat_center(xq)
        if j is not None:
            offs = {v: xi - ci for v, xi, ci in zip(w.vars, xq, w.centers[j])}
            return w.local_derivative(j, beta).evaluate(offs)
    import mpmath
    mpmath.mp.dps = 40
    xm = [mpmath.mpf(xi.numerator) / xi.denominator if isinstance(xi, Fraction) else mpmath.mpf(xi)
          for xi in x]
    # outside every support all derivatives vanish
    far = all(sum((float(a) - float(b)) ** 2 for a, b in zip(x, c)) >= float(w.r2) ** 2
              for c in w.centers)
    if far:
        return 0.0
    if not any(beta):
        return float(_numeric_value(w, xm))
    # inside a flat ball (floating point input): differentiate the local polynomial
    for j, c in enumerate(w.centers):
        if sum((float(a) - float(b)) ** 2 for a, b in zip(x, c)) < float(w.r1) ** 2:
            offs = {v: mpmath.mpf(float(xi)) - mpmath.mpf(ci.numerator) / ci.denominator
                    for v, xi, ci in zip(w.vars, x, c)}
            return float(w.local_derivative(j, beta).evaluate(offs, zero=mpmath.mpf(0)))
    if sum(beta) > order_cap:
        raise DerivativeOrderUnsupported(
            f"derivative order {sum(beta)} above numeric cap {order_cap} in the transition band")
    if w.arity == 1:
        val = mpmath.diff(lambda t: _numeric_value(w, [t]), xm[0], beta[0])
    else:
        val = mpmath.diff(lambda *ts: _numeric_value(w, list(ts)), tuple(xm), tuple(beta))
    return float(val)


# ---------------------------------------------------------------- whole-problem witness

@dataclass
class Witness:
    functions: dict  # name -> BumpSumWitness
    scalars: dict  # name -> Fraction
    exact: bool = True
    error_bound: Fraction | None = None

    def app(self, fn, args):
        """Callback for core.eval_term: fn is a FunVar/Diff chain or a symbol name."""
        if isinstance(fn, str):
            sym = DerivativeSymbol.parse(fn) or DerivativeSymbol(fn, (0,) * len(args))
            base, beta = sym.base, sym.beta
        else:
            base, beta = _chain(fn)
        w = self.functions[base]
        return eval_witness(w, args, beta)

    def to_json(self) -> dict:
        return witness_to_json(self)


def _chain(fn):
    if isinstance(fn, FunVar):
        return fn.name, (0,) * fn.arity
    if isinstance(fn, Diff):
        name, beta = _chain(fn.fn)
        beta = list(beta)
        beta[fn.index - 1] += 1
        return name, tuple(beta)
    if isinstance(fn, core.Deriv):
        return fn.base.name, fn.beta
    raise TypeError(f"not a function term: {core.show(fn)}")


def build_witness(cert, checked=None) -> Witness:
    """Assemble numbering, tables and interpolants from a qf certificate."""
    pair = cert.pair
    numbering = build_numbering(cert.euf_classes, cert.model, pair.shared)
    fun_vars = dict(checked.fun_vars) if checked is not None else {}
    tables = build_tables(numbering, pair.pi_u, cert.symbols, fun_vars)
    functions = {name: interpolate(t) for name, t in tables.items()}
    scalar_names = list(checked.free_vars) if checked is not None else sorted(
        {v for a in cert.disjunct for v in core.term_vars(a.lhs) | core.term_vars(a.rhs)})
    r_vars = {v for a in pair.pi_r for v in core.term_vars(a.lhs) | core.term_vars(a.rhs)}
    scalars = {}
    for v in scalar_names:
        if v in r_vars and v in cert.model:
            scalars[v] = cert.model[v]
        elif Var(v) in numbering.r_prime:
            scalars[v] = numbering.value(Var(v))
        else:
            scalars[v] = cert.model.get(v, Fraction(0))
    return Witness(functions, scalars, cert.exact, cert.error_bound)


# ---------------------------------------------------------------- verification

@dataclass
class Verification:
    ok: bool
    exact: bool = True
    failed: int | None = None  # index of the failing atom in the checked disjunct
    atom: str = ""
    width: Fraction | None = None

    def __str__(self):
        if self.ok:
            return "Verified" + ("" if self.exact else f"(approximate, width {float(self.width):.3g})")
        return f"Failed(atom {self.failed}: {self.atom})"


class Interval:
    """Closed rational interval with the arithmetic needed for polynomial evaluation."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        self.lo = Fraction(lo)
        self.hi = Fraction(lo if hi is None else hi)

    def _c(self, o):
        return o if isinstance(o, Interval) else Interval(o)

    def __add__(self, o):
        o = self._c(o)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, o):
        return self + (-self._c(o))

    def __rsub__(self, o):
        return self._c(o) - self

    def __mul__(self, o):
        o = self._c(o)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(ps), max(ps))

    __rmul__ = __mul__

    @property
    def width(self):
        return self.hi - self.lo

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"


def _interval_app(witness: Witness):
    def app(fn, args):
        if isinstance(fn, str):
            sym = DerivativeSymbol.parse(fn)
            base, beta = sym.base, sym.beta
        else:
            base, beta = _chain(fn)
        w = witness.functions[base]
        for j, c in enumerate(w.centers):
            d = Interval(0)
            for a, ci in zip(args, c):
                diff = a - ci
                sq = diff * diff
                d = d + Interval(max(sq.lo, 0), sq.hi)
            if d.hi <= w.r1 * w.r1:
                offs = {v: a - ci for v, a, ci in zip(w.vars, args, c)}
                return w.local_derivative(j, beta).evaluate(offs, zero=Interval(0))
        raise ValueError(f"interval point for {base} is not inside a flat region")
    return app


def _check_atom_interval(diff: Interval, rel: str) -> str:
    """'yes', 'no', or 'maybe' for ``diff rel 0``."""
    lo, hi = diff.lo, diff.hi
    if rel == "=":
        return "yes" if lo == hi == 0 else ("maybe" if lo <= 0 <= hi else "no")
    if rel == "!=":
        return "yes" if (hi < 0 or lo > 0) else ("maybe" if not lo == hi == 0 else "no")
    if rel == "<=":
        return "yes" if hi <= 0 else ("no" if lo > 0 else "maybe")
    if rel == "<":
        return "yes" if hi < 0 else ("no" if lo >= 0 else "maybe")
    if rel == ">=":
        return "yes" if lo >= 0 else ("no" if hi < 0 else "maybe")
    if rel == ">":
        return "yes" if lo > 0 else ("no" if hi <= 0 else "maybe")
    raise ValueError(rel)


def verify_atoms(atoms, witness: Witness) -> Verification:
    """Substitute the witness into every atom.  Exact unless the model is approximate."""
    if witness.exact:
        exact = True
        for i, a in enumerate(atoms):
            lhs = core.eval_term(a.lhs, witness.scalars, witness.app)
            rhs = core.eval_term(a.rhs, witness.scalars, witness.app)
            exact = exact and isinstance(lhs, Fraction) and isinstance(rhs, Fraction)
            if not core.compare(lhs, a.rel, rhs):
                return Verification(False, exact, i, core.show(a))
        return Verification(True, exact)
    eps = witness.error_bound or Fraction(0)
    env = {v: Interval(x - eps, x + eps) for v, x in witness.scalars.items()}
    app = _interval_app(witness)
    width = Fraction(0)
    for i, a in enumerate(atoms):
        diff = core.eval_term(a.lhs, env, app) - core.eval_term(a.rhs, env, app)
        diff = diff if isinstance(diff, Interval) else Interval(diff)
        width = max(width, diff.width)
        if _check_atom_interval(diff, a.rel) == "no":
            return Verification(False, False, i, core.show(a), diff.width)
    return Verification(True, False, width=width)


def verify_certificate(checked, cert, witness: Witness | None = None) -> Verification:
    """Check the witness against the satisfied disjunct of the original formula."""
    witness = witness or build_witness(cert, checked)
    disjuncts = core.to_dnf(checked)
    atoms = disjuncts[cert.disjunct_index] if checked is not None else cert.disjunct
    return verify_atoms(atoms, witness)


def verify_formula(checked, witness: Witness) -> Verification:
    """Evaluate a whole quantifier-free formula under a witness (any disjunct may hold)."""
    best = None
    for atoms in core.to_dnf(checked):
        v = verify_atoms(atoms, witness)
        if v.ok:
            return v
        best = best or v
    return best or Verification(False, atom="formula has no satisfiable disjunct")


# ---------------------------------------------------------------- JSON

def _rat(x: Fraction) -> str:
    return str(Fraction(x))


def witness_to_json(w: Witness) -> dict:
    funcs = {}
    for name, f in w.functions.items():
        funcs[name] = {
            "arity": f.arity,
            "centers": [[_rat(x) for x in c] for c in f.centers],
            "local_poly": [
                {"monomials": [{"beta": [dict(m).get(v, 0) for v in f.vars], "coeff": _rat(c)}
                               for m, c in p.terms.items()]}
                for p in f.local_polys],
            "r1": _rat(f.r1),
            "r2": _rat(f.r2),
        }
    return {"functions": funcs, "scalars": {k: _rat(v) for k, v in w.scalars.items()}}


def witness_from_json(data: dict) -> Witness:
    funcs = {}
    for name, f in data["functions"].items():
        vars_ = domain_vars(f["arity"])
        polys = []
        for lp in f["local_poly"]:
            terms = {}
            for m in lp["monomials"]:
                mono = tuple((v, b) for v, b in zip(vars_, m["beta"]) if b)
                terms[mono] = Fraction(m["coeff"])
            polys.append(Poly(terms))
        funcs[name] = BumpSumWitness(
            name, f["arity"], [tuple(Fraction(x) for x in c) for c in f["centers"]], polys,
            Fraction(f["r1"]), Fraction(f["r2"]))
    return Witness(funcs, {k: Fraction(v) for k, v in data.get("scalars", {}).items()})


def dump_witness(w: Witness, path):
    with open(path, "w") as fh:
        json.dump(witness_to_json(w), fh, indent=2)
        fh.write("\n")


def load_witness(path) -> Witness:
    with open(path) as fh:
        return witness_from_json(json.load(fh))


def plot_samples(w: BumpSumWitness, lo=None, hi=None, n=400) -> list:
    """(x, F(x)) samples of a one-dimensional witness."""
    if w.arity != 1:
        raise ValueError("plot data is only available for unary functions")
    xs = [c[0] for c in w.centers] or [Fraction(0)]
    lo = float(min(xs) - 1) if lo is None else lo
    hi = float(max(xs) + 1) if hi is None else hi
    out = []
    for i in range(n + 1):
        x = lo + (hi - lo) * i / n
        out.append((x, float(eval_witness(w, (x,)))))
    return out
