"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable
name; the empty tuple is the constant monomial.  Coefficients are
``fractions.Fraction`` and zero coefficients are never stored.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping

from . import core
from .core import Add, Const, Mul, Var


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms: dict = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[tuple(m)] = c

    # construction -------------------------------------------------

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): c})

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({((name, 1),): 1})

    @classmethod
    def monomial(cls, coeff, powers: Mapping) -> "Poly":
        return cls({tuple(sorted((v, e) for v, e in powers.items() if e)): coeff})

    # algebra ------------------------------------------------------

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        p = Poly()
        p.terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Poly()
        p.terms = {m: -c for m, c in self.terms.items()}
        return p

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        p = Poly()
        p.terms = out
        return p

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative exponent")
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def variables(self) -> list:
        seen: dict = {}
        for m in self.terms:
            for v, _ in m:
                seen.setdefault(v, None)
        return sorted(seen)

    def degree(self, over: Iterable[str] | None = None) -> int:
        """Total degree, optionally counting only the variables in ``over``."""
        if not self.terms:
            return 0
        keep = None if over is None else set(over)
        return max(sum(e for v, e in m if keep is None or v in keep) for m in self.terms)

    def is_linear(self) -> bool:
        return self.degree() <= 1

    def linear_parts(self) -> tuple:
        """For a linear polynomial: ({var: coeff}, constant)."""
        coeffs = {}
        for m, c in self.terms.items():
            if len(m) == 1 and m[0][1] == 1:
                coeffs[m[0][0]] = c
            elif m:
                raise ValueError(f"polynomial is not linear: {self}")
        return coeffs, self.constant_value()

    def coefficient(self, monomial) -> Fraction:
        return self.terms.get(tuple(monomial), Fraction(0))

    # calculus and substitution -------------------------------------

    def diff(self, var: str, order: int = 1) -> "Poly":
        p = self
        for _ in range(order):
            out: dict = {}
            for m, c in p.terms.items():
                d = dict(m)
                e = d.get(var, 0)
                if not e:
                    continue
                if e == 1:
                    del d[var]
                else:
                    d[var] = e - 1
                key = tuple(sorted(d.items()))
                out[key] = out.get(key, 0) + c * e
            p = Poly(out)
        return p

    def subs(self, mapping: Mapping[str, "Poly"]) -> "Poly":
        """Simultaneous substitution of polynomials for variables."""
        out = Poly()
        cache: dict = {}
        for m, c in self.terms.items():
            term = Poly.const(c)
            rest = []
            for v, e in m:
                if v in mapping:
                    key = (v, e)
                    if key not in cache:
                        cache[key] = mapping[v] ** e
                    term = term * cache[key]
                else:
                    rest.append((v, e))
            if rest:
                term = term * Poly({tuple(rest): 1})
            out = out + term
        return out

    def evaluate(self, env: Mapping, zero=None):
        """Evaluate with any ring elements supporting + and * (Fraction, float, intervals)."""
        total = Fraction(0) if zero is None else zero
        for m, c in self.terms.items():
            term = c
            for v, e in m:
                x = env[v]
                for _ in range(e):
                    term = term * x
            total = total + term
        return total

    # conversion ---------------------------------------------------

    def to_term(self) -> core.Term:
        """Sum of monomials as a core term (coefficient first, then powers)."""
        if not self.terms:
            return Const(0)
        out = None
        for m, c in self.terms.items():
            factors = []
            if c != 1 or not m:
                factors.append(Const(c))
            for v, e in m:
                factors.extend([Var(v)] * e)
            t = factors[0]
            for f in factors[1:]:
                t = Mul(t, f)
            out = t if out is None else Add(out, t)
        return out

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"Poly({format_poly(self)!r})"


def format_poly(p: Poly, rename: Mapping[str, str] | None = None) -> str:
    """Infix rendering like ``2*t^2 - 1/3*t + 1``; monomials keep insertion order."""
    if not p.terms:
        return "0"
    rename = rename or {}
    parts = []
    for m, c in p.terms.items():
        powers = "*".join(rename.get(v, v) + (f"^{e}" if e > 1 else "") for v, e in m)
        mag = abs(c)
        if not m:
            body = str(mag)
        elif mag == 1:
            body = powers
        else:
            body = f"{mag}*{powers}"
        parts.append(("-" if c < 0 else "+", body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def term_to_poly(t: core.Term) -> Poly:
    """Convert an application-free scalar term to a polynomial."""
    if isinstance(t, Const):
        return Poly.const(t.value)
    if isinstance(t, Var):
        return Poly.var(t.name)
    if isinstance(t, Add):
        return term_to_poly(t.left) + term_to_poly(t.right)
    if isinstance(t, Mul):
        return term_to_poly(t.left) * term_to_poly(t.right)
    raise ValueError(f"not a polynomial term: {core.show(t)}")


def atom_poly(a: core.Atom) -> Poly:
    """lhs - rhs for an application-free atom."""
    return term_to_poly(a.lhs) - term_to_poly(a.rhs)


def domain_vars(n: int) -> tuple:
    """Names of the argument variables of an n-ary polynomial assignment."""
    return ("t",) if n == 1 else tuple(f"t{i}" for i in range(1, n + 1))


def factorial_multi(beta) -> int:
    out = 1
    for b in beta:
        out *= math.factorial(b)
    return out


def monomials_up_to(vars_: tuple, degree: int) -> list:
    """All exponent tuples over ``vars_`` with total degree <= ``degree``, graded order."""
    out = []
    n = len(vars_)

    if n == 0:
        return [()]

    def rec(i, left, acc):
        if i == n - 1:
            out.append(tuple(acc + [left]))
            return
        for e in range(left, -1, -1):
            rec(i + 1, left - e, acc + [e])

    for d in range(degree + 1):
        rec(0, d, [])
    return out


_INFIX_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][\w']*)|(\S))")


def parse_infix(text: str, allowed: Iterable[str] | None = None) -> Poly:
    """Parse ``t^2 + 1``-style polynomial text (``+ - * / ^`` and parentheses)."""
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _INFIX_TOKEN.match(text, pos)
        if not m:
            break
        pos = m.end()
        toks.append(m.group(1) and ("num", m.group(1)) or m.group(2) and ("var", m.group(2))
                    or ("op", m.group(3)))
    allowed = None if allowed is None else set(allowed)
    state = {"i": 0}

    def peek():
        return toks[state["i"]] if state["i"] < len(toks) else (None, None)

    def take():
        tok = peek()
        state["i"] += 1
        return tok

    def expr():
        p = term()
        while peek() in (("op", "+"), ("op", "-")):
            _, op = take()
            q = term()
            p = p + q if op == "+" else p - q
        return p

    def term():
        p = unary()
        while peek() in (("op", "*"), ("op", "/")):
            _, op = take()
            q = unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant() or q.is_zero():
                    raise ValueError("division only by nonzero constants")
                p = p * Poly.const(1 / q.constant_value())
        return p

    def unary():
        if peek() == ("op", "-"):
            take()
            return -unary()
        if peek() == ("op", "+"):
            take()
        return power()

    def power():
        p = atom()
        if peek() == ("op", "^"):
            take()
            kind, val = take()
            if kind != "num" or not val.isdigit():
                raise ValueError("exponent must be a natural number")
            p = p ** int(val)
        return p

    def atom():
        kind, val = take()
        if kind == "num":
            return Poly.const(Fraction(val))
        if kind == "var":
            if allowed is not None and val not in allowed:
                raise ValueError(f"unknown variable {val!r}; expected one of {sorted(allowed)}")
            return Poly.var(val)
        if (kind, val) == ("op", "("):
            p = expr()
            if take() != ("op", ")"):
                raise ValueError("missing ')'")
            return p
        raise ValueError(f"unexpected token {val!r} in polynomial {text!r}")

    p = expr()
    if state["i"] != len(toks) or pos != len(text):
        raise ValueError(f"trailing input in polynomial {text!r}")
    return p
