"""SMT-LIB2 text emission and response parsing."""

from __future__ import annotations

import re
from fractions import Fraction

from .. import core
from ..errors import ModelParseError
from ..sexpr import Atom as SAtom
from ..sexpr import SList, parse_all

_SIMPLE = re.compile(r"^[A-Za-z~!$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")
_RESERVED = {"true", "false", "not", "and", "or", "xor", "ite", "distinct", "let", "forall",
             "exists", "par", "as", "_", "!", "pi", "e", "exp", "sin", "cos", "tan", "root-obj",
             "to_real", "to_int", "is_int", "abs", "div", "mod", "rem"}


def symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"cannot quote symbol {name!r}")
    return f"|{name}|"


def real(v: Fraction) -> str:
    v = Fraction(v)
    if v < 0:
        return f"(- {real(-v)})"
    if v.denominator == 1:
        return f"{v.numerator}.0"
    return f"(/ {v.numerator}.0 {v.denominator}.0)"


def term(t: core.Term) -> str:
    if isinstance(t, core.Const):
        return real(t.value)
    if isinstance(t, core.Var):
        return symbol(t.name)
    if isinstance(t, (core.Add, core.Mul)):
        cls = type(t)
        parts = []
        while isinstance(t, cls):
            parts.append(t.right)
            t = t.left
        parts.append(t)
        op = "+" if cls is core.Add else "*"
        return f"({op} {' '.join(term(p) for p in reversed(parts))})"
    if isinstance(t, core.UApp):
        return f"({symbol(t.name)} {' '.join(term(a) for a in t.args)})"
    raise ValueError(f"term not expressible in SMT-LIB arithmetic: {core.show(t)}")


def formula(f: core.Formula) -> str:
    if isinstance(f, core.Atom):
        if f.rel == "!=":
            return f"(not (= {term(f.lhs)} {term(f.rhs)}))"
        return f"({f.rel} {term(f.lhs)} {term(f.rhs)})"
    if isinstance(f, core.And):
        if not f.args:
            return "true"
        return formula(f.args[0]) if len(f.args) == 1 else f"(and {' '.join(formula(a) for a in f.args)})"
    if isinstance(f, core.Or):
        if not f.args:
            return "false"
        return formula(f.args[0]) if len(f.args) == 1 else f"(or {' '.join(formula(a) for a in f.args)})"
    if isinstance(f, core.Not):
        return f"(not {formula(f.arg)})"
    if isinstance(f, core.Implies):
        return f"(=> {formula(f.lhs)} {formula(f.rhs)})"
    if isinstance(f, (core.Forall, core.Exists)):
        kw = "forall" if isinstance(f, core.Forall) else "exists"
        return f"({kw} (({symbol(f.var)} Real)) {formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def script(assertions, consts=(), functions=None, get_values=(), logic=None,
           options=()) -> str:
    """A complete one-shot script: declarations, assertions, check-sat, get-value."""
    lines = [f"(set-option :{k} {v})" for k, v in options]
    if logic:
        lines.append(f"(set-logic {logic})")
    for name, arity in (functions or {}).items():
        lines.append(f"(declare-fun {symbol(name)} ({' '.join(['Real'] * arity)}) Real)")
    for c in consts:
        lines.append(f"(declare-const {symbol(c)} Real)")
    for a in assertions:
        lines.append(f"(assert {formula(a)})")
    lines.append("(check-sat)")
    if get_values:
        lines.append(f"(get-value ({' '.join(symbol(v) for v in get_values)}))")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


def logic_for(assertions, with_uf=False) -> str:
    quant = any(core.has_quantifier(a) for a in assertions)
    return ("" if quant else "QF_") + ("UFNRA" if with_uf else "NRA")


# ---------------------------------------------------------------- responses

class Approximate(Exception):
    """A value that is an algebraic root object rather than a rational."""


def parse_value(e) -> tuple:
    """SMT-LIB value -> (Fraction, exact flag).  Raises Approximate on root objects."""
    if isinstance(e, SAtom):
        text = e.text
        exact = True
        if text.endswith("?"):
            text, exact = text[:-1], False
        try:
            return Fraction(text), exact
        except ValueError:
            raise ModelParseError(f"unparseable model value {e.text!r}") from None
    if not e.items or not isinstance(e[0], SAtom):
        raise ModelParseError("malformed model value")
    op = e[0].text
    if op == "root-obj":
        raise Approximate()
    vals = [parse_value(x) for x in e.items[1:]]
    exact = all(x for _, x in vals)
    nums = [v for v, _ in vals]
    if op == "-" and len(nums) == 1:
        return -nums[0], exact
    if op == "-":
        out = nums[0]
        for v in nums[1:]:
            out -= v
        return out, exact
    if op == "+":
        return sum(nums, Fraction(0)), exact
    if op == "*":
        out = Fraction(1)
        for v in nums:
            out *= v
        return out, exact
    if op == "/" and len(nums) == 2:
        return nums[0] / nums[1], exact
    raise ModelParseError(f"unsupported operator {op!r} in model value")


def parse_response(text: str) -> tuple:
    """(status, list of remaining S-expressions) from solver stdout."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    status = None
    rest_start = 0
    for i, ln in enumerate(lines):
        if ln in ("sat", "unsat", "unknown"):
            status = ln
            rest_start = i + 1
            break
        if ln.startswith("(error"):
            raise ModelParseError(f"backend error: {ln}")
    if status is None:
        raise ModelParseError(f"no check-sat answer in backend output: {text[:200]!r}")
    rest = "\n".join(lines[rest_start:])
    try:
        exprs = parse_all(rest)
    except Exception as exc:  # malformed trailing output
        raise ModelParseError(f"cannot read backend output: {exc}") from None
    return status, exprs


def parse_values(exprs, names) -> tuple:
    """Read a get-value answer.  Returns ({name: Fraction}, exact).  May raise Approximate."""
    wanted = set(names)
    out: dict = {}
    exact = True
    for e in exprs:
        if not isinstance(e, SList):
            continue
        if e.items and isinstance(e[0], SAtom) and e[0].text == "error":
            continue
        for pair in e:
            if isinstance(pair, SList) and len(pair) == 2 and isinstance(pair[0], SAtom):
                name = pair[0].text
                if name in wanted:
                    v, ex = parse_value(pair[1])
                    out[name] = v
                    exact = exact and ex
    missing = wanted - set(out)
    if missing:
        raise ModelParseError(f"backend did not report values for {sorted(missing)}")
    return out, exact
