"""Position-tracking S-expression reader shared by the problem parser and the SMT-LIB client."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SyntaxError_


@dataclass(frozen=True)
class Atom:
    text: str
    line: int
    col: int
    quoted: bool = False

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __iter__(self):
        return iter(self.items)


def _tokens(text: str):
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
        elif ch.isspace():
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col, False
            i += 1
            col += 1
        elif ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SyntaxError_("unterminated |quoted symbol|", line, col)
            body = text[i + 1:j]
            yield body, line, col, True
            nl = body.count("\n")
            if nl:
                line += nl
                col = len(body) - body.rfind("\n")
            else:
                col += j - i + 1
            i = j + 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            if j >= n:
                raise SyntaxError_("unterminated string literal", line, col)
            yield text[i:j + 1], line, col, False
            col += j - i + 1
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '();|"':
                j += 1
            yield text[i:j], line, col, False
            col += j - i
            i = j


def parse_all(text: str) -> list:
    """Read every top-level S-expression in ``text``."""
    stack: list = []
    out: list = []
    last = (1, 1)
    for tok, line, col, quoted in _tokens(text):
        last = (line, col)
        if tok == "(" and not quoted:
            stack.append(([], line, col))
        elif tok == ")" and not quoted:
            if not stack:
                raise SyntaxError_("unexpected ')'", line, col)
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            (stack[-1][0] if stack else out).append(node)
        else:
            node = Atom(tok, line, col, quoted)
            (stack[-1][0] if stack else out).append(node)
    if stack:
        _, l0, c0 = stack[-1]
        raise SyntaxError_(f"unclosed '(' opened at {l0}:{c0}, expected ')'", *last)
    return out


def to_python(e):
    """Strip positions: atoms become str, lists become lists."""
    if isinstance(e, Atom):
        return e.text
    return [to_python(x) for x in e.items]
