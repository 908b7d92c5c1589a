"""Congruence closure over variables and uninterpreted function applications."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import core
from .core import UApp, Var


def term_key(t) -> tuple:
    """Deterministic order on EUF terms: variables before applications, then by text."""
    return (isinstance(t, UApp), core.show(t))


class TermDag:
    """Hash-consed term nodes with parent lists."""

    def __init__(self):
        self.ids: dict = {}
        self.terms: list = []
        self.children: list = []
        self.parents: list = []

    def add(self, t) -> int:
        if t in self.ids:
            return self.ids[t]
        if isinstance(t, UApp):
            kids = tuple(self.add(a) for a in t.args)
        elif isinstance(t, Var):
            kids = ()
        else:
            raise TypeError(f"EUF terms are variables and applications, got {core.show(t)}")
        i = len(self.terms)
        self.ids[t] = i
        self.terms.append(t)
        self.children.append(kids)
        self.parents.append([])
        for k in kids:
            self.parents[k].append(i)
        return i


@dataclass
class EufResult:
    sat: bool
    classes: list = field(default_factory=list)  # list of lists of terms, sorted
    conflict: tuple | None = None  # (lhs, rhs) of the violated disequality

    def class_of(self, t):
        for c in self.classes:
            if t in c:
                return c
        return None


def congruence_close(equalities, disequalities=(), extra_terms=()) -> EufResult:
    """Decide a conjunction of (dis)equalities between EUF terms.

    ``equalities`` and ``disequalities`` are iterables of term pairs.  On SAT the
    partition of all subterms into congruence classes is returned, each class
    sorted and the classes ordered by their minimal term.
    """
    dag = TermDag()
    eqs = [(dag.add(a), dag.add(b)) for a, b in equalities]
    neqs = [(dag.add(a), dag.add(b)) for a, b in disequalities]
    for t in extra_terms:
        dag.add(t)

    n = len(dag.terms)
    parent = list(range(n))
    members = [[i] for i in range(n)]
    uses = [list(p) for p in dag.parents]  # applications with an argument in this class
    sig: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def signature(i):
        t = dag.terms[i]
        return (t.name, tuple(find(k) for k in dag.children[i]))

    pending = list(eqs)
    for i in range(n):
        if dag.children[i]:
            s = signature(i)
            if s in sig:
                pending.append((i, sig[s]))
            else:
                sig[s] = i

    while pending:
        a, b = pending.pop()
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        if len(members[ra]) < len(members[rb]):
            ra, rb = rb, ra
        # re-signature the applications that use the smaller class
        moved = uses[rb]
        for p in moved:
            s = signature(p)
            if sig.get(s) == p:
                del sig[s]
        parent[rb] = ra
        members[ra].extend(members[rb])
        uses[ra].extend(moved)
        for p in moved:
            s = signature(p)
            q = sig.get(s)
            if q is None:
                sig[s] = p
            elif find(q) != find(p):
                pending.append((p, q))

    for a, b in neqs:
        if find(a) == find(b):
            return EufResult(False, conflict=(dag.terms[a], dag.terms[b]))

    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(dag.terms[i])
    classes = [sorted(g, key=term_key) for g in groups.values()]
    classes.sort(key=lambda c: term_key(c[0]))
    return EufResult(True, classes)


def is_congruence_closed(classes) -> bool:
    """Check the congruence property over every pair of applications."""
    where = {}
    for i, c in enumerate(classes):
        for t in c:
            where[t] = i
    apps = [t for t in where if isinstance(t, UApp)]
    for x in apps:
        for y in apps:
            if x.name == y.name and len(x.args) == len(y.args):
                if all(where.get(a) == where.get(b) for a, b in zip(x.args, y.args)):
                    if where[x] != where[y]:
                        return False
    return True
