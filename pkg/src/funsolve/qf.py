"""Decision procedure for quantifier-free function-algebraic formulas.

Each DNF disjunct is translated to the combined theory of real closed fields
and uninterpreted functions, purified, and decided by searching for an
arrangement (a partition of the shared variables) under which both the
arithmetic side and the uninterpreted side are satisfiable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import core, euf
from .core import Atom, Var
from .errors import PartitionBlowup
from .rcf import SAT, UNKNOWN, UNSAT, Backend, Verdict, make_backend, model_satisfies
from .translate import PurifiedPair, purify, tau, tau_partial

log = logging.getLogger(__name__)

DEFAULT_PARTITION_CAP = 12


# ---------------------------------------------------------------- partitions

def restricted_growth_strings(n: int):
    """All set partitions of range(n) as restricted growth strings, lexicographic."""
    if n == 0:
        yield ()
        return
    a = [0] * n

    def rec(i, mx):
        if i == n:
            yield tuple(a)
            return
        for v in range(mx + 2):
            a[i] = v
            yield from rec(i + 1, max(mx, v))

    a[0] = 0
    yield from rec(1, 0)


def partitions(items):
    """Set partitions of ``items`` in canonical restricted-growth order, as lists of blocks."""
    items = list(items)
    for rgs in restricted_growth_strings(len(items)):
        blocks: list = []
        for x, b in zip(items, rgs):
            if b == len(blocks):
                blocks.append([])
            blocks[b].append(x)
        yield blocks


def _grouped_partitions(groups):
    """Partitions of the union of ``groups`` that never split a group."""
    for blocks in partitions(range(len(groups))):
        yield [[x for g in b for x in groups[g]] for b in blocks]


def arrangement_atoms(blocks) -> list:
    """rho(V, E): equalities inside blocks, disequalities across blocks."""
    out = []
    for b in blocks:
        for x, y in zip(b, b[1:]):
            out.append(Atom(Var(x), "=", Var(y)))
    reps = [b[0] for b in blocks]
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            out.append(Atom(Var(reps[i]), "!=", Var(reps[j])))
    return out


# ---------------------------------------------------------------- results

@dataclass
class QfCertificate:
    disjunct_index: int
    disjunct: list  # original atoms
    symbols: dict  # derivative symbol name -> DerivativeSymbol
    pair: PurifiedPair
    arrangement: list  # blocks of shared variables
    euf_classes: list
    model: dict  # rcf model, var -> Fraction
    exact: bool = True
    error_bound: object = None

    @property
    def rho(self) -> list:
        return arrangement_atoms(self.arrangement)

    def replay(self) -> bool:
        """Re-check: congruence-closed classes and an arithmetic model of pi_R and rho."""
        res = euf_side(self.pair, self.arrangement)
        if not res.sat or not euf.is_congruence_closed(res.classes):
            return False
        if self.exact:
            return model_satisfies(self.pair.pi_r + self.rho, self.model)
        return True


@dataclass
class QfResult:
    status: str  # sat | unsat | unknown
    certificate: QfCertificate | None = None
    reason: str = ""
    stats: dict = field(default_factory=dict)

    def __str__(self):
        return self.status.upper() + (f"({self.reason})" if self.reason else "")


# ---------------------------------------------------------------- per-side checks

def euf_side(pair: PurifiedPair, blocks) -> euf.EufResult:
    eqs = [(Var(d.var), d.app()) for d in pair.pi_u]
    neqs = []
    for b in blocks:
        for x, y in zip(b, b[1:]):
            eqs.append((Var(x), Var(y)))
    reps = [b[0] for b in blocks]
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            neqs.append((Var(reps[i]), Var(reps[j])))
    return euf.congruence_close(eqs, neqs)


def mandatory_groups(pair: PurifiedPair) -> list:
    """Shared variables forced equal by pi_U alone, as groups (singletons otherwise)."""
    res = euf.congruence_close([(Var(d.var), d.app()) for d in pair.pi_u],
                               extra_terms=[Var(v) for v in pair.shared])
    shared = set(pair.shared)
    groups, seen = [], set()
    for v in pair.shared:
        if v in seen:
            continue
        cls = res.class_of(Var(v))
        g = [v] + [t.name for t in cls if isinstance(t, Var) and t.name in shared and t.name != v]
        g = sorted(g, key=pair.shared.index)
        seen.update(g)
        groups.append(g)
    return groups


def check_arrangement(pair: PurifiedPair, blocks, backend: Backend | None = None,
                      model: dict | None = None) -> tuple:
    """(euf result, rcf verdict) for one arrangement.

    With ``model`` given, the arithmetic side is checked by exact evaluation of
    that model instead of a backend call.
    """
    res = euf_side(pair, blocks)
    rho = arrangement_atoms(blocks)
    if model is not None:
        ok = model_satisfies(pair.pi_r + rho, model)
        return res, Verdict(SAT if ok else UNSAT, dict(model) if ok else {},
                            reason="" if ok else "injected model violates pi_R and rho")
    backend = backend or make_backend()
    return res, backend.check_qf(pair.pi_r + rho)


# ---------------------------------------------------------------- procedure

def decide_purified(pair: PurifiedPair, backend: Backend, partition_cap=DEFAULT_PARTITION_CAP,
                    prune=True) -> tuple:
    """Arrangement search.  Returns (status, blocks, euf result, verdict, stats)."""
    stats = {"partitions": 0, "rcf_calls": 0, "euf_rejected": 0}
    if len(pair.shared) > partition_cap:
        raise PartitionBlowup(f"{len(pair.shared)} shared variables exceed cap {partition_cap}")
    if prune:
        base = backend.check_qf(pair.pi_r)
        stats["rcf_calls"] += 1
        if base.status == UNSAT:
            return UNSAT, None, None, base, stats
        groups = mandatory_groups(pair)
        candidates = _grouped_partitions(groups)
    else:
        candidates = partitions(pair.shared)
    poisoned = ""
    for blocks in candidates:
        stats["partitions"] += 1
        eres = euf_side(pair, blocks)
        if prune and not eres.sat:
            stats["euf_rejected"] += 1
            continue
        verdict = backend.check_qf(pair.pi_r + arrangement_atoms(blocks))
        stats["rcf_calls"] += 1
        if verdict.status == UNKNOWN:
            poisoned = poisoned or verdict.reason or "unknown"
            continue
        if verdict.status == SAT and eres.sat:
            return SAT, blocks, eres, verdict, stats
    if poisoned:
        return UNKNOWN, None, None, Verdict(UNKNOWN, reason=poisoned), stats
    return UNSAT, None, None, None, stats


def decide_conjunction(atoms, backend: Backend | None = None, index: int = 0,
                       partition_cap=DEFAULT_PARTITION_CAP, prune=True) -> QfResult:
    """Decide a conjunction of original (app/derivative) atoms."""
    backend = backend or make_backend()
    atoms = list(atoms)
    partial, symbols = tau_partial(core.And(tuple(atoms)))
    ru = tau(partial)
    ru_atoms = list(ru.args) if isinstance(ru, core.And) else [ru]
    pair = purify(ru_atoms)
    status, blocks, eres, verdict, stats = decide_purified(pair, backend, partition_cap, prune)
    stats["shared"] = len(pair.shared)
    if status != SAT:
        return QfResult(status, reason=verdict.reason if verdict else "", stats=stats)
    cert = QfCertificate(index, atoms, symbols, pair, blocks, eres.classes, verdict.model,
                         verdict.exact, verdict.error_bound)
    return QfResult(SAT, cert, stats=stats)


def decide_qf(checked, backend: Backend | None = None, dnf_cap=core.DEFAULT_DNF_CAP,
              partition_cap=DEFAULT_PARTITION_CAP, prune=True) -> QfResult:
    """DNF, then arrangement search per disjunct, left to right."""
    backend = backend or make_backend()
    disjuncts = core.to_dnf(checked, cap=dnf_cap)
    reasons = []
    total = {"disjuncts": len(disjuncts), "partitions": 0, "rcf_calls": 0}
    for i, d in enumerate(disjuncts):
        res = decide_conjunction(d, backend, i, partition_cap, prune)
        total["partitions"] += res.stats.get("partitions", 0)
        total["rcf_calls"] += res.stats.get("rcf_calls", 0)
        log.debug("disjunct %d: %s", i, res)
        if res.status == SAT:
            res.stats = total
            return res
        if res.status == UNKNOWN:
            reasons.append(f"disjunct {i}: {res.reason}")
    if reasons:
        return QfResult(UNKNOWN, reason="; ".join(reasons), stats=total)
    return QfResult(UNSAT, stats=total)
