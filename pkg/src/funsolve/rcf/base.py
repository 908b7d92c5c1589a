from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .. import core

SAT, UNSAT, TRUE, FALSE, UNKNOWN = "sat", "unsat", "true", "false", "unknown"


@dataclass
class Verdict:
    status: str
    model: dict = field(default_factory=dict)  # var -> Fraction
    exact: bool = True
    reason: str = ""
    error_bound: Fraction | None = None  # per-value bound for approximate models

    @property
    def is_sat(self):
        return self.status in (SAT, TRUE)

    @property
    def definite(self):
        return self.status != UNKNOWN

    def __str__(self):
        s = self.status.upper()
        if self.reason:
            s += f"({self.reason})"
        return s


def unknown(reason: str) -> Verdict:
    return Verdict(UNKNOWN, reason=reason)


def is_rcf_term(t) -> bool:
    return not any(isinstance(s, (core.App, core.UApp, core.Diff, core.Deriv, core.FunVar,
                                  core.Transcendental))
                   for s in core.iter_subterms(t))


def check_rcf_formula(f: core.Formula):
    for t in core.formula_terms(f):
        if not is_rcf_term(t):
            raise ValueError(f"real-arithmetic query contains a function symbol: {core.show(t)}")


def model_satisfies(atoms, model: dict) -> bool:
    """Exact rational evaluation of every atom under ``model``."""
    env = dict(model)
    for a in atoms:
        for v in core.term_vars(a.lhs) | core.term_vars(a.rhs):
            env.setdefault(v, Fraction(0))
    return all(core.eval_formula(a, env) for a in atoms)


class Backend:
    """Real-closed-field oracle.  Every method returns a :class:`Verdict`."""

    name = "abstract"

    def check_qf(self, atoms) -> Verdict:  # pragma: no cover - interface
        raise NotImplementedError

    def check_sentence(self, sentence: core.Formula) -> Verdict:  # pragma: no cover
        raise NotImplementedError

    def check_exists_model(self, variables, matrix: core.Formula) -> Verdict:  # pragma: no cover
        raise NotImplementedError
