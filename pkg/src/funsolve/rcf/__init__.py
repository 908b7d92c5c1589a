"""Real-closed-field oracles.

``make_backend("internal")`` never leaves the process; ``"external"`` always
talks to the configured SMT-LIB2 solver; ``"auto"`` (the default) sends
linear existential work to the internal procedure and everything else to the
external solver when one is installed.
"""

from __future__ import annotations

from .. import core
from ..errors import BackendUnavailable
from ..poly import atom_poly
from .base import FALSE, SAT, TRUE, UNKNOWN, UNSAT, Backend, Verdict, model_satisfies, unknown
from .external import DEFAULT_CMD, DEFAULT_TIMEOUT_MS, ExternalBackend, default_command
from .internal import InternalBackend


def _linear_atoms(atoms) -> bool:
    try:
        return all(atom_poly(a).is_linear() for a in atoms)
    except ValueError:
        return False


def _existential_linear(f) -> bool:
    while isinstance(f, core.Exists):
        f = f.body
    if core.has_quantifier(f):
        return False
    return _linear_atoms(core.iter_atoms(f))


class AutoBackend(Backend):
    name = "auto"

    def __init__(self, external: ExternalBackend | None = None):
        self.internal = InternalBackend()
        self.external = external if external is not None else ExternalBackend()
        self.missing_external = 0  # queries that needed the external solver but had none

    @property
    def has_external(self) -> bool:
        return self.external.available()

    def _ext(self, what):
        if not self.has_external:
            self.missing_external += 1
            return unknown(f"no external backend for {what}")
        return None

    def check_qf(self, atoms) -> Verdict:
        atoms = list(atoms)
        if _linear_atoms(atoms):
            return self.internal.check_qf(atoms)
        return self._ext("nonlinear query") or self.external.check_qf(atoms)

    def check_sentence(self, sentence) -> Verdict:
        if _existential_linear(sentence):
            return self.internal.check_sentence(sentence)
        return self._ext("quantified/nonlinear sentence") or self.external.check_sentence(sentence)

    def check_exists_model(self, variables, matrix) -> Verdict:
        if _existential_linear(matrix):
            return self.internal.check_exists_model(variables, matrix)
        return self._ext("quantified/nonlinear query") or self.external.check_exists_model(
            variables, matrix)


def make_backend(kind: str = "auto", cmd=None, timeout_ms: int = DEFAULT_TIMEOUT_MS,
                 log_dir=None) -> Backend:
    """kind: ``auto`` | ``internal`` | ``external``."""
    if kind == "internal":
        return InternalBackend()
    ext = ExternalBackend(cmd, timeout_ms=timeout_ms, log_dir=log_dir)
    if kind == "external":
        if not ext.available():
            raise BackendUnavailable(
                f"external backend {ext.cmd[0]!r} not found (pip install z3-solver, "
                "or point FUNSOLVE_BACKEND at an SMT-LIB2 solver)")
        return ext
    if kind == "auto":
        return AutoBackend(ext)
    raise ValueError(f"unknown backend kind {kind!r}")


__all__ = [
    "AutoBackend", "Backend", "ExternalBackend", "InternalBackend", "Verdict",
    "SAT", "UNSAT", "TRUE", "FALSE", "UNKNOWN", "DEFAULT_CMD", "DEFAULT_TIMEOUT_MS",
    "default_command", "make_backend", "model_satisfies", "unknown",
]
