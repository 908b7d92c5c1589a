import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funsolve import core
from funsolve.core import Atom, Const, Var
from funsolve.errors import ModelParseError
from funsolve.rcf import (FALSE, SAT, TRUE, UNKNOWN, UNSAT, AutoBackend, ExternalBackend,
                          make_backend, model_satisfies)
from funsolve.rcf import smtlib
from funsolve.rcf.internal import fm_solve, linearize, solve_linear
from funsolve.sexpr import parse_all
from funsolve.surface import parse_formula

from conftest import HAS_Z3, needs_ext


def F(text, *names):
    return parse_formula(text, {n: core.SCALAR for n in names})


def atoms_of(text, *names):
    f = core.to_nnf(F(text, *names))
    return list(f.args) if isinstance(f, core.And) else [f]


RUNNING = ("(and (>= v1 1) (= v2 (+ t 1)) (<= (^ v3 2) 1) (= v1 v3) "
           "(not (= v1 v2)) (not (= v3 v2)))")
RUN_VARS = ("v1", "v2", "v3", "t")


# ---------------------------------------------------------------- SMT-LIB text

def test_real_literals():
    assert smtlib.real(Fraction(3)) == "3.0"
    assert smtlib.real(Fraction(-1, 10)) == "(- (/ 1.0 10.0))"


def test_symbol_quoting():
    assert smtlib.symbol("t") == "t"
    assert smtlib.symbol("@v1") == "|@v1|"
    assert smtlib.symbol("exp") == "|exp|"


def test_parse_values_decimal_and_fraction():
    status, rest = smtlib.parse_response("sat\n((x (/ 1.0 3.0)) (y (- 2.5)) (z 1.41421?))\n")
    assert status == "sat"
    model, exact = smtlib.parse_values(rest, ["x", "y"])
    assert model == {"x": Fraction(1, 3), "y": Fraction(-5, 2)} and exact
    model, exact = smtlib.parse_values(rest, ["z"])
    assert not exact and model["z"] == Fraction(141421, 100000)


def test_root_object_requests_approximation():
    _, rest = smtlib.parse_response("sat\n((a (root-obj (+ (^ x 2) (- 2)) 2)))")
    with pytest.raises(smtlib.Approximate):
        smtlib.parse_values(rest, ["a"])


def test_malformed_output():
    with pytest.raises(ModelParseError):
        smtlib.parse_response("(error \"line 1: unknown constant\")")
    with pytest.raises(ModelParseError):
        smtlib.parse_response("")
    _, rest = smtlib.parse_response("sat\n((x 1.0))")
    with pytest.raises(ModelParseError):
        smtlib.parse_values(rest, ["x", "y"])


def test_script_shape():
    text = smtlib.script(atoms_of(RUNNING, *RUN_VARS), RUN_VARS, get_values=RUN_VARS,
                         logic="QF_NRA")
    exprs = parse_all(text)
    heads = [e[0].text for e in exprs]
    assert heads[0] == "set-logic" and heads.count("declare-const") == 4
    assert heads.count("assert") == 6 and heads[-3:] == ["check-sat", "get-value", "exit"]
    assert smtlib.logic_for([F("(forall ((t R)) (>= (* t t) 0))")]) == "NRA"


# ---------------------------------------------------------------- internal

def test_internal_fm_unsat(internal):
    assert internal.check_qf(atoms_of("(and (<= (+ x y) 1) (>= x 1) (>= y 1))", "x", "y")).status \
        == UNSAT


def test_internal_strictness():
    assert solve_linear(atoms_of("(and (< x 1) (> x 0))", "x")) is not None
    assert solve_linear(atoms_of("(and (< x 1) (>= x 1))", "x")) is None
    assert solve_linear(atoms_of("(and (<= x 1) (>= x 1))", "x")) == {"x": 1}


def test_internal_disequalities():
    m = solve_linear(atoms_of("(and (<= 0 x) (<= x 1) (not (= x 0)) (not (= x 1)) "
                              "(not (= x (/ 1 2))))", "x"))
    assert m is not None and m["x"] not in (0, 1, Fraction(1, 2)) and 0 < m["x"] < 1
    assert solve_linear(atoms_of("(and (<= 1 x) (<= x 1) (not (= x 1)))", "x")) is None


def test_internal_nonlinear_is_unknown(internal):
    v = internal.check_qf(atoms_of(RUNNING, *RUN_VARS))
    assert v.status == UNKNOWN and "internal-nonlinear" in v.reason


def test_fm_empty_system():
    assert fm_solve([]) == {}


def test_internal_existential(internal):
    v = internal.check_exists_model(["a"], F("(exists ((b R)) (and (= (+ a b) 1) (> b 2)))", "a"))
    assert v.status == SAT and v.model["a"] < -1
    assert internal.check_sentence(F("(exists ((x R)) (and (> x 1) (< x 1)))")).status == FALSE
    v = internal.check_sentence(F("(forall ((t R)) (>= (* t t) 0))"))
    assert v.status == UNKNOWN


def test_auto_routes_linear_internally():
    auto = AutoBackend(ExternalBackend(cmd=("definitely-not-a-solver-binary",)))
    assert auto.check_qf(atoms_of("(and (<= (+ x y) 1) (>= x 1))", "x", "y")).status == SAT
    assert auto.missing_external == 0
    v = auto.check_qf(atoms_of(RUNNING, *RUN_VARS))
    assert v.status == UNKNOWN and auto.missing_external == 1


lin_atom = st.builds(
    lambda cx, cy, rel, k: Atom(core.Add(core.Mul(Const(cx), Var("x")),
                                         core.Mul(Const(cy), Var("y"))), rel, Const(k)),
    st.integers(-3, 3), st.integers(-3, 3), st.sampled_from(["<", "<=", "=", ">=", ">", "!="]),
    st.integers(-4, 4))


@settings(max_examples=300, deadline=None)
@given(st.lists(lin_atom, min_size=1, max_size=5))
def test_internal_model_soundness(conj):
    """Every model the internal procedure returns satisfies every atom exactly."""
    model = solve_linear(conj)
    if model is not None:
        assert model_satisfies(conj, model)
    else:
        # spot-check a grid for a counterexample to UNSAT
        grid = [Fraction(i, 4) for i in range(-24, 25)]
        assert not any(model_satisfies(conj, {"x": a, "y": b}) for a in grid[::3] for b in grid)


def test_linearize_rejects_products():
    from funsolve.rcf.internal import NonLinear
    with pytest.raises(NonLinear):
        linearize(atoms_of("(>= (* x y) 1)", "x", "y"))


# ---------------------------------------------------------------- external

@needs_ext
def test_running_example_model(ext):
    atoms = atoms_of(RUNNING, *RUN_VARS)
    v = ext.check_qf(atoms)
    assert v.status == SAT and v.exact
    assert model_satisfies(atoms, v.model)
    hand = {"v1": 1, "v2": 7, "v3": 1, "t": 6}
    assert model_satisfies(atoms, {k: Fraction(x) for k, x in hand.items()})


@needs_ext
def test_square_negative(ext):
    assert ext.check_qf([Atom(core.Mul(Var("x"), Var("x")), "<", Const(0))]).status == UNSAT


@needs_ext
def test_fm_example_cross_checked(ext, internal):
    conj = atoms_of("(and (<= (+ x y) 1) (>= x 1) (>= y 1))", "x", "y")
    assert ext.check_qf(conj).status == internal.check_qf(conj).status == UNSAT


@needs_ext
def test_sentences(ext):
    assert ext.check_sentence(F("(forall ((t R)) (>= (* t t) 0))")).status == TRUE
    assert ext.check_sentence(F("(exists ((t R)) (and (= (* t t) 2) (> t 0)))")).status == TRUE
    body = "(forall ((p R)) (forall ((q R)) (>= (+ (* q q) 1 (* 2 p p r q)) 0)))"
    assert ext.check_sentence(F(f"(exists ((r R)) {body})")).status == TRUE
    assert ext.check_sentence(F(f"(forall ((r R)) {body})")).status == FALSE
    # the substituted candidate r = 0 is true on its own
    assert ext.check_sentence(F("(forall ((q R)) (>= (+ (* q q) 1) 0))")).status == TRUE


@needs_ext
def test_exists_model_examples(ext):
    tube0 = F("(forall ((t R)) (=> (and (<= 0 t) (<= t 1)) "
              "(and (<= (- a (/ 1 10)) (* 0 t)) (<= (* 0 t) (+ a (/ 1 10))))))", "a")
    v = ext.check_exists_model(["a"], tube0)
    assert v.status == SAT and abs(v.model["a"]) <= Fraction(1, 10)
    assert ext.check_sentence(core.Forall("t", core.Implies(
        Atom(Const(0), "<=", Var("t")), Atom(Const(0), "<=", Const(Fraction(1, 10)))))).status \
        == TRUE
    assert ext.check_exists_model(["a"], F("(forall ((t R)) (= (* a t) 1))", "a")).status == UNSAT
    v = ext.check_exists_model(["a"], F("(= (* a a) 2)", "a"))
    assert v.status == SAT and not v.exact
    assert abs(v.model["a"] ** 2 - 2) < Fraction(1, 10 ** 30)
    assert abs(abs(float(v.model["a"])) - 1.41421356) < 1e-8


@needs_ext
def test_transcript_logging(tmp_path):
    b = make_backend("external", log_dir=tmp_path)
    b.check_qf(atoms_of("(>= x 1)", "x"))
    sent = (tmp_path / "query-0001.smt2").read_text()
    got = (tmp_path / "query-0001.out").read_text()
    assert "(check-sat)" in sent and got.startswith("sat")


def test_missing_backend_command():
    from funsolve.errors import BackendUnavailable
    with pytest.raises(BackendUnavailable):
        make_backend("external", cmd=("definitely-not-a-solver-binary",))


def random_linear_conjunction(rng):
    names = ["x", "y", "z"][:rng.randint(1, 3)]
    conj = []
    for _ in range(rng.randint(1, 5)):
        lhs = Const(0)
        for n in names:
            c = rng.randint(-3, 3)
            if c:
                lhs = core.Add(lhs, core.Mul(Const(c), Var(n)))
        conj.append(Atom(lhs, rng.choice(["<", "<=", "=", ">=", ">", "!="]),
                         Const(Fraction(rng.randint(-6, 6), rng.randint(1, 3)))))
    return conj


LINEAR_CORPUS = [random_linear_conjunction(random.Random(i)) for i in range(100)]


@needs_ext
def test_internal_external_agreement(ext, internal):
    statuses = []
    for conj in LINEAR_CORPUS:
        a, b = internal.check_qf(conj), ext.check_qf(conj)
        assert a.status == b.status, [core.show(x) for x in conj]
        statuses.append(a.status)
        for v in (a, b):
            if v.status == SAT and v.exact:
                assert model_satisfies(conj, v.model)
    assert SAT in statuses and UNSAT in statuses


BUDGET_QUERIES = [
    F("(forall ((t R)) (>= (* t t) 0))"),
    F("(exists ((t R)) (and (= (* t t) 2) (> t 0)))"),
    F("(forall ((a R)) (exists ((b R)) (= (* b b b) a)))"),
    F("(exists ((a R)) (forall ((t R)) (= (* a t) 1)))"),
    F("(forall ((x R)) (forall ((y R)) (>= (+ (* x x) (* y y)) (* 2 x y))))"),
]


@needs_ext
def test_budget_monotonicity():
    """A larger budget may resolve UNKNOWN but never flips a definite verdict."""
    seen = [None] * len(BUDGET_QUERIES)
    for ms in (50, 100, 200, 400, 800, 1600):
        b = make_backend("external", timeout_ms=ms)
        for i, s in enumerate(BUDGET_QUERIES):
            v = b.check_sentence(s)
            if v.status == UNKNOWN:
                continue
            assert seen[i] in (None, v.status)
            seen[i] = v.status
    assert seen == [TRUE, TRUE, TRUE, FALSE, TRUE]


def test_has_z3_matches_backend():
    assert HAS_Z3 == ExternalBackend().available()
