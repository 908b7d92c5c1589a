from hypothesis import given, settings

from funsolve import core, translate
from funsolve.core import App, Atom, Const, Deriv, Diff, FunVar, UApp, Var
from funsolve.translate import DerivativeSymbol, canonicalize_derivatives, purify, tau, tau_partial

from conftest import checked
from strategies import qf_formulas, scalar_terms

X2 = FunVar("X", 2)
t, s = Var("t"), Var("s")


def _deriv(f):
    return next(x for term in core.formula_terms(f) for x in core.iter_subterms(term)
                if isinstance(x, Deriv))


def test_mixed_partials_commute():
    a = canonicalize_derivatives(Atom(App(Diff(1, Diff(2, X2)), (t, s)), "=", Const(0)))
    b = canonicalize_derivatives(Atom(App(Diff(2, Diff(1, X2)), (t, s)), "=", Const(0)))
    assert _deriv(a).beta == (1, 1) and a == b


def test_repeated_derivative():
    X1 = FunVar("X", 1)
    f = canonicalize_derivatives(Atom(App(Diff(1, Diff(1, X1)), (t,)), "=", Const(0)))
    assert _deriv(f).beta == (2,)


def test_tau_partial_two_partials():
    ch = checked("(declare-fun X (F 2)) (declare-const t1 R) (declare-const t2 R)"
                 " (assert (= (+ (app (d 1 X) t1 t2) (app (d 2 X) t1 t2)) 1))")
    f, syms = tau_partial(ch)
    assert core.show(f) == "app(X@d(1,0), t1, t2) + app(X@d(0,1), t1, t2) = 1"
    assert set(syms) == {"X@d(1,0)", "X@d(0,1)"}
    assert core.show(tau(f)) == "X@d(1,0)(t1, t2) + X@d(0,1)(t1, t2) = 1"


def test_tau_partial_without_diff_renames_base():
    ch = checked("(declare-fun X (F 1)) (declare-const t R) (assert (>= (app X t) 1))")
    f, syms = tau_partial(ch)
    assert core.show(f) == "app(X@d(0), t) >= 1" and syms["X@d(0)"] == DerivativeSymbol("X", (0,))


def test_same_symbol_for_both_orders():
    ch = checked("(declare-fun X (F 2)) (declare-const t R) (declare-const s R)"
                 " (assert (= (app (d 1 (d 2 X)) t s) (app (d 2 (d 1 X)) t s)))")
    f, syms = tau_partial(ch)
    assert list(syms) == ["X@d(1,1)"]
    assert f.lhs == f.rhs


def test_tau_running_example():
    ch = checked("(declare-fun X (F 1)) (declare-const t R) (assert (>= (app X t) 1))"
                 " (assert (<= (^ (app X (+ t 1)) 2) 1))")
    assert core.show(tau(tau_partial(ch)[0])) == "X@d(0)(t) >= 1 & X@d(0)(t + 1)*X@d(0)(t + 1) <= 1"


def test_constant_formula_unchanged():
    f = Atom(Const(1), "<", Const(2))
    assert tau(tau_partial(f)[0]) == f


def test_symbol_name_round_trip():
    sym = DerivativeSymbol("X", (1, 0, 2))
    assert DerivativeSymbol.parse(sym.name) == sym
    assert DerivativeSymbol.parse("X") is None


def test_purify_running_example():
    ch = checked("(declare-fun X (F 1)) (declare-const t R) (assert (>= (app X t) 1))"
                 " (assert (<= (^ (app X (+ t 1)) 2) 1))")
    ru = tau(tau_partial(ch)[0])
    pair = purify(list(ru.args))
    assert [core.show(a) for a in pair.pi_r] == ["@v1 >= 1", "@v2 = t + 1", "@v3*@v3 <= 1"]
    assert [str(d) for d in pair.pi_u] == ["@v1 = X@d(0)(t)", "@v3 = X@d(0)(@v2)"]
    assert set(pair.shared) == {"@v1", "@v2", "@v3", "t"}


def test_purify_pure_scalar():
    pair = purify([Atom(Var("a"), "<", Var("b"))])
    assert pair.pi_u == [] and pair.shared == []


def test_purify_nested():
    pair = purify([Atom(UApp("X", (UApp("Y", (t,)),)), "=", Const(0))])
    assert [str(d) for d in pair.pi_u] == ["@v1 = Y(t)", "@v2 = X(@v1)"]
    assert [core.show(a) for a in pair.pi_r] == ["@v2 = 0"]


FUNS = (FunVar("F", 1), FunVar("G", 2))


def _no_fun_nodes(f):
    return not any(isinstance(x, (App, Diff, Deriv)) for term in core.formula_terms(f)
                   for x in core.iter_subterms(term))


@settings(max_examples=150, deadline=None)
@given(qf_formulas(scalar_terms(("a", "b"), FUNS), rels=("=", "<=", "<")))
def test_translation_invariants(f):
    once, syms = tau_partial(f)
    twice, _ = tau_partial(once)
    assert once == twice
    ru = tau(once)
    assert _no_fun_nodes(ru)
    for d in core.to_dnf(ru, cap=10 ** 5):
        pair = purify(d)
        for a in pair.pi_r:
            assert not any(isinstance(x, UApp) for term in (a.lhs, a.rhs) for x in core.iter_subterms(term))
        for u in pair.pi_u:
            assert all(isinstance(x, str) for x in u.args)
        r_vars = {v for a in pair.pi_r for v in core.term_vars(a.lhs) | core.term_vars(a.rhs)}
        u_vars = {u.var for u in pair.pi_u} | {x for u in pair.pi_u for x in u.args}
        assert set(pair.shared) == r_vars & u_vars


def test_translate_bundle():
    ch = checked("(declare-fun X (F 1)) (declare-const t R)"
                 " (assert (or (= (app X 0) 0) (= (app X 1) 1)))")
    tr = translate.translate(ch)
    assert len(tr.disjuncts) == 2 and len(tr.purified) == 2
