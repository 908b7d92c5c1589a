import json
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, assume, given, settings

from funsolve import core
from funsolve.core import Var
from funsolve.errors import CongruenceViolation, DerivativeOrderUnsupported, InconsistentModel
from funsolve.qf import decide_qf
from funsolve.rcf import InternalBackend
from funsolve.translate import UDef, purify, tau, tau_partial
from funsolve.witness import (PartialFunctionTable, _numeric_value, _sq_dist, build_numbering,
                              build_tables, build_witness, eval_witness, interpolate, plot_samples,
                              verify_certificate, verify_formula, witness_from_json,
                              witness_to_json)

from conftest import corpus, injected_running_certificate, needs_ext
from strategies import conjunctions

F = Fraction


def table(name, arity, entries):
    tab = PartialFunctionTable(name, arity)
    for point, beta, value in entries:
        tab.add(tuple(F(x) for x in point), beta, F(value))
    return tab


# ---------------------------------------------------------------- numbering, tables

def test_running_numbering_and_table():
    f, cert = injected_running_certificate()
    num = build_numbering(cert.euf_classes, cert.model, cert.pair.shared)
    shown = {core.show(t): v for t, v in num.r_prime.items()}
    assert shown == {"@v1": 1, "@v3": 1, "X@d(0)(@v2)": 1, "X@d(0)(t)": 1, "t": 6, "@v2": 7}
    tables = build_tables(num, cert.pair.pi_u, cert.symbols, f.fun_vars)
    assert list(tables) == ["X"]
    assert tables["X"].entries == {((F(6),), (0,)): 1, ((F(7),), (0,)): 1}


def test_numbering_fresh_values():
    a, b = Var("a"), Var("b")
    assert build_numbering([[a]], {}, []).r == [0]
    num = build_numbering([[a], [b]], {}, [])
    assert num.r[0] != num.r[1]
    num = build_numbering([[a], [b]], {"a": F(0)}, ["a"])
    assert num.r == [0, 1]


def test_numbering_inconsistent():
    with pytest.raises(InconsistentModel):
        build_numbering([[Var("a"), Var("b")]], {"a": F(0), "b": F(1)}, ["a", "b"])


def test_tables_merge_by_base():
    a, b = Var("a"), Var("b")
    d1 = UDef("p", "X@d(1,0)", ("a", "b"))
    d2 = UDef("q", "X@d(0,1)", ("a", "b"))
    classes = [[a], [b], [Var("p"), d1.app(), Var("q"), d2.app()]]
    num = build_numbering(classes, {"a": F(2), "b": F(3), "p": F(1), "q": F(1)},
                          ["a", "b", "p", "q"])
    tabs = build_tables(num, [d1, d2])
    assert list(tabs) == ["X"]
    assert set(tabs["X"].entries) == {((2, 3), (1, 0)), ((2, 3), (0, 1))}
    assert build_tables(num, []) == {}


def test_table_conflict():
    tab = table("X", 1, [((0,), (0,), 1)])
    tab.add((F(0),), (0,), F(1))
    with pytest.raises(CongruenceViolation):
        tab.add((F(0),), (0,), F(2))


# ---------------------------------------------------------------- interpolation

def test_running_interpolant():
    w = interpolate(table("X", 1, [((6,), (0,), 1), ((7,), (0,), 1)]))
    assert w.r1 == F(1, 6) and w.r2 == F(1, 3)
    assert [p.terms for p in w.local_polys] == [{(): 1}, {(): 1}]
    assert eval_witness(w, (6,)) == 1 and eval_witness(w, (F(7),)) == 1
    assert isinstance(eval_witness(w, (6,)), Fraction)
    assert eval_witness(w, (100,)) == 0


def test_slope_entry():
    w = interpolate(table("X", 1, [((0,), (1,), 1)]))
    assert w.r1 == F(1, 3) and w.r2 == F(2, 3)
    assert eval_witness(w, (0,), (1,)) == 1 and eval_witness(w, (F(1, 10),)) == F(1, 10)


def test_plane_entry():
    w = interpolate(table("X", 2, [((0, 0), (1, 0), 1), ((0, 0), (0, 1), 1)]))
    assert eval_witness(w, (0, 0), (1, 0)) == 1 and eval_witness(w, (0, 0), (0, 1)) == 1
    assert eval_witness(w, (F(1, 10), F(1, 20))) == F(3, 20)


def random_table(rng):
    n = rng.randint(1, 3)
    tab = PartialFunctionTable("X", n)
    centers = set()
    while len(centers) < rng.randint(1, 5):
        centers.add(tuple(F(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(n)))
    for c in sorted(centers):
        for _ in range(rng.randint(1, 4)):
            beta = [0] * n
            for _ in range(rng.randint(0, 3)):
                beta[rng.randrange(n)] += 1
            tab.add(c, tuple(beta), tab.entries.get((c, tuple(beta)),
                                                    F(rng.randint(-9, 9), rng.randint(1, 5))))
    return tab


TABLES = [random_table(random.Random(i)) for i in range(200)]


def test_interpolation_exact_at_centers():
    for tab in TABLES:
        w = interpolate(tab)
        for (p, beta), val in tab.entries.items():
            got = eval_witness(w, p, beta)
            assert isinstance(got, Fraction) and got == val


def test_support_separation():
    for tab in TABLES:
        w = interpolate(tab)
        assert 0 < w.r1 < w.r2
        for j, c in enumerate(w.centers):
            for k, d in enumerate(w.centers):
                if j != k:
                    # c_k lies outside the support of bump j, and 2 rho <= |c_j - c_k|
                    assert _sq_dist(c, d) > w.r2 * w.r2
                    assert _sq_dist(c, d) >= (3 * w.r2) ** 2


def test_finite_differences_at_centers():
    h = 1e-4
    for tab in TABLES:
        w = interpolate(tab)
        for (p, beta), val in tab.entries.items():
            if sum(beta) != 1:
                continue
            i = beta.index(1)
            up = [float(x) for x in p]
            dn = list(up)
            up[i] += h
            dn[i] -= h
            fd = (eval_witness(w, tuple(up)) - eval_witness(w, tuple(dn))) / (2 * h)
            assert abs(fd - float(val)) < 1e-6


def test_numeric_matches_exact_in_flat_ball():
    w = interpolate(table("X", 1, [((0,), (0,), 1), ((0,), (2,), 4), ((3,), (1,), -1)]))
    x = F(1, 10)
    assert abs(eval_witness(w, (float(x),)) - float(eval_witness(w, (x,)))) < 1e-12
    assert abs(eval_witness(w, (0.1,), (2,)) - 4.0) < 1e-9


def test_order_cap_in_band():
    w = interpolate(table("X", 1, [((6,), (0,), 1), ((7,), (0,), 1)]))
    band = 6 + float(w.r1 + w.r2) / 2
    assert abs(eval_witness(w, (band,), (1,))) > 0
    with pytest.raises(DerivativeOrderUnsupported):
        eval_witness(w, (band,), (5,))
    assert eval_witness(w, (6,), (7,)) == 0  # any order is exact in the flat ball


def _jumps(w, order, h):
    import mpmath
    lo = 6 + float(w.r1) - 0.01
    n = int((float(w.r2 - w.r1) + 0.02) / h)
    xs = [lo + i * h for i in range(n)]
    vals = [float(mpmath.diff(lambda t: _numeric_value(w, [t]), x, order)) for x in xs]
    return max(abs(a - b) for a, b in zip(vals, vals[1:]))


def test_smoothness_jumps_shrink_with_step():
    """Continuity proxy: adjacent-sample jumps of orders 0..2 scale linearly with the step."""
    w = interpolate(table("X", 1, [((6,), (0,), 1), ((7,), (0,), 1)]))
    for order in (0, 1, 2):
        coarse, fine = _jumps(w, order, 1e-3), _jumps(w, order, 5e-4)
        assert 1.8 < coarse / fine < 2.2


@pytest.mark.xfail(strict=True, reason="a unit drop across a band of width 1/6 forces slope >= 6, "
                                       "so sample jumps at step 1e-3 exceed 1e-3")
def test_smoothness_absolute_jump_bound():
    w = interpolate(table("X", 1, [((6,), (0,), 1), ((7,), (0,), 1)]))
    assert all(_jumps(w, order, 1e-3) <= 1e-3 for order in (0, 1, 2))


def test_plot_samples():
    w = interpolate(table("X", 1, [((6,), (0,), 1), ((7,), (0,), 1)]))
    pts = plot_samples(w, n=40)
    assert len(pts) == 41 and pts[0] == (5.0, 0.0)
    assert max(y for _, y in pts) == 1.0


# ---------------------------------------------------------------- certificates

def test_running_witness_verifies():
    f, cert = injected_running_certificate()
    w = build_witness(cert, f)
    assert w.scalars == {"t": 6}
    v = verify_certificate(f, cert, w)
    assert v.ok and v.exact and str(v) == "Verified"


def test_tampered_certificate_fails():
    f, cert = injected_running_certificate()
    cert.model = dict(cert.model, **{"@v1": F(0), "@v3": F(0)})
    v = verify_certificate(f, cert)
    assert not v.ok and v.failed == 0 and str(v).startswith("Failed(atom 0: ")


def test_json_round_trip():
    f, cert = injected_running_certificate()
    w = build_witness(cert, f)
    data = witness_to_json(w)
    assert list(data) == ["functions", "scalars"]
    assert list(data["functions"]["X"]) == ["arity", "centers", "local_poly", "r1", "r2"]
    assert data["functions"]["X"]["r1"] == "1/6" and data["scalars"] == {"t": "6"}
    text = json.dumps(data)
    again = witness_from_json(json.loads(text))
    assert json.dumps(witness_to_json(again)) == text
    assert verify_formula(f, again).ok


def test_json_tamper_fails():
    f, cert = injected_running_certificate()
    data = witness_to_json(build_witness(cert, f))
    data["functions"]["X"]["local_poly"][1]["monomials"][0]["coeff"] = "2"
    v = verify_formula(f, witness_from_json(data))
    assert not v.ok and v.failed == 1


def test_partials_witness(internal):
    f = corpus("partials.fnl")
    res = decide_qf(f, internal)
    w = build_witness(res.certificate, f)
    u, v = w.scalars["u"], w.scalars["v"]
    assert eval_witness(w.functions["X"], (u, v), (1, 0)) == 1
    assert eval_witness(w.functions["X"], (u, v), (0, 1)) == 1
    assert verify_certificate(f, res.certificate, w).ok


@needs_ext
def test_value_and_slope_witness(ext):
    f = corpus("value_and_slope.fnl")
    res = decide_qf(f, ext)
    v = verify_certificate(f, res.certificate)
    assert v.ok


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(conjunctions)
def test_certificate_completeness(atoms):
    """Every SAT verdict carries a certificate whose witness satisfies the formula."""
    f = core.well_formed(core.And(tuple(atoms)))
    partial, _ = tau_partial(core.And(tuple(atoms)))
    ru = tau(partial)
    assume(len(purify(list(ru.args) if isinstance(ru, core.And) else [ru]).shared) <= 6)
    res = decide_qf(f, InternalBackend())
    assume(res.status == "sat")
    v = verify_certificate(f, res.certificate)
    assert v.ok, (core.show(f), str(v))
