import os
import stat

import pytest
from hypothesis import given, settings, strategies as st

from hflz.parser import parse_formula
from hflz.pretty import to_text
from hflz.semantics import eval_bounded
from hflz.syntax import (
    App, Atom, HflError, IConst, INT, IVar, Lambda, Mu, Or, PROP, Var,
    alpha_eq, app, arrow,
)
from hflz.transforms import (
    AbstractionError, BoundExpr, HigherOrderMuError, PredicateSet,
    SmtEntailment, WindowEntailment, abstract_predicates, desugar_quantifiers,
    eliminate_mu, qf_holds, qf_int_vars,
)


# ---------------------------------------------------------------------------
# Bounds


def test_bound_parse_and_print():
    b = BoundExpr.parse("max(i + 1, 1)")
    assert len(b.pieces) == 2
    exprs = b.to_int_exprs({"i": "i"})
    assert [to_text_int(e) for e in exprs] == ["i + 1", "1"]
    assert BoundExpr.const(5).pieces == (((), 5),)
    assert BoundExpr.parse("2 - x").pieces == (((("x", -1),), 2),)
    with pytest.raises(ValueError):
        BoundExpr(pieces=())


def to_text_int(e):
    from hflz.pretty import int_to_text
    return int_to_text(e)


def test_bound_unknown_scope_variable():
    with pytest.raises(HflError, match="not an integer variable"):
        BoundExpr.parse("i + 1").to_int_exprs({})


# ---------------------------------------------------------------------------
# Quantifier desugaring


def test_desugar_exists():
    out = desugar_quantifiers(parse_formula("exists x. x = 3"))
    expected = parse_formula(
        r"(mu q: int -> prop. \x: int. x = 3 \/ q(x - 1) \/ q(x + 1))(0)")
    assert alpha_eq(out, expected)


def test_desugar_forall_bounded():
    out = desugar_quantifiers(
        parse_formula("forall u >= max(i + 1, 1). u >= 0", {"i": INT}))
    expected = parse_formula(
        r"(nu q: int -> prop. \u: int. (u < 1 \/ u >= 0) /\ q(u + 1))"
        r"(i + 1)", {"i": INT})
    assert alpha_eq(out, expected)


def test_desugar_preserves_semantics():
    assert eval_bounded(parse_formula("exists x >= 0. x = 3"), 8)
    assert not eval_bounded(parse_formula("exists x >= 5. x = 3"), 8)
    # the universal walk is unbounded upward, so window evaluation can
    # never certify it -- one-sided soundness in action
    assert not eval_bounded(parse_formula("forall x >= 0. x >= 0"), 8)


# ---------------------------------------------------------------------------
# mu-elimination


def test_eliminate_mu_forall_golden(corpus):
    phi = parse_formula((corpus / "sec41.hfl").read_text())
    out = eliminate_mu(phi, BoundExpr.parse("max(i + 1, 1)"))
    assert to_text(out) == (
        "forall i. forall u >= max(i + 1, 1). "
        "(nu x': int -> int -> prop. \\(z: int, y: int). "
        "z > 0 /\\ (y <= 0 \\/ x'(z - 1, y - 1)))(u, i)")


def test_eliminate_mu_apply_instances(corpus):
    even = parse_formula((corpus / "even.hfl").read_text())
    inst = App(even, IConst(6))
    # 6 needs four unfoldings of the 'subtract two' loop to reach zero
    assert not eval_bounded(
        eliminate_mu(inst, BoundExpr.const(3), style="apply"), 16)
    assert eval_bounded(
        eliminate_mu(inst, BoundExpr.const(4), style="apply"), 16)
    assert eval_bounded(
        eliminate_mu(inst, BoundExpr.const(8), style="apply"), 16)


def test_eliminate_mu_bound_monotone(corpus):
    even = parse_formula((corpus / "even.hfl").read_text())
    inst = App(even, IConst(6))
    vals = [eval_bounded(eliminate_mu(inst, BoundExpr.const(n),
                                      style="apply"), 16)
            for n in (1, 2, 3, 4, 5, 6, 8)]
    assert vals == sorted(vals)


def test_eliminate_mu_apply_rejects_max():
    phi = parse_formula("(mu x: int -> prop. \\y: int. y <= 0 \\/ x(y - 1))(3)")
    with pytest.raises(HflError, match="single-piece"):
        eliminate_mu(phi, BoundExpr.parse("max(1, 2)"), style="apply")
    with pytest.raises(ValueError, match="style"):
        eliminate_mu(phi, BoundExpr.const(1), style="bogus")


def test_eliminate_mu_higher_order_refused():
    phi = Mu("x", arrow(PROP, PROP),
             Lambda("p", PROP, App(Var("x", arrow(PROP, PROP)),
                                   Var("p", PROP))))
    with pytest.raises(HigherOrderMuError):
        eliminate_mu(App(phi, parse_formula("true")), BoundExpr.const(2))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 6), st.integers(1, 3), st.integers(-6, 6),
       st.integers(1, 8))
def test_eliminate_mu_sound_random(base, step, start, n):
    """Truth of the eliminated formula implies truth of the original."""
    mu = parse_formula(
        f"mu x: int -> prop. \\y: int. y = {base} \\/ x(y - {step})")
    inst = App(mu, IConst(start))
    elim = eliminate_mu(inst, BoundExpr.const(n), style="apply")
    if eval_bounded(elim, 32):
        assert eval_bounded(inst, 32)


# ---------------------------------------------------------------------------
# Entailment oracles


def test_window_entailment():
    o = WindowEntailment(width=16)
    y = IVar("y")
    gt0 = Atom(">", y, IConst(0))
    ge0 = Atom(">=", y, IConst(0))
    ge10 = Atom(">=", y, IConst(10))
    with pytest.warns(UserWarning, match="heuristic"):
        assert o.entails([gt0], ge0) is True
    assert o.entails([gt0], ge10) is False
    assert o.entails([], Atom("=", y, IConst(0))) is False
    # too many variables: no answer
    many = Atom("=", IVar("a"), IVar("b"))
    o2 = WindowEntailment(max_vars=1)
    assert o2.entails([many], many) is None


def test_window_entailment_warns_once():
    o = WindowEntailment(width=4)
    a = Atom(">", IVar("y"), IConst(0))
    import warnings as w
    with w.catch_warnings(record=True) as rec:
        w.simplefilter("always")
        o.entails([a], a)
        o.entails([a], a)
    assert len([r for r in rec if "heuristic" in str(r.message)]) == 1


def _stub_solver(tmp_path, name, body):
    p = tmp_path / name
    p.write_text("#!/bin/sh\n" + body + "\n")
    p.chmod(p.stat().st_mode | stat.S_IXUSR)
    return str(p)


def test_smt_entailment_stubs(tmp_path):
    y = IVar("y")
    gt0 = Atom(">", y, IConst(0))
    ge0 = Atom(">=", y, IConst(0))
    unsat = _stub_solver(tmp_path, "unsat.sh", "echo unsat")
    sat = _stub_solver(tmp_path, "sat.sh", "echo sat")
    bad = _stub_solver(tmp_path, "bad.sh", "echo flurble")
    assert SmtEntailment(f"{unsat} {{file}}").entails([gt0], ge0) is True
    assert SmtEntailment(f"{sat} {{file}}").entails([gt0], ge0) is False
    assert SmtEntailment(f"{bad} {{file}}").entails([gt0], ge0) is None
    assert SmtEntailment("/nonexistent-solver {file}") \
        .entails([gt0], ge0) is None


def test_smt_entailment_query_content(tmp_path):
    # the stub copies its input aside so we can check the emitted SMT-LIB
    out = tmp_path / "seen.smt2"
    stub = _stub_solver(tmp_path, "spy.sh", f'cp "$1" {out}; echo unsat')
    SmtEntailment(f"{stub} {{file}}").entails(
        [Atom(">", IVar("y"), IConst(0))], Atom(">=", IVar("y"), IConst(0)))
    text = out.read_text()
    assert "(set-logic QF_LIA)" in text
    assert "(declare-const y Int)" in text
    assert "(assert (not (>= y 0)))" in text
    assert "(check-sat)" in text


def test_qf_helpers():
    phi = parse_formula("x > 0 /\\ x <= y", {"x": INT, "y": INT})
    assert qf_int_vars(phi) == {"x", "y"}
    assert qf_holds(phi, {"x": 1, "y": 2})
    assert not qf_holds(phi, {"x": 0, "y": 2})
    with pytest.raises(AbstractionError):
        qf_int_vars(parse_formula("<a> true"))


# ---------------------------------------------------------------------------
# Predicate abstraction


def test_predicate_set_parse():
    ps = PredicateSet.parse("y: y > 0, y >= 10\n*: x = 0\n# comment\n")
    assert [to_text(a) for a in ps.per_binder["y"]] == ["y > 0", "y >= 10"]
    assert len(ps.for_binder("y")) == 2
    assert len(ps.for_binder("z")) == 1  # falls back to the default
    with pytest.raises(AbstractionError, match="single atom"):
        PredicateSet.parse("y: y > 0 /\\ y < 5")
    with pytest.raises(AbstractionError, match="binder"):
        PredicateSet.parse("just words")


def test_abstraction_golden(corpus):
    phi = parse_formula((corpus / "sec42.hfl").read_text())
    preds = PredicateSet.parse((corpus / "sec42.preds").read_text())
    out = abstract_predicates(phi, preds)
    assert to_text(out) == \
        "(nu x: prop -> prop. \\b: prop. b /\\ x(b))(true)"
    assert eval_bounded(out, 0)


def test_abstraction_sound_on_instances():
    # abstracting \y. y >= 1 under predicate y > 0, applied to constants
    preds = PredicateSet.parse("y: y > 0")
    for k, expect in [(5, True), (1, True)]:
        phi = App(Lambda("y", INT, Atom(">=", IVar("y"), IConst(1))),
                  IConst(k))
        out = abstract_predicates(phi, preds)
        assert eval_bounded(out, 0) is expect
    # an instance the predicate cannot certify abstracts to false
    phi = App(Lambda("y", INT, Atom(">=", IVar("y"), IConst(10))), IConst(5))
    out = abstract_predicates(phi, preds)
    assert not eval_bounded(out, 0)


def test_abstraction_weakest_disjunction():
    # y > 0 \/ y <= 0 is entailed by the empty set of predicates: abstracts
    # to true even though neither predicate alone entails it
    preds = PredicateSet.parse("y: y > 0")
    phi = App(Lambda("y", INT, Or(Atom(">", IVar("y"), IConst(0)),
                                  Atom("<=", IVar("y"), IConst(0)))),
              IConst(3))
    out = abstract_predicates(phi, preds)
    assert eval_bounded(out, 0)


def test_abstraction_error_cases():
    preds = PredicateSet.parse("y: y > 0")
    with pytest.raises(AbstractionError, match="desugar"):
        abstract_predicates(parse_formula("exists z. z = 0"), preds)
    # an integer argument fed to a bare function variable has no signature
    phi = parse_formula(r"(\f: int -> prop. f(3))(\y: int. y > 0)")
    with pytest.raises(AbstractionError, match="signature"):
        abstract_predicates(phi, preds)
