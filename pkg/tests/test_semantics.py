import pytest
from hypothesis import given, settings, strategies as st

from hflz.lts import Lts, parse_lts, trivial_model
from hflz.parser import parse_formula
from hflz.semantics import (
    ImpureFormulaError, TableCapError, check_pure, check_pure_stats,
    eval_bounded,
)
from hflz.syntax import (
    And, App, Box, Diamond, FALSE, IConst, Mu, Nu, Or, PROP, TRUE, Var, app,
    dualize,
)

LABELS = ("a", "b")


# ---------------------------------------------------------------------------
# Random pure formulas (order 0 binders) and small LTSs


@st.composite
def ltss(draw):
    n = draw(st.integers(1, 4))
    states = tuple(f"s{i}" for i in range(n))
    pairs = [(src, lbl, dst) for src in states for lbl in LABELS
             for dst in states]
    trans = draw(st.sets(st.sampled_from(pairs), max_size=8))
    return Lts(states=states, labels=frozenset(LABELS),
               transitions=frozenset(trans), initial=states[0])


@st.composite
def pure_formulas(draw, depth=0, bound=()):
    leaf_only = depth >= 4
    options = ["true", "false"]
    if bound:
        options.append("var")
    if not leaf_only:
        options += ["or", "and", "dia", "box", "mu", "nu"]
    kind = draw(st.sampled_from(options))
    if kind == "true":
        return TRUE
    if kind == "false":
        return FALSE
    if kind == "var":
        return Var(draw(st.sampled_from(bound)), PROP)
    if kind in ("or", "and"):
        l = draw(pure_formulas(depth=depth + 1, bound=bound))
        r = draw(pure_formulas(depth=depth + 1, bound=bound))
        return (Or if kind == "or" else And)(l, r)
    if kind in ("dia", "box"):
        lbl = draw(st.sampled_from(LABELS))
        b = draw(pure_formulas(depth=depth + 1, bound=bound))
        return (Diamond if kind == "dia" else Box)(lbl, b)
    x = f"v{len(bound)}"
    b = draw(pure_formulas(depth=depth + 1, bound=bound + (x,)))
    return (Mu if kind == "mu" else Nu)(x, PROP, b)


@settings(max_examples=220, deadline=None)
@given(ltss(), pure_formulas())
def test_duality_exact_random(m, phi):
    """check_pure(M, phi) xor check_pure(M, dual(phi)) always holds."""
    assert check_pure(m, phi) != check_pure(m, dualize(phi))


@settings(max_examples=120, deadline=None)
@given(ltss(), pure_formulas())
def test_pure_agreement_and_iteration_bound(m, phi):
    ok, stats = check_pure_stats(m, phi)
    # iteration counts never exceed lattice height + 1
    for count, bound in stats.iterations:
        assert count <= bound
    # for pure formulas the window is irrelevant
    assert eval_bounded(phi, 0, lts=m) == ok


# ---------------------------------------------------------------------------
# Exact checks


def test_check_pure_basics():
    m = trivial_model()
    assert check_pure(m, TRUE)
    assert not check_pure(m, FALSE)
    assert check_pure(m, parse_formula("nu x: prop. x"))
    assert not check_pure(m, parse_formula("mu x: prop. x"))
    # no transitions: <a> is false, [a] is true
    assert not check_pure(m, Diamond("a", TRUE))
    assert check_pure(m, Box("a", FALSE))


def test_check_pure_order1(corpus):
    phi = parse_formula((corpus / "ex22.hfl").read_text())
    t = App(phi, Diamond("c", TRUE))
    good = parse_lts((corpus / "chain_aabbc.lts").read_text())
    bad = parse_lts((corpus / "chain_abbc.lts").read_text())
    assert check_pure(good, t)
    assert not check_pure(bad, t)


def test_check_pure_rejects_impure():
    with pytest.raises(ImpureFormulaError):
        check_pure(trivial_model(), parse_formula("exists x. x = 0"))


def test_table_cap():
    # order-2 formula over a 3-state model blows a tiny cap
    m = parse_lts("states: a b c\ninitial: a\ntrans:\n a x b\n b x c\n")
    phi = parse_formula(
        r"(nu f: (prop -> prop) -> prop. \g: prop -> prop. g(true))"
        r"(\y: prop. y)")
    with pytest.raises(TableCapError):
        check_pure(m, phi, table_cap=10)


# ---------------------------------------------------------------------------
# Bounded evaluation


def test_mult_instances(corpus):
    mult = parse_formula((corpus / "mult.hfl").read_text())
    assert eval_bounded(app(mult, IConst(2), IConst(3), IConst(6)), 8)
    assert not eval_bounded(app(mult, IConst(2), IConst(3), IConst(5)), 8)
    assert eval_bounded(app(mult, IConst(-2), IConst(3), IConst(-6)), 8)
    assert eval_bounded(app(mult, IConst(2), IConst(-3), IConst(-6)), 8)
    assert eval_bounded(app(mult, IConst(0), IConst(0), IConst(0)), 8)


def test_even_instances(corpus):
    even = parse_formula((corpus / "even.hfl").read_text())
    assert eval_bounded(App(even, IConst(4)), 8)
    assert not eval_bounded(App(even, IConst(3)), 8)
    assert not eval_bounded(App(even, IConst(-2)), 8)


def test_out_of_window_is_false():
    # the chain exits the window, so the conjunct eventually fails
    phi = parse_formula(
        r"(nu x: int -> prop. \n: int. n <= 5 /\ x(n + 1))(0)")
    assert not eval_bounded(phi, 16)
    # in-window existential search succeeds
    assert eval_bounded(parse_formula("exists x. x = 3"), 8)
    assert not eval_bounded(parse_formula("exists x. x = 30"), 8)


def test_window_monotone(corpus):
    mult = parse_formula((corpus / "mult.hfl").read_text())
    inst = app(mult, IConst(2), IConst(2), IConst(4))
    results = [eval_bounded(inst, b) for b in (1, 2, 4, 8, 16)]
    assert results == sorted(results)  # False* then True*
    assert results[-1] is True


def test_bounded_duality_one_sided(corpus):
    for name in ("even.hfl", "mult.hfl"):
        phi = parse_formula((corpus / name).read_text())
        inst = phi
        from hflz.syntax import arg_types, typecheck
        for _ in arg_types(typecheck(inst)):
            inst = App(inst, IConst(2))
        both = eval_bounded(inst, 8) and eval_bounded(dualize(inst), 8)
        assert not both


def test_eval_with_lts(corpus):
    m = parse_lts((corpus / "mfile.lts").read_text())
    phi = parse_formula(
        r"(mu f: int -> prop -> prop. \(n: int, k: prop). "
        r"(n > 0 \/ <close> k) /\ (n <= 0 \/ <read> f(n - 1, k)))"
        r"(10, <end> true)")
    assert eval_bounded(phi, 16, lts=m)
    # demanding more reads than the window allows cannot be certified
    phi25 = parse_formula(
        r"(mu f: int -> prop -> prop. \(n: int, k: prop). "
        r"(n > 0 \/ <close> k) /\ (n <= 0 \/ <read> f(n - 1, k)))"
        r"(25, <end> true)")
    assert not eval_bounded(phi25, 16, lts=m)
    assert eval_bounded(phi25, 32, lts=m)
