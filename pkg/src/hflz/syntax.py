"""Typed abstract syntax for higher-order fixpoint logic with integers.

Formulas are kept in negation normal form: there is no negation node, and
negation is only expressible through :func:`dualize`.  Every binder carries
its simple type, and binders are made globally unique at construction time
(the parser alpha-renames; :func:`substitute` renames on demand).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass


class HflError(Exception):
    """Base class for all toolkit errors."""


class HflTypeError(HflError):
    pass


# ---------------------------------------------------------------------------
# Simple types


@dataclass(frozen=True)
class PropType:
    def __str__(self) -> str:
        return "prop"


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class Arrow:
    arg: "SimpleType"
    res: "SimpleType"

    def __post_init__(self):
        # predicate types only: the result chain must end in prop
        if isinstance(self.res, IntType):
            raise HflTypeError("arrow result must be a predicate type, not int")

    def __str__(self) -> str:
        a = str(self.arg)
        if isinstance(self.arg, Arrow):
            a = f"({a})"
        return f"{a} -> {self.res}"


SimpleType = PropType | IntType | Arrow

PROP = PropType()
INT = IntType()


def arrow(*types: SimpleType) -> SimpleType:
    """arrow(a, b, c) == a -> b -> c (right associative)."""
    if not types:
        raise ValueError("arrow() needs at least one type")
    t = types[-1]
    for a in reversed(types[:-1]):
        t = Arrow(a, t)
    return t


def is_predicate_type(t: SimpleType) -> bool:
    while isinstance(t, Arrow):
        t = t.res
    return isinstance(t, PropType)


def order_of(t: SimpleType) -> int:
    """order(prop) = order(int) = 0; order(a -> b) = max(order(a)+1, order(b))."""
    if isinstance(t, (PropType, IntType)):
        return 0
    return max(order_of(t.arg) + 1, order_of(t.res))


def arg_types(t: SimpleType) -> list[SimpleType]:
    out = []
    while isinstance(t, Arrow):
        out.append(t.arg)
        t = t.res
    return out


# ---------------------------------------------------------------------------
# Integer expressions (linear only; no multiplication node)


@dataclass(frozen=True)
class IConst:
    value: int


@dataclass(frozen=True)
class IVar:
    name: str


@dataclass(frozen=True)
class Add:
    lhs: "IntExpr"
    rhs: "IntExpr"


@dataclass(frozen=True)
class Sub:
    lhs: "IntExpr"
    rhs: "IntExpr"


@dataclass(frozen=True)
class INeg:
    body: "IntExpr"


IntExpr = IConst | IVar | Add | Sub | INeg


# ---------------------------------------------------------------------------
# Formulas

CMP_OPS = ("<=", "<", "=", "!=", ">=", ">")
DUAL_OP = {"<=": ">", ">": "<=", "<": ">=", ">=": "<", "=": "!=", "!=": "="}


@dataclass(frozen=True)
class Var:
    name: str
    type: SimpleType


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Diamond:
    label: str
    body: "Formula"


@dataclass(frozen=True)
class Box:
    label: str
    body: "Formula"


@dataclass(frozen=True)
class Mu:
    var: str
    vtype: SimpleType
    body: "Formula"

    def __post_init__(self):
        if not is_predicate_type(self.vtype):
            raise HflTypeError(f"fixpoint binder {self.var} must have a predicate type")


@dataclass(frozen=True)
class Nu:
    var: str
    vtype: SimpleType
    body: "Formula"

    def __post_init__(self):
        if not is_predicate_type(self.vtype):
            raise HflTypeError(f"fixpoint binder {self.var} must have a predicate type")


@dataclass(frozen=True)
class Lambda:
    var: str
    vtype: SimpleType
    body: "Formula"


@dataclass(frozen=True)
class App:
    fun: "Formula"
    arg: "Formula | IntExpr"


@dataclass(frozen=True)
class Atom:
    op: str
    lhs: IntExpr
    rhs: IntExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Exists:
    """Quantifier sugar over an integer variable, kept until desugaring.

    ``lower`` pieces restrict the range to ``x >= max(pieces)``.
    """

    var: str
    body: "Formula"
    lower: tuple[IntExpr, ...] = ()


@dataclass(frozen=True)
class Forall:
    """Quantifier sugar; ``lower`` pieces mean ``x >= max(pieces)``."""

    var: str
    body: "Formula"
    lower: tuple[IntExpr, ...] = ()


Formula = (
    Var | TrueF | FalseF | Or | And | Diamond | Box | Mu | Nu | Lambda | App
    | Atom | Exists | Forall
)

TRUE = TrueF()
FALSE = FalseF()


def app(fun: Formula, *args: "Formula | IntExpr") -> Formula:
    for a in args:
        fun = App(fun, a)
    return fun


def lam(bindings: list[tuple[str, SimpleType]], body: Formula) -> Formula:
    for name, t in reversed(bindings):
        body = Lambda(name, t, body)
    return body


def atom(op: str, lhs: IntExpr, rhs: IntExpr) -> Atom:
    return Atom(op, lhs, rhs)


_fresh_counter = itertools.count(1)


def base_name(name: str) -> str:
    """Strip the uniquifying suffix introduced by fresh_name."""
    return name.split("%", 1)[0]


def fresh_name(base: str) -> str:
    return f"{base_name(base)}%{next(_fresh_counter)}"


# ---------------------------------------------------------------------------
# Traversal helpers


def children(phi: Formula) -> list[Formula]:
    match phi:
        case Or(l, r) | And(l, r):
            return [l, r]
        case Diamond(_, b) | Box(_, b):
            return [b]
        case Mu(_, _, b) | Nu(_, _, b) | Lambda(_, _, b):
            return [b]
        case Exists(_, b, _) | Forall(_, b, _):
            return [b]
        case App(f, a):
            return [f, a] if not isinstance(a, IntExpr) else [f]
        case _:
            return []


def subformulas(phi: Formula):
    yield phi
    for c in children(phi):
        yield from subformulas(c)


def int_free_vars(e: IntExpr) -> set[str]:
    match e:
        case IConst(_):
            return set()
        case IVar(n):
            return {n}
        case Add(l, r) | Sub(l, r):
            return int_free_vars(l) | int_free_vars(r)
        case INeg(b):
            return int_free_vars(b)
    raise TypeError(f"not an integer expression: {e!r}")


def free_vars(phi: Formula) -> set[str]:
    match phi:
        case Var(n, _):
            return {n}
        case TrueF() | FalseF():
            return set()
        case Or(l, r) | And(l, r):
            return free_vars(l) | free_vars(r)
        case Diamond(_, b) | Box(_, b):
            return free_vars(b)
        case Mu(x, _, b) | Nu(x, _, b) | Lambda(x, _, b):
            return free_vars(b) - {x}
        case Exists(x, b, lower) | Forall(x, b, lower):
            fv = free_vars(b) - {x}
            for e in lower:
                fv |= int_free_vars(e)
            return fv
        case App(f, a):
            fv = free_vars(f)
            fv |= int_free_vars(a) if isinstance(a, IntExpr) else free_vars(a)
            return fv
        case Atom(_, l, r):
            return int_free_vars(l) | int_free_vars(r)
    raise TypeError(f"not a formula: {phi!r}")


def is_pure(phi: Formula) -> bool:
    """True when phi contains no integer expressions, atoms, or quantifier sugar."""
    match phi:
        case Atom(_, _, _) | Exists(_, _, _) | Forall(_, _, _):
            return False
        case App(_, a) if isinstance(a, IntExpr):
            return False
        case Lambda(_, t, _) if isinstance(t, IntType):
            return False
        case _:
            return all(is_pure(c) for c in children(phi))


def has_sugar(phi: Formula) -> bool:
    return any(isinstance(s, (Exists, Forall)) for s in subformulas(phi))


# ---------------------------------------------------------------------------
# Typing


def typecheck_int(e: IntExpr, env: dict[str, SimpleType]) -> SimpleType:
    match e:
        case IConst(_):
            return INT
        case IVar(n):
            t = env.get(n)
            if t is None:
                raise HflTypeError(f"unbound variable {base_name(n)}")
            if not isinstance(t, IntType):
                raise HflTypeError(f"{base_name(n)} has type {t}, expected int")
            return INT
        case Add(l, r) | Sub(l, r):
            typecheck_int(l, env)
            typecheck_int(r, env)
            return INT
        case INeg(b):
            typecheck_int(b, env)
            return INT
    raise TypeError(f"not an integer expression: {e!r}")


def typecheck(phi: Formula, env: dict[str, SimpleType] | None = None) -> SimpleType:
    """Return the unique simple type of phi under env, or raise HflTypeError."""
    env = env or {}

    def expect_prop(t: SimpleType, what: str):
        if not isinstance(t, PropType):
            raise HflTypeError(f"{what} must have type prop, got {t}")

    match phi:
        case Var(n, t):
            et = env.get(n)
            if et is None:
                raise HflTypeError(f"unbound variable {base_name(n)}")
            if et != t:
                raise HflTypeError(
                    f"variable {base_name(n)} annotated {t} but bound at {et}")
            return t
        case TrueF() | FalseF():
            return PROP
        case Or(l, r):
            expect_prop(typecheck(l, env), "disjunct")
            expect_prop(typecheck(r, env), "disjunct")
            return PROP
        case And(l, r):
            expect_prop(typecheck(l, env), "conjunct")
            expect_prop(typecheck(r, env), "conjunct")
            return PROP
        case Diamond(_, b) | Box(_, b):
            expect_prop(typecheck(b, env), "modal operand")
            return PROP
        case Mu(x, t, b) | Nu(x, t, b):
            bt = typecheck(b, {**env, x: t})
            if bt != t:
                raise HflTypeError(f"fixpoint body has type {bt}, binder says {t}")
            return t
        case Lambda(x, t, b):
            return Arrow(t, typecheck(b, {**env, x: t}))
        case App(f, a):
            ft = typecheck(f, env)
            if not isinstance(ft, Arrow):
                raise HflTypeError(f"cannot apply a value of type {ft}")
            at = (typecheck_int(a, env) if isinstance(a, IntExpr)
                  else typecheck(a, env))
            if at != ft.arg:
                raise HflTypeError(f"argument has type {at}, expected {ft.arg}")
            return ft.res
        case Atom(_, l, r):
            typecheck_int(l, env)
            typecheck_int(r, env)
            return PROP
        case Exists(x, b, lower) | Forall(x, b, lower):
            for e in lower:
                typecheck_int(e, env)
            expect_prop(typecheck(b, {**env, x: INT}), "quantifier body")
            return PROP
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Substitution


def subst_int(e: IntExpr, x: str, repl: IntExpr) -> IntExpr:
    match e:
        case IConst(_):
            return e
        case IVar(n):
            return repl if n == x else e
        case Add(l, r):
            return Add(subst_int(l, x, repl), subst_int(r, x, repl))
        case Sub(l, r):
            return Sub(subst_int(l, x, repl), subst_int(r, x, repl))
        case INeg(b):
            return INeg(subst_int(b, x, repl))
    raise TypeError(f"not an integer expression: {e!r}")


def substitute(phi: Formula, x: str, repl: Formula | IntExpr) -> Formula:
    """Capture-avoiding substitution of repl for the free variable x."""
    repl_fv = int_free_vars(repl) if isinstance(repl, IntExpr) else free_vars(repl)

    def go(phi: Formula) -> Formula:
        match phi:
            case Var(n, t):
                if n != x:
                    return phi
                if isinstance(repl, IntExpr):
                    raise HflTypeError(
                        f"cannot substitute an integer expression for "
                        f"formula variable {base_name(n)}")
                return repl
            case TrueF() | FalseF() | Atom(_, _, _):
                return _subst_ints_in(phi, x, repl)
            case Or(l, r):
                return Or(go(l), go(r))
            case And(l, r):
                return And(go(l), go(r))
            case Diamond(a, b):
                return Diamond(a, go(b))
            case Box(a, b):
                return Box(a, go(b))
            case Mu(y, t, b) | Nu(y, t, b) | Lambda(y, t, b) as node:
                ctor = type(node)
                if y == x:
                    return node
                if y in repl_fv and x in free_vars(b):
                    y2 = fresh_name(y)
                    b = substitute(b, y, Var(y2, t) if not isinstance(t, IntType)
                                   else IVar(y2))
                    y = y2
                return ctor(y, t, go(b))
            case Exists(y, b, lower) | Forall(y, b, lower) as node:
                ctor = type(node)
                lower2 = tuple(subst_int(e, x, repl) for e in lower) \
                    if isinstance(repl, IntExpr) else lower
                if y == x:
                    return ctor(y, b, lower2)
                if y in repl_fv and x in free_vars(b):
                    y2 = fresh_name(y)
                    b = substitute(b, y, IVar(y2))
                    y = y2
                return ctor(y, go(b), lower2)
            case App(f, a):
                a2 = (subst_int(a, x, repl) if isinstance(a, IntExpr)
                      and isinstance(repl, IntExpr)
                      else a if isinstance(a, IntExpr) else go(a))
                if isinstance(a, IntExpr) and not isinstance(repl, IntExpr) \
                        and x in int_free_vars(a):
                    raise HflTypeError(
                        f"cannot substitute a formula for integer variable "
                        f"{base_name(x)}")
                return App(go(f), a2)
        raise TypeError(f"not a formula: {phi!r}")

    def _subst_ints_in(phi, x, repl):
        if isinstance(phi, Atom) and isinstance(repl, IntExpr):
            return Atom(phi.op, subst_int(phi.lhs, x, repl),
                        subst_int(phi.rhs, x, repl))
        return phi

    return go(phi)


# ---------------------------------------------------------------------------
# Dualization, unfolding, beta


def dual_int_atom(a: Atom) -> Atom:
    return Atom(DUAL_OP[a.op], a.lhs, a.rhs)


def dualize(phi: Formula) -> Formula:
    """De Morgan dual: swaps and/or, mu/nu, diamond/box, true/false and
    complements atoms.  For closed prop formulas, M |= dual(phi) iff not
    M |= phi."""
    match phi:
        case Var(_, _):
            return phi
        case TrueF():
            return FALSE
        case FalseF():
            return TRUE
        case Or(l, r):
            return And(dualize(l), dualize(r))
        case And(l, r):
            return Or(dualize(l), dualize(r))
        case Diamond(a, b):
            return Box(a, dualize(b))
        case Box(a, b):
            return Diamond(a, dualize(b))
        case Mu(x, t, b):
            return Nu(x, t, dualize(b))
        case Nu(x, t, b):
            return Mu(x, t, dualize(b))
        case Lambda(x, t, b):
            return Lambda(x, t, dualize(b))
        case App(f, a):
            return App(dualize(f), a if isinstance(a, IntExpr) else dualize(a))
        case Atom(_, _, _):
            return dual_int_atom(phi)
        case Exists(x, b, lower):
            return Forall(x, dualize(b), lower)
        case Forall(x, b, lower):
            return Exists(x, dualize(b), lower)
    raise TypeError(f"not a formula: {phi!r}")


class NotAFixpoint(HflError):
    pass


class NoRedex(HflError):
    pass


def unfold_fixpoint(phi: Formula) -> Formula:
    """sigma x. phi  -->  phi[x := sigma x. phi] (root fixpoint only)."""
    match phi:
        case Mu(x, _, b) | Nu(x, _, b):
            return substitute(b, x, phi)
        case _:
            raise NotAFixpoint(f"not a fixpoint formula: {type(phi).__name__}")


def beta_step(phi: Formula) -> Formula:
    """One beta-contraction of a root App-of-Lambda redex."""
    match phi:
        case App(Lambda(x, _, b), a):
            return substitute(b, x, a)
        case _:
            raise NoRedex("no beta redex at the root")


def beta_step_anywhere(phi: Formula) -> Formula:
    """Reduce the leftmost-outermost beta redex anywhere in phi."""

    def go(phi: Formula) -> Formula | None:
        if isinstance(phi, App) and isinstance(phi.fun, Lambda):
            return beta_step(phi)
        match phi:
            case Or(l, r):
                l2 = go(l)
                if l2 is not None:
                    return Or(l2, r)
                r2 = go(r)
                return None if r2 is None else Or(l, r2)
            case And(l, r):
                l2 = go(l)
                if l2 is not None:
                    return And(l2, r)
                r2 = go(r)
                return None if r2 is None else And(l, r2)
            case Diamond(a, b):
                b2 = go(b)
                return None if b2 is None else Diamond(a, b2)
            case Box(a, b):
                b2 = go(b)
                return None if b2 is None else Box(a, b2)
            case Mu(x, t, b):
                b2 = go(b)
                return None if b2 is None else Mu(x, t, b2)
            case Nu(x, t, b):
                b2 = go(b)
                return None if b2 is None else Nu(x, t, b2)
            case Lambda(x, t, b):
                b2 = go(b)
                return None if b2 is None else Lambda(x, t, b2)
            case Exists(x, b, lower) | Forall(x, b, lower) as node:
                b2 = go(b)
                return None if b2 is None else type(node)(x, b2, lower)
            case App(f, a):
                f2 = go(f)
                if f2 is not None:
                    return App(f2, a)
                if isinstance(a, IntExpr):
                    return None
                a2 = go(a)
                return None if a2 is None else App(f, a2)
            case _:
                return None

    out = go(phi)
    if out is None:
        raise NoRedex("no beta redex anywhere in the formula")
    return out


# ---------------------------------------------------------------------------
# Alpha equivalence


def alpha_eq(a: Formula, b: Formula) -> bool:
    """Structural equality modulo bound-variable names."""

    def ieq(x: IntExpr, y: IntExpr, la: dict, lb: dict) -> bool:
        match (x, y):
            case (IConst(m), IConst(n)):
                return m == n
            case (IVar(m), IVar(n)):
                return la.get(m, ("f", m)) == lb.get(n, ("f", n))
            case (Add(l1, r1), Add(l2, r2)) | (Sub(l1, r1), Sub(l2, r2)):
                return ieq(l1, l2, la, lb) and ieq(r1, r2, la, lb)
            case (INeg(u), INeg(v)):
                return ieq(u, v, la, lb)
            case _:
                return False

    def go(a: Formula, b: Formula, la: dict, lb: dict, depth: int) -> bool:
        if type(a) is not type(b):
            return False
        match (a, b):
            case (Var(m, t1), Var(n, t2)):
                return t1 == t2 and la.get(m, ("f", m)) == lb.get(n, ("f", n))
            case (TrueF(), TrueF()) | (FalseF(), FalseF()):
                return True
            case ((Or(l1, r1), Or(l2, r2)) | (And(l1, r1), And(l2, r2))):
                return go(l1, l2, la, lb, depth) and go(r1, r2, la, lb, depth)
            case ((Diamond(x, b1), Diamond(y, b2)) | (Box(x, b1), Box(y, b2))):
                return x == y and go(b1, b2, la, lb, depth)
            case ((Mu(x, t1, b1), Mu(y, t2, b2))
                  | (Nu(x, t1, b1), Nu(y, t2, b2))
                  | (Lambda(x, t1, b1), Lambda(y, t2, b2))):
                if t1 != t2:
                    return False
                return go(b1, b2, {**la, x: ("b", depth)},
                          {**lb, y: ("b", depth)}, depth + 1)
            case ((Exists(x, b1, lw1), Exists(y, b2, lw2))
                  | (Forall(x, b1, lw1), Forall(y, b2, lw2))):
                if len(lw1) != len(lw2):
                    return False
                if not all(ieq(e1, e2, la, lb) for e1, e2 in zip(lw1, lw2)):
                    return False
                return go(b1, b2, {**la, x: ("b", depth)},
                          {**lb, y: ("b", depth)}, depth + 1)
            case (App(f1, a1), App(f2, a2)):
                if not go(f1, f2, la, lb, depth):
                    return False
                if isinstance(a1, IntExpr) != isinstance(a2, IntExpr):
                    return False
                if isinstance(a1, IntExpr):
                    return ieq(a1, a2, la, lb)
                return go(a1, a2, la, lb, depth)
            case (Atom(o1, l1, r1), Atom(o2, l2, r2)):
                return o1 == o2 and ieq(l1, l2, la, lb) and ieq(r1, r2, la, lb)
            case _:
                return False

    return go(a, b, {}, {}, 0)
