"""Two evaluators over finite lattices.

``check_pure`` is an exact model checker for pure HFL over a finite LTS:
lambdas are tabulated over enumerated monotone-function domains and
fixpoints are iterated from lattice bottom (mu) or top (nu).

``eval_bounded`` evaluates full HFL(Z) with integer arguments restricted to
a window [-B, B].  Out-of-window applications and atoms contribute false,
which makes the result an underapproximation: true implies M |= phi.
Fixpoints are solved by demand-driven chaotic iteration restricted to the
argument tuples actually reachable from the query.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import transforms
from .lts import Lts, trivial_model
from .syntax import (
    Add, And, App, Arrow, Atom, Box, Diamond, Exists, FalseF, Forall, HflError,
    IConst, INeg, IVar, IntExpr, IntType, Lambda, Mu, Nu, Or, PropType, Sub,
    TrueF, Var, Formula, SimpleType, arg_types, free_vars, is_pure, typecheck,
)


class ImpureFormulaError(HflError):
    pass


class TableCapError(HflError):
    pass


_CMP_FN = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


# ---------------------------------------------------------------------------
# Exact pure-HFL model checking


@dataclass
class PureStats:
    """Per-fixpoint iteration counts paired with the lattice-height bound."""

    iterations: list[tuple[int, int]] = field(default_factory=list)

    @property
    def max_iterations(self) -> int:
        return max((i for i, _ in self.iterations), default=0)


class _PureEvaluator:
    def __init__(self, lts: Lts, table_cap: int):
        self.lts = lts
        self.table_cap = table_cap
        self.full = frozenset(lts.states)
        self._elems: dict[SimpleType, list] = {}
        self._index: dict[SimpleType, dict] = {}
        self.stats = PureStats()

    # -- lattice structure

    def elems(self, t: SimpleType) -> list:
        if t in self._elems:
            return self._elems[t]
        if isinstance(t, PropType):
            states = list(self.lts.states)
            if 2 ** len(states) > self.table_cap:
                raise TableCapError(
                    f"prop lattice has 2^{len(states)} elements, over the "
                    f"table cap {self.table_cap}")
            out = []
            for mask in range(2 ** len(states)):
                out.append(frozenset(s for i, s in enumerate(states)
                                     if mask >> i & 1))
        elif isinstance(t, Arrow):
            dom = self.elems(t.arg)
            cod = self.elems(t.res)
            le_d = [[self.leq(t.arg, a, b) for b in dom] for a in dom]
            out = []

            def backtrack(prefix: list):
                if len(out) > self.table_cap:
                    raise TableCapError(
                        f"function domain for {t} exceeds the table cap "
                        f"{self.table_cap}")
                i = len(prefix)
                if i == len(dom):
                    out.append(tuple(prefix))
                    return
                for v in cod:
                    ok = True
                    for j in range(i):
                        if le_d[j][i] and not self.leq(t.res, prefix[j], v):
                            ok = False
                            break
                        if le_d[i][j] and not self.leq(t.res, v, prefix[j]):
                            ok = False
                            break
                    if ok:
                        backtrack(prefix + [v])

            backtrack([])
        else:
            raise ImpureFormulaError("integer type has no finite lattice")
        self._elems[t] = out
        self._index[t] = {v: i for i, v in enumerate(out)}
        return out

    def leq(self, t: SimpleType, a, b) -> bool:
        if isinstance(t, PropType):
            return a <= b
        return all(self.leq(t.res, x, y) for x, y in zip(a, b))

    def bottom(self, t: SimpleType):
        if isinstance(t, PropType):
            return frozenset()
        return tuple(self.bottom(t.res) for _ in self.elems(t.arg))

    def top(self, t: SimpleType):
        if isinstance(t, PropType):
            return self.full
        return tuple(self.top(t.res) for _ in self.elems(t.arg))

    def height(self, t: SimpleType) -> int:
        if isinstance(t, PropType):
            return len(self.lts.states)
        return len(self.elems(t.arg)) * self.height(t.res)

    # -- evaluation; values are frozensets (prop) or tuples (functions)

    def eval(self, phi: Formula, env: dict, tenv: dict):
        match phi:
            case Var(n, _):
                return env[n]
            case TrueF():
                return self.full
            case FalseF():
                return frozenset()
            case Or(l, r):
                return self.eval(l, env, tenv) | self.eval(r, env, tenv)
            case And(l, r):
                return self.eval(l, env, tenv) & self.eval(r, env, tenv)
            case Diamond(a, b):
                bv = self.eval(b, env, tenv)
                return frozenset(s for s in self.lts.states
                                 if self.lts.successors(s, a) & bv)
            case Box(a, b):
                bv = self.eval(b, env, tenv)
                return frozenset(s for s in self.lts.states
                                 if self.lts.successors(s, a) <= bv)
            case Lambda(x, t, b):
                return tuple(self.eval(b, {**env, x: d}, {**tenv, x: t})
                             for d in self.elems(t))
            case App(f, a):
                ft = typecheck(f, tenv)
                fv = self.eval(f, env, tenv)
                av = self.eval(a, env, tenv)
                return fv[self._index[ft.arg][av]]
            case Mu(x, t, b) | Nu(x, t, b):
                cur = self.bottom(t) if isinstance(phi, Mu) else self.top(t)
                count = 0
                while True:
                    nxt = self.eval(b, {**env, x: cur}, {**tenv, x: t})
                    count += 1
                    if nxt == cur:
                        break
                    cur = nxt
                self.stats.iterations.append((count, self.height(t) + 1))
                return cur
            case _:
                raise ImpureFormulaError(
                    f"pure model checking cannot handle {type(phi).__name__}")


def check_pure(lts: Lts, phi: Formula, table_cap: int = 200000) -> bool:
    ok, _ = check_pure_stats(lts, phi, table_cap)
    return ok


def check_pure_stats(lts: Lts, phi: Formula,
                     table_cap: int = 200000) -> tuple[bool, PureStats]:
    """Exact M |= phi for closed pure formulas of type prop."""
    if not is_pure(phi):
        raise ImpureFormulaError("formula contains integers or quantifier sugar")
    t = typecheck(phi, {})
    if not isinstance(t, PropType):
        raise ImpureFormulaError(f"model checking needs type prop, got {t}")
    ev = _PureEvaluator(lts, table_cap)
    denotation = ev.eval(phi, {}, {})
    return lts.initial in denotation, ev.stats


# ---------------------------------------------------------------------------
# Bounded-integer underapproximating evaluation


class _Bot:
    """Absorbing bottom: applying it yields itself; as a prop it is empty."""

    def __repr__(self):
        return "BOT"


BOT = _Bot()


@dataclass
class _Closure:
    node: Lambda
    env: dict
    ev: "_BoundedEvaluator"


@dataclass
class _TableFun:
    argtype: SimpleType
    table: dict
    ev: "_BoundedEvaluator"


@dataclass
class _Partial:
    fix: "_FixFun"
    args: tuple


class _FixFun:
    def __init__(self, node, env, ev: "_BoundedEvaluator"):
        self.node = node
        self.env = env
        self.ev = ev
        self.is_mu = isinstance(node, Mu)
        self.argts = arg_types(node.vtype)
        self.init = frozenset() if self.is_mu else ev.full
        self.approx: dict[tuple, frozenset] = {}
        self.solving = False
        self.new_args = False

    def call(self, keys: tuple) -> frozenset:
        if keys not in self.approx:
            if len(self.approx) >= self.ev.table_cap:
                raise TableCapError(
                    "fixpoint table exceeded the configured cap "
                    f"{self.ev.table_cap}")
            self.approx[keys] = self.init
            self.new_args = True
        if not self.solving:
            self.solve()
        return self.approx[keys]

    def solve(self):
        self.solving = True
        try:
            changed = True
            while changed:
                changed = False
                self.new_args = False
                for keys in list(self.approx):
                    v = self.body_value(keys)
                    if v != self.approx[keys]:
                        self.approx[keys] = v
                        changed = True
                changed = changed or self.new_args
        finally:
            self.solving = False

    def body_value(self, keys: tuple) -> frozenset:
        # zero-argument fixpoints denote plain propositions, so recursive
        # occurrences stand for the current approximation rather than a
        # re-applicable function value
        rec = self if self.argts else self.approx[()]
        env = {**self.env, self.node.var: rec}
        val = self.ev.eval(self.node.body, env)
        for key in keys:
            val = self.ev.apply(val, self.ev.key_to_value(key))
        return self.ev.coerce_prop(val)


class _BoundedEvaluator:
    def __init__(self, lts: Lts, window: int, table_cap: int):
        self.lts = lts
        self.window = window
        self.table_cap = table_cap
        self.full = frozenset(lts.states)
        self.fix_cache: dict = {}
        self._elems: dict[SimpleType, list] = {}

    # -- canonical keys for fixpoint-argument tuples

    def canonical(self, v):
        if isinstance(v, bool):
            raise TypeError("boolean is not a semantic value")
        if isinstance(v, int):
            return v
        if isinstance(v, frozenset):
            return ("p", v)
        if v is BOT:
            return ("bot",)
        # function-typed argument: tabulate over its first-argument domain
        at = self._first_arg_type(v)
        items = tuple(self.canonical(self.apply(v, d))
                      for d in self.domain_elems(at))
        return ("f", str(at), items)

    def _first_arg_type(self, v) -> SimpleType:
        if isinstance(v, _Closure):
            return v.node.vtype
        if isinstance(v, _FixFun):
            return v.argts[0]
        if isinstance(v, _Partial):
            return v.fix.argts[len(v.args)]
        if isinstance(v, _TableFun):
            return v.argtype
        raise HflError(f"not a function value: {v!r}")

    def key_to_value(self, key):
        if isinstance(key, int):
            return key
        if key == ("bot",):
            return BOT
        if key[0] == "p":
            return key[1]
        _, at_text, items = key
        at = next(t for t in self._elems if str(t) == at_text)
        dom_keys = [self.canonical(d) for d in self.domain_elems(at)]
        return _TableFun(at, dict(zip(dom_keys,
                                      [self.key_to_value(i) for i in items])),
                         self)

    def domain_elems(self, t: SimpleType) -> list:
        if t in self._elems:
            return self._elems[t]
        if isinstance(t, IntType):
            out = list(range(-self.window, self.window + 1))
        elif isinstance(t, PropType):
            states = list(self.lts.states)
            if 2 ** len(states) > self.table_cap:
                raise TableCapError("prop domain exceeds the table cap")
            out = [frozenset(s for i, s in enumerate(states) if mask >> i & 1)
                   for mask in range(2 ** len(states))]
        else:
            raise TableCapError(
                "tabulating function-typed fixpoint arguments of type "
                f"{t} is not supported at this order")
        self._elems[t] = out
        return out

    # -- application

    def coerce_prop(self, v) -> frozenset:
        if v is BOT:
            return frozenset()
        if isinstance(v, frozenset):
            return v
        raise HflError(f"expected a proposition value, got {v!r}")

    def apply(self, fv, av):
        if fv is BOT:
            return BOT
        if isinstance(av, int) and abs(av) > self.window:
            return BOT
        if isinstance(fv, _Closure):
            return self.eval(fv.node.body, {**fv.env, fv.node.var: av})
        if isinstance(fv, _TableFun):
            return fv.table.get(self.canonical(av), BOT)
        if isinstance(fv, _FixFun):
            fv = _Partial(fv, ())
        if isinstance(fv, _Partial):
            args = fv.args + (self.canonical(av),)
            if len(args) == len(fv.fix.argts):
                return fv.fix.call(args)
            return _Partial(fv.fix, args)
        raise HflError(f"cannot apply {fv!r}")

    # -- evaluation

    def eval(self, phi: Formula, env: dict):
        match phi:
            case Var(n, _):
                return env[n]
            case TrueF():
                return self.full
            case FalseF():
                return frozenset()
            case Or(l, r):
                return self.coerce_prop(self.eval(l, env)) \
                    | self.coerce_prop(self.eval(r, env))
            case And(l, r):
                return self.coerce_prop(self.eval(l, env)) \
                    & self.coerce_prop(self.eval(r, env))
            case Diamond(a, b):
                bv = self.coerce_prop(self.eval(b, env))
                return frozenset(s for s in self.lts.states
                                 if self.lts.successors(s, a) & bv)
            case Box(a, b):
                bv = self.coerce_prop(self.eval(b, env))
                return frozenset(s for s in self.lts.states
                                 if self.lts.successors(s, a) <= bv)
            case Lambda(_, _, _):
                return _Closure(phi, env, self)
            case Mu(_, _, _) | Nu(_, _, _):
                fix = self.fixpoint(phi, env)
                if not fix.argts:
                    return fix.call(())
                return fix
            case App(f, a):
                fv = self.eval(f, env)
                av = self.eval_int(a, env) if isinstance(a, IntExpr) \
                    else self.eval(a, env)
                return self.apply(fv, av)
            case Atom(op, l, r):
                lv = self.eval_int(l, env)
                rv = self.eval_int(r, env)
                if abs(lv) > self.window or abs(rv) > self.window:
                    return frozenset()
                return self.full if _CMP_FN[op](lv, rv) else frozenset()
            case Exists(_, _, _) | Forall(_, _, _):
                raise HflError("quantifier sugar must be desugared before "
                               "bounded evaluation")
        raise TypeError(f"not a formula: {phi!r}")

    def fixpoint(self, node, env) -> _FixFun:
        key_parts = []
        cacheable = True
        for n in sorted(free_vars(node)):
            v = env[n]
            if isinstance(v, (int, frozenset)):
                key_parts.append((n, v))
            else:
                cacheable = False
                break
        if cacheable:
            key = (id(node), tuple(key_parts))
            fix = self.fix_cache.get(key)
            if fix is None:
                fix = _FixFun(node, env, self)
                self.fix_cache[key] = fix
            return fix
        return _FixFun(node, env, self)

    def eval_int(self, e: IntExpr, env: dict) -> int:
        match e:
            case IConst(n):
                return n
            case IVar(x):
                return env[x]
            case Add(l, r):
                return self.eval_int(l, env) + self.eval_int(r, env)
            case Sub(l, r):
                return self.eval_int(l, env) - self.eval_int(r, env)
            case INeg(b):
                return -self.eval_int(b, env)
        raise TypeError(f"not an integer expression: {e!r}")


def eval_bounded(phi: Formula, window: int, lts: Lts | None = None,
                 table_cap: int = 200000) -> bool:
    """Underapproximate truth of a closed prop formula with integers
    restricted to [-window, window].  true implies M |= phi."""
    if window < 0:
        raise ValueError("window must be non-negative")
    m = lts if lts is not None else trivial_model()
    t = typecheck(phi, {})
    if not isinstance(t, PropType):
        raise HflError(f"bounded evaluation needs type prop, got {t}")
    phi = transforms.desugar_quantifiers(phi)
    ev = _BoundedEvaluator(m, window, table_cap)
    return m.initial in ev.coerce_prop(ev.eval(phi, {}))
