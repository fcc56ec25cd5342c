"""Bridge between constrained Horn clauses (CHC) and HFL(Z) formulas.

A CHC system is satisfiable iff the HFL formula produced by
:func:`chc_to_hfl` is valid, and dually for :func:`hfl_to_chc`.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field

from . import smt
from .syntax import (
    Add, And, App, Atom, Box, Diamond, Exists, FALSE, FalseF, Forall, HflError,
    IConst, INT, INeg, IVar, IntExpr, IntType, Lambda, Mu, Nu, Or, PROP, Sub,
    TRUE, TrueF, Var, Formula, app, arg_types, arrow, base_name, dual_int_atom,
    dualize, fresh_name, int_free_vars, lam, subst_int, typecheck,
)
from .transforms import EntailmentOracle, WindowEntailment

# Body items keep their clause order: ("atom", Atom) or ("pred", name, args).
BodyItem = tuple


class ChcShapeError(HflError):
    """The formula or clause set falls outside the supported fragment."""


@dataclass(frozen=True)
class DefiniteClause:
    head_pred: str
    head_args: tuple[IntExpr, ...]
    body: tuple[BodyItem, ...]

    def variables(self) -> list[str]:
        return _clause_vars(list(self.head_args), self.body)


@dataclass(frozen=True)
class GoalClause:
    body: tuple[BodyItem, ...]

    def variables(self) -> list[str]:
        return _clause_vars([], self.body)


def _clause_vars(head_args: list[IntExpr], body) -> list[str]:
    seen: list[str] = []

    def add(e: IntExpr):
        for v in _ordered_int_vars(e):
            if v not in seen:
                seen.append(v)

    for e in head_args:
        add(e)
    for item in body:
        if item[0] == "atom":
            add(item[1].lhs)
            add(item[1].rhs)
        else:
            for e in item[2]:
                add(e)
    return seen


def _ordered_int_vars(e: IntExpr) -> list[str]:
    match e:
        case IConst(_):
            return []
        case IVar(x):
            return [x]
        case Add(l, r) | Sub(l, r):
            return _ordered_int_vars(l) + _ordered_int_vars(r)
        case INeg(b):
            return _ordered_int_vars(b)
    raise TypeError(f"not an integer expression: {e!r}")


@dataclass(frozen=True)
class ChcSystem:
    """Predicates with arities, definite clauses, and goal clauses.

    Clause variables are plain (source-level) names local to their clause.
    """

    preds: dict[str, int]
    definite: tuple[DefiniteClause, ...]
    goals: tuple[GoalClause, ...]

    def __post_init__(self):
        for c in self.definite:
            if c.head_pred not in self.preds:
                raise ChcShapeError(f"undeclared predicate {c.head_pred!r}")
            if len(c.head_args) != self.preds[c.head_pred]:
                raise ChcShapeError(
                    f"head {c.head_pred} has {len(c.head_args)} arguments, "
                    f"declared arity is {self.preds[c.head_pred]}")
        for c in list(self.definite) + list(self.goals):
            for item in c.body:
                if item[0] == "pred":
                    _, name, args = item
                    if name not in self.preds:
                        raise ChcShapeError(f"undeclared predicate {name!r}")
                    if len(args) != self.preds[name]:
                        raise ChcShapeError(
                            f"application of {name} has {len(args)} "
                            f"arguments, declared arity is {self.preds[name]}")


@dataclass(frozen=True)
class SolverVerdict:
    kind: str  # "sat" | "unsat" | "unknown"
    detail: str = ""


# ---------------------------------------------------------------------------
# CHC -> HFL


def chc_to_hfl(system: ChcSystem) -> Formula:
    """Encode satisfiability of the system as validity of a closed formula.

    Definite clauses become least-fixpoint definitions (mutual recursion is
    handled by nesting), goal clauses are dualized and conjoined.
    """

    def pred_formula(p: str, outer: dict[str, Var]) -> Formula:
        arity = system.preds[p]
        t = arrow(*([INT] * arity), PROP) if arity else PROP
        binder = fresh_name(p)
        outer = {**outer, p: Var(binder, t)}
        clauses = [c for c in system.definite if c.head_pred == p]
        param_bases = _param_names(clauses, arity)
        params = [fresh_name(b) for b in param_bases]

        bodies = [_clause_body(c, params, outer, pred_formula)
                  for c in clauses]
        if not bodies:
            disj: Formula = FALSE
        else:
            disj = bodies[0]
            for b in bodies[1:]:
                disj = Or(disj, b)
        return Mu(binder, t, lam([(x, INT) for x in params], disj))

    def goal_formula(goal: GoalClause) -> Formula:
        gvars = goal.variables()
        env = {v: fresh_name(v) for v in gvars}
        parts: list[Formula] = []
        for item in goal.body:
            if item[0] == "atom":
                parts.append(dual_int_atom(_rename_atom(item[1], env)))
            else:
                _, name, args = item
                pred = dualize(pred_formula(name, {}))
                parts.append(app(pred, *[_rename(e, env) for e in args]))
        if not parts:
            body: Formula = FALSE
        else:
            body = parts[0]
            for p in parts[1:]:
                body = Or(body, p)
        for v in reversed(gvars):
            body = Forall(env[v], body)
        return body

    goals = [goal_formula(g) for g in system.goals]
    if not goals:
        return TRUE
    out = goals[0]
    for g in goals[1:]:
        out = And(out, g)
    return out


def _param_names(clauses: list[DefiniteClause], arity: int) -> list[str]:
    for c in clauses:
        args = c.head_args
        if all(isinstance(a, IVar) for a in args) \
                and len({a.name for a in args}) == arity:
            return [a.name for a in args]
    return [f"x{i + 1}" for i in range(arity)]


def _rename(e: IntExpr, env: dict[str, str]) -> IntExpr:
    for v, internal in env.items():
        e = subst_int(e, v, IVar(internal))
    return e


def _rename_atom(a: Atom, env: dict[str, str]) -> Atom:
    return Atom(a.op, _rename(a.lhs, env), _rename(a.rhs, env))


def _clause_body(c: DefiniteClause, params: list[str],
                 outer: dict[str, Var], pred_formula) -> Formula:
    env: dict[str, str] = {}
    equalities: list[Atom] = []
    for param, arg in zip(params, c.head_args):
        if isinstance(arg, IVar) and arg.name not in env:
            env[arg.name] = param
        else:
            equalities.append(Atom("=", IVar(param), arg))
    local_sources = [v for v in c.variables() if v not in env]
    for v in local_sources:
        env[v] = fresh_name(v)
    # equalities may mention locals, so rename them after env is complete
    equalities = [_rename_atom(a, env) for a in equalities]

    parts: list[Formula] = list(equalities)
    for item in c.body:
        if item[0] == "atom":
            parts.append(_rename_atom(item[1], env))
        else:
            _, name, args = item
            target: Formula = outer[name] if name in outer \
                else pred_formula(name, outer)
            parts.append(app(target, *[_rename(e, env) for e in args]))
    if not parts:
        body: Formula = TRUE
    else:
        body = parts[0]
        for p in parts[1:]:
            body = And(body, p)
    for v in reversed(local_sources):
        body = Exists(env[v], body)
    return body


# ---------------------------------------------------------------------------
# HFL -> CHC


def hfl_to_chc(phi: Formula) -> ChcSystem:
    """Extract a refutation clause system from a closed first-order formula
    whose only fixpoints are greatest fixpoints over int^k -> prop.

    The formula is dualized (turning nu into mu); the mu-definitions become
    definite clauses and the rest becomes goal clauses, so the system is
    satisfiable iff the input formula is valid.
    """
    t = typecheck(phi)
    if t != PROP:
        raise ChcShapeError(f"expected a closed prop formula, got type {t}")
    _check_chc_fragment(phi)

    psi = dualize(phi)
    preds: dict[str, int] = {}
    definite: list[DefiniteClause] = []

    def define(mu: Mu) -> str:
        name = base_name(mu.var)
        ats = arg_types(mu.vtype)
        if name in preds:
            # a nested copy of an already-extracted definition
            if preds[name] != len(ats):
                raise ChcShapeError(
                    f"two fixpoints named {name} with different arities")
            return name
        preds[name] = len(ats)
        params: list[str] = []
        body = mu.body
        ienv: dict[str, str] = {}
        taken: set[str] = set()
        for at in ats:
            if not isinstance(at, IntType):
                raise ChcShapeError(
                    f"fixpoint {name} has a non-integer parameter; only "
                    "first-order clauses are supported")
            if not isinstance(body, Lambda):
                raise ChcShapeError(
                    f"fixpoint {name} body must be a lambda chain over its "
                    "parameters")
            p = _source_local(base_name(body.var), taken)
            taken.add(p)
            ienv[body.var] = p
            params.append(p)
            body = body.body
        penv = {mu.var: name}
        for items in _disjuncts(body, ienv, penv, taken, define):
            definite.append(DefiniteClause(
                head_pred=name,
                head_args=tuple(IVar(p) for p in params),
                body=tuple(items)))
        return name

    goals = [GoalClause(body=tuple(items))
             for items in _disjuncts(psi, {}, {}, set(), define)]
    return ChcSystem(preds=preds, definite=tuple(definite),
                     goals=tuple(goals))


def _check_chc_fragment(phi: Formula):
    from .syntax import subformulas

    for s in subformulas(phi):
        match s:
            case Diamond(_, _) | Box(_, _):
                raise ChcShapeError(
                    "modal operators have no CHC counterpart")
            case Mu(x, _, _):
                raise ChcShapeError(
                    f"least fixpoint {base_name(x)} in the input; run "
                    "mu-elimination first (the CHC side of validity only "
                    "covers nu-formulas)")


def _source_local(base: str, taken: set[str]) -> str:
    if base and base not in taken:
        return base
    i = 1
    while f"{base or 'v'}{i}" in taken:
        i += 1
    return f"{base or 'v'}{i}"


def _disjuncts(phi: Formula, ienv: dict[str, str], penv: dict[str, str],
               taken: set[str], define) -> list[list[BodyItem]]:
    """DNF expansion of a dualized (mu-side) body into clause item lists."""
    match phi:
        case Or(l, r):
            return _disjuncts(l, ienv, penv, taken, define) \
                + _disjuncts(r, ienv, penv, taken, define)
        case And(l, r):
            left = _disjuncts(l, ienv, penv, taken, define)
            right = _disjuncts(r, ienv, penv, taken, define)
            return [a + b for a in left for b in right]
        case TrueF():
            return [[]]
        case FalseF():
            return []
        case Atom(op, l, r):
            return [[("atom", Atom(op, _to_source(l, ienv),
                                   _to_source(r, ienv)))]]
        case Exists(x, b, pieces):
            lname = _source_local(base_name(x), taken)
            ienv2 = {**ienv, x: lname}
            guards: list[BodyItem] = [
                ("atom", Atom(">=", IVar(lname), _to_source(p, ienv)))
                for p in pieces]
            inner = _disjuncts(b, ienv2, penv, taken | {lname}, define)
            return [guards + items for items in inner]
        case Forall(_, _, _):
            raise ChcShapeError(
                "universal quantification inside a clause body is outside "
                "the CHC fragment")
        case App(_, _):
            head = phi
            args: list[IntExpr] = []
            while isinstance(head, App):
                if not isinstance(head.arg, IntExpr):
                    raise ChcShapeError(
                        "higher-order application is outside the CHC fragment")
                args.append(head.arg)
                head = head.fun
            args.reverse()
            sargs = tuple(_to_source(a, ienv) for a in args)
            if isinstance(head, Var):
                if head.name not in penv:
                    raise ChcShapeError(
                        f"application head {base_name(head.name)} is not a "
                        "fixpoint variable")
                return [[("pred", penv[head.name], sargs)]]
            if isinstance(head, Mu):
                return [[("pred", define(head), sargs)]]
            raise ChcShapeError(
                f"unsupported application head {type(head).__name__}")
        case Mu(_, _, _):
            raise ChcShapeError(
                "a fixpoint must be applied to its integer arguments to "
                "become a clause predicate")
    raise ChcShapeError(
        f"{type(phi).__name__} is outside the CHC fragment")


def _to_source(e: IntExpr, ienv: dict[str, str]) -> IntExpr:
    match e:
        case IConst(_):
            return e
        case IVar(x):
            if x not in ienv:
                raise ChcShapeError(
                    f"integer variable {base_name(x)} is bound outside the "
                    "clause being extracted")
            return IVar(ienv[x])
        case Add(l, r):
            return Add(_to_source(l, ienv), _to_source(r, ienv))
        case Sub(l, r):
            return Sub(_to_source(l, ienv), _to_source(r, ienv))
        case INeg(b):
            return INeg(_to_source(b, ienv))
    raise TypeError(f"not an integer expression: {e!r}")


# ---------------------------------------------------------------------------
# SMT-LIB HORN emission and reading


def emit_smtlib_horn(system: ChcSystem) -> str:
    lines = ["(set-logic HORN)"]
    for name in sorted(system.preds):
        sorts = " ".join(["Int"] * system.preds[name])
        lines.append(f"(declare-fun {name} ({sorts}) Bool)")

    def item_sexpr(item: BodyItem) -> str:
        if item[0] == "atom":
            return smt.atom_to_sexpr(item[1])
        _, name, args = item
        if not args:
            return name
        return f"({name} {' '.join(smt.int_expr_to_sexpr(a) for a in args)})"

    def clause_sexpr(variables: list[str], body, head: str) -> str:
        if not body:
            impl = head
        elif len(body) == 1:
            impl = f"(=> {item_sexpr(body[0])} {head})"
        else:
            conj = " ".join(item_sexpr(i) for i in body)
            impl = f"(=> (and {conj}) {head})"
        if variables:
            binds = " ".join(f"({v} Int)" for v in variables)
            return f"(assert (forall ({binds}) {impl}))"
        return f"(assert {impl})"

    for c in system.definite:
        head = item_sexpr(("pred", c.head_pred, c.head_args))
        lines.append(clause_sexpr(c.variables(), c.body, head))
    for g in system.goals:
        lines.append(clause_sexpr(g.variables(), g.body, "false"))
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def parse_smtlib_horn(text: str) -> ChcSystem:
    preds: dict[str, int] = {}
    definite: list[DefiniteClause] = []
    goals: list[GoalClause] = []

    def read_item(s) -> BodyItem:
        if isinstance(s, str):
            if s in preds:
                return ("pred", s, ())
            raise ChcShapeError(f"unknown body item {s!r}")
        if s and isinstance(s[0], str) and s[0] in preds:
            return ("pred", s[0],
                    tuple(smt.sexpr_to_int_expr(a) for a in s[1:]))
        return ("atom", smt.sexpr_to_atom(s))

    def read_body(s) -> list[BodyItem]:
        if isinstance(s, list) and s and s[0] == "and":
            return [read_item(x) for x in s[1:]]
        if s == "true":
            return []
        return [read_item(s)]

    for form in smt.parse_sexprs(text):
        if not isinstance(form, list) or not form:
            raise ChcShapeError(f"unexpected toplevel form {form!r}")
        head = form[0]
        if head in ("set-logic", "set-info", "set-option", "check-sat",
                    "get-model", "exit"):
            continue
        if head == "declare-fun":
            _, name, sorts, res = form
            if res != "Bool" or any(s != "Int" for s in sorts):
                raise ChcShapeError(
                    f"predicate {name} must have sort Int^k -> Bool")
            preds[name] = len(sorts)
            continue
        if head == "declare-rel":
            _, name, sorts = form
            preds[name] = len(sorts)
            continue
        if head in ("assert", "rule", "query"):
            body = form[1]
            if isinstance(body, list) and body and body[0] == "forall":
                body = body[2]
            if head == "query":
                goals.append(GoalClause(body=tuple(read_body(body))))
                continue
            if isinstance(body, list) and body and body[0] == "=>":
                _, pre, post = body
                items = read_body(pre)
            else:
                pre, post = None, body
                items = []
            if post == "false":
                goals.append(GoalClause(body=tuple(items)))
            else:
                kind, name, args = read_item(post)
                if kind != "pred":
                    raise ChcShapeError(
                        "clause head must be a predicate application or false")
                if not all(isinstance(a, IVar) or isinstance(a, IntExpr)
                           for a in args):
                    raise ChcShapeError("malformed clause head")
                definite.append(DefiniteClause(
                    head_pred=name, head_args=tuple(args),
                    body=tuple(items)))
            continue
        raise ChcShapeError(f"unsupported command {head!r}")

    return ChcSystem(preds=preds, definite=tuple(definite),
                     goals=tuple(goals))


# ---------------------------------------------------------------------------
# External solver


class SolverError(HflError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """command is a shell-ish template with a {file} placeholder."""

    command: str
    timeout: float = 60.0


def solve_external(system: ChcSystem, config: SolverConfig,
                   cancel: threading.Event | None = None) -> SolverVerdict:
    """Run an external HORN solver on the emitted SMT-LIB script.

    Timeouts and cancellation give Unknown; a malformed answer gives Unknown
    with the raw output attached; failure to start the process raises.
    """
    script = emit_smtlib_horn(system)
    with tempfile.NamedTemporaryFile("w", suffix=".smt2",
                                     delete=False) as f:
        f.write(script)
        path = f.name
    argv = [a.replace("{file}", path) for a in shlex.split(config.command)]
    if path not in argv and "{file}" not in config.command:
        raise SolverError("solver command must contain a {file} placeholder")
    try:
        proc = subprocess.Popen(argv, stdout=subprocess.PIPE,
                                stderr=subprocess.PIPE, text=True)
    except OSError as e:
        raise SolverError(f"could not start solver {argv[0]!r}: {e}") from e

    deadline = time.monotonic() + config.timeout
    while proc.poll() is None:
        if cancel is not None and cancel.is_set():
            proc.kill()
            proc.wait()
            return SolverVerdict("unknown", "cancelled")
        if time.monotonic() > deadline:
            proc.kill()
            proc.wait()
            return SolverVerdict("unknown", "timeout")
        time.sleep(0.02)
    out, err = proc.communicate()
    lines = [ln.strip() for ln in out.splitlines() if ln.strip()]
    verdict = lines[0] if lines else ""
    if verdict in ("sat", "unsat", "unknown"):
        return SolverVerdict(verdict, "\n".join(lines[1:]))
    return SolverVerdict("unknown",
                         f"malformed solver output: {out!r} {err!r}")


# ---------------------------------------------------------------------------
# Model validation


def validate_model(system: ChcSystem,
                   model: dict[str, tuple[list[str], Formula]],
                   oracle: EntailmentOracle | None = None) -> bool | None:
    """Check that a candidate model (quantifier-free formula per predicate)
    satisfies every clause; None when the oracle cannot decide a clause."""
    oracle = oracle or WindowEntailment()

    def instantiate(name: str, args: tuple[IntExpr, ...]) -> Formula:
        params, body = model[name]
        if len(params) != len(args):
            raise ChcShapeError(
                f"model for {name} has {len(params)} parameters, "
                f"expected {len(args)}")
        return _qf_subst_parallel(body, dict(zip(params, args)))

    def hyps_of(body) -> list[Formula]:
        out: list[Formula] = []
        for item in body:
            if item[0] == "atom":
                out.append(item[1])
            else:
                _, name, args = item
                out.append(instantiate(name, args))
        return out

    undecided = False
    for c in system.definite:
        concl = instantiate(c.head_pred, c.head_args)
        v = oracle.entails(hyps_of(c.body), concl)
        if v is False:
            return False
        if v is None:
            undecided = True
    for g in system.goals:
        v = oracle.entails(hyps_of(g.body), FALSE)
        if v is False:
            return False
        if v is None:
            undecided = True
    return None if undecided else True


def _qf_subst_parallel(phi: Formula, mapping: dict[str, IntExpr]) -> Formula:
    def ie(e: IntExpr) -> IntExpr:
        match e:
            case IConst(_):
                return e
            case IVar(x):
                return mapping.get(x, e)
            case Add(l, r):
                return Add(ie(l), ie(r))
            case Sub(l, r):
                return Sub(ie(l), ie(r))
            case INeg(b):
                return INeg(ie(b))
        raise TypeError(f"not an integer expression: {e!r}")

    match phi:
        case Atom(op, l, r):
            return Atom(op, ie(l), ie(r))
        case And(l, r):
            return And(_qf_subst_parallel(l, mapping),
                       _qf_subst_parallel(r, mapping))
        case Or(l, r):
            return Or(_qf_subst_parallel(l, mapping),
                      _qf_subst_parallel(r, mapping))
        case TrueF() | FalseF():
            return phi
    raise ChcShapeError(
        f"model formulas must be quantifier-free arithmetic, got "
        f"{type(phi).__name__}")
