"""SMT-LIB s-expression helpers shared by the CHC bridge and the
entailment oracles."""

from __future__ import annotations

from .syntax import (
    Add, And, Atom, FalseF, HflError, IConst, INeg, IVar, IntExpr, Or, Sub,
    TrueF, Formula, base_name,
)


def int_expr_to_sexpr(e: IntExpr) -> str:
    match e:
        case IConst(n):
            return str(n) if n >= 0 else f"(- {-n})"
        case IVar(x):
            return base_name(x)
        case Add(l, r):
            return f"(+ {int_expr_to_sexpr(l)} {int_expr_to_sexpr(r)})"
        case Sub(l, r):
            return f"(- {int_expr_to_sexpr(l)} {int_expr_to_sexpr(r)})"
        case INeg(b):
            return f"(- {int_expr_to_sexpr(b)})"
    raise TypeError(f"not an integer expression: {e!r}")


def atom_to_sexpr(a: Atom) -> str:
    l, r = int_expr_to_sexpr(a.lhs), int_expr_to_sexpr(a.rhs)
    if a.op == "!=":
        return f"(not (= {l} {r}))"
    return f"({a.op} {l} {r})"


def qf_formula_to_sexpr(phi: Formula) -> str:
    match phi:
        case Atom(_, _, _):
            return atom_to_sexpr(phi)
        case And(l, r):
            return f"(and {qf_formula_to_sexpr(l)} {qf_formula_to_sexpr(r)})"
        case Or(l, r):
            return f"(or {qf_formula_to_sexpr(l)} {qf_formula_to_sexpr(r)})"
        case TrueF():
            return "true"
        case FalseF():
            return "false"
    raise HflError(
        f"not a quantifier-free arithmetic formula: {type(phi).__name__}")


# ---------------------------------------------------------------------------
# Minimal s-expression reader (for the HORN reader and solver output)


def parse_sexprs(text: str) -> list:
    """Parse a sequence of s-expressions into nested lists of strings."""
    toks: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            toks.append(c)
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            toks.append(text[i + 1:j])
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            toks.append(text[i:j])
            i = j

    out: list = []
    stack: list[list] = []
    for t in toks:
        if t == "(":
            stack.append([])
        elif t == ")":
            if not stack:
                raise HflError("unbalanced ')' in s-expression input")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            (stack[-1] if stack else out).append(t)
    if stack:
        raise HflError("unbalanced '(' in s-expression input")
    return out


def sexpr_to_int_expr(s) -> IntExpr:
    if isinstance(s, str):
        if s.lstrip("-").isdigit():
            return IConst(int(s))
        return IVar(s)
    if not s:
        raise HflError("empty s-expression in arithmetic term")
    head, *args = s
    if head == "+":
        e = sexpr_to_int_expr(args[0])
        for a in args[1:]:
            e = Add(e, sexpr_to_int_expr(a))
        return e
    if head == "-":
        if len(args) == 1:
            return INeg(sexpr_to_int_expr(args[0]))
        e = sexpr_to_int_expr(args[0])
        for a in args[1:]:
            e = Sub(e, sexpr_to_int_expr(a))
        return e
    if head == "*":
        consts = [a for a in args if isinstance(a, str)
                  and a.lstrip("-").isdigit()]
        if len(consts) != len(args) - 1 or len(args) != 2:
            raise HflError("nonlinear multiplication in HORN input")
        c = int(consts[0])
        other = args[0] if args[1] == consts[0] else args[1]
        base = sexpr_to_int_expr(other)
        if c == 0:
            return IConst(0)
        neg = c < 0
        c = abs(c)
        e = base
        for _ in range(c - 1):
            e = Add(e, base)
        return INeg(e) if neg else e
    raise HflError(f"unsupported arithmetic operator {head!r}")


_SMT_CMP = {"<=", "<", ">=", ">", "="}


def sexpr_to_atom(s) -> Atom:
    if not isinstance(s, list) or not s:
        raise HflError(f"expected an atom, got {s!r}")
    head, *args = s
    if head == "not" and len(args) == 1 and isinstance(args[0], list) \
            and args[0] and args[0][0] == "=":
        _, l, r = args[0]
        return Atom("!=", sexpr_to_int_expr(l), sexpr_to_int_expr(r))
    if head in _SMT_CMP and len(args) == 2:
        return Atom(head, sexpr_to_int_expr(args[0]),
                    sexpr_to_int_expr(args[1]))
    raise HflError(f"unsupported atom head {head!r}")
