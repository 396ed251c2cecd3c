"""Relational expressions over (initial, final) state pairs.

Expressions are immutable ASTs. ``compile_expr`` turns one into a closure
``f(s, s_final)`` with variable positions resolved once against a state space.
Unprimed names read the initial state, primed names read the final state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .state import StateSpace, format_value


class ExprError(Exception):
    """Ill-formed expression, reported when it is compiled."""


class EvalError(Exception):
    """An expression could not be evaluated on a particular state pair."""


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Bin("+", self, lift(other))

    def __radd__(self, other):
        return Bin("+", lift(other), self)

    def __sub__(self, other):
        return Bin("-", self, lift(other))

    def __rsub__(self, other):
        return Bin("-", lift(other), self)

    def __mul__(self, other):
        return Bin("*", self, lift(other))

    def __rmul__(self, other):
        return Bin("*", lift(other), self)

    def __truediv__(self, other):
        return Bin("/", self, lift(other))

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: object


@dataclass(frozen=True, eq=True)
class Name(Expr):
    name: str
    primed: bool = False


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str  # "-" or "!"
    arg: Expr


@dataclass(frozen=True, eq=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Iverson(Expr):
    pred: Expr


@dataclass(frozen=True, eq=True)
class Call(Expr):
    fn: str  # "min" or "max"
    args: tuple


@dataclass(frozen=True, eq=True)
class Member(Expr):
    arg: Expr
    items: tuple


ARITH = {"+", "-", "*", "/", "mod", "^"}
COMPARE = {"=", "!=", "<", "<=", ">", ">="}
LOGIC = {"&&", "||"}

TRUE = Const(True)
FALSE = Const(False)


def lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction, str, bool)):
        return Const(x)
    raise TypeError(f"cannot use {x!r} as an expression")


def var(name: str) -> Name:
    return Name(name, False)


def fvar(name: str) -> Name:
    return Name(name, True)


def iv(pred: Expr) -> Iverson:
    return Iverson(pred)


def eq(a, b) -> Bin:
    return Bin("=", lift(a), lift(b))


def conj(*ps) -> Expr:
    if not ps:
        return TRUE
    out = lift(ps[0])
    for p in ps[1:]:
        out = Bin("&&", out, lift(p))
    return out


def disj(*ps) -> Expr:
    if not ps:
        return FALSE
    out = lift(ps[0])
    for p in ps[1:]:
        out = Bin("||", out, lift(p))
    return out


def neg(p) -> Expr:
    return Unary("!", lift(p))


# -- traversal ---------------------------------------------------------------

def children(e: Expr) -> tuple:
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Bin):
        return (e.left, e.right)
    if isinstance(e, Iverson):
        return (e.pred,)
    if isinstance(e, Call):
        return e.args
    if isinstance(e, Member):
        return (e.arg,) + e.items
    return ()


def rebuild(e: Expr, kids) -> Expr:
    kids = tuple(kids)
    if isinstance(e, Unary):
        return Unary(e.op, kids[0])
    if isinstance(e, Bin):
        return Bin(e.op, kids[0], kids[1])
    if isinstance(e, Iverson):
        return Iverson(kids[0])
    if isinstance(e, Call):
        return Call(e.fn, kids)
    if isinstance(e, Member):
        return Member(kids[0], kids[1:])
    return e


def transform(e: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Bottom-up rewrite."""
    kids = children(e)
    if kids:
        e = rebuild(e, (transform(k, fn) for k in kids))
    return fn(e)


def names(e: Expr) -> set:
    """Set of ``(name, primed)`` pairs referenced by ``e``."""
    out = set()

    def walk(x):
        if isinstance(x, Name):
            out.add((x.name, x.primed))
        for k in children(x):
            walk(k)

    walk(e)
    return out


def prime_all(e: Expr, space: StateSpace) -> Expr:
    """Read every state variable from the final state (used for queries)."""
    return transform(e, lambda x: Name(x.name, True) if isinstance(x, Name) and x.name in space else x)


def unprime_all(e: Expr) -> Expr:
    return transform(e, lambda x: Name(x.name, False) if isinstance(x, Name) else x)


# -- evaluation ----------------------------------------------------------------

def _num(x):
    if isinstance(x, bool) or not isinstance(x, (int, Fraction)):
        raise EvalError(f"expected a number, got {format_value(x)}")
    return x


def _int_or_frac(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def _truth(x):
    if not isinstance(x, bool):
        raise EvalError(f"expected a truth value, got {format_value(x)}")
    return x


def div(a, b):
    a, b = _num(a), _num(b)
    if b == 0:
        return 0
    return _int_or_frac(Fraction(a) / b)


def mod(a, b):
    a, b = _num(a), _num(b)
    if b == 0:
        return a
    return _int_or_frac(Fraction(a) % b) if isinstance(a, Fraction) or isinstance(b, Fraction) else a % b


def power(a, b):
    a, b = _num(a), _num(b)
    if isinstance(b, Fraction):
        if b.denominator != 1:
            raise EvalError(f"non-integer exponent {b}")
        b = int(b)
    if b < 0:
        raise EvalError(f"negative exponent {b}")
    return a**b


def _cmp(op, a, b):
    if op == "=":
        return _same(a, b)
    if op == "!=":
        return not _same(a, b)
    a, b = _num(a), _num(b)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _same(a, b):
    # bools are ints in Python; keep them apart from numbers
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


def _arith(op, a, b):
    if op == "+":
        return _num(a) + _num(b)
    if op == "-":
        return _num(a) - _num(b)
    if op == "*":
        return _num(a) * _num(b)
    if op == "/":
        return div(a, b)
    if op == "mod":
        return mod(a, b)
    if op == "^":
        return power(a, b)
    raise EvalError(f"unknown operator {op}")


def _factors(e: Expr) -> list:
    if isinstance(e, Bin) and e.op == "*":
        return _factors(e.left) + _factors(e.right)
    return [e]


def _is_guard(e: Expr) -> bool:
    return isinstance(e, Iverson) or (isinstance(e, Const) and not isinstance(e.value, str))


Compiled = Callable[[tuple, tuple], object]


def compile_expr(e: Expr, space: StateSpace, params: Mapping[str, object] | None = None,
                 allow_initial: bool = True, allow_final: bool = True) -> Compiled:
    """Resolve names against ``space`` and return ``f(s, s_final)``.

    Name lookup order: state variable, enum label, parameter.
    Products evaluate their Iverson factors first and stop at the first zero,
    so a guarded term such as ``[t' >= t+1] * (5/6)^(t'-t-1)`` never
    evaluates the power outside its guard.
    """
    params = dict(params or {})
    labels = {}
    for d in space.domains:
        if d.kind == "enum":
            for lab in d.values:
                labels[lab] = lab

    def comp(x: Expr) -> Compiled:
        if isinstance(x, Const):
            v = x.value
            return lambda s, t: v
        if isinstance(x, Name):
            if x.name in space:
                i = space.index(x.name)
                if x.primed:
                    if not allow_final:
                        raise ExprError(f"final-state variable {x.name}' is not allowed here")
                    return lambda s, t: t[i]
                if not allow_initial:
                    raise ExprError(f"initial-state variable {x.name} is not allowed here")
                return lambda s, t: s[i]
            if x.primed:
                raise ExprError(f"{x.name}' is not a declared variable")
            if x.name in labels:
                v = labels[x.name]
                return lambda s, t: v
            if x.name in params:
                v = params[x.name]
                return lambda s, t: v
            raise ExprError(f"unknown name {x.name!r}")
        if isinstance(x, Unary):
            a = comp(x.arg)
            if x.op == "-":
                return lambda s, t: -_num(a(s, t))
            if x.op == "!":
                return lambda s, t: not _truth(a(s, t))
            raise ExprError(f"unknown operator {x.op}")
        if isinstance(x, Iverson):
            p = comp(x.pred)
            return lambda s, t: 1 if _truth(p(s, t)) else 0
        if isinstance(x, Bin):
            if x.op == "*":
                fs = _factors(x)
                fs = [f for f in fs if _is_guard(f)] + [f for f in fs if not _is_guard(f)]
                cs = [comp(f) for f in fs]

                def product(s, t, cs=cs):
                    acc = 1
                    for c in cs:
                        v = _num(c(s, t))
                        if v == 0:
                            return 0
                        acc = acc * v
                    return acc

                return product
            a, b = comp(x.left), comp(x.right)
            op = x.op
            if op == "&&":
                return lambda s, t: _truth(a(s, t)) and _truth(b(s, t))
            if op == "||":
                return lambda s, t: _truth(a(s, t)) or _truth(b(s, t))
            if op in COMPARE:
                return lambda s, t: _cmp(op, a(s, t), b(s, t))
            if op in ARITH:
                return lambda s, t: _arith(op, a(s, t), b(s, t))
            raise ExprError(f"unknown operator {op}")
        if isinstance(x, Call):
            if x.fn not in ("min", "max") or len(x.args) < 1:
                raise ExprError(f"unknown function {x.fn}")
            cs = [comp(a) for a in x.args]
            f = min if x.fn == "min" else max
            return lambda s, t: f(_num(c(s, t)) for c in cs)
        if isinstance(x, Member):
            a = comp(x.arg)
            cs = [comp(i) for i in x.items]
            return lambda s, t: any(_same(a(s, t), c(s, t)) for c in cs)
        raise ExprError(f"not an expression: {x!r}")

    return comp(e)


def eval_expr(e: Expr, space: StateSpace, s: tuple, s_final: tuple, params=None):
    try:
        return compile_expr(e, space, params)(s, s_final)
    except (TypeError, ArithmeticError) as exc:
        raise EvalError(str(exc)) from exc


def check_numeric(f: Compiled) -> Compiled:
    """Wrap a compiled expression so that its value is a rational number."""
    def g(s, t):
        v = f(s, t)
        if isinstance(v, bool):
            return 1 if v else 0
        return _num(v)
    return g


# -- substitution and simplification ------------------------------------------

def subst_final(e: Expr, v0: Mapping[str, object]) -> Expr:
    return simplify(transform(e, lambda x: Const(v0[x.name]) if isinstance(x, Name) and x.primed and x.name in v0 else x))


def subst_initial(e: Expr, v0: Mapping[str, object]) -> Expr:
    return simplify(transform(e, lambda x: Const(v0[x.name]) if isinstance(x, Name) and not x.primed and x.name in v0 else x))


def subst_var_final(e: Expr, x: str, val) -> Expr:
    return simplify(transform(e, lambda n: Const(val) if isinstance(n, Name) and n.primed and n.name == x else n))


def _fold(x: Expr) -> Expr:
    kids = children(x)
    if isinstance(x, Bin) and x.op == "*":
        for k in kids:
            if isinstance(k, Const) and k.value == 0 and not isinstance(k.value, bool):
                return Const(0)
        if isinstance(x.left, Const) and x.left.value == 1 and not isinstance(x.left.value, bool):
            return x.right
        if isinstance(x.right, Const) and x.right.value == 1 and not isinstance(x.right.value, bool):
            return x.left
    if isinstance(x, Bin) and x.op == "+":
        if _is_zero(x.left):
            return x.right
        if _is_zero(x.right):
            return x.left
    if isinstance(x, Bin) and x.op == "&&":
        if x.left == FALSE or x.right == FALSE:
            return FALSE
        if x.left == TRUE:
            return x.right
        if x.right == TRUE:
            return x.left
    if isinstance(x, Bin) and x.op == "||":
        if x.left == TRUE or x.right == TRUE:
            return TRUE
        if x.left == FALSE:
            return x.right
        if x.right == FALSE:
            return x.left
    if kids and all(isinstance(k, Const) for k in kids):
        try:
            v = _eval_closed(x)
        except (EvalError, ExprError, TypeError, ArithmeticError):
            return x
        return Const(_int_or_frac(v) if isinstance(v, Fraction) else v)
    return x


def _is_zero(x: Expr) -> bool:
    return isinstance(x, Const) and not isinstance(x.value, (bool, str)) and x.value == 0


def _eval_closed(x: Expr):
    if isinstance(x, Const):
        return x.value
    if isinstance(x, Unary):
        a = _eval_closed(x.arg)
        return -_num(a) if x.op == "-" else not _truth(a)
    if isinstance(x, Iverson):
        return 1 if _truth(_eval_closed(x.pred)) else 0
    if isinstance(x, Bin):
        a, b = _eval_closed(x.left), _eval_closed(x.right)
        if x.op == "&&":
            return _truth(a) and _truth(b)
        if x.op == "||":
            return _truth(a) or _truth(b)
        if x.op in COMPARE:
            return _cmp(x.op, a, b)
        return _arith(x.op, a, b)
    if isinstance(x, Call):
        vals = [_num(_eval_closed(a)) for a in x.args]
        return min(vals) if x.fn == "min" else max(vals)
    if isinstance(x, Member):
        a = _eval_closed(x.arg)
        return any(_same(a, _eval_closed(i)) for i in x.items)
    raise ExprError(f"cannot fold {x!r}")


def simplify(e: Expr) -> Expr:
    """Constant folding plus the units and zeros of +, *, && and ||."""
    return transform(e, _fold)


def iverson_rewrite(e: Expr) -> Expr:
    """Push Iverson brackets inward and eliminate min and max.

    [!P] -> 1 - [P], [P && Q] -> [P]*[Q], [P || Q] -> [P] + [Q] - [P]*[Q],
    [true] -> 1, [false] -> 0, max(x, y) -> x*[x > y] + y*[x <= y],
    min(x, y) -> x*[x <= y] + y*[x > y].
    """
    def step(x: Expr) -> Expr:
        if isinstance(x, Iverson):
            p = x.pred
            if p == TRUE:
                return Const(1)
            if p == FALSE:
                return Const(0)
            if isinstance(p, Unary) and p.op == "!":
                return Bin("-", Const(1), step(Iverson(p.arg)))
            if isinstance(p, Bin) and p.op == "&&":
                return Bin("*", step(Iverson(p.left)), step(Iverson(p.right)))
            if isinstance(p, Bin) and p.op == "||":
                a, b = step(Iverson(p.left)), step(Iverson(p.right))
                return Bin("-", Bin("+", a, b), Bin("*", a, b))
            return x
        if isinstance(x, Call) and len(x.args) == 2:
            a, b = x.args
            if x.fn == "max":
                return Bin("+", Bin("*", a, Iverson(Bin(">", a, b))), Bin("*", b, Iverson(Bin("<=", a, b))))
            if x.fn == "min":
                return Bin("+", Bin("*", a, Iverson(Bin("<=", a, b))), Bin("*", b, Iverson(Bin(">", a, b))))
        return x

    return transform(e, step)


# -- printing ----------------------------------------------------------------

def const_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator) if v >= 0 else f"(-{-v.numerator})"
        if v < 0:
            return f"(-{-v.numerator}/{v.denominator})"
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int) and v < 0:
        return f"(-{-v})"
    return str(v)


def to_text(e: Expr) -> str:
    """Concrete syntax that the parser reads back to the same tree."""
    if isinstance(e, Const):
        return const_text(e.value)
    if isinstance(e, Name):
        return e.name + ("'" if e.primed else "")
    if isinstance(e, Unary):
        return f"({e.op}{to_text(e.arg)})"
    if isinstance(e, Iverson):
        return f"[{to_text(e.pred)}]"
    if isinstance(e, Bin):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}(" + ", ".join(to_text(a) for a in e.args) + ")"
    if isinstance(e, Member):
        return f"({to_text(e.arg)} in {{" + ", ".join(to_text(i) for i in e.items) + "})"
    raise ExprError(f"not an expression: {e!r}")
