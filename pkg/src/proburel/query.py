"""Expectations and probabilities of final-state expressions under a kernel."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (Bin, Call, Const, Expr, Iverson, Member, Name, Unary, check_numeric,
                   compile_expr, lift)
from .kernel import Kernel, sorted_states
from .numerics import format_decimal, format_rational
from .state import StateSpace


@dataclass
class InitialValuedResult:
    values: dict
    residual: dict | None = None  # state -> bound, None entries mean unbounded

    def __getitem__(self, s):
        return self.values[s]

    @property
    def max_residual(self):
        if self.residual is None:
            return Fraction(0)
        if any(r is None for r in self.residual.values()):
            return None
        return max(self.residual.values(), default=Fraction(0))


def affine_bound(e: Expr, space: StateSpace):
    """``(A, B)`` with ``|e| <= A + B*T`` on final states, T the largest clock value.

    Non-clock variables range over their finite domains. Returns ``None`` when
    no such bound follows from the syntax (for instance ``t * t``).
    """
    def go(x):
        if isinstance(x, Const):
            v = x.value
            if isinstance(v, bool):
                return (Fraction(1), Fraction(0))
            if isinstance(v, (int, Fraction)):
                return (abs(Fraction(v)), Fraction(0))
            return None
        if isinstance(x, Name):
            if x.name not in space:
                return None
            d = space.domain(x.name)
            if d.clock:
                return (Fraction(max(0, -d.lo)), Fraction(1))
            if d.kind == "int":
                return (Fraction(max(abs(d.lo), abs(d.hi))), Fraction(0))
            return (Fraction(1), Fraction(0))
        if isinstance(x, Iverson):
            return (Fraction(1), Fraction(0))
        if isinstance(x, Unary):
            return go(x.arg) if x.op == "-" else (Fraction(1), Fraction(0))
        if isinstance(x, Member):
            return (Fraction(1), Fraction(0))
        if isinstance(x, Call):
            parts = [go(a) for a in x.args]
            if any(p is None for p in parts):
                return None
            return (max(p[0] for p in parts), max(p[1] for p in parts))
        if isinstance(x, Bin):
            if x.op in ("&&", "||", "=", "!=", "<", "<=", ">", ">="):
                return (Fraction(1), Fraction(0))
            a, b = go(x.left), go(x.right)
            if x.op == "mod" and isinstance(x.right, Const) and not isinstance(x.right.value, bool):
                c = abs(Fraction(x.right.value))
                if c:
                    return (c, Fraction(0))
                return a
            if a is None or b is None:
                return None
            if x.op in ("+", "-"):
                return (a[0] + b[0], a[1] + b[1])
            if x.op == "*":
                if a[1] and b[1]:
                    return None
                return (a[0] * b[0], a[0] * b[1] + a[1] * b[0])
            if x.op == "/" and isinstance(x.right, Const) and b[0]:
                return (a[0] / b[0], a[1] / b[0])
            if x.op == "^" and not a[1] and isinstance(x.right, Const):
                k = x.right.value
                if isinstance(k, int) and not isinstance(k, bool) and k >= 0:
                    return (a[0] ** k, Fraction(0))
            if x.op == "^" and not a[1] and a[0] <= 1:
                return (Fraction(1), Fraction(0))
            return None
        return None

    return go(e)


def _tail_bound(tail, bound, clocks) -> Fraction | None:
    if bound is None:
        return None
    A, B = bound
    if tail.unbounded:
        return None
    if not B:
        return tail.mass * A
    if tail.ratio is None or tail.ratio >= 1:
        return None
    extra = Fraction(tail.growth) / (1 - tail.ratio)
    tot = Fraction(0)
    for u, m in tail.pending.items():
        now = max((u[i] for i in clocks), default=0)
        tot += m * (A + B * (now + extra))
    return tot


def expect(P: Kernel, e, params=None, initials=None) -> InitialValuedResult:
    """Expected value of a final-state expression from each initial state.

    If ``P`` contains truncated loops, each value comes with a bound on how
    far the untruncated answer can be from it.
    """
    e = lift(e)
    space = P.space
    f = check_numeric(compile_expr(e, space, params, allow_initial=False))
    initials = list(space.states()) if initials is None else list(initials)
    values = {}
    for s in initials:
        values[s] = sum((w * f(s, t) for t, w in P.row(s).items()), Fraction(0))
    residual = None
    if P.has_tails:
        bound = affine_bound(e, space)
        clocks = [space.index(n) for n in space.clock_vars()]
        residual = {}
        for s in initials:
            tail = P.tail(s)
            residual[s] = Fraction(0) if tail is None else _tail_bound(tail, bound, clocks)
    return InitialValuedResult(values, residual)


def prob_of(P: Kernel, pred, params=None, initials=None) -> InitialValuedResult:
    return expect(P, Iverson(lift(pred)), params, initials)


@dataclass
class TableRow:
    state: tuple
    weight: Fraction
    decimal: str = field(default="")


def distribution_table(P: Kernel, initial, precision: int | None = None) -> list:
    r = P.row(initial)
    return [TableRow(t, r[t], format_decimal(r[t], precision)) for t in sorted_states(P.space, r)]


def render_table(P: Kernel, initial, precision: int | None = None) -> str:
    space = P.space
    lines = []
    for row in distribution_table(P, initial, precision):
        lines.append(f"{space.format_state(row.state)}\t{format_rational(row.weight)}\t{row.decimal}")
    return "\n".join(lines)
