"""Program syntax trees and the semantics of each construct as a kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from . import kernel as K
from .config import Config
from .expr import Expr, compile_expr, lift, names, prime_all
from .kernel import Kernel, clamp_row, merge_tails, normalize_row
from .state import OutOfDomain, StateSpace, update


class ConstructError(Exception):
    pass


class WeightOutOfRange(ConstructError):
    def __init__(self, s, w):
        super().__init__(f"choice weight {w} is outside [0, 1] in state {s}")
        self.s, self.weight = s, w


class EmptySet(ConstructError):
    pass


class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Assign(Program):
    var: str
    expr: Expr


@dataclass(frozen=True)
class PChoice(Program):
    weight: Expr
    left: Program
    right: Program


@dataclass(frozen=True)
class CChoice(Program):
    guard: Expr
    then: Program
    orelse: Program


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class Observe(Program):
    """``body || likelihood``; the likelihood reads the final state."""
    body: Program
    likelihood: Expr


@dataclass(frozen=True)
class Uniform(Program):
    var: str
    values: tuple


@dataclass(frozen=True)
class While(Program):
    guard: Expr
    body: Program


def seq(*progs: Program) -> Program:
    """Right-nested sequence of one or more programs."""
    if not progs:
        return Skip()
    out = progs[-1]
    for p in reversed(progs[:-1]):
        out = Seq(p, out)
    return out


# -- semantics -----------------------------------------------------------------

def _as_int(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def sem_skip(space: StateSpace) -> Kernel:
    return K.identity(space)


def sem_assign(space: StateSpace, var: str, aexpr, params=None) -> Kernel:
    f = compile_expr(lift(aexpr), space, params, allow_final=False)
    space.index(var)

    def row(s):
        return {update(space, s, var, _as_int(f(s, s))): Fraction(1)}

    return K.lazy(space, row, dist=True)


def _initial_fn(e, space, params):
    if isinstance(e, (int, Fraction)):
        c = Fraction(e)
        return lambda s: c
    f = compile_expr(lift(e), space, params, allow_final=False)
    return lambda s: f(s, s)


def sem_pchoice(w, P: Kernel, Q: Kernel, params=None) -> Kernel:
    """``w * P + (1 - w) * Q`` where ``w`` may depend on the initial state."""
    K._same_space(P, Q)
    wf = _initial_fn(w, P.space, params)
    trusted = P.dist and Q.dist

    def weight(s):
        x = wf(s)
        if isinstance(x, bool) or not 0 <= x <= 1:
            raise WeightOutOfRange(s, x)
        return Fraction(x)

    def row(s):
        x = weight(s)
        out: dict = {}
        if x:
            for t, p in P.row(s).items():
                out[t] = x * p
        if x != 1:
            y = 1 - x
            for t, q in Q.row(s).items():
                out[t] = out.get(t, 0) + y * q
        return clamp_row(out, trusted)

    tail_fn = None
    if P.has_tails or Q.has_tails:
        def tail_fn(s):
            x = weight(s)
            return merge_tails([(x, P.tail(s)), (1 - x, Q.tail(s))])

    return K.lazy(P.space, row, tail_fn=tail_fn, dist=trusted)


def sem_cchoice(b, P: Kernel, Q: Kernel, params=None) -> Kernel:
    """Conditional choice. Guards on the initial state pick a whole row;
    guards that mention final variables pick weight by weight."""
    K._same_space(P, Q)
    space = P.space
    b = lift(b)
    f = compile_expr(b, space, params)
    relational = any(primed for _, primed in names(b))
    tail_fn = None
    if relational:
        def row(s):
            rp, rq = P.row(s), Q.row(s)
            out = {}
            for t in set(rp) | set(rq):
                w = rp.get(t, 0) if f(s, t) else rq.get(t, 0)
                if w:
                    out[t] = w
            return out

        if P.has_tails or Q.has_tails:
            def tail_fn(s):
                t = merge_tails([(1, P.tail(s)), (1, Q.tail(s))])
                if t is not None:
                    t.unbounded = True
                return t
    else:
        def row(s):
            return P.row(s) if f(s, s) else Q.row(s)

        if P.has_tails or Q.has_tails:
            def tail_fn(s):
                return P.tail(s) if f(s, s) else Q.tail(s)

    return K.lazy(space, row, tail_fn=tail_fn, dist=P.dist and Q.dist)


def seq_row(P: Kernel, Q: Kernel, s) -> dict:
    """Row s of ``P; Q``, summed in integers over a common denominator."""
    terms = []
    dens = []
    for v, p in P.row(s).items():
        rq = Q.row(v)
        if rq:
            terms.append((p, rq))
            dens.append(p.denominator)
            dens.extend(q.denominator for q in rq.values())
    if not terms:
        return {}
    L = math.lcm(*dens)
    acc: dict = {}
    for p, rq in terms:
        a = p.numerator * (L // p.denominator)
        for t, q in rq.items():
            acc[t] = acc.get(t, 0) + a * q.numerator * (L // q.denominator)
    L2 = L * L
    return {t: Fraction(n, L2) for t, n in acc.items() if n}


def sem_seq(P: Kernel, Q: Kernel) -> Kernel:
    K._same_space(P, Q)
    trusted = P.dist and Q.dist

    def row(s):
        return clamp_row(seq_row(P, Q, s), trusted)

    tail_fn = None
    if P.has_tails:
        def tail_fn(s):
            own = P.tail(s)
            after = merge_tails((p, Q.tail(v)) for v, p in P.row(s).items()) if Q.has_tails else None
            if own is None:
                return after
            # mass still inside P will run through Q as well, where its clock is unknown
            t = _clock_lost(own)
            return merge_tails([(1, t), (1, after)])
    elif Q.has_tails:
        def tail_fn(s):
            return merge_tails((p, Q.tail(v)) for v, p in P.row(s).items())

    return K.lazy(P.space, row, tail_fn=tail_fn, dist=trusted)


def _clock_lost(t):
    return K.Tail(dict(t.pending), None, t.growth, t.unbounded)


def sem_parallel(P: Kernel, Q: Kernel) -> Kernel:
    """Pointwise product, normalized per initial state, then clamped."""
    K._same_space(P, Q)

    def row(s):
        rp, rq = P.row(s), Q.row(s)
        small, big = (rp, rq) if len(rp) <= len(rq) else (rq, rp)
        prod = {t: w * big[t] for t, w in small.items() if t in big and w * big[t] != 0}
        return clamp_row(normalize_row(prod))

    return K.lazy(P.space, row, tail_fn=_unbounded_tails(P, Q))


def _unbounded_tails(*ks):
    if not any(k.has_tails for k in ks):
        return None

    def tail_fn(s):
        t = merge_tails((1, k.tail(s)) for k in ks)
        if t is not None:
            t.unbounded = True
        return t

    return tail_fn


def sem_observe(P: Kernel, likelihood: Expr, params=None) -> Kernel:
    """``P || likelihood`` with the likelihood evaluated only on P's support.

    Equal to ``sem_parallel(P, tabulate(likelihood))`` whenever the likelihood
    is nonnegative everywhere.
    """
    space = P.space
    f = compile_expr(likelihood, space, params)

    def row(s):
        prod = {}
        for t, w in P.row(s).items():
            v = f(s, t)
            if isinstance(v, bool):
                v = 1 if v else 0
            if v < 0:
                raise K.NegativeWeight(s, t, v)
            if v:
                prod[t] = w * v
        return clamp_row(normalize_row(prod))

    return K.lazy(space, row, tail_fn=_unbounded_tails(P))


def sem_uniform(space: StateSpace, var: str, values, algebra: bool = False) -> Kernel:
    """Uniform choice of ``var`` from ``values``, as the normalisation of
    the nondeterministic choice over the one-point assignments."""
    vals = list(dict.fromkeys(values))
    if not vals:
        if algebra:
            return K.zero(space)
        raise EmptySet(f"rand over an empty set for {var}")
    dom = space.domain(var)
    for v in vals:
        if v not in dom:
            raise OutOfDomain(var, v, dom.clock)
    choices = K.lazy(space, lambda s: {update(space, s, var, v): Fraction(1) for v in vals}, kind=K.RVFUN)
    k = K.normalize_alpha(var, choices)
    k.dist = True
    return k


# -- elaboration ---------------------------------------------------------------

def _const_values(items, space, params) -> list:
    out = []
    for e in items:
        f = compile_expr(lift(e), space, params, allow_initial=False, allow_final=False)
        out.append(_as_int(f((), ())))
    return out


def elaborate(prog: Program, space: StateSpace, config: Config | None = None,
              params: Mapping | None = None, fixpoints: Mapping | None = None) -> Kernel:
    """Fold a program into its kernel.

    ``fixpoints`` maps ``While`` nodes to certified fixed-point kernels that
    are used in place of iteration.
    """
    from . import fixpoint

    config = config or Config()
    params = dict(params or {})
    fixpoints = fixpoints or {}

    def go(p: Program) -> Kernel:
        if isinstance(p, Skip):
            return sem_skip(space)
        if isinstance(p, Assign):
            return sem_assign(space, p.var, p.expr, params)
        if isinstance(p, PChoice):
            return sem_pchoice(p.weight, go(p.left), go(p.right), params)
        if isinstance(p, CChoice):
            return sem_cchoice(p.guard, go(p.then), go(p.orelse), params)
        if isinstance(p, Seq):
            return sem_seq(go(p.first), go(p.second))
        if isinstance(p, Observe):
            return sem_observe(go(p.body), prime_all(p.likelihood, space), params)
        if isinstance(p, Uniform):
            return sem_uniform(space, p.var, _const_values(p.values, space, params), config.algebra)
        if isinstance(p, While):
            if p in fixpoints:
                return fixpoints[p]
            spec = fixpoint.LoopSpec(p.guard, go(p.body), space, params)
            return fixpoint.loop_kernel(spec, config)
        raise ConstructError(f"not a program: {p!r}")

    return go(prog)


def loops(prog: Program) -> list:
    """While nodes in pre-order."""
    out = []

    def walk(p):
        if isinstance(p, While):
            out.append(p)
        for k in sub_programs(p):
            walk(k)

    walk(prog)
    return out


def sub_programs(p: Program) -> tuple:
    if isinstance(p, PChoice):
        return (p.left, p.right)
    if isinstance(p, CChoice):
        return (p.then, p.orelse)
    if isinstance(p, Seq):
        return (p.first, p.second)
    if isinstance(p, (Observe, While)):
        return (p.body,)
    return ()


def _vars(e, space) -> set:
    return {n for n, _ in names(lift(e)) if n in space}


def live_in(p: Program, live_out: set, space: StateSpace) -> set:
    """Variables whose initial value can influence ``live_out`` at the end."""
    if isinstance(p, Skip):
        return set(live_out)
    if isinstance(p, Assign):
        return (set(live_out) - {p.var}) | _vars(p.expr, space)
    if isinstance(p, Uniform):
        return set(live_out) - {p.var}
    if isinstance(p, Seq):
        return live_in(p.first, live_in(p.second, live_out, space), space)
    if isinstance(p, PChoice):
        return _vars(p.weight, space) | live_in(p.left, live_out, space) | live_in(p.right, live_out, space)
    if isinstance(p, CChoice):
        return _vars(p.guard, space) | live_in(p.then, live_out, space) | live_in(p.orelse, live_out, space)
    if isinstance(p, Observe):
        return live_in(p.body, set(live_out) | _vars(p.likelihood, space), space)
    if isinstance(p, While):
        cur = set(live_out) | _vars(p.guard, space)
        while True:
            nxt = cur | live_in(p.body, cur, space)
            if nxt == cur:
                return cur
            cur = nxt
    raise ConstructError(f"not a program: {p!r}")
