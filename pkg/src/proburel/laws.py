"""Executable catalog of algebraic laws, checked on random small kernels.

Every case draws its own ``random.Random(f"{law_id}:{seed}:{i}")`` so a
failure reproduces from the law id, the seed and the case index alone.
All comparisons are exact.

Preconditions are enforced by construction:

* distributions split a random integer denominator (at most 12) into
  positive parts, so each row sums to exactly 1;
* subdistributions do the same for a random total in (0, 1];
* ordered pairs ``P1 <= P2`` are built as ``P1 = P2 * U`` for a random
  unit-valued ``U``;
* shared reachability for parallel composition plants one common final
  state with positive weight in every row;
* summability holds trivially because every space is finite.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from types import SimpleNamespace

from . import kernel as K
from .config import Config
from .constructs import (sem_assign, sem_cchoice, sem_parallel, sem_pchoice, sem_seq, sem_skip,
                         sem_uniform, seq_row)
from .expr import (FALSE, TRUE, Bin, Call, Expr, Member, Unary, conj, disj, eq, eval_expr, fvar,
                   iv, lift, neg, subst_final, subst_initial, var)
from .fixpoint import (LoopSpec, iterate, iterdiff, iterdiff_kernel, loop_kernel, loop_step)
from .state import Domain, StateSpace, make_space, update

MAX_DEN = 12
MAX_STATES = 12


class UnknownLaw(KeyError):
    pass


# -- generators ------------------------------------------------------------------

def random_space(rng: random.Random, max_vars: int = 3, single: bool = False) -> StateSpace:
    while True:
        n = 1 if single else rng.randint(1, max_vars)
        decls = []
        for name in "xyzw"[:n]:
            if rng.random() < 0.3:
                decls.append((name, Domain.bool()))
            else:
                decls.append((name, Domain.int_range(0, rng.randint(1, 3))))
        space = make_space(decls)
        if len(space) <= MAX_STATES:
            return space


def _split(rng: random.Random, total: int, parts: int) -> list:
    """``total`` as ``parts`` positive integers."""
    cuts = sorted(rng.sample(range(1, total), parts - 1))
    return [b - a for a, b in zip([0] + cuts, cuts + [total])]


def _mass_row(rng, states, num: int, den: int, max_support: int = 3) -> dict:
    k = rng.randint(1, min(max_support, len(states), num))
    support = rng.sample(states, k)
    return {t: Fraction(p, den) for t, p in zip(support, _split(rng, num, k))}


def dist_kernel(rng, space) -> K.Kernel:
    states = list(space.states())
    rows = {}
    for s in states:
        den = rng.randint(1, MAX_DEN)
        rows[s] = _mass_row(rng, states, den, den)
    return K.from_rows(space, rows)


def subdist_kernel(rng, space) -> K.Kernel:
    states = list(space.states())
    rows = {}
    for s in states:
        den = rng.randint(1, MAX_DEN)
        rows[s] = _mass_row(rng, states, rng.randint(1, den), den)
    return K.from_rows(space, rows)


def unit_weight(rng) -> Fraction:
    den = rng.randint(1, MAX_DEN)
    return Fraction(rng.randint(0, den), den)


def prfun_kernel(rng, space) -> K.Kernel:
    """Unit-valued, with no constraint on row sums."""
    rows = {}
    for s in space.states():
        rows[s] = {t: unit_weight(rng) for t in space.states() if rng.random() < 0.5}
    return K.from_rows(space, rows)


def rvfun_kernel(rng, space) -> K.Kernel:
    """Nonnegative and possibly above 1."""
    rows = {}
    for s in space.states():
        rows[s] = {t: Fraction(rng.randint(0, 2 * MAX_DEN), rng.randint(1, MAX_DEN))
                   for t in space.states() if rng.random() < 0.5}
    return K.from_rows(space, rows, kind=K.RVFUN)


def _atom(rng, space, relational: bool) -> Expr:
    name = rng.choice(space.names)
    dom = space.domain(name)
    primed = relational and rng.random() < 0.5
    ref = fvar(name) if primed else var(name)
    if dom.kind == "bool":
        return ref if rng.random() < 0.5 else neg(ref)
    other = [n for n in space.names if space.domain(n).kind == "int"]
    op = rng.choice(["=", "!=", "<", "<=", ">", ">="])
    if rng.random() < 0.3 and other:
        o = rng.choice(other)
        rhs = fvar(o) if relational and rng.random() < 0.5 else var(o)
    else:
        rhs = lift(rng.choice(dom.values))
    return Bin(op, ref, rhs)


def random_pred(rng, space, relational: bool = True, depth: int = 2) -> Expr:
    if depth == 0 or rng.random() < 0.35:
        return _atom(rng, space, relational)
    c = rng.random()
    if c < 0.2:
        return Unary("!", random_pred(rng, space, relational, depth - 1))
    op = "&&" if c < 0.6 else "||"
    return Bin(op, random_pred(rng, space, relational, depth - 1),
               random_pred(rng, space, relational, depth - 1))


def random_weight(rng, space) -> Expr:
    """A unit weight that may depend on the initial state."""
    g = random_pred(rng, space, relational=False, depth=1)
    return unit_weight(rng) * iv(g) + unit_weight(rng) * iv(neg(g))


GENERATORS = {
    "dist_kernel": dist_kernel,
    "subdist_kernel": subdist_kernel,
    "rvfun_kernel": rvfun_kernel,
    "pred": lambda rng, space: random_pred(rng, space),
    "unit_weight": lambda rng, space: unit_weight(rng),
}


def generate(kind: str, seed, space: StateSpace | None = None):
    """Deterministic random value of the given kind."""
    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}")
    rng = random.Random(seed)
    if space is None and kind != "unit_weight":
        space = random_space(rng)
    return GENERATORS[kind](rng, space)


# -- helpers ---------------------------------------------------------------------

def _tab(space, e) -> K.Kernel:
    return K.tabulate(space, iv(e))


def _pr(k: K.Kernel) -> K.Kernel:
    return K.clamp_kernel(k)


def _below(rng, k: K.Kernel) -> K.Kernel:
    return K.pointwise(k, prfun_kernel(rng, k.space), "*")


def _diff(a: K.Kernel, b: K.Kernel, what: str = "") -> str | None:
    d = K.first_difference(a, b)
    if d is None:
        return None
    s, t, wa, wb = d
    sp = a.space
    return f"{what}({sp.format_state(s)}) -> ({sp.format_state(t)}): {wa} != {wb}"


def _not_leq(a: K.Kernel, b: K.Kernel) -> str | None:
    for s in a.space.states():
        ra, rb = a.row(s), b.row(s)
        for t, w in ra.items():
            if w > rb.get(t, 0):
                return f"{a.space.format_state(s)} -> {a.space.format_state(t)}: {w} > {rb.get(t, 0)}"
    return None


def _need(ok: bool, msg: str) -> str | None:
    return None if ok else msg


def _ident(space) -> Expr:
    return conj(*(eq(fvar(n), var(n)) for n in space.names))


def _assign_rel(space, x, c) -> Expr:
    """``x := c`` as a relation: x' = c and every other variable unchanged."""
    return conj(eq(fvar(x), c), *(eq(fvar(n), var(n)) for n in space.names if n != x))


def _spec(rng, space, guard=None) -> LoopSpec:
    if guard is None:
        guard = random_pred(rng, space, relational=False)
    return LoopSpec(guard, dist_kernel(rng, space), space)


def _linear(rng, space) -> Expr:
    ints = [n for n in space.names if space.domain(n).kind == "int"]
    e = lift(unit_weight(rng) * rng.randint(0, 3))
    for n in ints:
        if rng.random() < 0.6:
            e = e + unit_weight(rng) * (fvar(n) if rng.random() < 0.5 else var(n))
    return e


# -- the laws --------------------------------------------------------------------

@dataclass
class Law:
    id: str
    anchor: str
    fn: object
    group: str


CATALOG: dict = {}


def law(id: str, anchor: str, group: str):
    def deco(fn):
        CATALOG[id] = Law(id, anchor, fn, group)
        return fn
    return deco


# Iverson brackets

@law("ib_false", "[false] = 0", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    return _diff(_tab(sp, FALSE), K.zero(sp))


@law("ib_true", "[true] = 1", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    return _diff(_tab(sp, TRUE), K.ones(sp))


@law("ib_monotone", "Q refined by P implies [P] <= [Q]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    q = random_pred(rng, sp)
    p = conj(random_pred(rng, sp), q)
    return _not_leq(_tab(sp, p), _tab(sp, q))


@law("ib_neg", "[!P] = 1 - [P]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    p = random_pred(rng, sp)
    return _diff(_tab(sp, neg(p)), K.pointwise(K.ones(sp), _tab(sp, p), "-"))


@law("ib_conj", "[P && Q] = [P] * [Q]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    p, q = random_pred(rng, sp), random_pred(rng, sp)
    return _diff(_tab(sp, conj(p, q)), K.pointwise(_tab(sp, p), _tab(sp, q), "*"))


@law("ib_disj", "[P || Q] = [P] + [Q] - [P] * [Q]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    p, q = random_pred(rng, sp), random_pred(rng, sp)
    a, b = _tab(sp, p), _tab(sp, q)
    rhs = K.pointwise(K.pointwise(a, b, "+"), K.pointwise(a, b, "*"), "-")
    return _diff(_tab(sp, disj(p, q)), rhs)


def _sets(rng, sp):
    x = rng.choice(sp.names)
    vals = sp.domain(x).values
    A = [v for v in vals if rng.random() < 0.5]
    B = [v for v in vals if rng.random() < 0.5]
    return x, A, B


def _member(sp, x, items):
    return Member(var(x), tuple(lift(v) for v in items))


@law("ib_inter", "[s in A inter B] = [s in A] * [s in B]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    x, A, B = _sets(rng, sp)
    both = [v for v in A if v in B]
    rhs = K.pointwise(_tab(sp, _member(sp, x, A)), _tab(sp, _member(sp, x, B)), "*")
    return _diff(_tab(sp, _member(sp, x, both)), rhs)


@law("ib_plus", "[s in A] + [s in B] = [s in A inter B] + [s in A union B]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    x, A, B = _sets(rng, sp)
    both = [v for v in A if v in B]
    either = A + [v for v in B if v not in A]
    lhs = K.pointwise(_tab(sp, _member(sp, x, A)), _tab(sp, _member(sp, x, B)), "+")
    rhs = K.pointwise(_tab(sp, _member(sp, x, both)), _tab(sp, _member(sp, x, either)), "+")
    return _diff(lhs, rhs)


@law("ib_max", "max(x, y) = x * [x > y] + y * [x <= y]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    a, b = _linear(rng, sp), _linear(rng, sp)
    lhs = K.tabulate(sp, Call("max", (a, b)))
    rhs = K.tabulate(sp, a * iv(Bin(">", a, b)) + b * iv(Bin("<=", a, b)))
    return _diff(lhs, rhs)


@law("ib_min", "min(x, y) = x * [x <= y] + y * [x > y]", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    a, b = _linear(rng, sp), _linear(rng, sp)
    lhs = K.tabulate(sp, Call("min", (a, b)))
    rhs = K.tabulate(sp, a * iv(Bin("<=", a, b)) + b * iv(Bin(">", a, b)))
    return _diff(lhs, rhs)


@law("ib_summation", "sum over P(k) of f(k) = sum over k of (f * [P])(k)", "iverson")
def _(rng, ops):
    sp = random_space(rng)
    f = rvfun_kernel(rng, sp)
    p = random_pred(rng, sp)
    masked = K.pointwise(f, _tab(sp, p), "*")
    for s in sp.states():
        lhs = sum((w for t, w in f.row(s).items() if eval_expr(p, sp, s, t)), Fraction(0))
        rhs = sum(masked.row(s).values(), Fraction(0))
        if lhs != rhs:
            return f"{sp.format_state(s)}: {lhs} != {rhs}"
    return None


# top and bottom

@law("top_bot", "bot <= P <= top, p * 0 = 0, p * 1 = p, P + 0 = P, P - 0 = P", "lattice")
def _(rng, ops):
    sp = random_space(rng)
    P, p = prfun_kernel(rng, sp), rvfun_kernel(rng, sp)
    zero, one = K.zero(sp), K.ones(sp)
    return (_not_leq(zero, P) or _not_leq(P, one)
            or _diff(_pr(one), one, "clamp(1): ") or _diff(_pr(zero), zero, "clamp(0): ")
            or _diff(K.pointwise(p, zero, "*"), zero, "p*0: ")
            or _diff(K.pointwise(p, one, "*"), p, "p*1: ")
            or _diff(K.pointwise(P, zero, "*"), zero, "P*0: ")
            or _diff(K.pointwise(P, one, "*"), P, "P*1: ")
            or _diff(K.pointwise(P, zero, "-"), P, "P-0: ")
            or _diff(K.pointwise(P, zero, "+"), P, "P+0: "))


# skip and assignment

@law("pskip_id", "II = (x := x)", "skip")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    return _diff(ops.skip(sp), sem_assign(sp, x, var(x)))


@law("pskip_final_dist", "is_final_dist(II)", "skip")
def _(rng, ops):
    sp = random_space(rng)
    return _need(K.classify(ops.skip(sp)).is_final_dist, "skip is not a distribution")


@law("pskip_inverse", "rvfun(prfun([II])) = [II]", "skip")
def _(rng, ops):
    sp = random_space(rng)
    t = _tab(sp, _ident(sp))
    return _diff(_pr(t), t) or _diff(t, ops.skip(sp), "[II] vs skip: ")


@law("prob_assign_finaldist", "is_final_dist(x := e)", "assign")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    dom = sp.domain(x)
    if dom.kind == "bool":
        e = random_pred(rng, sp, relational=False)
    else:
        e = lift(rng.randint(0, 3))
        for n in sp.names:
            if sp.domain(n).kind == "int" and rng.random() < 0.6:
                e = e + rng.randint(1, 3) * var(n)
        e = Bin("mod", e, lift(len(dom.values)))
    return _need(K.classify(sem_assign(sp, x, e)).is_final_dist, f"x := {e} is not a distribution")


# probabilistic choice

@law("pchoice_final_dist", "P, Q dists implies P (+)_r Q dist", "pchoice")
def _(rng, ops):
    sp = random_space(rng)
    k = ops.pchoice(random_weight(rng, sp), dist_kernel(rng, sp), dist_kernel(rng, sp))
    return _need(K.classify(k).is_final_dist, "choice of distributions is not a distribution")


@law("pchoice_commute", "P (+)_r Q = Q (+)_(1-r) P", "pchoice")
def _(rng, ops):
    sp = random_space(rng)
    r = random_weight(rng, sp)
    P, Q = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    return _diff(ops.pchoice(r, P, Q), ops.pchoice(1 - r, Q, P))


@law("pchoice_zero", "P (+)_0 Q = Q", "pchoice")
def _(rng, ops):
    sp = random_space(rng)
    P, Q = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    return _diff(ops.pchoice(0, P, Q), Q)


@law("pchoice_one", "P (+)_1 Q = P", "pchoice")
def _(rng, ops):
    sp = random_space(rng)
    P, Q = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    return _diff(ops.pchoice(1, P, Q), P)


@law("pchoice_altdef", "P (+)_r Q = r * P + (1 - r) * Q", "pchoice")
def _(rng, ops):
    sp = random_space(rng)
    r = random_weight(rng, sp)
    P, Q = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    rk = K.tabulate(sp, r)
    rhs = K.pointwise(K.pointwise(rk, P, "*"),
                      K.pointwise(K.pointwise(K.ones(sp), rk, "-"), Q, "*"), "+")
    return _diff(ops.pchoice(r, P, Q), _pr(rhs))


@law("pchoice_quasi_assoc",
     "(1-w1)(1-w2) = 1-r2 and w1 = r1*r2 implies P (+)_w1 (Q (+)_w2 R) = (P (+)_r1 Q) (+)_r2 R",
     "pchoice")
def _(rng, ops):
    sp = random_space(rng)
    g = random_pred(rng, sp, relational=False, depth=1)
    ws = []
    for _ in range(2):
        w1, w2 = unit_weight(rng), unit_weight(rng)
        r2 = 1 - (1 - w1) * (1 - w2)
        r1 = w1 / r2 if r2 else unit_weight(rng)
        ws.append((w1, w2, r1, r2))

    def piece(i):
        return ws[0][i] * iv(g) + ws[1][i] * iv(neg(g))

    P, Q, R = (prfun_kernel(rng, sp) for _ in range(3))
    lhs = ops.pchoice(piece(0), P, ops.pchoice(piece(1), Q, R))
    rhs = ops.pchoice(piece(3), ops.pchoice(piece(2), P, Q), R)
    return _diff(lhs, rhs)


# conditional choice

@law("cchoice_final_dist", "P, Q dists implies if b then P else Q dist", "cchoice")
def _(rng, ops):
    sp = random_space(rng)
    b = random_pred(rng, sp, relational=False)
    k = ops.cchoice(b, dist_kernel(rng, sp), dist_kernel(rng, sp))
    return _need(K.classify(k).is_final_dist, "conditional of distributions is not a distribution")


@law("cchoice_id", "if b then P else P = P", "cchoice")
def _(rng, ops):
    sp = random_space(rng)
    P = prfun_kernel(rng, sp)
    return _diff(ops.cchoice(random_pred(rng, sp), P, P), P)


@law("cchoice_pchoice", "if b then P else Q = P (+)_[b] Q", "cchoice")
def _(rng, ops):
    sp = random_space(rng)
    b = random_pred(rng, sp, relational=False)
    P, Q = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    return _diff(ops.cchoice(b, P, Q), ops.pchoice(iv(b), P, Q))


@law("cchoice_mono", "P1 <= P2 and Q1 <= Q2 implies cchoice monotone", "cchoice")
def _(rng, ops):
    sp = random_space(rng)
    b = random_pred(rng, sp)
    P2, Q2 = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    P1, Q1 = _below(rng, P2), _below(rng, Q2)
    return _not_leq(ops.cchoice(b, P1, Q1), ops.cchoice(b, P2, Q2))


# sequential composition

@law("pseq_final_dist", "P, Q dists implies P; Q dist", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    k = ops.seq(dist_kernel(rng, sp), dist_kernel(rng, sp))
    return _need(K.classify(k).is_final_dist, "sequence of distributions is not a distribution")


@law("pseq_left_zero", "0; P = 0", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    return _diff(ops.seq(K.zero(sp), prfun_kernel(rng, sp)), K.zero(sp))


@law("pseq_right_zero", "P; 0 = 0", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    return _diff(ops.seq(prfun_kernel(rng, sp), K.zero(sp)), K.zero(sp))


@law("pseq_left_unit", "II; P = P", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    P = prfun_kernel(rng, sp)
    return _diff(ops.seq(ops.skip(sp), P), P)


@law("pseq_right_unit", "P; II = P", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    P = prfun_kernel(rng, sp)
    return _diff(ops.seq(P, ops.skip(sp)), P)


@law("pseq_one", "P dist implies P; 1 = 1", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    return _diff(ops.seq(dist_kernel(rng, sp), K.ones(sp)), K.ones(sp))


@law("pseq_mono", "P1 <= P2 and Q1 <= Q2 implies P1; Q1 <= P2; Q2", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    P2, Q2 = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    P1, Q1 = _below(rng, P2), _below(rng, Q2)
    return _not_leq(ops.seq(P1, Q1), ops.seq(P2, Q2))


@law("pseq_assoc", "P, Q, R dists implies P; (Q; R) = (P; Q); R", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    P, Q, R = (dist_kernel(rng, sp) for _ in range(3))
    return _diff(ops.seq(P, ops.seq(Q, R)), ops.seq(ops.seq(P, Q), R))


@law("pseq_assoc_subdist", "P, Q, R subdists implies P; (Q; R) = (P; Q); R", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    P, Q, R = (subdist_kernel(rng, sp) for _ in range(3))
    return _diff(ops.seq(P, ops.seq(Q, R)), ops.seq(ops.seq(P, Q), R))


@law("pseq_dist_cchoice", "P subdist implies P; (if b then Q else R) = P; ([b]*Q) + P; ([!b]*R)", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    P = subdist_kernel(rng, sp)
    Q, R = prfun_kernel(rng, sp), prfun_kernel(rng, sp)
    b = random_pred(rng, sp)
    lhs = ops.seq(P, ops.cchoice(b, Q, R))
    rhs = K.pointwise(ops.seq(P, K.pointwise(_tab(sp, b), Q, "*")),
                      ops.seq(P, K.pointwise(_tab(sp, neg(b)), R, "*")), "+")
    return _diff(lhs, _pr(rhs))


@law("pseq_ibracket", "[r]; [t] = sum v0 . [r[v0/v'] && t[v0/v]]", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    r, t = random_pred(rng, sp), random_pred(rng, sp)
    lhs = ops.seq(_pr(_tab(sp, r)), _pr(_tab(sp, t)))
    rhs = K.zero(sp)
    for v0 in sp.states():
        val = sp.valuation(v0)
        rhs = K.pointwise(rhs, _tab(sp, conj(subst_final(r, val), subst_initial(t, val))), "+")
    return _diff(lhs, _pr(rhs))


def _point(rng, sp, x):
    return rng.choice(sp.domain(x).values)


@law("pseq_ibracket_contradictory", "c1 != c2 implies [x' = c1]; [x = c2] = 0", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    c1 = _point(rng, sp, x)
    c2 = rng.choice([v for v in sp.domain(x).values if v != c1])
    return _diff(ops.seq(_tab(sp, eq(fvar(x), c1)), _tab(sp, eq(var(x), c2))), K.zero(sp))


@law("pseq_ibracket_agree_1_final_unspecified", "[x = c0 && x := c1]; [x = c1] = [x = c0]", "pseq")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    c0, c1 = _point(rng, sp, x), _point(rng, sp, x)
    lhs = ops.seq(_tab(sp, conj(eq(var(x), c0), _assign_rel(sp, x, c1))), _tab(sp, eq(var(x), c1)))
    return _diff(lhs, _tab(sp, eq(var(x), c0)))


@law("pseq_ibracket_agree_1_point",
     "[x = c0 && x := c1]; [x = c1 && x := c2] = [x = c0 && x' = c2]", "pseq")
def _(rng, ops):
    # with a second variable the right side leaves it unconstrained, so the
    # law is stated over spaces with x alone
    sp = random_space(rng, single=True)
    x = sp.names[0]
    c0, c1, c2 = (_point(rng, sp, x) for _ in range(3))
    lhs = ops.seq(_tab(sp, conj(eq(var(x), c0), _assign_rel(sp, x, c1))),
                  _tab(sp, conj(eq(var(x), c1), _assign_rel(sp, x, c2))))
    return _diff(lhs, _tab(sp, conj(eq(var(x), c0), eq(fvar(x), c2))))


# normalisation

@law("normf_final_dist", "nonneg p and final reachable p implies is_final_dist(normf p)", "norm")
def _(rng, ops):
    sp = random_space(rng)
    states = list(sp.states())
    p = rvfun_kernel(rng, sp)
    rows = {s: dict(p.row(s)) for s in states}
    for s in states:
        if not rows[s]:
            rows[s][rng.choice(states)] = Fraction(rng.randint(1, 2 * MAX_DEN), rng.randint(1, MAX_DEN))
    k = K.normalize_final(K.from_rows(sp, rows, kind=K.RVFUN))
    return _need(K.classify(k).is_final_dist, "normalisation is not a distribution")


# uniform distributions

def _subset(rng, sp, x, nonempty=True):
    vals = list(sp.domain(x).values)
    A = [v for v in vals if rng.random() < 0.5]
    if nonempty and not A:
        A = [rng.choice(vals)]
    return A


@law("uniform_emptyset", "x :=$ {} = 0", "uniform")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    return _diff(ops.uniform(sp, x, []), K.zero(sp))


@law("uniform_prob", "finite A implies is_prob(x :=$ A)", "uniform")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    return _need(K.classify(ops.uniform(sp, x, _subset(rng, sp, x, nonempty=False))).is_prob,
                 "uniform is not probabilistic")


@law("uniform_finaldist", "finite nonempty A implies is_final_dist(x :=$ A)", "uniform")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    return _need(K.classify(ops.uniform(sp, x, _subset(rng, sp, x))).is_final_dist,
                 "uniform is not a distribution")


@law("uniform_uniform", "v in A implies (x :=$ A); [x = v] = 1/card(A)", "uniform")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    A = _subset(rng, sp, x)
    U = ops.uniform(sp, x, A)
    for v in A:
        d = _diff(ops.seq(U, _tab(sp, eq(var(x), v))), K.constant(sp, Fraction(1, len(A))), f"v={v}: ")
        if d:
            return d
    return None


@law("uniform_form2", "x :=$ A = [union over v in A of x := v] / card(A)", "uniform")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    A = _subset(rng, sp, x)
    rhs = K.scale(_tab(sp, disj(*(_assign_rel(sp, x, v) for v in A))), Fraction(1, len(A)))
    return _diff(ops.uniform(sp, x, A), rhs)


@law("uniform_pseq", "(x :=$ A); P = (sum v in A . P[v/x]) / card(A)", "uniform")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    A = _subset(rng, sp, x)
    P = prfun_kernel(rng, sp)

    def row(s):
        out: dict = {}
        for v in A:
            for t, w in P.row(update(sp, s, x, v)).items():
                out[t] = out.get(t, 0) + w
        return {t: w / len(A) for t, w in out.items()}

    return _diff(ops.seq(ops.uniform(sp, x, A), P), K.lazy(sp, row))


# parallel composition

def _shared(rng, sp, ks):
    """Copies of ``ks`` that share one positive final state in every row."""
    states = list(sp.states())
    rows = [{s: dict(k.row(s)) for s in states} for k in ks]
    for s in states:
        t = rng.choice(states)
        for r in rows:
            if not r[s].get(t):
                r[s][t] = Fraction(rng.randint(1, MAX_DEN), MAX_DEN)
    return [K.from_rows(sp, r, kind=k.kind) for r, k in zip(rows, ks)]


@law("pparallel_norm_prob", "nonneg (p * q) implies is_prob(normf (p * q))", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    k = K.normalize_final(K.pointwise(rvfun_kernel(rng, sp), rvfun_kernel(rng, sp), "*"))
    return _need(K.classify(k).is_prob, "normalised product is not probabilistic")


@law("pparallel_dist", "final prob p, q and final reachable (p, q) implies is_final_dist(p || q)",
     "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    p, q = _shared(rng, sp, [prfun_kernel(rng, sp), prfun_kernel(rng, sp)])
    return _need(K.classify(ops.parallel(p, q)).is_final_dist, "parallel is not a distribution")


@law("pparallel_contradiction_zero", "not final reachable (p, q) implies p || q = 0", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    states = list(sp.states())
    p, q = rvfun_kernel(rng, sp), rvfun_kernel(rng, sp)
    # q keeps only the final states p gives no weight to
    rows = {s: {t: w for t, w in q.row(s).items() if t not in p.row(s)} for s in states}
    return _diff(ops.parallel(p, K.from_rows(sp, rows, kind=K.RVFUN)), K.zero(sp))


@law("pparallel_left_zero", "0 || p = 0", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    return _diff(ops.parallel(K.zero(sp), rvfun_kernel(rng, sp)), K.zero(sp))


@law("pparallel_right_zero", "p || 0 = 0", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    return _diff(ops.parallel(rvfun_kernel(rng, sp), K.zero(sp)), K.zero(sp))


def _nonzero_const(rng):
    return Fraction(rng.randint(1, 2 * MAX_DEN), rng.randint(1, MAX_DEN))


@law("pparallel_left_unit", "c != 0 and p dist implies (fun s . c) || p = p", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    p = dist_kernel(rng, sp)
    return _diff(ops.parallel(K.constant(sp, _nonzero_const(rng)), p), p)


@law("pparallel_right_unit", "c != 0 and p dist implies p || (fun s . c) = p", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    p = dist_kernel(rng, sp)
    return _diff(ops.parallel(p, K.constant(sp, _nonzero_const(rng))), p)


@law("pparallel_commute", "p || q = q || p", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    p, q = rvfun_kernel(rng, sp), rvfun_kernel(rng, sp)
    return _diff(ops.parallel(p, q), ops.parallel(q, p))


@law("pparallel_assoc", "nonneg p, q, r, reachable (p, q) and (q, r) implies (p || q) || r = p || (q || r)",
     "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    p, q, r = _shared(rng, sp, [rvfun_kernel(rng, sp) for _ in range(3)])
    return _diff(ops.parallel(ops.parallel(p, q), r), ops.parallel(p, ops.parallel(q, r)))


@law("pparallel_assoc2", "(P || Q) || R = P || (Q || R)", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    P, Q, R = (prfun_kernel(rng, sp) for _ in range(3))
    return _diff(ops.parallel(ops.parallel(P, Q), R), ops.parallel(P, ops.parallel(Q, R)))


@law("pparallel_uniform",
     "(x :=$ A) || p = (sum v in A . [x := v] * p[v/x']) / (sum v in A . p[v/x'])", "pparallel")
def _(rng, ops):
    sp = random_space(rng)
    x = rng.choice(sp.names)
    A = _subset(rng, sp, x)
    p = rvfun_kernel(rng, sp)

    def row(s):
        out = {}
        for t in sp.states():
            num = sum((p.weight(s, t) for v in A if t == update(sp, s, x, v)), Fraction(0))
            den = sum((p.weight(s, update(sp, t, x, v)) for v in A), Fraction(0))
            if num and den:
                out[t] = num / den
        return out

    return _diff(ops.parallel(ops.uniform(sp, x, A), p), K.lazy(sp, row))


# loops

@law("iterdiff_identity", "F^n(1) - F^n(0) = iterdiff(n)", "loop")
def _(rng, ops):
    sp = random_space(rng)
    spec = _spec(rng, sp)
    n = rng.randint(0, 12)
    gap = K.pointwise(iterate(n, spec, "top"), iterate(n, spec, "bot"), "-")
    return (_diff(gap, iterdiff_kernel(n, spec), f"n={n} recursive: ")
            or _diff(gap, iterdiff(n, spec), f"n={n} scalar: "))


@law("iter_bot_ascending", "P dist implies F^n(0) ascending in n", "loop")
def _(rng, ops):
    sp = random_space(rng)
    spec = _spec(rng, sp)
    prev = iterate(0, spec, "bot")
    for n in range(1, 8):
        cur = loop_step(spec, prev).materialize()
        d = _not_leq(prev, cur)
        if d:
            return f"n={n}: {d}"
        prev = cur
    return None


@law("iter_top_descending", "P dist implies F^n(1) descending in n", "loop")
def _(rng, ops):
    sp = random_space(rng)
    spec = _spec(rng, sp)
    prev = iterate(0, spec, "top")
    for n in range(1, 8):
        cur = loop_step(spec, prev).materialize()
        d = _not_leq(cur, prev)
        if d:
            return f"n={n}: {d}"
        prev = cur
    return None


@law("lfun_mono", "X <= Y implies F(X) <= F(Y)", "loop")
def _(rng, ops):
    sp = random_space(rng)
    spec = _spec(rng, sp)
    Y = prfun_kernel(rng, sp)
    X = _below(rng, Y)
    return _not_leq(loop_step(spec, X), loop_step(spec, Y))


@law("pwhile_false", "while false do P = II", "loop")
def _(rng, ops):
    sp = random_space(rng)
    spec = _spec(rng, sp, guard=FALSE)
    return (_diff(loop_kernel(spec, Config()), ops.skip(sp))
            or _diff(loop_step(spec, prfun_kernel(rng, sp)), ops.skip(sp), "F(X): "))


@law("pwhile_true", "while true do P = 0", "loop")
def _(rng, ops):
    sp = random_space(rng)
    spec = _spec(rng, sp, guard=TRUE)
    for n in range(6):
        d = _diff(iterate(n, spec, "bot"), K.zero(sp), f"n={n}: ")
        if d:
            return d
    return _diff(loop_step(spec, K.zero(sp)), K.zero(sp), "F(0): ")


# -- running ---------------------------------------------------------------------

def default_ops() -> SimpleNamespace:
    return SimpleNamespace(
        skip=sem_skip,
        seq=sem_seq,
        pchoice=sem_pchoice,
        cchoice=sem_cchoice,
        parallel=sem_parallel,
        uniform=lambda sp, x, A: sem_uniform(sp, x, A, algebra=True),
    )


@dataclass
class LawResult:
    law_id: str
    anchor: str
    cases: int
    passed: bool
    failing_case: int | None = None
    counterexample: str | None = None
    seed: int = 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{self.law_id:<42} {self.cases:>5}  {status}  {self.anchor}"
        if not self.passed:
            text += f"\n    case {self.failing_case} (seed {self.seed}): {self.counterexample}"
        return text


def check(law_id: str, cases: int = 100, seed: int = 7, ops=None) -> LawResult:
    if law_id not in CATALOG:
        raise UnknownLaw(law_id)
    entry = CATALOG[law_id]
    ops = ops or default_ops()
    for i in range(cases):
        rng = random.Random(f"{law_id}:{seed}:{i}")
        bad = entry.fn(rng, ops)
        if bad is not None:
            return LawResult(law_id, entry.anchor, i + 1, False, i, bad, seed)
    return LawResult(law_id, entry.anchor, cases, True, seed=seed)


def run_suite(cases: int = 100, seed: int = 7, ids=None) -> list:
    ids = list(ids) if ids else list(CATALOG)
    unknown = [i for i in ids if i not in CATALOG]
    if unknown:
        raise UnknownLaw(unknown[0])
    return [check(i, cases, seed) for i in ids]


def mutant_seq(P: K.Kernel, Q: K.Kernel) -> K.Kernel:
    """A broken sequential composition that ignores the first intermediate state."""
    def row(s):
        r = P.row(s)
        if r:
            first = min(r, key=P.space.sort_key)
            r = {v: w for v, w in r.items() if v != first}
        tmp = K.Kernel(P.space, rows={s: r})
        return K.clamp_row(seq_row(tmp, Q, s))
    return K.lazy(P.space, row)


@dataclass
class MutantResult:
    law_id: str
    detected: bool
    result: LawResult

    def line(self) -> str:
        if self.detected:
            r = self.result
            return (f"{'mutant self-test':<42} {r.cases:>5}  PASS  mutated seq caught by {self.law_id}"
                    f" at case {r.failing_case}: {r.counterexample}")
        return f"{'mutant self-test':<42} {self.result.cases:>5}  FAIL  mutated seq survived {self.law_id}"


def mutant_self_test(cases: int = 100, seed: int = 7, law_id: str = "pseq_assoc") -> MutantResult:
    ops = default_ops()
    ops.seq = mutant_seq
    r = check(law_id, cases, seed, ops)
    return MutantResult(law_id, not r.passed, r)


__all__ = [
    "CATALOG", "Law", "LawResult", "MutantResult", "UnknownLaw",
    "check", "default_ops", "generate", "mutant_self_test", "mutant_seq", "run_suite",
    "dist_kernel", "subdist_kernel", "prfun_kernel", "rvfun_kernel", "random_pred",
    "random_space", "random_weight", "unit_weight",
]
