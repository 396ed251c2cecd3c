"""Kernels: maps from an initial state to a sparse map of final-state weights.

Rows are computed lazily and memoized, so a kernel over a large window only
pays for the rows a query actually reaches. Rows never store zero weights.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping

from .expr import Expr, check_numeric, compile_expr
from .numerics import format_rational, parse_rational
from .state import OutOfDomain, State, StateSpace

RVFUN = "rvfun"
PRFUN = "prfun"

_debug = {"clamp": False}


class KernelError(Exception):
    pass


class NegativeWeight(KernelError):
    def __init__(self, s, s_final, w):
        super().__init__(f"negative weight {w} at {s} -> {s_final}")
        self.s, self.s_final, self.weight = s, s_final, w


class ZeroTotal(KernelError):
    pass


class SpaceMismatch(KernelError):
    pass


class ClampFired(KernelError):
    """A weight above 1 appeared where the algebra says it cannot."""


def set_debug(on: bool = True) -> None:
    """In debug mode a clamp that actually changes a weight raises ``ClampFired``."""
    _debug["clamp"] = on


@dataclass
class Tail:
    """Mass a truncated loop had not yet absorbed when it stopped.

    ``pending`` maps states still inside the loop to their mass. ``ratio`` is
    the largest observed round-on-round shrink factor of that mass (``None``
    when it was not below 1) and ``growth`` the largest clock increase per
    body execution.
    """
    pending: dict
    ratio: Fraction | None = None
    growth: int = 0
    unbounded: bool = False

    @property
    def mass(self) -> Fraction:
        return sum(self.pending.values(), Fraction(0))


def merge_tails(parts) -> Tail | None:
    """Mix ``(weight, tail)`` pairs into one tail, or ``None`` if all are empty."""
    pending: dict = {}
    ratio = Fraction(0)
    growth = 0
    unbounded = False
    seen = False
    for w, t in parts:
        if t is None or w == 0:
            continue
        seen = True
        unbounded = unbounded or t.unbounded
        if t.ratio is None or ratio is None:
            ratio = None
        else:
            ratio = max(ratio, t.ratio)
        growth = max(growth, t.growth)
        for u, m in t.pending.items():
            pending[u] = pending.get(u, 0) + w * m
    if not seen:
        return None
    return Tail(pending, ratio, growth, unbounded)


class Kernel:
    def __init__(self, space: StateSpace, row_fn: Callable[[State], dict] | None = None,
                 rows: Mapping[State, dict] | None = None, kind: str = PRFUN,
                 tail_fn: Callable[[State], Tail | None] | None = None):
        self.space = space
        self.kind = kind
        self._row_fn = row_fn
        self._rows: dict = {}
        self._errors: dict = {}
        self._tail_fn = tail_fn
        # set by constructs that are known to map distributions to distributions
        self.dist = False
        if rows is not None:
            for s, r in rows.items():
                self._rows[s] = {k: Fraction(v) for k, v in r.items() if v != 0}
        if row_fn is None and rows is None:
            raise KernelError("a kernel needs rows or a row function")

    def row(self, s: State) -> dict:
        r = self._rows.get(s)
        if r is not None:
            return r
        err = self._errors.get(s)
        if err is not None:
            raise err
        if self._row_fn is None:
            r = {}
        else:
            r = self._row_fn(s)
        self._rows[s] = r
        return r

    def weight(self, s: State, s_final: State) -> Fraction:
        return self.row(s).get(s_final, Fraction(0))

    def tail(self, s: State) -> Tail | None:
        if self._tail_fn is None:
            return None
        self.row(s)
        return self._tail_fn(s)

    @property
    def has_tails(self) -> bool:
        return self._tail_fn is not None

    def items(self) -> Iterator[tuple]:
        for s in self.space.states():
            yield s, self.row(s)

    def materialize(self, keep_clock_errors: bool = False) -> "Kernel":
        """Compute every row now.

        With ``keep_clock_errors`` a row that runs past a time window is kept
        as a stored error and re-raised whenever that row is read.
        """
        for s in self.space.states():
            if s in self._rows or s in self._errors:
                continue
            try:
                self.row(s)
            except OutOfDomain as exc:
                if not (keep_clock_errors and exc.clock):
                    raise
                self._errors[s] = exc
        return self

    def failed_rows(self) -> dict:
        return dict(self._errors)

    def __repr__(self):
        return f"Kernel({self.kind}, {len(self.space)} rows)"


def from_rows(space: StateSpace, rows: Mapping[State, Mapping[State, object]], kind: str = PRFUN) -> Kernel:
    return Kernel(space, rows={s: dict(rows.get(s, {})) for s in space.states()}, kind=kind)


def lazy(space: StateSpace, row_fn, kind: str = PRFUN, tail_fn=None, dist: bool = False) -> Kernel:
    k = Kernel(space, row_fn=row_fn, kind=kind, tail_fn=tail_fn)
    k.dist = dist
    return k


def zero(space: StateSpace) -> Kernel:
    return Kernel(space, row_fn=lambda s: {}, kind=PRFUN)


def ones(space: StateSpace) -> Kernel:
    states = list(space.states())
    return Kernel(space, row_fn=lambda s: {t: Fraction(1) for t in states}, kind=PRFUN)


def constant(space: StateSpace, c) -> Kernel:
    c = Fraction(c)
    states = list(space.states())
    kind = PRFUN if 0 <= c <= 1 else RVFUN
    return Kernel(space, row_fn=lambda s: {t: c for t in states} if c else {}, kind=kind)


def identity(space: StateSpace) -> Kernel:
    k = Kernel(space, row_fn=lambda s: {s: Fraction(1)}, kind=PRFUN)
    k.dist = True
    return k


def tabulate(space: StateSpace, e: Expr, params=None, kind: str = RVFUN) -> Kernel:
    """Kernel whose weight at ``(s, s')`` is the value of ``e``; zeros are dropped."""
    f = check_numeric(compile_expr(e, space, params))
    states = list(space.states())

    def row(s):
        out = {}
        for t in states:
            w = f(s, t)
            if w < 0:
                raise NegativeWeight(s, t, w)
            if w:
                out[t] = Fraction(w)
        return out

    return Kernel(space, row_fn=row, kind=kind)


def pointwise(a: Kernel, b: Kernel, op: str) -> Kernel:
    """Pointwise ``+``, ``-`` or ``*`` of two kernels. Differences are not floored at 0."""
    _same_space(a, b)

    def row(s):
        ra, rb = a.row(s), b.row(s)
        if op == "*":
            small, big = (ra, rb) if len(ra) <= len(rb) else (rb, ra)
            out = {t: w * big[t] for t, w in small.items() if t in big}
        elif op == "+":
            out = dict(ra)
            for t, w in rb.items():
                out[t] = out.get(t, 0) + w
        elif op == "-":
            out = dict(ra)
            for t, w in rb.items():
                out[t] = out.get(t, 0) - w
        else:
            raise KernelError(f"unknown operation {op}")
        return {t: w for t, w in out.items() if w != 0}

    return Kernel(a.space, row_fn=row, kind=RVFUN if op != "*" else a.kind)


def scale(k: Kernel, c) -> Kernel:
    c = Fraction(c)
    return Kernel(k.space, row_fn=lambda s: {t: c * w for t, w in k.row(s).items()} if c else {}, kind=k.kind)


@dataclass
class Classification:
    is_prob: bool
    is_final_dist: bool
    is_final_subdist: bool
    final_reachable: bool
    row_sums: dict = field(repr=False)


def classify(k: Kernel) -> Classification:
    is_prob = True
    sums = {}
    for s, r in k.items():
        tot = Fraction(0)
        for w in r.values():
            if w < 0 or w > 1:
                is_prob = False
            tot += w
        sums[s] = tot
    dist = is_prob and all(v == 1 for v in sums.values())
    subdist = is_prob and all(0 < v <= 1 for v in sums.values())
    reachable = all(v > 0 for v in sums.values())
    return Classification(is_prob, dist, subdist, reachable, sums)


def is_dist_row(r: dict) -> bool:
    return sum(r.values(), Fraction(0)) == 1 and all(0 <= w <= 1 for w in r.values())


def clamp_row(r: dict, trusted: bool = False) -> dict:
    """Clamp weights to [0, 1]. ``trusted`` rows come from distributions and
    are returned as they are unless debug mode asks for the check."""
    if trusted and not _debug["clamp"]:
        return r
    out = {}
    for t, w in r.items():
        if w > 1:
            if _debug["clamp"]:
                raise ClampFired(f"weight {w} clamped to 1 at final state {t}")
            w = Fraction(1)
        if w > 0:
            out[t] = w
    return out


def clamp_kernel(k: Kernel) -> Kernel:
    def row(s):
        return {t: min(w, Fraction(1)) for t, w in k.row(s).items() if w > 0}
    return Kernel(k.space, row_fn=row, kind=PRFUN)


def normalize_row(r: dict) -> dict:
    tot = sum(r.values(), Fraction(0))
    if tot == 0:
        return {}
    return {t: w / tot for t, w in r.items()}


def normalize_final(k: Kernel) -> Kernel:
    return Kernel(k.space, row_fn=lambda s: normalize_row(k.row(s)), kind=PRFUN)


def normalize_global(k: Kernel) -> Kernel:
    total = sum((w for _, r in k.items() for w in r.values()), Fraction(0))
    if total == 0:
        raise ZeroTotal("the kernel has total weight 0")
    return Kernel(k.space, row_fn=lambda s: {t: w / total for t, w in k.row(s).items()}, kind=PRFUN)


def normalize_alpha(x: str, k: Kernel) -> Kernel:
    """Normalize over the final values of ``x`` with the other final variables held fixed."""
    i = k.space.index(x)

    def row(s):
        r = k.row(s)
        groups: dict = {}
        for t, w in r.items():
            key = t[:i] + t[i + 1:]
            groups[key] = groups.get(key, 0) + w
        out = {}
        for t, w in r.items():
            g = groups[t[:i] + t[i + 1:]]
            if g:
                out[t] = w / g
        return out

    return Kernel(k.space, row_fn=row, kind=PRFUN)


def _same_space(a: Kernel, b: Kernel) -> None:
    if a.space != b.space:
        raise SpaceMismatch("kernels are over different state spaces")


def kernels_equal(a: Kernel, b: Kernel) -> bool:
    _same_space(a, b)
    return all(a.row(s) == b.row(s) for s in a.space.states())


def first_difference(a: Kernel, b: Kernel):
    """The first ``(s, s', a_weight, b_weight)`` where the kernels differ, else ``None``."""
    _same_space(a, b)
    for s in a.space.states():
        ra, rb = a.row(s), b.row(s)
        if ra != rb:
            for t in sorted(set(ra) | set(rb), key=a.space.sort_key):
                wa, wb = ra.get(t, Fraction(0)), rb.get(t, Fraction(0))
                if wa != wb:
                    return s, t, wa, wb
    return None


def leq(a: Kernel, b: Kernel) -> bool:
    """Pointwise ``a <= b``."""
    _same_space(a, b)
    for s in a.space.states():
        rb = b.row(s)
        for t, w in a.row(s).items():
            if w > rb.get(t, 0):
                return False
    return True


def sup_norm(k: Kernel) -> Fraction:
    return max((abs(w) for _, r in k.items() for w in r.values()), default=Fraction(0))


# -- serialization -------------------------------------------------------------

def _state_json(space: StateSpace, s: State) -> dict:
    return dict(zip(space.names, s))


def sorted_states(space: StateSpace, states) -> list:
    return sorted(states, key=space.sort_key)


def to_json(k: Kernel, initials=None) -> dict:
    space = k.space
    initials = list(space.states()) if initials is None else initials
    rows = []
    for s in initials:
        r = k.row(s)
        rows.append({
            "initial": _state_json(space, s),
            "finals": [{"state": _state_json(space, t), "weight": format_rational(r[t])}
                       for t in sorted_states(space, r)],
        })
    return {"space": space.to_json(), "kind": k.kind, "rows": rows}


def dumps(k: Kernel, initials=None) -> str:
    return json.dumps(to_json(k, initials), indent=2)


def from_json(data: dict) -> Kernel:
    from .state import Domain, make_space
    decls = []
    for v in data["space"]:
        if v["kind"] == "bool":
            d = Domain.bool()
        elif v["kind"] == "int":
            d = Domain.int_range(v["values"][0], v["values"][-1], v.get("clock", False))
        else:
            d = Domain.enum(v["values"])
        decls.append((v["name"], d))
    space = make_space(decls)
    rows = {}
    for r in data["rows"]:
        s = space.state(r["initial"])
        rows[s] = {space.state(f["state"]): parse_rational(f["weight"]) for f in r["finals"]}
    return from_rows(space, rows, kind=data.get("kind", PRFUN))


def to_csv(k: Kernel, initials=None) -> str:
    space = k.space
    initials = list(space.states()) if initials is None else initials
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["initial", "final", "weight"])
    for s in initials:
        r = k.row(s)
        for t in sorted_states(space, r):
            w.writerow([space.format_state(s), space.format_state(t), format_rational(r[t])])
    return buf.getvalue()
