"""Loop semantics: Kleene iteration, iteration differences and fixed-point certificates.

For a loop ``while b do P`` the loop function is ``F(X) = if b then (P; X) else skip``.
``iterdiff(n)`` is ``F^n(top) - F^n(bot)``; because it starts from the all-ones
kernel it is constant along each row, so it is tracked as one number per
initial state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import kernel as K
from .config import Config
from .constructs import seq_row
from .expr import compile_expr, lift
from .kernel import Kernel, Tail, is_dist_row
from .state import OutOfDomain, StateSpace


class LoopError(Exception):
    pass


class NotADistribution(LoopError):
    def __init__(self, s, total=None):
        msg = f"loop body is not a final distribution in state {s}"
        if total is not None:
            msg += f" (row sum {total})"
        super().__init__(msg)
        self.s = s


class NoConvergence(LoopError):
    def __init__(self, report, kernel=None):
        super().__init__(f"no convergence after {report.iterations_used} iterations "
                         f"(gap {report.sup_gap})")
        self.report = report
        self.kernel = kernel


class NestedLoopError(LoopError):
    pass


class LoopSpec:
    """Guard (initial state only) and body kernel of a loop."""

    def __init__(self, guard, body: Kernel, space: StateSpace | None = None, params: Mapping | None = None):
        self.space = space or body.space
        self.guard = lift(guard)
        self.body = body
        f = compile_expr(self.guard, self.space, params, allow_final=False)
        self.test = lambda s: bool(f(s, s))


@dataclass
class ConvergenceReport:
    iterations_used: int
    sup_gap: Fraction
    monotone_ok: bool
    geometric_ratio: Fraction | None = None
    ratio_range: tuple | None = None
    successive_gap: Fraction | None = None

    def to_json(self) -> dict:
        return {
            "iterations_used": self.iterations_used,
            "sup_gap": str(self.sup_gap),
            "monotone_ok": self.monotone_ok,
            "geometric_ratio": None if self.geometric_ratio is None else str(self.geometric_ratio),
            "ratio_range": None if self.ratio_range is None else list(self.ratio_range),
        }


@dataclass
class Certificate:
    verdict: str  # UniqueFixedPoint, FixedPointOnly or Failed
    fp: Kernel
    report: ConvergenceReport
    checks: list = field(default_factory=list)
    reason: str | None = None
    N: int = 0
    boundary_rows: list = field(default_factory=list)

    @property
    def ratio(self):
        return self.report.geometric_ratio

    @property
    def label(self) -> str:
        if self.verdict == "Failed":
            return f"Failed({self.reason})"
        return self.verdict

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "checks": self.checks,
            "ratio": None if self.ratio is None else str(self.ratio),
            "N": self.N,
            "boundary_rows": len(self.boundary_rows),
            "report": self.report.to_json(),
        }


# -- the loop function -----------------------------------------------------------

def loop_step(spec: LoopSpec, X: Kernel) -> Kernel:
    body, test = spec.body, spec.test

    def row(s):
        if test(s):
            return K.clamp_row(seq_row(body, X, s))
        return {s: Fraction(1)}

    return K.lazy(spec.space, row)


def _diff_step(spec: LoopSpec, X: Kernel) -> Kernel:
    body, test = spec.body, spec.test

    def row(s):
        if test(s):
            return K.clamp_row(seq_row(body, X, s))
        return {}

    return K.lazy(spec.space, row)


def iterate(n: int, spec: LoopSpec, start: str = "bot") -> Kernel:
    """``F^n`` applied to the all-zero (``bot``) or all-one (``top``) kernel."""
    if start == "bot":
        X = K.zero(spec.space)
    elif start == "top":
        X = K.ones(spec.space)
    else:
        raise ValueError("start must be 'bot' or 'top'")
    for _ in range(n):
        X = loop_step(spec, X).materialize(keep_clock_errors=True)
    return X


def iterdiff_kernel(n: int, spec: LoopSpec) -> Kernel:
    """The iteration difference by its recursive definition, as a full kernel."""
    X = K.ones(spec.space)
    for _ in range(n):
        X = _diff_step(spec, X).materialize(keep_clock_errors=True)
    return X


class _Undefined:
    pass


UNDEFINED = _Undefined()


def iterdiff_values(N: int, spec: LoopSpec) -> list:
    """``[d_0, ..., d_N]`` where ``d_n[s]`` is the (row-constant) value of iterdiff(n) at s.

    A row whose computation runs past a time window is ``UNDEFINED``.
    """
    states = list(spec.space.states())
    body, test = spec.body, spec.test
    cur = {s: Fraction(1) for s in states}
    out = [cur]
    body_rows: dict = {}

    def brow(s):
        if s not in body_rows:
            try:
                body_rows[s] = body.row(s)
            except OutOfDomain as exc:
                if not exc.clock:
                    raise
                body_rows[s] = UNDEFINED
        return body_rows[s]

    for _ in range(N):
        nxt = {}
        for s in states:
            if not test(s):
                nxt[s] = Fraction(0)
                continue
            r = brow(s)
            if r is UNDEFINED:
                nxt[s] = UNDEFINED
                continue
            acc = Fraction(0)
            for v, p in r.items():
                d = cur[v]
                if d is UNDEFINED:
                    acc = UNDEFINED
                    break
                acc += p * d
            nxt[s] = acc if acc is UNDEFINED else min(acc, Fraction(1))
        out.append(nxt)
        cur = nxt
    return out


def iterdiff(n: int, spec: LoopSpec) -> Kernel:
    vals = iterdiff_values(n, spec)[-1]
    states = list(spec.space.states())

    def row(s):
        v = vals[s]
        if v is UNDEFINED:
            raise OutOfDomain("window", None, True)
        return {t: v for t in states} if v else {}

    return K.lazy(spec.space, row)


def _check_body(spec: LoopSpec) -> None:
    for s in spec.space.states():
        r = spec.body.row(s)
        if not is_dist_row(r):
            raise NotADistribution(s, sum(r.values(), Fraction(0)))


def _ratio(values: list, rows) -> tuple:
    """Largest ``d_{n+1}/d_n`` for ``n >= 1`` over ``rows``; ``(None, why)`` if none exists."""
    r = Fraction(0)
    for n in range(1, len(values) - 1):
        a, b = values[n], values[n + 1]
        for s in rows:
            if a[s] == 0:
                if b[s] != 0:
                    return None, f"iterdiff grows from 0 at n={n}"
                continue
            r = max(r, b[s] / a[s])
    return r, None


def _kleene(spec: LoopSpec, config: Config, start: str):
    _check_body(spec)
    states = list(spec.space.states())
    X = K.zero(spec.space) if start == "bot" else K.ones(spec.space)
    d = {s: Fraction(1) for s in states}
    history = [d]
    monotone = True
    n = 0
    gap = Fraction(1)
    succ = Fraction(0)
    while True:
        Y = loop_step(spec, X).materialize()
        n += 1
        d = {s: (min(sum((p * history[-1][v] for v, p in spec.body.row(s).items()), Fraction(0)), Fraction(1))
                 if spec.test(s) else Fraction(0)) for s in states}
        history.append(d)
        ok = K.leq(X, Y) if start == "bot" else K.leq(Y, X)
        monotone = monotone and ok
        succ = K.sup_norm(K.pointwise(Y, X, "-"))
        gap = max(d.values(), default=Fraction(0))
        X = Y
        if gap <= config.gap_tol and succ <= config.gap_tol:
            break
        if n >= config.max_iter:
            r, _ = _ratio(history, states)
            rep = ConvergenceReport(n, gap, monotone, r if r is not None and r < 1 else None,
                                    (1, n - 1), succ)
            raise NoConvergence(rep, X)
    r, _ = _ratio(history, states)
    rep = ConvergenceReport(n, gap, monotone, r if r is not None and r < 1 and n >= 2 else None,
                            (1, n - 1), succ)
    return X, rep


def kleene_lfp(spec: LoopSpec, config: Config | None = None):
    """Iterate from bottom until iterdiff and the step-to-step change are within ``gap_tol``.

    The returned kernel is below the least fixed point and within
    ``report.sup_gap`` of it at every pair.
    """
    return _kleene(spec, config or Config(), "bot")


def kleene_gfp(spec: LoopSpec, config: Config | None = None):
    return _kleene(spec, config or Config(), "top")


def verify_unique_fp(spec: LoopSpec, candidate: Kernel, N: int = 12, ratio_check: bool = True) -> Certificate:
    """Certify that ``candidate`` is the loop's semantics.

    Checks: the body is a final distribution; the space is finite; iterdiff is
    antitone on 0..N and shrinks by a uniform ratio below 1 from n = 1 on; and
    ``loop_step(candidate) == candidate``. The ratio test is an empirical check
    over the computed range, not a proof of convergence. Rows that run past a
    time window are reported as boundary rows and excluded from the checks;
    their presence caps the verdict at FixedPointOnly.
    """
    space = spec.space
    states = list(space.states())
    checks = []
    boundary = set()

    # (1) body is a final distribution
    bad = None
    for s in states:
        try:
            r = spec.body.row(s)
        except OutOfDomain as exc:
            if not exc.clock:
                raise
            boundary.add(s)
            continue
        if not is_dist_row(r):
            bad = s
            break
    body_ok = bad is None
    checks.append({"name": "body_final_dist", "ok": body_ok,
                   "detail": "" if body_ok else f"row {space.format_state(bad)} is not a distribution"})

    # (2) finite final states
    checks.append({"name": "finite_states", "ok": True, "detail": f"{len(space)} states"})

    # (3) iterdiff decay
    values = iterdiff_values(N, spec) if body_ok else []
    if values:
        for s in states:
            if values[-1][s] is UNDEFINED:
                boundary.add(s)
    interior = [s for s in states if s not in boundary]
    antitone = all(values[n + 1][s] <= values[n][s] for n in range(len(values) - 1) for s in interior) if values else False
    ratio, why = (_ratio(values, interior) if values else (None, "body is not a distribution"))
    gap = max((values[-1][s] for s in interior), default=Fraction(0)) if values else Fraction(1)
    exact_zero = bool(values) and gap == 0
    ratio_ok = ratio is not None and ratio < 1 and N >= 3
    decay_ok = antitone and (exact_zero or (ratio_check and ratio_ok))
    detail = []
    if not antitone:
        detail.append("iterdiff is not antitone")
    if why:
        detail.append(why)
    if ratio is not None:
        detail.append(f"ratio {ratio} over n=1..{N - 1}")
    if not ratio_check and not exact_zero:
        detail.append("ratio check disabled")
    checks.append({"name": "iterdiff_decay", "ok": decay_ok, "detail": "; ".join(detail),
                   "empirical": not exact_zero})

    # (4) fixed point equation
    step = loop_step(spec, candidate)
    mismatch = None
    for s in states:
        if s in boundary:
            continue
        try:
            a = step.row(s)
            b = candidate.row(s)
        except OutOfDomain as exc:
            if not exc.clock:
                raise
            boundary.add(s)
            continue
        if a != b:
            mismatch = s
            break
    fp_ok = mismatch is None
    checks.append({"name": "fixed_point", "ok": fp_ok,
                   "detail": "" if fp_ok else f"F(candidate) differs in row {space.format_state(mismatch)}"})

    report = ConvergenceReport(N, gap, antitone, ratio if ratio_ok else None, (1, N - 1))
    cert = Certificate("Failed", candidate, report, checks, N=N,
                       boundary_rows=sorted(boundary, key=space.sort_key))
    if not fp_ok:
        cert.reason = "candidate is not a fixed point"
    elif body_ok and decay_ok and not boundary:
        cert.verdict = "UniqueFixedPoint"
    else:
        cert.verdict = "FixedPointOnly"
        if boundary:
            cert.reason = f"{len(boundary)} rows reach the time window boundary"
        elif not body_ok:
            cert.reason = "body is not a final distribution"
        else:
            cert.reason = "iterdiff decay not certified"
    return cert


def termination_probability(spec: LoopSpec, fp: Kernel) -> dict:
    out = {}
    for s in spec.space.states():
        out[s] = sum((w for t, w in fp.row(s).items() if not spec.test(t)), Fraction(0))
    return out


# -- row-wise forward iteration used by elaboration -------------------------------

@dataclass
class RowTrace:
    rounds: int
    masses: list
    stopped: str  # "converged", "window" or "max_iter"


def loop_kernel(spec: LoopSpec, config: Config) -> Kernel:
    """The loop as a lazy kernel computed one initial state at a time.

    For initial state s the computation pushes a pending mass vector through
    the body, absorbing mass wherever the guard fails. After n absorptions the
    absorbed part is exactly row s of ``F^n(bot)`` and the pending mass equals
    ``iterdiff(n)`` at s. It stops at the first n with pending mass within
    ``gap_tol``, when the body would leave a time window, or at ``max_iter``.
    Whatever is still pending is kept as the row's tail.
    """
    body, test = spec.body, spec.test
    clocks = [spec.space.index(n) for n in spec.space.clock_vars()]
    tails: dict = {}
    traces: dict = {}

    row_lcm: dict = {}

    def body_row(u):
        r = body.row(u)
        if u not in row_lcm:
            if body.has_tails and body.tail(u) is not None:
                raise NestedLoopError("an inner loop did not terminate exactly; "
                                      "certify it and substitute its fixed point first")
            if not body.dist and not is_dist_row(r):
                raise NotADistribution(u, sum(r.values(), Fraction(0)))
            row_lcm[u] = math.lcm(*(w.denominator for w in r.values()))
        return r

    def row(s):
        # pending mass is kept as integer numerators over one denominator D
        pending = {s: 1}
        D = 1
        result: dict = {}
        masses = []
        growth = 0
        n = 0
        stopped = "converged"
        while True:
            cont = {}
            for u, w in pending.items():
                if test(u):
                    cont[u] = w
                else:
                    result[u] = result.get(u, 0) + Fraction(w, D)
            n += 1
            m = Fraction(sum(cont.values()), D)
            masses.append(m)
            if m <= config.gap_tol:
                break
            if n >= config.max_iter:
                stopped = "max_iter"
                break
            nxt: dict = {}
            try:
                rows = [(u, w, body_row(u)) for u, w in cont.items()]
            except OutOfDomain as exc:
                if not exc.clock:
                    raise
                stopped = "window"
                break
            L = math.lcm(*(row_lcm[u] for u, _, _ in rows))
            for u, w, r in rows:
                for v, p in r.items():
                    nxt[v] = nxt.get(v, 0) + w * p.numerator * (L // p.denominator)
                    for ci in clocks:
                        growth = max(growth, v[ci] - u[ci])
            D *= L
            g = math.gcd(D, *nxt.values())
            if g > 1:
                D //= g
                nxt = {v: w // g for v, w in nxt.items()}
            pending = nxt
        traces[s] = RowTrace(n, masses, stopped)
        if m:
            ratio = None
            ratios = [masses[i + 1] / masses[i] for i in range(len(masses) - 1) if masses[i]]
            if ratios and max(ratios) < 1:
                ratio = max(ratios)
            tails[s] = Tail({u: Fraction(w, D) for u, w in cont.items()}, ratio, growth)
        else:
            tails[s] = None
        return {u: w for u, w in result.items() if w}

    k = K.lazy(spec.space, row, tail_fn=lambda s: tails.get(s))
    k.traces = traces
    return k
