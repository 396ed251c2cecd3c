"""A second, deliberately naive interpreter used as a test oracle.

It works on valuation dicts and a distribution-monad style fold, and shares
no code with the kernel layer beyond the expression evaluator.
"""

from fractions import Fraction

from proburel.constructs import Assign, CChoice, Observe, PChoice, Seq, Skip, Uniform
from proburel.expr import eval_expr, lift


def _key(space, val):
    return tuple(val[n] for n in space.names)


def _ev(e, space, s, t=None, params=None):
    v = eval_expr(lift(e), space, _key(space, s), _key(space, t if t is not None else s), params)
    if isinstance(v, bool):
        return Fraction(int(v))
    return v


def run(prog, space, s: dict, params=None) -> dict:
    """Distribution over final valuations (as state tuples) from valuation ``s``."""
    if isinstance(prog, Skip):
        return {_key(space, s): Fraction(1)}
    if isinstance(prog, Assign):
        t = dict(s)
        t[prog.var] = eval_expr(lift(prog.expr), space, _key(space, s), _key(space, s), params)
        return {_key(space, t): Fraction(1)}
    if isinstance(prog, Uniform):
        vals = []
        for v in prog.values:
            x = eval_expr(lift(v), space, _key(space, s), _key(space, s), params)
            if x not in vals:
                vals.append(x)
        out = {}
        for x in vals:
            t = dict(s)
            t[prog.var] = x
            out[_key(space, t)] = Fraction(1, len(vals))
        return out
    if isinstance(prog, PChoice):
        w = _ev(prog.weight, space, s, params=params)
        out = {}
        for k, p in run(prog.left, space, s, params).items():
            out[k] = out.get(k, 0) + w * p
        for k, p in run(prog.right, space, s, params).items():
            out[k] = out.get(k, 0) + (1 - w) * p
        return {k: v for k, v in out.items() if v}
    if isinstance(prog, CChoice):
        branch = prog.then if _ev(prog.guard, space, s, params=params) else prog.orelse
        return run(branch, space, s, params)
    if isinstance(prog, Seq):
        out = {}
        for k, p in run(prog.first, space, s, params).items():
            mid = dict(zip(space.names, k))
            for k2, q in run(prog.second, space, mid, params).items():
                out[k2] = out.get(k2, 0) + p * q
        return out
    if isinstance(prog, Observe):
        # the likelihood reads the final state through unprimed names here
        weighted = {}
        for k, p in run(prog.body, space, s, params).items():
            t = dict(zip(space.names, k))
            w = p * _ev(prog.likelihood, space, t, params=params)
            if w:
                weighted[k] = w
        total = sum(weighted.values(), Fraction(0))
        return {k: w / total for k, w in weighted.items()} if total else {}
    raise TypeError(f"oracle does not handle {type(prog).__name__}")


def run_all(prog, space, params=None) -> dict:
    return {s: run(prog, space, dict(zip(space.names, s)), params) for s in space.states()}
