"""Hypothesis strategies for small spaces and kernels."""

from fractions import Fraction

from hypothesis import strategies as st

from proburel import kernel as K
from proburel.constructs import Assign, CChoice, Observe, PChoice, Seq, Skip, Uniform
from proburel.expr import Bin, eq, fvar, iv, lift, var
from proburel.state import Domain, make_space

units = st.fractions(min_value=0, max_value=1, max_denominator=12)
positive = st.fractions(min_value=Fraction(1, 12), max_value=4, max_denominator=12)


@st.composite
def spaces(draw, max_vars=2, max_size=3):
    n = draw(st.integers(1, max_vars))
    decls = []
    for i in range(n):
        if draw(st.booleans()):
            decls.append((f"v{i}", Domain.bool()))
        else:
            decls.append((f"v{i}", Domain.int_range(0, draw(st.integers(1, max_size - 1)))))
    return make_space(decls)


@st.composite
def dist_rows(draw, states):
    support = draw(st.lists(st.sampled_from(states), min_size=1, max_size=3, unique=True))
    raw = [draw(st.integers(1, 6)) for _ in support]
    tot = sum(raw)
    return {t: Fraction(r, tot) for t, r in zip(support, raw)}


@st.composite
def dist_kernels(draw, space):
    states = list(space.states())
    return K.from_rows(space, {s: draw(dist_rows(states)) for s in states})


@st.composite
def subdist_kernels(draw, space):
    states = list(space.states())
    rows = {}
    for s in states:
        scale = draw(st.fractions(min_value=Fraction(1, 12), max_value=1, max_denominator=12))
        rows[s] = {t: w * scale for t, w in draw(dist_rows(states)).items()}
    return K.from_rows(space, rows)


@st.composite
def prfun_kernels(draw, space):
    states = list(space.states())
    rows = {s: draw(st.dictionaries(st.sampled_from(states), units, max_size=len(states))) for s in states}
    return K.from_rows(space, rows)


@st.composite
def rvfun_kernels(draw, space):
    states = list(space.states())
    vals = st.fractions(min_value=0, max_value=4, max_denominator=12)
    rows = {s: draw(st.dictionaries(st.sampled_from(states), vals, max_size=len(states))) for s in states}
    return K.from_rows(space, rows, kind=K.RVFUN)


SMALL = make_space([("x", Domain.int_range(0, 2)), ("b", Domain.bool())])


def _guard():
    return st.sampled_from([eq(var("x"), 0), Bin("<", var("x"), lift(2)), var("b"),
                            Bin("&&", var("b"), eq(var("x"), 1))])


def _leaf():
    return st.one_of(
        st.just(Skip()),
        st.sampled_from([0, 1, 2]).map(lambda v: Assign("x", lift(v))),
        st.just(Assign("x", Bin("mod", var("x") + 1, lift(3)))),
        st.sampled_from([True, False]).map(lambda v: Assign("b", lift(v))),
        st.just(Assign("b", Bin("<", var("x"), lift(1)))),
        st.sampled_from([(0, 1), (0, 1, 2), (2,)]).map(lambda vs: Uniform("x", tuple(lift(v) for v in vs))),
    )


# loop-free programs over SMALL
programs = st.recursive(
    _leaf(),
    lambda kids: st.one_of(
        st.tuples(kids, kids).map(lambda t: Seq(*t)),
        st.tuples(st.fractions(0, 1, max_denominator=6).map(lift), kids, kids).map(lambda t: PChoice(*t)),
        st.tuples(_guard(), kids, kids).map(lambda t: CChoice(*t)),
        st.tuples(kids, st.sampled_from([
            Fraction(1) + iv(eq(fvar("x"), 1)),
            2 * iv(fvar("b")) + Fraction(1, 2),
        ])).map(lambda t: Observe(*t)),
    ),
    max_leaves=6,
)
