import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from proburel import kernel as K
from proburel.constructs import sem_assign, sem_pchoice, sem_skip
from proburel.expr import Bin, Const, Member, eq, fvar, iv, lift, var
from proburel.state import Domain, make_space

from strategies import dist_kernels, prfun_kernels, rvfun_kernels, spaces, subdist_kernels

COIN = make_space([("c", Domain.enum(["hd", "tl"]))])
HD, TL = ("hd",), ("tl",)


def c_is(label, primed=True):
    return Bin("=", fvar("c") if primed else var("c"), Const(label))


def test_tabulate_examples():
    k = K.tabulate(COIN, iv(c_is("hd")))
    assert k.row(HD) == {HD: 1} and k.row(TL) == {HD: 1}
    ident = K.tabulate(COIN, iv(eq(fvar("c"), var("c"))))
    assert K.kernels_equal(ident, K.identity(COIN))
    half = K.tabulate(COIN, Fraction(1, 2) * iv(c_is("hd")) + Fraction(1, 2) * iv(c_is("tl")))
    assert half.row(TL) == {HD: Fraction(1, 2), TL: Fraction(1, 2)}


def test_tabulate_negative_weight():
    with pytest.raises(K.NegativeWeight):
        K.tabulate(COIN, lift(0) - iv(c_is("hd"))).row(HD)


def test_classify_examples():
    c = K.classify(sem_skip(COIN))
    assert c.is_final_dist and c.is_final_subdist and c.final_reachable
    z = K.classify(K.zero(COIN))
    assert not z.is_final_subdist and not z.final_reachable and z.is_prob
    sp = make_space([("r", Domain.enum(["C", "D"])), ("a", Domain.enum(["S", "F"]))])
    dwta = {s: {("C", "S"): Fraction(3, 10), ("C", "F"): Fraction(3, 10),
                ("D", "S"): Fraction(6, 50), ("D", "F"): Fraction(14, 50)} for s in sp.states()}
    c = K.classify(K.from_rows(sp, dwta))
    assert c.is_final_dist and set(c.row_sums.values()) == {1}
    over = K.classify(K.ones(COIN))
    assert over.is_prob and not over.is_final_subdist


def test_clamp_examples():
    k = K.from_rows(COIN, {HD: {HD: Fraction(1, 3)}, TL: {TL: Fraction(3, 2), HD: Fraction(-1)}}, kind=K.RVFUN)
    c = K.clamp_kernel(k)
    assert c.row(HD) == {HD: Fraction(1, 3)}
    assert c.row(TL) == {TL: 1}


def test_normalize_final_examples():
    k = K.from_rows(COIN, {HD: {HD: 2, TL: 2}, TL: {}}, kind=K.RVFUN)
    n = K.normalize_final(k)
    assert n.row(HD) == {HD: Fraction(1, 2), TL: Fraction(1, 2)}
    assert n.row(TL) == {}
    # prior times sensor likelihood for a robot that starts anywhere in three cells
    sp = make_space([("bel", Domain.int_range(0, 2))])
    prior = K.constant(sp, Fraction(1, 3))
    like = K.tabulate(sp, 3 * iv(Member(fvar("bel"), (lift(0), lift(2)))) + 1)
    post = K.normalize_final(K.pointwise(prior, like, "*"))
    assert post.row((1,)) == {(0,): Fraction(4, 9), (1,): Fraction(1, 9), (2,): Fraction(4, 9)}


def _count_pairs(n):
    # independent count of pairs (x, x') with x' = x + 1 or x' = x + 2 over 1..n
    return sum(1 for x in range(1, n + 1) for y in range(1, n + 1) if y in (x + 1, x + 2))


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_normalize_global_example(n):
    sp = make_space([("x", Domain.int_range(1, n))])
    e = iv(Bin("||", eq(fvar("x"), var("x") + 1), eq(fvar("x"), var("x") + 2)))
    g = K.normalize_global(K.tabulate(sp, e))
    assert _count_pairs(n) == 2 * n - 3
    ws = {w for _, r in g.items() for w in r.values()}
    assert ws == {Fraction(1, 2 * n - 3)}


def test_normalize_global_other_examples():
    u = K.normalize_global(K.ones(COIN))
    assert all(w == Fraction(1, 4) for _, r in u.items() for w in r.values())
    with pytest.raises(K.ZeroTotal):
        K.normalize_global(K.zero(COIN))


def test_normalize_alpha_examples():
    sp = make_space([("x", Domain.int_range(0, 2)), ("y", Domain.bool())])
    choice = iv(Bin("||", eq(fvar("x"), 0), eq(fvar("x"), 2))) * iv(eq(fvar("y"), var("y")))
    u = K.normalize_alpha("x", K.tabulate(sp, choice))
    assert u.row((1, True)) == {(0, True): Fraction(1, 2), (2, True): Fraction(1, 2)}
    one = make_space([("x", Domain.int_range(1, 2))])
    k = K.from_rows(one, {(1,): {(1,): 3, (2,): 1}, (2,): {(2,): 5}}, kind=K.RVFUN)
    assert K.kernels_equal(K.normalize_alpha("x", k), K.normalize_final(k))
    assert K.normalize_alpha("x", k).row((1,)) == {(1,): Fraction(3, 4), (2,): Fraction(1, 4)}


def test_kernels_equal_examples():
    k = K.tabulate(COIN, iv(c_is("hd")))
    assert K.kernels_equal(k, k)
    assert K.kernels_equal(sem_skip(COIN), sem_assign(COIN, "c", var("c")))
    flip = sem_pchoice(Fraction(1, 2), sem_assign(COIN, "c", Const("hd")), sem_assign(COIN, "c", Const("tl")))
    alt = K.tabulate(COIN, Fraction(1, 2) * iv(c_is("hd")) + Fraction(1, 2) * iv(c_is("tl")))
    assert K.kernels_equal(flip, alt)
    other = make_space([("c", Domain.bool())])
    with pytest.raises(K.SpaceMismatch):
        K.kernels_equal(K.zero(COIN), K.zero(other))


def test_first_difference_and_leq():
    a = K.from_rows(COIN, {HD: {HD: Fraction(1, 2)}})
    b = K.from_rows(COIN, {HD: {HD: Fraction(2, 3)}})
    assert K.first_difference(a, b) == (HD, HD, Fraction(1, 2), Fraction(2, 3))
    assert K.leq(a, b) and not K.leq(b, a)
    assert K.sup_norm(K.pointwise(b, a, "-")) == Fraction(1, 6)


def test_json_round_trip_and_csv():
    k = K.tabulate(COIN, Fraction(1, 3) * iv(c_is("hd")) + Fraction(2, 3) * iv(c_is("tl")), kind=K.PRFUN)
    data = json.loads(K.dumps(k))
    assert data["rows"][0]["finals"][0] == {"state": {"c": "hd"}, "weight": "1/3"}
    assert K.kernels_equal(K.from_json(data), k)
    lines = K.to_csv(k).splitlines()
    assert lines[0] == "initial,final,weight"
    assert lines[1:] == ["c=hd,c=hd,1/3", "c=hd,c=tl,2/3", "c=tl,c=hd,1/3", "c=tl,c=tl,2/3"]


def test_debug_mode_reports_clamping():
    over = K.from_rows(COIN, {HD: {HD: Fraction(3, 2)}}, kind=K.RVFUN)
    assert K.clamp_row(over.row(HD)) == {HD: 1}
    K.set_debug(True)
    try:
        with pytest.raises(K.ClampFired):
            K.clamp_row(over.row(HD))
        # a choice between distributions never clamps
        flip = sem_pchoice(Fraction(1, 3), K.identity(COIN), sem_assign(COIN, "c", Const("tl")))
        assert K.classify(flip).is_final_dist
    finally:
        K.set_debug(False)


def test_lazy_rows_are_memoised():
    calls = []

    def row(s):
        calls.append(s)
        return {s: Fraction(1)}

    k = K.lazy(COIN, row)
    k.row(HD)
    k.row(HD)
    assert calls == [HD]


# -- properties ---------------------------------------------------------------

@settings(max_examples=50)
@given(st.data())
def test_dist_implies_subdist_and_reachable(data):
    sp = data.draw(spaces())
    c = K.classify(data.draw(dist_kernels(sp)))
    assert c.is_final_dist and c.is_final_subdist and c.final_reachable
    assert all(v == 1 for v in c.row_sums.values())
    c = K.classify(data.draw(subdist_kernels(sp)))
    assert c.is_final_subdist


@settings(max_examples=50)
@given(st.data())
def test_normalize_final_rows_sum_to_one(data):
    sp = data.draw(spaces())
    k = data.draw(rvfun_kernels(sp))
    n = K.normalize_final(k)
    for s in sp.states():
        tot = sum(n.row(s).values(), Fraction(0))
        assert tot == (1 if sum(k.row(s).values(), Fraction(0)) > 0 else 0)


@settings(max_examples=50)
@given(st.data())
def test_normalize_alpha_groups_sum_to_one(data):
    sp = data.draw(spaces())
    x = data.draw(st.sampled_from(sp.names))
    i = sp.index(x)
    n = K.normalize_alpha(x, data.draw(rvfun_kernels(sp)))
    for s in sp.states():
        groups = {}
        for t, w in n.row(s).items():
            key = t[:i] + t[i + 1:]
            groups[key] = groups.get(key, 0) + w
        assert all(v == 1 for v in groups.values())


@settings(max_examples=50)
@given(st.data())
def test_clamp_is_idempotent_and_identity_on_prfun(data):
    sp = data.draw(spaces())
    k = data.draw(rvfun_kernels(sp))
    c = K.clamp_kernel(k)
    assert K.kernels_equal(K.clamp_kernel(c), c)
    p = data.draw(prfun_kernels(sp))
    assert K.kernels_equal(K.clamp_kernel(p), p)


@settings(max_examples=30)
@given(st.data())
def test_json_round_trip(data):
    sp = data.draw(spaces())
    k = data.draw(rvfun_kernels(sp))
    assert K.kernels_equal(K.from_json(json.loads(K.dumps(k))), k)
