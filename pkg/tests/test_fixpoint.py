from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from proburel import kernel as K
from proburel.config import Config
from proburel.constructs import elaborate, loops
from proburel.expr import FALSE, TRUE, eq, iv, fvar, var, conj
from proburel.fixpoint import (LoopSpec, NestedLoopError, NoConvergence, NotADistribution, iterate,
                               iterdiff, iterdiff_kernel, iterdiff_values, kleene_gfp, kleene_lfp,
                               loop_kernel, loop_step, termination_probability, verify_unique_fp)
from proburel.lang.parser import parse_program

from strategies import dist_kernels, spaces

HD, TL = ("hd",), ("tl",)


@pytest.fixture
def coin(load):
    return load("flip.ppl")


def test_coin_iterates_from_bottom(coin):
    spec = coin.loop_spec()
    X = iterate(3, spec, "bot")
    assert X.row(TL) == {HD: Fraction(3, 4)}
    assert X.row(HD) == {HD: 1}
    assert K.kernels_equal(iterate(0, spec, "bot"), K.zero(coin.space))
    for n in range(1, 8):
        assert iterate(n, spec).weight(TL, HD) == 1 - Fraction(1, 2 ** (n - 1))


def test_coin_iterates_from_top(coin):
    spec = coin.loop_spec()
    X = iterate(2, spec, "top")
    assert X.row(TL) == {HD: 1, TL: Fraction(1, 2)}
    assert X.row(HD) == {HD: 1}
    assert iterate(5, spec, "top").weight(TL, TL) == Fraction(1, 16)


def test_coin_iterdiff(coin):
    spec = coin.loop_spec()
    vals = iterdiff_values(10, spec)
    assert vals[0] == {HD: 1, TL: 1}
    for n in range(1, 11):
        assert vals[n] == {HD: 0, TL: Fraction(1, 2 ** (n - 1))}
    assert K.kernels_equal(iterdiff(6, spec), iterdiff_kernel(6, spec))


def test_iterdiff_of_a_false_guard_is_zero(coin):
    spec = LoopSpec(FALSE, coin.loop_spec().body)
    assert K.kernels_equal(iterdiff(1, spec), K.zero(coin.space))
    assert K.kernels_equal(iterdiff(0, spec), K.ones(coin.space))


def test_kleene_lfp_on_the_coin(coin):
    X, rep = kleene_lfp(coin.loop_spec(), Config(gap_tol=Fraction(1, 2 ** 20)))
    assert rep.iterations_used <= 21
    assert rep.monotone_ok and rep.sup_gap <= Fraction(1, 2 ** 20)
    assert rep.geometric_ratio == Fraction(1, 2)
    assert X.weight(TL, HD) >= 1 - Fraction(1, 2 ** 20)
    assert K.leq(X, coin.candidate("flip_fp.expr"))
    Y, _ = kleene_gfp(coin.loop_spec(), Config(gap_tol=Fraction(1, 2 ** 20)))
    assert K.leq(coin.candidate("flip_fp.expr"), Y)


def test_trivial_guards(coin):
    body = coin.loop_spec().body
    X, rep = kleene_lfp(LoopSpec(FALSE, body))
    # the first step moves away from bottom, the second confirms nothing changes
    assert K.kernels_equal(X, K.identity(coin.space)) and rep.iterations_used == 2
    with pytest.raises(NoConvergence) as info:
        kleene_lfp(LoopSpec(TRUE, body), Config(max_iter=30))
    assert info.value.report.iterations_used == 30
    assert K.kernels_equal(info.value.kernel, K.zero(coin.space))


def test_body_must_be_a_distribution(coin):
    with pytest.raises(NotADistribution):
        kleene_lfp(LoopSpec(TRUE, K.zero(coin.space)))
    with pytest.raises(NotADistribution):
        loop_kernel(LoopSpec(TRUE, K.zero(coin.space)), Config()).row(TL)
    cert = verify_unique_fp(LoopSpec(TRUE, K.zero(coin.space)), K.zero(coin.space))
    assert cert.verdict == "FixedPointOnly"
    assert not cert.checks[0]["ok"]


def test_certify_the_coin(coin):
    spec = coin.loop_spec()
    cert = verify_unique_fp(spec, coin.candidate("flip_fp.expr"))
    assert cert.verdict == "UniqueFixedPoint"
    assert cert.ratio == Fraction(1, 2)
    assert [c["name"] for c in cert.checks] == ["body_final_dist", "finite_states", "iterdiff_decay",
                                                 "fixed_point"]
    assert termination_probability(spec, cert.fp) == {HD: 1, TL: 1}
    bad = verify_unique_fp(spec, K.identity(coin.space))
    assert bad.verdict == "Failed" and bad.label.startswith("Failed(")


def test_certify_the_dice(load):
    dice = load("dice.ppl")
    cert = verify_unique_fp(dice.loop_spec(), dice.candidate("dice_H.expr"))
    assert cert.verdict == "UniqueFixedPoint"
    assert cert.ratio == Fraction(5, 6)
    assert cert.fp.row(dice.state(d1=1, d2=2)) == {(k, k): Fraction(1, 6) for k in range(1, 7)}


def test_ratio_check_can_be_turned_off(load):
    dice = load("dice.ppl")
    cert = verify_unique_fp(dice.loop_spec(), dice.candidate("dice_H.expr"), ratio_check=False)
    assert cert.verdict == "FixedPointOnly"


def test_timed_dice_certificate_reports_the_window(load):
    dice = load("dice_t.ppl", tmax=24)
    cert = verify_unique_fp(dice.loop_spec(), dice.candidate("dice_Ht.expr"))
    assert cert.verdict == "FixedPointOnly"
    assert cert.boundary_rows
    assert all(dice.space.valuation(s)["t"] >= 24 - 12 for s in cert.boundary_rows)
    assert cert.checks[-1]["ok"]


def test_loop_kernel_matches_iterates(coin):
    spec = coin.loop_spec()
    k = loop_kernel(spec, Config(gap_tol=Fraction(1, 2 ** 10)))
    assert k.row(TL) == iterate(11, spec).row(TL)
    assert k.tail(TL).mass == Fraction(1, 2 ** 10)
    assert k.tail(HD) is None


NESTED = """
var c : {hd, tl};
var d : {hd, tl};
while (d = tl) {
    c := tl;
    while (c = tl) { c := hd pc{1/2} c := tl };
    d := hd pc{1/2} d := tl
}
"""


def test_nested_loops_need_a_certified_inner_loop():
    src = parse_program(NESTED)
    space = src.space()
    with pytest.raises(NestedLoopError):
        elaborate(src.body, space).row(("tl", "tl"))
    outer, inner = loops(src.body)
    fp = K.tabulate(space, iv(conj(eq(fvar("c"), "hd"), eq(fvar("d"), var("d")))), kind=K.PRFUN)
    assert verify_unique_fp(LoopSpec(inner.guard, elaborate(inner.body, space), space), fp).verdict \
        == "UniqueFixedPoint"
    k = elaborate(src.body, space, fixpoints={inner: fp})
    row = k.row(("tl", "tl"))
    assert row == {("hd", "hd"): 1 - Fraction(1, 2 ** 64)}


# -- properties ---------------------------------------------------------------

@st.composite
def loop_specs(draw):
    sp = draw(spaces())
    body = draw(dist_kernels(sp))
    name = sp.names[0]
    value = draw(st.sampled_from(sp.domain(name).values))
    guard = draw(st.sampled_from([eq(var(name), value), TRUE, FALSE]))
    return LoopSpec(guard, body, sp)


@settings(max_examples=40, deadline=None)
@given(loop_specs(), st.integers(0, 6))
def test_chains_and_sandwich(spec, n):
    lo, lo2 = iterate(n, spec, "bot"), iterate(n + 1, spec, "bot")
    hi, hi2 = iterate(n, spec, "top"), iterate(n + 1, spec, "top")
    assert K.leq(lo, lo2) and K.leq(hi2, hi) and K.leq(lo2, hi2)
    assert K.kernels_equal(K.pointwise(hi, lo, "-"), iterdiff(n, spec))
    assert K.kernels_equal(iterdiff(n, spec), iterdiff_kernel(n, spec))


@settings(max_examples=40, deadline=None)
@given(loop_specs())
def test_step_is_monotone_and_iterdiff_antitone(spec):
    a, b = iterate(2, spec, "bot"), iterate(3, spec, "bot")
    assert K.leq(loop_step(spec, a), loop_step(spec, b))
    vals = iterdiff_values(6, spec)
    for n in range(6):
        assert all(vals[n + 1][s] <= vals[n][s] for s in spec.space.states())
