from fractions import Fraction

import pytest
from hypothesis import given, settings

from proburel.constructs import Assign, Observe, PChoice, Seq, elaborate
from proburel.expr import Bin, Const, EvalError, Iverson, Name
from proburel.lang.parser import (ParseError, SourceProgram, UnboundedDomain, VarDecl, parse_expr,
                                  parse_file, parse_program)
from proburel.lang.printer import source_text

from conftest import PROGRAMS
from strategies import SMALL, programs

CORPUS = sorted(p.name for p in PROGRAMS.glob("*.ppl"))
HEAD = "var x : 0..2;\nvar b : bool;\n"


def test_corpus_is_complete():
    assert CORPUS == sorted(["covid1.ppl", "covid2.ppl", "dice.ppl", "dice_t.ppl", "dwta.ppl", "flip.ppl",
                             "flip_t.ppl", "forgetful_monty.ppl", "monty_c.ppl", "monty_nc.ppl",
                             "pflip.ppl", "pflip_t.ppl", "robot.ppl"])


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trips_through_the_printer(name):
    src = parse_file(PROGRAMS / name)
    again = parse_program(source_text(src))
    assert again.body == src.body
    assert again.decls == src.decls and again.params == src.params


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_elaborates(load, name):
    prog = load(name)
    s = next(iter(prog.space.states()))
    assert sum(prog.kernel.row(s).values(), Fraction(0)) <= 1


def test_sequence_binds_looser_than_choice():
    p = parse_program(HEAD + "x := 1; x := 2 pc{1/2} x := 0").body
    assert isinstance(p, Seq) and isinstance(p.second, PChoice)
    p = parse_program(HEAD + "x := 1 pc{1/2} x := 2; x := 0").body
    assert isinstance(p, Seq) and isinstance(p.first, PChoice)
    p = parse_program(HEAD + "x := 1 pc{1/2} x := 2 pc{1/3} skip").body
    assert isinstance(p.right, PChoice)


def test_observation_needs_a_braced_body():
    p = parse_program(HEAD + "{x := 1} || ([x = 1])").body
    assert p == Observe(Assign("x", Const(1)), Iverson(Bin("=", Name("x", True), Const(1))))
    # without braces || is the boolean operator inside the assigned expression
    bare = parse_program(HEAD + "x := 1 || ([x = 1])")
    assert isinstance(bare.body, Assign)
    with pytest.raises(EvalError):
        elaborate(bare.body, bare.space()).row((0, False))


def test_syntax_errors_carry_a_position():
    with pytest.raises(ParseError) as info:
        parse_program(HEAD + "x := 1;\n  x := = 2")
    assert (info.value.line, info.value.col) == (4, 8)
    assert str(info.value).startswith("line 4, column 8: ")
    with pytest.raises(ParseError) as info:
        parse_program(HEAD + "if (x' = 1) { skip } else { skip }")
    assert info.value.line == 3
    with pytest.raises(ParseError):
        parse_program("skip")
    with pytest.raises(ParseError):
        parse_program(HEAD + "y := 1")
    with pytest.raises(ParseError):
        parse_program(HEAD + "b := rand({0, 1})")


def test_unbounded_domains_are_rejected():
    src = parse_program("var t : nat;\nt := t + 1")
    with pytest.raises(UnboundedDomain) as info:
        src.space()
    assert "nat[0..K]" in str(info.value)
    assert len(src.space(tmax=4)) == 5
    for kind in ("int", "real"):
        with pytest.raises(UnboundedDomain):
            parse_program(f"var x : {kind};\nskip")


def test_params():
    src = parse_file(PROGRAMS / "pflip_t.ppl")
    assert src.params == {"p": Fraction(1, 2)}
    assert src.param_values({"p": Fraction(1, 4)}) == {"p": Fraction(1, 4)}
    with pytest.raises(ParseError):
        src.param_values({"q": 1})
    open_src = parse_program("var c : bool;\nparam p;\nc := true pc{p} c := false")
    with pytest.raises(ParseError):
        open_src.param_values()


def test_query_expressions_read_the_final_state():
    src = parse_file(PROGRAMS / "dwta.ppl")
    assert parse_expr("a = S", src, final=True) == Bin("=", Name("a", True), Name("S"))
    with pytest.raises(ParseError):
        parse_expr("a = Q", src, final=True)


DECLS = [VarDecl("x", "range", (), 0, 2), VarDecl("b", "bool")]


@settings(max_examples=150, deadline=None)
@given(programs)
def test_random_programs_round_trip(prog):
    text = source_text(SourceProgram(DECLS, {}, prog))
    again = parse_program(text)
    assert again.body == prog
    assert again.space() == SMALL
