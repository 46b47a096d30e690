"""Concrete syntax: parse/print round trips and error positions."""

import random

import pytest
from hypothesis import given, strategies as st

from conftest import rand_bool, rand_mixed_atom
from oagqe.sexpr import ParseError, parse_formula, print_formula, print_sort
from oagqe.syntax import (
    AuxVar, CongDot, EqDot, Exists, Forall, LinTerm, MainRel, Not, PlainRel,
    Sc, Se, SortMin, SORT_G, SuccPlus, sort_ac, sort_ae, sort_aep,
)


def test_fixed_forms_parse():
    f = parse_formula("(E x G (plainlt x y))")
    assert f == Exists("x", SORT_G,
                       PlainRel("lt", LinTerm.var("x"), LinTerm.var("y")))
    f = parse_formula("(plaincong 2 (+ x (* -2 y)) 0)")
    assert f == PlainRel("cong", LinTerm.make({"x": 1, "y": -2}),
                         LinTerm.zero(), m=2)
    f = parse_formula("(lt (cmin 2) x y 1)")
    assert f == MainRel("lt", LinTerm.var("x"), LinTerm.var("y"), 1,
                        SortMin(sort_ac(2)))
    f = parse_formula("(cong 3 (sc 2 1 x) x 0 2)")
    assert f == MainRel("cong", LinTerm.var("x"), LinTerm.zero(), 2,
                        Sc(2, 1, LinTerm.var("x")), m=3)
    f = parse_formula("(A b (Ae 3) (le (se 3 x) b))")
    assert f == Forall("b", sort_ae(3),
                       AuxLe := type(f.body)(Se(3, LinTerm.var("x")),
                                             AuxVar("b", sort_ae(3))))
    f = parse_formula("(eqdot -1 (- y x))")
    assert f == EqDot(-1, LinTerm.make({"x": -1, "y": 1}))


def test_sugar_and_negated_heads():
    assert parse_formula("(geq (emin 2) x y 0)") == Not(
        MainRel("lt", LinTerm.var("x"), LinTerm.var("y"), 0,
                SortMin(sort_ae(2))))
    assert parse_formula("(le c2min (plus (se 2 x)))") == parse_formula(
        "(le (cmin 2) (plus (se 2 x)))")


def test_sort_printing():
    assert print_sort(SORT_G) == "G"
    assert print_sort(sort_ac(2)) == "(Ac 2)"
    assert print_sort(sort_aep(5)) == "(Aep 5)"


@pytest.mark.parametrize("text,line,col", [
    ("(plainlt x", 1, 1),
    ("(plainlt x y) junk", 1, 15),
    ("(plainlt x (* y 2))", 1, 15),
    ("(\n  (plainlt x y))", 1, 1),
    ("(and true\n (plainlt x", 2, 2),
    ("(cong 2 (cmin 2) x y)", 1, 1),
])
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(ParseError) as ei:
        parse_formula(text)
    assert ei.value.line == line
    assert ei.value.col == col


def test_comments_and_whitespace():
    f = parse_formula("; leading note\n(not (plainlt x y) ; tail\n  )")
    assert f == Not(PlainRel("lt", LinTerm.var("x"), LinTerm.var("y")))


def test_aux_main_sort_confusion_rejected():
    with pytest.raises(ParseError):
        parse_formula("(E x G (le x (cmin 2)))")
    with pytest.raises(ParseError):
        parse_formula("(E b (Ac 2) (plainlt b b))")


@given(st.integers(0, 10 ** 6))
def test_roundtrip_random_formulas(seed):
    rng = random.Random(seed)
    body = rand_bool(rng, rng.randint(0, 2), rand_mixed_atom)
    # bind the auxiliary variables so the parser can restore their sorts
    f = Forall("a1", sort_ac(2), Forall("e1", sort_ae(2), body))
    text = print_formula(f)
    assert parse_formula(text) == f
    # printing is canonical: a second trip is textually stable
    assert print_formula(parse_formula(text)) == text


def test_roundtrip_quantified_and_dotted():
    texts = [
        "(E x G (A b (Ac 2) (or (eqdot 2 x) (congb 2 4 (sc 2 1 x) x 0))))",
        "(dpred 2 1 2 (+ (* 2 x) (* -3 y)))",
        "(congdot 4 3 x)",
        "(discr (plus (se 5 (+ x y))))",
        "(dimsucc 2 1 1 (sc 2 2 x))",
        "(asymp (se 2 x) (se 2 y))",
    ]
    for text in texts:
        f = parse_formula(text)
        assert parse_formula(print_formula(f)) == f
