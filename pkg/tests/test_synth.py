import random

import pytest

from infinitype.derivation import check_rderiv, check_sderiv
from infinitype.synth import (
    CU_F_TERM,
    CU_LAMBDA_TERM,
    OMEGA_TERM,
    Y_TERM,
    RHO,
    R_TYPE,
    build_fixpoint_typings,
    build_phi,
    order_capturing_type,
    type_head_normal_form,
    universal_rw_typing,
    universal_simple_typing,
)
from infinitype.terms import order_bounded, parse_term, random_term
from infinitype.types import OMEGA, Atom, format_type, parse_type, type_equal, type_order


def test_omega_typing():
    r = build_fixpoint_typings("omega")
    assert format_type(r.type) == "o" and r.order == 0
    assert not r.context.entries


def test_y_typing():
    r = build_fixpoint_typings("y")
    assert type_equal(r.type, parse_type("[([o] -> o)^w] -> o"))
    assert r.order == 1


def test_cu_f_typing():
    r = build_fixpoint_typings("cuf")
    assert format_type(r.type) == "o"
    assert str(r.context) == "f:[([o] -> o)^w]"


def test_cu_lambda_typing_has_infinite_order():
    r = build_fixpoint_typings("culam")
    assert type_equal(r.type, parse_type("mu X. [] -> X"))
    assert r.order == OMEGA


def test_fixpoint_typing_with_another_atom():
    r = build_fixpoint_typings("omega", Atom("b"))
    assert format_type(r.type) == "b" and r.check().valid


def test_phi_unfolds_to_its_own_source():
    phi = build_phi(Atom("o"))
    assert type_equal(phi, parse_type("mu X. [X^w] -> o"))


def test_unknown_fixpoint_name():
    with pytest.raises(ValueError):
        build_fixpoint_typings("theta")


def test_universal_types():
    assert type_equal(R_TYPE, parse_type("mu R. [R] -> R"))
    assert type_equal(RHO, parse_type("mu P. [P^w] -> P"))


def test_universal_simple_typing_of_an_open_term():
    r = universal_simple_typing(parse_term(r"\x. y x"))
    assert r.check().valid
    assert str(r.context) == "y:[(mu R. [R] -> R)]"
    assert type_equal(r.type, R_TYPE)


def test_universal_typings_on_random_closed_terms():
    rng = random.Random(4)
    for _ in range(40):
        t = random_term(rng, rng.randint(2, 20), closed=True)
        rw = universal_rw_typing(t)
        assert rw.check().valid and type_equal(rw.type, RHO)
        s = universal_simple_typing(t)
        assert s.check().valid and type_equal(s.type, R_TYPE)


def test_rw_typing_with_shadowed_binders():
    t = parse_term(r"\x. \x. x x")
    assert universal_rw_typing(t).check().valid


def test_rw_typing_is_rejected_by_strict_checker():
    # the weakening axiom is only admitted in the weak systems
    r = universal_rw_typing(parse_term(r"\x. \y. y"))
    r.derivation.system = "R"
    assert not check_rderiv(r.term, r.derivation).valid


def test_head_normal_form_typing():
    p = type_head_normal_form(parse_term(r"\x y. x z"))
    assert check_sderiv(p.term, p.root).valid


@pytest.mark.parametrize(
    "text,order",
    [(r"\x. x", 1), (r"\x y. x", 2), (r"\x. (\x. x x) (\x. x x)", 1), (r"(\x. x) (\y. y)", 1), ("x", 0)],
)
def test_order_capturing_types_are_exact(text, order):
    r = order_capturing_type(parse_term(text), 20)
    assert r.exact and r.order == order
    assert type_order(r.type) == order
    assert r.check().valid


def test_order_capturing_type_of_omega_and_cu_f():
    for t in (OMEGA_TERM, CU_F_TERM):
        r = order_capturing_type(t, 10)
        assert r.exact and r.order == 0 and r.check().valid


@pytest.mark.parametrize("fuel", [3, 6])
def test_order_capturing_type_of_cu_lambda_is_inexact(fuel):
    r = order_capturing_type(CU_LAMBDA_TERM, fuel)
    assert not r.exact
    assert r.order >= fuel
    assert order_bounded(CU_LAMBDA_TERM, fuel).lower_bound >= fuel - 1
    assert r.check().valid


def test_order_capturing_type_of_y():
    r = order_capturing_type(Y_TERM, 5)
    assert r.exact and r.order == 1 and r.check().valid


@pytest.mark.parametrize(
    "text", [r"\x. (\y. y y) (\y. y y)", r"\x. (\a. a a) (\b. b b)", r"\u. (\a. \b. a a) (\c. \d. c c)"]
)
def test_builders_follow_the_binder_names_of_the_term(text):
    r = order_capturing_type(parse_term(text), 6)
    assert r.check().valid
