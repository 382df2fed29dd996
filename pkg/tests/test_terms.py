import random

import pytest

from infinitype.terms import (
    Abs,
    App,
    BOT,
    Residuation,
    TermSyntaxError,
    Var,
    at,
    beta_reduce_at,
    collapse_word,
    distinct_binders,
    enumerate_terms,
    free_vars,
    head_reduction,
    is_redex,
    order_bounded,
    parse_position,
    parse_term,
    pretty,
    random_term,
    redex_tower_at,
    redexes,
    size,
    subterm,
    substitute,
    support,
)
from infinitype.coding import CodingTracks, default_coding
from infinitype.derivation import alpha_equal

from oracles import cdeg_walk, tower_height_oracle

OMEGA = r"(\x. x x) (\x. x x)"
CU_LAMBDA = r"(\x. \y. x x) (\x. \y. x x)"


def test_parse_delta():
    assert parse_term(r"\x. x x") == Abs("x", App(Var("x"), Var("x")))


def test_parse_omega_is_delta_delta():
    d = parse_term(r"\x. x x")
    assert parse_term(r"(\x.x x)(\x.x x)") == App(d, d)


def test_pretty_roundtrip_identity():
    assert pretty(parse_term(r"\x. x")) == r"\x. x"


@pytest.mark.parametrize("text", [r"\x y. x", r"(\x. x) y z", r"x (y z)", r"\f. (\x. f (x x)) (\x. f (x x))"])
def test_pretty_reparses(text):
    t = parse_term(text)
    assert parse_term(pretty(t)) == t


@pytest.mark.parametrize("text,offset", [("(\\x. x", 6), ("\\. x", 1), ("x )", 2)])
def test_syntax_error_offset(text, offset):
    with pytest.raises(TermSyntaxError) as e:
        parse_term(text)
    assert e.value.offset == offset


def test_support_examples():
    assert support(parse_term(r"\x. y x")) == {(), (0,), (0, 1), (0, 2)}
    assert support(parse_term("x")) == {()}
    om = parse_term(OMEGA)
    delta = {(), (0,), (0, 1), (0, 2)}
    assert support(om) == {()} | {(1,) + w for w in delta} | {(2,) + w for w in delta}
    assert len(support(om)) == 9


def test_subterm_and_constructor():
    t = parse_term(r"\x. y x")
    assert subterm(t, (0,)) == parse_term("y x")
    assert at(t, (0, 1))[1] == "y"


def test_collapse_word_example():
    assert collapse_word((0, 5, 1, 3, 2)) == (0, 2, 1, 2, 2)


def test_position_parsing():
    assert parse_position("0·5·1") == (0, 5, 1)
    assert parse_position("ε") == ()


def test_beta_omega_and_culambda():
    om = parse_term(OMEGA)
    assert beta_reduce_at(om, ()) == om
    cu = parse_term(CU_LAMBDA)
    assert alpha_equal(beta_reduce_at(cu, ()), Abs("y", cu))


def test_substitute_avoids_capture():
    t = parse_term(r"\y. x y")
    r = substitute(t, "x", Var("y"))
    assert isinstance(r, Abs) and r.var != "y"
    assert free_vars(r) == {"y"}


def test_distinct_binders():
    t = distinct_binders(parse_term(r"\x. \x. x (\y. y) y"))
    names = []

    def binders(u):
        if isinstance(u, Abs):
            names.append(u.var)
            binders(u.body)
        elif isinstance(u, App):
            binders(u.fun)
            binders(u.arg)

    binders(t)
    assert len(set(names)) == len(names) and "y" not in names
    assert alpha_equal(t, parse_term(r"\x. \x. x (\y. y) y"))


def test_order_bounded_examples():
    # two leading abstractions over a head variable: the order is the number of λs
    b = order_bounded(parse_term(r"\x1 x2. x u1 u2 u3"), 10)
    assert (b.lower_bound, b.exact) == (2, True)
    b = order_bounded(parse_term(r"\x1 x2 x3. x u1 u2"), 10)
    assert (b.lower_bound, b.exact) == (3, True)
    b = order_bounded(parse_term(OMEGA), 10)
    assert (b.lower_bound, b.exact) == (0, False)
    for n in (3, 6):
        b = order_bounded(parse_term(CU_LAMBDA), n)
        assert b.lower_bound >= n - 1 and not b.exact


def test_head_reduction_stops_on_hnf():
    steps = head_reduction(parse_term(r"(\x y. y x) z (\a b. b)"), 10)
    assert steps[-1][1] is None
    assert pretty(steps[-1][0]) == r"\b. b"


def test_fig7_cdeg_trace(fig7):
    rep = redex_tower_at(fig7, ())
    assert [d for _, d in rep.trace[1:]] == [1, 2, 3, 2, 1, 2, 1, 0]
    assert rep.height == 7
    assert rep.abstraction == (1, 1, 1, 0, 0, 1, 0)


def test_plain_redex_has_height_one():
    assert redex_tower_at(parse_term(r"(\x. x) y"), ()).height == 1


def test_three_lambda_tower():
    t = parse_term(r"(((\x3. \x2. \x1. m) u1) u2) u3")
    assert redex_tower_at(t, ()).height == tower_height_oracle(t, ()) == 5


def test_cdeg_oracle_exhaustive_small():
    """Every application of every term up to size 8 over two names."""
    checked = 0
    for t in enumerate_terms(8, ("x", "y")):
        for b in support(t):
            if not isinstance(subterm(t, b), App):
                continue
            rep = redex_tower_at(t, b)
            expected = tower_height_oracle(t, b)
            assert (rep.height if rep is not None else None) == expected, (pretty(t), b)
            if rep is not None:
                walk = cdeg_walk(t, b)
                assert list(rep.trace) == walk[: len(rep.trace)]
            checked += 1
    assert checked > 1000


def test_residuation_root_redex():
    t = parse_term(r"(\x. x) y")
    res = Residuation(t, (), CodingTracks(default_coding()))
    assert res.reduct == Var("y")
    k = default_coding().encode((1, 0))
    assert res.res((k,)) == ()
    # the redex, its abstraction and the consumed variable have no residual
    assert res.res(()) is None and res.res((1,)) is None and res.res((1, 0)) is None


def test_residuation_nihilates_unused_argument():
    t = parse_term(r"(\x. y) z")
    res = Residuation(t, (), CodingTracks(default_coding()))
    assert res.qres(((5,), ())) is BOT
    assert res.qres(((1, 0), ())) == ((), ())


def test_random_term_sizes():
    rng = random.Random(3)
    for n in range(1, 20):
        assert size(random_term(rng, n)) == n
        if n >= 2:
            assert not free_vars(random_term(rng, n, closed=True))


def test_redexes_leftmost_outermost():
    t = parse_term(r"(\x. (\y. y) x) ((\z. z) w)")
    rs = redexes(t)
    assert rs[0] == () and all(is_redex(t, b) for b in rs)
