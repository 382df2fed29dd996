import random

import pytest

from infinitype.bipositions import (
    BOT,
    NEGATIVE,
    POSITIVE,
    ClosureUnusable,
    Engine,
    IllFormed,
    brute_force_equiv,
    closure_bmin,
    synthesize_from_closure,
    thread_graph_dot,
    zero_term_analysis,
)
from infinitype.coding import default_coding, position_code, position_decode
from infinitype.derivation import bisupport, check_sderiv, conclusion
from infinitype.terms import parse_term, pretty, random_term
from infinitype.types import format_type

from oracles import EquivOracle, biposition_universe, thread_partition_mismatches

OMEGA = r"(\x. x x) (\x. x x)"


def test_letter_codes():
    c = default_coding()
    assert [c.encode(a) for a in [(), (0,), (1,), (1, 0)]] == [2, 4, 21, 42]
    for a in [(), (0,), (1, 0, 2), (2, 2, 1, 0, 5)]:
        assert position_decode(position_code(a)) == a


def test_codes_are_injective_on_short_words():
    c = default_coding()
    words = [()] + [(i,) for i in range(6)] + [(i, j) for i in range(6) for j in range(6)]
    assert len({c.encode(w) for w in words}) == len(words)
    assert min(c.encode(w) for w in words) >= 2


def test_bmin_of_a_variable():
    assert closure_bmin(parse_term("x"), bound=10).bipositions == {((), ())}


def test_bmin_of_identity():
    res = closure_bmin(parse_term(r"\x. x"), bound=10)
    assert res.bipositions == {((), ()), ((), (1,)), ((0,), ()), ((), (default_coding().encode((0,)),))}
    assert res.complete and not res.hit_bot


@pytest.mark.parametrize("text", ["x", r"\x. x", r"\y. \x. x x", r"(\x. x) y", r"\f. f (f x)"])
def test_synthesized_derivation_revalidates_in_coded_mode(text):
    t = parse_term(text)
    res = closure_bmin(t, bound=14)
    d = synthesize_from_closure(t, res)
    rep = check_sderiv(t, d.root, default_coding())
    assert rep.valid, rep.violations
    assert set(bisupport(d)) == res.bipositions


def test_identity_synthesizes_the_expected_type():
    t = parse_term(r"\x. x")
    d = synthesize_from_closure(t, closure_bmin(t, bound=10))
    assert format_type(conclusion(t, d.root).type) == "(4.o) -> o"


def test_ascendance_chain_through_two_abstractions():
    # λy.λx.x x: climbing from the root type's third target reaches the head x
    e = Engine(parse_term(r"\y. \x. x x"))
    p = ((), (1, 1, 1))
    path = [p]
    while (p := e.asc(p)) is not None:
        path.append(p)
    assert path == [((), (1, 1, 1)), ((0,), (1, 1)), ((0, 0), (1,)), ((0, 0, 1), (1, 1))]
    assert e.top(path[0]) == path[-1] and e.polarity(path[0]) == POSITIVE


def test_polarities():
    e = Engine(parse_term(r"\x. x"))
    assert e.polarity(BOT) == NEGATIVE
    assert e.polarity(((), ())) == NEGATIVE
    assert e.polarity(((), (1,))) == POSITIVE


def test_polar_inversion_of_unbound_track_is_bot():
    e = Engine(parse_term(r"\x. y"))
    assert e.pi(((), (4,))) is BOT
    assert e.key(((), (4,))) is BOT


def test_ill_formed_biposition():
    e = Engine(parse_term(r"\x. x"))
    with pytest.raises(IllFormed):
        e.check(((1,), ()))
    with pytest.raises(IllFormed):
        e.check(((), (0,)))


def test_omega_closure_stays_off_bot():
    res = closure_bmin(parse_term(OMEGA), bound=12)
    assert not res.hit_bot
    assert not res.complete and res.frontier
    with pytest.raises(ClosureUnusable):
        synthesize_from_closure(parse_term(OMEGA), res)


def test_closure_budget_is_reported():
    res = closure_bmin(parse_term(OMEGA), bound=30, budget=500)
    assert res.budget_exhausted and not res.complete


def test_unused_binder_source_is_the_empty_thread():
    # λx.y concludes () -> o: the closure never asks for a source, and any track there is empty
    res = closure_bmin(parse_term(r"\x. y"), bound=10)
    assert not res.hit_bot
    e = Engine(parse_term(r"\x. y"))
    assert e.key(((), (5,))) is BOT


def test_thread_keys_agree_with_engine_bfs():
    t = parse_term(r"(\x. x x) (\y. y)")
    e = Engine(t)
    for p in [((), ()), ((1,), (1,)), ((1, 0, 1), (1,)), ((2,), (1,))]:
        cls = brute_force_equiv(e, p, 16)
        assert all(e.key(q) == e.key(p) for q in cls)


def test_thread_keys_agree_with_independent_oracle():
    rng = random.Random(10)
    c = default_coding()
    for _ in range(8):
        t = random_term(rng, rng.randint(1, 6))
        universe = biposition_universe(t, c, 6)
        assert not thread_partition_mismatches(Engine(t), EquivOracle(t, c), universe, 20), pretty(t)


def test_independent_oracle_catches_a_key_without_polar_inversion():
    class TopOnly(Engine):
        def key(self, p):
            return self.top(p)

    t = parse_term(r"\x. x x")
    c = default_coding()
    assert thread_partition_mismatches(TopOnly(t), EquivOracle(t, c), biposition_universe(t, c, 6), 20)


def test_zero_term_analysis():
    rep = zero_term_analysis(parse_term(r"(\x. \y. x) z"))
    assert rep.certificate == "negative-root"
    assert pretty(rep.head_segment[-1][0]) == r"\y. z"
    rep = zero_term_analysis(parse_term("x"))
    assert rep.root_polarity == POSITIVE


def test_thread_graph_dot():
    t = parse_term(r"\x. x")
    dot = thread_graph_dot(t, closure_bmin(t, bound=8))
    assert dot.startswith("digraph threads {") and dot.rstrip().endswith("}")
