import math

import pytest

from infinitype.types import (
    OMEGA,
    Atom,
    Multiset,
    RArrow,
    Seq,
    TrackConflict,
    TVar,
    TypeSyntaxError,
    collapse_s_to_r,
    collapse_seq,
    decorate_candidate,
    format_type,
    is_support_candidate,
    label_at,
    mu,
    mult_add,
    multiset_equal,
    parse_type,
    parse_type_document,
    seq_union,
    stype_support,
    type_equal,
    type_order,
    unfold,
)

from oracles import all_type_supports, is_type_support


def test_support_of_s_ex():
    s_ex = parse_type("(2.o, 7.o') -> o''")
    assert stype_support(s_ex, 10) == {(), (1,), (2,), (7,)}


def test_support_of_a_looping_type_truncated():
    t = parse_type("mu X. (2.X) -> o")
    assert stype_support(t, 2) == {(), (1,), (2,), (2, 1), (2, 2)}


def test_candidates_c1_c2():
    c1 = {(), (1,), (4,), (4, 1), (4, 3), (4, 8)}
    c2 = {(), (1,), (4,), (4, 3)}
    assert is_support_candidate(c1) and is_type_support(c1)
    assert not is_support_candidate(c2) and not is_type_support(c2)


def test_decorate_c1():
    c1 = {(), (1,), (4,), (4, 1), (4, 3), (4, 8)}
    assert format_type(decorate_candidate(c1)) == "(4.((3.o, 8.o) -> o)) -> o"


def test_track_conflict():
    a = Seq.of({2: Atom("o"), 3: Atom("o'")})
    b = Seq.of({3: Atom("o'"), 8: Atom("o")})
    with pytest.raises(TrackConflict) as e:
        seq_union(a, b)
    assert set(e.value.tracks) == {3}


def test_disjoint_union():
    u = seq_union(Seq.of({2: Atom("o")}), Seq.of({5: Atom("o'")}))
    assert u.as_dict() == {2: Atom("o"), 5: Atom("o'")}


@pytest.mark.parametrize(
    "text,order",
    [("[o1] -> o1", 1), ("o1", 0), ("[o1] -> [o2] -> o1", 2), ("[[o1] -> o2] -> o1", 1)],
)
def test_orders(text, order):
    assert type_order(parse_type(text)) == order


def test_infinite_orders():
    r = mu("R", RArrow(Multiset.of(TVar("R")), TVar("R")))
    assert type_order(r) == OMEGA
    assert type_order(parse_type("mu X. [] -> X")) == OMEGA


def test_collapse_sequence_to_multiset():
    s = parse_type("(2.o, 5.o', 8.o) -> o")
    r = collapse_s_to_r(s)
    assert multiset_equal(r.source, Multiset(((Atom("o"), 2), (Atom("o'"), 1))))


def test_collapse_family_gives_omega():
    s = parse_type("(4+3n.o) -> o")
    src = collapse_seq(unfold(s).source)
    assert multiset_equal(src, Multiset.omega(Atom("o")))


def test_rho_equals_its_unfolding():
    rho = parse_type("mu P. [P^w] -> P")
    assert type_equal(rho, unfold(rho))
    assert type_equal(rho, parse_type("[(mu P. [P^w] -> P)^w] -> mu P. [P^w] -> P"))


def test_two_presentations_of_phi():
    a = parse_type_document("phi = [phi^w] -> o")
    b = parse_type_document("p = [q^w] -> o\nq = [p^w] -> o")
    assert type_equal(a, b)
    assert not type_equal(a, parse_type_document("phi = [phi^w] -> o'"))


def test_omega_absorption():
    assert mult_add(3, OMEGA) == mult_add(OMEGA, 3) == mult_add(OMEGA, OMEGA) == math.inf


def test_label_at():
    t = parse_type("(5.o, 6.o') -> o''")
    assert label_at(t, ()) == "→"
    assert label_at(t, (6,)) == "o'"
    assert label_at(t, (1,)) == "o''"
    assert label_at(t, (7,)) is None


def test_type_document_json():
    doc = '{"atoms": ["o"], "equations": {"X": "[X^w] -> o"}, "root": "X"}'
    assert type_equal(parse_type_document(doc), parse_type("mu Y. [Y^w] -> o"))


def test_type_syntax_error():
    with pytest.raises(TypeSyntaxError):
        parse_type("[o -> o")


def test_not_contractive():
    with pytest.raises(ValueError):
        mu("X", TVar("X"))


def test_generative_supports_agree_with_decomposition():
    supports = all_type_supports((1, 2, 3), 2)
    assert all(is_type_support(c) for c in supports)
    assert all(is_support_candidate(c) for c in supports)
