import pytest

from infinitype.derivation import SAbs, SApp, SAx, SContext, SDerivation, SJudgment
from infinitype.terms import parse_term
from infinitype.types import Seq, parse_type

P_EX_TERM = r"\x. y x"
FIG7_TERM = r"(((\x1. \x2. ((\x3. \x. x) w)) v1) v2) v"


def ty(text):
    return parse_type(text)


def p_ex_node(y_track=3, y_type="(5.o, 6.o') -> o''", args=((5, 3, "o"), (6, 9, "o'"))):
    """The worked derivation of λx.y x: y on axiom track 3, x used on argument tracks 5 and 6."""
    return SAbs(SApp(SAx(y_track, ty(y_type)), tuple((k, SAx(tr, ty(a))) for k, tr, a in args)))


def build_p_ex():
    return SDerivation(parse_term(P_EX_TERM), p_ex_node())


def _declared(root_type):
    return SJudgment(SContext.of({"y": Seq.of({3: ty("(5.o, 6.o') -> o''")})}), ty(root_type))


def p_ex_mutations():
    """Twenty broken variants of P_ex: (name, node, violation kind, violation position)."""
    ok_args = ((5, 3, "o"), (6, 9, "o'"))
    good = p_ex_node()
    m = [
        ("argument track clash", p_ex_node(args=((5, 3, "o"), (5, 9, "o'"))), "track", (0,)),
        ("argument track 1", p_ex_node(args=((1, 3, "o"), (6, 9, "o'"))), "track", (0,)),
        ("argument track 0", p_ex_node(args=((0, 3, "o"), (6, 9, "o'"))), "track", (0,)),
        ("x axiom tracks collide", p_ex_node(args=((5, 9, "o"), (6, 9, "o'"))), "conflict", (0,)),
        ("x axiom track 1", p_ex_node(args=((5, 1, "o"), (6, 9, "o'"))), "track", (0, 5)),
        ("x axiom track 0", p_ex_node(args=((5, 3, "o"), (6, 0, "o'"))), "track", (0, 6)),
        ("y axiom track 1", p_ex_node(y_track=1), "track", (0, 1)),
        ("missing argument 6", p_ex_node(args=((5, 3, "o"),)), "relevance", (0,)),
        ("missing argument 5", p_ex_node(args=((6, 9, "o'"),)), "relevance", (0,)),
        ("extra argument 7", p_ex_node(args=ok_args + ((7, 4, "o"),)), "relevance", (0,)),
        ("no arguments", p_ex_node(args=()), "relevance", (0,)),
        ("argument 5 retyped", p_ex_node(args=((5, 3, "o'"), (6, 9, "o'"))), "mismatch", (0, 5)),
        ("argument 6 retyped", p_ex_node(args=((5, 3, "o"), (6, 9, "o"))), "mismatch", (0, 6)),
        ("y source on 7", p_ex_node(y_type="(5.o, 7.o') -> o''"), "relevance", (0,)),
        ("y typed by an atom", p_ex_node(y_type="o''"), "arrow", (0, 1)),
        ("axiom over the body", SAbs(SAx(3, ty("o"))), "rule", (0,)),
        ("application at the root", SApp(SAx(3, ty("o")), ()), "rule", ()),
        ("abstraction over the variable", SAbs(SApp(SAbs(SAx(3, ty("o"))), ((5, SAx(3, ty("o"))),))), "rule", (0, 1)),
        ("declared type drops track 9", SAbs(good.child, _declared("(3.o) -> o''")), "declared", ()),
        ("declared target changed", SAbs(good.child, _declared("(3.o, 9.o') -> o")), "declared", ()),
    ]
    assert len(m) == 20
    return m


@pytest.fixture
def p_ex():
    return build_p_ex()


@pytest.fixture
def fig7():
    return parse_term(FIG7_TERM)


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[n])
