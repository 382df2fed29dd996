"""Chains of threads: normality, interaction rewriting, residuation, collapsing.

A link of a chain is a `Link` from the biposition engine: source and target
thread keys, the relation kind and the witnessing step p1 -> p2.  For a
consumption link (kind "cons") p1 = (a·1, k·c) is the consumed side; for a
"cons_inv" link it is p2.  A chain is normal when no consumed side is
negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .bipositions import (
    BOT,
    NEGATIVE,
    POSITIVE,
    ROOT,
    Chain,
    Engine,
    Link,
    bisize,
    format_biposition,
    make_link,
    thread_edges,
)
from .coding import Coding, CodingTracks, ResidualCoding, default_coding
from .terms import (
    Biposition,
    NotARedex,
    Position,
    Residuation,
    Term,
    collapse_word,
    format_position,
    is_redex,
    redex_tower_at,
)


class MalformedChain(ValueError):
    pass


def consumed_side(link: Link) -> Optional[Biposition]:
    if link.kind == "cons":
        return link.p1
    if link.kind == "cons_inv":
        return link.p2
    return None


def consumption_polarity(engine: Engine, link: Link) -> Optional[str]:
    p = consumed_side(link)
    return None if p is None else engine.polarity(p)


def check_chain(engine: Engine, ch: Chain) -> None:
    """Raise MalformedChain unless every link is a genuine step between adjacent threads."""
    for i, l in enumerate(ch.links):
        if (l.kind, l.p2) not in engine.forward(l.p1):
            raise MalformedChain(f"link {i}: {format_biposition(l.p1)} -{l.kind}-> {format_biposition(l.p2)} is not a step")
        if engine.key(l.p1) != l.src or engine.key(l.p2) != l.dst:
            raise MalformedChain(f"link {i}: witnesses do not lie in the announced threads")
        if i and ch.links[i - 1].dst != l.src:
            raise MalformedChain(f"link {i}: does not start where link {i - 1} ends")


def is_normal(engine: Engine, ch: Chain) -> bool:
    check_chain(engine, ch)
    return all(consumption_polarity(engine, l) != NEGATIVE for l in ch.links)


def is_nihilating(engine: Engine, ch: Chain) -> bool:
    return bool(ch.links) and ch.links[0].src == engine.key(ROOT) and ch.links[-1].dst is BOT


# ---------------------------------------------------------------------------
# Interaction rewriting


@dataclass(frozen=True)
class Impossibility:
    """A rewrite that cannot be completed; `lemma` names the blocking argument."""

    lemma: str
    detail: str
    at: Optional[Link] = None

    def __str__(self) -> str:
        return f"impossible ({self.lemma}): {self.detail}"


class _Blocked(Exception):
    def __init__(self, imp: Impossibility):
        self.imp = imp


def _is_pos_cons(engine: Engine, l: Link) -> bool:
    return l.kind == "cons" and engine.polarity(l.p1) == POSITIVE


def _exchange(engine: Engine, l: Link, head: Link) -> tuple[Link, Link]:
    """θ1 -(t1|t2)-> θ2 ⊕cons θ3 becomes θ1 ⊕cons θ4 -(t1|t2)-> θ3."""
    a1, c = head.p1  # type: ignore[misc]
    j = l.p1[1][-1]  # type: ignore[index]
    if l.kind == "t1":
        p3 = (a1, c + (j,))
    else:
        if not c or c[-1] != 1:
            raise _Blocked(Impossibility("exchange", "consumed witness has no target letter to swap", l))
        p3 = (a1, c[:-1] + (j,))
    if engine.key(p3) != l.src:
        raise _Blocked(Impossibility("exchange", f"{format_biposition(p3)} is not in the source thread", l))
    steps = dict(engine.forward(p3))
    p4 = steps.get("cons")
    if p4 is None:
        raise _Blocked(Impossibility("exchange", "swapped witness is not consumed", l))
    new_cons = make_link(engine, "cons", p3, p4)
    p5 = head.p2
    if (l.kind, p5) not in engine.forward(p4):
        raise _Blocked(Impossibility("exchange", "swapped step does not land on the consumed target", l))
    return new_cons, make_link(engine, l.kind, p4, p5)


def _insert(engine: Engine, l: Link, suffix: list[Link]) -> list[Link]:
    """Prepend l to a suffix whose leading links are positive consumptions."""
    if not suffix:
        if l.dst is BOT:
            if l.kind in ("t1", "t2"):
                return []  # the source is the empty thread as well; drop the step
            if l.kind in ("abs", "down"):
                raise _Blocked(Impossibility("emptiness", f"a {l.kind} step cannot enter the empty thread", l))
        return [l]
    head = suffix[0]
    if not _is_pos_cons(engine, head):
        return [l] + suffix
    if l.kind in ("t1", "t2"):
        new_cons, moved = _exchange(engine, l, head)
        return [new_cons] + _insert(engine, moved, suffix[1:])
    if l.kind in ("abs", "down"):
        raise _Blocked(Impossibility("elimination", f"{l.kind} step right before a positive consumption", l))
    if l.kind == "cons_inv":
        if engine.polarity(l.p2) == POSITIVE:
            if l.src != head.dst:
                raise _Blocked(Impossibility("uniqueness", "cancelled consumptions disagree on their end", l))
            return suffix[1:]
        raise MalformedChain("negative left consumption in a chain declared normal")
    if l.kind == "cons":
        if engine.polarity(l.p1) == NEGATIVE:
            raise MalformedChain("negative left consumption in a chain declared normal")
        return [l] + suffix
    raise MalformedChain(f"unknown link kind {l.kind}")


def rewrite_to_canonical(engine: Engine, ch: Chain) -> Union[Chain, Impossibility]:
    """Push t1/t2 steps rightwards past positive consumptions, cancel ←̃⊕ ⊕→̃ pairs.

    The chain is processed from its right end, so the suffix built so far
    always starts with positive consumptions.  On a nihilating chain every
    path ends in an Impossibility; otherwise the rewritten chain is returned.
    """
    if not is_normal(engine, ch):
        raise MalformedChain("rewrite_to_canonical expects a normal chain")
    nihil = is_nihilating(engine, ch)
    suffix: list[Link] = []
    try:
        for l in reversed(ch.links):
            suffix = _insert(engine, l, suffix)
    except _Blocked as blocked:
        return blocked.imp
    if nihil:
        if not suffix:
            return Impossibility("emptiness", "the root thread would be the empty thread")
        if all(_is_pos_cons(engine, l) for l in suffix):
            return Impossibility("root", "no positive consumption leaves the root thread")
        return Impossibility("stuck", "rewriting left a non-canonical nihilating chain")
    return Chain(tuple(suffix))


def is_canonical(engine: Engine, ch: Chain) -> bool:
    return all(_is_pos_cons(engine, l) for l in ch.links)


# ---------------------------------------------------------------------------
# Residuation of chains


@dataclass
class ResidualStep:
    """How one link fared through a β-step."""

    original: Link
    outcome: str  # the new kind, or "eq" when both ends merged
    link: Optional[Link]


class ResiduationGap(RuntimeError):
    pass


def residual_setting(t: Term, coding: Coding, b: Position) -> tuple[Residuation, Term, Coding, Engine]:
    res = Residuation(t, collapse_word(b), CodingTracks(coding))
    coding2 = ResidualCoding(coding, res)
    return res, res.reduct, coding2, Engine(res.reduct, coding2)


def residuate_link(res: Residuation, engine2: Engine, l: Link, max_size: int = 64) -> ResidualStep:
    q1, q2 = res.qres(l.p1), res.qres(l.p2)
    k1, k2 = engine2.key(q1), engine2.key(q2)
    if k1 == k2:
        return ResidualStep(l, "eq", None)
    if q1 is not BOT:
        steps = engine2.forward(q1)
        if (l.kind, q2) in steps:
            return ResidualStep(l, l.kind, make_link(engine2, l.kind, q1, q2))
        for kind, r in steps:
            if r == q2:
                return ResidualStep(l, kind, make_link(engine2, kind, q1, q2))
    if k1 is not BOT:
        best = None
        for cand in thread_edges(engine2, k1, max_size):
            if cand.dst == k2 and (best is None or (cand.kind != l.kind, bisize(cand.p1)) < (best.kind != l.kind, bisize(best.p1))):
                best = cand
        if best is not None:
            return ResidualStep(l, best.kind, best)
    raise ResiduationGap(f"no residual step for {l}")


def residuate_chain(t: Term, coding: Optional[Coding], ch: Chain, b: Position) -> tuple[Term, Coding, Chain, list[ResidualStep]]:
    """Map a chain over t through the redex at b; merged links disappear."""
    coding = coding or default_coding()
    if not is_redex(t, collapse_word(b)):
        raise NotARedex(f"no redex at {format_position(b)}")
    res, t2, coding2, eng2 = residual_setting(t, coding, b)
    steps = [residuate_link(res, eng2, l) for l in ch.links]
    links = tuple(s.link for s in steps if s.link is not None)
    return t2, coding2, Chain(links), steps


# ---------------------------------------------------------------------------
# Collapsing strategy


@dataclass
class StrategyStep:
    fired: Position
    height: int
    term_before: Term
    chain: Chain


@dataclass
class StrategyTrace:
    steps: list[StrategyStep] = field(default_factory=list)
    final_term: Optional[Term] = None
    final_chain: Optional[Chain] = None

    @property
    def total(self) -> int:
        return len(self.steps)

    def heights(self) -> list[int]:
        return [s.height for s in self.steps]


def negative_consumptions(engine: Engine, ch: Chain) -> list[int]:
    return [i for i, l in enumerate(ch.links) if consumption_polarity(engine, l) == NEGATIVE]


def tower_redex(t: Term, alpha: Position) -> tuple[Position, int]:
    """Redex to fire for the tower over the application at alpha, and its height."""
    rep = redex_tower_at(t, alpha)
    if rep is None:
        raise MalformedChain(f"no redex tower over {format_position(alpha)}")
    h = rep.height
    for i in range(h - 1, -1, -1):
        pos = rep.trace[i][0]
        if is_redex(t, pos):
            return pos, h
    raise MalformedChain(f"tower over {format_position(alpha)} holds no redex")


def collapsing_strategy(t: Term, coding: Optional[Coding], ch: Chain, max_steps: int = 256) -> StrategyTrace:
    """Fire tower redexes until no consumption in the chain is negative."""
    coding = coding or default_coding()
    engine = Engine(t, coding)
    check_chain(engine, ch)
    trace = StrategyTrace()
    while True:
        bad = negative_consumptions(engine, ch)
        if not bad:
            break
        if len(trace.steps) >= max_steps:
            raise RuntimeError("collapsing strategy exceeded its step budget")
        i = min(bad, key=lambda j: (len(consumed_side(ch.links[j])[0]), j))  # type: ignore[index]
        side = consumed_side(ch.links[i])
        alpha = collapse_word(side[0][:-1])  # type: ignore[index]
        b, h = tower_redex(t, alpha)
        t2, coding2, ch2, _ = residuate_chain(t, coding, ch, b)
        trace.steps.append(StrategyStep(b, h, t, ch2))
        t, coding, ch = t2, coding2, ch2
        engine = Engine(t, coding)
    trace.final_term = t
    trace.final_chain = ch
    return trace
