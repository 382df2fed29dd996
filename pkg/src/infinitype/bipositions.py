"""Bipositions of a term, their stability relations, threads and closures.

A biposition (a, c) pairs an outer position a (a word whose collapse lies
in the support of the term) with an inner position c (a word addressing a
node of the type concluded at a).  `BOT` is the empty biposition.

Relations implemented by `Engine`:

  asc    (a, c) -> (a·1, 1·c)        t(a) = @
         (a, 1·c) -> (a·0, c)        t(a) = λx
  pi     (a, k·c) -> (pos k, c)      t(a) = λx, k >= 2, k in Tr(a); else BOT
  cons   (a·1, k·c) -> (a·k, c)      t(a) = @, k >= 2
  ←      (a·k, c) -> (a·1, k·c)      the converse step
  t1     (a, c·k) -> (a, c)
  t2     (a, c·k) -> (a, c·1)        k >= 2
  abs    (a, ε) -> (a, 1)            t(a) = λx
  down   (a', c) -> (a, ε)           a prefix of a'

Threads are classes of the equivalence generated by asc and pi.  Each
thread is named by a canonical key computed by `Engine.key`, so deciding
whether two bipositions share a thread never needs the (possibly large)
class itself.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .coding import Coding, binds, default_coding
from .derivation import SAbs, SApp, SAx, SDerivation, SNode
from .terms import (
    BOT,
    Abs,
    App,
    Biposition,
    Position,
    Term,
    Var,
    collapse_word,
    format_position,
    head_reduction,
    support,
    try_subterm,
)
from .types import decorate_candidate

POSITIVE = "+"
NEGATIVE = "-"

STEP_KINDS = ("cons", "cons_inv", "t1", "t2", "abs", "down")


def default_bound() -> int:
    return int(os.environ.get("INFINITYPE_BOUND", "18"))


def bisize(p: Biposition) -> int:
    if p is BOT:
        return 0
    return len(p[0]) + len(p[1])  # type: ignore[index]


def format_biposition(p: Biposition) -> str:
    if p is BOT:
        return "p⊥"
    a, c = p  # type: ignore[misc]
    return f"({format_position(a)}, {format_position(c)})"


class IllFormed(ValueError):
    pass


class Engine:
    """Relation steps over the bipositions of one term under one coding."""

    def __init__(self, t: Term, coding: Optional[Coding] = None):
        self.term = t
        self.coding = coding if coding is not None else default_coding()
        self.supp = support(t)
        self._labels: dict[Position, Term] = {}
        self._key: dict[Biposition, Biposition] = {}
        self._top: dict[Biposition, Biposition] = {}

    # -- positions ---------------------------------------------------------

    def node(self, a: Position) -> Optional[Term]:
        b = collapse_word(a)
        if b not in self._labels:
            if b not in self.supp:
                return None
            self._labels[b] = try_subterm(self.term, b)  # type: ignore[assignment]
        return self._labels[b]

    def kind(self, a: Position) -> str:
        u = self.node(a)
        if u is None:
            raise IllFormed(f"{format_position(a)} is not an outer position of the term")
        return "@" if isinstance(u, App) else "λ" if isinstance(u, Abs) else "var"

    def is_outer(self, a: Position) -> bool:
        return collapse_word(a) in self.supp

    def in_trl(self, a: Position, k: int) -> bool:
        """k ∈ Tr(a): k codes an occurrence bound by the λ at a."""
        if k < 2:
            return False
        a0 = self.coding.decode(k)
        return a0 is not None and binds(self.term, tuple(a), a0)

    def trl_enumerate(self, a: Position, max_len: int, max_track: int = 7) -> Iterator[int]:
        """Tracks of Tr(a) whose occurrences have length <= max_len and letters <= max_track."""
        u = self.node(a)
        if not isinstance(u, Abs):
            raise IllFormed(f"no abstraction at {format_position(a)}")
        a = tuple(a)

        def grow(pos: Position, sub: Term) -> Iterator[Position]:
            if isinstance(sub, Var):
                if sub.name == u.var:
                    yield pos
                return
            if len(pos) >= max_len:
                return
            if isinstance(sub, Abs):
                if sub.var != u.var:
                    yield from grow(pos + (0,), sub.body)
                return
            yield from grow(pos + (1,), sub.fun)
            for k in range(2, max_track + 1):
                yield from grow(pos + (k,), sub.arg)

        for a0 in grow(a + (0,), u.body):
            yield self.coding.encode(a0)

    # -- stability relations ----------------------------------------------

    def check(self, p: Biposition) -> None:
        if p is BOT:
            return
        a, c = p  # type: ignore[misc]
        if not self.is_outer(a):
            raise IllFormed(f"{format_biposition(p)}: outer position outside the term")
        if any(k < 1 for k in c):
            raise IllFormed(f"{format_biposition(p)}: inner positions use letters >= 1")

    def asc(self, p: Biposition) -> Optional[Biposition]:
        if p is BOT:
            return None
        a, c = p  # type: ignore[misc]
        k = self.kind(a)
        if k == "@":
            return (a + (1,), (1,) + c)
        if k == "λ" and c and c[0] == 1:
            return (a + (0,), c[1:])
        return None

    def asc_inv(self, p: Biposition) -> Optional[Biposition]:
        if p is BOT:
            return None
        a, c = p  # type: ignore[misc]
        if not a:
            return None
        parent, last = a[:-1], a[-1]
        k = self.kind(parent)
        if k == "@" and last == 1 and c and c[0] == 1:
            return (parent, c[1:])
        if k == "λ" and last == 0:
            return (parent, (1,) + c)
        return None

    def pi(self, p: Biposition) -> Optional[Biposition]:
        if p is BOT:
            return None
        a, c = p  # type: ignore[misc]
        if self.kind(a) != "λ" or not c or c[0] < 2:
            return None
        if self.in_trl(a, c[0]):
            return (self.coding.decode(c[0]), c[1:])  # type: ignore[return-value]
        return BOT

    def pi_inv(self, p: Biposition) -> Optional[Biposition]:
        if p is BOT:
            return None
        a, c = p  # type: ignore[misc]
        u = self.node(a)
        if not isinstance(u, Var):
            return None
        binder: Optional[Position] = None
        cur = self.term
        for i, k in enumerate(a):
            if isinstance(cur, Abs) and cur.var == u.name:
                binder = a[:i]
            cur = try_subterm(cur, (k,))  # type: ignore[assignment]
        if binder is None:
            return None
        return (binder, (self.coding.encode(a),) + c)

    def equiv_neighbours(self, p: Biposition) -> list[tuple[str, Biposition]]:
        out = []
        for name, f in (("asc", self.asc), ("asc_inv", self.asc_inv), ("pi", self.pi), ("pi_inv", self.pi_inv)):
            q = f(p)
            if q is not None:
                out.append((name, q))
        return out

    def forward(self, p: Biposition) -> list[tuple[str, Biposition]]:
        """One →• step: cons, ←, t1, t2, abs, down (down from p⊥ is left implicit)."""
        if p is BOT:
            return []
        a, c = p  # type: ignore[misc]
        out: list[tuple[str, Biposition]] = []
        if a and a[-1] == 1 and self.kind(a[:-1]) == "@" and c and c[0] >= 2:
            out.append(("cons", (a[:-1] + (c[0],), c[1:])))
        if a and a[-1] >= 2 and self.kind(a[:-1]) == "@":
            out.append(("cons_inv", (a[:-1] + (1,), (a[-1],) + c)))
        if c:
            out.append(("t1", (a, c[:-1])))
            if c[-1] >= 2:
                out.append(("t2", (a, c[:-1] + (1,))))
        if not c and self.kind(a) == "λ":
            out.append(("abs", (a, (1,))))
        for i in range(len(a) + 1):
            if (a[:i], ()) != (a, c):
                out.append(("down", (a[:i], ())))
        return out

    def steps(self, p: Biposition) -> list[tuple[str, Biposition]]:
        """All labelled one-step successors: ≡ generators and →• steps."""
        self.check(p)
        return self.equiv_neighbours(p) + self.forward(p)

    # -- threads -----------------------------------------------------------

    def top(self, p: Biposition) -> Biposition:
        """The top ascendant Asc(p)."""
        if p is BOT:
            return BOT
        if p in self._top:
            return self._top[p]
        q = p
        while True:
            r = self.asc(q)
            if r is None:
                break
            q = r
        self._top[p] = q
        return q

    def polarity(self, p: Biposition) -> str:
        if p is BOT:
            return NEGATIVE
        return POSITIVE if self.kind(self.top(p)[0]) == "var" else NEGATIVE  # type: ignore[index]

    def key(self, p: Biposition) -> Biposition:
        """Canonical representative of the thread of p (BOT for the empty thread)."""
        if p is BOT:
            return BOT
        if p in self._key:
            return self._key[p]
        q = self.top(p)
        a, c = q  # type: ignore[misc]
        if self.kind(a) == "λ" and c and c[0] >= 2:
            r = self.pi(q)
            q = BOT if r is BOT else self.top(r)  # type: ignore[arg-type]
        self._key[p] = q
        return q

    def same_thread(self, p: Biposition, q: Biposition) -> bool:
        return self.key(p) == self.key(q)

    def thread_members(self, p: Biposition, max_size: int) -> set[Biposition]:
        """The members of p's thread of size <= max_size (the empty thread yields {BOT})."""
        if self.key(p) is BOT:
            return {BOT}
        seen = {p}
        queue = deque([p])
        while queue:
            q = queue.popleft()
            for _, r in self.equiv_neighbours(q):
                if r is BOT or r in seen or bisize(r) > max_size:
                    continue
                seen.add(r)
                queue.append(r)
        return seen


def brute_force_equiv(engine: Engine, p: Biposition, max_size: int) -> set[Biposition]:
    """≡-class of p by plain search over asc, asc⁻¹, pi, pi⁻¹ (no canonical keys)."""
    seen = {p}
    queue = deque([p])
    while queue:
        q = queue.popleft()
        nbrs = []
        for f in (engine.asc, engine.asc_inv, engine.pi, engine.pi_inv):
            r = f(q)
            if r is not None:
                nbrs.append(r)
        for r in nbrs:
            if r not in seen and (r is BOT or bisize(r) <= max_size):
                seen.add(r)
                queue.append(r)
    return seen


# ---------------------------------------------------------------------------
# Closure


@dataclass
class ClosureResult:
    bipositions: set
    threads: set
    hit_bot: bool
    frontier: set
    bound: int
    budget_exhausted: bool = False

    @property
    def complete(self) -> bool:
        return not self.frontier and not self.budget_exhausted

    def to_json(self) -> dict:
        return {
            "bipositions": sorted(format_biposition(p) for p in self.bipositions),
            "threads": sorted(format_biposition(k) for k in self.threads),
            "hit_bot": self.hit_bot,
            "frontier": sorted(format_biposition(p) for p in self.frontier),
            "bound": self.bound,
        }


def closure_bmin(t: Term, coding: Optional[Coding] = None, bound: Optional[int] = None, budget: int = 200_000, engine: Optional[Engine] = None) -> ClosureResult:
    """Least set containing (ε, ε), closed under ≡ and →•, cut at |a| + |c| <= bound."""
    eng = engine or Engine(t, coding)
    bound = default_bound() if bound is None else bound
    start: Biposition = ((), ())
    reached = {start}
    frontier: set = set()
    hit_bot = False
    queue = deque([start])
    exhausted = False
    while queue:
        if len(reached) > budget:
            exhausted = True
            break
        p = queue.popleft()
        for _, q in eng.equiv_neighbours(p) + eng.forward(p):
            if q is BOT:
                hit_bot = True
                continue
            if q in reached:
                continue
            if bisize(q) > bound:
                frontier.add(q)
                continue
            reached.add(q)
            queue.append(q)
    if exhausted:
        frontier |= set(queue)
    threads = {eng.key(p) for p in reached}
    if BOT in threads:
        hit_bot = True
    return ClosureResult(reached, threads, hit_bot, frontier, bound, exhausted)


class ClosureUnusable(ValueError):
    pass


def synthesize_from_closure(t: Term, res: ClosureResult | set, coding: Optional[Coding] = None) -> SDerivation:
    """The derivation whose bisupport is a complete, ⊥-free closure.

    Leaves of every type get the atom o and inner nodes arrows; axiom tracks
    follow the coding.
    """
    if isinstance(res, ClosureResult):
        if not res.complete:
            raise ClosureUnusable("the closure was truncated by its bound")
        if res.hit_bot:
            raise ClosureUnusable("the closure reaches the empty thread")
        bips = res.bipositions
    else:
        bips = set(res)
    coding = coding or default_coding()
    inner: dict[Position, set] = {}
    for a, c in bips:
        inner.setdefault(a, set()).add(c)
    if () not in inner:
        raise ClosureUnusable("empty closure")

    def build(a: Position, u: Term) -> SNode:
        ty = decorate_candidate(inner[a])
        if isinstance(u, Var):
            return SAx(coding.encode(a), ty)
        if isinstance(u, Abs):
            return SAbs(build(a + (0,), u.body))
        args = sorted(b[-1] for b in inner if len(b) == len(a) + 1 and b[:-1] == a and b[-1] >= 2)
        return SApp(build(a + (1,), u.fun), tuple((k, build(a + (k,), u.arg)) for k in args))

    return SDerivation(t, build((), t))


# ---------------------------------------------------------------------------
# Chains over threads


@dataclass(frozen=True)
class Link:
    """One step θ_src --kind--> θ_dst witnessed by p1 -> p2 with p1 ∈ θ_src, p2 ∈ θ_dst."""

    src: Biposition
    kind: str
    dst: Biposition
    p1: Biposition
    p2: Biposition

    def __str__(self) -> str:
        return f"{format_biposition(self.src)} ={self.kind}=> {format_biposition(self.dst)}  [{format_biposition(self.p1)} -> {format_biposition(self.p2)}]"


@dataclass(frozen=True)
class Chain:
    links: tuple[Link, ...]

    def __len__(self) -> int:
        return len(self.links)

    def threads(self) -> list[Biposition]:
        if not self.links:
            return []
        return [self.links[0].src] + [l.dst for l in self.links]

    def to_json(self) -> list[dict]:
        return [link_to_json(l) for l in self.links]

    def __str__(self) -> str:
        return "\n".join(str(l) for l in self.links) or "(empty chain)"


def biposition_to_json(p: Biposition):
    if p is BOT:
        return "bot"
    return [list(p[0]), list(p[1])]  # type: ignore[index]


def biposition_from_json(v) -> Biposition:
    if v in ("bot", None):
        return BOT
    return (tuple(v[0]), tuple(v[1]))


def link_to_json(l: Link) -> dict:
    return {
        "src": biposition_to_json(l.src),
        "kind": l.kind,
        "dst": biposition_to_json(l.dst),
        "p1": biposition_to_json(l.p1),
        "p2": biposition_to_json(l.p2),
    }


def link_from_json(d: dict, engine: Optional[Engine] = None) -> Link:
    p1, p2 = biposition_from_json(d["p1"]), biposition_from_json(d["p2"])
    if engine is not None:
        return Link(engine.key(p1), d["kind"], engine.key(p2), p1, p2)
    return Link(biposition_from_json(d["src"]), d["kind"], biposition_from_json(d["dst"]), p1, p2)


def make_link(engine: Engine, kind: str, p1: Biposition, p2: Biposition) -> Link:
    return Link(engine.key(p1), kind, engine.key(p2), p1, p2)


def thread_edges(engine: Engine, theta: Biposition, max_size: int) -> Iterator[Link]:
    """All →̃• edges leaving thread θ with both witnesses of size <= max_size."""
    for p in sorted(engine.thread_members(theta, max_size), key=_order):
        if bisize(p) > max_size:
            continue
        for kind, q in engine.forward(p):
            if bisize(q) <= max_size:
                yield Link(theta, kind, engine.key(q), p, q)


def _order(p: Biposition):
    if p is BOT:
        return (-1, (), ())
    return (bisize(p), p[0], p[1])  # type: ignore[index]


ROOT: Biposition = ((), ())


def find_nihilating_chain(
    t: Term,
    coding: Optional[Coding] = None,
    max_len: int = 12,
    max_size: int = 20,
    engine: Optional[Engine] = None,
    extra_steps=None,
) -> Optional[Chain]:
    """Shortest chain θ_ε →̃• ... →̃• θ⊥ within the bounds, or None.

    `extra_steps(engine, p)` may add (kind, q) successors; it exists only to
    sabotage the relations in wiring tests.
    """
    eng = engine or Engine(t, coding)
    start = eng.key(ROOT)
    parent: dict[Biposition, Optional[Link]] = {start: None}
    layer = [start]
    for _ in range(max_len):
        nxt = []
        for theta in layer:
            edges = list(thread_edges(eng, theta, max_size))
            if extra_steps is not None:
                for p in sorted(eng.thread_members(theta, max_size), key=_order):
                    edges.extend(Link(theta, k, eng.key(q), p, q) for k, q in extra_steps(eng, p))
            for link in edges:
                if link.dst in parent:
                    continue
                parent[link.dst] = link
                if link.dst is BOT:
                    return _unwind(parent, BOT)
                nxt.append(link.dst)
        layer = nxt
        if not layer:
            break
    return None


def _unwind(parent: dict, theta: Biposition) -> Chain:
    links = []
    while parent[theta] is not None:
        l = parent[theta]
        links.append(l)
        theta = l.src
    return Chain(tuple(reversed(links)))


def find_chain_to(engine: Engine, target: Biposition, max_len: int, max_size: int) -> Optional[Chain]:
    """Shortest chain from θ_ε to the thread of `target`."""
    goal = engine.key(target)
    start = engine.key(ROOT)
    parent: dict[Biposition, Optional[Link]] = {start: None}
    if start == goal:
        return Chain(())
    layer = [start]
    for _ in range(max_len):
        nxt = []
        for theta in layer:
            for link in thread_edges(engine, theta, max_size):
                if link.dst in parent or link.dst is BOT:
                    continue
                parent[link.dst] = link
                if link.dst == goal:
                    return _unwind(parent, goal)
                nxt.append(link.dst)
        layer = nxt
    return None


# ---------------------------------------------------------------------------
# Zero terms


@dataclass
class ZeroTermReport:
    certificate: str  # 'negative-root', 'positive-root' or 'inconclusive'
    root_polarity: str
    top: Biposition
    head_segment: Optional[list] = None  # [(term, fired position)], ending in an abstraction
    chain: Optional[Chain] = None
    trace: dict = field(default_factory=dict)


def zero_term_analysis(t: Term, coding: Optional[Coding] = None, max_len: int = 8, max_size: int = 14, fuel: int = 64) -> ZeroTermReport:
    """Sort t by the polarity of its root biposition.

    Negative root: the top ascendant of (ε, ε) is an abstraction reached
    through a redex tower sequence; head reduction then exposes an
    abstraction in finitely many steps, and the segment is returned.
    Positive root: a chain from θ_ε to the thread of (ε, 1) is looked for.
    """
    eng = Engine(t, coding)
    top = eng.top(ROOT)
    pol = eng.polarity(ROOT)
    trace: dict = {"asc_height": len(top[0]), "top_kind": eng.kind(top[0])}  # type: ignore[index]
    if pol == NEGATIVE:
        steps = head_reduction(t, fuel)
        segment = []
        for u, b in steps:
            segment.append((u, b))
            if isinstance(u, Abs):
                break
        if isinstance(segment[-1][0], Abs):
            trace["head_steps"] = len(segment) - 1
            return ZeroTermReport("negative-root", pol, top, segment, None, trace)
        return ZeroTermReport("inconclusive", pol, top, None, None, trace)
    ch = find_chain_to(eng, ((), (1,)), max_len, max_size)
    if ch is not None:
        return ZeroTermReport("positive-root", pol, top, None, ch, trace)
    return ZeroTermReport("inconclusive", pol, top, None, None, trace)


def thread_graph_dot(t: Term, res: ClosureResult, engine: Optional[Engine] = None, max_size: Optional[int] = None) -> str:
    """DOT rendering of the threads of a closure and the →̃• edges between them."""
    eng = engine or Engine(t)
    size = res.bound if max_size is None else max_size
    names = {k: f"t{i}" for i, k in enumerate(sorted(res.threads, key=_order))}
    lines = ["digraph threads {"]
    for k, n in names.items():
        pol = eng.polarity(k)
        lines.append(f'  {n} [label="{format_biposition(k)} {pol}"];')
    edges = set()
    for k in names:
        if k is BOT:
            continue
        for l in thread_edges(eng, k, size):
            if l.dst in names and l.dst != k:
                edges.add((names[k], names[l.dst], l.kind))
    for a, b, kind in sorted(edges):
        lines.append(f'  {a} -> {b} [label="{kind}"];')
    lines.append("}")
    return "\n".join(lines)
