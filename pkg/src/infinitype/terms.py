"""Finite lambda-terms addressed by positions.

A position is a tuple of naturals.  Inside a term only the letters 0, 1, 2
occur: the body of an abstraction sits on track 0, the function of an
application on track 1 and its argument on track 2.  Positions of typing
derivations may carry arbitrary argument tracks k >= 2; `collapse_word`
maps them back onto term positions.

The module also hosts the purely positional machinery that the type-level
code builds upon: beta-reduction, head reduction and order bounds, redex
towers measured by the consumption degree, and the (quasi-)residual maps
induced by firing one redex.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

Position = tuple[int, ...]
EPSILON: Position = ()


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class Abs:
    var: str
    body: "Term"

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"

    def __str__(self) -> str:
        return pretty(self)


Term = Union[Var, Abs, App]

APP_LABEL = "@"
LAMBDA = "λ"


def label_of(t: Term) -> str:
    """Constructor label: '@', 'λx' or the variable name."""
    if isinstance(t, App):
        return APP_LABEL
    if isinstance(t, Abs):
        return LAMBDA + t.var
    return t.name


def lam(*names_and_body) -> Term:
    """lam('x', 'y', body) builds λx.λy.body."""
    *names, body = names_and_body
    for name in reversed(names):
        body = Abs(name, body)
    return body


def app(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


# ---------------------------------------------------------------------------
# Parsing and printing


class TermSyntaxError(ValueError):
    """Raised on malformed term text; `offset` is a byte offset into the UTF-8 input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


_TOKEN = re.compile(r"\s*(?:(?P<lam>\\|λ)|(?P<dot>\.)|(?P<lp>\()|(?P<rp>\))|(?P<id>[A-Za-z_][A-Za-z0-9_']*))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                rest = text[pos:]
                if rest.strip() == "":
                    break
                bad = pos + (len(rest) - len(rest.lstrip()))
                raise TermSyntaxError(f"unexpected character {text[bad]!r}", self._bytes(bad))
            kind = m.lastgroup
            assert kind is not None
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def _bytes(self, char_index: int) -> int:
        return len(self.text[:char_index].encode("utf-8"))

    def peek(self) -> Optional[str]:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def offset(self) -> int:
        if self.i < len(self.tokens):
            return self._bytes(self.tokens[self.i][2])
        return len(self.text.encode("utf-8"))

    def expect(self, kind: str) -> str:
        if self.peek() != kind:
            found = "end of input" if self.peek() is None else repr(self.tokens[self.i][1])
            raise TermSyntaxError(f"expected {kind}, found {found}", self.offset())
        value = self.tokens[self.i][1]
        self.i += 1
        return value

    def term(self) -> Term:
        if self.peek() == "lam":
            self.i += 1
            names = [self.expect("id")]
            while self.peek() == "id":
                names.append(self.expect("id"))
            self.expect("dot")
            return lam(*names, self.term())
        head = self.atom()
        while self.peek() in ("id", "lp", "lam"):
            if self.peek() == "lam":
                head = App(head, self.term())
                break
            head = App(head, self.atom())
        return head

    def atom(self) -> Term:
        kind = self.peek()
        if kind == "id":
            return Var(self.expect("id"))
        if kind == "lp":
            self.i += 1
            inner = self.term()
            self.expect("rp")
            return inner
        found = "end of input" if kind is None else repr(self.tokens[self.i][1])
        raise TermSyntaxError(f"expected a term, found {found}", self.offset())


def parse_term(text: str) -> Term:
    """Parse `\\x. M`, `λx y. M`, left-associative application and parentheses."""
    p = _Parser(text)
    t = p.term()
    if p.peek() is not None:
        raise TermSyntaxError(f"trailing input {p.tokens[p.i][1]!r}", p.offset())
    return t


def pretty(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.var}. {pretty(t.body)}"
    fun = pretty(t.fun)
    if isinstance(t.fun, Abs):
        fun = f"({fun})"
    arg = pretty(t.arg)
    if not isinstance(t.arg, Var):
        arg = f"({arg})"
    return f"{fun} {arg}"


def format_position(a: Position) -> str:
    return "ε" if not a else "·".join(map(str, a))


def parse_position(text: str) -> Position:
    text = text.strip()
    if text in ("", "ε", "e", "eps"):
        return ()
    return tuple(int(x) for x in re.split(r"[·.,\s]+", text) if x)


# ---------------------------------------------------------------------------
# Positions and supports


def collapse_word(w: Position) -> Position:
    return tuple(min(k, 2) for k in w)


def is_prefix(a: Position, b: Position) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


def support(t: Term) -> frozenset[Position]:
    out: set[Position] = set()
    stack: list[tuple[Term, Position]] = [(t, ())]
    while stack:
        u, a = stack.pop()
        out.add(a)
        if isinstance(u, Abs):
            stack.append((u.body, a + (0,)))
        elif isinstance(u, App):
            stack.append((u.fun, a + (1,)))
            stack.append((u.arg, a + (2,)))
    return frozenset(out)


def subterm(t: Term, a: Position) -> Term:
    """t|ā.  Raises KeyError when the collapse of `a` is outside the support."""
    u = t
    for k in a:
        k = min(k, 2)
        if isinstance(u, Abs) and k == 0:
            u = u.body
        elif isinstance(u, App) and k == 1:
            u = u.fun
        elif isinstance(u, App) and k == 2:
            u = u.arg
        else:
            raise KeyError(f"position {format_position(a)} is outside the support")
    return u


def try_subterm(t: Term, a: Position) -> Optional[Term]:
    try:
        return subterm(t, a)
    except KeyError:
        return None


def at(t: Term, a: Position) -> tuple[Term, str]:
    """(t|ā, t(ā)) with t(ā) one of '@', 'λx' or a variable name."""
    u = subterm(t, a)
    return u, label_of(u)


def size(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    if isinstance(t, Abs):
        return 1 + size(t.body)
    return 1 + size(t.fun) + size(t.arg)


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.var}
    return free_vars(t.fun) | free_vars(t.arg)


def all_names(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Abs):
        return {t.var} | all_names(t.body)
    return all_names(t.fun) | all_names(t.arg)


def binder_of(t: Term, a: Position) -> Optional[Position]:
    """Position of the λ binding the variable occurrence at `a`, or None if free.

    The returned position is a prefix of `a` itself, so argument tracks of
    outer positions are kept.
    """
    name = subterm(t, a)
    if not isinstance(name, Var):
        raise ValueError(f"{format_position(a)} is not a variable occurrence")
    u = t
    found: Optional[Position] = None
    for i, k in enumerate(a):
        if isinstance(u, Abs) and u.var == name.name:
            found = a[:i]
        u = subterm(u, (k,))
    return found


def occurrences(t: Term, x: str, a: Position = ()) -> list[Position]:
    """Positions (relative to t) of the free occurrences of x in t."""
    if isinstance(t, Var):
        return [a] if t.name == x else []
    if isinstance(t, Abs):
        return [] if t.var == x else occurrences(t.body, x, a + (0,))
    return occurrences(t.fun, x, a + (1,)) + occurrences(t.arg, x, a + (2,))


# ---------------------------------------------------------------------------
# Substitution and reduction


def fresh_name(base: str, avoid: set[str] | frozenset[str]) -> str:
    stem = base.rstrip("0123456789'") or "v"
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def rename(t: Term, old: str, new: str) -> Term:
    """Rename free occurrences of `old` into `new` (new assumed not captured)."""
    if isinstance(t, Var):
        return Var(new) if t.name == old else t
    if isinstance(t, Abs):
        return t if t.var == old else Abs(t.var, rename(t.body, old, new))
    return App(rename(t.fun, old, new), rename(t.arg, old, new))


def distinct_binders(t: Term) -> Term:
    """An α-equivalent term whose binders are pairwise distinct and differ from free names."""
    used = set(free_vars(t))

    def go(u: Term) -> Term:
        if isinstance(u, Var):
            return u
        if isinstance(u, App):
            return App(go(u.fun), go(u.arg))
        y = u.var if u.var not in used else fresh_name(u.var, used | all_names(u.body))
        used.add(y)
        return Abs(y, go(rename(u.body, u.var, y)))

    return go(t)


def substitute(t: Term, x: str, s: Term) -> Term:
    """Capture-avoiding t[s/x]; bound names are freshened deterministically."""
    fv_s = free_vars(s)

    def go(u: Term) -> Term:
        if isinstance(u, Var):
            return s if u.name == x else u
        if isinstance(u, App):
            return App(go(u.fun), go(u.arg))
        if u.var == x or x not in free_vars(u.body):
            return u
        if u.var in fv_s:
            y = fresh_name(u.var, fv_s | all_names(u.body) | {x})
            return Abs(y, go(rename(u.body, u.var, y)))
        return Abs(u.var, go(u.body))

    return go(t)


def replace_at(t: Term, a: Position, new: Term) -> Term:
    if not a:
        return new
    k = min(a[0], 2)
    if isinstance(t, Abs) and k == 0:
        return Abs(t.var, replace_at(t.body, a[1:], new))
    if isinstance(t, App) and k == 1:
        return App(replace_at(t.fun, a[1:], new), t.arg)
    if isinstance(t, App) and k == 2:
        return App(t.fun, replace_at(t.arg, a[1:], new))
    raise KeyError(f"position {format_position(a)} is outside the support")


class NotARedex(ValueError):
    pass


def is_redex(t: Term, b: Position) -> bool:
    u = try_subterm(t, b)
    return isinstance(u, App) and isinstance(u.fun, Abs)


def beta_reduce_at(t: Term, b: Position) -> Term:
    b = collapse_word(b)
    u = try_subterm(t, b)
    if not (isinstance(u, App) and isinstance(u.fun, Abs)):
        raise NotARedex(f"no redex at {format_position(b)}")
    return replace_at(t, b, substitute(u.fun.body, u.fun.var, u.arg))


def redexes(t: Term) -> list[Position]:
    """All redex positions, in leftmost-outermost order."""
    out: list[Position] = []

    def go(u: Term, a: Position) -> None:
        if isinstance(u, App):
            if isinstance(u.fun, Abs):
                out.append(a)
            go(u.fun, a + (1,))
            go(u.arg, a + (2,))
        elif isinstance(u, Abs):
            go(u.body, a + (0,))

    go(t, ())
    return out


def leading_lambdas(t: Term) -> int:
    n = 0
    while isinstance(t, Abs):
        n, t = n + 1, t.body
    return n


def head_redex(t: Term) -> Optional[Position]:
    """Position of the head redex, or None when t is a head normal form."""
    a: Position = ()
    while isinstance(t, Abs):
        t, a = t.body, a + (0,)
    spine: list[Position] = []
    while isinstance(t, App):
        spine.append(a)
        t, a = t.fun, a + (1,)
    if isinstance(t, Abs) and spine:
        return spine[-1]
    return None


def is_head_normal(t: Term) -> bool:
    return head_redex(t) is None


def head_reduction(t: Term, fuel: int) -> list[tuple[Term, Optional[Position]]]:
    """[(t0, b0), (t1, b1), ...]: each term with the redex fired next (None at the end)."""
    steps: list[tuple[Term, Optional[Position]]] = []
    for _ in range(fuel):
        b = head_redex(t)
        if b is None:
            break
        steps.append((t, b))
        t = beta_reduce_at(t, b)
    steps.append((t, None))
    return steps


def normalize(t: Term, fuel: int = 1000) -> Optional[Term]:
    """Leftmost-outermost normal form within `fuel` steps, else None."""
    for _ in range(fuel):
        rs = redexes(t)
        if not rs:
            return t
        t = beta_reduce_at(t, rs[0])
    return t if not redexes(t) else None


@dataclass(frozen=True)
class OrderBound:
    lower_bound: int
    exact: bool
    reduct: Term
    steps: int


def order_bounded(t: Term, fuel: int) -> OrderBound:
    """Leading-λ lower bound over the head reducts reachable in `fuel` steps.

    Exactness is claimed only once a head normal form is reached: the body
    of λx1..xn.y M1..Mm never reduces to an abstraction, so n is the order.
    """
    trace = head_reduction(t, fuel)
    best = max(leading_lambdas(u) for u, _ in trace)
    last, fired = trace[-1]
    return OrderBound(best, fired is None and is_head_normal(last), last, len(trace) - 1)


# ---------------------------------------------------------------------------
# Redex towers


@dataclass(frozen=True)
class RedexTowerReport:
    root: Position
    height: int
    trace: tuple[tuple[Position, int], ...]
    kind: str  # "tower" or "sequence"
    heights: tuple[int, ...]

    @property
    def abstraction(self) -> Position:
        return self.trace[self.height][0]


def redex_tower_at(t: Term, b: Position, sequence: bool = False) -> Optional[RedexTowerReport]:
    """Walk ascendant positions from the application at b, tracking cdeg.

    cdeg(b) = 0; leaving an application through track 1 adds one, leaving an
    abstraction through track 0 removes one.  The tower's abstraction is the
    λ whose exit brings the degree back to 0; its distance to b is the
    height (1 for a plain redex).  With `sequence=True` the highest such λ
    before the degree turns negative is reported instead.
    """
    b = collapse_word(b)
    u = subterm(t, b)
    if not isinstance(u, App):
        raise ValueError(f"no application at {format_position(b)}")
    trace: list[tuple[Position, int]] = [(b, 0)]
    heights: list[int] = []
    pos, deg = b, 0
    while True:
        node = subterm(t, pos)
        if isinstance(node, App):
            pos, deg = pos + (1,), deg + 1
        elif isinstance(node, Abs):
            pos, deg = pos + (0,), deg - 1
            if deg == 0:
                heights.append(len(trace) - 1)
        else:
            break
        if deg < 0:
            break
        trace.append((pos, deg))
    if not heights:
        return None
    h = heights[-1] if sequence else heights[0]
    kind = "tower" if h == heights[0] else "sequence"
    return RedexTowerReport(b, h, tuple(trace[: h + 2]), kind, tuple(heights))


# ---------------------------------------------------------------------------
# Residuals of outer positions and bipositions


class Bottom:
    """The empty biposition p⊥ (a singleton)."""

    _instance: Optional["Bottom"] = None

    def __new__(cls) -> "Bottom":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "p⊥"

    def __reduce__(self):
        return (Bottom, ())


BOT = Bottom()
Biposition = Union[tuple[Position, Position], Bottom]


class Residuation:
    """Res_b and QRes_b for the redex at term position b.

    `tracks` supplies the axiom tracks of variable occurrences:
    `tracks.track(t, var_position)` and `tracks.slot(t, lambda_position, k)`
    (the occurrence bound by the λ at that position using track k, if any).
    Codings and concrete derivations both provide this interface.
    """

    def __init__(self, t: Term, b: Position, tracks):
        b = collapse_word(b)
        if not is_redex(t, b):
            raise NotARedex(f"no redex at {format_position(b)}")
        self.term = t
        self.b = b
        self.tracks = tracks
        redex = subterm(t, b)
        assert isinstance(redex, App) and isinstance(redex.fun, Abs)
        self.var = redex.fun.var
        self.body = redex.fun.body
        self.reduct = beta_reduce_at(t, b)

    def _root(self, alpha: Position) -> Optional[Position]:
        n = len(self.b)
        if len(alpha) >= n and collapse_word(alpha[:n]) == self.b:
            return alpha[:n]
        return None

    def _var_slot(self, a: Position, beta: Position) -> bool:
        """Whether a·1·0·β is an occurrence of the redex's bound variable."""
        node = try_subterm(self.body, beta)
        if not (isinstance(node, Var) and node.name == self.var):
            return False
        u = self.body
        for k in beta:
            if isinstance(u, Abs) and u.var == self.var:
                return False
            u = subterm(u, (k,))
        return True

    def classify(self, alpha: Position):
        a = self._root(alpha)
        if a is None:
            return ("outside",)
        rest = alpha[len(a):]
        if not rest:
            return ("root", a)
        if rest == (1,):
            return ("abs", a)
        if rest[0] == 1:
            if rest[1] != 0:
                return ("outside",)  # not in 𝔸^t
            beta = rest[2:]
            if self._var_slot(a, beta):
                return ("var", a, self.tracks.track(self.term, alpha))
            return ("body", a, beta)
        if rest[0] == 0:
            return ("outside",)
        k = rest[0]
        slot = self.tracks.slot(self.term, a + (1,), k)
        if slot is None:
            return ("nihil", a, k)
        return ("arg", a, k, slot[len(a) + 2:], rest[1:])

    def res(self, alpha: Position) -> Optional[Position]:
        c = self.classify(alpha)
        if c[0] == "outside":
            return alpha
        if c[0] == "body":
            return c[1] + c[2]
        if c[0] == "arg":
            return c[1] + c[3] + c[4]
        return None

    def qres_position(self, alpha: Position) -> Optional[Position]:
        c = self.classify(alpha)
        if c[0] in ("root",):
            return c[1]
        if c[0] == "var":
            a, k = c[1], c[2]
            slot = self.tracks.slot(self.term, a + (1,), k)
            return None if slot is None else a + slot[len(a) + 2:]
        return self.res(alpha)

    def res_bi(self, p: Biposition) -> Optional[Biposition]:
        if p is BOT:
            return None
        alpha, c = p
        r = self.res(alpha)
        return None if r is None else (r, c)

    def qres(self, p: Biposition) -> Biposition:
        if p is BOT:
            return BOT
        alpha, c = p
        cl = self.classify(alpha)
        kind = cl[0]
        if kind == "nihil":
            return BOT
        if kind == "abs":
            a = cl[1]
            if not c or c == (1,):
                return (a, ())
            if c[0] == 1:
                return (a, c[1:])
            slot = self.tracks.slot(self.term, a + (1,), c[0])
            if slot is None:
                return BOT
            return (a + slot[len(a) + 2:], c[1:])
        q = self.qres_position(alpha)
        return BOT if q is None else (q, c)

    def res_inverse(self, alpha2: Position) -> Position:
        """The unique α with Res(α) = alpha2 (alpha2 a candidate position of the reduct)."""
        a = self._root(alpha2)
        if a is None:
            return alpha2
        rest = alpha2[len(a):]
        for i in range(len(rest) + 1):
            beta = rest[:i]
            if try_subterm(self.body, beta) is None:
                break
            if self._var_slot(a, beta):
                k = self.tracks.track(self.term, a + (1, 0) + beta)
                return a + (k,) + rest[i:]
        return a + (1, 0) + rest


def enumerate_terms(max_size: int, names: tuple[str, ...] = ("x", "y", "z")) -> Iterator[Term]:
    """All terms of size <= max_size over the given variable names (small sizes only)."""
    by_size: dict[int, list[Term]] = {1: [Var(n) for n in names]}
    for s in range(2, max_size + 1):
        out: list[Term] = [Abs(n, b) for n in names for b in by_size[s - 1]]
        for left in range(1, s - 1):
            out.extend(App(f, g) for f in by_size[left] for g in by_size[s - 1 - left])
        by_size[s] = out
    for s in range(1, max_size + 1):
        yield from by_size[s]


def random_term(rng, size: int, names: tuple[str, ...] = ("x", "y", "z"), closed: bool = False, scope: tuple[str, ...] = ()) -> Term:
    """A random term of exactly `size` nodes.

    With `closed=True` variables are drawn from the enclosing binders only;
    the outermost node is then forced to be an abstraction when needed.
    """
    if size <= 1:
        pool = list(scope) if closed else list(scope) + list(names)
        if not pool:
            raise ValueError("no variable in scope for a closed term")
        return Var(rng.choice(pool))
    if size == 2 or (closed and not scope) or rng.random() < 0.35:
        v = rng.choice(names)
        return Abs(v, random_term(rng, size - 1, names, closed, scope + (v,)))
    left = rng.randint(1, size - 2)
    return App(
        random_term(rng, left, names, closed, scope),
        random_term(rng, size - 1 - left, names, closed, scope),
    )
