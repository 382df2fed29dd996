"""Sequence types (tracked) and multiset types, finite or rational.

Both families share the same representation of recursion: `Mu(name, body)`
binds `TVar(name)` inside `body`.  Every Mu must be contractive (its body
reaches an arrow before reaching a bare variable), so unfolding is always
productive and the set of unfolded subterms is finite.  Equality of
rational types is decided by bisimulation over that finite set.

S side: `SArrow(Seq, target)` where a `Seq` maps tracks >= 2 to types and
may hold families of tracks described by arithmetic progressions.
R side: `RArrow(Multiset, target)` where a `Multiset` holds (type, mult)
pairs and `OMEGA` is the infinite multiplicity.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

OMEGA = math.inf


# ---------------------------------------------------------------------------
# Syntax


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True)
class TVar:
    name: str

    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True)
class Mu:
    name: str
    body: "AnyType"

    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True)
class Progression:
    """The track set {start + step*n | n >= 0}."""

    start: int
    step: int

    def __post_init__(self):
        if self.start < 2 or self.step < 1:
            raise ValueError("progressions need start >= 2 and step >= 1")

    def __contains__(self, k: int) -> bool:
        return k >= self.start and (k - self.start) % self.step == 0

    def upto(self, bound: int) -> range:
        return range(self.start, bound + 1, self.step)


class TrackConflict(ValueError):
    def __init__(self, tracks: Iterable[int], description: str = ""):
        self.tracks = frozenset(tracks)
        shown = sorted(self.tracks)[:8]
        super().__init__(description or f"track conflict on {shown}")


def _progressions_meet(p: Progression, q: Progression) -> Optional[int]:
    """Smallest common track of two progressions, or None."""
    g = math.gcd(p.step, q.step)
    if (q.start - p.start) % g:
        return None
    lo = max(p.start, q.start)
    for k in range(lo, lo + p.step * q.step + 1):
        if k in p and k in q:
            return k
    return None


@dataclass(frozen=True)
class Seq:
    """A sequence type: explicit entries plus progression families."""

    entries: tuple[tuple[int, "SType"], ...] = ()
    families: tuple[tuple[Progression, "SType"], ...] = ()

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e[0]))
        families = tuple(sorted(self.families, key=lambda f: (f[0].start, f[0].step)))
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "families", families)
        tracks = [k for k, _ in entries]
        clash = {k for k in tracks if tracks.count(k) > 1}
        clash |= {k for k in tracks if k < 2}
        for k in tracks:
            clash |= {k for p, _ in families if k in p}
        for i, (p, _) in enumerate(families):
            for q, _ in families[i + 1:]:
                m = _progressions_meet(p, q)
                if m is not None:
                    clash.add(m)
        if clash:
            raise TrackConflict(clash)

    @staticmethod
    def of(mapping: dict[int, "SType"]) -> "Seq":
        return Seq(tuple(mapping.items()))

    def as_dict(self) -> dict[int, "SType"]:
        if self.families:
            raise ValueError("sequence has infinite families")
        return dict(self.entries)

    def get(self, k: int) -> Optional["SType"]:
        for j, s in self.entries:
            if j == k:
                return s
        for p, s in self.families:
            if k in p:
                return s
        return None

    def tracks(self, bound: Optional[int] = None) -> list[int]:
        ks = [k for k, _ in self.entries]
        if self.families:
            if bound is None:
                raise ValueError("a bound is needed to list family tracks")
            for p, _ in self.families:
                ks.extend(p.upto(bound))
        return sorted(ks)

    def is_finite(self) -> bool:
        return not self.families

    def __len__(self) -> int:
        if self.families:
            raise ValueError("infinite sequence")
        return len(self.entries)


@dataclass(frozen=True)
class SArrow:
    source: Seq
    target: "SType"

    def __str__(self) -> str:
        return format_type(self)


@dataclass(frozen=True)
class Multiset:
    items: tuple[tuple["RType", float], ...] = ()

    def __post_init__(self):
        merged: dict = {}
        for ty, m in self.items:
            if m != OMEGA and (int(m) != m or m < 1):
                raise ValueError(f"bad multiplicity {m}")
            merged[ty] = mult_add(merged.get(ty, 0), m)
        items = tuple(sorted(merged.items(), key=lambda e: format_type(e[0])))
        object.__setattr__(self, "items", items)

    @staticmethod
    def of(*types: "RType") -> "Multiset":
        return Multiset(tuple((ty, 1) for ty in types))

    @staticmethod
    def omega(ty: "RType") -> "Multiset":
        return Multiset(((ty, OMEGA),))

    def __add__(self, other: "Multiset") -> "Multiset":
        return Multiset(self.items + other.items)

    def scale(self, m: float) -> "Multiset":
        if m == 0:
            return Multiset()
        return Multiset(tuple((ty, mult_mul(k, m)) for ty, k in self.items))

    def size(self) -> float:
        return sum((m for _, m in self.items), 0)


@dataclass(frozen=True)
class RArrow:
    source: Multiset
    target: "RType"

    def __str__(self) -> str:
        return format_type(self)


SType = Union[Atom, TVar, Mu, SArrow]
RType = Union[Atom, TVar, Mu, RArrow]
AnyType = Union[Atom, TVar, Mu, SArrow, RArrow]
EMPTY_SEQ = Seq()
EMPTY_MULTISET = Multiset()


def mult_add(m: float, n: float) -> float:
    """Multiplicity sum; OMEGA absorbs everything."""
    return OMEGA if OMEGA in (m, n) else m + n


def mult_mul(m: float, n: float) -> float:
    if m == 0 or n == 0:
        return 0
    return OMEGA if OMEGA in (m, n) else m * n


def format_mult(m: float) -> str:
    return "w" if m == OMEGA else str(int(m))


# ---------------------------------------------------------------------------
# Recursion


class NotContractive(ValueError):
    pass


def _guarded(body: AnyType, name: str) -> bool:
    """True when every free occurrence of `name` in `body` sits under an arrow."""
    t = body
    while isinstance(t, Mu):
        if t.name == name:
            return True
        t = t.body
    return not (isinstance(t, TVar) and t.name == name)


def mu(name: str, body: AnyType) -> AnyType:
    """Smart constructor: checks contractiveness and drops vacuous binders."""
    if name not in free_tvars(body):
        return body
    if not _guarded(body, name):
        raise NotContractive(f"μ{name} is not contractive")
    return Mu(name, body)


def free_tvars(t: AnyType) -> frozenset[str]:
    if isinstance(t, Atom):
        return frozenset()
    if isinstance(t, TVar):
        return frozenset((t.name,))
    if isinstance(t, Mu):
        return free_tvars(t.body) - {t.name}
    if isinstance(t, SArrow):
        out = free_tvars(t.target)
        for _, s in t.source.entries + t.source.families:
            out |= free_tvars(s)
        return out
    out = free_tvars(t.target)
    for s, _ in t.source.items:
        out |= free_tvars(s)
    return out


def tsubst(t: AnyType, name: str, value: AnyType) -> AnyType:
    """Substitute a closed type for a type variable."""
    if isinstance(t, Atom):
        return t
    if isinstance(t, TVar):
        return value if t.name == name else t
    if isinstance(t, Mu):
        return t if t.name == name else Mu(t.name, tsubst(t.body, name, value))
    if isinstance(t, SArrow):
        src = Seq(
            tuple((k, tsubst(s, name, value)) for k, s in t.source.entries),
            tuple((p, tsubst(s, name, value)) for p, s in t.source.families),
        )
        return SArrow(src, tsubst(t.target, name, value))
    src_m = Multiset(tuple((tsubst(s, name, value), m) for s, m in t.source.items))
    return RArrow(src_m, tsubst(t.target, name, value))


def unfold(t: AnyType) -> AnyType:
    """Unfold leading Mu binders until an atom or arrow shows."""
    while isinstance(t, Mu):
        t = tsubst(t.body, t.name, t)
    if isinstance(t, TVar):
        raise ValueError(f"free type variable {t.name}")
    return t


# ---------------------------------------------------------------------------
# Bisimulation


class _Graph:
    """Finite graph of unfolded subterms reachable from a set of roots."""

    def __init__(self, roots: Iterable[AnyType]):
        self.index: dict[AnyType, int] = {}
        self.nodes: list[AnyType] = []
        for r in roots:
            self.add(r)

    def add(self, t: AnyType) -> int:
        t = unfold(t)
        if t in self.index:
            return self.index[t]
        stack = [t]
        self.index[t] = len(self.nodes)
        self.nodes.append(t)
        while stack:
            u = stack.pop()
            for child in _children(u):
                c = unfold(child)
                if c not in self.index:
                    self.index[c] = len(self.nodes)
                    self.nodes.append(c)
                    stack.append(c)
        return self.index[t]

    def classes(self) -> list[int]:
        """Coarsest bisimulation, by iterated signature refinement."""
        cls = [0] * len(self.nodes)
        count = -1
        while True:
            sigs: dict = {}
            new = []
            for u in self.nodes:
                sig = self._signature(u, cls)
                new.append(sigs.setdefault(sig, len(sigs)))
            if len(sigs) == count:
                return new
            cls, count = new, len(sigs)

    def _signature(self, u: AnyType, cls: list[int]):
        ix = lambda t: cls[self.index[unfold(t)]]
        if isinstance(u, Atom):
            return ("atom", u.name)
        if isinstance(u, SArrow):
            ent = tuple((k, ix(s)) for k, s in u.source.entries)
            fam = tuple(((p.start, p.step), ix(s)) for p, s in u.source.families)
            return ("s", ent, fam, ix(u.target))
        assert isinstance(u, RArrow)
        return ("r", _multiset_sig(u.source, ix), ix(u.target))


def _multiset_sig(m: Multiset, ix) -> tuple:
    acc: dict[int, float] = {}
    for s, k in m.items:
        c = ix(s)
        acc[c] = mult_add(acc.get(c, 0), k)
    return tuple(sorted(acc.items()))


def _children(u: AnyType) -> list[AnyType]:
    if isinstance(u, SArrow):
        return [s for _, s in u.source.entries] + [s for _, s in u.source.families] + [u.target]
    if isinstance(u, RArrow):
        return [s for s, _ in u.source.items] + [u.target]
    return []


def type_equal(a: AnyType, b: AnyType) -> bool:
    """Equality of (possibly rational) types as infinite trees."""
    if a == b:
        return True
    g = _Graph([a, b])
    cls = g.classes()
    return cls[g.add(a)] == cls[g.add(b)]


rtype_equal = type_equal
stype_equal = type_equal


def multiset_equal(a: Multiset, b: Multiset) -> bool:
    if a == b:
        return True
    g = _Graph([s for s, _ in a.items] + [s for s, _ in b.items])
    cls = g.classes()
    ix = lambda t: cls[g.add(t)]
    return _multiset_sig(a, ix) == _multiset_sig(b, ix)


def seq_equal(a: Seq, b: Seq) -> bool:
    if a == b:
        return True
    if [k for k, _ in a.entries] != [k for k, _ in b.entries]:
        return False
    if [p for p, _ in a.families] != [p for p, _ in b.families]:
        return False
    pairs = list(zip([s for _, s in a.entries + a.families], [s for _, s in b.entries + b.families]))
    return all(type_equal(x, y) for x, y in pairs)


# ---------------------------------------------------------------------------
# Sequence algebra


def seq_union(f1: Seq, f2: Seq) -> Seq:
    """Disjoint union of two sequence types; raises TrackConflict on overlap."""
    clash = {k for k, _ in f1.entries} & {k for k, _ in f2.entries}
    for k, _ in f1.entries:
        clash |= {k for p, _ in f2.families if k in p}
    for k, _ in f2.entries:
        clash |= {k for p, _ in f1.families if k in p}
    for p, _ in f1.families:
        for q, _ in f2.families:
            m = _progressions_meet(p, q)
            if m is not None:
                clash.add(m)
    if clash:
        raise TrackConflict(clash)
    return Seq(f1.entries + f2.entries, f1.families + f2.families)


# ---------------------------------------------------------------------------
# Supports and candidates

Word = tuple[int, ...]


def stype_support(t: SType, depth: int, max_track: Optional[int] = None) -> frozenset[Word]:
    """Positions of length <= depth in the (unfolded) type tree.

    Families contribute the tracks up to `max_track`, which is then required.
    """
    out: set[Word] = set()

    def go(u: SType, c: Word) -> None:
        out.add(c)
        if len(c) >= depth:
            return
        u = unfold(u)
        if isinstance(u, SArrow):
            go(u.target, c + (1,))
            for k, s in u.source.entries:
                go(s, c + (k,))
            for p, s in u.source.families:
                if max_track is None:
                    raise ValueError("max_track is required for sequences with families")
                for k in p.upto(max_track):
                    go(s, c + (k,))
        elif not isinstance(u, Atom):
            raise TypeError(f"not a sequence type: {u!r}")

    go(t, ())
    return frozenset(out)


def is_support_candidate(c: Iterable[Word]) -> bool:
    """Nonempty, closed under dropping a last letter, and every c·k (k >= 2) has c·1."""
    cs = set(map(tuple, c))
    if not cs:
        return False
    for w in cs:
        if w and (w[-1] < 1 or w[:-1] not in cs):
            return False
        if w and w[-1] >= 2 and w[:-1] + (1,) not in cs:
            return False
    return True


class NotACandidate(ValueError):
    pass


DEFAULT_ATOM = Atom("o")


def decorate_candidate(c: Iterable[Word], atom: Atom = DEFAULT_ATOM) -> SType:
    """The canonical type with support c: leaves get `atom`, inner nodes arrows."""
    cs = set(map(tuple, c))
    if not is_support_candidate(cs):
        raise NotACandidate("not a support candidate")

    def build(w: Word) -> SType:
        if w + (1,) not in cs:
            return atom
        kids = sorted(v[-1] for v in cs if len(v) == len(w) + 1 and v[:-1] == w and v[-1] >= 2)
        return SArrow(Seq(tuple((k, build(w + (k,))) for k in kids)), build(w + (1,)))

    return build(())


def label_at(t: SType, c: Word) -> Optional[str]:
    """'→' for an arrow node, the atom name for a leaf, None off the support."""
    u = unfold(t)
    for k in c:
        if not isinstance(u, SArrow):
            return None
        nxt = u.target if k == 1 else u.source.get(k)
        if nxt is None:
            return None
        u = unfold(nxt)
    if isinstance(u, SArrow):
        return "→"
    assert isinstance(u, Atom)
    return u.name


# ---------------------------------------------------------------------------
# Orders and the S to R collapse


def type_order(t: AnyType) -> float:
    """Number of arrows along the target spine; OMEGA if the spine cycles."""
    seen: set[AnyType] = set()
    n = 0
    u = unfold(t)
    while isinstance(u, (SArrow, RArrow)):
        if u in seen:
            return OMEGA
        seen.add(u)
        n += 1
        u = unfold(u.target)
    return n


def collapse_s_to_r(t: SType) -> RType:
    if isinstance(t, (Atom, TVar)):
        return t
    if isinstance(t, Mu):
        return Mu(t.name, collapse_s_to_r(t.body))
    items = [(collapse_s_to_r(s), 1) for _, s in t.source.entries]
    items += [(collapse_s_to_r(s), OMEGA) for _, s in t.source.families]
    return RArrow(Multiset(tuple(items)), collapse_s_to_r(t.target))


def collapse_seq(s: Seq) -> Multiset:
    items = [(collapse_s_to_r(x), 1) for _, x in s.entries]
    items += [(collapse_s_to_r(x), OMEGA) for _, x in s.families]
    return Multiset(tuple(items))


# ---------------------------------------------------------------------------
# Text syntax


def format_type(t: AnyType) -> str:
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, Mu):
        return f"mu {t.name}. {format_type(t.body)}"
    if isinstance(t, SArrow):
        parts = [f"{k}.{_arg(s)}" for k, s in t.source.entries]
        parts += [f"{p.start}+{p.step}n.{_arg(s)}" for p, s in t.source.families]
        return f"({', '.join(parts)}) -> {_target(t.target)}"
    parts = []
    for s, m in t.source.items:
        parts.append(_arg(s) + ("" if m == 1 else f"^{format_mult(m)}"))
    return f"[{', '.join(parts)}] -> {_target(t.target)}"


def format_seq(s: Seq) -> str:
    parts = [f"{k}.{_arg(x)}" for k, x in s.entries]
    parts += [f"{p.start}+{p.step}n.{_arg(x)}" for p, x in s.families]
    return "(" + ", ".join(parts) + ")"


def format_multiset(m: Multiset) -> str:
    return "[" + ", ".join(_arg(s) + ("" if k == 1 else f"^{format_mult(k)}") for s, k in m.items) + "]"


def _arg(t: AnyType) -> str:
    return f"({format_type(t)})" if isinstance(t, (Mu, SArrow, RArrow)) else format_type(t)


def _target(t: AnyType) -> str:
    return f"({format_type(t)})" if isinstance(t, Mu) else format_type(t)


class TypeSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


_TYTOK = re.compile(
    r"\s*(?:(?P<arrow>->|→)|(?P<fam>\d+\s*\+\s*\d+\s*n)|(?P<num>\d+)|(?P<mu>mu\b|μ)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<sym>[()\[\],.^]))"
)


class _TypeParser:
    def __init__(self, text: str, variables: frozenset[str] = frozenset()):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TYTOK.match(text, pos)
            if m is None:
                raise TypeSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
            kind = m.lastgroup
            assert kind is not None
            val = m.group(kind)
            if kind == "sym":
                kind = val
            self.toks.append((kind, val, m.start(m.lastgroup)))
            pos = m.end()
        self.i = 0
        self.variables = set(variables)

    def peek(self, ahead: int = 0) -> Optional[str]:
        j = self.i + ahead
        return self.toks[j][0] if j < len(self.toks) else None

    def take(self, kind: str) -> str:
        if self.peek() != kind:
            off = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
            raise TypeSyntaxError(f"expected {kind!r}", off)
        v = self.toks[self.i][1]
        self.i += 1
        return v

    def type(self) -> AnyType:
        if self.peek() == "mu":
            self.i += 1
            name = self.take("id")
            self.take(".")
            self.variables.add(name)
            body = self.type()
            self.variables.discard(name)
            return mu(name, body)
        if self.peek() == "[":
            src = self.multiset()
            if self.peek() == "^":
                src = src.scale(self.mult())
            self.take("arrow")
            return RArrow(src, self.type())
        if self.peek() == "(" and self._is_seq():
            seq = self.seq()
            self.take("arrow")
            return SArrow(seq, self.type())
        if self.peek() == "(":
            self.i += 1
            head = self.type()
            self.take(")")
        else:
            name = self.take("id")
            head = TVar(name) if name in self.variables else Atom(name)
        if self.peek() == "arrow":
            # plain `A -> B` abbreviates `[A] -> B`
            self.i += 1
            return RArrow(Multiset.of(head), self.type())
        return head

    def mult(self) -> float:
        self.take("^")
        if self.peek() == "num":
            return int(self.take("num"))
        if self.take("id") not in ("w", "ω"):
            raise TypeSyntaxError("multiplicity must be a number or w", self.toks[self.i - 1][2])
        return OMEGA

    def _is_seq(self) -> bool:
        nxt = self.peek(1)
        return nxt in (")", "fam") or (nxt == "num" and self.peek(2) == ".")

    def seq(self) -> Seq:
        self.take("(")
        entries, families = [], []
        while self.peek() != ")":
            if self.peek() == "fam":
                a, b = re.findall(r"\d+", self.take("fam"))
                self.take(".")
                families.append((Progression(int(a), int(b)), self.type()))
            else:
                k = int(self.take("num"))
                self.take(".")
                entries.append((k, self.type()))
            if self.peek() == ",":
                self.i += 1
        self.take(")")
        return Seq(tuple(entries), tuple(families))

    def multiset(self) -> Multiset:
        self.take("[")
        items = []
        while self.peek() != "]":
            ty = self.type()
            m: float = self.mult() if self.peek() == "^" else 1
            items.append((ty, m))
            if self.peek() == ",":
                self.i += 1
        self.take("]")
        return Multiset(tuple(items))


def parse_type(text: str, variables: Iterable[str] = ()) -> AnyType:
    p = _TypeParser(text.replace("ω", "w"), frozenset(variables))
    t = p.type()
    if p.peek() is not None:
        raise TypeSyntaxError("trailing input", p.toks[p.i][2])
    return t


def resolve_equations(equations: dict[str, str | AnyType], root: str) -> AnyType:
    """Turn a named equation system into a closed μ-type for `root`."""
    names = set(equations)
    parsed = {
        k: parse_type(v, names) if isinstance(v, str) else v for k, v in equations.items()
    }

    def go(name: str, stack: tuple[str, ...]) -> AnyType:
        body = parsed[name]
        for other in sorted(free_tvars(body) - {name}):
            if other not in parsed:
                raise ValueError(f"undefined type name {other}")
            if other not in stack:
                body = tsubst(body, other, go(other, stack + (name,)))
        return mu(name, body)

    if root not in parsed:
        raise ValueError(f"undefined root {root}")
    return go(root, ())


def parse_type_document(text: str) -> AnyType:
    """Read a type file: JSON {atoms, equations, root} or `name = type` lines.

    In the line format a line without '=' is the root type; otherwise the
    root is the first equation's name.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        doc = json.loads(stripped)
        eqs = doc.get("equations", {})
        root = doc["root"]
        if root in eqs:
            return resolve_equations(eqs, root)
        return close_type(parse_type(root, eqs.keys()), eqs)
    eqs: dict[str, str] = {}
    root_text: Optional[str] = None
    for line in stripped.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            name, body = line.split("=", 1)
            eqs[name.strip()] = body.strip()
        else:
            root_text = line
    if root_text is None:
        if not eqs:
            raise TypeSyntaxError("empty type document", 0)
        return resolve_equations(eqs, next(iter(eqs)))
    return close_type(parse_type(root_text, eqs.keys()), eqs)


def close_type(t: AnyType, eqs) -> AnyType:
    for name in sorted(free_tvars(t)):
        t = tsubst(t, name, resolve_equations(dict(eqs), name))
    return t


def type_to_document(t: AnyType) -> dict:
    atoms: set[str] = set()

    def collect(u: AnyType) -> None:
        if isinstance(u, Atom):
            atoms.add(u.name)
        for c in _children(u) if not isinstance(u, Mu) else [u.body]:
            collect(c)

    collect(t)
    return {"atoms": sorted(atoms), "equations": {}, "root": format_type(t)}
