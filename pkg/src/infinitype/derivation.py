"""Tracked (S) derivations, regular (R) derivation graphs, and their checkers.

An S-derivation is a finite tree laid over a term: axioms carry their
axiom track and type, abstraction nodes have one child on track 0, and
application nodes have the function on track 1 and arguments on tracks
>= 2.  The variable of an axiom and the binder of an abstraction are read
from the term, so the same tree shape can be checked against any term.

Judgments are always recomputed bottom-up.  Optional `declared` judgments
on nodes are compared against the recomputed ones.

R-derivations are graphs of explicitly judged nodes.  Sharing a node at
several places (for instance a function and an argument repeated ω times)
is how the regular infinite derivations of non-normalizing terms are
written down.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from .coding import Coding, DefaultCoding
from .terms import (
    Abs,
    App,
    Position,
    Residuation,
    Term,
    Var,
    NotARedex,
    beta_reduce_at,
    collapse_word,
    format_position,
    is_redex,
    replace_at,
    substitute,
    subterm,
    try_subterm,
)
from .types import (
    EMPTY_MULTISET,
    OMEGA,
    close_type,
    parse_type,
    resolve_equations,
    EMPTY_SEQ,
    Multiset,
    RArrow,
    RType,
    SArrow,
    Seq,
    SType,
    TrackConflict,
    collapse_s_to_r,
    format_multiset,
    format_seq,
    format_type,
    label_at,
    multiset_equal,
    seq_equal,
    seq_union,
    stype_support,
    type_equal,
    unfold,
)

# ---------------------------------------------------------------------------
# Contexts


@dataclass(frozen=True)
class SContext:
    """Finite map from variables to sequence types (absent = empty sequence)."""

    entries: tuple[tuple[str, Seq], ...] = ()

    def __post_init__(self):
        clean = tuple(sorted((x, s) for x, s in self.entries if s.entries or s.families))
        object.__setattr__(self, "entries", clean)

    @staticmethod
    def of(mapping: dict[str, Seq]) -> "SContext":
        return SContext(tuple(mapping.items()))

    def get(self, x: str) -> Seq:
        for y, s in self.entries:
            if y == x:
                return s
        return EMPTY_SEQ

    def without(self, x: str) -> "SContext":
        return SContext(tuple((y, s) for y, s in self.entries if y != x))

    def union(self, other: "SContext") -> "SContext":
        merged = dict(self.entries)
        for x, s in other.entries:
            merged[x] = seq_union(merged[x], s) if x in merged else s
        return SContext.of(merged)

    def variables(self) -> list[str]:
        return [x for x, _ in self.entries]

    def __str__(self) -> str:
        return ", ".join(f"{x}:{format_seq(s)}" for x, s in self.entries)


def scontext_equal(a: SContext, b: SContext) -> bool:
    names = set(a.variables()) | set(b.variables())
    return all(seq_equal(a.get(x), b.get(x)) for x in names)


@dataclass(frozen=True)
class SJudgment:
    context: SContext
    type: SType

    def __str__(self) -> str:
        return f"{self.context} ⊢ {format_type(self.type)}"


def sjudgment_equal(a: SJudgment, b: SJudgment) -> bool:
    return scontext_equal(a.context, b.context) and type_equal(a.type, b.type)


# ---------------------------------------------------------------------------
# S-derivation trees


@dataclass(frozen=True)
class SAx:
    track: int
    type: SType
    declared: Optional[SJudgment] = None


@dataclass(frozen=True)
class SAbs:
    child: "SNode"
    declared: Optional[SJudgment] = None


@dataclass(frozen=True)
class SApp:
    fun: "SNode"
    args: tuple[tuple[int, "SNode"], ...] = ()
    declared: Optional[SJudgment] = None


SNode = Union[SAx, SAbs, SApp]


@dataclass(frozen=True)
class SDerivation:
    term: Term
    root: SNode


def children(node: SNode) -> list[tuple[int, SNode]]:
    if isinstance(node, SAx):
        return []
    if isinstance(node, SAbs):
        return [(0, node.child)]
    return [(1, node.fun)] + list(node.args)


def walk(node: SNode, a: Position = ()) -> Iterator[tuple[Position, SNode]]:
    stack = [(a, node)]
    while stack:
        pos, n = stack.pop()
        yield pos, n
        for k, c in reversed(children(n)):
            stack.append((pos + (k,), c))


def node_at(node: SNode, a: Position) -> SNode:
    for k in a:
        for j, c in children(node):
            if j == k:
                node = c
                break
        else:
            raise KeyError(f"position {format_position(a)} is outside the derivation")
    return node


def dsupport(p: SDerivation) -> frozenset[Position]:
    return frozenset(a for a, _ in walk(p.root))


# ---------------------------------------------------------------------------
# Checking


@dataclass(frozen=True)
class Violation:
    position: Position
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{format_position(self.position)}: [{self.kind}] {self.message}"


@dataclass
class Report:
    violations: list[Violation] = field(default_factory=list)
    judgment: Optional[object] = None

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, position: Position, kind: str, message: str) -> None:
        self.violations.append(Violation(tuple(position), kind, message))

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        if self.valid:
            return f"valid: {self.judgment}"
        return "invalid:\n" + "\n".join(f"  {v}" for v in self.violations)


def check_sderiv(t: Term, node: SNode | SDerivation, coding: Optional[Coding] = None) -> Report:
    """Check every rule instance of an S-derivation laid over t.

    With a coding, axiom tracks must additionally equal the code of their
    own outer position.
    """
    if isinstance(node, SDerivation):
        node = node.root
    report = Report()
    report.judgment = _check(t, node, (), coding, report)
    return report


def _check(t: Term, node: SNode, a: Position, coding, report: Report) -> Optional[SJudgment]:
    j = _infer(t, node, a, coding, report)
    if j is not None and node.declared is not None and not sjudgment_equal(j, node.declared):
        report.add(a, "declared", f"declared {node.declared} but the rule gives {j}")
    return j


def _infer(t: Term, node: SNode, a: Position, coding, report: Report) -> Optional[SJudgment]:
    if isinstance(node, SAx):
        if not isinstance(t, Var):
            report.add(a, "rule", f"axiom laid over a non-variable {type(t).__name__}")
            return None
        ok = True
        if node.track < 2:
            report.add(a, "track", f"axiom track {node.track} is below 2")
            ok = False
        if coding is not None and node.track != coding.encode(a):
            report.add(a, "coding", f"axiom track {node.track} differs from the coded {coding.encode(a)}")
        if not ok:
            return None
        return SJudgment(SContext.of({t.name: Seq(((node.track, node.type),))}), node.type)
    if isinstance(node, SAbs):
        if not isinstance(t, Abs):
            report.add(a, "rule", f"abstraction rule laid over a non-abstraction {type(t).__name__}")
            return None
        j = _check(t.body, node.child, a + (0,), coding, report)
        if j is None:
            return None
        return SJudgment(j.context.without(t.var), SArrow(j.context.get(t.var), j.type))
    if not isinstance(t, App):
        report.add(a, "rule", f"application rule laid over a non-application {type(t).__name__}")
        return None
    jf = _check(t.fun, node.fun, a + (1,), coding, report)
    tracks = [k for k, _ in node.args]
    bad = sorted({k for k in tracks if tracks.count(k) > 1 or k < 2})
    if bad:
        report.add(a, "track", f"argument tracks {bad} are repeated or below 2")
    jargs = {}
    for k, c in node.args:
        jargs[k] = _check(t.arg, c, a + (k,), coding, report)
    if jf is None or bad or any(j is None for j in jargs.values()):
        return None
    ft = unfold(jf.type)
    if not isinstance(ft, SArrow):
        report.add(a + (1,), "arrow", f"function has non-arrow type {format_type(ft)}")
        return None
    if not ft.source.is_finite():
        report.add(a + (1,), "arrow", "function source is an infinite sequence")
        return None
    src = ft.source.as_dict()
    if set(src) != set(jargs):
        report.add(a, "relevance", f"source tracks {sorted(src)} but argument tracks {sorted(jargs)}")
        return None
    ok = True
    for k in sorted(src):
        if not type_equal(src[k], jargs[k].type):
            report.add(a + (k,), "mismatch", f"argument has {format_type(jargs[k].type)}, source expects {format_type(src[k])}")
            ok = False
    ctx = jf.context
    for k in sorted(jargs):
        try:
            ctx = ctx.union(jargs[k].context)
        except TrackConflict as exc:
            report.add(a, "conflict", f"context track conflict on {sorted(exc.tracks)}")
            ok = False
    return SJudgment(ctx, ft.target) if ok else None


class InvalidDerivation(ValueError):
    def __init__(self, report: Report):
        super().__init__(str(report))
        self.report = report


def judgments(t: Term, node: SNode | SDerivation) -> dict[Position, SJudgment]:
    """Judgment at every outer position of a valid derivation."""
    if isinstance(node, SDerivation):
        node = node.root
    rep = check_sderiv(t, node)
    if not rep.valid:
        raise InvalidDerivation(rep)
    out: dict[Position, SJudgment] = {}
    _fill(t, node, (), out)
    return out


def _fill(t: Term, node: SNode, a: Position, out: dict) -> SJudgment:
    if isinstance(node, SAx):
        assert isinstance(t, Var)
        j = SJudgment(SContext.of({t.name: Seq(((node.track, node.type),))}), node.type)
    elif isinstance(node, SAbs):
        assert isinstance(t, Abs)
        jc = _fill(t.body, node.child, a + (0,), out)
        j = SJudgment(jc.context.without(t.var), SArrow(jc.context.get(t.var), jc.type))
    else:
        assert isinstance(t, App)
        jf = _fill(t.fun, node.fun, a + (1,), out)
        ctx = jf.context
        for k, c in node.args:
            ctx = ctx.union(_fill(t.arg, c, a + (k,), out).context)
        ft = unfold(jf.type)
        assert isinstance(ft, SArrow)
        j = SJudgment(ctx, ft.target)
    out[a] = j
    return j


def conclusion(t: Term, node: SNode | SDerivation) -> SJudgment:
    rep = check_sderiv(t, node)
    if not rep.valid:
        raise InvalidDerivation(rep)
    return rep.judgment  # type: ignore[return-value]


def judgment_at(p: SDerivation, a: Position) -> tuple[SContext, Term, SType]:
    js = judgments(p.term, p.root)
    a = tuple(a)
    if a not in js:
        raise KeyError(f"position {format_position(a)} is outside the derivation")
    j = js[a]
    return j.context, subterm(p.term, a), j.type


def bisupport(p: SDerivation, depth: int = 64) -> dict[tuple[Position, Position], str]:
    """Every (a, c) with c in the support of the type at a, labelled by '→' or an atom."""
    out = {}
    for a, j in judgments(p.term, p.root).items():
        for c in stype_support(j.type, depth):
            out[(a, c)] = label_at(j.type, c)  # type: ignore[assignment]
    return out


def axiom_positions(p: SDerivation, a: Position, x: str) -> frozenset[Position]:
    """Axioms for x above a that no abstraction between a and them binds."""
    a = tuple(a)
    start = node_at(p.root, a)
    out = set()

    def go(u: Term, n: SNode, pos: Position) -> None:
        if isinstance(n, SAx):
            if isinstance(u, Var) and u.name == x:
                out.add(pos)
            return
        if isinstance(n, SAbs):
            if isinstance(u, Abs) and u.var != x:
                go(u.body, n.child, pos + (0,))
            return
        if isinstance(u, App):
            go(u.fun, n.fun, pos + (1,))
            for k, c in n.args:
                go(u.arg, c, pos + (k,))

    go(subterm(p.term, a), start, a)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Subject reduction and expansion


class DerivationTracks:
    """Axiom tracks read off a concrete derivation (for `Residuation`)."""

    def __init__(self, p: SDerivation):
        self.p = p
        self.nodes = dict(walk(p.root))
        self._slots: dict[Position, dict[int, Position]] = {}

    def track(self, t: Term, var_pos: Position) -> int:
        n = self.nodes.get(tuple(var_pos))
        if not isinstance(n, SAx):
            raise KeyError(f"no axiom at {format_position(var_pos)}")
        return n.track

    def slot(self, t: Term, lam_pos: Position, k: int) -> Optional[Position]:
        lam_pos = tuple(lam_pos)
        if lam_pos not in self._slots:
            table: dict[int, Position] = {}
            u = try_subterm(self.p.term, lam_pos)
            if isinstance(u, Abs) and lam_pos + (0,) in self.nodes:
                for a0 in axiom_positions(self.p, lam_pos + (0,), u.var):
                    table[self.nodes[a0].track] = a0  # type: ignore[union-attr]
            self._slots[lam_pos] = table
        return self._slots[lam_pos].get(k)


def redex_copies(p: SDerivation, b: Position) -> list[Position]:
    b = collapse_word(b)
    return sorted(a for a, _ in walk(p.root) if collapse_word(a) == b)


def _bound_here(body: Term, x: str, beta: Position) -> bool:
    """Whether body|β is an occurrence of x free in body."""
    u = body
    for k in beta:
        if isinstance(u, Abs) and u.var == x:
            return False
        u = subterm(u, (k,))
    return isinstance(u, Var) and u.name == x


def subject_reduce(t: Term, p: SDerivation, b: Position) -> tuple[Term, SDerivation, Residuation]:
    """Fire the redex at b in the term and in every copy inside the derivation."""
    b = collapse_word(b)
    if not is_redex(t, b):
        raise NotARedex(f"no redex at {format_position(b)}")
    rep = check_sderiv(t, p.root)
    if not rep.valid:
        raise InvalidDerivation(rep)
    redex = subterm(t, b)
    assert isinstance(redex, App) and isinstance(redex.fun, Abs)
    x, body = redex.fun.var, redex.fun.body
    copies = set(redex_copies(p, b))

    def plug(n: SNode, u: Term, beta: Position, args: dict[int, SNode]) -> SNode:
        if isinstance(n, SAx):
            return args[n.track] if _bound_here(body, x, beta) else n
        if isinstance(n, SAbs):
            return SAbs(plug(n.child, u.body, beta + (0,), args))  # type: ignore[union-attr]
        return SApp(
            plug(n.fun, u.fun, beta + (1,), args),  # type: ignore[union-attr]
            tuple((k, plug(c, u.arg, beta + (k,), args)) for k, c in n.args),  # type: ignore[union-attr]
        )

    def rebuild(n: SNode, a: Position) -> SNode:
        if a in copies:
            assert isinstance(n, SApp) and isinstance(n.fun, SAbs)
            return plug(n.fun.child, body, (), dict(n.args))
        if isinstance(n, SAx):
            return n
        if isinstance(n, SAbs):
            return SAbs(rebuild(n.child, a + (0,)))
        return SApp(rebuild(n.fun, a + (1,)), tuple((k, rebuild(c, a + (k,))) for k, c in n.args))

    t2 = beta_reduce_at(t, b)
    p2 = SDerivation(t2, rebuild(p.root, ()))
    return t2, p2, Residuation(t, b, DerivationTracks(p))


@dataclass(frozen=True)
class RedexSpec:
    """Describes the redex (λvar.body) arg placed at `position` by an expansion."""

    position: Position
    var: str
    body: Term
    arg: Term


class InconsistentRedex(ValueError):
    pass


def alpha_equal(a: Term, b: Term, env_a: tuple = (), env_b: tuple = ()) -> bool:
    if isinstance(a, Var) and isinstance(b, Var):
        ia = next((i for i, n in enumerate(reversed(env_a)) if n == a.name), None)
        ib = next((i for i, n in enumerate(reversed(env_b)) if n == b.name), None)
        return ia == ib and (ia is not None or a.name == b.name)
    if isinstance(a, Abs) and isinstance(b, Abs):
        return alpha_equal(a.body, b.body, env_a + (a.var,), env_b + (b.var,))
    if isinstance(a, App) and isinstance(b, App):
        return alpha_equal(a.fun, b.fun, env_a, env_b) and alpha_equal(a.arg, b.arg, env_a, env_b)
    return False


def subject_expand(
    t2: Term,
    p2: SDerivation,
    spec: RedexSpec,
    track_of: Optional[Callable[[Position], int]] = None,
) -> tuple[Term, SDerivation]:
    """Undo one β-step: cut every typed copy of the argument out of the body.

    The axiom standing for the copy found at body position β inside the
    copy at a gets the track `track_of(a·1·0·β)` (default coding when not
    given), so reducing the result gives back `p2` exactly.
    """
    if track_of is None:
        track_of = DefaultCoding().encode
    b = collapse_word(spec.position)
    target = try_subterm(t2, b)
    if target is None or not alpha_equal(substitute(spec.body, spec.var, spec.arg), target):
        raise InconsistentRedex(f"body[arg/{spec.var}] does not match the subterm at {format_position(b)}")
    rep = check_sderiv(t2, p2.root)
    if not rep.valid:
        raise InvalidDerivation(rep)
    x = spec.var
    copies = set(redex_copies(p2, b))
    judg = judgments(t2, p2.root)

    def split(n: SNode, r: Term, a: Position, beta: Position, args: dict) -> SNode:
        if isinstance(r, Var) and r.name == x:
            k = track_of(a + (1, 0) + beta)
            if k in args:
                raise InconsistentRedex(f"track {k} used twice")
            args[k] = n
            return SAx(k, judg[a + beta].type)
        if isinstance(r, Var) or (isinstance(r, Abs) and r.var == x):
            return n
        if isinstance(r, Abs):
            assert isinstance(n, SAbs)
            return SAbs(split(n.child, r.body, a, beta + (0,), args))
        assert isinstance(n, SApp)
        return SApp(
            split(n.fun, r.fun, a, beta + (1,), args),
            tuple((k, split(c, r.arg, a, beta + (k,), args)) for k, c in n.args),
        )

    def rebuild(n: SNode, a: Position) -> SNode:
        if a in copies:
            args: dict[int, SNode] = {}
            body = split(n, spec.body, a, (), args)
            return SApp(SAbs(body), tuple(sorted(args.items())))
        if isinstance(n, SAx):
            return n
        if isinstance(n, SAbs):
            return SAbs(rebuild(n.child, a + (0,)))
        return SApp(rebuild(n.fun, a + (1,)), tuple((k, rebuild(c, a + (k,))) for k, c in n.args))

    t = replace_at(t2, b, App(Abs(x, spec.body), spec.arg))
    return t, SDerivation(t, rebuild(p2.root, ()))


# ---------------------------------------------------------------------------
# R-derivations


@dataclass(frozen=True)
class RContext:
    entries: tuple[tuple[str, Multiset], ...] = ()

    def __post_init__(self):
        clean = tuple(sorted((x, m) for x, m in self.entries if m.items))
        object.__setattr__(self, "entries", clean)

    @staticmethod
    def of(mapping: dict[str, Multiset]) -> "RContext":
        return RContext(tuple(mapping.items()))

    def get(self, x: str) -> Multiset:
        for y, m in self.entries:
            if y == x:
                return m
        return EMPTY_MULTISET

    def without(self, x: str) -> "RContext":
        return RContext(tuple((y, m) for y, m in self.entries if y != x))

    def __add__(self, other: "RContext") -> "RContext":
        merged = dict(self.entries)
        for x, m in other.entries:
            merged[x] = merged[x] + m if x in merged else m
        return RContext.of(merged)

    def scale(self, k: float) -> "RContext":
        return RContext(tuple((x, m.scale(k)) for x, m in self.entries))

    def variables(self) -> list[str]:
        return [x for x, _ in self.entries]

    def __str__(self) -> str:
        return ", ".join(f"{x}:{format_multiset(m)}" for x, m in self.entries)


def rcontext_equal(a: RContext, b: RContext, as_sets: bool = False) -> bool:
    names = set(a.variables()) | set(b.variables())
    for x in names:
        ma, mb = a.get(x), b.get(x)
        if as_sets:
            ma, mb = _support_set(ma), _support_set(mb)
        if not multiset_equal(ma, mb):
            return False
    return True


def _support_set(m: Multiset) -> Multiset:
    """Forget multiplicities, identifying equal types."""
    reps: list = []
    for s, _ in m.items:
        if not any(type_equal(s, r) for r in reps):
            reps.append(s)
    return Multiset.of(*reps)


class RNode:
    """One judged node of an R-derivation graph.

    rule is 'ax', 'ax_w', 'abs' or 'app'.  For 'app', `fun` is the function
    premise and `args` lists (premise, multiplicity) pairs; a multiplicity
    of OMEGA stands for a premise repeated ω times.  Nodes may be shared.
    """

    def __init__(self, rule: str, context: RContext, type: RType, fun=None, args=(), child=None, name: str = ""):
        self.rule = rule
        self.context = context
        self.type = type
        self.fun: Optional[RNode] = fun
        self.args: tuple[tuple[RNode, float], ...] = tuple(args)
        self.child: Optional[RNode] = child
        self.name = name

    def premises(self) -> list["RNode"]:
        if self.rule == "abs":
            return [self.child]  # type: ignore[list-item]
        if self.rule == "app":
            return [self.fun] + [n for n, _ in self.args]  # type: ignore[list-item]
        return []

    def __repr__(self) -> str:
        return f"RNode({self.name or self.rule}: {self.context} ⊢ {format_type(self.type)})"


@dataclass
class RDerivation:
    root: RNode
    system: str = "R"  # 'R', 'R_w' or 'simple'

    def nodes(self) -> list[RNode]:
        seen: dict[int, RNode] = {}
        stack = [self.root]
        while stack:
            n = stack.pop()
            if id(n) in seen:
                continue
            seen[id(n)] = n
            stack.extend(n.premises())
        return list(seen.values())


def check_rderiv(t: Term, d: RDerivation) -> Report:
    """Check each node against its rule, following the term's structure.

    A node reached twice at the same term position is checked once; a node
    shared across positions is checked at each of them.
    """
    report = Report()
    done: set[tuple[int, Position]] = set()
    simple = d.system == "simple"
    weak = d.system in ("R_w", "simple")
    on_path: set[int] = set()

    def visit(n: RNode, u: Term, a: Position) -> None:
        key = (id(n), a)
        if key in done:
            return
        if id(n) in on_path:
            report.add(a, "cycle", f"node {n.name or n.rule} recurs along one branch of a finite term")
            return
        done.add(key)
        on_path.add(id(n))
        _check_rnode(n, u, a, report, simple, weak)
        if n.rule == "abs" and isinstance(u, Abs) and n.child is not None:
            visit(n.child, u.body, a + (0,))
        elif n.rule == "app" and isinstance(u, App) and n.fun is not None:
            visit(n.fun, u.fun, a + (1,))
            for c, _ in n.args:
                visit(c, u.arg, a + (2,))
        on_path.discard(id(n))

    visit(d.root, t, ())
    report.judgment = (d.root.context, d.root.type)
    return report


def _check_rnode(n: RNode, u: Term, a: Position, report: Report, simple: bool, weak: bool) -> None:
    where = n.name or n.rule
    if n.rule in ("ax", "ax_w"):
        if not isinstance(u, Var):
            report.add(a, "rule", f"{where}: axiom over a non-variable")
            return
        mine = n.context.get(u.name)
        if n.rule == "ax_w" or simple:
            if not weak:
                report.add(a, "rule", f"{where}: weakened axiom outside a weakening system")
            elif not any(type_equal(s, n.type) for s, _ in mine.items):
                report.add(a, "axiom", f"{where}: context gives {u.name}:{format_multiset(mine)}, missing {format_type(n.type)}")
            elif simple and not _simple_multiset(mine):
                report.add(a, "simple", f"{where}: context entry for {u.name} is not a single type")
            return
        if not multiset_equal(mine, Multiset.of(n.type)) or n.context.variables() != [u.name]:
            report.add(a, "axiom", f"{where}: context must be exactly {u.name}:[{format_type(n.type)}], got {n.context}")
        return
    if n.rule == "abs":
        if not isinstance(u, Abs) or n.child is None:
            report.add(a, "rule", f"{where}: abstraction rule over {type(u).__name__}")
            return
        c = n.child
        src = c.context.get(u.var)
        ty = unfold(n.type)
        if not isinstance(ty, RArrow):
            report.add(a, "arrow", f"{where}: abstraction typed by a non-arrow")
            return
        if simple:
            if not _simple_multiset(ty.source) or (src.items and not multiset_equal(src, ty.source)):
                report.add(a, "simple", f"{where}: source {format_multiset(ty.source)} is not the bound variable's single type")
        elif not multiset_equal(src, ty.source):
            report.add(a, "relevance", f"{where}: source {format_multiset(ty.source)} but context gives {u.var}:{format_multiset(src)}")
        if not type_equal(ty.target, c.type):
            report.add(a, "mismatch", f"{where}: target {format_type(ty.target)} but body has {format_type(c.type)}")
        if not rcontext_equal(n.context, c.context.without(u.var), as_sets=simple):
            report.add(a, "context", f"{where}: context {n.context} but premise leaves {c.context.without(u.var)}")
        return
    if n.rule != "app" or not isinstance(u, App) or n.fun is None:
        report.add(a, "rule", f"{where}: rule {n.rule} over {type(u).__name__}")
        return
    ft = unfold(n.fun.type)
    if not isinstance(ft, RArrow):
        report.add(a + (1,), "arrow", f"{where}: function typed by a non-arrow")
        return
    given = Multiset(tuple((c.type, m) for c, m in n.args))
    if simple:
        if not _simple_multiset(ft.source) or len(n.args) != 1 or n.args[0][1] != 1:
            report.add(a, "simple", f"{where}: simple application needs exactly one argument of multiplicity 1")
    if not multiset_equal(given, ft.source):
        report.add(a, "mismatch", f"{where}: arguments {format_multiset(given)} but source {format_multiset(ft.source)}")
    if not type_equal(ft.target, n.type):
        report.add(a, "mismatch", f"{where}: type {format_type(n.type)} but function target {format_type(ft.target)}")
    ctx = n.fun.context
    for c, m in n.args:
        ctx = ctx + c.context.scale(m)
    if not rcontext_equal(n.context, ctx, as_sets=simple):
        report.add(a, "context", f"{where}: context {n.context} but the premises sum to {ctx}")


def _simple_multiset(m: Multiset) -> bool:
    return len(m.items) == 1 and m.items[0][1] == 1


def collapse_deriv(t: Term, p: SDerivation | SNode) -> RDerivation:
    """Forget tracks: sequences become multisets."""
    node = p.root if isinstance(p, SDerivation) else p
    conclusion(t, node)

    def go(u: Term, n: SNode) -> RNode:
        if isinstance(n, SAx):
            ty = collapse_s_to_r(n.type)
            return RNode("ax", RContext.of({u.name: Multiset.of(ty)}), ty)  # type: ignore[union-attr]
        if isinstance(n, SAbs):
            c = go(u.body, n.child)  # type: ignore[union-attr]
            return RNode("abs", c.context.without(u.var), RArrow(c.context.get(u.var), c.type), child=c)  # type: ignore[union-attr]
        f = go(u.fun, n.fun)  # type: ignore[union-attr]
        args = [(go(u.arg, c), 1) for _, c in n.args]  # type: ignore[union-attr]
        ctx = f.context
        for c, m in args:
            ctx = ctx + c.context
        ft = unfold(f.type)
        assert isinstance(ft, RArrow)
        return RNode("app", ctx, ft.target, fun=f, args=args)

    return RDerivation(go(t, node), "R")


# ---------------------------------------------------------------------------
# JSON documents


def sderiv_to_json(node: SNode | SDerivation) -> dict:
    if isinstance(node, SDerivation):
        node = node.root
    if isinstance(node, SAx):
        return {"rule": "ax", "track": node.track, "type": format_type(node.type)}
    if isinstance(node, SAbs):
        return {"rule": "abs", "children": {"0": sderiv_to_json(node.child)}}
    kids = {"1": sderiv_to_json(node.fun)}
    kids.update({str(k): sderiv_to_json(c) for k, c in node.args})
    return {"rule": "app", "children": kids}


def sderiv_from_json(doc: dict, equations: Optional[dict] = None) -> SNode:

    eqs = equations if equations is not None else doc.get("types", {})

    def ty(text: str) -> SType:
        if text in eqs:
            return resolve_equations(eqs, text)  # type: ignore[return-value]
        return close_type(parse_type(text, eqs.keys()), eqs)  # type: ignore[return-value]

    def go(d: dict) -> SNode:
        rule = d["rule"]
        declared = None
        if "judgment" in d:
            jd = d["judgment"]
            ctx = {}
            for x, s in jd.get("context", {}).items():
                st = ty(f"{s} -> o")
                assert isinstance(st, SArrow)
                ctx[x] = st.source
            declared = SJudgment(SContext.of(ctx), ty(jd["type"]))
        if rule == "ax":
            return SAx(int(d["track"]), ty(d["type"]), declared)
        kids = {int(k): v for k, v in d.get("children", {}).items()}
        if rule == "abs":
            return SAbs(go(kids[0]), declared)
        if rule == "app":
            return SApp(go(kids[1]), tuple((k, go(v)) for k, v in sorted(kids.items()) if k != 1), declared)
        raise ValueError(f"unknown rule {rule!r}")

    root = doc.get("root", doc)
    return go(root)


def rderiv_to_json(d: RDerivation) -> dict:
    nodes = d.nodes()
    ids = {id(n): f"n{i}" for i, n in enumerate(nodes)}
    out = []
    for n in nodes:
        entry = {
            "id": ids[id(n)],
            "rule": n.rule,
            "context": {x: format_multiset(m) for x, m in n.context.entries},
            "type": format_type(n.type),
        }
        if n.name:
            entry["name"] = n.name
        if n.rule == "abs":
            entry["child"] = ids[id(n.child)]
        if n.rule == "app":
            entry["fun"] = ids[id(n.fun)]
            entry["args"] = [
                {"node": ids[id(c)], **({"omega": True} if m == OMEGA else {"mult": int(m)})}
                for c, m in n.args
            ]
        out.append(entry)
    return {"system": d.system, "root": ids[id(d.root)], "nodes": out}


def rderiv_from_json(doc: dict) -> RDerivation:
    eqs = doc.get("types", {})

    def ty(text: str):
        return close_type(parse_type(text, eqs.keys()), eqs)

    def ms(text: str) -> Multiset:
        t = ty(f"{text} -> o")
        assert isinstance(t, RArrow)
        return t.source

    raw = {e["id"]: e for e in doc["nodes"]}
    built: dict[str, RNode] = {}
    for key, e in raw.items():
        ctx = RContext.of({x: ms(m) for x, m in e.get("context", {}).items()})
        built[key] = RNode(e["rule"], ctx, ty(e["type"]), name=e.get("name", ""))
    for key, e in raw.items():
        n = built[key]
        if e["rule"] == "abs":
            n.child = built[e["child"]]
        if e["rule"] == "app":
            n.fun = built[e["fun"]]
            n.args = tuple(
                (built[a["node"]], OMEGA if a.get("omega") else int(a.get("mult", 1))) for a in e.get("args", [])
            )
    return RDerivation(built[doc["root"]], doc.get("system", "R"))
