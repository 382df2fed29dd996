"""Constructive typings: fixpoint typings, universal recipes, order-capturing types.

Regular infinite derivations are built as R-derivation graphs whose shared
nodes stand for premises repeated ω times.  Finite typings are built as
S-derivations and checked with the S checker.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .derivation import (
    RContext,
    RDerivation,
    RedexSpec,
    RNode,
    SAbs,
    SApp,
    SAx,
    SContext,
    SDerivation,
    alpha_equal,
    check_rderiv,
    check_sderiv,
    conclusion,
    subject_expand,
)
from .coding import Coding, default_coding
from .terms import (
    Abs,
    App,
    Position,
    Term,
    Var,
    distinct_binders,
    free_vars,
    head_reduction,
    is_head_normal,
    order_bounded,
    parse_term,
    subterm,
)
from .types import (
    DEFAULT_ATOM,
    EMPTY_MULTISET,
    EMPTY_SEQ,
    OMEGA,
    Atom,
    Multiset,
    RArrow,
    RType,
    SArrow,
    SType,
    TVar,
    free_tvars,
    mu,
    type_order,
)

OMEGA_TERM = parse_term(r"(\x. x x) (\x. x x)")
Y_TERM = parse_term(r"\f. (\x. f (x x)) (\x. f (x x))")
CU_F_TERM = parse_term(r"(\x. f (x x)) (\x. f (x x))")
CU_LAMBDA_TERM = parse_term(r"(\x. \y. x x) (\x. \y. x x)")

FIXPOINT_TERMS = {"omega": OMEGA_TERM, "y": Y_TERM, "cuf": CU_F_TERM, "culam": CU_LAMBDA_TERM}


@dataclass
class TypingResult:
    """A typing Γ ⊢ t : τ with the derivation that proves it.

    `system` is 'R', 'R_w', 'S' or 'simple'.  `exact` is False when the
    order of the type only bounds the order of the term from above.
    """

    term: Term
    system: str
    context: Union[RContext, SContext]
    type: Union[RType, SType]
    derivation: Union[RDerivation, SDerivation]
    order: float
    exact: bool = True
    note: str = ""

    def check(self):
        """Re-check the embedded derivation in its own system; returns the report."""
        if isinstance(self.derivation, SDerivation):
            return check_sderiv(self.term, self.derivation.root)
        return check_rderiv(self.term, self.derivation)


def _result(t: Term, d: Union[RDerivation, SDerivation], exact: bool = True, note: str = "") -> TypingResult:
    if isinstance(d, SDerivation):
        j = conclusion(t, d.root)
        ctx, ty, system = j.context, j.type, "S"
    else:
        ctx, ty, system = d.root.context, d.root.type, d.system
    return TypingResult(t, system, ctx, ty, d, type_order(ty), exact, note)


def _fresh_tvar(*types) -> str:
    used = set()
    for ty in types:
        used |= free_tvars(ty)
    i = 0
    while f"X{i}" in used:
        i += 1
    return f"X{i}"


# ---------------------------------------------------------------------------
# φ_τ and the fixpoint typings


def build_phi(tau: RType) -> RType:
    """φ_τ, the solution of φ = [φ]_ω → τ."""
    v = _fresh_tvar(tau)
    return mu(v, RArrow(Multiset.omega(TVar(v)), tau))


def _self_application(x: str, phi: RType, target: RType) -> RNode:
    """x:[φ]_ω ⊢ x x : target, every copy of x sharing one axiom node."""
    ax = RNode("ax", RContext.of({x: Multiset.of(phi)}), phi, name=f"{x}:φ")
    return RNode("app", RContext.of({x: Multiset.omega(phi)}), target, fun=ax, args=[(ax, OMEGA)], name=f"{x} {x}")


def _omega_derivation(tau: RType, names: tuple[str, str] = ("x", "x")) -> RNode:
    """Π_Ω for (λa.a a)(λb.b b) with (a, b) = names."""
    phi = build_phi(tau)
    fun, arg = (RNode("abs", RContext(), phi, child=_self_application(v, phi, tau), name="Δ") for v in names)
    if names[0] == names[1]:
        arg = fun
    return RNode("app", RContext(), tau, fun=fun, args=[(arg, OMEGA)], name="Ω")


def _delta_f(tau: RType) -> tuple[RNode, RType, RType]:
    """f:[[τ]→τ] ⊢ λx.f(x x) : φ_τ."""
    phi = build_phi(tau)
    ft = RArrow(Multiset.of(tau), tau)
    f_ax = RNode("ax", RContext.of({"f": Multiset.of(ft)}), ft, name="f")
    xx = _self_application("x", phi, tau)
    body_ctx = f_ax.context + xx.context
    body = RNode("app", body_ctx, tau, fun=f_ax, args=[(xx, 1)], name="f (x x)")
    return RNode("abs", f_ax.context, phi, child=body, name="Δ_f"), phi, ft


def _cu_f_derivation(tau: RType) -> RNode:
    delta_f, _, ft = _delta_f(tau)
    ctx = RContext.of({"f": Multiset.omega(ft)})
    return RNode("app", ctx, tau, fun=delta_f, args=[(delta_f, OMEGA)], name="cu_f")


def _cu_lambda_derivation(names: tuple[str, str] = ("x", "x")) -> RNode:
    """Π_λ for (λa.λy.a a)(λb.λz.b b) with (a, b) = names."""
    x_type = mu("X", RArrow(EMPTY_MULTISET, TVar("X")))
    psi = build_phi(x_type)

    def d(v: str) -> RNode:
        inner = RNode("abs", RContext.of({v: Multiset.omega(psi)}), x_type, child=_self_application(v, psi, x_type), name=f"λ.{v} {v}")
        return RNode("abs", RContext(), psi, child=inner, name="D")

    fun = d(names[0])
    arg = fun if names[0] == names[1] else d(names[1])
    return RNode("app", RContext(), x_type, fun=fun, args=[(arg, OMEGA)], name="cu_λ")


def build_fixpoint_typings(which: str, tau: RType = DEFAULT_ATOM) -> TypingResult:
    """Π_Ω, Π_Y, the cu_f typing, or Π_λ (τ is ignored for 'culam')."""
    which = which.lower()
    if which == "omega":
        root = _omega_derivation(tau)
    elif which == "y":
        cu = _cu_f_derivation(tau)
        ft = RArrow(Multiset.of(tau), tau)
        root = RNode("abs", RContext(), RArrow(Multiset.omega(ft), tau), child=cu, name="Y")
    elif which == "cuf":
        root = _cu_f_derivation(tau)
    elif which == "culam":
        root = _cu_lambda_derivation()
    else:
        raise ValueError(f"unknown fixpoint typing {which!r}; expected one of {sorted(FIXPOINT_TERMS)}")
    return _result(FIXPOINT_TERMS[which], RDerivation(root, "R"))


# ---------------------------------------------------------------------------
# Universal recipes


R_TYPE = mu("R", RArrow(Multiset.of(TVar("R")), TVar("R")))
RHO = mu("P", RArrow(Multiset.omega(TVar("P")), TVar("P")))


def fixpoint_formula(a: RType) -> RType:
    """F_A, the solution of F = F → A in the simple system."""
    v = _fresh_tvar(a)
    return mu(v, RArrow(Multiset.of(TVar(v)), a))


def _simple_omega(a: RType) -> RNode:
    f = fixpoint_formula(a)
    ctx = RContext.of({"x": Multiset.of(f)})
    ax = RNode("ax", ctx, f, name="x:F")
    delta = RNode("abs", RContext(), f, child=RNode("app", ctx, a, fun=ax, args=[(ax, 1)], name="x x"), name="Δ")
    return RNode("app", RContext(), a, fun=delta, args=[(delta, 1)], name="Ω")


def universal_simple_typing(t: Term, a: Optional[RType] = None) -> TypingResult:
    """t : R with R = R → R, every free variable typed R.

    With `a` given and t equal to Ω up to renaming, the F_A typing ⊢ Ω : A
    is returned instead.
    """
    if a is not None:
        if not alpha_equal(t, OMEGA_TERM):
            raise ValueError("the F_A typing is only defined for Ω")
        return _result(t, RDerivation(_simple_omega(a), "simple"))

    def go(u: Term) -> RNode:
        ctx = RContext.of({x: Multiset.of(R_TYPE) for x in free_vars(u)})
        if isinstance(u, Var):
            return RNode("ax", ctx, R_TYPE)
        if isinstance(u, Abs):
            return RNode("abs", ctx, R_TYPE, child=go(u.body))
        return RNode("app", ctx, R_TYPE, fun=go(u.fun), args=[(go(u.arg), 1)])

    return _result(t, RDerivation(go(t), "simple"))


def universal_rw_typing(t: Term) -> TypingResult:
    """t : ρ in the weakening system, every context entry being [ρ]_ω.

    Binders are first made pairwise distinct: a shadowed binder never sees
    its variable in the context of its body, which would force an empty
    source.  The result's term is that renamed copy.
    """
    t = distinct_binders(t)
    rho_w = Multiset.omega(RHO)

    def go(u: Term, scope: frozenset[str]) -> RNode:
        ctx = RContext.of({x: rho_w for x in scope})
        if isinstance(u, Var):
            return RNode("ax_w", ctx, RHO)
        if isinstance(u, Abs):
            return RNode("abs", ctx, RHO, child=go(u.body, scope | {u.var}))
        return RNode("app", ctx, RHO, fun=go(u.fun, scope), args=[(go(u.arg, scope), OMEGA)])

    return _result(t, RDerivation(go(t, frozenset(free_vars(t))), "R_w"))


# ---------------------------------------------------------------------------
# Order-capturing typings


def _arrows(n: int, target: SType) -> SType:
    for _ in range(n):
        target = SArrow(EMPTY_SEQ, target)
    return target


def type_head_normal_form(t: Term, coding: Optional[Coding] = None, atom: Atom = DEFAULT_ATOM) -> SDerivation:
    """Type λx1..xn.y M1..Mm by giving y the type ()→…→()→o; arguments stay untyped.

    The type of t then has exactly n arrows on its spine.  The head axiom
    gets the track of its position under the coding.
    """
    if not is_head_normal(t):
        raise ValueError("not a head normal form")
    coding = coding or default_coding()
    pos: Position = ()
    u = t
    n = 0
    while isinstance(u, Abs):
        u, pos, n = u.body, pos + (0,), n + 1
    m = 0
    while isinstance(u, App):
        u, pos, m = u.fun, pos + (1,), m + 1
    node = SAx(coding.encode(pos), _arrows(m, atom))
    for _ in range(m):
        node = SApp(node, ())
    for _ in range(n):
        node = SAbs(node)
    return SDerivation(t, node)


def _expand_along(steps: list[tuple[Term, Optional[Position]]], p: SDerivation) -> SDerivation:
    """Subject-expand p, typing the last term of a head reduction, back to its first term."""
    t2 = p.term
    for u, b in reversed(steps[:-1]):
        redex = subterm(u, b)  # type: ignore[arg-type]
        assert isinstance(redex, App) and isinstance(redex.fun, Abs)
        spec = RedexSpec(b, redex.fun.var, redex.fun.body, redex.arg)  # type: ignore[arg-type]
        t2, p = subject_expand(t2, p, spec)
    return SDerivation(steps[0][0], p.root)


def _under_lambdas(t: Term) -> tuple[list[str], Term]:
    names = []
    while isinstance(t, Abs):
        names.append(t.var)
        t = t.body
    return names, t


def _binders(redex: Term) -> tuple[str, str]:
    """Binder names of the function and argument of a self-applied redex."""
    assert isinstance(redex, App) and isinstance(redex.fun, Abs) and isinstance(redex.arg, Abs)
    return redex.fun.var, redex.arg.var


def _wrap_abs(root: RNode, n: int) -> RNode:
    for i in range(n):
        root = RNode("abs", RContext(), RArrow(EMPTY_MULTISET, root.type), child=root, name=f"λ{n - i}")
    return root


def order_capturing_type(t: Term, fuel: int, coding: Optional[Coding] = None) -> Optional[TypingResult]:
    """A typing whose type has the order of t, or an honest bound.

    Head normal form within fuel: the head-variable typing of the reduct is
    expanded back to t; exact.  λx1..xn.Ω: Π_Ω under n abstractions; exact,
    since Ω is a zero term.  λx1..xn.cu_λ: Π_λ under n abstractions, of
    infinite order; inexact.  Otherwise, if head reduction exposed n >= 1
    leading λs, the universal ρ-typing (infinite order) is returned as an
    inexact bound; None when nothing is certified.
    """
    bound = order_bounded(t, fuel)
    if bound.exact:
        steps = head_reduction(t, fuel)
        p = type_head_normal_form(steps[-1][0], coding)
        d = _expand_along(steps, p)
        return _result(t, d, note=f"head normal form after {bound.steps} head steps")
    names, body = _under_lambdas(t)
    if alpha_equal(body, OMEGA_TERM):
        d = RDerivation(_wrap_abs(_omega_derivation(DEFAULT_ATOM, _binders(body)), len(names)), "R")
        return _result(t, d, note="Ω builder under leading abstractions")
    if alpha_equal(body, CU_LAMBDA_TERM):
        d = RDerivation(_wrap_abs(_cu_lambda_derivation(_binders(body)), len(names)), "R")
        return _result(t, d, exact=False, note=f"cu_λ builder; order of the term >= {bound.lower_bound}")
    if bound.lower_bound >= 1:
        res = universal_rw_typing(t)
        res.exact = False
        res.note = f"universal ρ typing; order of the term >= {bound.lower_bound}"
        return res
    return None
