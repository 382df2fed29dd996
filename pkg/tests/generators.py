"""Generators of typed test material built from the package's constructive side."""

from __future__ import annotations

from dataclasses import dataclass

from infinitype.bipositions import closure_bmin, synthesize_from_closure
from infinitype.derivation import RedexSpec, SDerivation, alpha_equal, dsupport, subject_expand
from infinitype.terms import (
    Abs,
    Position,
    Term,
    Var,
    collapse_word,
    fresh_name,
    free_vars,
    random_term,
    redexes,
    replace_at,
    subterm,
    support,
)


def random_normal_form(rng, max_size=10, names=("x", "y", "z")) -> Term:
    while True:
        t = random_term(rng, rng.randint(1, max_size), names)
        if not redexes(t):
            return t


def typed_normal_form(rng, max_size=9, bound=14):
    """A normal form with the derivation synthesized from its complete closure."""
    while True:
        t = random_normal_form(rng, max_size)
        res = closure_bmin(t, bound=bound)
        if res.complete and not res.hit_bot:
            return t, synthesize_from_closure(t, res)


def _names(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Abs):
        return {t.var} | _names(t.body)
    return _names(t.fun) | _names(t.arg)


def _repeated_typed_subterms(u: Term, typed: list[Position]) -> list[Term]:
    """Subterms of u with at least two typed copies up to renaming."""
    out = []
    for i, g in enumerate(typed):
        v = subterm(u, g)
        if any(alpha_equal(v, subterm(u, h)) for h in typed[i + 1 :]) and not any(alpha_equal(v, w) for w in out):
            out.append(v)
    return out


def _capture_free(u: Term, beta: Position) -> bool:
    """No free variable of u|β is bound on the path from u to β."""
    fv = free_vars(subterm(u, beta))
    cur = u
    for k in beta:
        if isinstance(cur, Abs) and cur.var in fv:
            return False
        cur = subterm(cur, (k,))
    return True


@dataclass
class TypedRedex:
    before: Term
    derivation: SDerivation
    spec: RedexSpec
    term: Term
    expanded: SDerivation


def expand_once(rng, t: Term, p: SDerivation) -> TypedRedex:
    """Abstract a random typed subterm of t into a redex.

    The body either discards its argument or abstracts every capture-free
    copy (up to renaming) of one chosen subterm.
    """
    typed = sorted({collapse_word(a) for a in dsupport(p)})
    b = rng.choice(typed)
    u = subterm(t, b)
    x = fresh_name("x", _names(t))
    if rng.random() < 0.2:
        arg = random_term(rng, rng.randint(2, 4), closed=True)
        body = u
    else:
        arg = subterm(u, rng.choice(sorted(support(u))))
        occurrences = [g for g in support(u) if isinstance(subterm(u, g), Var)]
        if occurrences and rng.random() < 0.3:
            arg = subterm(u, rng.choice(occurrences))
        repeated = _repeated_typed_subterms(u, [a[len(b):] for a in typed if a[: len(b)] == b])
        if repeated and rng.random() < 0.7:
            arg = rng.choice(repeated)
        body = u
        # deepest first, so an abstracted copy never sits inside another one
        for gamma in sorted(support(u), key=len, reverse=True):
            if alpha_equal(subterm(body, gamma), arg) and _capture_free(u, gamma):
                body = replace_at(body, gamma, Var(x))
    spec = RedexSpec(b, x, body, arg)
    t2, p2 = subject_expand(t, p, spec)
    return TypedRedex(t, p, spec, t2, p2)


def typed_redex(rng, max_size=10, max_expansions=3) -> TypedRedex:
    """A typed redex reached from a typed normal form by one to three expansions.

    The returned record describes the last expansion only.
    """
    t, p = typed_normal_form(rng, max_size)
    for _ in range(rng.randint(1, max_expansions)):
        r = expand_once(rng, t, p)
        t, p = r.term, r.expanded
    return r
