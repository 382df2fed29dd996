"""Command-line interface.

Every subcommand reads terms either inline or from a *.lam file and writes
JSON (sorted keys) or plain text to stdout.  Exit status: 0 on success,
1 on invalid input, 2 on an internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

from .bipositions import (
    Chain,
    ClosureUnusable,
    Engine,
    IllFormed,
    closure_bmin,
    default_bound,
    find_nihilating_chain,
    link_from_json,
    synthesize_from_closure,
    thread_graph_dot,
)
from .coding import default_coding
from .chains import Impossibility, MalformedChain, collapsing_strategy, is_normal, rewrite_to_canonical
from .derivation import (
    InconsistentRedex,
    InvalidDerivation,
    RDerivation,
    SDerivation,
    check_rderiv,
    check_sderiv,
    rderiv_from_json,
    rderiv_to_json,
    sderiv_from_json,
    sderiv_to_json,
)
from .synth import (
    TypingResult,
    build_fixpoint_typings,
    order_capturing_type,
    universal_rw_typing,
    universal_simple_typing,
)
from .terms import (
    Abs,
    App,
    NotARedex,
    Term,
    TermSyntaxError,
    beta_reduce_at,
    format_position,
    free_vars,
    head_reduction,
    order_bounded,
    parse_position,
    parse_term,
    pretty,
    size,
    support,
)
from .types import OMEGA, TypeSyntaxError, format_type, parse_type_document

INPUT_ERRORS = (
    TermSyntaxError,
    TypeSyntaxError,
    MalformedChain,
    InvalidDerivation,
    InconsistentRedex,
    ClosureUnusable,
    IllFormed,
    NotARedex,
    json.JSONDecodeError,
    FileNotFoundError,
    KeyError,
    ValueError,
)


class UsageError(ValueError):
    pass


def emit(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False)


def order_json(n: float):
    return "w" if n == OMEGA else int(n)


def position_key(a):
    return (len(a), a)


# ---------------------------------------------------------------------------
# Inputs


def read_text(arg: str) -> str:
    """The content of a file when `arg` names one, else `arg` itself."""
    p = Path(arg)
    if len(arg) < 4096 and p.is_file():
        return p.read_text()
    return arg


def entry_name(arg: str) -> str:
    p = Path(arg)
    return p.stem if len(arg) < 4096 and p.is_file() else arg


def load_term(arg: str) -> Term:
    lines = [l.split("#", 1)[0] for l in read_text(arg).splitlines()]
    return parse_term(" ".join(l for l in lines if l.strip()))


def load_json(arg: str):
    return json.loads(read_text(arg))


def load_type(arg: str):
    return parse_type_document(read_text(arg))


# ---------------------------------------------------------------------------
# Corpus


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    text: str
    order: Union[int, str, None]  # an integer, "w", or None when unknown
    tags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def term(self) -> Term:
        return parse_term(self.text)


CORPUS = (
    CorpusEntry("omega", r"(\x. x x) (\x. x x)", 0, ("mute", "zero-term")),
    CorpusEntry("delta", r"\x. x x", 1, ("hnf",)),
    CorpusEntry("y", r"\f. (\x. f (x x)) (\x. f (x x))", 1, ("fixpoint", "hnf")),
    CorpusEntry("cu_f", r"(\x. f (x x)) (\x. f (x x))", 0, ("fixpoint", "zero-term")),
    CorpusEntry("cu_lambda", r"(\x. \y. x x) (\x. \y. x x)", "w", ("fixpoint",)),
    CorpusEntry("i", r"\x. x", 1, ("hnf",)),
    CorpusEntry("k", r"\x. \y. x", 2, ("hnf",)),
    CorpusEntry("lambda_omega", r"\x. (\x. x x) (\x. x x)", 1, ("hnf",)),
    CorpusEntry("delta_delta3", r"(\x. x x) (\x. x x x)", 0, ("mute", "zero-term")),
)


def check_corpus_entry(e: CorpusEntry, fuel: int) -> dict:
    """Consistency of the recorded order with what head reduction certifies."""
    b = order_bounded(e.term, fuel)
    if e.order is None:
        ok = True
    elif e.order == "w":
        ok = not b.exact
    elif b.exact:
        ok = b.lower_bound == e.order
    else:
        ok = b.lower_bound <= e.order
    return {"known": e.order, "lower_bound": b.lower_bound, "exact": b.exact, "consistent": ok, "tags": list(e.tags)}


# ---------------------------------------------------------------------------
# Per-term jobs (module level so they can be shipped to worker processes)


def job_order(arg: str, opts: dict) -> dict:
    b = order_bounded(load_term(arg), opts["fuel"])
    return {"lower_bound": b.lower_bound, "exact": b.exact, "steps": b.steps, "reduct": pretty(b.reduct)}


def job_closure(arg: str, opts: dict) -> dict:
    t = load_term(arg)
    res = closure_bmin(t, bound=opts["bound"], budget=opts["budget"])
    doc = res.to_json()
    if opts.get("synthesize"):
        p = synthesize_from_closure(t, res)
        rep = check_sderiv(t, p.root)
        doc["derivation"] = sderiv_to_json(p)
        doc["derivation_valid"] = rep.valid
    return doc


def job_chain(arg: str, opts: dict) -> dict:
    t = load_term(arg)
    ch = find_nihilating_chain(t, max_len=opts["max_len"], max_size=opts["max_size"])
    return {"chain": None if ch is None else ch.to_json()}


def job_synth(arg: str, opts: dict) -> dict:
    return typing_to_json(run_synth(opts["goal"], load_term(arg) if arg else None, opts))


JOBS: dict[str, Callable[[str, dict], dict]] = {
    "order": job_order,
    "closure": job_closure,
    "chain": job_chain,
    "synth": job_synth,
}


def fan_out(kind: str, args: list[str], opts: dict, jobs: int) -> dict:
    """Run one job per entry; the merged document is keyed by entry name."""
    fn = JOBS[kind]
    names = [entry_name(a) for a in args]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(fn, args, [opts] * len(args)))
    else:
        results = [fn(a, opts) for a in args]
    return dict(sorted(zip(names, results)))


# ---------------------------------------------------------------------------
# Typing results


def derivation_to_json(d: Union[RDerivation, SDerivation]) -> dict:
    if isinstance(d, SDerivation):
        return {"kind": "S", "root": sderiv_to_json(d)}
    return {"kind": "R", **rderiv_to_json(d)}


def typing_to_json(r: TypingResult) -> dict:
    return {
        "term": pretty(r.term),
        "system": r.system,
        "context": str(r.context),
        "type": format_type(r.type),
        "order": order_json(r.order),
        "exact": r.exact,
        "note": r.note,
        "valid": r.check().valid,
        "derivation": derivation_to_json(r.derivation),
    }


def run_synth(goal: str, t: Optional[Term], opts: dict) -> TypingResult:
    tau = load_type(opts["tau"]) if opts.get("tau") else None
    fixpoints = {"omega": "omega", "y": "y", "cuf": "cuf", "culam": "culam"}
    if goal in fixpoints:
        if tau is None:
            return build_fixpoint_typings(fixpoints[goal])
        return build_fixpoint_typings(fixpoints[goal], tau)
    if t is None:
        raise UsageError(f"goal {goal} needs --term")
    if goal == "simple-R":
        return universal_simple_typing(t, tau)
    if goal == "rw-rho":
        return universal_rw_typing(t)
    if goal == "order":
        r = order_capturing_type(t, opts["fuel"])
        if r is None:
            raise UsageError("no order certificate within the fuel")
        return r
    raise UsageError(f"unknown goal {goal}")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_parse(a) -> str:
    t = load_term(a.term)
    return emit({"term": pretty(t), "size": size(t), "free": sorted(free_vars(t))})


def cmd_supp(a) -> str:
    s = sorted(support(load_term(a.term)), key=position_key)
    if a.json:
        return emit([format_position(p) for p in s])
    return "{" + ",".join(format_position(p) for p in s) + "}"


def cmd_reduce(a) -> str:
    t = load_term(a.term)
    if a.at is not None:
        return pretty(beta_reduce_at(t, parse_position(a.at)))
    steps = head_reduction(t, a.steps)
    return emit(
        {
            "steps": [{"term": pretty(u), "fired": format_position(b)} for u, b in steps[:-1]],
            "result": pretty(steps[-1][0]),
        }
    )


def cmd_check_deriv(a) -> tuple[str, int]:
    t = load_term(a.term)
    doc = load_json(a.deriv)
    if doc.get("kind") == "R" or "nodes" in doc:
        rep = check_rderiv(t, rderiv_from_json(doc))
    else:
        rep = check_sderiv(t, sderiv_from_json(doc), default_coding() if a.coded else None)
    out = {
        "valid": rep.valid,
        "violations": [
            {"position": format_position(v.position), "kind": v.kind, "message": v.message} for v in rep.violations
        ],
    }
    return emit(out), 0 if rep.valid else 1


def cmd_closure(a) -> str:
    if a.dot:
        t = load_term(a.term[0])
        return thread_graph_dot(t, closure_bmin(t, bound=a.bound, budget=a.budget))
    opts = {"bound": a.bound, "budget": a.budget, "synthesize": a.synthesize}
    return emit(single_or_many("closure", a.term, opts, a.jobs))


def cmd_chain(a) -> str:
    opts = {"max_len": a.max_len, "max_size": a.max_size}
    out = single_or_many("chain", a.term, opts, a.jobs)
    if len(a.term) == 1 and out["chain"] is None and not a.json:
        return "none"
    return emit(out)


def load_chain(t: Term, arg: str) -> tuple[Engine, Chain]:
    eng = Engine(t)
    doc = load_json(arg)
    links = doc["chain"] if isinstance(doc, dict) else doc
    return eng, Chain(tuple(link_from_json(d, eng) for d in links))


def cmd_normalize_chain(a) -> str:
    t = load_term(a.term)
    eng, ch = load_chain(t, a.chain)
    if not is_normal(eng, ch):
        return emit({"normal": False})
    res = rewrite_to_canonical(eng, ch)
    if isinstance(res, Impossibility):
        return emit({"normal": True, "impossible": {"lemma": res.lemma, "detail": res.detail}})
    return emit({"normal": True, "canonical": res.to_json()})


def cmd_collapse_strategy(a) -> str:
    t = load_term(a.term)
    _, ch = load_chain(t, a.chain)
    tr = collapsing_strategy(t, None, ch)
    return emit(
        {
            "steps": [{"fired": format_position(s.fired), "height": s.height, "term": pretty(s.term_before)} for s in tr.steps],
            "total": tr.total,
            "final_term": pretty(tr.final_term),
            "final_chain": tr.final_chain.to_json() if tr.final_chain is not None else None,
        }
    )


def cmd_synth(a) -> str:
    opts = {"goal": a.goal, "tau": a.tau, "fuel": a.fuel}
    terms = a.term or [""]
    return emit(single_or_many("synth", terms, opts, a.jobs))


def cmd_order(a) -> str:
    return emit(single_or_many("order", a.term, {"fuel": a.fuel}, a.jobs))


def term_dot(t: Term) -> str:
    lines = ["digraph term {"]

    def go(u: Term, a) -> str:
        n = "p" + "_".join(map(str, a)) if a else "root"
        if isinstance(u, Abs):
            label = f"λ{u.var}"
            lines.append(f'  {n} [label="{label}"];')
            lines.append(f'  {n} -> {go(u.body, a + (0,))} [label="0"];')
        elif isinstance(u, App):
            lines.append(f'  {n} [label="@"];')
            lines.append(f'  {n} -> {go(u.fun, a + (1,))} [label="1"];')
            lines.append(f'  {n} -> {go(u.arg, a + (2,))} [label="2"];')
        else:
            lines.append(f'  {n} [label="{u.name}"];')
        return n

    go(t, ())
    lines.append("}")
    return "\n".join(lines)


def cmd_dot(a) -> str:
    t = load_term(a.term)
    if a.what == "threads":
        return thread_graph_dot(t, closure_bmin(t, bound=a.bound, budget=a.budget))
    return term_dot(t)


def cmd_corpus(a) -> tuple[str, int]:
    entries = CORPUS
    if a.jobs > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as ex:
            results = list(ex.map(check_corpus_entry, entries, [a.fuel] * len(entries)))
    else:
        results = [check_corpus_entry(e, a.fuel) for e in entries]
    doc = dict(sorted((e.name, r) for e, r in zip(entries, results)))
    return emit(doc), 0 if all(r["consistent"] for r in results) else 1


def single_or_many(kind: str, terms: list[str], opts: dict, jobs: int) -> dict:
    if len(terms) == 1:
        return JOBS[kind](terms[0], opts)
    return fan_out(kind, terms, opts, jobs)


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="infinitype", description="Infinitary intersection typing toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def term_arg(sp, many: bool = False, required: bool = True):
        sp.add_argument(
            "--term",
            nargs="+" if many else None,
            required=required,
            help="a *.lam file or inline term text" + (" (several allowed)" if many else ""),
        )

    def jobs_arg(sp):
        sp.add_argument("--jobs", type=int, default=1, help="worker processes when several terms are given")

    def bound_args(sp):
        sp.add_argument("--bound", type=int, default=None, help=f"closure bound |a|+|c| (default INFINITYPE_BOUND or {default_bound()})")
        sp.add_argument("--budget", type=int, default=200_000, help="maximum number of explored bipositions")

    sp = sub.add_parser("parse", help="parse and pretty-print a term")
    term_arg(sp)
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("supp", help="support of a term")
    term_arg(sp)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_supp)

    sp = sub.add_parser("reduce", help="fire one redex, or head-reduce")
    term_arg(sp)
    sp.add_argument("--at", help="position of the redex, e.g. 1·2 or 1.2")
    sp.add_argument("--steps", type=int, default=64, help="head reduction fuel")
    sp.set_defaults(fn=cmd_reduce)

    sp = sub.add_parser("order", help="bounded order estimate")
    term_arg(sp, many=True)
    sp.add_argument("--fuel", type=int, default=64)
    jobs_arg(sp)
    sp.set_defaults(fn=cmd_order)

    sp = sub.add_parser("check-deriv", help="check an S or R derivation document")
    term_arg(sp)
    sp.add_argument("--deriv", required=True, help="*.deriv.json")
    sp.add_argument("--coded", action="store_true", help="also require axiom tracks to follow the default coding")
    sp.set_defaults(fn=cmd_check_deriv)

    sp = sub.add_parser("closure", help="minimal closure of (ε, ε)")
    term_arg(sp, many=True)
    bound_args(sp)
    sp.add_argument("--synthesize", action="store_true", help="also emit the derivation built from the closure")
    sp.add_argument("--dot", action="store_true", help="emit the thread graph as DOT")
    jobs_arg(sp)
    sp.set_defaults(fn=cmd_closure)

    sp = sub.add_parser("chain", help="search a nihilating chain")
    term_arg(sp, many=True)
    sp.add_argument("--max-len", type=int, default=12)
    sp.add_argument("--max-size", type=int, default=20)
    sp.add_argument("--json", action="store_true", help="print JSON even when no chain exists")
    jobs_arg(sp)
    sp.set_defaults(fn=cmd_chain)

    sp = sub.add_parser("normalize-chain", help="rewrite a normal chain with the interaction lemmas")
    term_arg(sp)
    sp.add_argument("--chain", required=True, help="chain JSON file")
    sp.set_defaults(fn=cmd_normalize_chain)

    sp = sub.add_parser("collapse-strategy", help="collapse redex towers until the chain is normal")
    term_arg(sp)
    sp.add_argument("--chain", required=True, help="chain JSON file")
    sp.set_defaults(fn=cmd_collapse_strategy)

    sp = sub.add_parser("synth", help="build a typing")
    term_arg(sp, many=True, required=False)
    sp.add_argument("--goal", required=True, choices=["omega", "y", "culam", "cuf", "simple-R", "rw-rho", "order"])
    sp.add_argument("--tau", help="type text or *.ity file")
    sp.add_argument("--fuel", type=int, default=64)
    jobs_arg(sp)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("dot", help="DOT rendering of a term or of its threads")
    term_arg(sp)
    sp.add_argument("--what", choices=["term", "threads"], default="term")
    bound_args(sp)
    sp.set_defaults(fn=cmd_dot)

    sp = sub.add_parser("corpus", help="check the built-in corpus against its recorded orders")
    sp.add_argument("--fuel", type=int, default=64)
    jobs_arg(sp)
    sp.set_defaults(fn=cmd_corpus)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = args.fn(args)
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # an internal invariant broke
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    status = 0
    if isinstance(out, tuple):
        out, status = out
    sys.stdout.write(out + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
