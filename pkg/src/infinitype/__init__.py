"""Infinitary non-idempotent intersection typing of λ-terms."""

from .bipositions import (
    BOT,
    ROOT,
    Chain,
    ClosureResult,
    Engine,
    Link,
    closure_bmin,
    find_nihilating_chain,
    synthesize_from_closure,
    zero_term_analysis,
)
from .chains import collapsing_strategy, is_normal, residuate_chain, rewrite_to_canonical
from .coding import DefaultCoding, TableCoding, default_coding
from .derivation import (
    RDerivation,
    SDerivation,
    bisupport,
    check_rderiv,
    check_sderiv,
    judgment_at,
    subject_expand,
    subject_reduce,
)
from .synth import (
    TypingResult,
    build_fixpoint_typings,
    build_phi,
    order_capturing_type,
    universal_rw_typing,
    universal_simple_typing,
)
from .terms import order_bounded, parse_term, pretty, redex_tower_at, support
from .types import is_support_candidate, parse_type, type_equal, type_order

__version__ = "0.1.0"

__all__ = [
    "BOT",
    "ROOT",
    "Chain",
    "ClosureResult",
    "Engine",
    "Link",
    "closure_bmin",
    "find_nihilating_chain",
    "synthesize_from_closure",
    "zero_term_analysis",
    "RDerivation",
    "SDerivation",
    "bisupport",
    "check_rderiv",
    "check_sderiv",
    "judgment_at",
    "subject_expand",
    "subject_reduce",
    "TypingResult",
    "build_fixpoint_typings",
    "build_phi",
    "order_capturing_type",
    "universal_rw_typing",
    "universal_simple_typing",
    "collapsing_strategy",
    "is_normal",
    "residuate_chain",
    "rewrite_to_canonical",
    "DefaultCoding",
    "TableCoding",
    "default_coding",
    "order_bounded",
    "parse_term",
    "pretty",
    "redex_tower_at",
    "support",
    "is_support_candidate",
    "parse_type",
    "type_equal",
    "type_order",
]
