"""Query unification: rule backend, LLM backend, validation, caching."""

from .llm import (DEFAULT_API_KEY_ENV, QueryCache, UnifierBackend,
                  UnifierCostReport, UnifierUnavailable, UnifyResult,
                  default_system_prompt, unify_corpus, unify_llm)
from .rules import (QueryStyle, classify_style, past_tense, unify_rules,
                    validate_canonical)

__all__ = [
    "DEFAULT_API_KEY_ENV",
    "QueryCache",
    "QueryStyle",
    "UnifierBackend",
    "UnifierCostReport",
    "UnifierUnavailable",
    "UnifyResult",
    "classify_style",
    "default_system_prompt",
    "past_tense",
    "unify_corpus",
    "unify_llm",
    "unify_rules",
    "validate_canonical",
]
