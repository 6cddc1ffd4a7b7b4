"""Deterministic query canonicalizer and canonical-form validator.

Target form: a single declarative past-tense sentence with an explicit
subject, a capital first letter and a terminal period.  The rule backend
approximates the LLM behavior with a style classifier, a small inflection
engine and fixed repair templates; inputs it cannot convert pass through
with surface normalization only and fail validation downstream.
"""

from __future__ import annotations

import enum
import re

from .lexicon import (DETERMINERS, DOUBLING_CONSONANTS, IMPERATIVE_VERBS,
                      IRREGULAR_PAST, KNOWN_VERBS, LEADING_AUXILIARIES,
                      PAST_FORMS, PLURAL_PERSON_NOUNS, PRONOUN_SUBJECTS,
                      SINGULAR_PERSON_NOUNS, VOWELS, WH_WORDS)


class QueryStyle(enum.Enum):
    INTERROGATIVE = "interrogative"
    IMPERATIVE = "imperative"
    DECLARATIVE_PRESENT = "declarative_present"
    DECLARATIVE_PAST = "declarative_past"
    FRAGMENT = "fragment"


_PRESENT_AUX = ("am", "is", "are")

# fixed surface repairs, applied word-boundary, all idempotent
_REPAIRS = (
    (re.compile(r"\bout the\b"), "out of the"),
    (re.compile(r"\bout a\b"), "out of a"),
    (re.compile(r"\bin to\b"), "into"),
)


def _norm(word: str) -> str:
    return word.strip(".,;:!?\"'").lower()


# ---------------------------------------------------------------------------
# inflection


def past_tense(verb: str) -> str:
    """Simple past of a base-form verb: irregular lookup, then suffix rules
    (-e elision, consonant-y, CVC doubling, default -ed)."""
    v = verb.lower()
    if v in IRREGULAR_PAST:
        return IRREGULAR_PAST[v]
    if v.endswith("e"):
        return v + "d"
    if len(v) >= 2 and v.endswith("y") and v[-2] not in VOWELS:
        return v[:-1] + "ied"
    if _is_cvc_monosyllable(v):
        return v + v[-1] + "ed"
    return v + "ed"


def _is_cvc_monosyllable(v: str) -> bool:
    if len(v) < 3 or v[-1] not in DOUBLING_CONSONANTS:
        return False
    if v[-2] not in VOWELS or v[-3] in VOWELS:
        return False
    groups = len(re.findall(r"[aeiou]+", v))
    return groups == 1


def base_from_third_person(word: str) -> str | None:
    """Base form of a 3rd-person-singular present verb, or None if the
    de-inflected form is not a known verb."""
    w = word.lower()
    candidates = []
    if w.endswith("ies") and len(w) > 4:
        candidates.append(w[:-3] + "y")
    if w.endswith("es"):
        candidates.append(w[:-2])
    if w.endswith("s") and not w.endswith("ss"):
        candidates.append(w[:-1])
    for cand in candidates:
        if cand in KNOWN_VERBS:
            return cand
    return None


def base_from_progressive(word: str) -> str | None:
    """Base form of a V-ing participle, or None when not recognized."""
    w = word.lower()
    if not w.endswith("ing") or len(w) < 5:
        return None
    stem = w[:-3]
    if w.endswith("ying") and (stem[:-1] + "ie") in KNOWN_VERBS:
        return stem[:-1] + "ie"   # lying -> lie
    if stem in KNOWN_VERBS:
        return stem
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[:-1] in KNOWN_VERBS:
        return stem[:-1]          # running -> run
    if (stem + "e") in KNOWN_VERBS:
        return stem + "e"         # making -> make
    # unknown verb: best-effort heuristics in the same order
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in VOWELS:
        return stem[:-1]
    return stem


def _is_past_form(word: str) -> bool:
    w = _norm(word)
    if w in PAST_FORMS:
        return True
    return len(w) > 3 and w.endswith("ed")


# ---------------------------------------------------------------------------
# classification


def classify_style(raw: str) -> QueryStyle:
    """Surface-feature style classification; total and deterministic."""
    text = raw.strip()
    if not text:
        return QueryStyle.FRAGMENT
    if text.endswith("?"):
        return QueryStyle.INTERROGATIVE
    words = [_norm(w) for w in text.split()]
    words = [w for w in words if w]
    if not words:
        return QueryStyle.FRAGMENT
    head = words[0]
    if head in WH_WORDS or head in LEADING_AUXILIARIES:
        return QueryStyle.INTERROGATIVE
    if head in IMPERATIVE_VERBS and not (len(words) > 1
                                         and _is_past_form(words[1])):
        return QueryStyle.IMPERATIVE
    if _find_progressive(words) is not None:
        return QueryStyle.DECLARATIVE_PRESENT
    if _find_third_person_verb(words) is not None:
        return QueryStyle.DECLARATIVE_PRESENT
    if any(w in _PRESENT_AUX for w in words):
        return QueryStyle.DECLARATIVE_PRESENT
    if any(_is_past_form(w) for w in words):
        return QueryStyle.DECLARATIVE_PAST
    return QueryStyle.FRAGMENT


def _find_progressive(words: list[str]) -> tuple[int, int] | None:
    """Index pair (aux, participle) of the first present-progressive
    construction, allowing one intervening adverb."""
    for i, w in enumerate(words):
        if w in _PRESENT_AUX:
            for j in (i + 1, i + 2):
                if j < len(words) and words[j].endswith("ing") \
                        and len(words[j]) >= 5:
                    return i, j
    return None


def _find_third_person_verb(words: list[str]) -> tuple[int, str] | None:
    """First token that de-inflects to a known base verb via -s/-es."""
    for i, w in enumerate(words):
        base = base_from_third_person(w)
        if base is not None:
            return i, base
    return None


# ---------------------------------------------------------------------------
# canonicalization


def unify_rules(raw: str) -> str:
    """Deterministic canonicalization into declarative past tense.

    Pure function; unhandled constructions pass through with surface
    normalization only, leaving validation to flag them.
    """
    text = raw.strip()
    if not text:
        return ""
    style = classify_style(text)
    core = text.rstrip(" .!?")
    words = core.split()
    if not words:
        return ""

    if style is QueryStyle.INTERROGATIVE:
        words = _statement_from_question(words)
    elif style is QueryStyle.IMPERATIVE:
        words = ["A", "person", past_tense(_norm(words[0]))] + words[1:]
    elif style is QueryStyle.DECLARATIVE_PRESENT:
        words = _shift_present_to_past(words)

    words = _ensure_subject(words)
    sentence = " ".join(words)
    for pattern, repl in _REPAIRS:
        sentence = pattern.sub(repl, sentence)
    sentence = sentence[0].upper() + sentence[1:]
    return sentence + "."


def _statement_from_question(words: list[str]) -> list[str]:
    lower = [_norm(w) for w in words]
    if len(words) >= 4 and lower[0] in ("what", "which") and lower[1] == "did":
        subject = words[2]
        return [subject, past_tense(lower[3]), "an", "object"] + words[4:]
    if len(words) >= 4 and lower[0] in ("where", "when") and lower[1] == "did":
        return [words[2], past_tense(lower[3])] + words[4:]
    if len(words) >= 3 and lower[0] == "did":
        return [words[1], past_tense(lower[2])] + words[3:]
    if len(words) >= 3 and lower[0] in WH_WORDS \
            and lower[1] in ("is", "are", "was", "were"):
        copula = "were" if lower[1] in ("are", "were") else "was"
        return words[2:] + [copula, "visible"]
    # unconvertible question: drop the question mark, normalize downstream
    return words


def _shift_present_to_past(words: list[str]) -> list[str]:
    lower = [_norm(w) for w in words]
    prog = _find_progressive(lower)
    if prog is not None:
        i, j = prog
        base = base_from_progressive(lower[j])
        out = words[:i] + words[i + 1:j] + [past_tense(base)] + words[j + 1:]
        return out
    third = _find_third_person_verb(lower)
    if third is not None:
        i, base = third
        return words[:i] + [past_tense(base)] + words[i + 1:]
    for i, w in enumerate(lower):
        if w in _PRESENT_AUX:
            words = list(words)
            words[i] = "were" if w == "are" else "was"
            return words
    return words


def _ensure_subject(words: list[str]) -> list[str]:
    if not words:
        return words
    head = _norm(words[0])
    if head == "i":
        return ["I"] + words[1:]
    if head in SINGULAR_PERSON_NOUNS:
        return ["A"] + words
    if head in PLURAL_PERSON_NOUNS:
        return ["The"] + words
    if head in PAST_FORMS or (head not in PRONOUN_SUBJECTS
                              and head not in DETERMINERS
                              and _is_past_form(words[0])):
        # sentence starts with a bare verb: supply the generic agent
        return ["A", "person"] + [words[0].lower()] + words[1:]
    return words


# ---------------------------------------------------------------------------
# validation


_PLACEHOLDER = re.compile(r"\b(something|somewhere)\b", re.IGNORECASE)


def validate_canonical(candidate: str) -> tuple[bool, list[str]]:
    """Check a candidate against the canonical form.

    Returns (ok, reason codes).  Surface checks (interrogative, period,
    sentence count, capitalization) run first; grammatical heuristics
    (subject, progressive, placeholders) only apply to non-interrogative
    candidates, where they are meaningful.
    """
    text = candidate.strip()
    if not text:
        return False, ["empty"]
    reasons: list[str] = []
    if "?" in text:
        reasons.append("interrogative")
    if not text.endswith("."):
        reasons.append("no_terminal_period")
    body = text[:-1] if text[-1] in ".!?" else text
    if "." in body or "!" in body or "\n" in body:
        reasons.append("multiple_sentences")
    if text[0].isalpha() and text[0].islower():
        reasons.append("lowercase_start")
    if "interrogative" not in reasons:
        words = [_norm(w) for w in body.split()]
        words = [w for w in words if w]
        if not _has_subject(words):
            reasons.append("no_subject")
        if _find_progressive(words) is not None:
            reasons.append("present_progressive")
        if _PLACEHOLDER.search(body):
            reasons.append("vague_placeholder")
    return not reasons, reasons


def _has_subject(words: list[str]) -> bool:
    if not words:
        return False
    head = words[0]
    if head in PRONOUN_SUBJECTS:
        return True
    return head in DETERMINERS and len(words) >= 2
