import hashlib

import pytest

from tests.conftest import build_record
from vtgkit.unify import (QueryCache, QueryStyle, UnifierBackend,
                          UnifierUnavailable, UnifyResult, classify_style,
                          default_system_prompt, unify_corpus, unify_llm,
                          unify_rules, validate_canonical)
from vtgkit.unify.rules import (base_from_progressive, base_from_third_person,
                                past_tense)

# raw query -> (canonical rewrite, validator reasons for the raw form)
FIXTURES = {
    "Add onion to the pan":
        ("A person added onion to the pan.",
         ["no_terminal_period", "no_subject"]),
    "What did I put in the bucket?":
        ("I put an object in the bucket.",
         ["interrogative", "no_terminal_period"]),
    "Takes a cup out of the cabinet.":
        ("A person took a cup out of the cabinet.", ["no_subject"]),
    "person takes a cup out the fridge.":
        ("A person took a cup out of the fridge.",
         ["lowercase_start", "no_subject"]),
    "A woman is walking along a track.":
        ("A woman walked along a track.", ["present_progressive"]),
}


@pytest.mark.parametrize("text, style", [
    ("Did he open the door?", QueryStyle.INTERROGATIVE),
    ("What did I put in the bucket?", QueryStyle.INTERROGATIVE),
    ("where is the hammer", QueryStyle.INTERROGATIVE),
    ("Add onion to the pan", QueryStyle.IMPERATIVE),
    ("Takes a cup out of the cabinet.", QueryStyle.DECLARATIVE_PRESENT),
    ("A woman is walking along a track.", QueryStyle.DECLARATIVE_PRESENT),
    ("A person opened the door.", QueryStyle.DECLARATIVE_PAST),
    ("walk", QueryStyle.FRAGMENT),
    ("", QueryStyle.FRAGMENT),
])
def test_classify_style(text, style):
    assert classify_style(text) is style


@pytest.mark.parametrize("base, past", [
    ("walk", "walked"),
    ("carry", "carried"),
    ("chop", "chopped"),
    ("grab", "grabbed"),
    ("place", "placed"),
    ("open", "opened"),
    ("put", "put"),
    ("take", "took"),
    ("run", "ran"),
    ("go", "went"),
])
def test_past_tense(base, past):
    assert past_tense(base) == past


def test_base_from_third_person():
    assert base_from_third_person("takes") == "take"
    assert base_from_third_person("carries") == "carry"
    assert base_from_third_person("watches") == "watch"
    assert base_from_third_person("xyzzies") is None


def test_base_from_progressive():
    assert base_from_progressive("walking") == "walk"
    assert base_from_progressive("running") == "run"
    assert base_from_progressive("placing") == "place"
    assert base_from_progressive("tying") == "tie"


@pytest.mark.parametrize("raw", sorted(FIXTURES))
def test_unify_rules_pinned_rewrites(raw):
    unified, _ = FIXTURES[raw]
    assert unify_rules(raw) == unified


@pytest.mark.parametrize("raw", sorted(FIXTURES))
def test_unify_rules_idempotent_and_deterministic(raw):
    once = unify_rules(raw)
    assert unify_rules(once) == once
    assert unify_rules(raw) == once


@pytest.mark.parametrize("raw", sorted(FIXTURES))
def test_validator_accepts_canonical_rejects_raw(raw):
    unified, reasons = FIXTURES[raw]
    assert validate_canonical(unified) == (True, [])
    assert validate_canonical(raw) == (False, reasons)


def test_validator_accepts_first_person():
    assert validate_canonical("I placed an object into the bucket.") == \
        (True, [])


@pytest.mark.parametrize("text, reasons", [
    ("", ["empty"]),
    ("   ", ["empty"]),
    ("A person did something.", ["vague_placeholder"]),
    ("A person ran. Then stopped.", ["multiple_sentences"]),
])
def test_validator_remaining_reason_codes(text, reasons):
    assert validate_canonical(text) == (False, reasons)


def test_default_system_prompt_bundled():
    prompt = default_system_prompt()
    assert prompt.startswith("Unified Video Query Conversion")
    assert prompt.rstrip().endswith("ending in a period.")


def test_backend_validation():
    with pytest.raises(ValueError, match="unknown backend kind"):
        UnifierBackend(kind="psychic")
    with pytest.raises(ValueError, match="needs endpoint and model"):
        UnifierBackend(kind="llm")
    b = UnifierBackend(kind="llm", endpoint="http://x", model="m",
                       system_prompt="be brief")
    assert b.prompt == "be brief"
    assert b.descriptor == "llm:m"
    assert UnifierBackend().descriptor == "rules"


def test_unify_result_guards_validity():
    with pytest.raises(ValueError, match="failed canonical validation"):
        UnifyResult(raw="x", unified="not canonical", backend="rules",
                    valid=True)


def test_query_cache_key_is_content_addressed():
    key = QueryCache.key("m", "prompt", "raw")
    prompt_digest = hashlib.sha256(b"prompt").hexdigest()
    payload = "\x1f".join(("m", prompt_digest, "raw")).encode()
    assert key == hashlib.sha256(payload).hexdigest()
    assert QueryCache.key("m", "prompt2", "raw") != key
    assert QueryCache.key("m2", "prompt", "raw") != key


def test_query_cache_round_trip(tmp_path):
    cache = QueryCache(tmp_path / "cache")
    key = QueryCache.key("m", "p", "r")
    assert cache.get(key) is None
    cache.put(key, "A person ran.", {"raw": "r", "extra_reasons": []})
    assert cache.get(key) == ("A person ran.",
                              {"raw": "r", "extra_reasons": []})
    assert len(cache) == 1
    with pytest.raises(ValueError, match="single line"):
        cache.put(key, "two\nlines", {})


def test_query_cache_ignores_corrupt_entry(tmp_path):
    cache = QueryCache(tmp_path)
    key = QueryCache.key("m", "p", "r")
    (tmp_path / f"{key}.txt").write_text("no metadata line")
    assert cache.get(key) is None


def llm_backend(url, **kwargs):
    kwargs.setdefault("max_retries", 1)
    kwargs.setdefault("timeout_s", 5.0)
    kwargs.setdefault("backoff_s", 0.01)
    return UnifierBackend(kind="llm", endpoint=url, model="qwen3-4b",
                          **kwargs)


def test_unify_llm_round_trip_and_cache(tmp_path, chat_server):
    backend = llm_backend(chat_server.url)
    cache = QueryCache(tmp_path)
    first = unify_llm("person opens door", backend, cache)
    assert first.unified == "A person opened the door."
    assert first.valid
    assert not first.cached
    assert first.latency_s > 0.0
    assert len(chat_server.calls) == 1
    payload = chat_server.calls[0]
    assert payload["model"] == "qwen3-4b"
    assert payload["messages"][0]["content"] == backend.prompt
    assert payload["messages"][1]["content"] == "person opens door"
    assert payload["temperature"] == 0.0
    assert payload["max_tokens"] == 64

    second = unify_llm("person opens door", backend, cache)
    assert second.cached
    assert second.latency_s == 0.0
    assert second.unified == first.unified
    assert len(chat_server.calls) == 1  # no second network call


def test_unify_llm_requires_llm_backend(tmp_path):
    with pytest.raises(ValueError, match="llm backend"):
        unify_llm("x", UnifierBackend(), QueryCache(tmp_path))


def test_unify_llm_flags_multi_paragraph(tmp_path, chat_server):
    chat_server.reply = \
        lambda payload: (200, "A person ran.\n\nHope that helps!")
    res = unify_llm("runs", llm_backend(chat_server.url), QueryCache(tmp_path))
    assert res.unified == "A person ran."
    assert not res.valid
    assert "multi_paragraph_response" in res.reasons


def test_unify_llm_flags_empty_response(tmp_path, chat_server):
    chat_server.reply = lambda payload: (200, "   ")
    res = unify_llm("runs", llm_backend(chat_server.url), QueryCache(tmp_path))
    assert not res.valid
    assert "empty_response" in res.reasons


def test_unify_llm_caches_invalid_answers_too(tmp_path, chat_server):
    chat_server.reply = lambda payload: (200, "not canonical")
    cache = QueryCache(tmp_path)
    backend = llm_backend(chat_server.url)
    res = unify_llm("runs", backend, cache)
    assert not res.valid
    again = unify_llm("runs", backend, cache)
    assert again.cached
    assert not again.valid
    assert len(chat_server.calls) == 1


def test_unify_llm_unreachable_endpoint(tmp_path):
    backend = llm_backend("http://127.0.0.1:9/nowhere", max_retries=2)
    with pytest.raises(UnifierUnavailable, match="unifier unavailable"):
        unify_llm("x", backend, QueryCache(tmp_path))


def test_unify_llm_sends_api_key(tmp_path, chat_server, monkeypatch):
    monkeypatch.setenv("VTG_UNIFIER_API_KEY", "sk-test")
    # header acceptance is all we can observe; the call must still work
    res = unify_llm("x", llm_backend(chat_server.url), QueryCache(tmp_path))
    assert res.valid


def corpus(n):
    return [build_record(video_id=f"v{i}",
                         query=f"person opens door number {i}")
            for i in range(n)]


def test_unify_corpus_rules_backend():
    records = corpus(3)
    out, report = unify_corpus(records, UnifierBackend())
    assert [r.unified_query for r in out] == \
        [unify_rules(r.raw_query) for r in records]
    assert report.queries == 3
    assert report.llm_calls == 0
    assert report.cache_hits == 0
    assert report.total_tflops == 0.0


def test_unify_corpus_llm_second_run_is_all_cache(tmp_path, chat_server):
    records = corpus(6)
    backend = llm_backend(chat_server.url, max_concurrency=2)
    cache = QueryCache(tmp_path)
    out, report = unify_corpus(records, backend, cache)
    assert all(r.unified_query == "A person opened the door." for r in out)
    assert report.llm_calls == 6
    assert report.cache_hits == 0
    assert report.total_tflops == pytest.approx(0.136 * 6)
    assert len(chat_server.calls) == 6

    out2, report2 = unify_corpus(records, backend, cache)
    assert [r.unified_query for r in out2] == [r.unified_query for r in out]
    assert report2.llm_calls == 0
    assert report2.cache_hits == 6
    assert report2.total_tflops == 0.0
    assert len(chat_server.calls) == 6  # caching removed every call


def test_unify_corpus_invalid_answers_fall_back_to_rules(tmp_path,
                                                         chat_server):
    chat_server.reply = lambda payload: (200, "no good")
    records = corpus(2)
    out, report = unify_corpus(records, llm_backend(chat_server.url),
                               QueryCache(tmp_path))
    assert report.fallbacks == 2
    assert report.failures == 0
    assert [r.unified_query for r in out] == \
        [unify_rules(r.raw_query) for r in records]


def test_unify_corpus_transport_failures(tmp_path, chat_server):
    def reply(payload):
        text = payload["messages"][1]["content"]
        if text.endswith("0") or text.endswith("1"):
            return 500, "boom"
        return 200, "A person opened the door."

    chat_server.reply = reply
    records = corpus(10)
    backend = llm_backend(chat_server.url)

    # 2/10 failed: above the default 0.1 ceiling, so the run aborts
    with pytest.raises(UnifierUnavailable, match="2/10 calls failed"):
        unify_corpus(records, backend, QueryCache(tmp_path / "a"))

    out, report = unify_corpus(records, backend, QueryCache(tmp_path / "b"),
                               fail_fraction=0.5)
    assert report.failures == 2
    assert report.llm_calls == 10
    # failed calls burn no compute
    assert report.total_tflops == pytest.approx(0.136 * 8)
    failed = [r for r in out if r.raw_query.endswith(("0", "1"))]
    assert all(r.unified_query == unify_rules(r.raw_query) for r in failed)


def test_unify_corpus_unknown_model_has_no_tflops(tmp_path, chat_server):
    backend = UnifierBackend(kind="llm", endpoint=chat_server.url,
                             model="mystery-model", max_retries=1)
    _, report = unify_corpus(corpus(2), backend, QueryCache(tmp_path))
    assert report.total_tflops is None
