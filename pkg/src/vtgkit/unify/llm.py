"""LLM-backed query unification with an on-disk cache.

The backend talks to a chat-style HTTP endpoint (system prompt + raw
query in, assistant text out).  Responses are cached content-addressed
under (model, prompt hash, raw query) so re-runs are free, and invalid
or unreachable calls degrade to the deterministic rule backend.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import os
import pathlib
import tempfile
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import requests

from ..cost import unifier_tflops_per_query
from ..ingest import CanonicalRecord, with_unified
from .rules import unify_rules, validate_canonical

DEFAULT_API_KEY_ENV = "VTG_UNIFIER_API_KEY"

_BACKEND_KINDS = ("rules", "llm")


class UnifierUnavailable(RuntimeError):
    """The LLM endpoint could not be reached (or failed too often)."""


@functools.lru_cache(maxsize=1)
def default_system_prompt() -> str:
    """The bundled conversion prompt, byte-for-byte."""
    return (resources.files("vtgkit.data") / "unifier_prompt.txt") \
        .read_text("utf-8")


@dataclasses.dataclass(frozen=True)
class UnifierBackend:
    """Unification backend selector plus transport settings.

    ``system_prompt=None`` means the bundled default.  ``backoff_s`` is
    the first retry delay; later retries double it.
    """

    kind: str = "rules"
    endpoint: str = ""
    model: str = ""
    system_prompt: str | None = None
    timeout_s: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4
    api_key_env: str = DEFAULT_API_KEY_ENV
    temperature: float = 0.0
    max_tokens: int = 64
    backoff_s: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "llm" and not (self.endpoint and self.model):
            raise ValueError("llm backend needs endpoint and model")
        if self.max_retries < 1 or self.max_concurrency < 1:
            raise ValueError("max_retries and max_concurrency must be >= 1")

    @property
    def prompt(self) -> str:
        if self.system_prompt is not None:
            return self.system_prompt
        return default_system_prompt()

    @property
    def descriptor(self) -> str:
        return f"llm:{self.model}" if self.kind == "llm" else "rules"


@dataclasses.dataclass(frozen=True)
class UnifyResult:
    raw: str
    unified: str
    backend: str
    valid: bool
    reasons: tuple[str, ...] = ()
    latency_s: float = 0.0
    cached: bool = False

    def __post_init__(self) -> None:
        if self.valid and not validate_canonical(self.unified)[0]:
            raise ValueError("valid result failed canonical validation")


class QueryCache:
    """Directory-backed store, one file per key hash.

    File layout: the unified string on the first line, a JSON metadata
    line after it.  Writes go through a temp file and os.replace, so
    concurrent inserts of the same key are last-writer-wins.
    """

    def __init__(self, root: str | os.PathLike[str]) -> None:
        self.root = pathlib.Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(model: str, system_prompt: str, raw: str) -> str:
        prompt_digest = hashlib.sha256(system_prompt.encode("utf-8")).hexdigest()
        payload = "\x1f".join((model, prompt_digest, raw))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> pathlib.Path:
        return self.root / f"{key}.txt"

    def get(self, key: str) -> tuple[str, dict] | None:
        try:
            text = self._path(key).read_text("utf-8")
        except FileNotFoundError:
            return None
        lines = text.split("\n")
        if len(lines) < 2:
            return None
        try:
            metadata = json.loads(lines[1])
        except json.JSONDecodeError:
            return None
        return lines[0], metadata

    def put(self, key: str, unified: str, metadata: dict) -> None:
        if "\n" in unified:
            raise ValueError("cached value must be a single line")
        body = unified + "\n" + json.dumps(metadata, ensure_ascii=False) + "\n"
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(body)
            os.replace(tmp, self._path(key))
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise

    def __len__(self) -> int:
        return sum(1 for _ in self.root.glob("*.txt"))


def unify_llm(raw: str, backend: UnifierBackend,
              cache: QueryCache) -> UnifyResult:
    """Unify one query through the LLM endpoint, cache first.

    Transport failures retry with exponential backoff, then raise
    UnifierUnavailable.  Responses are cached whether or not they
    validate, so reruns never re-pay for a bad answer.
    """
    if backend.kind != "llm":
        raise ValueError("unify_llm requires an llm backend")
    key = QueryCache.key(backend.model, backend.prompt, raw)
    hit = cache.get(key)
    if hit is not None:
        unified, metadata = hit
        extra = tuple(metadata.get("extra_reasons", ()))
        ok, reasons = validate_canonical(unified)
        return UnifyResult(raw=raw, unified=unified,
                           backend=backend.descriptor,
                           valid=ok and not extra,
                           reasons=tuple(reasons) + extra,
                           latency_s=0.0, cached=True)
    started = time.perf_counter()
    text = _post_chat(raw, backend)
    latency = time.perf_counter() - started
    lines = text.strip().splitlines() or [""]
    unified = lines[0].strip()
    extra: tuple[str, ...] = ()
    if any(line.strip() for line in lines[1:]):
        extra = ("multi_paragraph_response",)
    if not unified:
        extra = ("empty_response",)
    ok, reasons = validate_canonical(unified)
    cache.put(key, unified, {"raw": raw, "model": backend.model,
                             "extra_reasons": list(extra)})
    return UnifyResult(raw=raw, unified=unified, backend=backend.descriptor,
                       valid=ok and not extra,
                       reasons=tuple(reasons) + extra,
                       latency_s=latency, cached=False)


def _post_chat(raw: str, backend: UnifierBackend) -> str:
    headers = {}
    api_key = os.environ.get(backend.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload = {
        "model": backend.model,
        "messages": [
            {"role": "system", "content": backend.prompt},
            {"role": "user", "content": raw},
        ],
        "temperature": backend.temperature,
        "max_tokens": backend.max_tokens,
    }
    last_error: Exception | None = None
    for attempt in range(backend.max_retries):
        if attempt:
            time.sleep(backend.backoff_s * 2 ** (attempt - 1))
        try:
            response = requests.post(backend.endpoint, json=payload,
                                     headers=headers,
                                     timeout=backend.timeout_s)
            response.raise_for_status()
            doc = response.json()
            return str(doc["choices"][0]["message"]["content"])
        except (requests.RequestException, ValueError,
                KeyError, IndexError, TypeError) as exc:
            last_error = exc
    raise UnifierUnavailable("unifier unavailable") from last_error


@dataclasses.dataclass(frozen=True)
class UnifierCostReport:
    """Aggregate accounting for one unify_corpus run.

    ``fallbacks`` counts invalid LLM answers downgraded to the rule
    backend; ``failures`` counts transport failures (also downgraded).
    ``total_tflops`` is None when the model has no registered constant.
    """

    queries: int
    llm_calls: int
    cache_hits: int
    fallbacks: int
    failures: int
    mean_latency_s: float
    total_tflops: float | None


def unify_corpus(records: Sequence[CanonicalRecord],
                 backend: UnifierBackend,
                 cache: QueryCache | None = None,
                 fail_fraction: float = 0.1,
                 ) -> tuple[list[CanonicalRecord], UnifierCostReport]:
    """Fill unified_query for every record.

    LLM mode runs at most ``backend.max_concurrency`` requests in
    flight; per-record problems degrade to unify_rules so the output is
    total.  The whole run aborts only when more than ``fail_fraction``
    of the network calls failed outright.
    """
    if backend.kind == "rules":
        out = [with_unified(r, unify_rules(r.raw_query)) for r in records]
        report = UnifierCostReport(queries=len(records), llm_calls=0,
                                   cache_hits=0, fallbacks=0, failures=0,
                                   mean_latency_s=0.0, total_tflops=0.0)
        return out, report
    if cache is not None:
        return _unify_corpus_llm(records, backend, cache, fail_fraction)
    with tempfile.TemporaryDirectory(prefix="vtgkit-unify-") as tmp:
        return _unify_corpus_llm(records, backend, QueryCache(tmp),
                                 fail_fraction)


def _unify_corpus_llm(records: Sequence[CanonicalRecord],
                      backend: UnifierBackend, cache: QueryCache,
                      fail_fraction: float,
                      ) -> tuple[list[CanonicalRecord], UnifierCostReport]:
    def one(record: CanonicalRecord) -> tuple[CanonicalRecord, UnifyResult | None]:
        try:
            result = unify_llm(record.raw_query, backend, cache)
        except UnifierUnavailable:
            return with_unified(record, unify_rules(record.raw_query)), None
        unified = result.unified if result.valid \
            else unify_rules(record.raw_query)
        return with_unified(record, unified), result

    with ThreadPoolExecutor(max_workers=backend.max_concurrency) as pool:
        outcomes = list(pool.map(one, records))

    out = [record for record, _ in outcomes]
    results = [res for _, res in outcomes]
    failures = sum(1 for res in results if res is None)
    cache_hits = sum(1 for res in results if res is not None and res.cached)
    llm_calls = sum(1 for res in results
                    if res is None or not res.cached)
    fallbacks = sum(1 for res in results
                    if res is not None and not res.valid)
    latencies = [res.latency_s for res in results
                 if res is not None and not res.cached]
    mean_latency = sum(latencies) / len(latencies) if latencies else 0.0
    per_query = unifier_tflops_per_query(backend.model)
    new_calls = llm_calls - failures
    total_tflops = None if per_query is None else per_query * new_calls
    report = UnifierCostReport(queries=len(records), llm_calls=llm_calls,
                               cache_hits=cache_hits, fallbacks=fallbacks,
                               failures=failures,
                               mean_latency_s=mean_latency,
                               total_tflops=total_tflops)
    if llm_calls and failures / llm_calls > fail_fraction:
        raise UnifierUnavailable(
            f"unifier unavailable: {failures}/{llm_calls} calls failed")
    return out, report
