"""Chat-completion client for note generation, with retries, caching and an
offline mode that delegates to the deterministic template renderer.

The wire format is the OpenAI-compatible ``/chat/completions`` JSON API.
Credentials come from an environment variable only. Completed bundles are
cached on disk keyed by (record_id, prompt hash, model id, temperature), so a
rerun only touches records that previously failed.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import requests

from .notegen import (
    GENERIC_NOTE_DELIMITER,
    NOTES_PER_GENERIC_PROMPT,
    ROUTE_SPECIAL_GENERIC,
    PromptPlan,
    PromptTemplates,
    render_compact_prompt,
    render_offline_compact,
    render_offline_note,
    render_prompt,
)

DEFAULT_SYSTEM_MESSAGE = (
    "You are a general practitioner, and need to summarize the patient encounter "
    "in a clinical note. Your notes are detailed and extensive."
)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class TransportError(RuntimeError):
    """Network-level failure that survived all retry attempts."""


class RequestError(RuntimeError):
    """Non-retryable HTTP error; carries the response body."""

    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}: {body[:500]}")
        self.status = status
        self.body = body


class GenerationError(RuntimeError):
    """The endpoint answered but produced no usable completion."""


@dataclass(frozen=True)
class GenConfig:
    mode: str = "offline"  # offline | llm
    endpoint: str = "https://api.openai.com/v1"
    model: str | None = None
    temperature: float = 1.2
    max_tokens: int = 1000
    system_message: str = DEFAULT_SYSTEM_MESSAGE
    max_attempts: int = 4
    backoff_base: float = 0.5
    concurrency: int = 4
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 120.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.mode not in ("offline", "llm"):
            raise ValueError(f"mode must be 'offline' or 'llm', got {self.mode!r}")

    def require_credentials(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ValueError(
                f"llm mode needs an API key in the {self.api_key_env} environment variable"
            )
        return key


@dataclass
class GenResult:
    text: str
    model_id: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_s: float = 0.0


@dataclass
class NoteBundle:
    """One record's prompts and generated notes, plus generation metadata."""

    record_id: int
    route: str
    prompt: str
    note: str
    compact_prompt: str
    compact_note: str
    generator: str  # llm | offline
    model_id: str
    timestamp: str
    prompt_hash: str
    cache_key: str = ""
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "NoteBundle":
        return cls(**d)

    @property
    def succeeded(self) -> bool:
        return self.error is None and bool(self.note)


def _hash_prompt(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _cache_key(record_id: int, prompt: str, config: GenConfig) -> str:
    raw = json.dumps(
        [int(record_id), _hash_prompt(prompt), config.model or "offline", config.temperature]
    )
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


def generate(
    prompt: str,
    config: GenConfig,
    offline_render: Callable[[], str] | None = None,
    session: requests.Session | None = None,
) -> GenResult:
    """Send one prompt and return the completion text plus metadata.

    In offline mode the ``offline_render`` callable produces the text instead
    of any network call.
    """
    if config.mode == "offline":
        if offline_render is None:
            raise ValueError("offline mode needs an offline_render callable")
        return GenResult(text=offline_render(), model_id="offline")

    key = config.require_credentials()
    if not config.model:
        raise ValueError("llm mode needs config.model to be set")
    payload = {
        "model": config.model,
        "messages": [
            {"role": "system", "content": config.system_message},
            {"role": "user", "content": prompt},
        ],
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    url = config.endpoint.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
    http = session or requests

    last_exc: Exception | None = None
    for attempt in range(config.max_attempts):
        if attempt:
            delay = config.backoff_base * (2 ** (attempt - 1)) * (1 + random.random())
            time.sleep(delay)
        start = time.monotonic()
        try:
            resp = http.post(url, json=payload, headers=headers, timeout=config.timeout)
        except requests.RequestException as exc:
            last_exc = exc
            continue
        latency = time.monotonic() - start
        if resp.status_code in RETRYABLE_STATUS:
            last_exc = RequestError(resp.status_code, resp.text)
            continue
        if resp.status_code != 200:
            raise RequestError(resp.status_code, resp.text)
        doc = resp.json()
        try:
            text = doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GenerationError(f"malformed completion response: {exc}") from exc
        if not text or not text.strip():
            raise GenerationError("endpoint returned an empty completion")
        usage = doc.get("usage", {})
        return GenResult(
            text=text,
            model_id=doc.get("model", config.model),
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency_s=latency,
        )
    raise TransportError(
        f"request failed after {config.max_attempts} attempts: {last_exc}"
    ) from last_exc


class NoteCache:
    """Directory of per-record bundle JSON files; writes are serialized."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, record_id: int) -> Path:
        return self.directory / f"bundle_{int(record_id):07d}.json"

    def load(self, record_id: int, cache_key: str) -> NoteBundle | None:
        path = self._path(record_id)
        if not path.exists():
            return None
        try:
            bundle = NoteBundle.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError):
            return None
        if not bundle.succeeded or bundle.cache_key != cache_key:
            return None
        return bundle

    def store(self, bundle: NoteBundle) -> None:
        with self._lock:
            self._path(bundle.record_id).write_text(
                json.dumps(bundle.to_dict()) + "\n", encoding="utf-8"
            )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _offline_bundle(plan: PromptPlan, record: Mapping, prompt: str, seed: int, config: GenConfig,
                    templates: PromptTemplates | None) -> NoteBundle:
    rng = np.random.default_rng((int(seed), int(plan.record_id), 1))
    note = render_offline_note(plan, record, rng, templates)
    compact_prompt = render_compact_prompt(note, templates)
    return NoteBundle(
        record_id=plan.record_id,
        route=plan.route,
        prompt=prompt,
        note=note,
        compact_prompt=compact_prompt,
        compact_note=render_offline_compact(note),
        generator="offline",
        model_id="offline",
        timestamp=_now(),
        prompt_hash=_hash_prompt(prompt),
        cache_key=_cache_key(plan.record_id, prompt, config),
    )


def _split_generic_completion(text: str) -> list[str]:
    notes = []
    current: list[str] = []
    for line in text.splitlines():
        if line.strip() == GENERIC_NOTE_DELIMITER:
            if current:
                notes.append("\n".join(current).strip())
            current = []
        else:
            current.append(line)
    if current and "\n".join(current).strip():
        notes.append("\n".join(current).strip())
    return [n for n in notes if n]


def generate_corpus(
    plans: Sequence[PromptPlan],
    records: Sequence[Mapping],
    config: GenConfig,
    cache_dir: str | Path | None = None,
    templates: PromptTemplates | None = None,
    seed: int = 0,
) -> list[NoteBundle]:
    """Produce a note and a compact note for every (plan, record) pair.

    Per-record failures become error bundles instead of aborting the batch;
    rerunning with the same cache completes only the missing records. Special
    symptom-free generic prompts are batched three records per completion in
    llm mode and the generated notes are distributed in shuffled order.
    """
    if len(plans) != len(records):
        raise ValueError("plans and records must have the same length")
    for plan, rec in zip(plans, records):
        rid = rec.get("record_id", plan.record_id)
        if int(rid) != int(plan.record_id):
            raise ValueError(f"plan/record id mismatch: {plan.record_id} vs {rid}")
    if config.mode == "llm":
        config.require_credentials()
        if not config.model:
            raise ValueError("llm mode needs config.model to be set")

    cache = NoteCache(cache_dir) if cache_dir is not None else None
    prompts = [render_prompt(plan, rec, templates) for plan, rec in zip(plans, records)]
    bundles: dict[int, NoteBundle] = {}

    pending: list[int] = []
    for i, (plan, prompt) in enumerate(zip(plans, prompts)):
        if cache is not None:
            hit = cache.load(plan.record_id, _cache_key(plan.record_id, prompt, config))
            if hit is not None:
                bundles[i] = hit
                continue
        pending.append(i)

    if config.mode == "offline":
        for i in pending:
            bundle = _offline_bundle(plans[i], records[i], prompts[i], seed, config, templates)
            bundles[i] = bundle
            if cache is not None:
                cache.store(bundle)
        return [bundles[i] for i in range(len(plans))]

    session = requests.Session()

    def finish_with_note(i: int, note: str, model_id: str) -> NoteBundle:
        compact_prompt = render_compact_prompt(note, templates)
        compact = generate(compact_prompt, config, session=session)
        return NoteBundle(
            record_id=plans[i].record_id,
            route=plans[i].route,
            prompt=prompts[i],
            note=note,
            compact_prompt=compact_prompt,
            compact_note=compact.text,
            generator="llm",
            model_id=model_id,
            timestamp=_now(),
            prompt_hash=_hash_prompt(prompts[i]),
            cache_key=_cache_key(plans[i].record_id, prompts[i], config),
        )

    def error_bundle(i: int, exc: Exception) -> NoteBundle:
        return NoteBundle(
            record_id=plans[i].record_id,
            route=plans[i].route,
            prompt=prompts[i],
            note="",
            compact_prompt="",
            compact_note="",
            generator="llm",
            model_id=config.model or "",
            timestamp=_now(),
            prompt_hash=_hash_prompt(prompts[i]),
            error=f"{type(exc).__name__}: {exc}",
        )

    def run_single(i: int) -> NoteBundle:
        try:
            result = generate(prompts[i], config, session=session)
            return finish_with_note(i, result.text, result.model_id)
        except Exception as exc:  # recorded per record, batch continues
            return error_bundle(i, exc)

    generic = [i for i in pending if plans[i].route == ROUTE_SPECIAL_GENERIC]
    singles = [i for i in pending if plans[i].route != ROUTE_SPECIAL_GENERIC]

    rng = np.random.default_rng((int(seed), 0xC0))
    generic = [generic[j] for j in rng.permutation(len(generic))] if generic else []
    batches = [generic[k : k + NOTES_PER_GENERIC_PROMPT]
               for k in range(0, len(generic), NOTES_PER_GENERIC_PROMPT)]

    def run_generic_batch(batch: list[int]) -> list[NoteBundle]:
        try:
            result = generate(prompts[batch[0]], config, session=session)
            notes = _split_generic_completion(result.text)
        except Exception as exc:
            return [error_bundle(i, exc) for i in batch]
        out = []
        for j, i in enumerate(batch):
            if j < len(notes):
                try:
                    out.append(finish_with_note(i, notes[j], result.model_id))
                except Exception as exc:
                    out.append(error_bundle(i, exc))
            else:
                out.append(error_bundle(
                    i, GenerationError(f"completion yielded {len(notes)} notes for a batch of {len(batch)}")
                ))
        return out

    with ThreadPoolExecutor(max_workers=max(1, config.concurrency)) as pool:
        single_futs = {i: pool.submit(run_single, i) for i in singles}
        batch_futs = [pool.submit(run_generic_batch, b) for b in batches]
        for i, fut in single_futs.items():
            bundles[i] = fut.result()
        for fut in batch_futs:
            for bundle in fut.result():
                idx = next(i for i in generic if plans[i].record_id == bundle.record_id)
                bundles[idx] = bundle

    if cache is not None:
        for bundle in bundles.values():
            if bundle.succeeded:
                cache.store(bundle)
    return [bundles[i] for i in range(len(plans))]
