"""Pluggable text generation.

Two backends sit behind one ``generate`` call signature: an offline mock
that synthesizes scene-appropriate answers deterministically (so the whole
pipeline can run and be tested without model weights), and a remote HTTP
client for a hosted inference service.

The mock's corruption injector flips exactly one numeric or name token with
a configured probability, reproducing the failure taxonomy the detectors
downstream have to catch: wrong statistics, misspelled or swapped names. Every
injection is recorded so tests can audit what should have been caught.
"""

from __future__ import annotations

import json
import math
import os
import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Protocol

import httpx

from .hashing import fnv1a64
from .model import EngineeredPrompt, ValidationError
from .prompts import STOP_SEQUENCE


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    top_k: int = 10
    top_p: float = 1.0
    beams: int = 1
    max_tokens: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.top_k < 1:
            raise ValidationError("top_k must be a positive integer")
        if not 0 < self.top_p <= 1:
            raise ValidationError("top_p must be in (0, 1]")
        if self.beams < 1:
            raise ValidationError("beams must be a positive integer")
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be a positive integer")


#: Decoding operating points per property: conservative low-temperature
#: golf, moderate-temperature tennis with beams, football with a wide top-k,
#: and high-creativity music generation.
PRESETS: dict[str, DecodingParams] = {
    "golf": DecodingParams(temperature=0.1, top_k=10, top_p=1.0, beams=1, max_tokens=64),
    "tennis": DecodingParams(temperature=1.0, top_k=10, top_p=1.0, beams=5, max_tokens=64),
    "football": DecodingParams(temperature=1.0, top_k=50, top_p=1.0, beams=1, max_tokens=64),
    "music": DecodingParams(temperature=0.85, top_k=100, top_p=1.0, beams=1, max_tokens=160),
}


@dataclass(frozen=True)
class BackendProfile:
    name: str
    preset: DecodingParams
    corruption_rate: float = 0.0

    def __post_init__(self):
        if not 0 <= self.corruption_rate <= 1:
            raise ValidationError("corruption_rate must be in [0, 1]")
        if self.name == "remote" and self.corruption_rate != 0:
            raise ValidationError("remote backends cannot inject corruption")


class GenerationError(RuntimeError):
    retryable = False


class RetryableGenerationError(GenerationError):
    retryable = True


class PermanentGenerationError(GenerationError):
    retryable = False


class Backend(Protocol):
    def generate(self, prompt: EngineeredPrompt, params: DecodingParams) -> str:
        ...


def strip_stop(text: str) -> str:
    """Text up to the stop sequence, trailing whitespace removed."""
    idx = text.find(STOP_SEQUENCE)
    if idx >= 0:
        return text[:idx].rstrip()
    return text.rstrip()


def _truncate_tokens(text: str, max_tokens: int) -> str:
    tokens = text.split()
    if len(tokens) <= max_tokens:
        return text
    return " ".join(tokens[:max_tokens])


def estimate_capacity(
    target_rps: float, per_call_latency: float, per_worker_concurrency: int
) -> int:
    """Workers needed to sustain a request rate: ceil(rps * latency / concurrency)."""
    if per_call_latency <= 0 or per_worker_concurrency <= 0:
        raise ValidationError("latency and concurrency must be positive")
    if target_rps < 0:
        raise ValidationError("target_rps must be non-negative")
    if target_rps == 0:
        return 0
    return math.ceil(target_rps * per_call_latency / per_worker_concurrency)


# --- mock backend ------------------------------------------------------------------

_NUMBER = re.compile(r"\b\d+(?:\.\d+)?\b")

_DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class Injection:
    """Record of one planted corruption, for the detection oracle."""

    prompt_hash: int
    scene_type: str
    kind: str  # "number" | "name"
    original: str
    corrupted: str


@dataclass
class AnswerSpec:
    template: str
    variants: dict[str, list[str]] = field(default_factory=dict)
    subject_field: str = ""


def _load_answer_specs() -> dict[str, AnswerSpec]:
    doc = json.loads((_DATA_DIR / "answers.json").read_text("utf-8"))
    return {
        scene: AnswerSpec(
            template=entry["template"],
            variants=dict(entry.get("variants", {})),
            subject_field=entry.get("subject_field", ""),
        )
        for scene, entry in doc.items()
    }


def _load_slot_answers() -> dict[str, Any]:
    return json.loads((_DATA_DIR / "slot_answers.json").read_text("utf-8"))


def _article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


class MockBackend:
    """Answer-template-driven generator for offline runs.

    Fills the scene's answer template from the prompt's input data with
    seeded lexical variation scaled by temperature, appends the stop
    sequence, and (with probability ``corruption_rate``) perturbs exactly one
    numeric or name token.
    """

    def __init__(self, corruption_rate: float = 0.0, roster_names: tuple[str, ...] = ()):
        if not 0 <= corruption_rate <= 1:
            raise ValidationError("corruption_rate must be in [0, 1]")
        self.corruption_rate = corruption_rate
        self.roster_names = tuple(roster_names)
        self.injections: list[Injection] = []
        self._answers = _load_answer_specs()
        self._slots = _load_slot_answers()

    def generate(self, prompt: EngineeredPrompt, params: DecodingParams) -> str:
        if not prompt.rendered:
            raise ValidationError("prompt has no rendered text")
        prompt_hash = fnv1a64(prompt.rendered)
        rng = random.Random((params.seed << 16) ^ prompt_hash)
        if prompt.scene_type == "slot_filler":
            text = self._slot_answer(prompt, rng, params.temperature)
        else:
            text = self._scene_answer(prompt, rng, params.temperature)
        text = self._maybe_corrupt(text, prompt, rng, prompt_hash)
        text = text + STOP_SEQUENCE
        return _truncate_tokens(text, params.max_tokens)

    # internal

    def _pick(self, options: list[str], rng: random.Random, temperature: float) -> str:
        # temperature widens the variant pool: 0 keeps the canonical phrasing
        available = 1 + int(min(temperature, 1.0) * (len(options) - 1))
        return options[rng.randrange(available)] if available > 1 else options[0]

    def _scene_answer(self, prompt: EngineeredPrompt, rng: random.Random, temperature: float) -> str:
        spec = self._answers.get(prompt.scene_type)
        if spec is None:
            raise PermanentGenerationError(f"mock has no answer template for scene {prompt.scene_type!r}")
        values: dict[str, Any] = dict(prompt.input_data)
        score = values.get("set_score")
        if isinstance(score, (list, tuple)) and len(score) == 2:
            values["set_score_a"], values["set_score_b"] = score[0], score[1]
        for slot, options in spec.variants.items():
            values[slot] = self._pick(options, rng, temperature)
        try:
            return spec.template.format_map(values)
        except KeyError as exc:
            raise PermanentGenerationError(f"mock input data missing field {exc}") from exc

    _SLOT_LEADS = ["", "This week, ", "Looking at the matchup, ", "For your lineup, "]

    def _slot_answer(self, prompt: EngineeredPrompt, rng: random.Random, temperature: float) -> str:
        stat = prompt.input_data.get("stat_type")
        band = prompt.input_data.get("band")
        sentence = self._slots["stat_sentences"].get(stat)
        if sentence is None:
            raise PermanentGenerationError(f"mock has no slot sentence for stat {stat!r}")
        adjective = self._slots["band_adjectives"].get(band, str(band))
        # placeholders stay literal: only the band styling is resolved here
        sentence = sentence.replace("{band_article}", _article(adjective)).replace("{band}", adjective)
        lead = self._pick(self._SLOT_LEADS, rng, temperature)
        if lead:
            sentence = lead + sentence[0].lower() + sentence[1:]
        return sentence

    def _maybe_corrupt(
        self, text: str, prompt: EngineeredPrompt, rng: random.Random, prompt_hash: int
    ) -> str:
        if self.corruption_rate == 0 or rng.random() >= self.corruption_rate:
            return text
        spec = self._answers.get(prompt.scene_type)
        subject = ""
        if spec is not None and spec.subject_field:
            subject = str(prompt.input_data.get(spec.subject_field, ""))
        targets: list[tuple[str, str, int, int]] = [
            ("number", m.group(0), m.start(), m.end()) for m in _NUMBER.finditer(text)
        ]
        if subject:
            at = text.find(subject)
            if at >= 0:
                targets.append(("name", subject, at, at + len(subject)))
        if not targets:
            return text
        kind, original, start, end = targets[rng.randrange(len(targets))]
        if kind == "number":
            corrupted = self._perturb_number(original, rng)
        else:
            corrupted = self._swap_name(original, rng)
        self.injections.append(
            Injection(prompt_hash, prompt.scene_type, kind, original, corrupted)
        )
        return text[:start] + corrupted + text[end:]

    def _perturb_number(self, surface: str, rng: random.Random) -> str:
        delta = rng.randint(1, 9)
        if "." in surface:
            value = float(surface) + (delta if rng.random() < 0.5 else -delta)
            if value < 0:
                value = float(surface) + delta
            return f"{value:g}"
        value = int(surface) + (delta if rng.random() < 0.5 else -delta)
        if value < 0:
            value = int(surface) + delta
        return str(value)

    def _swap_name(self, name: str, rng: random.Random) -> str:
        others = [n for n in self.roster_names if n != name]
        if others:
            return others[rng.randrange(len(others))]
        # no roster: misspell by dropping one interior character
        if len(name) > 2:
            idx = rng.randrange(1, len(name) - 1)
            return name[:idx] + name[idx + 1 :]
        return name + name[-1]


# --- remote backend --------------------------------------------------------------


class RemoteBackend:
    """HTTP JSON inference client.

    Protocol: POST {prompt, temperature, top_k, top_p, beams, max_tokens,
    stop} and read {text}. Timeouts and 5xx responses are retried once with
    backoff; 429 means the budget is exhausted and is permanent.
    """

    def __init__(
        self,
        url: str,
        timeout: float = 30.0,
        auth_token_env: str = "EVENTSCRIBE_GENERATOR_TOKEN",
        retry_backoff: float = 0.25,
        client: Optional[httpx.Client] = None,
    ):
        self.url = url
        self.retry_backoff = retry_backoff
        headers = {}
        token = os.environ.get(auth_token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = client or httpx.Client(timeout=timeout, headers=headers)

    def generate(self, prompt: EngineeredPrompt, params: DecodingParams) -> str:
        if not prompt.rendered:
            raise ValidationError("prompt has no rendered text")
        body = {
            "prompt": prompt.rendered,
            "temperature": params.temperature,
            "top_k": params.top_k,
            "top_p": params.top_p,
            "beams": params.beams,
            "max_tokens": params.max_tokens,
            "stop": STOP_SEQUENCE,
        }
        try:
            return self._call(body)
        except RetryableGenerationError:
            time.sleep(self.retry_backoff)
            return self._call(body)

    def _call(self, body: dict) -> str:
        try:
            response = self._client.post(self.url, json=body)
        except httpx.TimeoutException as exc:
            raise RetryableGenerationError(f"inference timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise RetryableGenerationError(f"inference transport error: {exc}") from exc
        if response.status_code == 429:
            raise PermanentGenerationError("generation budget exceeded")
        if response.status_code >= 500:
            raise RetryableGenerationError(f"inference server error {response.status_code}")
        if response.status_code >= 400:
            raise PermanentGenerationError(f"inference rejected request: {response.status_code}")
        text = response.json().get("text")
        if text is None:
            raise PermanentGenerationError("inference response missing text")
        return _truncate_tokens(str(text), body["max_tokens"])
