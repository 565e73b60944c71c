"""Shared domain types and their canonical JSON serialization.

Every other module exchanges these value types. All of them are immutable
(frozen dataclasses), so they are safe to copy across threads, and all of
them round-trip losslessly through ``to_dict``/``from_dict`` and the JSON
helpers ``dumps``/``loads``. The canonical wire form is UTF-8 JSON with
lexicographically sorted keys, which keeps content hashing byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Mapping, Optional

from .hashing import fnv1a64_hex


class ValidationError(ValueError):
    """A domain value violated one of its invariants."""


class Property(str, Enum):
    """Live event properties the pipeline generates content for."""

    GOLF = "golf"
    TENNIS = "tennis"
    FOOTBALL = "football"
    MUSIC = "music"


class Priority(str, Enum):
    NORMAL = "normal"
    FAST_TRACK = "fast_track"


class PronounClass(str, Enum):
    FEMININE = "feminine"
    MASCULINE = "masculine"
    NEUTRAL = "neutral"


class ContentState(str, Enum):
    DRAFT = "draft"
    PENDING_REVIEW = "pending_review"
    PUBLISHED = "published"
    REJECTED = "rejected"


#: Legal content state transitions: draft -> (pending_review ->)? published | rejected.
STATE_TRANSITIONS: dict[ContentState, frozenset[ContentState]] = {
    ContentState.DRAFT: frozenset(
        {ContentState.PENDING_REVIEW, ContentState.PUBLISHED, ContentState.REJECTED}
    ),
    ContentState.PENDING_REVIEW: frozenset(
        {ContentState.PUBLISHED, ContentState.REJECTED}
    ),
    ContentState.PUBLISHED: frozenset(),
    ContentState.REJECTED: frozenset(),
}


def _freeze_mapping(doc: Mapping[str, Any]) -> dict[str, Any]:
    for key in doc:
        if not isinstance(key, str) or not key:
            raise ValidationError(f"payload keys must be non-empty strings, got {key!r}")
    return dict(doc)


@dataclass(frozen=True)
class ScoringEvent:
    """A property event carried on the bus: a golf shot, a tennis set end,
    a fantasy roster update, or an artist content request."""

    event_id: str
    property: Property
    scene_type: str
    payload: dict[str, Any] = field(default_factory=dict)
    feed_timestamps: dict[str, float] = field(default_factory=dict)
    attempt_count: int = 0
    priority: Priority = Priority.NORMAL

    def __post_init__(self):
        if not self.event_id:
            raise ValidationError("event_id must be non-empty")
        if not self.scene_type:
            raise ValidationError("scene_type must be non-empty")
        object.__setattr__(self, "payload", _freeze_mapping(self.payload))
        object.__setattr__(self, "feed_timestamps", dict(self.feed_timestamps))
        if self.attempt_count < 0:
            raise ValidationError("attempt_count must be non-negative")

    def with_attempt(self) -> "ScoringEvent":
        """Copy of this event with attempt_count bumped, used on requeue."""
        return replace(self, attempt_count=self.attempt_count + 1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "property": self.property.value,
            "scene_type": self.scene_type,
            "payload": self.payload,
            "feed_timestamps": self.feed_timestamps,
            "attempt_count": self.attempt_count,
            "priority": self.priority.value,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ScoringEvent":
        return cls(
            event_id=doc["event_id"],
            property=Property(doc["property"]),
            scene_type=doc["scene_type"],
            payload=dict(doc.get("payload", {})),
            feed_timestamps=dict(doc.get("feed_timestamps", {})),
            attempt_count=int(doc.get("attempt_count", 0)),
            priority=Priority(doc.get("priority", "normal")),
        )


@dataclass(frozen=True)
class PromptDraft:
    """Instruction plus the structured input it should be applied to."""

    instruction: str
    input_tuple: dict[str, Any] = field(default_factory=dict)
    desired_scene: str = ""

    def __post_init__(self):
        if not self.instruction:
            raise ValidationError("instruction must be non-empty")
        object.__setattr__(self, "input_tuple", dict(self.input_tuple))

    def to_dict(self) -> dict[str, Any]:
        return {
            "instruction": self.instruction,
            "input_tuple": self.input_tuple,
            "desired_scene": self.desired_scene,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PromptDraft":
        return cls(
            instruction=doc["instruction"],
            input_tuple=dict(doc.get("input_tuple", {})),
            desired_scene=doc.get("desired_scene", ""),
        )


#: Clause every prompt preamble must carry. Content generation is refused a
#: preamble without it, and screening rejects text that violates it.
HAP_CLAUSE = "Do not include hateful, abusive, or profane content."


@dataclass(frozen=True)
class EngineeredPrompt:
    """Fully rendered prompt: preamble, instruction, few-shot examples,
    retrieved context, avoid-topics, and the final rendered text.

    ``scene_type`` and ``input_data`` are provenance carried along so the
    offline mock backend can synthesize an answer without a real model.
    """

    preamble: str
    instruction: str
    few_shot: tuple[tuple[str, str], ...] = ()
    context_passages: tuple[str, ...] = ()
    avoid_topics: tuple[str, ...] = ()
    rendered: str = ""
    scene_type: str = ""
    input_data: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if HAP_CLAUSE not in self.preamble:
            raise ValidationError("prompt preamble is missing the content prohibition clause")
        object.__setattr__(self, "few_shot", tuple((str(a), str(b)) for a, b in self.few_shot))
        object.__setattr__(self, "context_passages", tuple(self.context_passages))
        object.__setattr__(self, "avoid_topics", tuple(self.avoid_topics))
        object.__setattr__(self, "input_data", dict(self.input_data))

    def to_dict(self) -> dict[str, Any]:
        return {
            "preamble": self.preamble,
            "instruction": self.instruction,
            "few_shot": [list(pair) for pair in self.few_shot],
            "context_passages": list(self.context_passages),
            "avoid_topics": list(self.avoid_topics),
            "rendered": self.rendered,
            "scene_type": self.scene_type,
            "input_data": self.input_data,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "EngineeredPrompt":
        return cls(
            preamble=doc["preamble"],
            instruction=doc["instruction"],
            few_shot=tuple((a, b) for a, b in doc.get("few_shot", [])),
            context_passages=tuple(doc.get("context_passages", [])),
            avoid_topics=tuple(doc.get("avoid_topics", [])),
            rendered=doc.get("rendered", ""),
            scene_type=doc.get("scene_type", ""),
            input_data=dict(doc.get("input_data", {})),
        )


class ClaimKind(str, Enum):
    RANK = "rank"
    SCORE = "score"
    COUNT = "count"
    DATE = "date"
    NAME = "name"
    OTHER = "other"


@dataclass(frozen=True)
class Claim:
    """A checkable assertion parsed out of generated text."""

    kind: ClaimKind
    surface: str
    value: Any
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValidationError("claim offsets out of order")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "surface": self.surface,
            "value": self.value,
            "start": self.start,
            "end": self.end,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Claim":
        return cls(
            kind=ClaimKind(doc["kind"]),
            surface=doc["surface"],
            value=doc["value"],
            start=int(doc["start"]),
            end=int(doc["end"]),
        )


class VerificationStatus(str, Enum):
    VERIFIED = "verified"
    CORRECTED = "corrected"
    UNVERIFIABLE = "unverifiable"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class VerificationVerdict:
    claim: Claim
    status: VerificationStatus
    correction: Optional[str] = None

    def __post_init__(self):
        if self.status is VerificationStatus.CORRECTED and self.correction is None:
            raise ValidationError("corrected verdict requires a correction")

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim": self.claim.to_dict(),
            "status": self.status.value,
            "correction": self.correction,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "VerificationVerdict":
        return cls(
            claim=Claim.from_dict(doc["claim"]),
            status=VerificationStatus(doc["status"]),
            correction=doc.get("correction"),
        )


@dataclass(frozen=True)
class GeneratedContent:
    """Raw and post-processed text plus provenance and publication state."""

    content_id: str
    source_event: str
    raw_text: str
    final_text: str = ""
    verdicts: tuple[VerificationVerdict, ...] = ()
    state: ContentState = ContentState.DRAFT
    revision: int = 0

    def __post_init__(self):
        if not self.content_id:
            raise ValidationError("content_id must be non-empty")
        if self.revision < 0:
            raise ValidationError("revision must be non-negative")
        object.__setattr__(self, "verdicts", tuple(self.verdicts))

    def transition(self, new_state: ContentState) -> "GeneratedContent":
        if new_state not in STATE_TRANSITIONS[self.state]:
            raise ValidationError(f"illegal state transition {self.state.value} -> {new_state.value}")
        return replace(self, state=new_state)

    def to_dict(self) -> dict[str, Any]:
        return {
            "content_id": self.content_id,
            "source_event": self.source_event,
            "raw_text": self.raw_text,
            "final_text": self.final_text,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "state": self.state.value,
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "GeneratedContent":
        return cls(
            content_id=doc["content_id"],
            source_event=doc["source_event"],
            raw_text=doc["raw_text"],
            final_text=doc.get("final_text", ""),
            verdicts=tuple(VerificationVerdict.from_dict(v) for v in doc.get("verdicts", [])),
            state=ContentState(doc.get("state", "draft")),
            revision=int(doc.get("revision", 0)),
        )


@dataclass(frozen=True)
class PersonRecord:
    full_name: str
    nation: str = ""
    rank: Optional[int] = None
    pronoun_class: PronounClass = PronounClass.NEUTRAL

    def __post_init__(self):
        if not self.full_name:
            raise ValidationError("full_name must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "full_name": self.full_name,
            "nation": self.nation,
            "rank": self.rank,
            "pronoun_class": self.pronoun_class.value,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PersonRecord":
        return cls(
            full_name=doc["full_name"],
            nation=doc.get("nation", ""),
            rank=doc.get("rank"),
            pronoun_class=PronounClass(doc.get("pronoun_class", "neutral")),
        )


@dataclass(frozen=True)
class GroundTruthFeeds:
    """Streaming ground truth snapshot: scores, schedule, draws or
    leaderboard, head-to-head stats, and the roster of known people.

    ``scores`` is keyed by person name; every key must resolve to a roster
    entry so claim verification can attach facts to people.
    """

    scores: dict[str, Any] = field(default_factory=dict)
    schedule: dict[str, Any] = field(default_factory=dict)
    draws_or_leaderboard: dict[str, Any] = field(default_factory=dict)
    head_to_head: dict[str, Any] = field(default_factory=dict)
    rosters: tuple[PersonRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rosters", tuple(self.rosters))
        names = {p.full_name for p in self.rosters}
        missing = [name for name in self.scores if name not in names]
        if missing:
            raise ValidationError(f"scores reference people missing from rosters: {missing}")

    def roster_names(self) -> tuple[str, ...]:
        return tuple(p.full_name for p in self.rosters)

    def person(self, name: str) -> Optional[PersonRecord]:
        for record in self.rosters:
            if record.full_name == name:
                return record
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "scores": self.scores,
            "schedule": self.schedule,
            "draws_or_leaderboard": self.draws_or_leaderboard,
            "head_to_head": self.head_to_head,
            "rosters": [p.to_dict() for p in self.rosters],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "GroundTruthFeeds":
        return cls(
            scores=dict(doc.get("scores", {})),
            schedule=dict(doc.get("schedule", {})),
            draws_or_leaderboard=dict(doc.get("draws_or_leaderboard", {})),
            head_to_head=dict(doc.get("head_to_head", {})),
            rosters=tuple(PersonRecord.from_dict(p) for p in doc.get("rosters", [])),
        )


# --- canonical keys ---------------------------------------------------------

DiscriminatorFn = Callable[[Mapping[str, Any]], str]

#: Per-scene payload discriminators. The fallback hashes the whole payload,
#: so unknown scenes still get stable keys; registering a function here only
#: makes the key human-readable.
_DISCRIMINATORS: dict[tuple[Property, str], DiscriminatorFn] = {}


def register_discriminator(prop: Property, scene_type: str, fn: DiscriminatorFn) -> None:
    _DISCRIMINATORS[(prop, scene_type)] = fn


def _payload_digest(payload: Mapping[str, Any]) -> str:
    return fnv1a64_hex(json.dumps(payload, sort_keys=True, separators=(",", ":")))


register_discriminator(
    Property.GOLF, "shot", lambda p: f"{p['player']}-h{p['hole']}"
)
register_discriminator(
    Property.TENNIS, "set_end", lambda p: f"{p['player_one']}-v-{p['player_two']}-s{p.get('set', 1)}"
)
register_discriminator(
    Property.TENNIS, "match_start", lambda p: f"{p['player_one']}-v-{p['player_two']}"
)
register_discriminator(
    Property.FOOTBALL, "grade_rationale", lambda p: f"{p['player']}-{p['stat_type']}"
)
register_discriminator(
    Property.MUSIC, "artist_story", lambda p: f"{p['artist']}-{p.get('kind', 'story')}"
)


def canonical_key(event: ScoringEvent) -> str:
    """Stable partition routing and content identity key for an event.

    Pure function of property, scene type, and the payload discriminator;
    feed timestamps, attempt count, and priority never contribute.
    """
    fn = _DISCRIMINATORS.get((event.property, event.scene_type))
    try:
        discriminator = fn(event.payload) if fn else _payload_digest(event.payload)
    except KeyError:
        discriminator = _payload_digest(event.payload)
    discriminator = str(discriminator).replace("/", "_").replace(" ", "_")
    return f"{event.property.value}/{event.scene_type}/{discriminator}"


# --- serialization helpers --------------------------------------------------

_TYPE_REGISTRY = {
    "ScoringEvent": ScoringEvent,
    "PromptDraft": PromptDraft,
    "EngineeredPrompt": EngineeredPrompt,
    "Claim": Claim,
    "VerificationVerdict": VerificationVerdict,
    "GeneratedContent": GeneratedContent,
    "PersonRecord": PersonRecord,
    "GroundTruthFeeds": GroundTruthFeeds,
}


def dumps(obj: Any) -> str:
    """Canonical JSON text for any core type (sorted keys, compact)."""
    return json.dumps(obj.to_dict(), sort_keys=True, separators=(",", ":"))


def loads(type_name: str, text: str | bytes) -> Any:
    """Parse canonical JSON back into the named core type."""
    cls = _TYPE_REGISTRY.get(type_name)
    if cls is None:
        raise ValidationError(f"unknown core type {type_name!r}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"corrupted {type_name} document: {exc}") from exc
    return cls.from_dict(doc)


def roundtrip(obj: Any) -> Any:
    """serialize-then-parse; identity on all fields for every core type."""
    return loads(type(obj).__name__, dumps(obj))
