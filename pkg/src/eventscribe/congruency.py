"""Cross-feed consistency checks and the preprocessing stage.

Live feeds update at different cadences: the tracking feed can land before
the scoring feed, a human-entered value can lag, and a device can emit an
impossible score. Before any text is generated, each event passes through
``check_congruency``; anything but a consistent verdict turns into a
``RequeueSignal`` so the event is retried after a short delay instead of
producing text from inconsistent data.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import httpx

from .bus import DEFAULT_REQUEUE_DELAY
from .clock import Clock
from .model import GroundTruthFeeds, PromptDraft, Property, ScoringEvent
from .rules import legality_problems


class ConsistencyStatus(str, Enum):
    CONSISTENT = "consistent"
    STALE_FEED = "stale_feed"
    MISSING_DATA = "missing_data"
    ILLEGAL_VALUE = "illegal_value"


@dataclass(frozen=True)
class ConsistencyVerdict:
    status: ConsistencyStatus
    detail: str = ""
    offending_feeds: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "offending_feeds", tuple(self.offending_feeds))
        if self.status is ConsistencyStatus.CONSISTENT and self.offending_feeds:
            raise ValueError("a consistent verdict cannot name offending feeds")


@dataclass(frozen=True)
class RequeueSignal:
    verdict: ConsistencyVerdict
    delay: float = DEFAULT_REQUEUE_DELAY


#: Payload fields an event must carry before generation can proceed, by
#: (property, scene_type). Extend alongside the scene registry.
REQUIRED_PAYLOAD: dict[tuple[Property, str], tuple[str, ...]] = {
    (Property.GOLF, "shot"): ("player", "hole", "lie"),
    (Property.TENNIS, "match_start"): ("player_one", "player_two"),
    (Property.TENNIS, "set_end"): ("player_one", "player_two", "set_score"),
    (Property.FOOTBALL, "grade_rationale"): ("player", "stat_type", "percentile"),
    (Property.FOOTBALL, "slot_filler"): ("stat_type", "band"),
    (Property.MUSIC, "artist_story"): ("artist",),
}


def _missing_fields(event: ScoringEvent) -> list[str]:
    required = REQUIRED_PAYLOAD.get((event.property, event.scene_type), ())
    return [name for name in required if event.payload.get(name) in (None, "")]


def _cross_feed_disagreements(event: ScoringEvent, feeds: GroundTruthFeeds) -> list[str]:
    """Compare the event's discriminators to the score feed for its subject."""
    problems = []
    subject = event.payload.get("player") or event.payload.get("player_one")
    if not subject:
        return problems
    feed_row = feeds.scores.get(str(subject))
    if feed_row is None:
        return problems
    for key in ("hole", "set", "round"):
        event_value = event.payload.get(key)
        feed_value = feed_row.get(key) if isinstance(feed_row, Mapping) else None
        if event_value is not None and feed_value is not None and event_value != feed_value:
            problems.append(f"{key} is {event_value} in the event but {feed_value} in the score feed")
    return problems


def check_congruency(event: ScoringEvent, feeds: GroundTruthFeeds) -> ConsistencyVerdict:
    """Deterministic rule pass: missing data, then legality, then staleness."""
    missing = _missing_fields(event)
    if missing:
        return ConsistencyVerdict(
            ConsistencyStatus.MISSING_DATA,
            detail=f"payload missing required fields: {', '.join(missing)}",
            offending_feeds=("track",),
        )
    problems = legality_problems(event.property, event.payload)
    if problems:
        return ConsistencyVerdict(
            ConsistencyStatus.ILLEGAL_VALUE,
            detail="; ".join(problems),
            offending_feeds=("score",),
        )
    disagreements = _cross_feed_disagreements(event, feeds)
    if disagreements:
        return ConsistencyVerdict(
            ConsistencyStatus.STALE_FEED,
            detail="; ".join(disagreements),
            offending_feeds=("track", "score"),
        )
    return ConsistencyVerdict(ConsistencyStatus.CONSISTENT)


# --- normalization ---------------------------------------------------------------

_UNIT_VALUE = re.compile(
    r"^\s*(\d+(?:\.\d+)?)\s*(ft|feet|foot|yd|yds|yard|yards|m|meter|meters|mph)\s*$",
    re.IGNORECASE,
)

_CANONICAL_UNITS = {
    "ft": "ft", "feet": "ft", "foot": "ft",
    "yd": "yd", "yds": "yd", "yard": "yd", "yards": "yd",
    "m": "m", "meter": "m", "meters": "m",
    "mph": "mph",
}


def _canonical_person(name: str, feeds: GroundTruthFeeds) -> str:
    """Exact roster match modulo case and surrounding whitespace. Fuzzy
    repair is the post-processor's job."""
    wanted = name.strip().casefold()
    for record in feeds.rosters:
        if record.full_name.casefold() == wanted:
            return record.full_name
    return name


def normalize_payload(payload: Mapping[str, Any], feeds: GroundTruthFeeds) -> dict[str, Any]:
    clean: dict[str, Any] = {}
    for key, value in payload.items():
        if isinstance(value, str):
            unit_match = _UNIT_VALUE.match(value)
            if unit_match:
                number = float(unit_match.group(1))
                clean[key] = int(number) if number.is_integer() else number
                clean[f"{key}_unit"] = _CANONICAL_UNITS[unit_match.group(2).lower()]
                continue
            if key in ("player", "player_one", "player_two", "artist"):
                clean[key] = _canonical_person(value, feeds)
                continue
        clean[key] = value
    return clean


_FIELD_REF = re.compile(r"\{(\w+)\}")


def resolve_field_references(text: str, data: Mapping[str, Any]) -> str:
    """Substitute {field} references that resolve in the clean data; leave
    unknown references untouched."""
    def repl(match: re.Match) -> str:
        key = match.group(1)
        return str(data[key]) if key in data else match.group(0)

    return _FIELD_REF.sub(repl, text)


PreprocessResult = Union[tuple[dict[str, Any], PromptDraft], RequeueSignal]


def preprocess(
    event: ScoringEvent,
    draft: PromptDraft,
    feeds: GroundTruthFeeds,
    requeue_delay: float = DEFAULT_REQUEUE_DELAY,
) -> PreprocessResult:
    """Gate an event on congruency; on success return normalized payload and
    a draft with field references resolved, otherwise a requeue signal."""
    verdict = check_congruency(event, feeds)
    if verdict.status is not ConsistencyStatus.CONSISTENT:
        return RequeueSignal(verdict=verdict, delay=requeue_delay)
    clean = normalize_payload(event.payload, feeds)
    corrected = replace(
        draft,
        instruction=resolve_field_references(draft.instruction, clean),
        input_tuple=clean,
    )
    return clean, corrected


# --- feed sources ----------------------------------------------------------------


class FeedSource:
    """Anything that can produce the current ground-truth snapshot."""

    def snapshot(self) -> GroundTruthFeeds:
        raise NotImplementedError


class StaticFeedSource(FeedSource):
    def __init__(self, feeds: GroundTruthFeeds):
        self._feeds = feeds

    def snapshot(self) -> GroundTruthFeeds:
        return self._feeds


class JsonFeedSource(FeedSource):
    """Feeds from a JSON file, re-read when the file changes."""

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._mtime: Optional[float] = None
        self._cached: Optional[GroundTruthFeeds] = None
        self._lock = threading.Lock()

    def snapshot(self) -> GroundTruthFeeds:
        with self._lock:
            mtime = self._path.stat().st_mtime
            if self._cached is None or mtime != self._mtime:
                self._cached = GroundTruthFeeds.from_dict(
                    json.loads(self._path.read_text("utf-8"))
                )
                self._mtime = mtime
            return self._cached


class HttpFeedSource(FeedSource):
    """Feeds polled from an HTTP endpoint at a minimum interval."""

    def __init__(
        self,
        url: str,
        clock: Clock,
        poll_interval: float = 10.0,
        client: Optional[httpx.Client] = None,
    ):
        self._url = url
        self._clock = clock
        self._interval = poll_interval
        self._client = client or httpx.Client(timeout=5.0)
        self._cached: Optional[GroundTruthFeeds] = None
        self._fetched_at: float = float("-inf")
        self._lock = threading.Lock()

    def snapshot(self) -> GroundTruthFeeds:
        with self._lock:
            now = self._clock.now()
            if self._cached is None or now - self._fetched_at >= self._interval:
                response = self._client.get(self._url)
                response.raise_for_status()
                self._cached = GroundTruthFeeds.from_dict(response.json())
                self._fetched_at = now
            return self._cached


class ScriptedFeedSource(FeedSource):
    """Time-scripted feeds for convergence scenarios: per subject, the score
    feed serves a stale row until an agreed simulated time."""

    def __init__(self, clock: Clock, base: GroundTruthFeeds):
        self._clock = clock
        self._base = base
        self._overrides: list[tuple[str, dict[str, Any], float]] = []

    def stale_until(self, subject: str, stale_row: dict[str, Any], until: float) -> None:
        self._overrides.append((subject, stale_row, until))

    def snapshot(self) -> GroundTruthFeeds:
        now = self._clock.now()
        scores = dict(self._base.scores)
        for subject, stale_row, until in self._overrides:
            if now < until:
                scores[subject] = stale_row
        return replace(self._base, scores=scores)
