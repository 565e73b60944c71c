"""Shared fixtures: rosters, feeds, exemplar banks, and event factories."""

from __future__ import annotations

import random

import pytest

from eventscribe.clock import SimulatedClock
from eventscribe.model import (
    GroundTruthFeeds,
    PersonRecord,
    Priority,
    PromptDraft,
    PronounClass,
    Property,
    ScoringEvent,
)


@pytest.fixture
def clock():
    return SimulatedClock()


GOLF_ROSTER = (
    PersonRecord("Jon Rahm", nation="Spain", rank=3, pronoun_class=PronounClass.MASCULINE),
    PersonRecord("Jon Ramm", nation="Germany", rank=46, pronoun_class=PronounClass.MASCULINE),
    PersonRecord("Ana Soto", nation="Mexico", rank=12, pronoun_class=PronounClass.FEMININE),
    PersonRecord("Sam Reed", nation="USA", rank=7, pronoun_class=PronounClass.NEUTRAL),
)


@pytest.fixture
def golf_feeds() -> GroundTruthFeeds:
    return GroundTruthFeeds(
        scores={
            "Jon Rahm": {"hole": 9, "strokes": 2, "rank": 3, "score_to_par": -4},
            "Ana Soto": {"hole": 9, "strokes": 3, "rank": 12, "score_to_par": 1},
            "Sam Reed": {"hole": 4, "strokes": 1, "rank": 7, "score_to_par": 0},
        },
        schedule={"round": 2, "groups": {"Jon Rahm": "10:40", "Ana Soto": "10:40"}},
        draws_or_leaderboard={"leader": "Jon Rahm"},
        head_to_head={},
        rosters=GOLF_ROSTER,
    )


def make_golf_shot(
    event_id: str = "ev-1",
    player: str = "Jon Rahm",
    hole: int = 9,
    lie: str = "Pine Straw",
    strokes: int = 2,
    **overrides,
) -> ScoringEvent:
    payload = {
        "player": player,
        "hole": hole,
        "lie": lie,
        "strokes": strokes,
    }
    payload.update(overrides.pop("payload", {}))
    return ScoringEvent(
        event_id=event_id,
        property=Property.GOLF,
        scene_type="shot",
        payload=payload,
        feed_timestamps={"track": 100.0, "score": 100.0},
        **overrides,
    )


@pytest.fixture
def golf_shot() -> ScoringEvent:
    return make_golf_shot()


@pytest.fixture
def golf_draft() -> PromptDraft:
    return PromptDraft(
        instruction="Write one sentence of factual golf commentary.",
        input_tuple={"player": "Jon Rahm", "hole": 9, "lie": "Pine Straw"},
        desired_scene="shot",
    )


def random_event(rng: random.Random, index: int) -> ScoringEvent:
    payload = {
        f"k{rng.randrange(5)}": rng.choice([rng.randrange(100), "txt", 1.5, True, None])
        for _ in range(rng.randrange(1, 5))
    }
    payload["player"] = rng.choice(["A B", "C D", "E F"])
    return ScoringEvent(
        event_id=f"ev-{index}",
        property=rng.choice(list(Property)),
        scene_type=rng.choice(["shot", "set_end", "grade_rationale", "artist_story"]),
        payload=payload,
        feed_timestamps={"feed": rng.random() * 1000},
        attempt_count=rng.randrange(3),
        priority=rng.choice(list(Priority)),
    )
