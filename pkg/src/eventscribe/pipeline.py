"""The orchestrated dataflow.

Events come off the bus one partition at a time (fast-track partitions are
always polled first, so corrections never sit behind live-event backlog),
pass the congruency gate, get an engineered prompt, a generated draft, and a
fact-checked final text, then land in exactly one terminal state:

    published | pending_review | rejected | dead_letter

Every event carries a trace (verdicts, attempts, latency) and the runner can
prove conservation: nothing consumed is ever lost. The runner is a
cooperative single-threaded scheduler over a logical clock, which keeps
delayed-requeue and latency behavior exactly reproducible in tests; the
serve path spins it on a background thread against the wall clock.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional

from .bus import Envelope, MessageBus
from .clock import Clock, SimulatedClock
from .config import PipelineConfig, SceneConfig, resolve_scene_assets
from .congruency import FeedSource, RequeueSignal, preprocess
from .generation import (
    Backend,
    DecodingParams,
    GenerationError,
    PRESETS,
    strip_stop,
)
from .hashing import fnv1a64
from .model import (
    ContentState,
    GeneratedContent,
    Priority,
    PromptDraft,
    Property,
    ScoringEvent,
    ValidationError,
    canonical_key,
)
from .postprocess import post
from .prompts import build_prompt
from .retrieval import RetrievalCorpus, retrieve_context
from .store import CdnCache, ContentPublisher, FileStore
from .templating import Template

CONSUMER_GROUP = "generators"

TERMINAL_STATES = ("published", "pending_review", "rejected", "dead_letter")


class ConflictError(RuntimeError):
    """Optimistic-lock failure: the item changed under the caller."""


@dataclass
class EventTrace:
    event_id: str
    content_id: str = ""
    terminal: str = ""
    requeues: int = 0
    regenerations: int = 0
    prompt_hash: int = 0
    submitted_at: float = 0.0
    completed_at: float = 0.0
    verdict_counts: dict[str, int] = field(default_factory=dict)

    @property
    def latency(self) -> float:
        return self.completed_at - self.submitted_at


@dataclass
class Scene:
    config: SceneConfig
    template: Template
    bank: Optional[Any]
    preset: DecodingParams


class SceneRegistry:
    def __init__(self, scenes: dict[tuple[Property, str], Scene]):
        self._scenes = scenes

    @classmethod
    def from_config(cls, config: PipelineConfig, base_dir: Path = Path(".")) -> "SceneRegistry":
        scenes = {}
        for key, scene_config in config.scenes.items():
            template, bank = resolve_scene_assets(scene_config, base_dir)
            scenes[key] = Scene(
                config=scene_config,
                template=template,
                bank=bank,
                preset=PRESETS[scene_config.preset_name()],
            )
        return cls(scenes)

    def get(self, prop: Property, scene_type: str) -> Optional[Scene]:
        return self._scenes.get((prop, scene_type))


class ContentRepository:
    """Authoritative content records with optimistic concurrency.

    Revisions gate every mutation: callers send the revision they saw, a
    mismatch raises ConflictError. State changes persist through the
    publisher so the review console and consumer fetches see one truth.
    """

    def __init__(self, publisher: ContentPublisher):
        self._publisher = publisher
        self._items: dict[str, GeneratedContent] = {}
        self._events: dict[str, ScoringEvent] = {}
        self._lock = threading.RLock()

    def record(self, content: GeneratedContent, event: ScoringEvent) -> None:
        with self._lock:
            self._items[content.content_id] = content
            self._events[content.content_id] = event
            if content.state is ContentState.PUBLISHED:
                self._publisher.publish(content)
            else:
                self._publisher.save_draft(content)

    def get(self, content_id: str) -> GeneratedContent:
        with self._lock:
            if content_id not in self._items:
                raise KeyError(content_id)
            return self._items[content_id]

    def source_event(self, content_id: str) -> ScoringEvent:
        return self._events[content_id]

    def current_revision(self, content_id: str) -> int:
        with self._lock:
            item = self._items.get(content_id)
            return item.revision if item else -1

    def list_by_state(self, state: ContentState) -> list[GeneratedContent]:
        with self._lock:
            return sorted(
                (c for c in self._items.values() if c.state is state),
                key=lambda c: c.content_id,
            )

    def _check_revision(self, content: GeneratedContent, expected_revision: int) -> None:
        if content.revision != expected_revision:
            raise ConflictError(
                f"{content.content_id}: revision {expected_revision} is stale "
                f"(current {content.revision})"
            )

    def edit_text(self, content_id: str, final_text: str, expected_revision: int) -> GeneratedContent:
        with self._lock:
            content = self.get(content_id)
            self._check_revision(content, expected_revision)
            if content.state is not ContentState.PENDING_REVIEW:
                raise ConflictError(f"{content_id} is not editable in state {content.state.value}")
            updated = replace(content, final_text=final_text, revision=content.revision + 1)
            self._items[content_id] = updated
            self._publisher.save_draft(updated)
            return updated

    def approve(self, content_id: str, expected_revision: int) -> tuple[GeneratedContent, bool]:
        """Publish a pending item; returns (content, whether a purge went out)."""
        with self._lock:
            content = self.get(content_id)
            self._check_revision(content, expected_revision)
            if content.state is not ContentState.PENDING_REVIEW:
                raise ConflictError(f"{content_id} is not pending review")
            published = content.transition(ContentState.PUBLISHED)
            self._items[content_id] = published
            purged = self._publisher.publish(published)
            return published, purged

    def reject(self, content_id: str, expected_revision: int) -> GeneratedContent:
        with self._lock:
            content = self.get(content_id)
            self._check_revision(content, expected_revision)
            if content.state is not ContentState.PENDING_REVIEW:
                raise ConflictError(f"{content_id} is not pending review")
            rejected = content.transition(ContentState.REJECTED)
            self._items[content_id] = rejected
            self._publisher.save_draft(rejected)
            return rejected


class PipelineRunner:
    """Single consumer-group scheduler over the topic's partitions."""

    def __init__(
        self,
        config: PipelineConfig,
        bus: MessageBus,
        clock: Clock,
        feeds: FeedSource,
        generator: Backend,
        registry: SceneRegistry,
        publisher: ContentPublisher,
        corpus: Optional[RetrievalCorpus] = None,
    ):
        self.config = config
        self.bus = bus
        self.clock = clock
        self.feeds = feeds
        self.generator = generator
        self.registry = registry
        self.publisher = publisher
        self.repository = ContentRepository(publisher)
        self.corpus = corpus
        self.traces: dict[str, EventTrace] = {}
        self._poll_order = self._build_poll_order()
        self._next_poll = 0
        self._step_lock = threading.Lock()
        if not bus.has_topic(config.topic):
            bus.create_topic(config.topic, config.partition_count, config.fast_track_partitions)

    def _build_poll_order(self) -> list[int]:
        fast = sorted(self.config.fast_track_partitions)
        normal = [p for p in range(self.config.partition_count) if p not in fast]
        return fast + normal

    # -- intake ------------------------------------------------------------------

    def submit(self, event: ScoringEvent, priority: Optional[Priority] = None) -> None:
        trace = self.traces.setdefault(event.event_id, EventTrace(event.event_id))
        if not trace.submitted_at:
            trace.submitted_at = self.clock.now()
        self.bus.publish(
            self.config.topic,
            canonical_key(event),
            event,
            priority or event.priority,
        )

    # -- scheduling ---------------------------------------------------------------

    def step(self) -> bool:
        """Process at most one envelope; fast-track partitions first, then
        normal partitions round-robin. Returns whether work was done.
        Serialized: the serve pump thread and inline API handlers may both
        drive the runner."""
        with self._step_lock:
            fast_count = len(self.config.fast_track_partitions)
            for idx in range(fast_count):
                env = self.bus.poll(self.config.topic, CONSUMER_GROUP, self._poll_order[idx])
                if env is not None:
                    self._process(env)
                    return True
            normal = self._poll_order[fast_count:]
            for offset in range(len(normal)):
                partition = normal[(self._next_poll + offset) % len(normal)]
                env = self.bus.poll(self.config.topic, CONSUMER_GROUP, partition)
                if env is not None:
                    self._next_poll = (self._next_poll + offset + 1) % len(normal)
                    self._process(env)
                    return True
            return False

    def run_until_quiescent(self, max_steps: int = 1_000_000) -> int:
        """Drain the topic, advancing simulated time over visibility gaps."""
        steps = 0
        while steps < max_steps:
            if self.step():
                steps += 1
                continue
            deadline = self.bus.next_visibility_deadline(self.config.topic, CONSUMER_GROUP)
            if deadline is None:
                break
            if isinstance(self.clock, SimulatedClock):
                self.clock.advance_to(deadline)
            else:  # pragma: no cover - live mode
                import time

                time.sleep(max(0.0, min(deadline - self.clock.now(), 0.05)))
        return steps

    # -- event processing -------------------------------------------------------------

    def _trace(self, event: ScoringEvent) -> EventTrace:
        trace = self.traces.setdefault(event.event_id, EventTrace(event.event_id))
        if not trace.submitted_at:
            trace.submitted_at = self.clock.now()
        return trace

    def _finish(self, trace: EventTrace, terminal: str) -> None:
        trace.terminal = terminal
        trace.completed_at = self.clock.now()

    def _charge_service_time(self) -> None:
        if isinstance(self.clock, SimulatedClock) and self.config.service_time:
            self.clock.advance(self.config.service_time)

    def _process(self, envelope: Envelope) -> None:
        event = envelope.payload
        trace = self._trace(event)
        scene = self.registry.get(event.property, event.scene_type)
        if scene is None:
            self.bus.ack(self.config.topic, CONSUMER_GROUP, envelope)
            self._finish(trace, "rejected")
            return

        feeds = self.feeds.snapshot()
        draft = PromptDraft(
            instruction=scene.config.instruction_for(event.payload),
            input_tuple=dict(event.payload),
            desired_scene=event.scene_type,
        )
        pre = preprocess(event, draft, feeds, requeue_delay=self.config.requeue_delay)
        if isinstance(pre, RequeueSignal):
            requeued = self.bus.requeue_with_delay(self.config.topic, envelope, pre.delay)
            self.bus.ack(self.config.topic, CONSUMER_GROUP, envelope)
            if requeued:
                trace.requeues += 1
            else:
                self._finish(trace, "dead_letter")
            return

        clean, corrected_draft = pre
        person = feeds.person(str(clean.get(scene.config.subject())))
        avoid_topics = list(scene.config.avoid_topics)
        for topic in event.payload.get("avoid_topics", ()):
            if topic not in avoid_topics:
                avoid_topics.append(topic)

        content_id = canonical_key(event)
        revision = self.repository.current_revision(content_id) + 1
        policy = replace(
            scene.config.policy(self.config.max_regenerations),
            avoid_topics=tuple(avoid_topics),
        )

        outcome = self._generate_and_post(
            scene, corrected_draft, clean, person, avoid_topics, event, trace, policy
        )
        if outcome is None:
            self.bus.ack(self.config.topic, CONSUMER_GROUP, envelope)
            self._finish(trace, "rejected")
            return
        raw_text, final_text, verdicts, blocked = outcome

        state = ContentState.DRAFT
        content = GeneratedContent(
            content_id=content_id,
            source_event=event.event_id,
            raw_text=raw_text,
            final_text=final_text or "",
            verdicts=tuple(verdicts),
            state=state,
            revision=revision,
        )
        if blocked or scene.config.reviewed():
            content = content.transition(ContentState.PENDING_REVIEW)
            terminal = "pending_review"
        else:
            content = content.transition(ContentState.PUBLISHED)
            terminal = "published"
        self.repository.record(content, event)
        trace.content_id = content_id
        for verdict in verdicts:
            trace.verdict_counts[verdict.status.value] = (
                trace.verdict_counts.get(verdict.status.value, 0) + 1
            )
        self.bus.ack(self.config.topic, CONSUMER_GROUP, envelope)
        self._finish(trace, terminal)

    def _generate_and_post(
        self, scene, draft, clean, person, avoid_topics, event, trace, policy
    ):
        """Generate, post-process, and regenerate on screen blocks.

        Returns (raw, final, verdicts, blocked) or None on permanent
        generation failure. ``blocked`` is True when the regeneration budget
        ran out and the item must go to the human queue.
        """
        context = ()
        if scene.config.use_context and self.corpus is not None:
            query = " ".join(
                str(clean.get(field, ""))
                for field in (scene.config.subject(), "kind", "category")
            )
            context = retrieve_context(
                query, self.corpus, scene.config.context_k,
                category=event.payload.get("category"),
            )

        base_seed = fnv1a64(event.event_id) & 0xFFFF
        last = None
        for attempt in range(policy.max_regenerations + 1):
            params = replace(scene.preset, seed=base_seed + attempt)
            prompt = build_prompt(
                draft,
                clean,
                {scene.config.scene_type: scene.template},
                bank=scene.bank,
                few_shot_k=scene.config.few_shot_k if scene.bank else 0,
                context=context,
                avoid_topics=avoid_topics,
                person=person,
                seed=params.seed,
            )
            trace.prompt_hash = fnv1a64(prompt.rendered)
            self._charge_service_time()
            try:
                raw = strip_stop(self.generator.generate(prompt, params))
            except GenerationError as exc:
                if exc.retryable:
                    continue
                return None
            result = post(raw, event.scene_type, self.feeds.snapshot(), person, policy)
            if result.ok:
                return raw, result.text, result.verdicts, False
            trace.regenerations += 1
            last = (raw, None, result.verdicts, True)
        return last

    # -- review loop ---------------------------------------------------------------

    def regenerate(self, content_id: str) -> ScoringEvent:
        """Fast-track a regeneration of existing content (after a reject or a
        late correction). The new revision flows through the normal path."""
        source = self.repository.source_event(content_id)
        revision = self.repository.current_revision(content_id)
        update = ScoringEvent(
            event_id=f"{source.event_id}::r{revision + 1}",
            property=source.property,
            scene_type=source.scene_type,
            payload=dict(source.payload),
            feed_timestamps=dict(source.feed_timestamps),
            priority=Priority.FAST_TRACK,
        )
        self.submit(update, priority=Priority.FAST_TRACK)
        return update

    # -- reporting -----------------------------------------------------------------

    def terminal_counts(self) -> dict[str, int]:
        counts = {state: 0 for state in TERMINAL_STATES}
        for trace in self.traces.values():
            if trace.terminal:
                counts[trace.terminal] += 1
        return counts

    def unfinished_events(self) -> list[str]:
        return [t.event_id for t in self.traces.values() if not t.terminal]


# --- replay ------------------------------------------------------------------------


@dataclass
class ReplaySummary:
    submitted: int
    terminal_counts: dict[str, int]
    lost: int
    duration: float
    latency_p50: float = 0.0
    latency_p95: float = 0.0
    latency_p99: float = 0.0

    def to_dict(self) -> dict:
        return {
            "submitted": self.submitted,
            "terminal_counts": self.terminal_counts,
            "lost": self.lost,
            "duration": self.duration,
            "latency_p50": self.latency_p50,
            "latency_p95": self.latency_p95,
            "latency_p99": self.latency_p99,
        }


class ReplayParseError(ValueError):
    pass


def load_events_file(path: str | Path) -> list[tuple[float, ScoringEvent]]:
    """JSONL of events with a ``ts`` field; parse errors carry line numbers."""
    records: list[tuple[float, ScoringEvent]] = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            ts = float(doc.pop("ts", 0.0))
            records.append((ts, ScoringEvent.from_dict(doc)))
        except (json.JSONDecodeError, KeyError, ValueError, ValidationError) as exc:
            raise ReplayParseError(f"{path}:{lineno}: {exc}") from exc
    records.sort(key=lambda pair: pair[0])
    return records


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
    return ordered[idx]


def replay(
    runner: PipelineRunner,
    events: Iterable[tuple[float, ScoringEvent]],
    speed: float = 1.0,
) -> ReplaySummary:
    """Publish events at their recorded spacing scaled by ``speed``, process
    everything, and report conservation plus latency percentiles."""
    if speed <= 0:
        raise ValueError("speed factor must be positive")
    events = list(events)
    clock = runner.clock
    start = clock.now()
    first_ts = events[0][0] if events else 0.0
    submitted = 0
    for ts, event in events:
        target = start + (ts - first_ts) / speed
        while clock.now() < target:
            if not runner.step():
                deadline = runner.bus.next_visibility_deadline(
                    runner.config.topic, CONSUMER_GROUP
                )
                next_tick = target if deadline is None else min(deadline, target)
                if isinstance(clock, SimulatedClock):
                    clock.advance_to(next_tick)
                else:  # pragma: no cover - live mode
                    break
        runner.submit(event)
        submitted += 1
    runner.run_until_quiescent()
    if runner.publisher.store.autoflush is False:
        runner.publisher.store.flush()
    counts = runner.terminal_counts()
    latencies = [t.latency for t in runner.traces.values() if t.terminal]
    return ReplaySummary(
        submitted=submitted,
        terminal_counts=counts,
        lost=submitted - sum(counts.values()),
        duration=clock.now() - start,
        latency_p50=_percentile(latencies, 0.50),
        latency_p95=_percentile(latencies, 0.95),
        latency_p99=_percentile(latencies, 0.99),
    )


# --- assembly helper -----------------------------------------------------------------


def build_runner(
    config: PipelineConfig,
    clock: Optional[Clock] = None,
    generator: Optional[Backend] = None,
    feeds: Optional[FeedSource] = None,
    base_dir: Path = Path("."),
    store_autoflush: bool = True,
    bus: Optional[MessageBus] = None,
) -> PipelineRunner:
    """Wire a runner from config with mock-backed defaults for offline use."""
    from .congruency import JsonFeedSource, StaticFeedSource
    from .generation import MockBackend
    from .model import GroundTruthFeeds

    clock = clock or SimulatedClock()
    bus = bus or MessageBus(clock, requeue_cap=config.requeue_cap)
    if not bus.has_topic(config.topic):
        bus.create_topic(config.topic, config.partition_count, config.fast_track_partitions)
    if feeds is None:
        if config.feeds_path:
            feeds = JsonFeedSource(base_dir / config.feeds_path)
        else:
            feeds = StaticFeedSource(GroundTruthFeeds())
    if generator is None:
        generator = MockBackend(roster_names=feeds.snapshot().roster_names())
    store = FileStore(base_dir / config.store_root, autoflush=store_autoflush)
    cdn = CdnCache(store)
    publisher = ContentPublisher(store, cdn, bus=bus, update_topic=config.topic)
    registry = SceneRegistry.from_config(config, base_dir)
    corpus = None
    if config.corpus_path:
        corpus = RetrievalCorpus.from_file(base_dir / config.corpus_path)
    return PipelineRunner(
        config=config,
        bus=bus,
        clock=clock,
        feeds=feeds,
        generator=generator,
        registry=registry,
        publisher=publisher,
        corpus=corpus,
    )
