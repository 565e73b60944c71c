"""In-process partitioned topic queue.

Semantics mirror a Kafka-style broker narrowed to what the pipeline needs:
key-hashed partitions with per-partition FIFO, consumer groups with
at-least-once delivery (explicit ack, redelivery on crash), delayed requeue
through per-envelope visibility deadlines, fast-track priority partitions,
and a dead-letter topic once an event exhausts its requeue budget.

Partition routing is FNV-1a 64 of the key modulo the partition count. When a
topic reserves fast-track partitions, normal traffic that hashes onto one is
remapped to the next free partition so corrections never queue behind live
event backlog; with no fast-track partitions the mapping is exactly
``fnv1a64(key) % partition_count``.

Delivery order within a partition follows publish sequence among *visible*
envelopes: an envelope whose ``not_before`` deadline has not elapsed is held
back without blocking the envelopes behind it, the same way a requeued
message rejoins at the back of the queue rather than stalling the partition.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .clock import Clock
from .hashing import fnv1a64
from .model import Priority, ScoringEvent

DEFAULT_REQUEUE_DELAY = 5.0  # seconds an inconsistent event waits before recheck
DEFAULT_REQUEUE_CAP = 10

DEAD_LETTER_SUFFIX = ".dead-letter"


class UnknownTopicError(KeyError):
    pass


@dataclass(frozen=True)
class Envelope:
    key: str
    payload: ScoringEvent
    partition: int
    sequence: int
    not_before: float = 0.0
    enqueued_at: float = 0.0


@dataclass
class BusCounts:
    published: int = 0
    acked: int = 0
    inflight: int = 0
    queued: int = 0
    dead_lettered: int = 0


@dataclass
class _Partition:
    log: list[Envelope] = field(default_factory=list)

    def next_sequence(self) -> int:
        return len(self.log)


@dataclass
class _GroupPartitionState:
    next_offset: int = 0
    pending: list[int] = field(default_factory=list)  # deferred/redelivery offsets, sorted
    inflight: dict[int, Envelope] = field(default_factory=dict)


class _Topic:
    def __init__(self, name: str, partition_count: int, fast_track: frozenset[int]):
        if partition_count < 1:
            raise ValueError("partition_count must be >= 1")
        bad = [p for p in fast_track if not 0 <= p < partition_count]
        if bad:
            raise ValueError(f"fast_track partitions out of range: {bad}")
        self.name = name
        self.partition_count = partition_count
        self.fast_track = fast_track
        self.partitions = [_Partition() for _ in range(partition_count)]
        self.groups: dict[str, list[_GroupPartitionState]] = {}
        self.fast_track_rr = itertools.cycle(sorted(fast_track)) if fast_track else None
        self.published = 0
        self.acked = 0
        self.dead_lettered = 0

    def group(self, name: str) -> list[_GroupPartitionState]:
        if name not in self.groups:
            self.groups[name] = [_GroupPartitionState() for _ in range(self.partition_count)]
        return self.groups[name]


class MessageBus:
    """Thread-safe in-process broker over a logical clock."""

    def __init__(self, clock: Clock, requeue_cap: int = DEFAULT_REQUEUE_CAP):
        self._clock = clock
        self._requeue_cap = requeue_cap
        self._topics: dict[str, _Topic] = {}
        self._lock = threading.RLock()

    # -- topology ------------------------------------------------------------

    def create_topic(
        self, name: str, partition_count: int, fast_track_partitions: tuple[int, ...] = ()
    ) -> None:
        with self._lock:
            self._topics[name] = _Topic(name, partition_count, frozenset(fast_track_partitions))

    def has_topic(self, name: str) -> bool:
        return name in self._topics

    def _topic(self, name: str) -> _Topic:
        try:
            return self._topics[name]
        except KeyError:
            raise UnknownTopicError(name) from None

    # -- producing -------------------------------------------------------------

    def partition_for(self, topic: str, key: str) -> int:
        """Normal-priority routing: FNV-1a 64 of the key mod partition count,
        remapped off reserved fast-track partitions."""
        t = self._topic(topic)
        p = fnv1a64(key) % t.partition_count
        if t.fast_track and len(t.fast_track) < t.partition_count:
            while p in t.fast_track:
                p = (p + 1) % t.partition_count
        return p

    def publish(
        self,
        topic: str,
        key: str,
        event: ScoringEvent,
        priority: Priority = Priority.NORMAL,
        not_before: float = 0.0,
    ) -> int:
        with self._lock:
            t = self._topic(topic)
            if priority is Priority.FAST_TRACK and t.fast_track_rr is not None:
                partition = next(t.fast_track_rr)
            else:
                partition = self.partition_for(topic, key)
            part = t.partitions[partition]
            env = Envelope(
                key=key,
                payload=event,
                partition=partition,
                sequence=part.next_sequence(),
                not_before=not_before,
                enqueued_at=self._clock.now(),
            )
            part.log.append(env)
            t.published += 1
            return partition

    # -- consuming -------------------------------------------------------------

    def poll(self, topic: str, group: str, partition: Optional[int] = None) -> Optional[Envelope]:
        """Next visible envelope for the group, or None when idle.

        With ``partition`` given, only that partition is scanned; otherwise
        partitions are scanned in index order. The envelope stays in-flight
        until acked.
        """
        with self._lock:
            t = self._topic(topic)
            states = t.group(group)
            now = self._clock.now()
            indices = [partition] if partition is not None else range(t.partition_count)
            for idx in indices:
                env = self._poll_partition(t, states[idx], idx, now)
                if env is not None:
                    return env
            return None

    def _poll_partition(
        self, t: _Topic, state: _GroupPartitionState, idx: int, now: float
    ) -> Optional[Envelope]:
        log = t.partitions[idx].log
        for i, offset in enumerate(state.pending):
            env = log[offset]
            if env.not_before <= now:
                del state.pending[i]
                state.inflight[offset] = env
                return env
        while state.next_offset < len(log):
            offset = state.next_offset
            state.next_offset += 1
            env = log[offset]
            if env.not_before <= now:
                state.inflight[offset] = env
                return env
            state.pending.append(offset)
            state.pending.sort()
        return None

    def consume(self, topic: str, group: str) -> Iterator[Envelope]:
        """Stream of visible envelopes; ends when the topic runs dry."""
        while True:
            env = self.poll(topic, group)
            if env is None:
                return
            yield env

    def ack(self, topic: str, group: str, envelope: Envelope) -> None:
        with self._lock:
            t = self._topic(topic)
            state = t.group(group)[envelope.partition]
            if state.inflight.pop(envelope.sequence, None) is not None:
                t.acked += 1

    def crash_group(self, topic: str, group: str) -> int:
        """Simulate a consumer crash: all in-flight envelopes become
        deliverable again (at-least-once). Returns how many were returned."""
        with self._lock:
            t = self._topic(topic)
            returned = 0
            for state in t.group(group):
                for offset in state.inflight:
                    state.pending.append(offset)
                returned += len(state.inflight)
                state.inflight.clear()
                state.pending.sort()
            return returned

    # -- requeue ----------------------------------------------------------------

    def requeue_with_delay(
        self, topic: str, envelope: Envelope, delay: float = DEFAULT_REQUEUE_DELAY
    ) -> bool:
        """Append a fresh envelope with attempt_count+1, invisible for
        ``delay`` seconds. Beyond the requeue cap the event is routed to the
        dead-letter topic instead; returns False in that case."""
        with self._lock:
            t = self._topic(topic)
            bumped = envelope.payload.with_attempt()
            if bumped.attempt_count > self._requeue_cap:
                self._dead_letter(t, envelope, bumped)
                return False
            t.published += 1
            part = t.partitions[envelope.partition]
            part.log.append(
                Envelope(
                    key=envelope.key,
                    payload=bumped,
                    partition=envelope.partition,
                    sequence=part.next_sequence(),
                    not_before=self._clock.now() + delay,
                    enqueued_at=self._clock.now(),
                )
            )
            return True

    def _dead_letter(self, t: _Topic, envelope: Envelope, event: ScoringEvent) -> None:
        dl_name = t.name + DEAD_LETTER_SUFFIX
        if dl_name not in self._topics:
            self._topics[dl_name] = _Topic(dl_name, 1, frozenset())
        dl = self._topics[dl_name]
        part = dl.partitions[0]
        part.log.append(
            Envelope(
                key=envelope.key,
                payload=event,
                partition=0,
                sequence=part.next_sequence(),
                enqueued_at=self._clock.now(),
            )
        )
        dl.published += 1
        t.dead_lettered += 1
        t.published += 1  # the requeue attempt is counted, then accounted dead

    def dead_letters(self, topic: str) -> list[Envelope]:
        dl_name = topic + DEAD_LETTER_SUFFIX
        if dl_name not in self._topics:
            return []
        return list(self._topics[dl_name].partitions[0].log)

    # -- accounting ---------------------------------------------------------------

    def counts(self, topic: str, group: str) -> BusCounts:
        """Conservation ledger for one consumer group: at quiescence
        published == acked + inflight + queued + dead_lettered."""
        with self._lock:
            t = self._topic(topic)
            states = t.group(group)
            inflight = sum(len(s.inflight) for s in states)
            queued = 0
            for idx, s in enumerate(states):
                queued += len(s.pending)
                queued += len(t.partitions[idx].log) - s.next_offset
            return BusCounts(
                published=t.published,
                acked=t.acked,
                inflight=inflight,
                queued=queued,
                dead_lettered=t.dead_lettered,
            )

    def next_visibility_deadline(self, topic: str, group: str) -> Optional[float]:
        """Earliest future not_before among undelivered envelopes, used by
        schedulers to step simulated time instead of spinning."""
        with self._lock:
            t = self._topic(topic)
            states = t.group(group)
            now = self._clock.now()
            deadline: Optional[float] = None
            for idx, s in enumerate(states):
                log = t.partitions[idx].log
                candidates = [log[o].not_before for o in s.pending]
                candidates += [e.not_before for e in log[s.next_offset :]]
                for nb in candidates:
                    if nb > now and (deadline is None or nb < deadline):
                        deadline = nb
            return deadline
