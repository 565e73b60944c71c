"""RDF-lite triple store over live feed data.

Feeds are modeled as (subject, predicate, object) triples; the query language
is deliberately narrow: select subjects by ``subClassOf`` a class, with an
optional equality filter and a result limit. Subclass queries apply the
transitive closure, so a hole is found under its round and tournament.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Optional

SUBCLASS_OF = "rdfs:subClassOf"

_IRI_BAD = re.compile(r"\s")


class MalformedIRIError(ValueError):
    pass


def _check_iri(value: str, role: str) -> str:
    if not value or _IRI_BAD.search(value):
        raise MalformedIRIError(f"{role} is not a valid IRI: {value!r}")
    return value


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        _check_iri(self.subject, "subject")
        _check_iri(self.predicate, "predicate")


@dataclass(frozen=True)
class QueryPattern:
    """The Fig-2-shaped query: subjects of ``predicate`` under ``cls``,
    optionally filtered to one IRI, truncated to ``limit``."""

    predicate: str = SUBCLASS_OF
    cls: str = ""
    filter_equals: Optional[str] = None
    limit: Optional[int] = None


class TripleStore:
    """Deduplicating triple store; concurrent readers, exclusive writers."""

    def __init__(self):
        self._triples: set[Triple] = set()
        self._by_predicate: dict[str, dict[str, set[str]]] = {}  # predicate -> object -> subjects
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._triples)

    def upsert_triples(self, triples: list[Triple]) -> int:
        """Insert triples, deduplicating; returns how many were new."""
        inserted = 0
        with self._lock:
            for triple in triples:
                if triple in self._triples:
                    continue
                self._triples.add(triple)
                bucket = self._by_predicate.setdefault(triple.predicate, {})
                bucket.setdefault(triple.object, set()).add(triple.subject)
                inserted += 1
        return inserted

    def _descendants(self, cls: str) -> set[str]:
        """All strict transitive subclasses of cls, BFS over subClassOf."""
        children_of = self._by_predicate.get(SUBCLASS_OF, {})
        seen: set[str] = set()
        frontier = [cls]
        while frontier:
            node = frontier.pop()
            for child in children_of.get(node, ()):
                if child not in seen:
                    seen.add(child)
                    frontier.append(child)
        return seen

    def query(self, pattern: QueryPattern) -> list[str]:
        """Subjects matching the pattern, sorted so results are invariant
        under insertion order. Unknown predicates yield an empty result."""
        with self._lock:
            if pattern.predicate == SUBCLASS_OF:
                subjects = self._descendants(pattern.cls)
            else:
                subjects = set(
                    self._by_predicate.get(pattern.predicate, {}).get(pattern.cls, ())
                )
            if pattern.filter_equals is not None:
                subjects &= {pattern.filter_equals}
            results = sorted(subjects)
            if pattern.limit is not None:
                results = results[: pattern.limit]
            return results


# --- feed ingestion ------------------------------------------------------------

_ONTOLOGY_NS = "http://events.ontology.local"


def _slug(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]+", "_", value.strip())


def triples_from_feeds(feeds, tournament: str = "tournament") -> list[Triple]:
    """Model a feed snapshot as triples with increasing granularity:
    tournament, round, hole, plus per-person fact triples. Re-ingesting an
    updated snapshot deduplicates against what is already stored."""
    base = f"{_ONTOLOGY_NS}/{_slug(tournament)}"
    triples = [Triple(base, SUBCLASS_OF, "event:TOURNAMENT")]
    round_no = feeds.schedule.get("round")
    if round_no is not None:
        round_iri = f"{base}/round_{round_no}"
        triples.append(Triple(round_iri, SUBCLASS_OF, base))
    holes = sorted(
        {row["hole"] for row in feeds.scores.values()
         if isinstance(row, dict) and "hole" in row}
    )
    for hole in holes:
        triples.append(Triple(f"{base}/hole_{hole}", SUBCLASS_OF, "hole:HOLE"))
    for person, row in feeds.scores.items():
        person_iri = f"{_ONTOLOGY_NS}/person/{_slug(person)}"
        triples.append(Triple(person_iri, SUBCLASS_OF, "event:PERSON"))
        if isinstance(row, dict):
            for key, value in row.items():
                triples.append(Triple(person_iri, f"stat:{_slug(key)}", str(value)))
    return triples
