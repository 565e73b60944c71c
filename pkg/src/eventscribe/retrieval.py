"""Lexical passage retrieval for prompt context blocks.

Scoring is term-frequency times smoothed inverse document frequency over
lowercased, punctuation-stripped tokens. A category restricts the candidate
set ("categorical" requests); without one the whole corpus competes ("free").
Ties break by recency, newest first, then doc_id, so rankings are total and
deterministic. The retriever is small on purpose; swap in an embedding
backend by matching ``retrieve_context``'s signature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .metrics import rouge_tokens


@dataclass(frozen=True)
class Passage:
    doc_id: str
    text: str
    category: Optional[str] = None
    recency: float = 0.0


@dataclass(frozen=True)
class RetrievalCorpus:
    passages: tuple[Passage, ...]

    def __post_init__(self):
        ids = [p.doc_id for p in self.passages]
        if len(ids) != len(set(ids)):
            raise ValueError("passage doc_ids must be unique")

    @classmethod
    def from_file(cls, path: str | Path) -> "RetrievalCorpus":
        records = json.loads(Path(path).read_text("utf-8"))
        return cls(
            passages=tuple(
                Passage(
                    doc_id=r["doc_id"],
                    text=r["text"],
                    category=r.get("category"),
                    recency=float(r.get("recency", 0.0)),
                )
                for r in records
            )
        )


def _idf(corpus: RetrievalCorpus) -> dict[str, float]:
    n_docs = len(corpus.passages)
    df: dict[str, int] = {}
    for passage in corpus.passages:
        for term in set(rouge_tokens(passage.text)):
            df[term] = df.get(term, 0) + 1
    return {term: math.log((n_docs + 1) / (count + 1)) + 1.0 for term, count in df.items()}


def score_passage(query_terms: set[str], passage: Passage, idf: dict[str, float]) -> float:
    tokens = rouge_tokens(passage.text)
    score = 0.0
    for term in query_terms:
        tf = tokens.count(term)
        if tf:
            score += tf * idf.get(term, 0.0)
    return score


def retrieve_context(
    query: str,
    corpus: RetrievalCorpus,
    k: int,
    category: Optional[str] = None,
) -> list[Passage]:
    """Top-k passages by lexical relevance; may return fewer than k."""
    if not corpus.passages:
        return []
    candidates: Sequence[Passage] = corpus.passages
    if category is not None:
        candidates = [p for p in candidates if p.category == category]
    idf = _idf(corpus)
    query_terms = set(rouge_tokens(query))
    ranked = sorted(
        candidates,
        key=lambda p: (-score_passage(query_terms, p, idf), -p.recency, p.doc_id),
    )
    return list(ranked[: max(k, 0)])
