"""Objective text-quality measures and the operational scorecard.

Edit distance is computed character-wise by default (matching the magnitude
of published table values) but is parameterized over the unit, so word-token
distance is one argument away. Rouge overlap uses clipped multiset counting
over lowercased, punctuation-stripped whitespace tokens. Perplexity is the
exponentiated mean negative natural-log likelihood of a token sequence.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional, Sequence

from .model import ValidationError

Unit = Literal["char", "word"]

_PUNCT = re.compile(r"[^\w\s]")


def _units(text: str, unit: Unit) -> Sequence[str]:
    if unit == "char":
        return text
    if unit == "word":
        return text.split()
    raise ValueError(f"unknown unit {unit!r}")


def lev(t1: str, t2: str, unit: Unit = "char") -> int:
    """Minimum number of insert/delete/substitute edits between two texts.

    Iterative two-row dynamic program; linear memory, quadratic time.
    """
    a, b = _units(t1, unit), _units(t2, unit)
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    current = [0] * (len(b) + 1)
    for i, ch_a in enumerate(a, start=1):
        current[0] = i
        for j, ch_b in enumerate(b, start=1):
            cost = 0 if ch_a == ch_b else 1
            current[j] = min(
                previous[j] + 1,        # delete from a
                current[j - 1] + 1,     # insert into a
                previous[j - 1] + cost, # substitute (or match)
            )
        previous, current = current, previous
    return previous[len(b)]


def std_word_edit(t: str, g: str, unit: Unit = "char") -> float:
    """Edit distance standardized onto [0, 100], higher is better.

    100 * (1 - lev/max(|t|, |g|)); two empty texts score a perfect 100.
    """
    a, b = _units(t, unit), _units(g, unit)
    longest = max(len(a), len(b))
    if longest == 0:
        return 100.0
    return 100.0 * (1.0 - lev(t, g, unit) / longest)


# --- Rouge -------------------------------------------------------------------


def rouge_tokens(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _PUNCT.sub(" ", text.lower()).split()


def _ngram_counts(tokens: Sequence[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


@dataclass(frozen=True)
class RougeScore:
    recall: float
    precision: float
    f: float


def _f_measure(recall: float, precision: float) -> float:
    if recall + precision == 0:
        return 0.0
    return 2.0 * recall * precision / (recall + precision)


def rouge_n(t: str, g: str, n: int) -> RougeScore:
    """N-gram overlap recall/precision/F between generated and ground truth.

    Overlap is the clipped multiset intersection of n-gram counts. All three
    values are 0 when either side has no n-grams.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    t_counts = _ngram_counts(rouge_tokens(t), n)
    g_counts = _ngram_counts(rouge_tokens(g), n)
    t_total = sum(t_counts.values())
    g_total = sum(g_counts.values())
    if t_total == 0 or g_total == 0:
        return RougeScore(0.0, 0.0, 0.0)
    overlap = sum(min(count, t_counts.get(gram, 0)) for gram, count in g_counts.items())
    recall = overlap / g_total
    precision = overlap / t_total
    return RougeScore(recall, precision, _f_measure(recall, precision))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for ch_a in a:
        current = [0] * (len(b) + 1)
        for j, ch_b in enumerate(b, start=1):
            if ch_a == ch_b:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[len(b)]


def rouge_l(t: str, g: str) -> RougeScore:
    """Longest-common-subsequence recall/precision/F over tokens."""
    t_tokens = rouge_tokens(t)
    g_tokens = rouge_tokens(g)
    if not t_tokens or not g_tokens:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(t_tokens, g_tokens)
    recall = lcs / len(g_tokens)
    precision = lcs / len(t_tokens)
    return RougeScore(recall, precision, _f_measure(recall, precision))


# --- perplexity ----------------------------------------------------------------


@dataclass(frozen=True)
class TokenLogProbs:
    """Token sequence with the model's log p(token | prefix) for each one."""

    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "logprobs", tuple(float(x) for x in self.logprobs))
        if len(self.tokens) != len(self.logprobs):
            raise ValidationError("tokens and logprobs must have equal length")
        if any(lp > 1e-12 for lp in self.logprobs):
            raise ValidationError("log probabilities must be <= 0")


def perplexity(lp: TokenLogProbs) -> float:
    """exp(-(1/N) * sum_i log p(t_i | t_<i)), natural log, N = token count."""
    n = len(lp.tokens)
    if n == 0:
        raise ValidationError("perplexity requires at least one token")
    return math.exp(-sum(lp.logprobs) / n)


def reference_copy_logprobs(t: str, g: str) -> TokenLogProbs:
    """Surrogate token likelihoods for corpora without model logprobs.

    A teacher-forced copy model: a token aligned with the reference gets
    probability 1, any other token gets a uniform share over the reference
    vocabulary plus one unknown slot. Identical texts therefore score a
    perplexity of exactly 1.
    """
    t_tokens = t.split()
    g_tokens = g.split()
    if not t_tokens:
        t_tokens = [""]
    vocab = len(set(g_tokens)) + 1
    miss = math.log(1.0 / vocab)
    logprobs = [
        0.0 if i < len(g_tokens) and tok == g_tokens[i] else miss
        for i, tok in enumerate(t_tokens)
    ]
    return TokenLogProbs(tuple(t_tokens), tuple(logprobs))


# --- scorecard -----------------------------------------------------------------


@dataclass(frozen=True)
class ScoreCard:
    """Ordinal multi-factor operational comparison; lower totals are better."""

    name: str
    factors: tuple[tuple[str, int], ...]
    total: int

    def __post_init__(self):
        if self.total != sum(score for _, score in self.factors):
            raise ValidationError("scorecard total must equal the factor sum")


def scorecard_total(name: str, factors: Iterable[tuple[str, int]]) -> ScoreCard:
    factors = tuple((label, int(score)) for label, score in factors)
    for label, score in factors:
        if not 1 <= score <= 10:
            raise ValidationError(f"factor {label!r} score {score} outside [1, 10]")
    return ScoreCard(name=name, factors=factors, total=sum(s for _, s in factors))


def rank_cards(cards: Iterable[ScoreCard]) -> list[ScoreCard]:
    """Ascending by total (lower is better); stable for ties."""
    return sorted(cards, key=lambda c: c.total)


# --- corpus reports --------------------------------------------------------------


@dataclass(frozen=True)
class TextPair:
    generated: str
    reference: str
    logprobs: Optional[TokenLogProbs] = None


KNOWN_METRICS = ("lev", "std_word_edit", "rouge1", "rouge2", "rougeL", "perplexity")


@dataclass
class EvalReport:
    """Per-pair metric values plus corpus aggregates on the 0-100 table scale
    (perplexity stays on its natural scale)."""

    metrics: tuple[str, ...]
    unit: Unit
    per_pair: list[dict[str, float]] = field(default_factory=list)
    aggregates: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metrics": list(self.metrics),
            "unit": self.unit,
            "per_pair": self.per_pair,
            "aggregates": self.aggregates,
        }


def _pair_metrics(pair: TextPair, metrics: Sequence[str], unit: Unit) -> dict[str, float]:
    row: dict[str, float] = {}
    for metric in metrics:
        if metric == "lev":
            row[metric] = float(lev(pair.generated, pair.reference, unit))
        elif metric == "std_word_edit":
            row[metric] = std_word_edit(pair.generated, pair.reference, unit)
        elif metric == "rouge1":
            row[metric] = rouge_n(pair.generated, pair.reference, 1).f
        elif metric == "rouge2":
            row[metric] = rouge_n(pair.generated, pair.reference, 2).f
        elif metric == "rougeL":
            row[metric] = rouge_l(pair.generated, pair.reference).f
        elif metric == "perplexity":
            lp = pair.logprobs or reference_copy_logprobs(pair.generated, pair.reference)
            row[metric] = perplexity(lp)
        else:
            raise ValueError(f"unknown metric {metric!r}")
    return row


def _table_scale(metric: str, value: float) -> float:
    # rouge F values live on [0,1]; tables present them x100. Edit-distance
    # standardization already includes the factor; perplexity is unscaled.
    if metric in ("rouge1", "rouge2", "rougeL"):
        return value * 100.0
    return value


def corpus_report(
    pairs: Sequence[TextPair],
    metrics: Sequence[str] = ("std_word_edit", "rougeL", "rouge2"),
    unit: Unit = "char",
) -> EvalReport:
    """Per-pair metrics and arithmetic-mean aggregates for a corpus."""
    if not pairs:
        raise ValidationError("corpus_report requires at least one pair")
    for metric in metrics:
        if metric not in KNOWN_METRICS:
            raise ValueError(f"unknown metric {metric!r}")
    report = EvalReport(metrics=tuple(metrics), unit=unit)
    for pair in pairs:
        report.per_pair.append(_pair_metrics(pair, metrics, unit))
    for metric in metrics:
        mean = sum(row[metric] for row in report.per_pair) / len(report.per_pair)
        report.aggregates[metric] = _table_scale(metric, mean)
    return report
