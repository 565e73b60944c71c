"""Hallucination detection and correction for generated text.

The pipeline is regex-first by design: claims (ranks, scores, counts, dates,
names) are parsed out of the text, compared against the ground-truth feed
snapshot, and contradictions are rewritten in place. Names that miss the
roster are repaired by edit distance with nation and rank clues breaking
ties. Pronouns are rewritten to the subject's declared class. Finally the
text is screened for avoid-topics, vocabulary conformance, and length.

Everything here is pure given a feed snapshot: the same raw text always
produces the same verdicts and the same final text, and re-running the
pipeline on its own output changes nothing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from .metrics import lev
from .model import (
    Claim,
    ClaimKind,
    GroundTruthFeeds,
    PersonRecord,
    PronounClass,
    VerificationStatus,
    VerificationVerdict,
)

_DATA_DIR = Path(__file__).parent / "data"

# --- normalization ----------------------------------------------------------

_SPLIT_ORDINAL = re.compile(r"\b(\d+)\s+(st|nd|rd|th)\b")


def normalize_ordinals(text: str) -> str:
    """Rejoin split ordinals ("46 th" -> "46th") before claim parsing."""
    return _SPLIT_ORDINAL.sub(r"\1\2", text)


def ordinal(n: int) -> str:
    if 10 <= n % 100 <= 13:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


# --- claim extraction ----------------------------------------------------------

_RANK = re.compile(r"\b(?:ranked|rank|no\.)\s*(\d+)(st|nd|rd|th)?", re.IGNORECASE)
_SCORE_PAIR = re.compile(r"\b(\d{1,2})-(\d{1,2})\b")
_COUNT_AFTER_KEYWORD = re.compile(r"\b(?:hole|set|round|week)\s+(\d+)\b", re.IGNORECASE)
_COUNT_BEFORE_UNIT = re.compile(
    r"\b(\d+(?:\.\d+)?(?:st|nd|rd|th)?)\s+(?:points?|strokes?|targets?|yards?|"
    r"receptions?|carries|touchdowns?|turnovers|wins?|titles?|games?|percent)\b",
    re.IGNORECASE,
)
_YEAR = re.compile(r"\b(19|20)\d{2}\b")
_NUMBER = re.compile(r"\b\d+(?:\.\d+)?(?:st|nd|rd|th)?\b")
_CAP_WORD = re.compile(r"[A-Z][a-z']+")

#: Scenes with a registered claim pattern set. All shipped scenes use the
#: default patterns; register extras here per scene when a sport needs them.
SCENE_PATTERNS: dict[str, tuple] = {
    scene: ()
    for scene in ("shot", "match_start", "set_end", "grade_rationale", "slot_filler", "artist_story")
}


def _parse_number(surface: str) -> Any:
    digits = re.sub(r"(st|nd|rd|th)$", "", surface)
    return float(digits) if "." in digits else int(digits)


def _overlaps(span: tuple[int, int], taken: list[tuple[int, int]]) -> bool:
    return any(start < span[1] and span[0] < end for start, end in taken)


def _name_spans(text: str) -> list[tuple[int, int, str]]:
    """Maximal runs of capitalized words; single-word runs only count when
    they are not sentence-initial."""
    spans: list[tuple[int, int, str]] = []
    sentence_starts = {0}
    for m in re.finditer(r"[.!?*]\s+", text):
        sentence_starts.add(m.end())
    run: list[re.Match] = []

    def flush():
        if not run:
            return
        start, end = run[0].start(), run[-1].end()
        if len(run) >= 2 or start not in sentence_starts:
            spans.append((start, end, text[start:end]))
        run.clear()

    for m in _CAP_WORD.finditer(text):
        if run and text[run[-1].end() : m.start()] != " ":
            flush()
        run.append(m)
    flush()
    return spans


def classify_and_extract(text: str, scene_type: str) -> list[Claim]:
    """Parse claims out of (ordinal-normalized) text.

    Every numeric token ends up covered by exactly one claim; capitalized
    word runs become name claims so the roster checks downstream can see
    them.
    """
    if scene_type not in SCENE_PATTERNS:
        raise KeyError(f"scene {scene_type!r} has no registered claim pattern set")
    claims: list[Claim] = []
    taken: list[tuple[int, int]] = []

    for m in _RANK.finditer(text):
        start, end = m.start(1), m.end(2) if m.group(2) else m.end(1)
        claims.append(Claim(ClaimKind.RANK, text[start:end], _parse_number(m.group(1)), start, end))
        taken.append((start, end))

    for m in _SCORE_PAIR.finditer(text):
        span = (m.start(), m.end())
        if _overlaps(span, taken):
            continue
        value = [int(m.group(1)), int(m.group(2))]
        claims.append(Claim(ClaimKind.SCORE, m.group(0), value, *span))
        taken.append(span)

    for pattern in (_COUNT_AFTER_KEYWORD, _COUNT_BEFORE_UNIT):
        for m in pattern.finditer(text):
            start, end = m.start(1), m.end(1)
            if _overlaps((start, end), taken):
                continue
            claims.append(
                Claim(ClaimKind.COUNT, text[start:end], _parse_number(m.group(1)), start, end)
            )
            taken.append((start, end))

    for m in _YEAR.finditer(text):
        span = (m.start(), m.end())
        if _overlaps(span, taken):
            continue
        claims.append(Claim(ClaimKind.DATE, m.group(0), int(m.group(0)), *span))
        taken.append(span)

    for m in _NUMBER.finditer(text):
        span = (m.start(), m.end())
        if _overlaps(span, taken):
            continue
        claims.append(Claim(ClaimKind.OTHER, m.group(0), _parse_number(m.group(0)), *span))
        taken.append(span)

    for start, end, surface in _name_spans(text):
        if _overlaps((start, end), taken):
            continue
        claims.append(Claim(ClaimKind.NAME, surface, surface, start, end))
        taken.append((start, end))

    claims.sort(key=lambda c: c.start)
    return claims


# --- verification ---------------------------------------------------------------

_KEYWORD_TO_FACT = {
    "hole": "hole",
    "stroke": "strokes",
    "strokes": "strokes",
    "point": "points",
    "points": "points",
    "set": "set",
    "round": "round",
    "week": "week",
    "win": "wins",
    "wins": "wins",
    "title": "titles",
    "titles": "titles",
    "target": "targets",
    "targets": "targets",
    "percentile": "percentile",
    "percent": "percent",
    "yards": "yards",
    "yard": "yards",
}


def _context_fact_key(text: str, claim: Claim) -> Optional[str]:
    """Fact key from the token hugging the claim: the unit right after it
    ("2 strokes"), else the keyword right before it ("hole 9")."""
    after = re.match(r"\s*([a-z]+)", text[claim.end :], re.IGNORECASE)
    if after and after.group(1).lower() in _KEYWORD_TO_FACT:
        return _KEYWORD_TO_FACT[after.group(1).lower()]
    before = re.search(r"([a-z]+)\s*$", text[: claim.start], re.IGNORECASE)
    if before and before.group(1).lower() in _KEYWORD_TO_FACT:
        return _KEYWORD_TO_FACT[before.group(1).lower()]
    return None


def _lookup_fact(feeds: GroundTruthFeeds, subject: Optional[str], key: str) -> Optional[Any]:
    if subject is None:
        return None
    for source in (feeds.scores, feeds.head_to_head, feeds.schedule):
        row = source.get(subject)
        if isinstance(row, Mapping) and key in row:
            return row[key]
    if key == "rank":
        person = feeds.person(subject)
        if person is not None:
            return person.rank
    return None


def _values_equal(a: Any, b: Any) -> bool:
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return list(a) == list(b)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return float(a) == float(b)
    return a == b


def verify_claims(
    claims: Sequence[Claim],
    feeds: GroundTruthFeeds,
    expected_subject: Optional[PersonRecord] = None,
    text: str = "",
) -> list[VerificationVerdict]:
    """Compare claims to feed facts.

    A claim matching a unique feed fact verifies; a contradiction is
    corrected to the feed value; anything without a matching fact is
    unverifiable. When the event's subject is known, numeric claims anchor to
    that person, and a subject-position name claim naming a different roster
    member is corrected (the classic swapped-player hallucination). Passing
    the source text lets count claims resolve their fact key from nearby
    words ("after 2 strokes" -> strokes); without it they stay unverifiable.
    """
    roster_names = set(feeds.roster_names())
    name_claims = [c for c in claims if c.kind is ClaimKind.NAME]
    first_name_claim = name_claims[0] if name_claims else None
    verdicts: list[VerificationVerdict] = []

    def subject_for(claim: Claim) -> Optional[str]:
        if expected_subject is not None:
            return expected_subject.full_name
        best = None
        for name_claim in name_claims:
            if name_claim.end <= claim.start and str(name_claim.value) in roster_names:
                best = str(name_claim.value)
        return best

    for claim in claims:
        if claim.kind is ClaimKind.NAME:
            verdicts.append(
                _verify_name(claim, expected_subject, first_name_claim, roster_names)
            )
            continue

        if claim.kind is ClaimKind.RANK:
            key = "rank"
        elif claim.kind is ClaimKind.SCORE:
            key = "set_score"
        else:
            key = _context_fact_key(text, claim) if text else None
        subject = subject_for(claim)
        fact = _lookup_fact(feeds, subject, key) if key else None
        if fact is None:
            verdicts.append(VerificationVerdict(claim, VerificationStatus.UNVERIFIABLE))
        elif _values_equal(claim.value, fact):
            verdicts.append(VerificationVerdict(claim, VerificationStatus.VERIFIED))
        else:
            verdicts.append(
                VerificationVerdict(
                    claim, VerificationStatus.CORRECTED, correction=_format_like(claim, fact)
                )
            )
    return verdicts


def _verify_name(
    claim: Claim,
    expected_subject: Optional[PersonRecord],
    first_name_claim: Optional[Claim],
    roster_names: set[str],
) -> VerificationVerdict:
    value = str(claim.value)
    if value in roster_names:
        if (
            expected_subject is not None
            and claim is first_name_claim
            and value != expected_subject.full_name
            and expected_subject.full_name in roster_names
        ):
            return VerificationVerdict(
                claim, VerificationStatus.CORRECTED, correction=expected_subject.full_name
            )
        return VerificationVerdict(claim, VerificationStatus.VERIFIED)
    return VerificationVerdict(claim, VerificationStatus.UNVERIFIABLE)


def _format_like(claim: Claim, fact: Any) -> str:
    if claim.kind is ClaimKind.SCORE and isinstance(fact, (list, tuple)):
        return f"{fact[0]}-{fact[1]}"
    if isinstance(fact, float) and fact.is_integer():
        fact = int(fact)
    if re.search(r"(st|nd|rd|th)$", claim.surface) and isinstance(fact, int):
        return ordinal(fact)
    return str(fact)


def apply_corrections(text: str, verdicts: Iterable[VerificationVerdict]) -> str:
    """Rewrite corrected claim spans, right to left so offsets stay valid."""
    corrected = [v for v in verdicts if v.status is VerificationStatus.CORRECTED]
    for verdict in sorted(corrected, key=lambda v: v.claim.start, reverse=True):
        claim = verdict.claim
        text = text[: claim.start] + str(verdict.correction) + text[claim.end :]
    return text


# --- name repair ------------------------------------------------------------------

NAME_EDIT_THRESHOLD = 2


@dataclass(frozen=True)
class ClueSet:
    nations: frozenset[str] = frozenset()
    ranks: frozenset[int] = frozenset()
    opponents: frozenset[str] = frozenset()


def extract_clues(text: str, rosters: Sequence[PersonRecord]) -> ClueSet:
    """Disambiguation clues present in the sentence: nations of citizenship,
    rank numbers, and other roster names (schedule opponents)."""
    nations = {
        r.nation
        for r in rosters
        if r.nation and re.search(rf"\b{re.escape(r.nation)}\b", text)
    }
    ranks = {int(m.group(1)) for m in _RANK.finditer(normalize_ordinals(text))}
    opponents = {
        r.full_name for r in rosters if re.search(rf"\b{re.escape(r.full_name)}\b", text)
    }
    return ClueSet(frozenset(nations), frozenset(ranks), frozenset(opponents))


def correct_names(
    text: str,
    rosters: Sequence[PersonRecord],
    clues: Optional[ClueSet] = None,
) -> str:
    """Repair out-of-roster proper nouns within edit distance 2 of a roster
    name. Ties resolve by clue agreement (nation, then rank); a still
    ambiguous span is left alone. Exact roster matches are never rewritten.
    """
    if not rosters:
        return text
    if clues is None:
        clues = extract_clues(text, rosters)
    exact = {r.full_name for r in rosters}
    exact_fold = {r.full_name.casefold() for r in rosters}

    replacements: list[tuple[int, int, str]] = []
    for start, end, surface in _name_spans(text):
        if surface in exact or surface.casefold() in exact_fold:
            continue
        scored = [
            (lev(surface.casefold(), r.full_name.casefold()), r)
            for r in rosters
        ]
        close = [(d, r) for d, r in scored if d <= NAME_EDIT_THRESHOLD]
        if not close:
            continue
        best = min(d for d, _ in close)
        candidates = [r for d, r in close if d == best]
        choice = _disambiguate(candidates, clues)
        if choice is not None:
            replacements.append((start, end, choice.full_name))

    for start, end, name in sorted(replacements, reverse=True):
        text = text[:start] + name + text[end:]
    return text


def _disambiguate(
    candidates: list[PersonRecord], clues: ClueSet
) -> Optional[PersonRecord]:
    if len(candidates) == 1:
        return candidates[0]
    by_nation = [c for c in candidates if c.nation in clues.nations]
    if len(by_nation) == 1:
        return by_nation[0]
    narrowed = by_nation or candidates
    by_rank = [c for c in narrowed if c.rank is not None and c.rank in clues.ranks]
    if len(by_rank) == 1:
        return by_rank[0]
    return None


# --- pronoun enforcement --------------------------------------------------------------

_PRONOUN_TABLE: dict[str, dict[str, str]] = json.loads(
    (_DATA_DIR / "pronouns.json").read_text("utf-8")
)

#: token -> (class, roles). Ambiguous surface forms list every reading; the
#: next-word heuristic picks between them at rewrite time.
_PRONOUN_ROLES: dict[str, tuple[str, tuple[str, ...]]] = {}
for _cls, _forms in _PRONOUN_TABLE.items():
    for _role, _form in _forms.items():
        entry = _PRONOUN_ROLES.get(_form)
        if entry is None:
            _PRONOUN_ROLES[_form] = (_cls, (_role,))
        else:
            _PRONOUN_ROLES[_form] = (_cls, entry[1] + (_role,))
_PRONOUN_ROLES["themselves"] = ("neutral", ("reflexive",))

_PRONOUN_RE = re.compile(
    r"\b(" + "|".join(sorted(_PRONOUN_ROLES, key=len, reverse=True)) + r")\b",
    re.IGNORECASE,
)


def _match_case(replacement: str, original: str) -> str:
    if original.isupper():
        return replacement.upper()
    if original[:1].isupper():
        return replacement.capitalize()
    return replacement


def enforce_pronouns(text: str, desired: PronounClass) -> str:
    """Rewrite pronoun tokens from other classes into the desired class.

    Role-ambiguous forms ("her" object/determiner, "his"
    determiner/possessive) are read as determiners when a word follows,
    otherwise as the standalone form. Case is preserved per token.
    """
    table = _PRONOUN_TABLE[desired.value]

    def repl(m: re.Match) -> str:
        token = m.group(0)
        cls, roles = _PRONOUN_ROLES[token.lower()]
        if cls == desired.value:
            return token
        if len(roles) == 1:
            role = roles[0]
        else:
            rest = text[m.end() :]
            next_is_word = bool(re.match(r"\s+[A-Za-z]", rest))
            if "determiner" in roles:
                role = "determiner" if next_is_word else (
                    "object" if "object" in roles else "possessive"
                )
            else:
                role = roles[0]
        return _match_case(table[role], token)

    return _PRONOUN_RE.sub(repl, text)


def pronoun_tokens_outside_class(text: str, desired: PronounClass) -> list[str]:
    """Audit helper: pronoun tokens in the text not belonging to the class."""
    allowed = set(_PRONOUN_TABLE[desired.value].values())
    if desired is PronounClass.NEUTRAL:
        allowed.add("themselves")
    return [
        m.group(0)
        for m in _PRONOUN_RE.finditer(text)
        if m.group(0).lower() not in allowed
    ]


# --- screening --------------------------------------------------------------------------

_STOPWORDS = frozenset(
    """a an and the of in on at to for with from by as is are was were be been
    has have had it its their they them his her she he him who whom will would
    this that these those after against per about around into over under out
    up down off not no nor so if then than too very can could may might
    shall should do does did done more most other some such only own same
    just while during each few both between""".split()
)


@dataclass(frozen=True)
class ScreenResult:
    ok: bool
    text: str = ""
    reason: str = ""
    kind: str = ""  # "avoid_topic" | "vocabulary" when blocked


@dataclass(frozen=True)
class ScreeningPolicy:
    avoid_topics: tuple[str, ...] = ()
    expansions: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    vocabulary: Optional[frozenset[str]] = None
    char_limit: Optional[int] = None
    max_regenerations: int = 2

    @classmethod
    def from_file(cls, path: str | Path) -> "ScreeningPolicy":
        doc = json.loads(Path(path).read_text("utf-8"))
        return cls(
            avoid_topics=tuple(doc.get("avoid_topics", ())),
            expansions={k: tuple(v) for k, v in doc.get("expansions", {}).items()},
            vocabulary=frozenset(doc["vocabulary"]) if doc.get("vocabulary") else None,
            char_limit=doc.get("char_limit"),
            max_regenerations=doc.get("max_regenerations", 2),
        )


def _truncate_at_sentence(text: str, limit: int) -> str:
    if len(text) <= limit:
        return text
    head = text[:limit]
    boundary = max(head.rfind(mark) for mark in (".", "!", "?"))
    if boundary > 0:
        return head[: boundary + 1]
    space = head.rfind(" ")
    if space > 0:
        return head[:space].rstrip()
    return head


def screen(
    text: str,
    avoid_topics: Sequence[str] = (),
    vocabulary: Optional[frozenset[str]] = None,
    char_limit: Optional[int] = None,
    expansions: Optional[Mapping[str, Sequence[str]]] = None,
) -> ScreenResult:
    """Block on avoid-topic hits or out-of-lexicon content words; truncate
    over-limit text at the last sentence boundary within the limit."""
    expansions = expansions or {}
    for topic in avoid_topics:
        terms = [topic, *expansions.get(topic, ())]
        for term in terms:
            if re.search(rf"\b{re.escape(term)}\b", text, re.IGNORECASE):
                return ScreenResult(False, reason=f"avoid topic: {topic}", kind="avoid_topic")
    if vocabulary is not None:
        lexicon = {w.lower() for w in vocabulary}
        for token in re.findall(r"[A-Za-z']+", text):
            word = token.lower()
            if word in _STOPWORDS or word in lexicon:
                continue
            return ScreenResult(False, reason=f"out-of-lexicon word: {token}", kind="vocabulary")
    if char_limit is not None:
        text = _truncate_at_sentence(text, char_limit)
    return ScreenResult(True, text=text)


# --- the full pass ------------------------------------------------------------------------


@dataclass(frozen=True)
class PostResult:
    text: Optional[str]
    verdicts: tuple[VerificationVerdict, ...]
    blocked: Optional[ScreenResult] = None

    @property
    def ok(self) -> bool:
        return self.blocked is None


def post(
    raw: str,
    scene_type: str,
    feeds: GroundTruthFeeds,
    person: Optional[PersonRecord] = None,
    policy: ScreeningPolicy = ScreeningPolicy(),
) -> PostResult:
    """classify -> verify -> correct -> repair names -> pronouns -> screen."""
    text = normalize_ordinals(raw)
    claims = classify_and_extract(text, scene_type)
    verdicts = verify_claims(claims, feeds, expected_subject=person, text=text)
    text = apply_corrections(text, verdicts)
    text = correct_names(text, feeds.rosters)
    if person is not None:
        text = enforce_pronouns(text, person.pronoun_class)
    result = screen(
        text,
        avoid_topics=policy.avoid_topics,
        vocabulary=policy.vocabulary,
        char_limit=policy.char_limit,
        expansions=policy.expansions,
    )
    if not result.ok:
        return PostResult(None, tuple(verdicts), blocked=result)
    return PostResult(result.text, tuple(verdicts))
