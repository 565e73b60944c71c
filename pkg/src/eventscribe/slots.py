"""Slot-filler personalization.

The scaling insight this subsystem encodes: generation is an hourly batch
job, filling is online. The batch walks every (statistic, percentile band)
cell, prompts the generator with few-shot examples, validates that outputs
are well-formed fill-in-the-blank sentences over the closed placeholder
registry, and exports one JSON artifact per statistic for CDN distribution.
The request path never calls a generator; it selects a template variant
deterministically and substitutes user-specific values, so a skipped entry
(missing value) is the worst case and a half-filled sentence can never ship.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .generation import Backend, DecodingParams, strip_stop
from .hashing import fnv1a64, fnv1a64_hex
from .model import PromptDraft, ValidationError
from .prompts import ExemplarBank, STOP_SEQUENCE, build_prompt, builtin_templates
from .store import CdnCache, FileStore

#: The registered statistics mined from scoring distributions.
STAT_TYPES: tuple[str, ...] = (
    "projected_points",
    "last_game_points",
    "season_points",
    "targets",
    "carries",
    "receptions",
    "rushing_yards",
    "receiving_yards",
    "passing_yards",
    "touchdowns",
    "turnovers",
    "snap_share",
    "matchup_rating",
)

#: Percentile bands, in ascending order of quality.
BANDS: tuple[str, ...] = ("poor", "below-average", "average", "strong", "outstanding")

#: Closed placeholder registry: a generated template may only use these, so
#: fill failures surface at batch time instead of on the request path.
PLACEHOLDER_VOCAB: frozenset[str] = frozenset(
    {
        "first_name",
        "last_name",
        "position",
        "opponent",
        "team_name",
        "week",
        "projection_points",
        "stat_value",
        "percentile",
    }
)

_PLACEHOLDER = re.compile(r"\{([A-Za-z_ ]+)\}")


def band(percentile: float) -> str:
    """Map a percentile in [0, 100] onto its style band."""
    if not 0 <= percentile <= 100:
        raise ValidationError(f"percentile {percentile} outside [0, 100]")
    if percentile >= 80:
        return "outstanding"
    if percentile >= 60:
        return "strong"
    if percentile >= 40:
        return "average"
    if percentile >= 20:
        return "below-average"
    return "poor"


def extract_placeholders(text: str) -> frozenset[str]:
    return frozenset(m.group(1) for m in _PLACEHOLDER.finditer(text))


@dataclass(frozen=True)
class SlotTemplate:
    stat_type: str
    band: str
    text: str
    placeholders: frozenset[str] = field(init=False)

    def __post_init__(self):
        if self.stat_type not in STAT_TYPES:
            raise ValidationError(f"unregistered statistic {self.stat_type!r}")
        if self.band not in BANDS:
            raise ValidationError(f"unknown band {self.band!r}")
        if STOP_SEQUENCE in self.text:
            raise ValidationError("template text must end before the stop sequence")
        placeholders = extract_placeholders(self.text)
        unknown = placeholders - PLACEHOLDER_VOCAB
        if unknown:
            raise ValidationError(f"placeholders outside the registry: {sorted(unknown)}")
        object.__setattr__(self, "placeholders", placeholders)


@dataclass(frozen=True)
class UserPayload:
    """A user's team context: roster entries, league rules, weaknesses, and
    per-player stats including percentiles."""

    roster: tuple[dict[str, Any], ...]
    league_rules: dict[str, Any] = field(default_factory=dict)
    team_weaknesses: dict[str, Any] = field(default_factory=dict)
    player_stats: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(dict(r) for r in self.roster))
        names = {entry.get("name") for entry in self.roster}
        missing = [p for p in self.player_stats if p not in names]
        if missing:
            raise ValidationError(f"player_stats reference players off the roster: {missing}")

    def roster_entry(self, player: str) -> Optional[dict[str, Any]]:
        for entry in self.roster:
            if entry.get("name") == player:
                return entry
        return None

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "UserPayload":
        return cls(
            roster=tuple(doc.get("roster", ())),
            league_rules=dict(doc.get("league_rules", {})),
            team_weaknesses=dict(doc.get("team_weaknesses", {})),
            player_stats=dict(doc.get("player_stats", {})),
        )


@dataclass(frozen=True)
class RationaleEntry:
    stat_type: str
    percentile: float
    values: dict[str, Any] = field(default_factory=dict)


# --- batch generation --------------------------------------------------------------


@dataclass
class BatchReport:
    templates: list[SlotTemplate] = field(default_factory=list)
    degraded_cells: list[tuple[str, str]] = field(default_factory=list)
    attempts: int = 0

    @property
    def complete(self) -> bool:
        return not self.degraded_cells


def default_slot_bank() -> ExemplarBank:
    return ExemplarBank.from_file(Path(__file__).parent / "data" / "banks" / "slot_filler.json")


def batch_generate(
    generator: Backend,
    bank: ExemplarBank,
    variants_per_cell: int,
    stats: Sequence[str] = STAT_TYPES,
    bands: Sequence[str] = BANDS,
    few_shot_k: int = 20,
    params: DecodingParams = DecodingParams(temperature=1.0, top_k=50, max_tokens=80),
    seed: int = 0,
    max_regenerations: int = 5,
) -> BatchReport:
    """Generate ``variants_per_cell`` templates for every (stat, band) cell.

    Malformed outputs (unknown placeholder, missing stop sequence) are
    rejected and regenerated with a bumped seed; a cell that exhausts its
    budget is marked degraded and the batch keeps going.
    """
    report = BatchReport()
    templates = builtin_templates()
    for stat in stats:
        for band_label in bands:
            produced: list[SlotTemplate] = []
            for variant in range(variants_per_cell):
                template = _generate_one(
                    generator, bank, templates, stat, band_label, variant,
                    few_shot_k, params, seed, max_regenerations, report,
                )
                if template is None:
                    report.degraded_cells.append((stat, band_label))
                    produced = []
                    break
                produced.append(template)
            report.templates.extend(produced)
    return report


def _generate_one(
    generator, bank, templates, stat, band_label, variant,
    few_shot_k, params, seed, max_regenerations, report,
) -> Optional[SlotTemplate]:
    draft = PromptDraft(
        instruction=(
            f"Create a fill-in-the-blank sentence about {stat.replace('_', ' ')} "
            f"for a player in the {band_label} percentile band."
        ),
        input_tuple={"stat_type": stat, "band": band_label, "variant": variant},
        desired_scene="slot_filler",
    )
    for attempt in range(max_regenerations + 1):
        attempt_seed = (seed << 8) ^ fnv1a64(f"{stat}|{band_label}|{variant}|{attempt}") & 0xFFFF
        prompt = build_prompt(
            draft,
            draft.input_tuple,
            templates,
            bank=bank,
            few_shot_k=few_shot_k,
            seed=attempt_seed,
        )
        report.attempts += 1
        raw = generator.generate(prompt, DecodingParams(
            temperature=params.temperature, top_k=params.top_k, top_p=params.top_p,
            beams=params.beams, max_tokens=params.max_tokens, seed=attempt_seed,
        ))
        if STOP_SEQUENCE not in raw:
            continue
        text = strip_stop(raw)
        try:
            return SlotTemplate(stat_type=stat, band=band_label, text=text)
        except ValidationError:
            continue
    return None


# --- artifact export ------------------------------------------------------------------


def artifact_key(stat: str) -> str:
    return f"slots/{stat}.json"


@dataclass
class ExportReport:
    written: list[str] = field(default_factory=list)
    purged: list[str] = field(default_factory=list)
    reused_cells: list[tuple[str, str]] = field(default_factory=list)


def export_artifacts(
    templates: Sequence[SlotTemplate],
    store: FileStore,
    cdn: CdnCache,
    stats: Sequence[str] = STAT_TYPES,
) -> ExportReport:
    """One versioned JSON artifact per statistic, keyed by band; only keys
    whose bytes changed are purged. Cells absent from this batch (degraded)
    keep their previously exported sentences."""
    report = ExportReport()
    by_cell: dict[tuple[str, str], list[str]] = {}
    for template in templates:
        by_cell.setdefault((template.stat_type, template.band), []).append(template.text)

    for stat in stats:
        key = artifact_key(stat)
        previous: dict[str, Any] = {}
        if store.exists("object", key):
            previous = json.loads(store.get_object(key))
        bands_doc: dict[str, list[str]] = {}
        for band_label in BANDS:
            cell = by_cell.get((stat, band_label))
            if cell:
                bands_doc[band_label] = cell
            elif previous.get("bands", {}).get(band_label):
                bands_doc[band_label] = previous["bands"][band_label]
                report.reused_cells.append((stat, band_label))
        doc = {"stat_type": stat, "bands": bands_doc}
        data = json.dumps(doc, sort_keys=True).encode("utf-8")
        if store.etag("object", key) == fnv1a64_hex(data):
            continue
        store.put("object", key, data)
        report.written.append(key)
        if cdn.purge([key]):
            report.purged.append(key)
    return report


def load_artifacts(cdn: CdnCache, stats: Sequence[str] = STAT_TYPES) -> dict[str, dict]:
    artifacts = {}
    for stat in stats:
        artifacts[stat] = json.loads(cdn.fetch(artifact_key(stat)))
    return artifacts


# --- the online fill path ------------------------------------------------------------


@dataclass(frozen=True)
class FillResult:
    sentences: tuple[str, ...]
    diagnostics: tuple[str, ...] = ()


def _fill_values(
    payload: UserPayload, player: str, entry: RationaleEntry, week: int
) -> dict[str, Any]:
    values: dict[str, Any] = {}
    roster_entry = payload.roster_entry(player) or {}
    parts = player.split()
    values["first_name"] = parts[0] if parts else player
    values["last_name"] = parts[-1] if parts else player
    if roster_entry.get("position"):
        values["position"] = roster_entry["position"]
    if roster_entry.get("opponent"):
        values["opponent"] = roster_entry["opponent"]
    if roster_entry.get("team"):
        values["team_name"] = roster_entry["team"]
    values["week"] = week
    values["percentile"] = entry.percentile
    values.update(entry.values)
    return values


def personalize(
    payload: UserPayload,
    player: str,
    rationale: Sequence[RationaleEntry],
    artifacts: Mapping[str, Mapping[str, Any]],
    user_id: str = "",
    week: int = 1,
) -> FillResult:
    """Fill slot templates for each grade-rationale entry.

    Pure given artifacts and payload: template variant choice is a hash of
    (user, player, week, stat). Entries whose values cannot fill every
    placeholder are skipped with a diagnostic; returned sentences never
    contain an unresolved slot.
    """
    sentences: list[str] = []
    diagnostics: list[str] = []
    for entry in rationale:
        artifact = artifacts.get(entry.stat_type)
        if artifact is None:
            diagnostics.append(f"{entry.stat_type}: no artifact")
            continue
        try:
            cell = artifact["bands"].get(band(entry.percentile), [])
        except ValidationError as exc:
            diagnostics.append(f"{entry.stat_type}: {exc}")
            continue
        if not cell:
            diagnostics.append(f"{entry.stat_type}: band {band(entry.percentile)} empty")
            continue
        choice = fnv1a64(f"{user_id}|{player}|{week}|{entry.stat_type}") % len(cell)
        template_text = cell[choice]
        values = _fill_values(payload, player, entry, week)
        needed = extract_placeholders(template_text)
        missing = [name for name in needed if name not in values]
        if missing:
            diagnostics.append(f"{entry.stat_type}: missing values for {missing}")
            continue
        sentence = template_text
        for name in needed:
            sentence = sentence.replace("{" + name + "}", str(values[name]))
        if _PLACEHOLDER.search(sentence):
            diagnostics.append(f"{entry.stat_type}: unresolved slot survived fill")
            continue
        sentences.append(sentence)
    return FillResult(tuple(sentences), tuple(diagnostics))
