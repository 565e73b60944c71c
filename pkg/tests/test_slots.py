"""Band mapping, batch integrity, artifact export/diff, online fill purity."""

from __future__ import annotations

import random

import pytest

from eventscribe.generation import MockBackend
from eventscribe.model import ValidationError
from eventscribe.prompts import STOP_SEQUENCE
from eventscribe.slots import (
    BANDS,
    PLACEHOLDER_VOCAB,
    RationaleEntry,
    STAT_TYPES,
    SlotTemplate,
    UserPayload,
    artifact_key,
    band,
    batch_generate,
    default_slot_bank,
    export_artifacts,
    extract_placeholders,
    load_artifacts,
    personalize,
)
from eventscribe.store import CdnCache, FileStore


class TestBand:
    def test_published_exemplar_percentile(self):
        assert band(82) == "outstanding"

    def test_zero_is_poor(self):
        assert band(0) == "poor"

    def test_hundred_is_outstanding(self):
        assert band(100) == "outstanding"

    def test_interval_membership_oracle(self):
        intervals = {
            "poor": (0, 20),
            "below-average": (20, 40),
            "average": (40, 60),
            "strong": (60, 80),
            "outstanding": (80, 100.0001),
        }
        rng = random.Random(12)
        for _ in range(100):
            p = rng.uniform(0, 100)
            expected = next(
                label for label, (lo, hi) in intervals.items() if lo <= p < hi
            )
            assert band(p) == expected, p

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            band(-1)
        with pytest.raises(ValidationError):
            band(101)


class TestSlotTemplate:
    def test_thirteen_stats_five_bands(self):
        assert len(STAT_TYPES) == 13
        assert len(BANDS) == 5

    def test_placeholder_vocabulary_enforced(self):
        with pytest.raises(ValidationError):
            SlotTemplate("targets", "average", "{made_up_slot} gains")

    def test_stop_sequence_forbidden_in_text(self):
        with pytest.raises(ValidationError):
            SlotTemplate("targets", "average", "{last_name} gains" + STOP_SEQUENCE)

    def test_placeholders_derived(self):
        t = SlotTemplate("targets", "average", "{last_name} sees {stat_value} looks")
        assert t.placeholders == {"last_name", "stat_value"}


class TestBatchGenerate:
    def test_variants_two_yields_130(self):
        report = batch_generate(MockBackend(), default_slot_bank(), variants_per_cell=2)
        assert len(report.templates) == 13 * 5 * 2
        assert report.complete

    def test_rejected_outputs_regenerated_to_exact_count(self):
        # injection oracle: first call per cell emits an unknown placeholder,
        # later calls are clean; every cell must still fill.
        class FlakyMock(MockBackend):
            def __init__(self):
                super().__init__()
                self.bad_served: set[tuple[str, str]] = set()

            def generate(self, prompt, params):
                cell = (prompt.input_data.get("stat_type"), prompt.input_data.get("band"))
                if cell not in self.bad_served:
                    self.bad_served.add(cell)
                    return "{bogus_slot} text" + STOP_SEQUENCE
                return super().generate(prompt, params)

        report = batch_generate(FlakyMock(), default_slot_bank(), variants_per_cell=1)
        assert len(report.templates) == 13 * 5
        assert report.complete
        assert report.attempts == 13 * 5 + 65  # one rejection per cell

    def test_exhausted_cell_degrades_but_batch_continues(self):
        class OneBadCell(MockBackend):
            def generate(self, prompt, params):
                if (
                    prompt.input_data.get("stat_type") == "targets"
                    and prompt.input_data.get("band") == "average"
                ):
                    return "{bogus_slot}" + STOP_SEQUENCE
                return super().generate(prompt, params)

        report = batch_generate(OneBadCell(), default_slot_bank(), variants_per_cell=1, max_regenerations=2)
        assert ("targets", "average") in report.degraded_cells
        assert len(report.templates) == 13 * 5 - 1

    def test_production_scale_factorization(self):
        # 13 stats x 5 bands x 21 variants lands within one batch of the
        # deployed 1350-sentence scale.
        assert 13 * 5 * 21 == 1365
        report = batch_generate(
            MockBackend(), default_slot_bank(), variants_per_cell=3,
            stats=STAT_TYPES[:2], bands=BANDS[:2],
        )
        assert len(report.templates) == 2 * 2 * 3


@pytest.fixture
def stores(tmp_path):
    store = FileStore(tmp_path / "store")
    return store, CdnCache(store)


class TestExport:
    def test_thirteen_artifacts(self, stores):
        store, cdn = stores
        report_batch = batch_generate(MockBackend(), default_slot_bank(), variants_per_cell=1)
        report = export_artifacts(report_batch.templates, store, cdn)
        assert len(report.written) == 13
        for stat in STAT_TYPES:
            assert store.exists("object", artifact_key(stat))

    def test_unchanged_batch_zero_purges(self, stores):
        store, cdn = stores
        batch = batch_generate(MockBackend(), default_slot_bank(), variants_per_cell=1)
        export_artifacts(batch.templates, store, cdn)
        for stat in STAT_TYPES:
            cdn.fetch(artifact_key(stat))
        again = export_artifacts(batch.templates, store, cdn)
        assert again.written == []
        assert again.purged == []

    def test_one_changed_cell_purges_exactly_one(self, stores):
        store, cdn = stores
        batch = batch_generate(MockBackend(), default_slot_bank(), variants_per_cell=1)
        export_artifacts(batch.templates, store, cdn)
        for stat in STAT_TYPES:
            cdn.fetch(artifact_key(stat))
        changed = [
            SlotTemplate(t.stat_type, t.band, t.text + " Updated.")
            if (t.stat_type, t.band) == ("targets", "poor")
            else t
            for t in batch.templates
        ]
        report = export_artifacts(changed, store, cdn)
        assert report.written == [artifact_key("targets")]
        assert report.purged == [artifact_key("targets")]

    def test_degraded_cell_keeps_prior_version(self, stores):
        store, cdn = stores
        batch = batch_generate(MockBackend(), default_slot_bank(), variants_per_cell=1)
        export_artifacts(batch.templates, store, cdn)
        partial = [t for t in batch.templates if (t.stat_type, t.band) != ("targets", "poor")]
        report = export_artifacts(partial, store, cdn)
        assert ("targets", "poor") in report.reused_cells
        artifacts = load_artifacts(cdn)
        assert artifacts["targets"]["bands"]["poor"]


def sample_payload():
    return UserPayload(
        roster=(
            {"name": "Last Name", "position": "Running Back", "opponent": "Atlanta Falcons", "team": "My Team"},
            {"name": "Other Guy", "position": "Kicker", "opponent": "Boston Brawl", "team": "My Team"},
        ),
        league_rules={"scoring": "ppr"},
        team_weaknesses={"position": "Running Back"},
        player_stats={"Last Name": {"projected_points": {"percentile": 82, "value": 15.55}}},
    )


class TestPersonalize:
    def _artifacts(self, stores):
        store, cdn = stores
        batch = batch_generate(MockBackend(), default_slot_bank(), variants_per_cell=2)
        export_artifacts(batch.templates, store, cdn)
        return load_artifacts(cdn)

    def test_published_exemplar_values_fill(self, stores):
        artifacts = self._artifacts(stores)
        result = personalize(
            sample_payload(),
            "Last Name",
            [RationaleEntry("projected_points", 82, {"projection_points": 15.55, "opponent": "Atlanta Falcons"})],
            artifacts,
            user_id="u1",
            week=9,
        )
        assert len(result.sentences) == 1
        sentence = result.sentences[0]
        assert "15.55" in sentence
        assert "Atlanta Falcons" in sentence
        assert "outstanding" in sentence
        assert "{" not in sentence

    def test_empty_rationale_empty_result(self, stores):
        artifacts = self._artifacts(stores)
        assert personalize(sample_payload(), "Last Name", [], artifacts).sentences == ()

    def test_missing_value_skips_with_diagnostic(self, stores):
        artifacts = self._artifacts(stores)
        result = personalize(
            sample_payload(),
            "Unknown Player",
            [RationaleEntry("matchup_rating", 50, {})],
            artifacts,
        )
        assert result.sentences == ()
        assert result.diagnostics

    def test_thousand_random_payloads_no_unresolved_slots(self, stores):
        import re

        artifacts = self._artifacts(stores)
        rng = random.Random(77)
        pattern = re.compile(r"\{[A-Za-z_ ]+\}")
        payload = sample_payload()
        for i in range(1000):
            entries = [
                RationaleEntry(
                    rng.choice(STAT_TYPES),
                    rng.uniform(0, 100),
                    {"stat_value": round(rng.uniform(0, 30), 2),
                     "projection_points": round(rng.uniform(0, 30), 2),
                     "opponent": "Atlanta Falcons"},
                )
                for _ in range(rng.randrange(1, 5))
            ]
            result = personalize(payload, "Last Name", entries, artifacts, user_id=f"u{i}", week=i % 18)
            for sentence in result.sentences:
                assert not pattern.search(sentence), sentence

    def test_variant_choice_deterministic_per_user_player_week(self, stores):
        artifacts = self._artifacts(stores)
        entry = [RationaleEntry("projected_points", 82, {"projection_points": 1.0, "opponent": "X"})]
        a = personalize(sample_payload(), "Last Name", entry, artifacts, "user-a", 3)
        b = personalize(sample_payload(), "Last Name", entry, artifacts, "user-a", 3)
        assert a == b

    def test_placeholder_vocab_is_closed(self):
        assert extract_placeholders("{last_name} and {week}") <= PLACEHOLDER_VOCAB
