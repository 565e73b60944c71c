"""Mock determinism, corruption statistics, remote client, capacity math."""

from __future__ import annotations

import httpx
import pytest
from scipy import stats

from eventscribe.generation import (
    DecodingParams,
    MockBackend,
    PermanentGenerationError,
    PRESETS,
    RemoteBackend,
    RetryableGenerationError,
    estimate_capacity,
    strip_stop,
)
from eventscribe.model import ValidationError
from eventscribe.prompts import STOP_SEQUENCE, build_prompt, builtin_templates


def golf_prompt(hole=9, lie="Pine Straw", player="Jon Rahm", strokes=2):
    from eventscribe.model import PromptDraft

    draft = PromptDraft(
        instruction="Write one sentence of factual golf commentary.",
        input_tuple={},
        desired_scene="shot",
    )
    return build_prompt(
        draft,
        {"player": player, "hole": hole, "lie": lie, "strokes": strokes},
        builtin_templates(),
    )


class TestDecodingParams:
    def test_presets_match_operating_points(self):
        assert 0 <= PRESETS["golf"].temperature <= 0.2
        assert PRESETS["golf"].top_k == 10
        assert PRESETS["golf"].top_p == 1.0
        assert PRESETS["tennis"].temperature == 1.0
        assert PRESETS["tennis"].beams == 5
        assert PRESETS["football"].temperature == 1.0
        assert PRESETS["football"].top_k == 50
        assert PRESETS["music"].temperature == pytest.approx(0.85)
        assert PRESETS["music"].top_k == 100

    def test_validation(self):
        with pytest.raises(ValidationError):
            DecodingParams(temperature=-0.1)
        with pytest.raises(ValidationError):
            DecodingParams(top_p=0.0)
        with pytest.raises(ValidationError):
            DecodingParams(top_p=1.5)


class TestMockBackend:
    def test_temp_zero_contains_tuple_facts(self):
        mock = MockBackend()
        text = mock.generate(golf_prompt(), DecodingParams(temperature=0.0, seed=7))
        assert "hole 9" in text
        assert "Pine Straw" in text
        assert text.endswith(STOP_SEQUENCE.strip()) or STOP_SEQUENCE in text

    def test_same_seed_identical(self):
        mock = MockBackend()
        params = DecodingParams(temperature=1.0, seed=123)
        assert mock.generate(golf_prompt(), params) == mock.generate(golf_prompt(), params)

    def test_different_seed_can_vary(self):
        mock = MockBackend()
        outputs = {
            mock.generate(golf_prompt(), DecodingParams(temperature=1.0, seed=s))
            for s in range(12)
        }
        assert len(outputs) > 1

    def test_temp_zero_is_pure_function(self):
        a = MockBackend().generate(golf_prompt(), DecodingParams(temperature=0.0, seed=1))
        b = MockBackend().generate(golf_prompt(), DecodingParams(temperature=0.0, seed=1))
        assert a == b

    def test_max_tokens_bound(self):
        mock = MockBackend()
        for max_tokens in (1, 3, 8):
            text = mock.generate(golf_prompt(), DecodingParams(max_tokens=max_tokens))
            assert len(text.split()) <= max_tokens

    def test_corruption_rate_binomial(self):
        # 10,000 distinct prompts at rate 0.2: fraction within 0.2 +/- 0.01
        # and a two-sided binomial test at alpha 0.001 must not reject.
        mock = MockBackend(corruption_rate=0.2)
        params = DecodingParams(temperature=0.0, seed=0)
        n = 10_000
        for i in range(n):
            mock.generate(golf_prompt(hole=1 + i % 18, strokes=1 + i % 9, player=f"P{i}"), params)
        corrupted = len(mock.injections)
        assert abs(corrupted / n - 0.2) <= 0.01
        assert stats.binomtest(corrupted, n, 0.2).pvalue > 0.001

    def test_corruption_changes_exactly_one_token(self):
        mock = MockBackend(corruption_rate=1.0, roster_names=("Jon Rahm", "Ana Soto"))
        params = DecodingParams(temperature=0.0, seed=5)
        text = mock.generate(golf_prompt(), params)
        clean = MockBackend().generate(golf_prompt(), params)
        assert text != clean
        injection = mock.injections[-1]
        assert injection.original != injection.corrupted
        assert injection.corrupted in text
        if injection.kind == "number":
            assert injection.original in clean

    def test_slot_scene_keeps_placeholders_literal(self):
        from eventscribe.model import PromptDraft

        draft = PromptDraft(instruction="Make a slot sentence.", desired_scene="slot_filler")
        prompt = build_prompt(
            draft,
            {"stat_type": "projected_points", "band": "outstanding"},
            builtin_templates(),
        )
        text = mock_text = MockBackend().generate(prompt, DecodingParams())
        assert "{last_name}" in mock_text
        assert "{projection_points}" in mock_text
        assert "an outstanding" in text
        assert STOP_SEQUENCE in text

    def test_unknown_scene_rejected(self):
        from eventscribe.model import HAP_CLAUSE, EngineeredPrompt

        prompt = EngineeredPrompt(
            preamble=HAP_CLAUSE, instruction="x", rendered="text", scene_type="mystery"
        )
        with pytest.raises(PermanentGenerationError):
            MockBackend().generate(prompt, DecodingParams())


class TestStripStop:
    def test_strips_trailing_stop(self):
        assert strip_stop("sentence." + STOP_SEQUENCE) == "sentence."

    def test_cuts_at_first_stop(self):
        assert strip_stop("a." + STOP_SEQUENCE + " trailing") == "a."

    def test_no_stop_passthrough(self):
        assert strip_stop("plain text ") == "plain text"


class TestRemoteBackend:
    def _backend(self, handler, retry_backoff=0.0):
        transport = httpx.MockTransport(handler)
        client = httpx.Client(transport=transport)
        return RemoteBackend("http://inference.local/generate", client=client, retry_backoff=retry_backoff)

    def test_posts_params_and_returns_text(self):
        import json

        seen = {}

        def handler(request):
            seen["body"] = json.loads(request.content)
            return httpx.Response(200, json={"text": "remote sentence"})

        backend = self._backend(handler)
        params = DecodingParams(temperature=0.4, top_k=25, top_p=0.9, beams=2, max_tokens=44, seed=3)
        out = backend.generate(golf_prompt(), params)
        assert out == "remote sentence"
        assert seen["body"]["temperature"] == 0.4
        assert seen["body"]["top_k"] == 25
        assert seen["body"]["beams"] == 2
        assert seen["body"]["stop"] == STOP_SEQUENCE

    def test_5xx_retried_once_then_succeeds(self):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(503)
            return httpx.Response(200, json={"text": "ok"})

        assert self._backend(handler).generate(golf_prompt(), DecodingParams()) == "ok"
        assert calls["n"] == 2

    def test_persistent_5xx_raises_retryable(self):
        backend = self._backend(lambda request: httpx.Response(500))
        with pytest.raises(RetryableGenerationError):
            backend.generate(golf_prompt(), DecodingParams())

    def test_budget_exceeded_is_permanent(self):
        backend = self._backend(lambda request: httpx.Response(429))
        with pytest.raises(PermanentGenerationError):
            backend.generate(golf_prompt(), DecodingParams())


class TestCapacity:
    def test_published_scale_figure(self):
        # 30,000 rps at a 27.8 ms per-call budget with single-call workers
        assert estimate_capacity(30_000, 0.0278, 1) == 834

    def test_zero_target(self):
        assert estimate_capacity(0, 1.0, 10) == 0

    def test_plain_arithmetic(self):
        assert estimate_capacity(100, 1.0, 10) == 10

    def test_ceiling(self):
        assert estimate_capacity(10, 0.35, 1) == 4

    def test_invalid_inputs(self):
        with pytest.raises(ValidationError):
            estimate_capacity(10, 0, 1)
        with pytest.raises(ValidationError):
            estimate_capacity(-1, 1, 1)
