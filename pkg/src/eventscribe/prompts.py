"""Few-shot blocks, context blocks, and fully engineered prompts.

``build_prompt`` composes the scene's template with the instruction, an
optional few-shot example block, optional retrieved context, and avoid-topic
guards. Every preamble carries the content prohibition clause, and a
pronoun-class instruction is inserted when the subject's record specifies
one. All composition is deterministic: identical inputs produce the same
rendered bytes.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from .model import EngineeredPrompt, HAP_CLAUSE, PersonRecord, PromptDraft, PronounClass
from .retrieval import Passage
from .templating import Template, render

#: Exemplar outputs end here; generation stops when it reappears.
STOP_SEQUENCE = "\n\nDone"

DEFAULT_PREAMBLE = (
    "You write short, factual, broadcast-ready text for live events. " + HAP_CLAUSE
)

PRONOUN_INSTRUCTION = {
    PronounClass.FEMININE: "Use feminine pronouns.",
    PronounClass.MASCULINE: "Use masculine pronouns.",
    PronounClass.NEUTRAL: "Use neutral pronouns.",
}

_SUBJECT_PRONOUN = {
    PronounClass.FEMININE: "she",
    PronounClass.MASCULINE: "he",
    PronounClass.NEUTRAL: "they",
}


class UnregisteredSceneError(KeyError):
    pass


@dataclass(frozen=True)
class ExemplarBank:
    """Curated input/output pairs for one scene plus style notes."""

    scene_type: str
    examples: tuple[tuple[str, str], ...]
    style: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "examples", tuple((str(a), str(b)) for a, b in self.examples)
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ExemplarBank":
        doc = json.loads(Path(path).read_text("utf-8"))
        return cls(
            scene_type=doc["scene_type"],
            examples=tuple((e[0], e[1]) for e in doc["examples"]),
            style=doc.get("style", ""),
        )


def select_examples(bank: ExemplarBank, k: int, seed: int = 0) -> list[tuple[str, str]]:
    """First k examples under a seeded shuffle; stable across runs."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > len(bank.examples):
        raise ValueError(f"requested {k} examples but bank holds {len(bank.examples)}")
    order = list(bank.examples)
    random.Random(seed).shuffle(order)
    return order[:k]


def assemble_few_shot(instruction: str, bank: ExemplarBank, k: int, seed: int = 0) -> str:
    """Instruction line followed by k input/output exemplar pairs, each
    output terminated by the stop sequence."""
    chosen = select_examples(bank, k, seed)
    lines = [f"instruction: {instruction}"]
    if chosen:
        lines.append("examples:")
        for example_in, example_out in chosen:
            lines.append(f"input: {example_in}")
            lines.append(f"output: {example_out}{STOP_SEQUENCE}")
    return "\n".join(lines)


# --- scene input formatting -------------------------------------------------

InputFormatter = Callable[[Mapping[str, Any], PromptDraft, Optional[PersonRecord]], str]


def _compact_json(data: Mapping[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(", ", ": "))


def _golf_shot_input(data, draft, person) -> str:
    pron = _SUBJECT_PRONOUN[person.pronoun_class] if person else "they"
    return (
        f"Golf {data['player']} is playing on hole {data['hole']} "
        f"AND {pron} is hitting from the {data['lie']}"
    )


def _tennis_match_start_input(data, draft, person) -> str:
    return f"Tennis {data['player_one']} will play against {data['player_two']}"


def _tennis_set_end_input(data, draft, person) -> str:
    games_a, games_b = data["set_score"]
    return (
        f"Tennis {data['player_one']} won set {data.get('set', 1)} against "
        f"{data['player_two']} {games_a}-{games_b}"
    )


def _instruction_input(data, draft, person) -> str:
    # Open-ended scenes carry their request in the instruction itself.
    return draft.instruction


INPUT_FORMATTERS: dict[str, InputFormatter] = {
    "shot": _golf_shot_input,
    "match_start": _tennis_match_start_input,
    "set_end": _tennis_set_end_input,
    "artist_story": _instruction_input,
}


def format_input(
    scene_type: str,
    data: Mapping[str, Any],
    draft: PromptDraft,
    person: Optional[PersonRecord],
) -> str:
    formatter = INPUT_FORMATTERS.get(scene_type)
    if formatter is None:
        return _compact_json(dict(data))
    return formatter(data, draft, person)


# --- prompt composition ---------------------------------------------------------


def build_prompt(
    draft: PromptDraft,
    clean_data: Mapping[str, Any],
    templates: Mapping[str, Template],
    *,
    bank: Optional[ExemplarBank] = None,
    few_shot_k: int = 20,
    context: Sequence[Passage] = (),
    avoid_topics: Sequence[str] = (),
    preamble: str = DEFAULT_PREAMBLE,
    person: Optional[PersonRecord] = None,
    seed: int = 0,
) -> EngineeredPrompt:
    """Compose the engineered prompt for a scene.

    Raises ``UnregisteredSceneError`` when the draft's scene has no template;
    render errors from unresolved variables propagate.
    """
    template = templates.get(draft.desired_scene)
    if template is None:
        raise UnregisteredSceneError(draft.desired_scene)

    if HAP_CLAUSE not in preamble:
        preamble = f"{preamble.rstrip()} {HAP_CLAUSE}"

    instruction = draft.instruction
    if person is not None:
        instruction = f"{instruction} {PRONOUN_INSTRUCTION[person.pronoun_class]}"

    pairs: list[tuple[str, str]] = []
    examples_block = ""
    if bank is not None:
        pairs = select_examples(bank, few_shot_k, seed)
        examples_block = assemble_few_shot(instruction, bank, few_shot_k, seed)

    passages = list(context)
    bindings: dict[str, Any] = {
        "instruction_prefix": "instruction:",
        "instruction": instruction,
        "input_prefix": "input:",
        "input": format_input(draft.desired_scene, clean_data, draft, person),
        "examples": examples_block,
        "context_prefix": "context:" if passages else "",
        "context": " ".join(p.text for p in passages),
        "avoid_topic_prefix": "avoid topic:" if avoid_topics else "",
        "avoid_topic": ", ".join(avoid_topics),
        "output_prefix": "output:",
    }
    rendered = preamble + "\n\n" + render(template, bindings)

    return EngineeredPrompt(
        preamble=preamble,
        instruction=instruction,
        few_shot=tuple(pairs),
        context_passages=tuple(p.text for p in passages),
        avoid_topics=tuple(avoid_topics),
        rendered=rendered,
        scene_type=draft.desired_scene,
        input_data=dict(clean_data),
    )


@lru_cache(maxsize=1)
def _builtin_templates_cached() -> dict[str, Template]:
    from .templating import load_template

    template_dir = Path(__file__).parent / "data" / "templates"
    mapping = {
        "shot": "golf_shot",
        "match_start": "tennis_match_start",
        "set_end": "tennis_set_end",
        "grade_rationale": "football_grade_rationale",
        "slot_filler": "football_slot_filler",
        "artist_story": "music_artist_story",
    }
    return {
        scene: load_template(template_dir / f"{stem}.tpl")
        for scene, stem in mapping.items()
    }


def builtin_templates() -> dict[str, Template]:
    """Scene templates shipped with the package, keyed by scene type."""
    return dict(_builtin_templates_cached())
