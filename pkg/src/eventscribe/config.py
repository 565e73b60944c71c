"""Declarative pipeline configuration.

One YAML file wires the whole dataflow: topic layout, the scene registry
(template, exemplar bank, decoding preset, screening policy, review gate),
feed sources, store paths, scheduler intervals, and replay pacing. Loading
validates every scene reference and reports all problems at once rather
than failing on the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .generation import PRESETS
from .model import Property
from .postprocess import ScreeningPolicy
from .prompts import ExemplarBank, builtin_templates
from .templating import Template, load_template


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid pipeline config:\n  - " + "\n  - ".join(problems))
        self.problems = problems


#: Scenes the deployment gated behind human review: tennis and music content
#: is checked by editors before publication, golf and football publish
#: straight through.
DEFAULT_REVIEW_REQUIRED = {
    Property.GOLF: False,
    Property.TENNIS: True,
    Property.FOOTBALL: False,
    Property.MUSIC: True,
}

#: Which payload field names the person the content is about.
DEFAULT_SUBJECT_FIELD = {
    Property.GOLF: "player",
    Property.TENNIS: "player_one",
    Property.FOOTBALL: "player",
    Property.MUSIC: "artist",
}


@dataclass(frozen=True)
class SceneConfig:
    property: Property
    scene_type: str
    instruction: str
    template: str = ""  # empty -> builtin template for the scene type
    preset: str = ""  # empty -> property name
    bank: str = ""  # path to an exemplar bank JSON
    few_shot_k: int = 0
    use_context: bool = False
    context_k: int = 3
    review_required: Optional[bool] = None
    subject_field: str = ""
    avoid_topics: tuple[str, ...] = ()
    char_limit: Optional[int] = None
    instructions_by_kind: Mapping[str, str] = field(default_factory=dict)

    def preset_name(self) -> str:
        return self.preset or self.property.value

    def reviewed(self) -> bool:
        if self.review_required is None:
            return DEFAULT_REVIEW_REQUIRED[self.property]
        return self.review_required

    def subject(self) -> str:
        return self.subject_field or DEFAULT_SUBJECT_FIELD[self.property]

    def policy(self, max_regenerations: int) -> ScreeningPolicy:
        return ScreeningPolicy(
            avoid_topics=self.avoid_topics,
            char_limit=self.char_limit,
            max_regenerations=max_regenerations,
        )

    def instruction_for(self, payload: Mapping[str, Any]) -> str:
        kind = payload.get("kind")
        if kind and kind in self.instructions_by_kind:
            return self.instructions_by_kind[kind]
        return self.instruction


@dataclass
class PipelineConfig:
    topic: str = "events"
    partition_count: int = 4
    fast_track_partitions: tuple[int, ...] = ()
    requeue_delay: float = 5.0
    requeue_cap: int = 10
    max_regenerations: int = 2
    service_time: float = 0.01
    replay_speed: float = 1.0
    store_root: str = "var/store"
    feeds_path: str = ""
    feeds_url: str = ""
    corpus_path: str = ""
    slot_variants_per_cell: int = 2
    slot_interval_seconds: float = 3600.0
    scenes: dict[tuple[Property, str], SceneConfig] = field(default_factory=dict)

    def scene(self, prop: Property, scene_type: str) -> Optional[SceneConfig]:
        return self.scenes.get((prop, scene_type))


def default_scenes() -> dict[tuple[Property, str], SceneConfig]:
    """The four properties' shipped scenes with their decoding presets."""
    scenes = [
        SceneConfig(
            property=Property.GOLF,
            scene_type="shot",
            instruction="Write one sentence of factual golf commentary about the shot.",
        ),
        SceneConfig(
            property=Property.TENNIS,
            scene_type="match_start",
            instruction="Write colorful commentary for the start of the match.",
        ),
        SceneConfig(
            property=Property.TENNIS,
            scene_type="set_end",
            instruction="Write colorful commentary about the finished set.",
        ),
        SceneConfig(
            property=Property.FOOTBALL,
            scene_type="grade_rationale",
            instruction="Create a bullet point about next game projection.",
        ),
        SceneConfig(
            property=Property.FOOTBALL,
            scene_type="slot_filler",
            instruction="Create a fill-in-the-blank sentence for the statistic.",
        ),
        SceneConfig(
            property=Property.MUSIC,
            scene_type="artist_story",
            instruction=(
                "Write 3 summary sentences separated by a * about {artist} without "
                "any numbers or stats and a strict 150 character limit. "
                "Do not repeat the instruction."
            ),
            use_context=True,
            char_limit=150,
            instructions_by_kind={
                "headline": "Write a one-line headline about {artist}.",
                "bullets": (
                    "Write 3 bullet points separated by a * about {artist} with a "
                    "strict 150 character limit."
                ),
                "witty": "Write one witty sentence about {artist}.",
                "summary": (
                    "Write 3 summary sentences separated by a * about {artist} without "
                    "any numbers or stats and a strict 150 character limit. "
                    "Do not repeat the instruction."
                ),
            },
        ),
    ]
    return {(s.property, s.scene_type): s for s in scenes}


def _scene_from_doc(doc: Mapping[str, Any]) -> SceneConfig:
    return SceneConfig(
        property=Property(doc["property"]),
        scene_type=doc["scene_type"],
        instruction=doc["instruction"],
        template=doc.get("template", ""),
        preset=doc.get("preset", ""),
        bank=doc.get("bank", ""),
        few_shot_k=int(doc.get("few_shot_k", 0)),
        use_context=bool(doc.get("use_context", False)),
        context_k=int(doc.get("context_k", 3)),
        review_required=doc.get("review_required"),
        subject_field=doc.get("subject_field", ""),
        avoid_topics=tuple(doc.get("avoid_topics", ())),
        char_limit=doc.get("char_limit"),
        instructions_by_kind=dict(doc.get("instructions_by_kind", {})),
    )


def load_config(path: str | Path) -> PipelineConfig:
    doc = yaml.safe_load(Path(path).read_text("utf-8")) or {}
    config = PipelineConfig(
        topic=doc.get("topic", "events"),
        partition_count=int(doc.get("partition_count", 4)),
        fast_track_partitions=tuple(doc.get("fast_track_partitions", ())),
        requeue_delay=float(doc.get("requeue_delay", 5.0)),
        requeue_cap=int(doc.get("requeue_cap", 10)),
        max_regenerations=int(doc.get("max_regenerations", 2)),
        service_time=float(doc.get("service_time", 0.01)),
        replay_speed=float(doc.get("replay_speed", 1.0)),
        store_root=doc.get("store_root", "var/store"),
        feeds_path=doc.get("feeds_path", ""),
        feeds_url=doc.get("feeds_url", ""),
        corpus_path=doc.get("corpus_path", ""),
        slot_variants_per_cell=int(doc.get("slot_variants_per_cell", 2)),
        slot_interval_seconds=float(doc.get("slot_interval_seconds", 3600.0)),
    )
    if doc.get("use_default_scenes", True):
        config.scenes.update(default_scenes())
    for scene_doc in doc.get("scenes", ()):
        scene = _scene_from_doc(scene_doc)
        config.scenes[(scene.property, scene.scene_type)] = scene
    validate_config(config, base_dir=Path(path).parent)
    return config


def validate_config(config: PipelineConfig, base_dir: Path = Path(".")) -> None:
    """Collect every broken scene reference before raising."""
    problems: list[str] = []
    builtin = builtin_templates()
    if config.partition_count < 1:
        problems.append("partition_count must be >= 1")
    for p in config.fast_track_partitions:
        if not 0 <= p < config.partition_count:
            problems.append(f"fast_track partition {p} outside 0..{config.partition_count - 1}")
    for (prop, scene_type), scene in config.scenes.items():
        label = f"{prop.value}/{scene_type}"
        if scene.template:
            if not (base_dir / scene.template).exists():
                problems.append(f"scene {label}: template file {scene.template!r} not found")
        elif scene_type not in builtin:
            problems.append(f"scene {label}: no builtin template for scene type")
        if scene.preset_name() not in PRESETS:
            problems.append(f"scene {label}: unknown decoding preset {scene.preset_name()!r}")
        if scene.bank and not (base_dir / scene.bank).exists():
            problems.append(f"scene {label}: exemplar bank {scene.bank!r} not found")
        if scene.few_shot_k and not scene.bank and scene_type != "slot_filler":
            problems.append(f"scene {label}: few_shot_k set without an exemplar bank")
    if config.feeds_path and config.feeds_url:
        problems.append("configure feeds_path or feeds_url, not both")
    if problems:
        raise ConfigError(problems)


def resolve_scene_assets(
    scene: SceneConfig, base_dir: Path
) -> tuple[Template, Optional[ExemplarBank]]:
    """Load the scene's template (file or builtin) and its exemplar bank."""
    if scene.template:
        template = load_template(base_dir / scene.template)
    else:
        template = builtin_templates()[scene.scene_type]
    bank = None
    if scene.bank:
        bank = ExemplarBank.from_file(base_dir / scene.bank)
    elif scene.scene_type == "slot_filler":
        from .slots import default_slot_bank

        bank = default_slot_bank()
    return template, bank
